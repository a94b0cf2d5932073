import os
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zerostats import dirichlet_ene as dn
from zerostats import zero_ingest as zi
from zerostats import zeta_engine as ze


def _cached(config, name, make):
    root = os.environ.get("ZEROSTATS_TEST_CACHE")
    d = Path(root) if root else Path(config.cache.makedir("zerostats"))
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{name}.zseq"
    timing = path.with_suffix(".seconds")
    if path.exists():
        try:
            seq = zi.read_cache(path)
            COMPUTE_SECONDS[name] = float(timing.read_text()) if timing.exists() else None
            return seq
        except zi.CacheError:
            path.unlink()
    t0 = time.perf_counter()
    seq = make()
    COMPUTE_SECONDS[name] = time.perf_counter() - t0
    zi.write_cache(seq, path)
    timing.write_text(repr(COMPUTE_SECONDS[name]))
    return seq


# wall time spent computing each cached sequence (None if unknown)
COMPUTE_SECONDS = {}


@pytest.fixture(scope="session")
def riemann_1e5(pytestconfig):
    return _cached(pytestconfig, "riemann-100000", lambda: ze.find_riemann_zeros(100_000))


@pytest.fixture(scope="session")
def chi3_1e4(pytestconfig):
    return _cached(pytestconfig, "chi3-10000", lambda: ze.find_dirichlet_zeros(dn.character(3, 2), 10_000))


@pytest.fixture(scope="session")
def chi7_pos_1e4(pytestconfig):
    return _cached(pytestconfig, "chi7.3-pos-10000", lambda: ze.find_dirichlet_zeros(dn.character(7, 3), 10_000))


# --- acceptance reporting ----------------------------------------------------------

def pytest_configure(config):
    config._acceptance = {}


class _Recorder:
    def __init__(self, store):
        self.store = store

    def __call__(self, criterion: int, ok, detail: str = ""):
        status = "SKIPPED" if ok is None else ("PASS" if ok else "FAIL")
        self.store.setdefault(criterion, []).append((status, detail))
        print(f"criterion {criterion:>2}: {status}  {detail}")
        return ok


@pytest.fixture(scope="session")
def acceptance(pytestconfig):
    return _Recorder(pytestconfig._acceptance)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(store):
        for status, detail in store[n]:
            terminalreporter.write_line(f"criterion {n:>2}: {status:<7} {detail}")
