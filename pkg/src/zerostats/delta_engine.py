"""Binned histograms of pairwise differences of sorted ordinate sequences.

For sequences A and B the histogram counts ordered pairs (a, b) with
0 < a - b < t_max in bins k = floor((a - b) / eps).  The pairs are never
materialized.  For each a the admissible b form a contiguous run of the
sorted B (found with two binary searches), and the sweep walks all such runs
lag by lag in vectorized blocks.  The total work is proportional to the
number of in-window pairs, as in a two-pointer scan.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .zeta_engine import ZeroSequence

MAX_BINS = 50_000_000
_BLOCK = 1 << 16


@dataclass(frozen=True)
class WindowParams:
    t_max: float
    bin_width: float
    include_bin_zero: bool = False

    def __post_init__(self):
        if not (self.t_max > 0 and self.bin_width > 0):
            raise ValueError("t_max and bin_width must be positive")
        if self.n_bins > MAX_BINS:
            raise ValueError(f"{self.n_bins} bins exceeds the cap of {MAX_BINS}")

    @property
    def n_bins(self) -> int:
        return n_bins(self.t_max, self.bin_width)


def n_bins(t_max: float, bin_width: float) -> int:
    n = math.ceil(t_max / bin_width)
    # guard against t_max / eps landing a hair above an integer (100 / 0.1 = 1000.0000000000001)
    if n > 1 and math.isclose((n - 1) * bin_width, t_max, rel_tol=1e-12):
        n -= 1
    return int(n)


@dataclass
class DeltaHistogram:
    bin_width: float
    t_max: float
    counts: np.ndarray
    n_source: int = 0
    max_ordinate: float = 0.0
    kind: str = "auto"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nb = n_bins(self.t_max, self.bin_width)
        if self.kind == "filtered":
            self.counts = np.asarray(self.counts, dtype=np.float64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.size and self.counts.min() < 0:
                raise ValueError("counts must be nonnegative")
        if self.counts.shape != (nb,):
            raise ValueError(f"expected {nb} bins, got shape {self.counts.shape}")
        if self.kind not in ("auto", "cross", "combined", "filtered"):
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def n_bins(self) -> int:
        return self.counts.size

    @property
    def bin_starts(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_width

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * self.bin_width

    @property
    def total(self):
        return self.counts.sum()

    def bin_of(self, delta: float) -> int:
        return int(math.floor(delta / self.bin_width))

    def window(self, lo: float, hi: float) -> slice:
        return slice(max(0, int(math.floor(lo / self.bin_width + 1e-9))),
                     min(self.n_bins, int(math.ceil(hi / self.bin_width - 1e-9))))

    def equals(self, other: "DeltaHistogram") -> bool:
        return (self.kind == other.kind and self.bin_width == other.bin_width and self.t_max == other.t_max
                and np.array_equal(self.counts, other.counts))


# ---------------------------------------------------------------------------
# kernel

def _as_array(seq) -> np.ndarray:
    if isinstance(seq, ZeroSequence):
        return seq.ordinates
    return np.ascontiguousarray(seq, dtype=np.float64)


def _check_sorted(x: np.ndarray, name: str):
    if x.size > 1 and np.any(x[1:] < x[:-1]):
        raise ValueError(f"{name} must be sorted ascending")


def _pair_counts(a: np.ndarray, b: np.ndarray, t_max: float, eps: float, nb: int) -> np.ndarray:
    """Histogram of a_i - b_j over 0 < d < t_max for sorted a, b."""
    counts = np.zeros(nb, dtype=np.int64)
    if not a.size or not b.size:
        return counts
    # candidate run of b for each a.  b < a is exact in floating point; the
    # lower end gets a small margin because a - t_max is rounded.  The exact
    # predicate on d = a - b decides membership.
    margin = 4 * np.finfo(float).eps * (np.abs(a) + t_max)
    lo = np.searchsorted(b, a - t_max - margin, side="left")
    hi = np.searchsorted(b, a, side="left")
    width = hi - lo
    for s in range(0, a.size, _BLOCK):
        sl = slice(s, s + _BLOCK)
        av, lv, wv = a[sl], lo[sl], width[sl]
        order = np.argsort(-wv, kind="stable")
        av, lv, wv = av[order], lv[order], wv[order]
        # rows with width > lag form a prefix because of the descending sort
        active = wv.size
        lag = 0
        while True:
            active = int(np.searchsorted(-wv[:active], -lag, side="left"))
            if active == 0:
                break
            d = av[:active] - b[lv[:active] + lag]
            ok = (d > 0) & (d < t_max)
            if ok.any():
                k = np.floor(d[ok] / eps).astype(np.int64)
                np.minimum(k, nb - 1, out=k)
                counts += np.bincount(k, minlength=nb)
            lag += 1
    return counts


def _parallel_counts(a, b, t_max, eps, nb, workers: int, chunks: Optional[Sequence[int]] = None):
    if chunks is None:
        if workers <= 1:
            return _pair_counts(a, b, t_max, eps, nb)
        chunks = np.linspace(0, a.size, workers + 1).astype(int)[1:-1]
    bounds = [0, *sorted(int(c) for c in chunks), a.size]
    parts = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1) if bounds[i + 1] > bounds[i]]
    with ThreadPoolExecutor(max(1, workers)) as ex:
        results = list(ex.map(lambda p: _pair_counts(a[p[0]:p[1]], b, t_max, eps, nb), parts))
    total = np.zeros(nb, dtype=np.int64)
    for r in results:
        total += r
    return total


def cross_deltas(seq_a, seq_b, w: WindowParams, workers: int = 1,
                 chunks: Optional[Sequence[int]] = None) -> DeltaHistogram:
    """Histogram of a - b for a in seq_a, b in seq_b with 0 < a - b < t_max.

    ``chunks`` optionally fixes the split points of the outer sequence; any
    split gives the same counts.
    """
    a, b = _as_array(seq_a), _as_array(seq_b)
    _check_sorted(a, "seq_a")
    _check_sorted(b, "seq_b")
    nb = w.n_bins
    counts = _parallel_counts(a, b, w.t_max, w.bin_width, nb, workers, chunks)
    mx = max(_max_abs(a), _max_abs(b))
    return DeltaHistogram(w.bin_width, w.t_max, counts, int(a.size + b.size), mx, "cross",
                          {"include_bin_zero": w.include_bin_zero})


def auto_deltas(seq, w: WindowParams, workers: int = 1,
                chunks: Optional[Sequence[int]] = None) -> DeltaHistogram:
    """Histogram of gamma_i - gamma_j over pairs i > j with 0 < difference < t_max."""
    x = _as_array(seq)
    _check_sorted(x, "sequence")
    nb = w.n_bins
    counts = _parallel_counts(x, x, w.t_max, w.bin_width, nb, workers, chunks)
    return DeltaHistogram(w.bin_width, w.t_max, counts, int(x.size), _max_abs(x), "auto",
                          {"include_bin_zero": w.include_bin_zero})


def count_pairs(seq_a, seq_b, t_max: float) -> int:
    """Number of pairs with 0 < a - b < t_max (counting pass, no binning)."""
    a, b = _as_array(seq_a), _as_array(seq_b)
    hi = np.searchsorted(b, a, side="left")
    lo = np.searchsorted(b, a - t_max - 4 * np.finfo(float).eps * (np.abs(a) + t_max), side="left")
    while True:
        # step past candidates that fail the exact test a - b < t_max
        over = (lo < hi) & (a - b[np.minimum(lo, b.size - 1)] >= t_max) if b.size else np.zeros(a.size, bool)
        if not over.any():
            break
        lo = lo + over
    return int(np.maximum(hi - lo, 0).sum())


def _max_abs(x: np.ndarray) -> float:
    return float(np.abs(x).max()) if x.size else 0.0


def brute_force_deltas(seq_a, seq_b, w: WindowParams) -> np.ndarray:
    """O(N^2) reference histogram."""
    a, b = _as_array(seq_a), _as_array(seq_b)
    d = (a[:, None] - b[None, :]).ravel()
    d = d[(d > 0) & (d < w.t_max)]
    k = np.minimum(np.floor(d / w.bin_width).astype(np.int64), w.n_bins - 1)
    return np.bincount(k, minlength=w.n_bins)


def combine(h1: DeltaHistogram, h2: DeltaHistogram) -> DeltaHistogram:
    """Bin-wise sum of two histograms on the same grid."""
    if h1.bin_width != h2.bin_width or h1.t_max != h2.t_max or h1.n_bins != h2.n_bins:
        raise ValueError("histograms have different grids")
    kind = "filtered" if "filtered" in (h1.kind, h2.kind) else "combined"
    return DeltaHistogram(h1.bin_width, h1.t_max, h1.counts + h2.counts, h1.n_source + h2.n_source,
                          max(h1.max_ordinate, h2.max_ordinate), kind, {**h2.meta, **h1.meta})


def zero_histogram(like: DeltaHistogram) -> DeltaHistogram:
    return replace(like, counts=np.zeros_like(like.counts), n_source=0, max_ordinate=0.0)


# ---------------------------------------------------------------------------
# filters

def moving_average(hist: DeltaHistogram, tau: int = 5, mode: str = "truncated") -> DeltaHistogram:
    """Centered mean over tau bins.

    ``truncated`` clips the window at the ends and divides by the number of
    bins actually used; ``periodic`` wraps around and conserves total mass.
    """
    if tau < 1 or tau % 2 == 0:
        raise ValueError("tau must be a positive odd integer")
    x = hist.counts.astype(np.float64)
    n = x.size
    if tau > n:
        raise ValueError(f"tau = {tau} exceeds the {n} bins")
    h = tau // 2
    if mode == "periodic":
        ext = np.concatenate([x[n - h:], x, x[:h]]) if h else x
        c = np.concatenate([[0.0], np.cumsum(ext)])
        out = (c[tau:] - c[:-tau]) / tau
    elif mode == "truncated":
        c = np.concatenate([[0.0], np.cumsum(x)])
        i = np.arange(n)
        lo = np.maximum(i - h, 0)
        hi = np.minimum(i + h + 1, n)
        out = (c[hi] - c[lo]) / (hi - lo)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return replace(hist, counts=out, kind="filtered",
                   meta={**hist.meta, "filter": f"moving_average(tau={tau},{mode})"})


def detrend(hist: DeltaHistogram, window: int = 101, mode: str = "truncated") -> DeltaHistogram:
    """hist minus its centered moving average over ``window`` bins."""
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    base = moving_average(hist, window, mode)
    return replace(hist, counts=hist.counts.astype(np.float64) - base.counts, kind="filtered",
                   meta={**hist.meta, "filter": f"detrend(window={window},{mode})"})
