"""Declarative runs: a source block, a window, a chain of operations and outputs.

A config is one YAML or JSON document::

    name: stats-a
    sources:
      a: {kind: riemann, n: 100000}
      b: {kind: dirichlet, modulus: 3, index: 2, n: 10000, branch: pos}   # optional
    window: {t_max: 100, bin_width: 0.1}
    chain:
      - {op: moving_average, tau: 5}
      - {op: detect, threshold: 12500, gap: 0, exclude_near_zero: 1.0}
      - {op: match, reference: a, tol: 0.25}
      - {op: gue_fit, fit_range: [0, 2]}
      - {op: fresnel}
      - {op: predict, a: zeta, b: zeta}
    outputs: {dir: out, histogram: hist.csv, report: report.csv, svg: hist.svg}
    budgets: {max_zeros: 200000, max_l_zeros: 20000}
    workers: 1

Source kinds: ``riemann`` (n or t_max), ``dirichlet`` (modulus, index, n,
branch pos|neg), ``file`` (path plus ZeroFileSpec fields, optional branch),
``comb`` (prime, t_max: the zeros 2 pi k / log p).  With only ``a`` the
histogram is auto_deltas(a); with ``b`` it is cross_deltas(a, b).
"""

from __future__ import annotations

import json
import math
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .. import delta_engine as de
from .. import dirichlet_ene as dn
from .. import spike_analysis as sa
from .. import zero_ingest as zi
from .. import zeta_engine as ze
from . import export

DEFAULT_BUDGETS = {"max_zeros": 200_000, "max_l_zeros": 20_000}


class ConfigError(ValueError):
    pass


@dataclass
class RecipeConfig:
    name: str
    sources: dict
    window: dict
    chain: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    workers: int = 1
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if not self.sources or "a" not in self.sources:
            raise ConfigError("config needs at least one source under sources.a")
        unknown = set(self.sources) - {"a", "b"}
        if unknown:
            raise ConfigError(f"unknown source names {sorted(unknown)}; use a and b")
        for key in ("t_max", "bin_width"):
            if key not in self.window:
                raise ConfigError(f"window.{key} missing")
        de.WindowParams(float(self.window["t_max"]), float(self.window["bin_width"]))
        for k, v in self.budgets.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"budget {k} must be positive")
        for step in self.chain:
            if "op" not in step or step["op"] not in _OPS:
                raise ConfigError(f"unknown chain step {step!r}; ops are {sorted(_OPS)}")
            ref = step.get("reference")
            if isinstance(ref, str) and ref not in ("a", "b", "prediction", "zeros:riemann"):
                raise ConfigError(f"unresolvable reference {ref!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "RecipeConfig":
        d = dict(d)
        budgets = {**DEFAULT_BUDGETS, **(d.pop("budgets", None) or {})}
        known = {"name", "sources", "window", "chain", "outputs", "workers", "cache_dir"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(d.get("name", "run"), d.get("sources") or {}, d.get("window") or {}, d.get("chain") or [],
                   d.get("outputs") or {}, budgets, int(d.get("workers", 1)), d.get("cache_dir"))


def load_config(path) -> RecipeConfig:
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return RecipeConfig.from_dict(data)


# ---------------------------------------------------------------------------
# bundled recipes (desk-scale)

BUNDLED = {
    "stats-a": {
        "name": "stats-a",
        "sources": {"a": {"kind": "riemann", "n": 100_000}},
        "window": {"t_max": 100, "bin_width": 0.1},
        "chain": [{"op": "detect", "threshold": 12500, "gap": 0, "exclude_near_zero": 1.0},
                  {"op": "match", "reference": "zeros:riemann", "tol": 0.25}],
        "outputs": {"histogram": "stats-a.csv", "report": "stats-a-report.csv", "groups": "stats-a-groups.csv",
                    "svg": "stats-a.svg", "svg_range": [10, 30], "annotate": "zeros:riemann"},
    },
    "stats-b": {
        # a clean picture at eps = 0.01 needs millions of zeros; this desk variant keeps eps and T
        "name": "stats-b",
        "sources": {"a": {"kind": "riemann", "n": 100_000}},
        "window": {"t_max": 200, "bin_width": 0.01},
        "chain": [{"op": "moving_average", "tau": 5},
                  {"op": "detect", "threshold_quantile": 0.1, "gap": 2, "exclude_near_zero": 1.0},
                  {"op": "match", "reference": "zeros:riemann", "tol": 0.25}],
        "outputs": {"histogram": "stats-b.csv", "report": "stats-b-report.csv", "svg": "stats-b.svg",
                    "svg_range": [10, 30], "svg_style": "line", "annotate": "zeros:riemann"},
    },
    "mate-chi3": {
        "name": "mate-chi3",
        "sources": {"a": {"kind": "dirichlet", "modulus": 3, "index": 2, "n": 10_000, "branch": "pos"},
                    "b": {"kind": "riemann", "n": 100_000}},
        "window": {"t_max": 50, "bin_width": 0.1},
        "chain": [{"op": "detect", "threshold_quantile": 0.1, "gap": 1, "exclude_near_zero": 1.0},
                  {"op": "match", "reference": "a", "tol": 0.25},
                  {"op": "predict", "a": "L:3.2", "b": "zeta"}],
        "outputs": {"histogram": "mate-chi3.csv", "report": "mate-chi3-report.csv", "svg": "mate-chi3.svg",
                    "svg_range": [0, 30], "annotate": "a"},
    },
    "euler-comb-23": {
        # 1e7 zeros are needed for a clear comb; supply them with --source
        "name": "euler-comb-23",
        "sources": {"a": {"kind": "riemann", "n": 100_000}, "b": {"kind": "comb", "prime": 23}},
        "window": {"t_max": 45, "bin_width": 0.01},
        "chain": [{"op": "moving_average", "tau": 5},
                  {"op": "detect", "threshold_quantile": 0.05, "gap": 2, "exclude_near_zero": 1.0},
                  {"op": "predict", "a": "zeta", "b": "f:23"},
                  {"op": "match", "reference": "prediction", "tol": 0.05}],
        "outputs": {"histogram": "euler-comb-23.csv", "report": "euler-comb-23-report.csv",
                    "svg": "euler-comb-23.svg", "svg_style": "line", "annotate": "prediction"},
    },
    "gue-fresnel": {
        "name": "gue-fresnel",
        "sources": {"a": {"kind": "riemann", "n": 100_000}},
        "window": {"t_max": 2, "bin_width": 0.01},
        "chain": [{"op": "gue_fit", "fit_range": [0, 2]}, {"op": "gue_correct"}, {"op": "fresnel"}],
        "outputs": {"histogram": "gue-fresnel.csv", "fit": "gue-fresnel-fit.csv", "svg": "gue-fresnel.svg",
                    "svg_style": "line"},
    },
}


def bundled(name: str) -> RecipeConfig:
    if name not in BUNDLED:
        raise ConfigError(f"unknown recipe {name!r}; bundled: {', '.join(sorted(BUNDLED))}")
    return RecipeConfig.from_dict(json.loads(json.dumps(BUNDLED[name])))


# ---------------------------------------------------------------------------
# sources

def _cache_key(src: dict) -> str:
    return "-".join(f"{k}={src[k]}" for k in sorted(src)).replace("/", "_")


def resolve_source(src: dict, budgets: dict, workers: int = 1, cache_dir=None, t_hint=None) -> ze.ZeroSequence:
    kind = src.get("kind")
    cfg = ze.ZFunctionConfig(workers=workers)
    cache = Path(cache_dir) / (_cache_key(src) + ".zseq") if cache_dir and kind in ("riemann", "dirichlet") else None
    if cache is not None and cache.exists():
        seq = zi.read_cache(cache)
    elif kind == "riemann":
        n, t = src.get("n"), src.get("t_max")
        if n is None and t is None:
            raise ConfigError("riemann source needs n or t_max")
        if n is not None and n > budgets["max_zeros"]:
            raise ConfigError(f"n = {n} exceeds budget max_zeros = {budgets['max_zeros']}")
        if t is not None and ze.count_zeros(float(t)) > budgets["max_zeros"]:
            raise ConfigError(f"t_max = {t} exceeds budget max_zeros = {budgets['max_zeros']}")
        seq = ze.find_riemann_zeros(n, cfg) if n is not None else ze.riemann_zeros_up_to(float(t), cfg)
    elif kind == "dirichlet":
        chi = dn.character(int(src["modulus"]), int(src["index"]))
        n = int(src.get("n", 0))
        if n > budgets["max_l_zeros"]:
            raise ConfigError(f"n = {n} exceeds budget max_l_zeros = {budgets['max_l_zeros']}")
        branch = src.get("branch", "pos")
        if branch not in ("pos", "neg"):
            raise ConfigError("dirichlet source branch must be pos or neg")
        target = chi if branch == "pos" or chi.is_real else chi.conjugate()
        seq = ze.find_dirichlet_zeros(target, n, 0, cfg)
        seq = ze.ZeroSequence(seq.ordinates, False, {**seq.source, "branch": branch, "character": chi.label})
    elif kind == "file":
        spec_kw = {k: src[k] for k in ("dialect", "skip_rows", "max_rows", "column", "offset") if k in src}
        seq = zi.load_sequence(src["path"], **spec_kw)
        if seq.signed:
            pos, neg = zi.split_signed(seq)
            seq = neg if src.get("branch", "pos") == "neg" else pos
        return seq
    elif kind == "comb":
        f = dn.comb_fundamental(int(src["prime"]))
        top = float(src.get("t_max", t_hint or 0.0))
        if top <= 0:
            raise ConfigError("comb source needs t_max")
        k = np.arange(1, int(math.floor(top / f)) + 2)
        return ze.ZeroSequence(k * f, False, {"kind": "computed", "generator": "comb", "prime": int(src["prime"])})
    else:
        raise ConfigError(f"unknown source kind {kind!r}")
    if cache is not None and not cache.exists():
        zi.write_cache(seq, cache)
    return seq


# ---------------------------------------------------------------------------
# running

_OPS = {"moving_average", "detrend", "detect", "match", "gue_fit", "gue_correct", "fresnel", "predict"}


@dataclass
class RunReport:
    name: str
    histogram: de.DeltaHistogram
    lines: list = field(default_factory=list)
    groups: list = field(default_factory=list)
    report: Optional[sa.SpikeReport] = None
    fit: Optional[sa.GueFit] = None
    fresnel: Optional[sa.FresnelCheck] = None
    prediction: Optional[dn.SpikePrediction] = None
    files: list = field(default_factory=list)

    def summary(self) -> str:
        return "\n".join(self.lines)


def _reference(ref, sources: dict, seqs: dict, hist, prediction, budgets, workers, cache_dir):
    if ref in ("a", "b"):
        return seqs[ref].ordinates
    if ref == "prediction":
        if prediction is None:
            raise ConfigError("reference 'prediction' needs an earlier predict step")
        return np.array(sorted({round(x, 12) for x, _ in prediction.locations(hist.t_max) if x > 0}))
    if isinstance(ref, str) and ref == "zeros:riemann":
        return resolve_source({"kind": "riemann", "t_max": hist.t_max}, budgets, workers, cache_dir).ordinates
    raise ConfigError(f"unresolvable reference {ref!r}")


def run_recipe(cfg: RecipeConfig, out_dir=None, log=print) -> RunReport:
    """Run the chain.  Files go to ``out_dir``; on failure none are left behind."""
    t0 = time.perf_counter()
    w = de.WindowParams(float(cfg.window["t_max"]), float(cfg.window["bin_width"]),
                        bool(cfg.window.get("include_bin_zero", False)))
    seqs = {}
    for name in sorted(cfg.sources):
        seqs[name] = resolve_source(cfg.sources[name], cfg.budgets, cfg.workers, cfg.cache_dir,
                                    t_hint=(seqs["a"].max_ordinate if "a" in seqs else None))
    if "b" in seqs:
        hist = de.cross_deltas(seqs["a"], seqs["b"], w, workers=cfg.workers)
    else:
        hist = de.auto_deltas(seqs["a"], w, workers=cfg.workers)
    run = RunReport(cfg.name, hist)
    run.lines.append(f"[{cfg.name}] sources: " + ", ".join(f"{k}: {len(s)} ordinates up to {s.max_ordinate:.6g}"
                                                          for k, s in seqs.items()))
    run.lines.append(f"[{cfg.name}] histogram {hist.kind}: {hist.n_bins} bins of {w.bin_width}, "
                     f"{int(hist.total)} deltas in (0, {w.t_max})")
    raw = hist
    for step in cfg.chain:
        op = step["op"]
        if op == "moving_average":
            hist = de.moving_average(hist, int(step.get("tau", 5)), step.get("mode", "truncated"))
        elif op == "detrend":
            hist = de.detrend(hist, int(step.get("window", 101)), step.get("mode", "truncated"))
        elif op == "detect":
            if "threshold" in step:
                thr = sa.Threshold(absolute=float(step["threshold"]))
            else:
                thr = sa.Threshold(quantile=float(step.get("threshold_quantile", 0.1)))
            run.groups = sa.detect_deficits(hist, thr, int(step.get("gap", 0)),
                                            float(step.get("exclude_near_zero", 1.0)),
                                            bool(step.get("include_bin_zero", False)),
                                            step.get("weighting", "unweighted"))
            run.lines.append(f"[{cfg.name}] {len(run.groups)} deficit groups")
        elif op == "match":
            ref = _reference(step.get("reference", "a"), cfg.sources, seqs, hist, run.prediction,
                             cfg.budgets, cfg.workers, cfg.cache_dir)
            run.report = sa.match_zeros(run.groups, ref, float(step.get("tol", 0.25)),
                                        ref_range=(w.bin_width, w.t_max))
            run.lines.append(run.report.table())
        elif op == "gue_fit":
            w0 = float(step.get("omega0") or sa.omega0(seqs["a"].max_ordinate))
            fr = tuple(step["fit_range"]) if "fit_range" in step else None
            run.fit = sa.fit_gue_amplitude(raw, w0, fr, step.get("baseline", "constant"))
            f = run.fit
            run.lines.append(f"[{cfg.name}] omega0 {f.omega0:.7f}  A {f.amplitude:.6g} (heuristic "
                             f"{f.heuristic_amplitude:.6g})  residual {f.residual_before:.6g} -> "
                             f"{f.residual_after:.6g} ({100 * f.reduction:.1f}% lower)  "
                             f"dominant frequency {sa.residual_frequency(raw, f):.4f} cycles/unit")
        elif op == "gue_correct":
            if run.fit is None and "amplitude" not in step:
                raise ConfigError("gue_correct needs an amplitude or an earlier gue_fit")
            amp = float(step.get("amplitude", run.fit.amplitude if run.fit else 0.0))
            w0 = float(step.get("omega0") or (run.fit.omega0 if run.fit else sa.omega0(seqs["a"].max_ordinate)))
            hist = sa.gue_correct(hist, w0, amp)
        elif op == "fresnel":
            w0 = run.fit.omega0 if run.fit else sa.omega0(seqs["a"].max_ordinate)
            fr = tuple(step["fit_range"]) if "fit_range" in step else None
            run.fresnel = sa.fresnel_residual(hist, w0, fr)
            run.lines.append(f"[{cfg.name}] Fresnel fit residual {run.fresnel.residual:.4f}, "
                             f"dominant frequency {run.fresnel.dominant_frequency:.4f} (omega0 {w0:.4f})")
        elif op == "predict":
            run.prediction = dn.predict_deltas(dn.parse_symbol(step["a"]), dn.parse_symbol(step["b"]))
            run.lines.append(f"[{cfg.name}] predicted: {run.prediction.closed_form.render()}")
    out = cfg.outputs
    if out_dir is not None or out.get("dir"):
        run.files = _write_outputs(run, hist, cfg, seqs, Path(out_dir or out["dir"]))
    run.lines.append(f"[{cfg.name}] done in {time.perf_counter() - t0:.1f} s")
    for line in run.lines:
        log(line)
    return run


def _write_outputs(run: RunReport, hist, cfg: RecipeConfig, seqs, out_dir: Path) -> list:
    out = cfg.outputs
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(dir=out_dir, prefix=".stage-"))
    written = []
    try:
        if out.get("histogram"):
            export.export_csv(hist, stage / out["histogram"], {"recipe": cfg.name})
            written.append(out["histogram"])
        if out.get("report") and run.report is not None:
            export.write_text(stage / out["report"], export.report_csv(run.report))
            written.append(out["report"])
        if out.get("groups") and run.groups:
            export.write_text(stage / out["groups"], export.groups_csv(run.groups))
            written.append(out["groups"])
        if out.get("fit") and run.fit is not None:
            export.write_text(stage / out["fit"], export.fit_csv(run.fit))
            written.append(out["fit"])
        if out.get("svg"):
            ann = ()
            if out.get("annotate"):
                ann = tuple(_reference(out["annotate"], cfg.sources, seqs, hist, run.prediction,
                                       cfg.budgets, cfg.workers, cfg.cache_dir))
            spec = export.PlotSpec(tuple(out["svg_range"]) if out.get("svg_range") else None,
                                   out.get("svg_style", "bars"), ann, cfg.name)
            export.export_svg(hist, spec, stage / out["svg"])
            written.append(out["svg"])
        for name in written:
            (stage / name).replace(out_dir / name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    run.lines.append(f"[{cfg.name}] wrote " + ", ".join(str(out_dir / n) for n in written))
    return [out_dir / n for n in written]
