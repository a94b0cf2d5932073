"""CSV and SVG output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..delta_engine import DeltaHistogram
from ..spike_analysis import GueFit, SpikeReport
from ..zero_ingest import _atomic_write

_META_KEYS = ("kind", "bin_width", "t_max", "n_source", "max_ordinate")


def _fmt(x: float) -> str:
    return "%.15g" % x


def histogram_csv(hist: DeltaHistogram, extra: Optional[dict] = None) -> str:
    buf = io.StringIO()
    meta = {"kind": hist.kind, "bin_width": repr(hist.bin_width), "t_max": repr(hist.t_max),
            "n_source": hist.n_source, "max_ordinate": repr(hist.max_ordinate)}
    for k, v in sorted({**{k: v for k, v in hist.meta.items() if np.isscalar(v)}, **(extra or {})}.items()):
        meta.setdefault(k, v)
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    buf.write("k,bin_start,count\n")
    starts = hist.bin_starts
    if hist.kind == "filtered":
        for k, (s, c) in enumerate(zip(starts, hist.counts)):
            buf.write(f"{k},{_fmt(s)},{_fmt(c)}\n")
    else:
        for k, (s, c) in enumerate(zip(starts, hist.counts)):
            buf.write(f"{k},{_fmt(s)},{int(c)}\n")
    return buf.getvalue()


def export_csv(hist: DeltaHistogram, path, extra: Optional[dict] = None) -> Path:
    _atomic_write(path, histogram_csv(hist, extra).encode("utf-8"))
    return Path(path)


def read_histogram_csv(path) -> DeltaHistogram:
    meta, rows = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            elif line.strip():
                rows.append(line.strip())
    if not rows or rows[0] != "k,bin_start,count":
        raise ValueError(f"{path}: not a histogram CSV")
    missing = [k for k in _META_KEYS if k not in meta]
    if missing:
        raise ValueError(f"{path}: missing metadata {missing}")
    kind = meta.pop("kind")
    conv = float if kind == "filtered" else int
    counts = [conv(r.rsplit(",", 1)[1]) for r in rows[1:]]
    extra = {k: v for k, v in meta.items() if k not in _META_KEYS}
    return DeltaHistogram(float(meta["bin_width"]), float(meta["t_max"]), counts, int(meta["n_source"]),
                          float(meta["max_ordinate"]), kind, extra)


def report_csv(report: SpikeReport) -> str:
    buf = io.StringIO()
    buf.write(f"# tolerance={report.tolerance}\n# precision={_fmt(report.precision)}\n"
              f"# recall={_fmt(report.recall)}\n# mean_abs_error={_fmt(report.mean_abs_error)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["status", "reference", "recovered", "error"])
    for rec, ref, err in report.matched:
        w.writerow(["matched", _fmt(ref), _fmt(rec), _fmt(err)])
    for ref in report.unmatched_reference:
        w.writerow(["missed", _fmt(ref), "", ""])
    for rec in report.unmatched_recovered:
        w.writerow(["spurious", "", _fmt(rec), ""])
    return buf.getvalue()


def groups_csv(groups) -> str:
    buf = io.StringIO()
    buf.write("first_bin,last_bin,n_bins,recovered,depth\n")
    for g in groups:
        buf.write(f"{g.first},{g.last},{len(g.bins)},{_fmt(g.recovered_ordinate)},{_fmt(g.depth)}\n")
    return buf.getvalue()


def fit_csv(fit: GueFit) -> str:
    rows = [("omega0", fit.omega0), ("amplitude", fit.amplitude), ("baseline", fit.baseline),
            ("heuristic_amplitude", fit.heuristic_amplitude), ("residual_before", fit.residual_before),
            ("residual_after", fit.residual_after), ("reduction", fit.reduction),
            ("fit_lo", fit.fit_range[0]), ("fit_hi", fit.fit_range[1])]
    return "name,value\n" + "".join(f"{k},{_fmt(v)}\n" for k, v in rows)


# ---------------------------------------------------------------------------
# SVG

@dataclass(frozen=True)
class PlotSpec:
    range: Optional[tuple] = None
    style: str = "bars"
    annotations: tuple = ()
    title: str = ""
    width: int = 800
    height: int = 360

    def __post_init__(self):
        if self.style not in ("bars", "line"):
            raise ValueError("style must be bars or line")
        if self.range is not None and not self.range[0] < self.range[1]:
            raise ValueError("empty plot range")


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    return [round(first + i * step, 10) for i in range(int((hi - first) / step + 1e-9) + 1)]


def render_svg(hist: DeltaHistogram, spec: PlotSpec = PlotSpec()) -> str:
    lo, hi = spec.range if spec.range is not None else (0.0, hist.t_max)
    if lo < 0 or hi > hist.t_max + 1e-12:
        raise ValueError(f"range [{lo}, {hi}] lies outside the histogram domain [0, {hist.t_max}]")
    W, H = spec.width, spec.height
    ml, mr, mt, mb = 70, 20, 30, 40
    pw, ph = W - ml - mr, H - mt - mb
    sl = hist.window(lo, hi)
    x = hist.bin_starts[sl]
    y = hist.counts[sl].astype(float)
    if y.size:
        ymin, ymax = float(y.min()), float(y.max())
        pad = 0.05 * (ymax - ymin) if ymax > ymin else max(1.0, abs(ymax) * 0.05)
        ymin, ymax = ymin - pad, ymax + pad
    else:
        ymin, ymax = 0.0, 1.0

    def px(v):
        return ml + (v - lo) / (hi - lo) * pw

    def py(v):
        return mt + (1 - (v - ymin) / (ymax - ymin)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if spec.title:
        out.append(f'<text x="{W / 2:.2f}" y="18" text-anchor="middle" font-size="14">{spec.title}</text>')
    for t in _nice_ticks(lo, hi):
        out.append(f'<line x1="{px(t):.2f}" y1="{mt + ph}" x2="{px(t):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{mt + ph + 18}" text-anchor="middle" font-size="11">{t:g}</text>')
    if y.size:
        for t in _nice_ticks(ymin, ymax, 5):
            out.append(f'<line x1="{ml - 5}" y1="{py(t):.2f}" x2="{ml}" y2="{py(t):.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{py(t) + 4:.2f}" text-anchor="end" font-size="11">{t:g}</text>')
        if spec.style == "bars":
            bw = max(hist.bin_width / (hi - lo) * pw, 0.5)
            base = py(max(ymin, 0.0)) if ymin < 0 < ymax else mt + ph
            out.append('<g fill="steelblue">')
            for xi, yi in zip(x, y):
                top = min(py(yi), base)
                out.append(f'<rect x="{px(xi):.2f}" y="{top:.2f}" width="{bw:.2f}" '
                           f'height="{abs(base - py(yi)):.2f}"/>')
            out.append("</g>")
        else:
            pts = " ".join(f"{px(xi + hist.bin_width / 2):.2f},{py(yi):.2f}" for xi, yi in zip(x, y))
            out.append(f'<polyline fill="none" stroke="steelblue" points="{pts}"/>')
    for a in spec.annotations:
        if lo <= a <= hi:
            out.append(f'<line class="annotation" x1="{px(a):.2f}" y1="{mt}" x2="{px(a):.2f}" y2="{mt + ph}" '
                       f'stroke="crimson" stroke-dasharray="4,3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_svg(hist: DeltaHistogram, spec: PlotSpec, path) -> Path:
    _atomic_write(path, render_svg(hist, spec).encode("utf-8"))
    return Path(path)


def write_text(path, text: str) -> Path:
    _atomic_write(path, text.encode("utf-8"))
    return Path(path)
