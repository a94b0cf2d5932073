"""From histograms to findings: deficit groups, matching, GUE and Fresnel checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate
from scipy.special import sici

from .delta_engine import DeltaHistogram, moving_average
from .zeta_engine import ZeroSequence


class DegenerateThresholdError(ValueError):
    pass


@dataclass(frozen=True)
class Threshold:
    """Either an absolute count level or a quantile of the nonzero bins."""

    absolute: Optional[float] = None
    quantile: Optional[float] = None

    def __post_init__(self):
        if (self.absolute is None) == (self.quantile is None):
            raise ValueError("set exactly one of absolute or quantile")
        if self.quantile is not None and not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")

    def resolve(self, values: np.ndarray) -> float:
        if self.absolute is not None:
            return float(self.absolute)
        nz = values[values != 0]
        if not nz.size:
            raise DegenerateThresholdError("no nonzero bins to take a quantile of")
        return float(np.quantile(nz, self.quantile))


DEFAULT_THRESHOLD = Threshold(quantile=0.10)


@dataclass(frozen=True)
class DeficitGroup:
    bins: tuple
    recovered_ordinate: float
    depth: float

    @property
    def first(self) -> int:
        return self.bins[0]

    @property
    def last(self) -> int:
        return self.bins[-1]


@dataclass
class SpikeReport:
    groups: list
    matched: list                   # (recovered, reference, error)
    unmatched_recovered: list
    unmatched_reference: list
    mean_abs_error: float
    tolerance: float = 0.25

    @property
    def precision(self) -> float:
        n = len(self.matched) + len(self.unmatched_recovered)
        return 1.0 if n == 0 else len(self.matched) / n

    @property
    def recall(self) -> float:
        n = len(self.matched) + len(self.unmatched_reference)
        return 0.0 if n == 0 else len(self.matched) / n

    def table(self) -> str:
        lines = [f"{'i':>4}  {'reference':>16}  {'recovered':>10}  {'error':>8}"]
        for i, (r, g, e) in enumerate(sorted(self.matched, key=lambda m: m[1]), 1):
            lines.append(f"{i:>4}  {g:>16.9f}  {r:>10.4f}  {e:>8.4f}")
        lines.append(f"matched {len(self.matched)}, precision {self.precision:.3f}, recall {self.recall:.3f}, "
                     f"mean |error| {self.mean_abs_error:.4f}")
        return "\n".join(lines)


@dataclass
class GueFit:
    omega0: float
    amplitude: float
    residual_before: float
    residual_after: float
    baseline: float = 0.0
    heuristic_amplitude: float = 0.0
    fit_range: tuple = (0.0, 0.0)

    @property
    def reduction(self) -> float:
        if self.residual_before == 0:
            return 0.0
        return 1.0 - self.residual_after / self.residual_before


@dataclass
class FresnelCheck:
    residual: float
    dominant_frequency: float
    offset: float
    scale: float
    spectrum: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


# ---------------------------------------------------------------------------
# deficits

def detect_deficits(hist: DeltaHistogram, threshold: Union[Threshold, float, None] = None, gap: int = 0,
                    exclude_near_zero: float = 1.0, include_bin_zero: bool = False,
                    weighting: str = "unweighted") -> list:
    """Groups of bins whose value falls strictly below the threshold.

    Marked bins at most ``gap`` unmarked bins apart share a group.  A group's
    ordinate is the mean of its bins' left edges (or the depth-weighted mean).
    Groups with ordinate below ``exclude_near_zero`` are dropped.
    """
    if hist.n_bins == 0:
        raise ValueError("empty histogram")
    if threshold is None:
        threshold = DEFAULT_THRESHOLD
    elif not isinstance(threshold, Threshold):
        threshold = Threshold(absolute=float(threshold))
    if gap < 0:
        raise ValueError("gap must be >= 0")
    values = hist.counts.astype(np.float64)
    considered = np.ones(values.size, dtype=bool)
    if not include_bin_zero:
        considered[0] = False
    thr = threshold.resolve(values[considered] if considered.any() else values)
    marked = (values < thr) & considered
    if considered.sum() and marked.sum() == considered.sum():
        raise DegenerateThresholdError(f"threshold {thr} marks every bin")
    idx = np.flatnonzero(marked)
    if not idx.size:
        return []
    breaks = np.flatnonzero(np.diff(idx) > gap + 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [idx.size]])
    inv = 1.0 / hist.bin_width
    ticks = round(inv)
    integral_ticks = abs(inv - ticks) < 1e-9 * inv
    groups = []
    for s, e in zip(starts, ends):
        bins = idx[s:e]
        short = thr - values[bins]
        if weighting == "depth" and short.sum() > 0:
            k_mean = float(np.dot(bins, short) / short.sum())
        elif weighting in ("unweighted", "depth"):
            k_mean = float(bins.mean())
        else:
            raise ValueError(f"unknown weighting {weighting!r}")
        # k / (1/eps) keeps e.g. 141 / 10 = 14.1 exact
        ordinate = k_mean / ticks if integral_ticks else k_mean * hist.bin_width
        if ordinate < exclude_near_zero:
            continue
        groups.append(DeficitGroup(tuple(int(b) for b in bins), ordinate, float(short.sum())))
    return groups


def match_ordinates(recovered: Sequence[float], reference: Sequence[float], tol: float = 0.25):
    """Greedy nearest-first injective matching.  Returns (pairs, unmatched_rec, unmatched_ref)."""
    r = np.asarray(recovered, dtype=float)
    g = np.asarray(reference, dtype=float)
    cand = []
    if r.size and g.size:
        gs = np.sort(g)
        order = np.argsort(g, kind="stable")
        for i, x in enumerate(r):
            lo = np.searchsorted(gs, x - tol, side="left")
            hi = np.searchsorted(gs, x + tol, side="right")
            for jj in range(lo, hi):
                j = int(order[jj])
                err = abs(x - g[j])
                if err <= tol:
                    cand.append((err, min(x, g[j]), max(x, g[j]), i, j))
    cand.sort(key=lambda c: c[:3])
    used_r, used_g, pairs = set(), set(), []
    for err, _, _, i, j in cand:
        if i in used_r or j in used_g:
            continue
        used_r.add(i)
        used_g.add(j)
        pairs.append((float(r[i]), float(g[j]), float(r[i] - g[j])))
    pairs.sort(key=lambda p: p[1])
    un_r = [float(r[i]) for i in range(r.size) if i not in used_r]
    un_g = [float(g[j]) for j in range(g.size) if j not in used_g]
    return pairs, un_r, un_g


def match_zeros(groups: Sequence, reference, tol: float = 0.25,
                ref_range: Optional[tuple] = None) -> SpikeReport:
    """Match recovered ordinates against reference zeros.

    ``groups`` may hold DeficitGroups or plain ordinates.  Only references
    inside ``ref_range`` (inclusive) count toward recall.
    """
    rec = [g.recovered_ordinate if isinstance(g, DeficitGroup) else float(g) for g in groups]
    ref = reference.ordinates if isinstance(reference, ZeroSequence) else np.asarray(reference, dtype=float)
    if ref.size > 1 and np.any(np.diff(ref) < 0):
        raise ValueError("reference must be sorted")
    if ref_range is not None:
        ref = ref[(ref >= ref_range[0]) & (ref <= ref_range[1])]
    pairs, un_r, un_g = match_ordinates(rec, ref, tol)
    mae = float(np.mean([abs(p[2]) for p in pairs])) if pairs else float("nan")
    return SpikeReport(list(groups), pairs, un_r, un_g, mae, tol)


# ---------------------------------------------------------------------------
# sinc, box, GUE density

def sinc_pi(x):
    """sin(pi x) / (pi x), equal to 1 at 0."""
    out = np.sinc(np.asarray(x, dtype=float))
    return float(out) if np.ndim(x) == 0 else out


def box_fn(x):
    """Indicator of |x| < 1/2, with value 1/2 on the boundary."""
    a = np.abs(np.asarray(x, dtype=float))
    out = np.where(a < 0.5, 1.0, np.where(a == 0.5, 0.5, 0.0))
    return float(out) if np.ndim(x) == 0 else out


def gue_pair_density(t):
    """Montgomery's pair density 1 - sinc_pi(t)^2."""
    s = sinc_pi(t)
    return 1.0 - s * s


def pair_correlation_integral(alpha: float, beta: float) -> float:
    if not 0 < alpha < beta:
        raise ValueError("need 0 < alpha < beta")
    val, _ = integrate.quad(gue_pair_density, alpha, beta, epsabs=0.0, epsrel=1e-10,
                            limit=max(50, int(4 * (beta - alpha)) + 50))
    return float(val)


def fourier_box(x: float) -> float:
    """Numerical value of the integral of exp(-2 pi i x t) box(t) over [-1/2, 1/2]."""
    re, _ = integrate.quad(lambda t: math.cos(2 * math.pi * x * t), -0.5, 0.5, epsabs=1e-13, limit=200)
    im, _ = integrate.quad(lambda t: -math.sin(2 * math.pi * x * t), -0.5, 0.5, epsabs=1e-13, limit=200)
    return complex(re, im).real if abs(im) < 1e-12 else complex(re, im)


def sinc_integral(M: float) -> float:
    """Integral of sinc_pi over [-M, M] (equals 2 Si(pi M) / pi)."""
    return float(2.0 * sici(math.pi * M)[0] / math.pi)


def omega0(t0: float) -> float:
    """Frequency log(T0) / (2 pi) attached to zeros up to height T0."""
    if not t0 > 1:
        raise ValueError("t0 must exceed 1")
    return math.log(t0) / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# GUE correction and Fresnel residual

def _sinc2_profile(hist: DeltaHistogram, w0: float) -> np.ndarray:
    t = np.arange(hist.n_bins) * hist.bin_width
    s = sinc_pi(w0 * t)
    return s * s


def gue_correct(hist: DeltaHistogram, omega0: float, amplitude: float) -> DeltaHistogram:
    """Add A * sinc_pi(omega0 * k * eps)^2 to every bin k."""
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    vals = hist.counts.astype(np.float64) + amplitude * _sinc2_profile(hist, omega0)
    prev = hist.meta.get("gue_amplitude", 0.0)
    return replace(hist, counts=vals, kind="filtered",
                   meta={**hist.meta, "gue_amplitude": prev + amplitude, "omega0": omega0})


def fit_gue_amplitude(hist: DeltaHistogram, omega0: float, fit_range: Optional[tuple] = None,
                      baseline: str = "constant", window: int = 51) -> GueFit:
    """Least-squares A for x + A sinc^2 against a flat or moving-average baseline.

    With the constant baseline, x_k + A s_k - U is minimized over (U, A) on the
    fit range.  With ``baseline="moving_average"`` the corrected series is
    compared with its own centered mean over ``window`` bins.  Residuals are
    root-mean-square deviations from the respective baselines.
    """
    lo, hi = fit_range if fit_range is not None else (0.0, hist.t_max)
    sl = hist.window(lo, hi)
    x = hist.counts.astype(np.float64)[sl]
    s = _sinc2_profile(hist, omega0)[sl]
    if x.size < 3:
        raise ValueError("fit range holds fewer than three bins")
    if baseline == "constant":
        xc, sc = x - x.mean(), s - s.mean()
        ss = float(sc @ sc)
        a = max(0.0, -float(xc @ sc) / ss) if ss > 0 else 0.0
        before = float(np.sqrt(np.mean(xc * xc)))
        r = xc + a * sc
        after = float(np.sqrt(np.mean(r * r)))
        level = float(x.mean() + a * s.mean())
    elif baseline == "moving_average":
        full = hist.counts.astype(np.float64)
        prof = _sinc2_profile(hist, omega0)

        def hp(v):
            return v - moving_average(replace(hist, counts=v, kind="filtered"), window).counts

        rx, rs = hp(full)[sl], hp(prof)[sl]
        ss = float(rs @ rs)
        a = max(0.0, -float(rx @ rs) / ss) if ss > 0 else 0.0
        before = float(np.sqrt(np.mean(rx * rx)))
        r = rx + a * rs
        after = float(np.sqrt(np.mean(r * r)))
        level = float(np.mean(x + a * s))
    else:
        raise ValueError(f"unknown baseline {baseline!r}")
    return GueFit(omega0, a, before, after, level, heuristic_gue_amplitude(hist, omega0), (lo, hi))


def heuristic_gue_amplitude(hist: DeltaHistogram, omega0: float) -> float:
    """Plateau level minus the count just above zero: the depth the sinc^2 bump must fill."""
    x = hist.counts.astype(np.float64)
    first_zero = 1.0 / omega0
    sl = hist.window(first_zero, min(hist.t_max, 3 * first_zero))
    if sl.stop - sl.start < 1 or x.size < 2:
        return 0.0
    plateau = float(np.median(x[sl]))
    return max(0.0, plateau - float(x[1]))


def _dominant_frequency(series: np.ndarray, step: float, pad_factor: int = 64):
    """Peak of the plain DFT magnitude of a mean-removed series, in cycles per unit."""
    r = series - series.mean()
    n = max(1 << 12, pad_factor * r.size)
    spec = np.abs(np.fft.rfft(r, n))
    freqs = np.fft.rfftfreq(n, step)
    if spec.size < 2 or not np.any(spec[1:] > 0):
        return float("nan"), spec
    i = int(np.argmax(spec[1:])) + 1
    return float(freqs[i]), spec


def fresnel_residual(corrected: DeltaHistogram, omega0: float, fit_range: Optional[tuple] = None) -> FresnelCheck:
    """Fit C + B sinc_pi(omega0 t) to the corrected series and return the relative L2 residual.

    Also reports the dominant frequency of the mean-removed series in the
    units of omega in sinc_pi(omega t), i.e. twice the cycles per unit, so
    that a pure sinc_pi(omega0 t) reports omega0.
    """
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    lo, hi = fit_range if fit_range is not None else (0.0, corrected.t_max)
    sl = corrected.window(lo, hi)
    y = corrected.counts.astype(np.float64)[sl]
    t = (np.arange(corrected.n_bins) * corrected.bin_width)[sl]
    if y.size < 3:
        raise ValueError("fit range holds fewer than three bins")
    X = np.column_stack([np.ones_like(t), sinc_pi(omega0 * t)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    fit = X @ coef
    yc = y - y.mean()
    denom = float(np.linalg.norm(yc))
    rel = float(np.linalg.norm(y - fit) / denom) if denom > 0 else 0.0
    freq, spec = _dominant_frequency(y, corrected.bin_width)
    return FresnelCheck(rel, 2.0 * freq, float(coef[0]), float(coef[1]), spec)


def residual_frequency(hist: DeltaHistogram, fit: GueFit) -> float:
    """Dominant frequency of the corrected histogram over the fit range, in cycles per unit delta.

    This is the unit of ``GueFit.omega0``; a sinc^2(omega0 t) bump oscillates at omega0.
    """
    corr = gue_correct(hist, fit.omega0, fit.amplitude)
    sl = corr.window(*fit.fit_range)
    return _dominant_frequency(corr.counts[sl], corr.bin_width)[0]
