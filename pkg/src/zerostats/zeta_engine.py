"""Critical-line zeros of zeta and of primitive Dirichlet L-functions.

Evaluation
    * zeta, t >= ``em_cutoff``: Riemann-Siegel main sum plus the remainder
      series C_0 .. C_K (K = ``term_budget``, at most 4).
    * everything else: Euler-Maclaurin summation on the Hurwitz decomposition
      L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q).

Zero search
    Gram points g_m solve theta(g_m) = m pi.  A Gram point is good when
    (-1)^m Z(g_m) > 0 (both for zeta and for rotated L-functions, whose phase
    plays the role of theta).  At a good Gram point the number of zeros in
    (0, g_m] is m + c with c a per-function constant, so every stretch between
    consecutive good points must hold a known number of sign changes.  Stretches
    that come up short are subdivided until they do; a stretch that cannot be
    completed raises ``BracketingError``.  Roots are then polished by a
    vectorized Illinois iteration.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional

import mpmath
import numpy as np
from scipy import special

from .dirichlet_ene import DirichletCharacter, trivial_character

THETA_MIN_T = 1.0
MERGE_TOL = 1e-8
MAX_CONDUCTOR = 100
_TWO_PI = 2.0 * math.pi
_CHUNK_ELEMS = 1 << 21


class BracketingError(RuntimeError):
    def __init__(self, msg, interval=None):
        super().__init__(msg)
        self.interval = interval


class PrecisionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ZFunctionConfig:
    term_budget: int = 4           # Riemann-Siegel remainder order (C_0 .. C_term_budget)
    refine_tolerance: float = 1e-9
    em_cutoff: float = 2000.0      # zeta uses Euler-Maclaurin below this height
    em_terms: int = 40
    max_subdivision: int = 12
    max_conductor: int = MAX_CONDUCTOR
    workers: int = 1

    def __post_init__(self):
        if self.term_budget < 1:
            raise ValueError("term_budget must be >= 1")
        if not self.refine_tolerance > 0:
            raise ValueError("refine_tolerance must be > 0")


DEFAULT_CONFIG = ZFunctionConfig()


@dataclass
class ZeroSequence:
    ordinates: np.ndarray
    signed: bool = False
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ordinates = np.ascontiguousarray(self.ordinates, dtype=np.float64)
        o = self.ordinates
        if o.ndim != 1:
            raise ValueError("ordinates must be one-dimensional")
        if o.size and not np.all(np.isfinite(o)):
            raise ValueError("ordinates must be finite")
        if o.size > 1 and not np.all(np.diff(o) > 0):
            raise ValueError("ordinates must be strictly increasing")
        if not self.signed and o.size and o[0] <= 0:
            raise ValueError("unsigned sequence must contain positive ordinates only")

    def __len__(self):
        return self.ordinates.size

    @property
    def max_ordinate(self) -> float:
        if not self.ordinates.size:
            return 0.0
        return float(max(abs(self.ordinates[0]), abs(self.ordinates[-1])))

    def __eq__(self, other):
        if not isinstance(other, ZeroSequence):
            return NotImplemented
        return (self.signed == other.signed
                and self.ordinates.shape == other.ordinates.shape
                and self.ordinates.tobytes() == other.ordinates.tobytes())

    def merge(self, other: "ZeroSequence", tol: float = MERGE_TOL) -> "ZeroSequence":
        """Ordered union; values closer than ``tol`` are taken as the same zero."""
        v = np.sort(np.concatenate([self.ordinates, other.ordinates]))
        if v.size:
            keep = np.concatenate([[True], np.diff(v) > tol])
            v = v[keep]
        return ZeroSequence(v, self.signed or other.signed, {"merged": [self.source, other.source]})


# ---------------------------------------------------------------------------
# phase functions

def _theta_asymptotic(t):
    t = np.asarray(t, dtype=float)
    r = 1.0 / t
    r2 = r * r
    tail = r * (1 / 48 + r2 * (7 / 5760 + r2 * (31 / 80640 + r2 * (127 / 430080 + r2 * 511 / 1216512))))
    return 0.5 * t * np.log(t / _TWO_PI) - 0.5 * t - math.pi / 8 + tail


def _theta_exact(t, q=1, a=0, phi=0.0):
    t = np.asarray(t, dtype=float)
    lg = special.loggamma((0.5 + a + 1j * t) / 2)
    return 0.5 * t * math.log(q / math.pi) + lg.imag - 0.5 * phi


def _theta_prime(t, q=1, a=0):
    t = np.asarray(t, dtype=float)
    return 0.5 * math.log(q / math.pi) + 0.5 * special.psi((0.5 + a + 1j * t) / 2).real


def _zeta_theta(t):
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    out = np.empty_like(at)
    big = at >= 10
    out[big] = _theta_asymptotic(at[big])
    out[~big] = _theta_exact(at[~big])
    return np.where(t < 0, -out, out)


def riemann_siegel_theta(t):
    """theta(t) = arg Gamma(1/4 + it/2) - (t/2) log pi for t >= 1.

    The asymptotic series (five correction terms) is used from t = 10 on; below
    that the log-gamma function is evaluated directly.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr >= THETA_MIN_T)):
        raise ValueError(f"riemann_siegel_theta needs t >= {THETA_MIN_T}")
    out = _zeta_theta(arr)
    return float(out) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# Riemann-Siegel remainder coefficients

@lru_cache(maxsize=1)
def _rs_coefficients(degree: int = 64):
    """Taylor coefficients (in z = p - 1/2) of C_0 .. C_4."""
    with mpmath.workdps(60):
        return _rs_coefficients_mp(degree)


def _rs_coefficients_mp(degree):
    n = degree + 16
    pi = mpmath.pi
    # -cos(2 pi z^2 - 5 pi / 8) and cos(2 pi z) as power series in z
    c, s = mpmath.cos(5 * pi / 8), mpmath.sin(5 * pi / 8)
    num = [mpmath.mpf(0)] * n
    for j in range(0, n, 2):
        k = j // 2
        # cos(u - 5pi/8) = cos u cos(5pi/8) + sin u sin(5pi/8), u = 2 pi z^2
        coef = (2 * pi) ** k / mpmath.factorial(k)
        trig = c if k % 4 == 0 else (s if k % 4 == 1 else (-c if k % 4 == 2 else -s))
        num[j] = -coef * trig
    den = [mpmath.mpf(0)] * n
    for j in range(0, n, 2):
        den[j] = (-1) ** (j // 2) * (2 * pi) ** j / mpmath.factorial(j)
    psi = [mpmath.mpf(0)] * n
    for j in range(n):
        acc = num[j] - sum(psi[i] * den[j - i] for i in range(j))
        psi[j] = acc / den[0]

    def deriv(d):
        return [psi[j + d] * mpmath.factorial(j + d) / mpmath.factorial(j) if j + d < n else mpmath.mpf(0)
                for j in range(degree)]

    D = {d: deriv(d) for d in (0, 1, 2, 3, 4, 5, 6, 8, 9, 12)}

    def comb(*terms):
        return np.array([float(sum(w * D[d][j] for w, d in terms)) for j in range(degree)])

    p2, p4, p6, p8 = pi ** 2, pi ** 4, pi ** 6, pi ** 8
    return [
        comb((1, 0)),
        comb((-1 / (96 * p2), 3)),
        comb((1 / (64 * p2), 2), (1 / (18432 * p4), 6)),
        comb((-1 / (64 * p2), 1), (-1 / (3840 * p4), 5), (-1 / (5308416 * p6), 9)),
        comb((1 / (128 * p2), 0), (mpmath.mpf(19) / (24576 * p4), 4), (mpmath.mpf(11) / (5898240 * p6), 8),
             (1 / (2038431744 * p8), 12)),
    ]


@lru_cache(maxsize=1)
def _rs_coefficient_bounds():
    z = np.linspace(-0.5, 0.5, 2001)
    return [float(np.max(np.abs(np.polynomial.polynomial.polyval(z, c)))) for c in _rs_coefficients()]


def _rs_zeta(t, order: int):
    """Z(t) by Riemann-Siegel for t > 0 (array)."""
    a = np.sqrt(t / _TWO_PI)
    N = np.floor(a)
    p = a - N
    theta = _theta_asymptotic(t)
    nmax = int(N.max()) if t.size else 0
    n = np.arange(1, nmax + 1, dtype=float)
    logn = np.log(n)
    w = 1.0 / np.sqrt(n)
    main = np.empty_like(t)
    rows = max(1, _CHUNK_ELEMS // max(nmax, 1))
    for i in range(0, t.size, rows):
        sl = slice(i, i + rows)
        ph = theta[sl, None] - t[sl, None] * logn[None, :]
        terms = np.cos(ph) * w
        terms[n[None, :] > N[sl, None]] = 0.0
        main[sl] = 2.0 * terms.sum(axis=1)
    z = p - 0.5
    r = np.sqrt(_TWO_PI / t)
    coeffs = _rs_coefficients()
    rem = np.zeros_like(t)
    rk = np.ones_like(t)
    for k in range(min(order, 4) + 1):
        rem += np.polynomial.polynomial.polyval(z, coeffs[k]) * rk
        rk = rk * r
    sign = np.where(N % 2 == 1, 1.0, -1.0)
    return main + sign * r ** 0.5 * rem


def _rs_error_estimate(t, order: int) -> float:
    k = min(order, 4)
    bound = _rs_coefficient_bounds()[k]
    return bound * (_TWO_PI / t) ** (0.25 + (k + 1) / 2)


# ---------------------------------------------------------------------------
# Euler-Maclaurin on the Hurwitz decomposition

@lru_cache(maxsize=8)
def _em_coefficients(K: int):
    b = special.bernoulli(2 * K)
    return np.array([b[2 * k] / math.factorial(2 * k) for k in range(1, K + 1)])


def _em_dirichlet(sigma, t, q: int, chi_vals, K: int):
    """L(sigma + it, chi) for an array of t by Euler-Maclaurin.

    ``sigma`` is a scalar or an array shaped like ``t``.  Also returns the
    largest magnitude of the last tail term, a truncation estimate.
    """
    t = np.asarray(t, dtype=float)
    sig_all = np.broadcast_to(np.asarray(sigma, dtype=float), t.shape)
    scalar_sigma = np.ndim(sigma) == 0
    out = np.empty(t.size, dtype=complex)
    if not t.size:
        return out, 0.0
    order = np.argsort(np.abs(t), kind="stable")
    bk = _em_coefficients(K)
    chi_vals = np.asarray(chi_vals, dtype=complex)
    worst = 0.0
    i = 0
    while i < t.size:
        idx = order[i:i + 256]
        tmax = float(np.max(np.abs(t[idx])))
        M = int(math.ceil(0.25 * tmax)) + 15
        m = np.arange(1, q * M + 1)
        cm = chi_vals[m % q]
        nz = cm != 0
        m, cm = m[nz], cm[nz]
        logm = np.log(m.astype(float))
        rows = max(1, min(256, _CHUNK_ELEMS // max(m.size, 1)))
        idx = idx[:rows]
        tt = t[idx]
        sg = sig_all[idx]
        ph = np.outer(tt, logm)
        C, S = np.cos(ph), np.sin(ph)
        if scalar_sigma:
            wm = cm * np.exp(-float(sigma) * logm)
            main = (C @ wm.real + S @ wm.imag) + 1j * (C @ wm.imag - S @ wm.real)
        else:
            amp = np.exp(-np.outer(sg, logm))
            main = ((C - 1j * S) * amp) @ cm
        s = sg + 1j * tt
        tail = np.zeros(tt.size, dtype=complex)
        for a in range(1, q + 1):
            ca = chi_vals[a % q]
            if ca == 0:
                continue
            x = M + a / q
            xs = np.exp(-s * math.log(x))
            acc = x * xs / (s - 1) + 0.5 * xs
            r = s * xs / x
            last = np.zeros(tt.size)
            for k in range(K):
                term = bk[k] * r
                acc += term
                last = np.abs(term)
                r = r * (s + 2 * k + 1) * (s + 2 * k + 2) / (x * x)
            tail += ca * acc
            worst = max(worst, float(np.max(last)) * abs(ca))
        out[idx] = main + np.exp(-s * math.log(q)) * tail
        i += idx.size
    return out, worst


# ---------------------------------------------------------------------------
# rotated L-functions

class _ZFunction:
    """Real rotation Z(t) = exp(i theta(t)) L(1/2 + it) for zeta or a primitive character."""

    def __init__(self, chi: DirichletCharacter, cfg: ZFunctionConfig):
        self.chi = chi
        self.cfg = cfg
        self.q = chi.modulus
        self.is_zeta = chi.modulus == 1
        self.a = chi.parity
        self.vals = np.array(chi.values, dtype=complex)
        if self.is_zeta:
            self.phi = 0.0
        else:
            w = chi.gauss_sum() / (1j ** self.a * math.sqrt(self.q))
            self.phi = math.atan2(w.imag, w.real)

    def theta(self, t):
        if self.is_zeta:
            return _zeta_theta(t)
        return _theta_exact(t, self.q, self.a, self.phi)

    def theta_prime(self, t):
        return _theta_prime(t, self.q, self.a)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        workers = max(1, self.cfg.workers)
        if workers > 1 and t.size > 512:
            parts = np.array_split(t, workers)
            with ThreadPoolExecutor(workers) as ex:
                return np.concatenate(list(ex.map(self._eval, parts)))
        return self._eval(t)

    def _eval(self, t):
        cfg = self.cfg
        at = np.abs(t)
        out = np.empty_like(at)
        if self.is_zeta:
            rs = at >= cfg.em_cutoff
            if np.any(rs):
                out[rs] = _rs_zeta(at[rs], cfg.term_budget)
                est = _rs_error_estimate(float(at[rs].min()), cfg.term_budget)
                if est > cfg.refine_tolerance:
                    warnings.warn(f"Riemann-Siegel remainder estimate {est:.2e} exceeds tolerance",
                                  PrecisionWarning, stacklevel=3)
            em = ~rs
            tt = at[em]
        else:
            em = np.ones(at.shape, dtype=bool)
            tt = t
        if np.any(em):
            L, err = _em_dirichlet(0.5, tt, self.q, self.vals, cfg.em_terms)
            z = np.exp(1j * self.theta(tt)) * L
            out[em] = z.real
            if err > cfg.refine_tolerance:
                warnings.warn(f"Euler-Maclaurin truncation {err:.2e} exceeds tolerance",
                              PrecisionWarning, stacklevel=3)
        return out

    # counting -------------------------------------------------------------

    @cached_property
    def _arg_half(self) -> float:
        return self._arg_at_half()

    @cached_property
    def count_offset(self) -> int:
        """c such that N(g_m) = m + c at good Gram points."""
        if self.is_zeta:
            return 1
        return -int(round((float(self.theta(0.0)) + self._arg_half) / math.pi))

    def _arg_at_half(self) -> float:
        # arg L(sigma) followed continuously from sigma = 12 (where L ~ 1) down to 1/2
        sig = np.linspace(12.0, 0.5, 400)
        vals, _ = _em_dirichlet(sig, np.zeros(sig.size), self.q, self.vals, self.cfg.em_terms)
        return float(np.unwrap(np.angle(vals))[-1])

    def count(self, T) -> float:
        if self.is_zeta:
            return float(self.theta(T)) / math.pi + 1.0
        return (float(self.theta(T)) - float(self.theta(0.0)) - self._arg_half) / math.pi

    # Gram points ----------------------------------------------------------

    @cached_property
    def stationary_point(self) -> float:
        f = self.theta_prime
        if f(0.0) >= 0:
            return 0.0
        lo, hi = 0.0, 1.0
        while f(hi) < 0:
            hi *= 2
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return hi

    def gram(self, m):
        m = np.asarray(m, dtype=float)
        target = m * math.pi
        c = np.maximum((m + 0.125) / math.e, 1e-3)
        t = np.maximum(_TWO_PI * math.e * c / special.lambertw(c).real / max(self.q, 1) ** 0.5,
                       self.stationary_point + 1.0)
        lo = self.stationary_point
        for _ in range(100):
            step = (self.theta(t) - target) / self.theta_prime(t)
            t_new = np.maximum(t - step, 0.5 * (t + lo))
            if np.all(np.abs(t_new - t) <= 1e-13 * np.maximum(1.0, t)):
                t = t_new
                break
            t = t_new
        return t


def _zfunction(chi: Optional[DirichletCharacter], cfg: ZFunctionConfig) -> _ZFunction:
    if chi is None:
        chi = trivial_character()
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive")
    if chi.modulus > cfg.max_conductor:
        raise ValueError(f"conductor {chi.modulus} above budget {cfg.max_conductor}")
    return _ZFunction(chi, cfg)


# ---------------------------------------------------------------------------
# public evaluators

def hardy_z(t, cfg: Optional[ZFunctionConfig] = None):
    """Z(t) = exp(i theta(t)) zeta(1/2 + it); even in t by construction."""
    cfg = cfg or DEFAULT_CONFIG
    arr = np.abs(np.asarray(t, dtype=float))
    out = _zfunction(None, cfg)(arr.ravel()).reshape(arr.shape)
    return float(out) if np.ndim(t) == 0 else out


def lfunc_z(chi: DirichletCharacter, t, cfg: Optional[ZFunctionConfig] = None):
    """Real rotated value exp(i theta_chi(t)) L(1/2 + it, chi), root-number phase removed."""
    cfg = cfg or DEFAULT_CONFIG
    arr = np.asarray(t, dtype=float)
    out = _zfunction(chi, cfg)(arr.ravel()).reshape(arr.shape)
    return float(out) if np.ndim(t) == 0 else out


def lfunc_theta(chi: DirichletCharacter, t, cfg: Optional[ZFunctionConfig] = None):
    return _zfunction(chi, cfg or DEFAULT_CONFIG).theta(t)


def count_zeros(T: float) -> float:
    """Smooth zero count theta(T)/pi + 1 for zeta."""
    if not T > 0:
        raise ValueError("T must be positive")
    if T < THETA_MIN_T:
        return 0.0
    return float(_zeta_theta(T)) / math.pi + 1.0


def count_dirichlet_zeros(chi: DirichletCharacter, T: float, cfg: Optional[ZFunctionConfig] = None) -> float:
    """Smooth count of zeros of L(s, chi) with 0 < gamma <= T."""
    if not T > 0:
        raise ValueError("T must be positive")
    return _zfunction(chi, cfg or DEFAULT_CONFIG).count(T)


# ---------------------------------------------------------------------------
# zero search

def _sign(z):
    s = np.sign(z)
    s[s == 0] = 1.0
    return s


def _complete_block(f, ts, zs, expected, max_depth):
    """Subdivide the samples until they show ``expected`` sign changes."""
    for _ in range(max_depth + 1):
        changes = int(np.count_nonzero(_sign(zs[1:]) != _sign(zs[:-1])))
        if changes == expected:
            return ts, zs
        if changes > expected:
            raise BracketingError(
                f"{changes} sign changes on [{ts[0]:.9g}, {ts[-1]:.9g}], expected {expected}",
                (float(ts[0]), float(ts[-1])))
        mid = 0.5 * (ts[1:] + ts[:-1])
        zm = f(mid)
        nt = np.empty(ts.size + mid.size)
        nz = np.empty_like(nt)
        nt[0::2], nt[1::2] = ts, mid
        nz[0::2], nz[1::2] = zs, zm
        ts, zs = nt, nz
    raise BracketingError(
        f"could not separate {expected} zeros on [{ts[0]:.9g}, {ts[-1]:.9g}]",
        (float(ts[0]), float(ts[-1])))


def _illinois(f, a, b, fa, fb, tol, max_iter=200):
    """Vectorized Illinois regula falsi with bisection safeguard."""
    a, b, fa, fb = (np.array(v, dtype=float) for v in (a, b, fa, fb))
    side = np.zeros(a.size, dtype=int)
    prev_w = b - a
    active = np.abs(b - a) > tol
    for it in range(max_iter):
        idx = np.flatnonzero(active)
        if not idx.size:
            break
        A, B, FA, FB = a[idx], b[idx], fa[idx], fb[idx]
        c = B - FB * (B - A) / (FB - FA)
        w = B - A
        bisect = (it % 4 == 3) & (w > 0.5 * prev_w[idx])
        bad = ~np.isfinite(c) | (c <= np.minimum(A, B)) | (c >= np.maximum(A, B)) | bisect
        c = np.where(bad, 0.5 * (A + B), c)
        if it % 4 == 3:
            prev_w[idx] = w
        fc = f(c)
        same = _sign(fc) == _sign(FB)
        # root in [A, c]: replace B, maybe halve FA
        a_new = np.where(same, A, B)
        fa_new = np.where(same, FA, FB)
        fa_new = np.where(same & (side[idx] == 1), 0.5 * fa_new, fa_new)
        side[idx] = np.where(same, 1, -1)
        a[idx], fa[idx], b[idx], fb[idx] = a_new, fa_new, c, fc
        done = (np.abs(b[idx] - a[idx]) <= tol) | (fc == 0)
        active[idx[done]] = False
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    flo = np.where(a < b, fa, fb)
    fhi = np.where(a < b, fb, fa)
    denom = fhi - flo
    x = np.where(denom != 0, lo - flo * (hi - lo) / np.where(denom != 0, denom, 1), 0.5 * (lo + hi))
    x = np.where(np.abs(fb) == 0, b, x)
    return np.clip(x, lo, hi)


def _scan(zf: _ZFunction, cfg: ZFunctionConfig, n: Optional[int] = None, t_max: Optional[float] = None):
    """Positive zeros: the first n, or all in (0, t_max]."""
    if n is not None and n <= 0:
        return np.empty(0)
    t_lo = THETA_MIN_T if zf.is_zeta else 0.0
    if t_max is not None and t_max <= t_lo:
        return np.empty(0)
    c = zf.count_offset
    m0 = int(math.floor(float(zf.theta(zf.stationary_point)) / math.pi)) + 1
    if n is not None:
        m_hi = n - c + 8
    else:
        m_hi = int(math.ceil(float(zf.theta(t_max)) / math.pi)) + 8
    m_hi = max(m_hi, m0 + 8)

    ms = np.arange(m0, m_hi + 1)
    gs = zf.gram(ms)
    zg = zf(gs)
    while True:
        good = np.flatnonzero(_sign(zg) * np.where(ms % 2 == 0, 1.0, -1.0) > 0)
        last = good[-1] if good.size else -1
        ok = last >= 0 and ((n is not None and ms[last] + c >= n) or (t_max is not None and gs[last] >= t_max))
        if ok:
            break
        extra = np.arange(ms[-1] + 1, ms[-1] + 1 + max(16, ms.size // 4))
        ge = zf.gram(extra)
        ms, gs, zg = np.concatenate([ms, extra]), np.concatenate([gs, ge]), np.concatenate([zg, zf(ge)])

    first = good[0]
    # opening stretch [t_lo, g_first]: dense samples before the first Gram point
    g0 = gs[0]
    pre_t = np.linspace(t_lo, g0, max(2, int(math.ceil((g0 - t_lo) / 0.05)) + 1))[:-1]
    open_t = np.concatenate([pre_t, gs[:first + 1]])
    open_z = np.concatenate([zf(pre_t), zg[:first + 1]])
    blocks = [(open_t, open_z, int(ms[first] + c))]

    # stretches between consecutive good Gram points, vectorized where counts already agree
    flips = _sign(zg[1:]) != _sign(zg[:-1])
    cum = np.concatenate([[0], np.cumsum(flips)])
    used = good[good <= last]
    starts, ends = used[:-1], used[1:]
    found = cum[ends] - cum[starts]
    expected = ms[ends] - ms[starts]
    blo, bhi = [], []

    def collect(ts, zs):
        ch = np.flatnonzero(_sign(zs[1:]) != _sign(zs[:-1]))
        blo.append(np.stack([ts[ch], zs[ch]]))
        bhi.append(np.stack([ts[ch + 1], zs[ch + 1]]))

    ts, zs = _complete_block(zf, blocks[0][0], blocks[0][1], blocks[0][2], cfg.max_subdivision + 4)
    collect(ts, zs)
    fine = found == expected
    fine_mask = np.zeros(gs.size - 1, dtype=bool)
    for s_, e_ in zip(starts[fine], ends[fine]):
        fine_mask[s_:e_] = True
    ch = np.flatnonzero(flips & fine_mask)
    fine_lo = np.stack([gs[ch], zg[ch]])
    fine_hi = np.stack([gs[ch + 1], zg[ch + 1]])
    for s_, e_, k in zip(starts[~fine], ends[~fine], expected[~fine]):
        ts, zs = _complete_block(zf, gs[s_:e_ + 1], zg[s_:e_ + 1], int(k), cfg.max_subdivision)
        collect(ts, zs)
    lo = np.concatenate(blo + [fine_lo], axis=1)
    hi = np.concatenate(bhi + [fine_hi], axis=1)
    order = np.argsort(lo[0], kind="stable")
    lo, hi = lo[:, order], hi[:, order]
    total = int(ms[last] + c)
    if lo.shape[1] != total:
        raise BracketingError(f"found {lo.shape[1]} zeros below g_{ms[last]}, expected {total}",
                              (float(t_lo), float(gs[last])))
    if n is not None:
        lo, hi = lo[:, :n], hi[:, :n]
    else:
        keep = lo[0] < t_max
        lo, hi = lo[:, keep], hi[:, keep]
    roots = np.empty(lo.shape[1])
    step = 4096
    for i in range(0, roots.size, step):
        sl = slice(i, i + step)
        roots[sl] = _illinois(zf, lo[0, sl], hi[0, sl], lo[1, sl], hi[1, sl], cfg.refine_tolerance)
    if t_max is not None:
        roots = roots[roots <= t_max]
    return roots


def find_riemann_zeros(n: Optional[int] = None, cfg: Optional[ZFunctionConfig] = None, *,
                       t_max: Optional[float] = None) -> ZeroSequence:
    """First n zeta zeros (1-based γ_1 = 14.1347...), or all zeros up to t_max."""
    cfg = cfg or DEFAULT_CONFIG
    if (n is None) == (t_max is None):
        raise ValueError("give exactly one of n or t_max")
    zf = _zfunction(None, cfg)
    roots = _scan(zf, cfg, n=n, t_max=t_max)
    src = {"kind": "computed", "function": "zeta", "n": n, "t_max": t_max,
           "term_budget": cfg.term_budget, "refine_tolerance": cfg.refine_tolerance}
    return ZeroSequence(roots, False, src)


def riemann_zeros_up_to(t_max: float, cfg: Optional[ZFunctionConfig] = None) -> ZeroSequence:
    return find_riemann_zeros(None, cfg, t_max=t_max)


def find_dirichlet_zeros(chi: DirichletCharacter, n_pos: int, n_neg: int = 0,
                         cfg: Optional[ZFunctionConfig] = None) -> ZeroSequence:
    """Signed sequence with the first n_pos positive and n_neg negative ordinates of L(s, chi)."""
    cfg = cfg or DEFAULT_CONFIG
    if n_neg and chi.is_real:
        raise ValueError("real characters have symmetric zeros; ask for n_neg = 0")
    pos = _scan(_zfunction(chi, cfg), cfg, n=n_pos) if n_pos else np.empty(0)
    neg = _scan(_zfunction(chi.conjugate(), cfg), cfg, n=n_neg) if n_neg else np.empty(0)
    src = {"kind": "computed", "function": f"L[{chi.modulus},{chi.index}]", "n_pos": n_pos, "n_neg": n_neg,
           "refine_tolerance": cfg.refine_tolerance}
    return ZeroSequence(np.concatenate([-neg[::-1], pos]), True, src)


def dirichlet_zeros_up_to(chi: DirichletCharacter, t_max: float,
                          cfg: Optional[ZFunctionConfig] = None) -> ZeroSequence:
    """Positive zeros of L(s, chi) in (0, t_max] (unsigned)."""
    cfg = cfg or DEFAULT_CONFIG
    if chi.modulus == 1:
        return riemann_zeros_up_to(t_max, cfg)
    roots = _scan(_zfunction(chi, cfg), cfg, t_max=t_max)
    return ZeroSequence(roots, False, {"kind": "computed", "function": f"L[{chi.modulus},{chi.index}]",
                                       "t_max": t_max})


def zero_residuals(f: Callable, seq: ZeroSequence) -> np.ndarray:
    return np.abs(f(seq.ordinates))
