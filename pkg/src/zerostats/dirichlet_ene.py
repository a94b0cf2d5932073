"""Dirichlet characters and the ene product on degree-one Euler products.

Characters are stored exactly: a value chi(n) = exp(2 pi i r) is kept as the
rational angle ``r`` in [0, 1), so products, conjugates and reductions to the
primitive inducing character never touch floating point.

Ordering of ``characters_mod(q)``: the unit group (Z/qZ)^* is split over the
prime powers of q in increasing order.  An odd prime power p^e contributes one
generator (the least primitive root mod p^e); 4 contributes -1; 2^e with e >= 3
contributes -1 and 5, in that order.  Each generator is lifted to q by CRT.
A character is the tuple of exponents (b_1, ..., b_r) with chi(g_i) =
exp(2 pi i b_i / ord(g_i)), and characters are listed in lexicographic order of
that tuple.  Index 1 is always the principal character.  With this ordering
(7, 3) is the order-3 character with chi(3) = exp(2 pi i / 3), (3, 2) is the
quadratic character mod 3 and (12, 4) the primitive quadratic character mod 12.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Optional

import sympy

MAX_MODULUS = 10_000
HALF = Fraction(1, 2)


class CharacterError(ValueError):
    pass


class UnsupportedFactorError(ValueError):
    pass


# ---------------------------------------------------------------------------
# unit group structure

@dataclass(frozen=True)
class _Component:
    prime: int
    power: int          # p^e
    generators: tuple   # generator residues mod p^e
    orders: tuple
    logs: dict          # residue mod p^e -> tuple of exponents


@lru_cache(maxsize=None)
def _prime_power_component(p: int, e: int) -> _Component:
    pe = p ** e
    if p == 2:
        if e == 1:
            return _Component(2, 2, (), (), {1: ()})
        if e == 2:
            return _Component(2, 4, (3,), (2,), {1: (0,), 3: (1,)})
        m = 2 ** (e - 2)
        logs = {}
        for a in range(2):
            x = 1
            for k in range(m):
                logs[(x if a == 0 else -x) % pe] = (a, k)
                x = x * 5 % pe
        return _Component(2, pe, (pe - 1, 5), (2, m), logs)
    g = int(sympy.primitive_root(pe))
    order = pe - pe // p
    logs = {}
    x = 1
    for k in range(order):
        logs[x] = (k,)
        x = x * g % pe
    return _Component(p, pe, (g,), (order,), logs)


@dataclass(frozen=True)
class UnitGroup:
    """(Z/qZ)^* as a product of cyclic groups with explicit generators."""

    modulus: int
    components: tuple

    @property
    def orders(self) -> tuple:
        return tuple(o for c in self.components for o in c.orders)

    @cached_property
    def generators(self) -> tuple:
        q = self.modulus
        gens = []
        for c in self.components:
            rest = q // c.power
            for g in c.generators:
                # x = g mod p^e, x = 1 mod q/p^e
                x = (g * rest * pow(rest, -1, c.power) + c.power * pow(c.power, -1, rest)) % q if rest > 1 else g % q
                gens.append(x)
        return tuple(gens)

    def log(self, n: int) -> Optional[tuple]:
        """Exponent vector of n on the generators, or None if gcd(n, q) > 1."""
        if math.gcd(n, self.modulus) != 1:
            return None
        out = []
        for c in self.components:
            out.extend(c.logs[n % c.power])
        return tuple(out)


@lru_cache(maxsize=8192)
def unit_group(q: int) -> UnitGroup:
    if q < 1:
        raise CharacterError(f"modulus must be >= 1, got {q}")
    comps = tuple(_prime_power_component(p, e) for p, e in sorted(sympy.factorint(q).items()))
    return UnitGroup(q, comps)


# ---------------------------------------------------------------------------
# characters

@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    exponents: tuple
    index: int = field(default=0, compare=False)

    def __post_init__(self):
        orders = unit_group(self.modulus).orders
        if len(self.exponents) != len(orders) or any(not 0 <= b < o for b, o in zip(self.exponents, orders)):
            raise CharacterError(f"bad exponent vector {self.exponents} for modulus {self.modulus}")

    def __repr__(self):
        return f"DirichletCharacter({self.label})"

    @property
    def label(self) -> str:
        idx = self.index or self._stable_index()
        return f"chi_{self.modulus}.{idx}"

    def _stable_index(self) -> int:
        orders = unit_group(self.modulus).orders
        idx = 0
        for b, o in zip(self.exponents, orders):
            idx = idx * o + b
        return idx + 1

    @property
    def group(self) -> UnitGroup:
        return unit_group(self.modulus)

    def angle(self, n: int) -> Optional[Fraction]:
        """chi(n) = exp(2 pi i * angle), None when gcd(n, q) > 1."""
        logs = self.group.log(n % self.modulus)
        if logs is None:
            return None
        r = sum((Fraction(b * k, o) for b, k, o in zip(self.exponents, logs, self.group.orders)), Fraction(0))
        return r - math.floor(r)

    def __call__(self, n: int) -> complex:
        a = self.angle(n)
        if a is None:
            return 0j
        return _root_of_unity(a)

    @cached_property
    def values(self) -> tuple:
        """Complex values chi(0), ..., chi(q - 1)."""
        return tuple(self(n) for n in range(self.modulus))

    @cached_property
    def angles(self) -> tuple:
        return tuple(self.angle(n) for n in range(self.modulus))

    @cached_property
    def conductor(self) -> int:
        f = 1
        i = 0
        for c in self.group.components:
            bs = self.exponents[i:i + len(c.orders)]
            i += len(c.orders)
            f *= _component_conductor(c, bs)
        return f

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    @property
    def is_principal(self) -> bool:
        return all(b == 0 for b in self.exponents)

    @property
    def is_real(self) -> bool:
        return all(a is None or a in (0, HALF) for a in self.angles)

    @property
    def parity(self) -> int:
        """0 for even characters, 1 for odd ones."""
        if self.modulus <= 2:
            return 0
        return 0 if self.angle(self.modulus - 1) == 0 else 1

    @property
    def order(self) -> int:
        return math.lcm(*(o // math.gcd(b, o) for b, o in zip(self.exponents, self.group.orders)), 1)

    def conjugate(self) -> "DirichletCharacter":
        orders = self.group.orders
        return _with_index(DirichletCharacter(self.modulus, tuple((-b) % o for b, o in zip(self.exponents, orders))))

    def primitive(self) -> "DirichletCharacter":
        """The primitive character inducing this one."""
        f = self.conductor
        if f == self.modulus:
            return self
        q = self.modulus

        def lift(r):
            n = r
            while math.gcd(n, q) != 1:
                n += f
            return self.angle(n)

        return from_angles(f, lift, check=False)

    def gauss_sum(self) -> complex:
        q = self.modulus
        return sum(self(n) * cmath.exp(2j * math.pi * n / q) for n in range(1, q + 1))


def _root_of_unity(a: Fraction) -> complex:
    if a == 0:
        return 1 + 0j
    if a == HALF:
        return -1 + 0j
    if a == Fraction(1, 4):
        return 1j
    if a == Fraction(3, 4):
        return -1j
    return cmath.exp(2j * math.pi * float(a))


def _component_conductor(c: _Component, bs: tuple) -> int:
    p = c.prime
    if p == 2:
        if c.power <= 2:
            return 1
        if c.power == 4:
            return 4 if bs[0] else 1
        m = c.orders[1]
        d = m // math.gcd(bs[1], m)
        if d > 1:
            return 2 ** (2 + _valuation(d, 2))
        return 4 if bs[0] else 1
    o = c.orders[0]
    d = o // math.gcd(bs[0], o)
    if d == 1:
        return 1
    return p ** (1 + _valuation(d, p))


def _valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _with_index(chi: DirichletCharacter) -> DirichletCharacter:
    return DirichletCharacter(chi.modulus, chi.exponents, chi._stable_index())


def from_angles(q: int, angle_of: Callable[[int], Fraction], check: bool = True) -> DirichletCharacter:
    """Build the character mod q whose value at each generator is given by ``angle_of``.

    ``angle_of`` must describe a genuine character; with ``check`` the result
    is compared with it on every unit.
    """
    g = unit_group(q)
    bs = []
    for gen, o in zip(g.generators, g.orders):
        a = Fraction(angle_of(gen)) * o
        if a.denominator != 1:
            raise CharacterError(f"value at generator {gen} is not an {o}-th root of unity")
        bs.append(int(a) % o)
    chi = _with_index(DirichletCharacter(q, tuple(bs)))
    if not check:
        return chi
    for n in range(q):
        if math.gcd(n, q) == 1:
            a = Fraction(angle_of(n))
            if (a - chi.angle(n)).denominator != 1:
                raise CharacterError(f"function is not multiplicative mod {q} (at n={n})")
    return chi


def characters_mod(q: int) -> list:
    """All phi(q) characters mod q in the documented stable order."""
    if q < 1:
        raise CharacterError(f"modulus must be >= 1, got {q}")
    if q > MAX_MODULUS:
        raise CharacterError(f"modulus {q} exceeds budget {MAX_MODULUS}")
    orders = unit_group(q).orders
    return [DirichletCharacter(q, bs, i + 1)
            for i, bs in enumerate(itertools.product(*(range(o) for o in orders)))]


def character(q: int, index: int) -> DirichletCharacter:
    """Character number ``index`` (1-based) in the ordering of ``characters_mod(q)``."""
    orders = unit_group(q).orders
    total = math.prod(orders)
    if not 1 <= index <= total:
        raise CharacterError(f"index {index} out of range 1..{total} for modulus {q}")
    bs = []
    rest = index - 1
    for o in reversed(orders):
        bs.append(rest % o)
        rest //= o
    return DirichletCharacter(q, tuple(reversed(bs)), index)


def trivial_character() -> DirichletCharacter:
    return DirichletCharacter(1, (), 1)


def primitive_characters(conductor: int) -> list:
    return [chi for chi in characters_mod(conductor) if chi.is_primitive]


def mul_conj(chi1: DirichletCharacter, chi2: DirichletCharacter) -> DirichletCharacter:
    """Primitive character inducing chi1 * conj(chi2)."""
    for chi in (chi1, chi2):
        if not chi.is_primitive:
            raise CharacterError(f"{chi.label} is not primitive")
    return _product(chi1, chi2.conjugate())


def _product(chi1: DirichletCharacter, chi2: DirichletCharacter) -> DirichletCharacter:
    q1, q2 = chi1.modulus, chi2.modulus
    q = math.lcm(q1, q2)

    def angle(n):
        return chi1.angle(n % q1) + chi2.angle(n % q2)

    # products of characters are characters, so the unit-by-unit check is skipped
    return from_angles(q, angle, check=False).primitive()


# ---------------------------------------------------------------------------
# ene product

@dataclass(frozen=True)
class LocalFactor:
    """(1 - c p^{-s})^exponent with c = exp(2 pi i root) * p^{-weight}."""

    prime: int
    root: Fraction = Fraction(0)
    weight: Fraction = Fraction(0)
    exponent: int = -1

    def __post_init__(self):
        if self.exponent not in (-1, 1):
            raise UnsupportedFactorError(f"exponent must be +1 or -1, got {self.exponent}")
        if not sympy.isprime(self.prime):
            raise ValueError(f"{self.prime} is not prime")
        object.__setattr__(self, "root", Fraction(self.root) % 1)
        object.__setattr__(self, "weight", Fraction(self.weight))

    @property
    def coefficient(self) -> complex:
        return _root_of_unity(self.root) * self.prime ** (-float(self.weight))

    def conjugate(self) -> "LocalFactor":
        return LocalFactor(self.prime, -self.root, self.weight, self.exponent)

    def render(self, power: Optional[int] = None) -> str:
        power = self.exponent if power is None else power
        arg = "-s" if self.weight == 0 else f"-{self.weight}-s"
        if self.root == 0:
            body = f"1 - {self.prime}^({arg})"
        elif self.root == HALF:
            body = f"1 + {self.prime}^({arg})"
        else:
            body = f"1 - e({self.root})*{self.prime}^({arg})"
        return f"({body})" if power == 1 else f"({body})^-1"


def ene_local(f: Optional[LocalFactor], g: Optional[LocalFactor]) -> Optional[LocalFactor]:
    """Ene product of two degree-one local factors; None stands for the unit."""
    if f is None or g is None or f.prime != g.prime:
        return None
    return LocalFactor(f.prime, f.root + g.root, f.weight + g.weight + HALF, f.exponent * g.exponent)


@dataclass(frozen=True)
class EulerProductSymbol:
    """A formal Euler product: optional global L-function part times per-prime overrides.

    The global part is prod_{p not dividing f} (1 - chi(p) p^{-shift} p^{-s})^exponent,
    i.e. L_chi(s + shift)^{-exponent}.  ``corrections`` replaces the local
    factor at finitely many primes (None meaning the factor is 1).  With no
    global part the symbol is the finite product of its corrections.
    """

    character: Optional[DirichletCharacter] = None
    exponent: int = -1
    shift: Fraction = Fraction(0)
    corrections: tuple = ()

    def __post_init__(self):
        if self.character is not None and not self.character.is_primitive:
            raise CharacterError("global part must use a primitive character")
        primes = [p for p, _ in self.corrections]
        if len(set(primes)) != len(primes):
            raise UnsupportedFactorError("at most one local factor per prime")
        object.__setattr__(self, "shift", Fraction(self.shift))
        object.__setattr__(self, "corrections", tuple(sorted(self.corrections, key=lambda pc: pc[0])))

    @property
    def kind(self) -> str:
        if self.character is None:
            return "finite_factor_set"
        if self.character.conductor == 1:
            return "zeta"
        return "full_l_function"

    def global_factor(self, p: int) -> Optional[LocalFactor]:
        if self.character is None:
            return None
        a = self.character.angle(p % self.character.modulus)
        if a is None:
            return None
        return LocalFactor(p, a, self.shift, self.exponent)

    def local_factor(self, p: int) -> Optional[LocalFactor]:
        for q, f in self.corrections:
            if q == p:
                return f
        return self.global_factor(p)

    def conjugate(self) -> "EulerProductSymbol":
        chi = None if self.character is None else self.character.conjugate()
        corr = tuple((p, None if f is None else f.conjugate()) for p, f in self.corrections)
        return EulerProductSymbol(chi, self.exponent, self.shift, corr)

    def render(self) -> str:
        parts = []
        if self.character is not None:
            arg = "s" if self.shift == 0 else f"s+{self.shift}"
            name = "zeta" if self.character.conductor == 1 else f"L_chi[{self.character.modulus},{self.character.index or self.character._stable_index()}]"
            parts.append(f"{name}({arg})" + ("" if self.exponent == -1 else "^-1"))
        for p, f in self.corrections:
            default = self.global_factor(p)
            if default is not None:
                parts.append(default.render(-default.exponent))
            if f is not None:
                parts.append(f.render())
        return " * ".join(parts) if parts else "1"

    def __str__(self):
        return self.render()


def zeta_symbol() -> EulerProductSymbol:
    return EulerProductSymbol(trivial_character())


def l_function(chi: DirichletCharacter) -> EulerProductSymbol:
    """L_chi as a symbol; an imprimitive chi becomes its primitive part with the missing factors removed."""
    prim = chi.primitive()
    corr = tuple((int(p), None) for p in sympy.primefactors(chi.modulus) if prim.modulus % p != 0)
    return EulerProductSymbol(prim, -1, Fraction(0), corr)


def euler_factor(p: int, chi: Optional[DirichletCharacter] = None) -> EulerProductSymbol:
    """The local factor (1 - chi(p) p^{-s})^{-1} on its own (chi defaults to 1)."""
    root = Fraction(0) if chi is None else chi.angle(p % chi.modulus)
    if root is None:
        raise ValueError(f"chi({p}) = 0, factor is trivial")
    return EulerProductSymbol(None, -1, Fraction(0), ((p, LocalFactor(p, root, 0, -1)),))


def ene_euler(F: EulerProductSymbol, G_conjugated: EulerProductSymbol) -> EulerProductSymbol:
    """Prime-by-prime ene product of two symbols (the second already conjugated)."""
    G = G_conjugated
    if F.character is not None and G.character is not None:
        psi = _product(F.character, G.character)
        result = EulerProductSymbol(psi, F.exponent * G.exponent, F.shift + G.shift + HALF)
        candidates = set(sympy.primefactors(F.character.modulus * G.character.modulus))
        candidates |= {p for p, _ in F.corrections} | {p for p, _ in G.corrections}
        corr = []
        for p in sorted(candidates):
            r = ene_local(F.local_factor(p), G.local_factor(p))
            if r != result.global_factor(p):
                corr.append((int(p), r))
        return EulerProductSymbol(psi, result.exponent, result.shift, tuple(corr))
    support = set()
    if F.character is None:
        support |= {p for p, _ in F.corrections}
    if G.character is None:
        support = {p for p, _ in G.corrections} if F.character is not None else support & {p for p, _ in G.corrections}
    corr = []
    for p in sorted(support):
        r = ene_local(F.local_factor(p), G.local_factor(p))
        if r is not None:
            corr.append((int(p), r))
    return EulerProductSymbol(None, -1, Fraction(0), tuple(corr))


# ---------------------------------------------------------------------------
# predictions

@dataclass(frozen=True)
class PredictedLine:
    kind: str                     # l_function_zeros | harmonic_comb | atom_at_zero
    order: str                    # primary | secondary
    character: Optional[DirichletCharacter] = None
    prime: Optional[int] = None

    @property
    def fundamental(self) -> Optional[float]:
        if self.prime is None:
            return None
        return 2 * math.pi / math.log(self.prime)

    def describe(self) -> str:
        if self.kind == "l_function_zeros":
            name = "Riemann zeros" if self.character.conductor == 1 else f"zeros of L_chi[{self.character.modulus},{self.character._stable_index()}]"
            return f"{name} ({self.order})"
        if self.kind == "harmonic_comb":
            return f"comb 2*pi*k/log {self.prime} = {self.fundamental:.6f}*k ({self.order})"
        return f"atom at 0 ({self.order})"


@dataclass(frozen=True)
class SpikePrediction:
    closed_form: EulerProductSymbol
    lines: tuple

    def locations(self, t_max: float, branch: str = "pos", cfg=None) -> list:
        """Predicted deficit locations in (0, t_max) as (location, line) pairs."""
        from . import zeta_engine

        out = []
        for line in self.lines:
            if line.kind == "atom_at_zero":
                out.append((0.0, line))
            elif line.kind == "harmonic_comb":
                f = line.fundamental
                out.extend((k * f, line) for k in range(1, int(t_max / f) + 1) if k * f < t_max)
            else:
                chi = line.character
                if chi.conductor == 1:
                    zs = zeta_engine.riemann_zeros_up_to(t_max, cfg)
                else:
                    target = chi if branch == "pos" else chi.conjugate()
                    zs = zeta_engine.dirichlet_zeros_up_to(target, t_max, cfg)
                out.extend((float(g), line) for g in zs.ordinates if g < t_max)
        out.sort(key=lambda x: x[0])
        return out


def predict_deltas(spec_a: EulerProductSymbol, spec_b: EulerProductSymbol) -> SpikePrediction:
    """Deficit lines expected in the mating statistic of the zeros of spec_a against spec_b."""
    form = ene_euler(spec_a, spec_b.conjugate())
    lines = []
    if form.character is not None:
        lines.append(PredictedLine("l_function_zeros", "primary", character=form.character))
    for p, _ in form.corrections:
        lines.append(PredictedLine("harmonic_comb", "secondary", prime=p))
    if form.character is not None and form.character.conductor == 1:
        lines.append(PredictedLine("atom_at_zero", "primary"))
    return SpikePrediction(form, tuple(lines))


def comb_fundamental(p: int) -> float:
    return 2 * math.pi / math.log(p)


def parse_symbol(text: str) -> EulerProductSymbol:
    """Parse 'zeta', 'L:q.i' (character i mod q) or 'f:p' (Euler factor at p)."""
    t = text.strip().lower()
    if t in ("zeta", "z", "riemann"):
        return zeta_symbol()
    if t.startswith("l:"):
        q, _, i = t[2:].partition(".")
        return l_function(character(int(q), int(i)))
    if t.startswith("f:"):
        return euler_factor(int(t[2:]))
    raise ValueError(f"cannot parse symbol {text!r}; use zeta, L:q.i or f:p")


def iter_primes(limit: int) -> Iterable[int]:
    return (int(p) for p in sympy.primerange(2, limit + 1))
