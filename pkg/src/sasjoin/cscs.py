"""Counting constant scalar curvature rays in the 2-dimensional w-cone of a join."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .exactmath import (
    Polynomial, discriminant, exact_divide, isolate_real_roots, rational_roots,
    sign_variations, sturm_count,
)
from .join import WeightPair

Rational = Union[int, Fraction]


class CscInputError(ValueError):
    pass


@dataclass(frozen=True)
class CscParams:
    d: int
    A_N: Fraction
    l: WeightPair
    w: WeightPair

    def __post_init__(self):
        if self.d < 1:
            raise CscInputError("base dimension d_N must be positive")
        if self.w.a0 <= self.w.ainf:
            raise CscInputError(f"need w0 > winf, got {self.w.pair}")
        object.__setattr__(self, "A_N", Fraction(self.A_N))


def _pairs(l, w) -> tuple[WeightPair, WeightPair]:
    return WeightPair.of(l), WeightPair.of(w)


def build_f(p: CscParams) -> Polynomial:
    """The degree ``2d + 4`` polynomial whose roots ``b != winf/w0`` give cscS rays."""
    d, A = p.d, p.A_N
    l0, li = p.l.a0, p.l.ainf
    w0, wi = p.w.a0, p.w.ainf
    b = Polynomial.x()
    t1 = b ** (2 * d + 3) * (A * li + l0 * (d + 1) * wi - b * ((d + 1) * l0 * w0)) * (w0 ** (2 * (d + 1)))
    t2 = b ** (d + 3) * ((d + 1) * (A * (d + 1) * li - l0 * ((d + 1) * w0 + (d + 2) * wi))) \
        * (w0 ** (d + 2) * wi ** d)
    t3 = b ** (d + 2) * (2 * A * d * (d + 2) * li - (d + 1) * (2 * d + 3) * l0 * (w0 + wi)) \
        * (w0 ** (d + 1) * wi ** (d + 1))
    t4 = b ** (d + 1) * ((d + 1) * (A * (d + 1) * li - l0 * ((d + 2) * w0 + (d + 1) * wi))) \
        * (w0 ** d * wi ** (d + 2))
    t5 = (b * (A * li + l0 * (d + 1) * w0) - (d + 1) * l0 * wi) * (wi ** (2 * (d + 1)))
    return t1 - t2 + t3 - t4 + t5


def f_d1_factored(l, w) -> Polynomial:
    """The closed form at d_N = 1: ``2(-b w0 + winf)^3 (b^3 l0 w0^2 + ...)``."""
    l, w = _pairs(l, w)
    l0, li, w0, wi = l.a0, l.ainf, w.a0, w.ainf
    cubic = Polynomial((-l0 * wi ** 2, -(2 * l0 * w0 * wi - li * wi), 2 * l0 * w0 * wi - li * w0, l0 * w0 ** 2))
    return Polynomial((wi, -w0)) ** 3 * cubic * 2


@dataclass(frozen=True)
class ANMatch:
    value: Fraction
    residual: Polynomial
    equations: int


def derive_AN_d1(l, w) -> ANMatch:
    """Solve for the ``A_N`` making the general polynomial equal the d_N = 1 closed form.

    ``f`` is affine in ``A_N``, so each coefficient gives one linear
    equation; the system is overdetermined and must be consistent.
    """
    l, w = _pairs(l, w)
    f0 = build_f(CscParams(1, Fraction(0), l, w))
    f1 = build_f(CscParams(1, Fraction(1), l, w)) - f0
    target = f_d1_factored(l, w) - f0
    value = None
    n = max(len(f1.coeffs), len(target.coeffs))
    for k in range(n):
        a = f1.coeffs[k] if k < len(f1.coeffs) else Fraction(0)
        t = target.coeffs[k] if k < len(target.coeffs) else Fraction(0)
        if a != 0:
            value = t / a
            break
    if value is None:
        raise ArithmeticError("A_N does not enter the polynomial")
    residual = f0 + f1 * value - f_d1_factored(l, w)
    if residual:
        raise ArithmeticError(f"no A_N matches the d_N=1 closed form; residual {residual}")
    return ANMatch(value, residual, n)


def reduced_g(l, w) -> Polynomial:
    """The cubic ``g`` with ``f = 2 (b w0 - winf)^3 g`` at d_N = 1."""
    l, w = _pairs(l, w)
    l0, li, w0, wi = l.a0, l.ainf, w.a0, w.ainf
    return Polynomial((l0 * wi ** 2, -(li - 2 * l0 * w0) * wi, (li - 2 * l0 * wi) * w0, -l0 * w0 ** 2))


def triple_factor(w) -> Polynomial:
    w = WeightPair.of(w)
    return Polynomial((-w.ainf, w.a0)) ** 3


def cofactor_after_triple_root(p: CscParams) -> Polynomial:
    """``f / (b w0 - winf)^3``; raises if the triple root is absent."""
    return exact_divide(build_f(p), triple_factor(p.w))


# --------------------------------------------------------------------------
# ray counting

@dataclass(frozen=True)
class Root:
    exact: Optional[Fraction]
    interval: tuple[Fraction, Fraction]
    multiplicity: int

    def to_json(self) -> dict:
        if self.exact is not None:
            return {"rational": str(self.exact), "multiplicity": self.multiplicity}
        return {"interval": [str(self.interval[0]), str(self.interval[1])], "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class RayCount:
    count: int
    roots: tuple[Root, ...]
    max_rays: int

    @property
    def quasi_regular_candidates(self) -> list[Fraction]:
        return [r.exact for r in self.roots if r.exact is not None]


def _multiplicity_in(p: Polynomial, a: Fraction, b: Fraction) -> int:
    # multiplicity of the unique root of p in (a, b]: count how many successive
    # derivatives still vanish there
    mult, q = 0, p
    while q.degree >= 1 and sturm_count(q, a, b) >= 1 and sturm_count(q.squarefree(), a, b) >= 1:
        g = q.gcd(q.derivative())
        if g.degree < 1 or sturm_count(g, a, b) == 0:
            return mult + 1
        mult += 1
        q = g
    return max(mult, 1)


def positive_roots(p: Polynomial, width: Rational = Fraction(1, 2 ** 20)) -> tuple[Root, ...]:
    """Distinct positive real roots: rational ones exactly, the rest as isolating intervals."""
    rats = [r for r in rational_roots(p) if r > 0]
    mults = {r: rats.count(r) for r in rats}
    rest = p
    for r in sorted(mults):
        rest = exact_divide(rest, Polynomial((-r, 1)) ** mults[r])
    roots = [Root(r, (r, r), mults[r]) for r in sorted(mults)]
    if rest.degree >= 1:
        for a, b in isolate_real_roots(rest, 0, None, width):
            roots.append(Root(None, (a, b), _multiplicity_in(rest, a, b)))
    return tuple(sorted(roots, key=lambda r: r.interval[0]))


def count_positive_roots(p: Polynomial) -> int:
    return sturm_count(p, 0, None)


def count_csc_rays(l, w, locate: bool = True) -> RayCount:
    """Exact number of cscS rays in the w-cone of ``S^3 *_l S^3_w`` (distinct positive roots of g)."""
    l, w = _pairs(l, w)
    if w.a0 <= w.ainf:
        raise CscInputError(f"need w0 > winf, got {w.pair}")
    g = reduced_g(l, w)
    count = sturm_count(g, 0, None)
    roots = positive_roots(g) if locate else ()
    if locate and len(roots) != count:
        raise AssertionError("root isolation disagrees with the Sturm count")
    return RayCount(count, roots, 3)


def descartes_negative_check(l, w) -> tuple[int, int]:
    """(sign variations of g(-b), Sturm count of roots of g in (-inf, 0])."""
    g = reduced_g(l, w)
    neg = [c * (-1) ** k for k, c in enumerate(g.coeffs)]
    return sign_variations(neg), sturm_count(g, None, 0)


# --------------------------------------------------------------------------
# the threshold L

def _raw(w) -> tuple[int, int]:
    # plain integer pair; coprimality is not needed for polynomial identities
    if isinstance(w, WeightPair):
        return w.pair
    a, b = w
    return int(a), int(b)


def threshold_quartic(l0: int, w) -> Polynomial:
    """``h`` as a polynomial in ``linf``; ``disc_b(g) = (w0 winf)^2 h``."""
    w0, wi = _raw(w)
    return Polynomial((
        l0 ** 4 * w0 * wi * (32 * w0 ** 2 + 61 * w0 * wi + 32 * wi ** 2),
        -100 * l0 ** 3 * w0 * wi * (w0 + wi),
        2 * l0 ** 2 * (2 * w0 ** 2 + 41 * w0 * wi + 2 * wi ** 2),
        -8 * l0 * (w0 + wi),
        1,
    ))


def threshold_bounds(l0: int, w) -> tuple[Fraction, Fraction]:
    """Open interval ``(2 l0 w0, l0 (16 w0 - 5 winf) / 2)`` known to contain L."""
    w0, wi = _raw(w)
    return Fraction(2 * l0 * w0), Fraction(l0 * (16 * w0 - 5 * wi), 2)


@dataclass(frozen=True)
class Threshold:
    l0: int
    w: WeightPair
    interval: tuple[Fraction, Fraction]
    exact: Optional[Fraction]

    def classify(self, linf: Rational) -> str:
        """``below``, ``at`` or ``above`` the threshold L."""
        x = Fraction(linf)
        lo = Fraction(2 * self.l0 * self.w.a0)
        if x <= lo:
            return "below"
        v = threshold_quartic(self.l0, self.w)(x)
        if v < 0:
            return "below"
        return "at" if v == 0 else "above"

    def to_json(self) -> dict:
        return {
            "interval": [str(self.interval[0]), str(self.interval[1])],
            "exact": None if self.exact is None else str(self.exact),
        }


def threshold_interval(l0: int, w, width: Rational = Fraction(1, 2 ** 20)) -> Threshold:
    """Isolate the root of ``h`` above ``2 l0 w0`` to an interval of at most ``width``."""
    w = WeightPair.of(w)
    if w.a0 <= w.ainf:
        raise CscInputError(f"need w0 > winf, got {w.pair}")
    h = threshold_quartic(l0, w)
    lo, hi = threshold_bounds(l0, w)
    ivs = isolate_real_roots(h, lo, None, width)
    if len(ivs) != 1:
        raise AssertionError(f"expected one root of h above 2 l0 w0, found {len(ivs)}")
    a, b = ivs[0]
    exact = a if a == b else None
    if not (lo < b and a < hi):
        raise AssertionError("threshold root escaped the known bounds")
    if exact is None:
        a = max(a, lo)
    return Threshold(l0, w, (a, b), exact)


def disc_h_closed_form(l0: int, w) -> int:
    w0, wi = _raw(w)
    return -768 * l0 ** 12 * w0 * (w0 - wi) ** 4 * wi * (8 * w0 + wi) ** 3 * (w0 + 8 * wi) ** 3


def disc_h_identity(l0: int, w0: int, winf: int) -> bool:
    """Check disc(h) against its closed form; a mismatch raises."""
    h = threshold_quartic(l0, (w0, winf))
    got = discriminant(h)
    want = disc_h_closed_form(l0, (w0, winf))
    if got != want:
        raise ArithmeticError(f"disc(h) = {got} but closed form gives {want}")
    return True


def multi_ray_c1_check(l, w, count: Optional[int] = None) -> bool:
    """With two or more rays, the contact c1 exceeds ``(2 l0 w0 + l0 (w0 - winf)) gamma``."""
    l, w = _pairs(l, w)
    if count is None:
        count = count_csc_rays(l, w, locate=False).count
    if count < 2:
        return True
    c1 = 2 * l.ainf - l.a0 * w.total
    return c1 > 2 * l.a0 * w.a0 + l.a0 * (w.a0 - w.ainf)
