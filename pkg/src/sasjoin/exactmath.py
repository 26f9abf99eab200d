"""Exact integer, rational and univariate polynomial arithmetic.

Everything here is pure and works on Python ints and :class:`fractions.Fraction`,
so there is no overflow at any magnitude.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Optional, Sequence, Union

Number = Union[int, Fraction]

__all__ = [
    "gcd", "lcm", "xgcd", "is_probable_prime", "FactoredInteger", "factorize",
    "divisors", "Polynomial", "sturm_count", "sturm_sequence", "isolate_real_roots",
    "rational_roots", "resultant", "discriminant", "derivative", "evaluate",
    "exact_divide", "sign_variations",
]


# --------------------------------------------------------------------------
# integers

def gcd(a: int, b: int) -> int:
    return math.gcd(a, b)


def lcm(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return abs(a * b) // math.gcd(a, b)


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``g = gcd(a, b) >= 0`` and ``a*x + b*y == g``."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    r0, r1 = a, b
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if r0 < 0:
        r0, x0, y0 = -r0, -x0, -y0
    return r0, x0, y0


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_probable_prime(n: int, rounds: int = 8) -> bool:
    """Strong pseudoprime test.

    Deterministic below 3.3e24 (bases 2..41); above that ``rounds`` extra
    bases drawn from a fixed-seed generator are added.
    """
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1

    def witness(a: int) -> bool:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            return False
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                return False
        return True

    bases = list(_SMALL_PRIMES)
    if n >= 3317044064679887385961981:
        rng = random.Random(n)
        bases += [rng.randrange(2, n - 1) for _ in range(rounds)]
    return not any(witness(a) for a in bases)


@dataclass(frozen=True)
class FactoredInteger:
    """A nonzero integer as ``sign * prod(p**e) * cofactor``.

    ``cofactor`` is 1 when the factorization is complete; otherwise it holds
    the part that could not be split within the effort bound.
    """

    primes: tuple[tuple[int, int], ...] = ()
    cofactor: int = 1
    sign: int = 1

    @property
    def fully_factored(self) -> bool:
        return self.cofactor == 1

    @property
    def value(self) -> int:
        v = self.sign * self.cofactor
        for p, e in self.primes:
            v *= p ** e
        return v

    def as_dict(self) -> dict[int, int]:
        return dict(self.primes)

    def radical(self) -> int:
        if not self.fully_factored:
            raise ValueError("radical of a partially factored integer is unknown")
        return math.prod(p for p, _ in self.primes)

    def prime_factors(self) -> list[int]:
        return [p for p, _ in self.primes]

    def __mul__(self, other: "FactoredInteger | int") -> "FactoredInteger":
        if isinstance(other, int):
            other = factorize(other)
        exps = dict(self.primes)
        for p, e in other.primes:
            exps[p] = exps.get(p, 0) + e
        cof = self.cofactor * other.cofactor
        # a product of cofactors may still share primes with the map; leave as is
        return FactoredInteger(tuple(sorted(exps.items())), cof, self.sign * other.sign)

    __rmul__ = __mul__

    def __str__(self) -> str:
        parts = [f"{p}^{e}" if e > 1 else str(p) for p, e in self.primes]
        if self.cofactor != 1:
            parts.append(f"[{self.cofactor}]")
        body = "*".join(parts) or "1"
        return ("-" if self.sign < 0 else "") + body

    def to_json(self) -> dict:
        return {
            "value": str(self.value),
            "primes": [[str(p), e] for p, e in self.primes],
            "cofactor": str(self.cofactor),
            "fully_factored": self.fully_factored,
        }

    @classmethod
    def from_primes(cls, primes: dict[int, int] | Iterable[tuple[int, int]], sign: int = 1) -> "FactoredInteger":
        items = dict(primes).items() if not isinstance(primes, dict) else primes.items()
        for p, e in items:
            if e < 0 or not is_probable_prime(p):
                raise ValueError(f"bad prime power {p}^{e}")
        return cls(tuple(sorted((p, e) for p, e in items if e > 0)), 1, sign)


def _pollard_brent(n: int, rng: random.Random, max_iter: int) -> Optional[int]:
    if n % 2 == 0:
        return 2
    y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
    g = r = q = 1
    it = 0
    x = ys = y
    while g == 1:
        x = y
        for _ in range(r):
            y = (y * y + c) % n
        k = 0
        while k < r and g == 1:
            ys = y
            for _ in range(min(m, r - k)):
                y = (y * y + c) % n
                q = q * abs(x - y) % n
            g = math.gcd(q, n)
            k += m
        r *= 2
        it += r
        if it > max_iter:
            return None
    if g == n:
        g = 1
        while g == 1:
            ys = (ys * ys + c) % n
            g = math.gcd(abs(x - ys), n)
    return g if g != n else None


def factorize(n: int, effort: int = 10_000, rho_iterations: int = 2_000_000) -> FactoredInteger:
    """Factor ``n`` by trial division up to ``effort`` and then Pollard-Brent rho.

    Whatever is left composite after the rho budget is returned as the
    cofactor, with ``fully_factored`` false.
    """
    if n == 0:
        raise ValueError("cannot factor 0")
    sign = -1 if n < 0 else 1
    n = abs(n)
    exps: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            exps[p] = exps.get(p, 0) + 1
            n //= p
    # 6k +- 1 wheel
    p, step = 7, 4
    while p <= effort and p * p <= n:
        while n % p == 0:
            exps[p] = exps.get(p, 0) + 1
            n //= p
        p += step
        step = 6 - step
    cofactor = 1
    stack = [n] if n > 1 else []
    rng = random.Random(0x5A5)
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if m < effort * effort or is_probable_prime(m):
            # below effort**2 trial division already exhausted every factor
            if m < effort * effort and not is_probable_prime(m):
                raise AssertionError("trial division left a composite below effort**2")
            exps[m] = exps.get(m, 0) + 1
            continue
        r = m if math.isqrt(m) ** 2 != m else math.isqrt(m)
        if r != m:
            stack += [r, r]
            continue
        d = None
        for _ in range(6):
            d = _pollard_brent(m, rng, rho_iterations)
            if d:
                break
        if not d:
            cofactor *= m
            continue
        stack += [d, m // d]
    return FactoredInteger(tuple(sorted(exps.items())), cofactor, sign)


def divisors(n: int) -> list[int]:
    """Positive divisors of ``n`` in increasing order."""
    if n == 0:
        raise ValueError("0 has infinitely many divisors")
    f = factorize(n)
    if not f.fully_factored:
        raise ValueError(f"could not fully factor {n}")
    divs = [1]
    for p, e in f.primes:
        divs = [d * p ** k for d in divs for k in range(e + 1)]
    return sorted(divs)


# --------------------------------------------------------------------------
# polynomials

def _frac(c: Number) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class Polynomial:
    """Dense univariate polynomial with rational coefficients, lowest degree first.

    Instances are immutable. The zero polynomial has no coefficients and
    degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Number] = ()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def x(cls) -> "Polynomial":
        return cls((0, 1))

    @classmethod
    def constant(cls, c: Number) -> "Polynomial":
        return cls((c,))

    @classmethod
    def from_roots(cls, roots: Iterable[Number], lead: Number = 1) -> "Polynomial":
        p = cls.constant(lead)
        for r in roots:
            p = p * cls((-_frac(r), 1))
        return p

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other)
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({[str(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("b" if k == 1 else f"b^{k}")
            if mono and abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}*{mono}" if mono else str(abs(c))
            terms.append(("-" if c < 0 else "+") + body)
        s = " ".join(terms)
        return s[1:] if s.startswith("+") else s

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return Polynomial([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Polynomial([c * other for c in self.coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.coeffs or not other.coeffs:
            return Polynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out, base = Polynomial.constant(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __divmod__(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if not other.coeffs:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return Polynomial(), self
        quo = [Fraction(0)] * (dq + 1)
        lead = other.coeffs[-1]
        dv = len(other.coeffs) - 1
        for k in range(dq, -1, -1):
            c = rem[k + dv] / lead
            quo[k] = c
            if c:
                for i, b in enumerate(other.coeffs):
                    rem[k + i] -= c * b
        return Polynomial(quo), Polynomial(rem[:dv])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __call__(self, x: Number) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Polynomial":
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def monic(self) -> "Polynomial":
        if not self.coeffs:
            return self
        return self * (1 / self.leading)

    def gcd(self, other: "Polynomial") -> "Polynomial":
        a, b = self, other
        while b:
            a, b = b, a % b
        return a.monic()

    def squarefree(self) -> "Polynomial":
        """``p / gcd(p, p')``: same distinct roots, all simple."""
        if self.degree <= 0:
            return self
        return exact_divide(self, self.gcd(self.derivative()))

    def scale_argument(self, c: Number) -> "Polynomial":
        """The polynomial ``b -> p(c*b)``."""
        c = _frac(c)
        return Polynomial([a * c ** k for k, a in enumerate(self.coeffs)])

    def integer_coefficients(self) -> tuple[list[int], Fraction]:
        """Return ``(ints, scale)`` with ``self == scale * Polynomial(ints)``.

        ``ints`` is primitive with positive leading coefficient.
        """
        if not self.coeffs:
            return [], Fraction(0)
        den = reduce(lcm, (c.denominator for c in self.coeffs), 1)
        ints = [int(c * den) for c in self.coeffs]
        cont = reduce(math.gcd, ints, 0)
        if ints[-1] < 0:
            cont = -cont
        return [i // cont for i in ints], Fraction(cont, den)

    def primitive(self) -> "Polynomial":
        return Polynomial(self.integer_coefficients()[0])

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)


def derivative(p: Polynomial) -> Polynomial:
    return p.derivative()


def evaluate(p: Polynomial, x: Number) -> Fraction:
    return p(x)


def exact_divide(p: Polynomial, q: Polynomial) -> Polynomial:
    """Quotient ``p / q``; raises ``ArithmeticError`` if ``q`` does not divide ``p``."""
    quo, rem = divmod(p, q)
    if rem:
        raise ArithmeticError(f"{q} does not divide {p}: remainder {rem}")
    return quo


# --------------------------------------------------------------------------
# real roots

def _int_eval_sign(ints: Sequence[int], x: Fraction) -> int:
    # sign of d**deg * p(n/d), d > 0, all in integers
    n, d = x.numerator, x.denominator
    acc = 0
    dp = 1
    for c in reversed(ints):
        acc = acc * n + c * dp
        dp *= d
    return (acc > 0) - (acc < 0)


def _prem_neg(a: list[int], b: list[int]) -> list[int]:
    """Negated remainder of a by b, scaled by a positive constant, content removed."""
    a = a[:]
    lb, db = b[-1], len(b) - 1
    scale_sign_fix = 1 if lb > 0 else -1
    lbabs = abs(lb)
    while len(a) - 1 >= db and a:
        c = a[-1] * scale_sign_fix
        shift = len(a) - 1 - db
        a = [x * lbabs for x in a]
        for i, bc in enumerate(b):
            a[shift + i] -= c * bc
        while a and a[-1] == 0:
            a.pop()
    out = [-x for x in a]
    cont = reduce(math.gcd, out, 0)
    return [x // cont for x in out] if cont > 1 else out


def sturm_sequence(p: Polynomial) -> list[list[int]]:
    """Sturm chain of the squarefree part of ``p`` as primitive integer lists.

    Each element differs from the classical chain by a positive factor, so
    sign variation counts are unchanged.
    """
    if p.is_zero():
        raise ValueError("Sturm sequence of the zero polynomial")
    sf = p.squarefree()
    p0 = sf.integer_coefficients()[0]
    if len(p0) == 1:
        return [p0]
    p1 = Polynomial(p0).derivative().integer_coefficients()[0]
    chain = [p0, p1]
    while len(chain[-1]) > 1:
        r = _prem_neg(chain[-2], chain[-1])
        if not r:
            break
        chain.append(r)
    return chain


def _variations_at(chain: list[list[int]], x: Optional[Fraction], side: int) -> int:
    signs = []
    for c in chain:
        if x is None:
            s = 1 if c[-1] > 0 else -1
            if side < 0 and (len(c) - 1) % 2 == 1:
                s = -s
        else:
            s = _int_eval_sign(c, x)
        if s:
            signs.append(s)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_count(p: Polynomial, lo: Optional[Number] = None, hi: Optional[Number] = None,
                chain: Optional[list[list[int]]] = None) -> int:
    """Number of distinct real roots of ``p`` in ``(lo, hi]``.

    ``None`` stands for -infinity (``lo``) or +infinity (``hi``).
    """
    if chain is None:
        chain = sturm_sequence(p)
    lo_f = None if lo is None else _frac(lo)
    hi_f = None if hi is None else _frac(hi)
    if lo_f is not None and hi_f is not None and lo_f >= hi_f:
        return 0
    return _variations_at(chain, lo_f, -1) - _variations_at(chain, hi_f, +1)


def root_bound(p: Polynomial) -> Fraction:
    """Cauchy bound: every real root has absolute value below the result."""
    lead = abs(p.leading)
    return 1 + max((abs(c) / lead for c in p.coeffs[:-1]), default=Fraction(0))


def isolate_real_roots(p: Polynomial, lo: Optional[Number] = None, hi: Optional[Number] = None,
                       width: Optional[Number] = None) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals ``(a, b]`` each holding exactly one distinct root of ``p`` in ``(lo, hi]``.

    Exact rational roots come back as degenerate intervals ``(r, r)``. With
    ``width`` given, intervals are bisected until ``b - a <= width``.
    """
    chain = sturm_sequence(p)
    bound = root_bound(Polynomial(chain[0]))
    a = -bound if lo is None else max(_frac(lo), -bound)
    b = bound if hi is None else min(_frac(hi), bound)
    sf = Polynomial(chain[0])
    out = []
    todo = [(a, b, sturm_count(p, a, b, chain))]
    while todo:
        x, y, k = todo.pop()
        if k == 0:
            continue
        if k == 1:
            out.append((x, y))
            continue
        mid = (x + y) / 2
        left = sturm_count(p, x, mid, chain)
        todo.append((mid, y, k - left))
        todo.append((x, mid, left))
    refined = []
    for x, y in sorted(out):
        if sf(y) == 0:
            refined.append((y, y))
            continue
        if width is not None:
            w = _frac(width)
            sx = _int_eval_sign(chain[0], x) if sf(x) != 0 else 0
            while y - x > w:
                mid = (x + y) / 2
                sm = _int_eval_sign(chain[0], mid)
                if sm == 0:
                    x = y = mid
                    break
                if sturm_count(p, x, mid, chain) == 1:
                    y = mid
                else:
                    x, sx = mid, sm
        refined.append((x, y))
    return refined


def sign_variations(coeffs: Sequence[Number]) -> int:
    """Descartes sign variations of a coefficient list (zeros skipped)."""
    signs = [1 if c > 0 else -1 for c in coeffs if c != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def rational_roots(p: Polynomial) -> list[Fraction]:
    """All rational roots with multiplicity, ascending.

    Candidates ``r/s`` come from divisors of the constant and leading
    coefficients after clearing denominators.
    """
    if p.is_zero():
        raise ValueError("zero polynomial has every number as a root")
    roots: list[Fraction] = []
    q = p
    while q.degree >= 1 and q.coeffs[0] == 0:
        roots.append(Fraction(0))
        q = Polynomial(q.coeffs[1:])
    if q.degree < 1:
        return roots
    ints, _ = q.integer_coefficients()
    cands = sorted({Fraction(sgn * r, s) for r in divisors(ints[0]) for s in divisors(ints[-1])
                    for sgn in (1, -1)})
    for c in cands:
        lin = Polynomial((-c, 1))
        while q.degree >= 1:
            quo, rem = divmod(q, lin)
            if rem:
                break
            roots.append(c)
            q = quo
    return sorted(roots)


def resultant(a: Polynomial, b: Polynomial) -> Fraction:
    """Resultant of ``a`` and ``b`` by the Euclidean recursion over Q."""
    if a.is_zero() or b.is_zero():
        return Fraction(0)
    sign = 1
    res = Fraction(1)
    while True:
        m, n = a.degree, b.degree
        if n == 0:
            return sign * res * b.leading ** m
        r = a % b
        if r.is_zero():
            return Fraction(0)
        if (m * n) % 2:
            sign = -sign
        res *= b.leading ** (m - r.degree)
        a, b = b, r


def discriminant(p: Polynomial) -> Fraction:
    n = p.degree
    if n < 1:
        raise ValueError("discriminant needs degree >= 1")
    if n == 1:
        return Fraction(1)
    sgn = -1 if (n * (n - 1) // 2) % 2 else 1
    return sgn * resultant(p, p.derivative()) / p.leading
