"""Searching for smooth one-parameter families of iterated joins.

A seed is a quasi-regular structure whose orbifold order depends
polynomially on a parameter ``t``.  Extending it by one more join with
weights ``w`` and Reeb choice ``v`` gives a candidate; the candidate is a
smooth family on every ``t`` whose residues avoid the roots of the
orbifold-order factors modulo the primes of ``l0 w0 winf``.
"""

from __future__ import annotations

import json
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product as cartesian
from typing import Iterable, Iterator, Optional, Sequence

from .exactmath import FactoredInteger, factorize
from .join import JoinInputError, StageInvariants, WeightPair, gorenstein_l, stage_invariants

EXPLICIT_RESIDUE_LIMIT = 10 ** 5


class SearchInputError(ValueError):
    pass


# --------------------------------------------------------------------------
# polynomials over Z in one parameter, and their roots mod p

def _trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _normalize_factor(coeffs: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    c = [int(x) for x in coeffs]
    if any(Fraction(x).denominator != 1 for x in coeffs):
        raise SearchInputError("family factors must have integer coefficients")
    c = _trim(c)
    if len(c) < 2:
        raise SearchInputError("family factors must be non-constant; fold constants into the constant")
    g = reduce(math.gcd, c)
    if c[-1] < 0:
        g = -g
    return g, tuple(x // g for x in c)


def _eval(c: Sequence[int], t: int) -> int:
    acc = 0
    for x in reversed(c):
        acc = acc * t + x
    return acc


def _pmod(c: Sequence[int], p: int) -> list[int]:
    return _trim([x % p for x in c])


def _pdivmod(a: list[int], b: list[int], p: int) -> tuple[list[int], list[int]]:
    a = a[:]
    inv = pow(b[-1], -1, p)
    q = [0] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        k = len(a) - len(b)
        f = a[-1] * inv % p
        q[k] = f
        for i, y in enumerate(b):
            a[i + k] = (a[i + k] - f * y) % p
        _trim(a)
    return _trim(q), a


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    while b:
        a, b = b, _pdivmod(a, b, p)[1]
    if not a:
        return a
    inv = pow(a[-1], -1, p)
    return [x * inv % p for x in a]


def _pmulmod(a: list[int], b: list[int], f: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _pdivmod(_trim(out), f, p)[1]


def _ppowmod(base: list[int], e: int, f: list[int], p: int) -> list[int]:
    result = [1]
    base = _pdivmod(base, f, p)[1]
    while e:
        if e & 1:
            result = _pmulmod(result, base, f, p)
        base = _pmulmod(base, base, f, p)
        e >>= 1
    return result


def _psub(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    return _trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)])


def _split_linear(g: list[int], p: int, rng: random.Random) -> list[int]:
    # g is monic, squarefree and a product of distinct linear factors mod odd p
    if len(g) == 1:
        return []
    if len(g) == 2:
        return [(-g[0]) % p]
    while True:
        a = rng.randrange(p)
        h = _psub(_ppowmod([a, 1], (p - 1) // 2, g, p), [1], p)
        d = _pgcd(g, h, p)
        if 1 < len(d) < len(g):
            return _split_linear(d, p, rng) + _split_linear(_pdivmod(g, d, p)[0], p, rng)


def roots_mod_p(coeffs: Sequence[int], p: int) -> list[int]:
    """Sorted distinct roots in ``[0, p)`` of an integer polynomial modulo the prime ``p``.

    The zero polynomial mod ``p`` vanishes everywhere and returns all residues.
    """
    f = _pmod(coeffs, p)
    if not f:
        return list(range(p))
    if len(f) == 1:
        return []
    if p < 50:
        return [r for r in range(p) if _eval(f, r) % p == 0]
    if len(f) == 2:
        return [(-f[0]) * pow(f[1], -1, p) % p]
    inv = pow(f[-1], -1, p)
    f = [x * inv % p for x in f]
    xp = _ppowmod([0, 1], p, f, p)
    g = _pgcd(f, _psub(xp, [0, 1], p), p)
    return sorted(_split_linear(g, p, random.Random(p)))


@dataclass(frozen=True)
class FamilyPolynomial:
    """``constant * prod factors(t)``, each factor a primitive integer polynomial (lowest degree first)."""

    constant: FactoredInteger
    factors: tuple[tuple[int, ...], ...]

    @classmethod
    def build(cls, constant, factors: Iterable[Sequence[int]]) -> "FamilyPolynomial":
        const = constant if isinstance(constant, FactoredInteger) else factorize(int(constant))
        out = []
        for f in factors:
            g, prim = _normalize_factor(f)
            if abs(g) != 1:
                const = const * factorize(abs(g))
            if g < 0:
                const = const * -1
            out.append(prim)
        return cls(const, tuple(out))

    def __call__(self, t: int) -> int:
        v = self.constant.value
        for f in self.factors:
            v *= _eval(f, t)
        return v

    def scale(self, c) -> "FamilyPolynomial":
        const = c if isinstance(c, FactoredInteger) else factorize(int(c))
        return FamilyPolynomial(self.constant * const, self.factors)

    def substitute(self, c: int) -> "FamilyPolynomial":
        """Re-index ``t = c * that`` and re-normalize the factor contents."""
        if c < 1:
            raise SearchInputError("substitution factor must be positive")
        return FamilyPolynomial.build(
            self.constant, [[x * c ** i for i, x in enumerate(f)] for f in self.factors])

    def to_json(self) -> dict:
        return {
            "constant_factorization": {str(p): e for p, e in self.constant.primes},
            "constant_sign": self.constant.sign,
            "poly_factors": [[str(x) for x in f] for f in self.factors],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FamilyPolynomial":
        if "constant_factorization" in data:
            const = FactoredInteger.from_primes(
                {int(p): int(e) for p, e in data["constant_factorization"].items()},
                sign=int(data.get("constant_sign", 1)))
        else:
            const = factorize(int(data["constant"]))
        key = "poly_factors" if "poly_factors" in data else "factors"
        return cls.build(const, [[int(x) for x in f] for f in data[key]])

    def __str__(self) -> str:
        def fmt(f):
            terms = []
            for i in range(len(f) - 1, -1, -1):
                if f[i]:
                    terms.append(f"{f[i]}" + ("" if i == 0 else "t" if i == 1 else f"t^{i}"))
            return "(" + "+".join(terms).replace("+-", "-") + ")"
        return str(self.constant) + "".join("*" + fmt(f) for f in self.factors)


# --------------------------------------------------------------------------
# congruence certificates

@dataclass(frozen=True)
class CongruenceCertificate:
    """Admissible residues of ``t`` modulo ``rad(M)``, stored prime by prime.

    ``t`` is admissible iff, for every prime ``p | M``, ``t mod p`` avoids
    every root of every factor and ``p`` does not divide the constant.
    """

    modulus: FactoredInteger
    constant_ok: bool
    blocking_constant_primes: tuple[int, ...]
    forbidden: tuple[tuple[int, tuple[int, ...]], ...]

    @property
    def radical(self) -> int:
        return self.modulus.radical()

    @property
    def count(self) -> int:
        if not self.constant_ok:
            return 0
        n = 1
        for p, bad in self.forbidden:
            n *= p - len(bad)
        return n

    @property
    def nonempty(self) -> bool:
        return self.count > 0

    def admits(self, t: int) -> bool:
        if not self.constant_ok:
            return False
        return all(t % p not in bad for p, bad in self.forbidden)

    def admissible(self, limit: int = EXPLICIT_RESIDUE_LIMIT) -> Optional[list[int]]:
        """All admissible residues mod ``rad(M)`` in increasing order, or ``None`` above ``limit``."""
        if self.radical > limit:
            return None
        return [r for r in range(self.radical) if self.admits(r)]

    def to_json(self) -> dict:
        return {
            "modulus": str(self.modulus.value),
            "modulus_factorization": {str(p): e for p, e in self.modulus.primes},
            "radical": str(self.radical),
            "constant_ok": self.constant_ok,
            "blocking_constant_primes": [str(p) for p in self.blocking_constant_primes],
            "forbidden_by_prime": {str(p): [str(r) for r in bad] for p, bad in self.forbidden},
            "count": str(self.count),
            "admissible": self.admissible(),
        }


def congruence_certify(family: FamilyPolynomial, M) -> CongruenceCertificate:
    """Residues ``t mod rad(M)`` with ``gcd(family(t), M) = 1``."""
    if isinstance(M, FactoredInteger):
        if not M.fully_factored:
            raise SearchInputError(f"modulus {M} is not fully factored")
        mod = M
    else:
        mod = factorize(int(M))
        if not mod.fully_factored:
            raise SearchInputError(f"could not fully factor the modulus {M}")
    if mod.value < 1:
        raise SearchInputError("modulus must be positive")
    const = abs(family.constant.value)
    blocking = tuple(p for p in mod.prime_factors() if const % p == 0)
    forbidden = []
    for p in mod.prime_factors():
        bad: set[int] = set()
        for f in family.factors:
            bad.update(roots_mod_p(f, p))
        forbidden.append((p, tuple(sorted(bad))))
    return CongruenceCertificate(mod, not blocking, blocking, tuple(forbidden))


def brute_force_residues(family: FamilyPolynomial, M: int) -> list[int]:
    """Oracle: residues ``r < rad(M)`` with ``gcd(family(r), M) = 1`` by direct evaluation."""
    rad = factorize(M).radical()
    return [r for r in range(rad) if math.gcd(family(r), M) == 1]


# --------------------------------------------------------------------------
# seeds and candidates

@dataclass(frozen=True)
class SeedStructure:
    height: int
    index: int
    upsilon: FamilyPolynomial
    provenance: str = ""
    primitive: bool = True
    parameter: str = "t"

    def __post_init__(self):
        if self.index < 1:
            raise SearchInputError("Fano index must be at least 1")
        if self.height < 1:
            raise SearchInputError("seed height must be at least 1")

    @property
    def dimension(self) -> int:
        return 2 * self.height + 1

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "dimension": self.dimension,
            "index": self.index,
            "upsilon": self.upsilon.to_json(),
            "provenance": self.provenance,
            "primitive": self.primitive,
            "parameter": self.parameter,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SeedStructure":
        height = data.get("height")
        if height is None:
            height = (int(data["dimension"]) - 1) // 2
        return cls(int(height), int(data["index"]), FamilyPolynomial.from_json(data["upsilon"]),
                   data.get("provenance", ""), bool(data.get("primitive", True)), data.get("parameter", "t"))


SEED_DIM7 = SeedStructure(
    height=3, index=13,
    upsilon=FamilyPolynomial.build(
        factorize(2 ** 2 * 3 ** 2 * 17),
        [(1387, 65790, 780300), (43, 1020), (11, 255)]),
    provenance="7-dimensional SE family Y^{p,q} *_(306t+13, 4) S^3_(17,3)",
)

SEED_DIM9 = SeedStructure(
    height=4, index=150,
    upsilon=FamilyPolynomial.build(
        factorize(2 ** 4 * 3 ** 2 * 7 ** 2 * 13 * 17 * 31),
        [(1387, 5986890, 6461664300), (43, 92820), (11, 23205)]),
    provenance="9-dimensional family from the 7-dimensional seed with w=(49,13), v=(49,26), t=91*that",
    parameter="that",
)

BUILTIN_SEEDS = {"dim7": SEED_DIM7, "dim9": SEED_DIM9}


@dataclass(frozen=True)
class Candidate:
    seed: SeedStructure
    w: WeightPair
    v: WeightPair
    l: WeightPair
    stage: StageInvariants
    upsilon: FamilyPolynomial
    smooth_family: FamilyPolynomial
    certificate: CongruenceCertificate
    verdict: str
    reason: str

    @property
    def smooth(self) -> bool:
        return self.verdict == "smooth-family"

    def to_json(self) -> dict:
        return {
            "seed": self.seed.to_json(),
            "w": list(self.w),
            "v": list(self.v),
            "l": list(self.l),
            "stage": {"s": self.stage.s, "m": self.stage.m, "n": self.stage.n},
            "upsilon": self.upsilon.to_json(),
            "residues": self.certificate.to_json(),
            "verdict": self.verdict,
            "reason": self.reason,
        }


def se_extend(seed: SeedStructure, w, v) -> Candidate:
    """Join the seed with ``S^3_w`` along the Gorenstein ``l`` and certify smoothness over the family.

    Smoothness at ``t`` is ``gcd(linf * Upsilon(t), l0 w0 winf) = 1``; the
    new orbifold order is ``m v0 vinf Upsilon(t)``.
    """
    if not seed.primitive:
        raise SearchInputError("seed Kahler class must be primitive for the Gorenstein l selection")
    w, v = WeightPair.of(w), WeightPair.of(v)
    l = gorenstein_l(seed.index, w)
    inv = stage_invariants(l, w, v)
    new_ups = seed.upsilon.scale(inv.m * v.a0 * v.ainf)
    fam = seed.upsilon.scale(l.ainf)
    cert = congruence_certify(fam, factorize(l.a0 * w.a0 * w.ainf))
    if inv.product:
        verdict, reason = "rejected", "v is parallel to w: product structure, n = 0"
    elif not cert.constant_ok:
        ps = ",".join(map(str, cert.blocking_constant_primes))
        verdict, reason = "rejected", f"constant part shares primes {ps} with l0*w0*winf"
    elif not cert.nonempty:
        verdict, reason = "rejected", "every residue class hits a root of some factor"
    else:
        verdict = "smooth-family"
        reason = f"{cert.count} admissible residues mod {cert.radical}"
    return Candidate(seed, w, v, l, inv, new_ups, fam, cert, verdict, reason)


def revalidate(entry: dict) -> bool:
    """Replay a ledger line from its own inputs and compare."""
    seed = SeedStructure.from_json(entry["seed"])
    cand = se_extend(seed, entry["w"], entry["v"])
    return _dumps(cand.to_json()) == _dumps(entry)


# --------------------------------------------------------------------------
# Y^{p,q} with quasi-regular cscS rays

def ypq_csc_search(max_p: int) -> list[tuple[int, int, int]]:
    """Coprime ``1 <= q < p <= max_p`` with ``4p^2 - 3q^2 = n^2``, with witness ``n > 0``."""
    out = []
    for p in range(2, max_p + 1):
        for q in range(1, p):
            if math.gcd(p, q) != 1:
                continue
            d = 4 * p * p - 3 * q * q
            n = math.isqrt(d)
            if n * n == d:
                out.append((p, q, n))
    return out


# --------------------------------------------------------------------------
# grid search with an append-only ledger

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def w_range(w_max: int) -> Iterator[WeightPair]:
    """Coprime ``w0 > winf >= 1`` with ``w0 <= w_max``, lexicographic."""
    for a in range(2, w_max + 1):
        for b in range(1, a):
            if math.gcd(a, b) == 1:
                yield WeightPair(a, b)


def v_box(v_max: int) -> Iterator[WeightPair]:
    for a, b in cartesian(range(1, v_max + 1), repeat=2):
        if math.gcd(a, b) == 1:
            yield WeightPair(a, b)


def v_ratio(w: WeightPair, ratio) -> WeightPair:
    """``v`` with ``vinf / v0 = ratio * winf / w0``, reduced."""
    r = Fraction(ratio) * Fraction(w.ainf, w.a0)
    return WeightPair(r.denominator, r.numerator)


def candidate_pairs(w_max: int, v_max: Optional[int] = None, ratios: Optional[Sequence] = None,
                    pairs: Optional[Iterable] = None) -> list[tuple[WeightPair, WeightPair]]:
    """Canonical lexicographic candidate list from exactly one generator."""
    chosen = sum(x is not None for x in (v_max, ratios, pairs))
    if chosen != 1:
        raise SearchInputError("give exactly one of v_max, ratios or explicit pairs")
    out = set()
    if pairs is not None:
        for w, v in pairs:
            out.add((WeightPair.of(w), WeightPair.of(v)))
    else:
        for w in w_range(w_max):
            if ratios is not None:
                for r in ratios:
                    out.add((w, v_ratio(w, r)))
            else:
                for v in v_box(v_max):
                    out.add((w, v))
    return sorted(out, key=lambda c: (c[0].pair, c[1].pair))


def _evaluate_chunk(args) -> list[str]:
    seed_json, chunk, include_rejected = args
    seed = SeedStructure.from_json(seed_json)
    lines = []
    for w, v in chunk:
        c = se_extend(seed, w, v)
        if c.smooth or include_rejected:
            lines.append(_dumps(c.to_json()))
    return lines


@dataclass
class GridResult:
    evaluated: int
    lines: list[str] = field(default_factory=list)

    @property
    def entries(self) -> list[dict]:
        return [json.loads(s) for s in self.lines]


def grid_search(seed: SeedStructure, candidates: Sequence[tuple[WeightPair, WeightPair]],
                ledger: Optional[str] = None, workers: int = 1, chunk_size: int = 64,
                include_rejected: bool = False) -> GridResult:
    """Evaluate every candidate and append accepted certificates to a JSON-lines ledger.

    Chunks may run in worker processes, but results are consumed in
    candidate order and written by this process alone, so the ledger is
    identical for any ``workers``.  Each line is flushed as written.
    """
    seed_json = seed.to_json()
    chunks = [
        (seed_json, [(tuple(w), tuple(v)) for w, v in candidates[i:i + chunk_size]], include_rejected)
        for i in range(0, len(candidates), chunk_size)
    ]
    result = GridResult(len(candidates))
    fh = open(ledger, "a", encoding="utf-8", newline="\n") if ledger else None
    try:
        if workers > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                batches = ex.map(_evaluate_chunk, chunks)
                _consume(batches, result, fh)
        else:
            _consume(map(_evaluate_chunk, chunks), result, fh)
    finally:
        if fh:
            fh.close()
    return result


def _consume(batches, result: GridResult, fh) -> None:
    for lines in batches:
        for s in lines:
            result.lines.append(s)
            if fh:
                fh.write(s + "\n")
                fh.flush()


def read_ledger(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(s) for s in fh if s.strip()]


def default_ledger_dir() -> str:
    return os.environ.get("SASJOIN_LEDGER_DIR", os.getcwd())
