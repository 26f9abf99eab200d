"""Stage calculus for iterated S^3_w joins and their quotient Bott orbifolds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .bott import BottMatrix, BottOrbifold, ClassVector
from .exactmath import FactoredInteger, factorize


class JoinInputError(ValueError):
    """Inconsistent or malformed join data."""


class IntegralityError(ArithmeticError):
    """A quotient matrix row or Kahler class came out non-integral."""


@dataclass(frozen=True)
class WeightPair:
    """Coprime positive pair ``(a0, ainf)``."""

    a0: int
    ainf: int

    def __post_init__(self):
        if isinstance(self.a0, bool) or isinstance(self.ainf, bool):
            raise JoinInputError("weights must be integers")
        if not (isinstance(self.a0, int) and isinstance(self.ainf, int)):
            raise JoinInputError("weights must be integers")
        if self.a0 < 1 or self.ainf < 1:
            raise JoinInputError(f"weights must be positive: {self.pair}")
        if math.gcd(self.a0, self.ainf) != 1:
            raise JoinInputError(f"weights {self.pair} are not coprime")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.a0, self.ainf)

    @property
    def total(self) -> int:
        return self.a0 + self.ainf

    @property
    def product(self) -> int:
        return self.a0 * self.ainf

    def swapped(self) -> "WeightPair":
        return WeightPair(self.ainf, self.a0)

    @classmethod
    def of(cls, p: Sequence[int] | "WeightPair") -> "WeightPair":
        if isinstance(p, WeightPair):
            return p
        if len(p) != 2:
            raise JoinInputError(f"expected a pair, got {p!r}")
        return cls(p[0], p[1])

    def __iter__(self):
        return iter(self.pair)


@dataclass(frozen=True)
class JoinStage:
    """Stage ``k`` of a tower: ``w_k``, the join weights ``l_{k-1}`` (absent at stage 1) and an optional Reeb choice ``v_k``."""

    w: WeightPair
    l: Optional[WeightPair] = None
    v: Optional[WeightPair] = None


@dataclass(frozen=True)
class JoinTower:
    stages: tuple[JoinStage, ...]

    def __post_init__(self):
        if not self.stages:
            raise JoinInputError("a tower needs at least one stage")
        if self.stages[0].l is not None:
            raise JoinInputError("stage 1 carries w only (l_0 = (1, 1) is implicit)")
        for k, st in enumerate(self.stages[1:], start=2):
            if st.l is None:
                raise JoinInputError(f"stage {k} is missing l")

    @property
    def height(self) -> int:
        return len(self.stages)

    def check_reeb_choices(self) -> None:
        """Every non-final stage k >= 2 must carry v."""
        for k, st in enumerate(self.stages[1:-1], start=2):
            if st.v is None:
                raise JoinInputError(f"stage {k} is not final and has no Reeb choice v")

    @classmethod
    def from_json(cls, data: dict) -> "JoinTower":
        stages = []
        for k, raw in enumerate(data["stages"], start=1):
            w = WeightPair.of(raw["w"])
            l = WeightPair.of(raw["l"]) if "l" in raw and raw["l"] is not None else None
            v = WeightPair.of(raw["v"]) if "v" in raw and raw["v"] is not None else None
            stages.append(JoinStage(w, l, v))
        return cls(tuple(stages))

    def to_json(self) -> dict:
        out = []
        for st in self.stages:
            d = {}
            if st.l is not None:
                d["l"] = list(st.l)
            d["w"] = list(st.w)
            if st.v is not None:
                d["v"] = list(st.v)
            out.append(d)
        return {"stages": out}


# --------------------------------------------------------------------------
# single-stage formulas

@dataclass(frozen=True)
class StageInvariants:
    s: int
    m: int
    n: int
    product: bool = False

    @property
    def orientation_reversed(self) -> bool:
        return self.n < 0


def stage_invariants(l, w, v) -> StageInvariants:
    """``s = gcd(linf, |det|)``, ``m = linf / s``, ``n = l0 * det / s`` with ``det = w0 vinf - winf v0``.

    ``v`` parallel to ``w`` gives ``det = 0``: ``s = linf``, ``m = 1``,
    ``n = 0``, flagged as a product.
    """
    l, w, v = WeightPair.of(l), WeightPair.of(w), WeightPair.of(v)
    det = w.a0 * v.ainf - w.ainf * v.a0
    s = math.gcd(l.ainf, abs(det))
    return StageInvariants(s, l.ainf // s, l.a0 * det // s, det == 0)


def _as_factored(u) -> FactoredInteger:
    return u if isinstance(u, FactoredInteger) else factorize(int(u))


def upsilon_step(upsilon_prev, inv: StageInvariants, v) -> FactoredInteger:
    """``Upsilon_k = m_k v0_k vinf_k Upsilon_{k-1}``."""
    v = WeightPair.of(v)
    return _as_factored(upsilon_prev) * factorize(inv.m * v.a0 * v.ainf)


def orbifold_order(tower: JoinTower, upto: Optional[int] = None) -> FactoredInteger:
    """Orbifold order of the quasi-regular structure at stage ``upto`` (default: the top)."""
    k = tower.height if upto is None else upto
    if not 1 <= k <= tower.height:
        raise JoinInputError(f"stage {k} out of range")
    st1 = tower.stages[0]
    ups = factorize(st1.w.product)
    for j in range(2, k + 1):
        st = tower.stages[j - 1]
        if st.v is None:
            raise JoinInputError(f"orbifold order at stage {k} needs v at stage {j}")
        inv = stage_invariants(st.l, st.w, st.v)
        ups = upsilon_step(ups, inv, st.v)
    return ups


@dataclass(frozen=True)
class SmoothnessCertificate:
    smooth: bool
    left: int
    right: int
    gcd: int
    witness_prime: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "smooth": self.smooth,
            "gcd_args": [str(self.left), str(self.right)],
            "gcd": str(self.gcd),
            "witness_prime": None if self.witness_prime is None else str(self.witness_prime),
        }


def is_smooth(upsilon_prev, l, w) -> SmoothnessCertificate:
    """``gcd(linf * Upsilon_{k-1}, l0 * w0 * winf) == 1``, with the least common prime as witness."""
    l, w = WeightPair.of(l), WeightPair.of(w)
    ups = upsilon_prev.value if isinstance(upsilon_prev, FactoredInteger) else int(upsilon_prev)
    left = l.ainf * ups
    right = l.a0 * w.a0 * w.ainf
    g = math.gcd(left, right)
    witness = None
    if g != 1:
        witness = factorize(g).prime_factors()[0]
    return SmoothnessCertificate(g == 1, left, right, g, witness)


@dataclass(frozen=True)
class KahlerStep:
    raw: ClassVector
    primitive: ClassVector
    content: int


def kahler_class_step(omega_prev: ClassVector, inv: StageInvariants, upsilon_prev, l, w, v) -> KahlerStep:
    """``[w_k] = m l0 w0 vinf * lift([w_{k-1}]) + m s Upsilon_{k-1} x_k``, raw and primitive."""
    l, w, v = WeightPair.of(l), WeightPair.of(w), WeightPair.of(v)
    if not omega_prev.is_integral():
        raise IntegralityError(f"Kahler class {omega_prev.to_json()} is not integral")
    ups = upsilon_prev.value if isinstance(upsilon_prev, FactoredInteger) else int(upsilon_prev)
    k = omega_prev.n + 1
    base = omega_prev.lift(k).scale(inv.m * l.a0 * w.a0 * v.ainf)
    top = ClassVector.in_x([0] * (k - 1) + [inv.m * inv.s * ups])
    raw = base + top
    g = raw.content()
    return KahlerStep(raw, raw.primitive(), g)


def matrix_row(n_k: int, omega_prev: ClassVector) -> tuple[int, ...]:
    """Row ``A(k, j) = n_k * (coefficient of x_j in [w_{k-1}])``; must be integral."""
    row = [n_k * c for c in omega_prev.coeffs]
    bad = [c for c in row if Fraction(c).denominator != 1]
    if bad:
        raise IntegralityError(f"quotient matrix row {[str(c) for c in row]} is not integral")
    return tuple(int(c) for c in row)


# --------------------------------------------------------------------------
# tower pipeline

@dataclass(frozen=True)
class StageQuotient:
    k: int
    invariants: StageInvariants
    upsilon: FactoredInteger
    omega: ClassVector
    omega_primitive: ClassVector
    row: tuple[int, ...]
    ram: tuple[int, int]
    smoothness: SmoothnessCertificate

    def to_json(self) -> dict:
        inv = self.invariants
        return {
            "stage": self.k,
            "s": inv.s, "m": inv.m, "n": inv.n,
            "product": inv.product,
            "orientation_reversed": inv.orientation_reversed,
            "upsilon": self.upsilon.to_json(),
            "omega": [str(c) for c in self.omega.coeffs],
            "omega_primitive": [str(c) for c in self.omega_primitive.coeffs],
            "A_row": list(self.row),
            "ramification": list(self.ram),
            "smoothness": self.smoothness.to_json(),
        }


@dataclass
class TowerAnalysis:
    tower: JoinTower
    orbifold: BottOrbifold
    stages: list[StageQuotient] = field(default_factory=list)
    upsilon1: FactoredInteger = field(default_factory=lambda: factorize(1))
    omega1: Optional[ClassVector] = None
    final_smoothness: Optional[SmoothnessCertificate] = None

    @property
    def smooth(self) -> bool:
        """Smoothness of the top join (stage-1 weighted spheres are always smooth)."""
        if self.final_smoothness is not None:
            return self.final_smoothness.smooth
        if self.stages:
            return self.stages[-1].smoothness.smooth
        return True

    def to_json(self) -> dict:
        return {
            "input": self.tower.to_json(),
            "stage1": {
                "upsilon": self.upsilon1.to_json(),
                "omega": [str(c) for c in self.omega1.coeffs] if self.omega1 else None,
                "ramification": list(self.tower.stages[0].w),
            },
            "stages": [s.to_json() for s in self.stages],
            "final_stage_without_reeb": (
                None if self.final_smoothness is None
                else {"stage": self.tower.height, "smoothness": self.final_smoothness.to_json()}
            ),
            "bott_orbifold": self.orbifold.to_json(),
            "smooth": self.smooth,
        }


def analyze_tower(tower: JoinTower) -> TowerAnalysis:
    """Fold the stage recursion over a tower, assembling the quotient Bott orbifold.

    Assembly stops at the last stage with a Reeb choice; a final stage
    without ``v`` still gets its smoothness certificate.
    """
    tower.check_reeb_choices()
    st1 = tower.stages[0]
    ups = factorize(st1.w.product)
    omega = ClassVector.in_x([1])
    matrix = BottMatrix.identity(1)
    ram: list[tuple[int, int]] = [st1.w.pair]
    analysis = TowerAnalysis(tower, BottOrbifold(matrix, tuple(ram)), upsilon1=ups, omega1=omega)
    for k, st in enumerate(tower.stages[1:], start=2):
        cert = is_smooth(ups, st.l, st.w)
        if st.v is None:
            analysis.final_smoothness = cert
            break
        inv = stage_invariants(st.l, st.w, st.v)
        if inv.m * inv.s != st.l.ainf:
            raise AssertionError("m * s != linf")
        row = matrix_row(inv.n, omega)
        step = kahler_class_step(omega, inv, ups, st.l, st.w, st.v)
        new_ups = upsilon_step(ups, inv, st.v)
        stage_ram = (inv.m * st.v.a0, inv.m * st.v.ainf)
        matrix = matrix.append_row(row)
        ram.append(stage_ram)
        analysis.stages.append(StageQuotient(k, inv, new_ups, step.raw, step.primitive, row, stage_ram, cert))
        omega, ups = step.raw, new_ups
    analysis.orbifold = BottOrbifold(matrix, tuple(ram))
    return analysis


def quotient_bott_orbifold(tower: JoinTower) -> tuple[BottOrbifold, list[StageQuotient]]:
    a = analyze_tower(tower)
    return a.orbifold, a.stages


# --------------------------------------------------------------------------
# Gorenstein selections and the stage-2 layer

def gorenstein_l(index: int, w) -> WeightPair:
    """``l = (I / g, (w0 + winf) / g)`` with ``g = gcd(w0 + winf, I)``."""
    w = WeightPair.of(w)
    if index < 1:
        raise JoinInputError("Fano index must be positive")
    g = math.gcd(w.total, index)
    return WeightPair(index // g, w.total // g)


def ypq_to_join(p: int, q: int) -> tuple[WeightPair, WeightPair]:
    """Stage-2 join data ``(l, w)`` realizing ``Y^{p,q}``.

    ``l0 = gcd(p + q, p - q)``, ``linf = p``, ``w = ((p + q)/l0, (p - q)/l0)``.
    """
    if q < 1 or p <= q:
        raise JoinInputError(f"Y^{{p,q}} needs p > q >= 1, got ({p}, {q})")
    if math.gcd(p, q) != 1:
        raise JoinInputError(f"p={p} and q={q} are not coprime")
    l0 = math.gcd(p + q, p - q)
    l = WeightPair(l0, p)
    w = WeightPair((p + q) // l0, (p - q) // l0)
    if w.total // math.gcd(2, w.total) != l.ainf:
        raise AssertionError("Y^{p,q} selection is not the Gorenstein ray")
    return l, w


@dataclass(frozen=True)
class Stage2Chern:
    coefficient: int
    bundle: str

    @property
    def gorenstein(self) -> bool:
        return self.coefficient == 0


def stage2_c1(l, w) -> Stage2Chern:
    """Contact c1 of ``S^3 *_l S^3_w`` against the positive generator, and the bundle type."""
    l, w = WeightPair.of(l), WeightPair.of(w)
    c = 2 * l.ainf - l.a0 * w.total
    return Stage2Chern(c, "trivial" if (l.a0 * w.total) % 2 == 0 else "nontrivial")


# --------------------------------------------------------------------------
# stages over a structure known only through its height and orbifold order

@dataclass(frozen=True)
class BasedTower:
    """Join stages stacked on a quasi-regular base given by ``(height, Upsilon)`` alone.

    Without the base's Kahler class and Bott matrix only the stage
    invariants, orbifold orders and smoothness can be tracked.
    """

    base_height: int
    base_upsilon: FactoredInteger
    stages: tuple[JoinStage, ...]

    def __post_init__(self):
        if self.base_height < 1:
            raise JoinInputError("base height must be at least 1")
        if not self.stages:
            raise JoinInputError("a based tower needs at least one stage")
        for k, st in enumerate(self.stages, start=self.base_height + 1):
            if st.l is None:
                raise JoinInputError(f"stage {k} is missing l")
        for k, st in enumerate(self.stages[:-1], start=self.base_height + 1):
            if st.v is None:
                raise JoinInputError(f"stage {k} is not final and has no Reeb choice v")

    @property
    def height(self) -> int:
        return self.base_height + len(self.stages)

    @classmethod
    def from_json(cls, data: dict) -> "BasedTower":
        base = data["base"]
        ups = factorize(int(base["upsilon"]))
        stages = []
        for raw in data["stages"]:
            stages.append(JoinStage(
                WeightPair.of(raw["w"]),
                WeightPair.of(raw["l"]) if raw.get("l") is not None else None,
                WeightPair.of(raw["v"]) if raw.get("v") is not None else None,
            ))
        return cls(int(base["height"]), ups, tuple(stages))

    def to_json(self) -> dict:
        plain = JoinTower.to_json(self)
        return {"base": {"height": self.base_height, "upsilon": str(self.base_upsilon.value)}, **plain}


@dataclass(frozen=True)
class BasedStage:
    k: int
    invariants: Optional[StageInvariants]
    upsilon: Optional[FactoredInteger]
    smoothness: SmoothnessCertificate

    def to_json(self) -> dict:
        inv = self.invariants
        return {
            "stage": self.k,
            "s": None if inv is None else inv.s,
            "m": None if inv is None else inv.m,
            "n": None if inv is None else inv.n,
            "upsilon": None if self.upsilon is None else self.upsilon.to_json(),
            "smoothness": self.smoothness.to_json(),
        }


def analyze_over_base(tower: BasedTower) -> list[BasedStage]:
    ups = tower.base_upsilon
    out = []
    for k, st in enumerate(tower.stages, start=tower.base_height + 1):
        cert = is_smooth(ups, st.l, st.w)
        if st.v is None:
            out.append(BasedStage(k, None, None, cert))
            break
        inv = stage_invariants(st.l, st.w, st.v)
        ups = upsilon_step(ups, inv, st.v)
        out.append(BasedStage(k, inv, ups, cert))
    return out
