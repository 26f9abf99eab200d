"""Closed-form topology of iterated S^3_w joins ``M^{2k+1}``.

Only what the homotopy sequence of the torus bundle and the Leray-Serre
arguments pin down is reported; every other Betti number is ``None``
("unknown"), never guessed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .join import JoinInputError, JoinTower, WeightPair, stage2_c1, stage_invariants


@dataclass(frozen=True)
class Stage2Data:
    coefficient: int
    bundle: str

    def to_json(self) -> dict:
        return {"c1_coefficient": self.coefficient, "bundle": self.bundle, "gorenstein": self.coefficient == 0}


@dataclass(frozen=True)
class TopologyReport:
    k: int
    pi1: str
    pi2_rank: int
    pi3_rank: int
    pi4_2torsion_rank: int
    h2_rank: int
    h3: Optional[int]
    h4_free_rank: Optional[int]
    betti: tuple[Optional[int], ...]
    even_betti_degrees: tuple[int, ...]
    dim7_torsion: Optional[tuple[int, int]] = None
    stage2: Optional[Stage2Data] = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def dimension(self) -> int:
        return 2 * self.k + 1

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "dimension": self.dimension,
            "pi1": self.pi1,
            "pi2_rank": self.pi2_rank,
            "pi3_rank": self.pi3_rank,
            "pi4_2torsion_rank": self.pi4_2torsion_rank,
            "h2_rank": self.h2_rank,
            "h3_rank": self.h3,
            "h4_free_rank": self.h4_free_rank,
            "betti": ["unknown" if b is None else b for b in self.betti],
            "even_betti_degrees": list(self.even_betti_degrees),
            "dim7_torsion": None if self.dim7_torsion is None else list(self.dim7_torsion),
            "stage2": None if self.stage2 is None else self.stage2.to_json(),
            "notes": list(self.notes),
        }


def h4_free_rank(k: int) -> int:
    if k < 3:
        raise ValueError("the H^4 free-rank formula needs k >= 3")
    return k * (k - 3) // 2


def even_betti_degrees(k: int) -> tuple[int, ...]:
    # odd degrees 3, 5, ..., 2 floor((k+2)/2) - 1; b4 = 5 at k = 5 rules out even degrees
    top = 2 * ((k + 2) // 2) - 1
    return tuple(range(3, top + 1, 2))


def _betti(k: int) -> list[Optional[int]]:
    dim = 2 * k + 1
    b: list[Optional[int]] = [None] * (dim + 1)
    known = {0: 1, 1: 0, 2: k - 1}
    if k == 2:
        # S^2 x S^3: everything follows from Poincare duality
        known[3] = k - 1
    else:
        known[3] = 0
        known[4] = h4_free_rank(k)
    for i, v in known.items():
        b[i] = v
        b[dim - i] = v
    return b


def invariants(k: int) -> TopologyReport:
    if k < 2:
        raise ValueError(f"height k must be at least 2, got {k}")
    betti = _betti(k)
    notes = []
    if k == 2:
        notes.append("k = 2: H^3 and H^4 from Poincare duality, not the k >= 3 formulas")
        evens: tuple[int, ...] = ()
    else:
        evens = even_betti_degrees(k)
        for d in evens:
            b = betti[d]
            if b is not None and b % 2:
                raise AssertionError(f"b_{d} = {b} should be even")
    return TopologyReport(
        k=k, pi1="trivial", pi2_rank=k - 1, pi3_rank=k, pi4_2torsion_rank=k,
        h2_rank=k - 1,
        h3=betti[3],
        h4_free_rank=betti[4],
        betti=tuple(betti),
        even_betti_degrees=evens,
        notes=tuple(notes),
    )


def dim7_torsion(v, m: int, l2, w2) -> tuple[int, int]:
    """Orders of the cyclic summands of ``H^4(M^7, Z)``.

    ``(v0 vinf m^2 l2inf, w2_0 w2_inf (l2_0)^2)``; ``l2inf`` enters to the
    first power only.
    """
    v, l2, w2 = WeightPair.of(v), WeightPair.of(l2), WeightPair.of(w2)
    if m < 1:
        raise ValueError("m must be positive")
    return v.product * m * m * l2.ainf, w2.product * l2.a0 ** 2


def tower_topology(tower: JoinTower) -> TopologyReport:
    """``invariants(k)`` plus the stage-2 Chern data and, at k = 3 over a round S^3, the torsion."""
    k = tower.height
    rep = invariants(k)
    st2 = tower.stages[1]
    c = stage2_c1(st2.l, st2.w)
    extra = {"stage2": Stage2Data(c.coefficient, c.bundle)}
    notes = list(rep.notes)
    if k == 3:
        if tower.stages[0].w.pair != (1, 1):
            notes.append("torsion formula needs stage-1 weights (1, 1); not computed")
        elif st2.v is None:
            raise JoinInputError("the torsion formula needs the stage-2 Reeb choice v")
        else:
            inv = stage_invariants(st2.l, st2.w, st2.v)
            st3 = tower.stages[2]
            extra["dim7_torsion"] = dim7_torsion(st2.v, inv.m, st3.l, st3.w)
    return TopologyReport(**{**rep.__dict__, **extra, "notes": tuple(notes)})
