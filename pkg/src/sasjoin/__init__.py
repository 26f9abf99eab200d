"""Exact arithmetic for iterated S^3_w Sasaki joins and their quotient Bott orbifolds."""

from .bott import BottMatrix, BottOrbifold, ClassVector, c1_orb, fano_index, is_log_fano
from .join import JoinStage, JoinTower, WeightPair, analyze_tower, is_smooth, stage_invariants

__version__ = "0.1.0"

__all__ = [
    "BottMatrix", "BottOrbifold", "ClassVector", "c1_orb", "fano_index", "is_log_fano",
    "JoinStage", "JoinTower", "WeightPair", "analyze_tower", "is_smooth", "stage_invariants",
]
