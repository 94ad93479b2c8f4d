# models/policy.py
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Dict, Any, Tuple

import numpy as np

from core.exceptions import InvalidParameterError


class TauRule(Enum):
    FADMM_THEORY = "fadmm-theory"
    HADMM_THEORY = "hadmm-theory"
    JADMM_THEORY = "jadmm-theory"
    HADMM2_THEORY = "hadmm2-theory"
    UNIFORM_MANUAL = "uniform-manual"
    PER_BLOCK_MANUAL = "per-block-manual"

    @property
    def needs_strong_convexity(self) -> bool:
        return self in (TauRule.FADMM_THEORY, TauRule.HADMM_THEORY)

    @property
    def is_theoretical(self) -> bool:
        return self.value.endswith("-theory")


@dataclass(eq=False)
class RegularizerPolicy:
    """Per-block τ_j defining P_j = τ_j I − ρA_jᵀA_j"""
    rule: TauRule
    tau: np.ndarray
    safety_factor: float = 1.0
    note: str = ""

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float).ravel()
        if self.safety_factor < 1.0:
            raise InvalidParameterError(f"safety factor must be >= 1, got {self.safety_factor}")
        if self.tau.size == 0 or not np.all(self.tau > 0) or not np.all(np.isfinite(self.tau)):
            raise InvalidParameterError("all τ_j must be positive and finite")

    @property
    def n(self) -> int:
        return self.tau.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rule": self.rule.value,
            "tau": self.tau.tolist(),
            "safety_factor": self.safety_factor,
            "note": self.note,
        }


@dataclass
class SpectralReport:
    """Spectral quantities behind the theoretical τ rules"""
    per_block_norms: np.ndarray
    per_group_norms: Optional[np.ndarray] = None
    coupling_norm_blocks: float = 0.0
    coupling_norm_groups: Optional[float] = None
    full_norm: Optional[float] = None
    index_sets: Optional[Tuple[Tuple[int, ...], ...]] = None
    residuals: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "per_block_norms": np.asarray(self.per_block_norms).tolist(),
            "per_group_norms": None if self.per_group_norms is None else np.asarray(self.per_group_norms).tolist(),
            "coupling_norm_blocks": self.coupling_norm_blocks,
            "coupling_norm_groups": self.coupling_norm_groups,
            "full_norm": self.full_norm,
        }
