# analysis/tau_policy.py
import logging
from typing import Dict, Optional, Sequence, List, Any

import numpy as np
import pandas as pd

from core.exceptions import (
    NotStronglyConvexError, DegenerateTauError, InvalidParameterError, InvalidConfigError,
)
from models.blocks import BlockMatrix, Grouping, make_two_group_grouping
from models.policy import RegularizerPolicy, TauRule
from analysis.spectral import SpectralCache

logger = logging.getLogger(__name__)

THEORY_RULES = (TauRule.JADMM_THEORY, TauRule.HADMM_THEORY, TauRule.FADMM_THEORY, TauRule.HADMM2_THEORY)


def _theory_values(rule: TauRule, A: BlockMatrix, g: Optional[Grouping], rho: float, mu: float,
                   spectra: SpectralCache) -> np.ndarray:
    if rule.needs_strong_convexity and not mu > 0:
        raise NotStronglyConvexError(f"{rule.value} needs a strongly convex objective (μ > 0), got μ = {mu}")

    if rule is TauRule.FADMM_THEORY:
        coupling = spectra.coupling_blocks
        return rho ** 2 / (2 * mu) * coupling ** 2 + rho * spectra.block_norms ** 2

    if rule is TauRule.JADMM_THEORY:
        return rho * (A.n - 1) * spectra.block_norms ** 2

    if rule is TauRule.HADMM2_THEORY:
        g = g if g is not None else make_two_group_grouping(A.partition)
        if g.ell != 2:
            raise InvalidConfigError(f"hadmm2-theory needs a 2-group grouping, got ℓ = {g.ell}")
        norms, _ = spectra.groups(g)
        return _spread(g, rho * norms ** 2)

    if rule is TauRule.HADMM_THEORY:
        if g is None:
            raise InvalidConfigError("hadmm-theory needs a grouping")
        norms, coupling = spectra.groups(g)
        return _spread(g, rho ** 2 / (2 * mu) * coupling ** 2 + rho * norms ** 2)

    raise InvalidConfigError(f"{rule.value} is not a theoretical rule")


def _spread(g: Grouping, per_group: np.ndarray) -> np.ndarray:
    tau = np.empty(g.partition.n)
    for i, s in enumerate(g.index_sets):
        tau[list(s)] = per_group[i]
    return tau


def tau_theory(rule: TauRule, A: BlockMatrix, g: Optional[Grouping], rho: float, mu: float,
               safety: float = 1.0, spectra: Optional[SpectralCache] = None) -> RegularizerPolicy:
    """τ_j dictated by the convergence theory of each schedule, times ``safety``.

    fadmm: (ρ²/2μ)‖A_DᵀA_△‖² + ρ‖A_j‖²
    hadmm: (ρ²/2μ)‖𝒜_Dᵀ𝒜_△‖² + ρ‖𝒜_i‖²      for j ∈ S_i
    jadmm: ρ(n − 1)‖A_j‖²
    hadmm2: ρ‖𝒜_i‖²                           for j ∈ S_i, ℓ = 2
    """
    rule = TauRule(rule)
    if safety < 1.0:
        raise InvalidParameterError(f"safety factor must be >= 1, got {safety}")
    if not rho > 0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    spectra = spectra or SpectralCache(A)

    tau = safety * _theory_values(rule, A, g, rho, mu, spectra)
    if np.any(tau <= 0):
        bad = np.flatnonzero(tau <= 0).tolist()
        raise DegenerateTauError(f"{rule.value} gives τ = 0 for blocks {bad[:10]}; P_j would not be positive definite")

    note = f"ρ={rho!r}, μ={mu!r}"
    if g is not None and rule in (TauRule.HADMM_THEORY, TauRule.HADMM2_THEORY):
        note += f", ℓ={g.ell}"
    return RegularizerPolicy(rule, tau, safety_factor=safety, note=note)


def tau_uniform(value: float, n: int, note: str = "") -> RegularizerPolicy:
    """The same τ for every block"""
    if not value > 0:
        raise InvalidParameterError(f"uniform τ must be positive, got {value}")
    return RegularizerPolicy(TauRule.UNIFORM_MANUAL, np.full(n, float(value)), note=note)


def tau_per_block(values: Sequence[float], note: str = "") -> RegularizerPolicy:
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise InvalidParameterError("per-block τ values must be positive")
    return RegularizerPolicy(TauRule.PER_BLOCK_MANUAL, values, note=note)


def tuned_tau_value(A: BlockMatrix, rho: float, multiplier: float,
                    spectra: Optional[SpectralCache] = None) -> float:
    """c·(ρ²/2)‖A‖₂⁴, the scale used for hand-tuned sweeps"""
    spectra = spectra or SpectralCache(A)
    return multiplier * rho ** 2 / 2 * spectra.full_norm ** 4


def check_policy(policy: RegularizerPolicy, A: BlockMatrix, rho: float, mu: float,
                 grouping: Optional[Grouping] = None,
                 spectra: Optional[SpectralCache] = None) -> Dict[str, Optional[bool]]:
    """Which sufficient conditions the τ vector meets (None: not applicable)"""
    spectra = spectra or SpectralCache(A)
    tau = policy.tau
    slack = 1.0 - 1e-12
    result: Dict[str, Optional[bool]] = {
        "p_psd": bool(np.all(tau >= slack * rho * spectra.block_norms ** 2)),
    }
    for rule in THEORY_RULES:
        try:
            g = grouping if rule is TauRule.HADMM_THEORY else None
            if rule is TauRule.HADMM_THEORY and g is None:
                result[rule.value] = None
                continue
            bound = _theory_values(rule, A, g, rho, mu, spectra)
        except NotStronglyConvexError:
            result[rule.value] = None
            continue
        result[rule.value] = bool(np.all(tau >= slack * bound))
    return result


def tau_report(A: BlockMatrix, rho: float, mu: float, grouping: Optional[Grouping] = None,
               two_groups: Optional[Grouping] = None, safety: float = 1.0,
               spectra: Optional[SpectralCache] = None,
               include_two_group: Optional[bool] = None) -> pd.DataFrame:
    """Per-block τ for every rule applicable to μ (the data behind the τ plots).

    The two-group rule is listed for merely convex objectives unless
    ``include_two_group`` says otherwise.

    Columns: block_index, rule, tau, status. Rules that cannot be evaluated
    for this instance appear once with an empty τ and a status explaining why.
    """
    if include_two_group is None:
        include_two_group = not mu > 0
    spectra = spectra or SpectralCache(A)
    rows: List[Dict[str, Any]] = []
    for rule in THEORY_RULES:
        if rule.needs_strong_convexity and not mu > 0:
            logger.info("skipping %s: objective is not strongly convex", rule.value)
            continue
        if rule is TauRule.HADMM_THEORY and grouping is None:
            continue
        if rule is TauRule.HADMM2_THEORY and (A.n < 2 or not include_two_group):
            continue
        g = grouping if rule is TauRule.HADMM_THEORY else two_groups
        try:
            policy = tau_theory(rule, A, g, rho, mu, safety, spectra)
        except DegenerateTauError:
            rows.append({"block_index": 0, "rule": rule.value, "tau": np.nan, "status": "degenerate"})
            continue
        rows.extend({"block_index": j, "rule": rule.value, "tau": t, "status": "ok"}
                    for j, t in enumerate(policy.tau))
    return pd.DataFrame(rows, columns=["block_index", "rule", "tau", "status"])
