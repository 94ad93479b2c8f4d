# experiments/sweep.py
"""Multi-run averaged sweeps over (algorithm, τ cell)."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.config import Config, load_mapping
from core.exceptions import InvalidConfigError, NotStronglyConvexError
from analysis.spectral import SpectralCache
from analysis.tau_policy import tau_theory, tau_uniform, tuned_tau_value
from data.generators import INSTANCE_SPECS, gen_l1, gen_l2, run_seeds
from models.blocks import make_contiguous_grouping, make_two_group_grouping
from models.policy import TauRule
from models.problem import ProblemFamily
from models.run import Schedule, SolverConfig
from solver.engine import run

logger = logging.getLogger(__name__)

ALGORITHMS = ("jadmm", "hadmm2", "hadmm", "fadmm")
THEORY_RULE = {
    "fadmm": TauRule.FADMM_THEORY,
    "jadmm": TauRule.JADMM_THEORY,
    "hadmm": TauRule.HADMM_THEORY,
    "hadmm2": TauRule.HADMM2_THEORY,
}
SWEEP_COLUMNS = ["family", "algorithm", "tau_rule", "tau_multiplier", "runs", "mean_epochs",
                 "std_epochs", "mean_half_sq_residual", "diverged_fraction", "diverged"]


@dataclass
class SweepSpec:
    """One table: algorithms × τ cells, each averaged over seeded runs"""
    family: str
    algorithms: List[str]
    tau: Union[str, List[float]] = "theory"
    runs_per_cell: int = 20
    runs_overrides: Dict[str, int] = field(default_factory=dict)
    seed: int = 0
    max_epochs: int = 50000
    assumed_mu: Optional[float] = None
    divergence_cutoff: float = 0.0
    output: Optional[str] = None
    workers: int = 1
    instance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.family_kind = ProblemFamily(self.family)
        except ValueError:
            raise InvalidConfigError(f"unknown family {self.family!r}")
        if self.family_kind not in INSTANCE_SPECS:
            raise InvalidConfigError(f"no generator for family {self.family!r}")

        self.algorithms = list(self.algorithms)
        if not self.algorithms:
            raise InvalidConfigError("algorithm list is empty")
        unknown = [a for a in self.algorithms if a not in THEORY_RULE]
        if unknown:
            raise InvalidConfigError(f"unknown algorithms {unknown}; expected a subset of {sorted(THEORY_RULE)}")

        if isinstance(self.tau, str):
            if self.tau != "theory":
                raise InvalidConfigError(f"tau must be 'theory' or a list of multipliers, got {self.tau!r}")
        else:
            self.tau = [float(c) for c in self.tau]
            if not self.tau or any(c <= 0 for c in self.tau):
                raise InvalidConfigError("tau multipliers must be a non-empty list of positive numbers")

        if self.runs_per_cell < 1 or any(r < 1 for r in self.runs_overrides.values()):
            raise InvalidConfigError("runs per cell must be >= 1")
        if self.assumed_mu is not None and not self.assumed_mu > 0:
            raise InvalidConfigError("assumed_mu must be positive")
        if not 0 <= self.divergence_cutoff < 1:
            raise InvalidConfigError("divergence_cutoff must lie in [0, 1)")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        self.instance_spec = INSTANCE_SPECS[self.family_kind].from_dict(self.instance)

    @classmethod
    def from_file(cls, path) -> "SweepSpec":
        data = load_mapping(path)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown sweep keys in {path}: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise InvalidConfigError(f"invalid sweep config {path}: {e}") from e

    @property
    def is_theory(self) -> bool:
        return self.tau == "theory"

    def runs_for(self, algorithm: str) -> int:
        return int(self.runs_overrides.get(algorithm, self.runs_per_cell))

    def cells(self) -> List[Optional[float]]:
        return [None] if self.is_theory else list(self.tau)


def _schedule(algorithm: str, partition, instance_spec) -> Schedule:
    if algorithm == "fadmm":
        return Schedule.gauss_seidel()
    if algorithm == "jadmm":
        return Schedule.jacobi()
    if algorithm == "hadmm":
        return Schedule.hybrid(make_contiguous_grouping(partition, instance_spec.groups))
    first = getattr(instance_spec, "two_group_first", None)
    return Schedule.two_group(make_two_group_grouping(partition, first))


def _run_instance(spec: SweepSpec, config: Config, run_index: int, seed: int) -> List[Dict[str, Any]]:
    """Every (algorithm, τ cell) on the instance drawn from ``seed``"""
    if spec.family_kind is ProblemFamily.L2:
        problem = gen_l2(spec.instance_spec, seed)
    else:
        problem = gen_l1(spec.instance_spec, seed)[0]

    A = problem.matrix
    rho = spec.instance_spec.rho(problem)
    stop = spec.instance_spec.stop_rule(problem)
    mu = problem.mu if problem.mu > 0 or spec.assumed_mu is None else spec.assumed_mu
    spectra = SpectralCache(A, config.power_tol, config.power_max_iters, config.power_seed, strict=False)

    records = []
    for algorithm in spec.algorithms:
        if run_index >= spec.runs_for(algorithm):
            continue
        schedule = _schedule(algorithm, problem.partition, spec.instance_spec)
        for multiplier in spec.cells():
            if multiplier is None:
                rule = THEORY_RULE[algorithm]
                policy = tau_theory(rule, A, schedule.grouping, rho, mu, spectra=spectra)
            else:
                value = tuned_tau_value(A, rho, multiplier, spectra)
                policy = tau_uniform(value, problem.n, note=f"c={multiplier!r}")

            solver_config = SolverConfig(
                rho=rho, policy=policy, schedule=schedule, gamma=spec.instance_spec.gamma,
                max_epochs=spec.max_epochs, stop=stop,
                divergence_threshold=config.divergence_threshold,
                divergence_grace_epochs=config.divergence_grace_epochs,
            )
            report = run(problem, solver_config)
            records.append({
                "run": run_index,
                "seed": seed,
                "algorithm": algorithm,
                "tau_rule": policy.rule.value,
                "tau_multiplier": np.nan if multiplier is None else multiplier,
                "status": report.status.value,
                "epochs": report.epochs,
                "half_sq_residual": report.final_half_sq_residual,
            })
    logger.info("run %d (seed %d) done", run_index, seed)
    return records


def _run_instance_args(args):
    return _run_instance(*args)


def run_records(spec: SweepSpec, config: Optional[Config] = None) -> pd.DataFrame:
    """Per-run outcomes, ordered by (run, algorithm, τ cell) whatever the completion order"""
    config = config or Config()
    if spec.family_kind is ProblemFamily.L1 and spec.assumed_mu is None:
        needs_mu = [a for a in spec.algorithms if THEORY_RULE[a].needs_strong_convexity]
        if spec.is_theory and needs_mu:
            raise NotStronglyConvexError(
                f"{needs_mu} need μ > 0 under theoretical τ; set assumed_mu for the l1 family")

    total_runs = max(spec.runs_for(a) for a in spec.algorithms)
    seeds = run_seeds(spec.seed, total_runs)
    jobs = [(spec, config, r, s) for r, s in enumerate(seeds)]
    logger.info("sweep %s: %d algorithms × %d cells, up to %d runs", spec.family,
                len(spec.algorithms), len(spec.cells()), total_runs)

    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_instance_args, jobs))
    else:
        results = [_run_instance_args(job) for job in jobs]

    return pd.DataFrame([rec for batch in results for rec in batch])


def summarize(records: pd.DataFrame, spec: SweepSpec) -> pd.DataFrame:
    """Average epochs and residuals over converged runs for every cell"""
    rows = []
    for algorithm in spec.algorithms:
        for multiplier in spec.cells():
            cell = records[records["algorithm"] == algorithm]
            if multiplier is None:
                cell = cell[cell["tau_multiplier"].isna()]
            else:
                cell = cell[cell["tau_multiplier"] == multiplier]
            converged = cell[cell["status"] == "converged"]
            diverged_fraction = float((cell["status"] == "diverged").mean()) if len(cell) else 0.0
            rows.append({
                "family": spec.family,
                "algorithm": algorithm,
                "tau_rule": cell["tau_rule"].iloc[0] if len(cell) else "",
                "tau_multiplier": np.nan if multiplier is None else multiplier,
                "runs": len(cell),
                "mean_epochs": converged["epochs"].mean() if len(converged) else np.nan,
                "std_epochs": converged["epochs"].std(ddof=0) if len(converged) else np.nan,
                "mean_half_sq_residual": converged["half_sq_residual"].mean() if len(converged) else np.nan,
                "diverged_fraction": diverged_fraction,
                "diverged": diverged_fraction > spec.divergence_cutoff,
            })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def run_sweep(spec: SweepSpec, config: Optional[Config] = None) -> pd.DataFrame:
    """Run every cell of ``spec`` and return the summary table"""
    table = summarize(run_records(spec, config), spec)
    for row in table.itertuples():
        logger.info("%s %s c=%s: mean epochs %s, diverged %.0f%%", row.family, row.algorithm,
                    row.tau_multiplier, row.mean_epochs, 100 * row.diverged_fraction)
    return table


BUNDLED_CONFIGS = Path(__file__).parent / "configs"


def bundled_config(name: str) -> Path:
    path = BUNDLED_CONFIGS / f"{name}.toml"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled sweep config {name!r} in {BUNDLED_CONFIGS}")
    return path
