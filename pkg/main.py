# main.py
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.config import Config, load_mapping
from core.exceptions import FlexADMMError, InvalidConfigError
from core.logging_setup import configure_logging
from analysis.oracles import l2_kkt_oracle
from analysis.spectral import SpectralCache
from analysis.tau_policy import check_policy, tau_report, tau_theory, tau_uniform, tuned_tau_value
from data.generators import INSTANCE_SPECS, gen_l1, gen_l2
from data.problem_store import MatrixMarketStore
from experiments.sweep import SweepSpec, THEORY_RULE, run_sweep
from models.blocks import BlockVector, make_contiguous_grouping, make_two_group_grouping
from models.policy import RegularizerPolicy, TauRule
from models.problem import Problem, ProblemFamily
from models.run import RunReport, RunStatus, Schedule, SolverConfig, StateSnapshot, StopRule
from solver.engine import run
from utils.formatter import Formatter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_MAX_EPOCHS = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_IO = 74

STATUS_EXIT = {
    RunStatus.CONVERGED: EXIT_OK,
    RunStatus.DIVERGED: EXIT_DIVERGED,
    RunStatus.MAX_EPOCHS: EXIT_MAX_EPOCHS,
}


class FlexADMM:
    """Main FlexADMM application"""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self.formatter = Formatter(self.config.float_digits)

        # Initialize problem store
        self.store = MatrixMarketStore(self.config.float_digits)

    def spectra(self, problem: Problem, strict: bool = True) -> SpectralCache:
        return SpectralCache(problem.matrix, self.config.power_tol, self.config.power_max_iters,
                             self.config.power_seed, strict=strict)

    def generate(self, family: str, seed: int, out_dir: Optional[Path] = None,
                 instance: Optional[Dict[str, Any]] = None) -> Problem:
        """Generate a benchmark instance and optionally persist it"""
        family = ProblemFamily(family)
        spec = INSTANCE_SPECS[family].from_dict(instance)
        problem = gen_l2(spec, seed) if family is ProblemFamily.L2 else gen_l1(spec, seed)[0]
        if out_dir is not None:
            self.store.save(problem, out_dir)
        return problem

    def load(self, problem_dir) -> Problem:
        return self.store.load(problem_dir)

    def default_rho(self, problem: Problem) -> float:
        if problem.family in INSTANCE_SPECS:
            return INSTANCE_SPECS[problem.family]().rho(problem)
        raise InvalidConfigError("custom instances need an explicit --rho")

    def schedule(self, problem: Problem, algorithm: str, groups: Optional[int] = None,
                 first_size: Optional[int] = None) -> Schedule:
        if algorithm == "fadmm":
            return Schedule.gauss_seidel()
        if algorithm == "jadmm":
            return Schedule.jacobi()
        if algorithm == "hadmm":
            if groups is None:
                raise InvalidConfigError("hadmm needs the number of groups (--groups)")
            return Schedule.hybrid(make_contiguous_grouping(problem.partition, groups))
        if algorithm == "hadmm2":
            return Schedule.two_group(make_two_group_grouping(problem.partition, first_size))
        raise InvalidConfigError(f"unknown algorithm {algorithm!r}")

    def policy(self, problem: Problem, algorithm: str, schedule: Schedule, rho: float,
               tau_rule: Optional[str] = None, tau_value: Optional[float] = None,
               tau_multiplier: Optional[float] = None, mu: Optional[float] = None,
               safety: float = 1.0, spectra: Optional[SpectralCache] = None) -> RegularizerPolicy:
        spectra = spectra or self.spectra(problem)
        mu = problem.mu if mu is None else mu

        if tau_value is not None or tau_multiplier is not None:
            if tau_value is None:
                tau_value = tuned_tau_value(problem.matrix, rho, tau_multiplier, spectra)
            policy = tau_uniform(tau_value, problem.n, note="manual")
            checks = check_policy(policy, problem.matrix, rho, mu, schedule.grouping, spectra)
            if checks.get(THEORY_RULE[algorithm].value) is False or not checks["p_psd"]:
                logger.warning("τ = %s does not satisfy the sufficient condition for %s: %s",
                               self.formatter.format_float(tau_value), algorithm, checks)
            return policy

        rule = THEORY_RULE[algorithm] if tau_rule in (None, "theory") else TauRule(tau_rule)
        return tau_theory(rule, problem.matrix, schedule.grouping, rho, mu, safety, spectra)

    def solve(self, problem: Problem, algorithm: str, rho: Optional[float] = None,
              gamma: float = 1.0, groups: Optional[int] = None, first_size: Optional[int] = None,
              tau_rule: Optional[str] = None, tau_value: Optional[float] = None,
              tau_multiplier: Optional[float] = None, mu: Optional[float] = None,
              safety: float = 1.0, max_epochs: Optional[int] = None, tol: float = 1e-10,
              track_g_metric: bool = False) -> RunReport:
        """Run one algorithm on one instance"""
        rho = self.default_rho(problem) if rho is None else rho
        schedule = self.schedule(problem, algorithm, groups, first_size)
        policy = self.policy(problem, algorithm, schedule, rho, tau_rule, tau_value,
                             tau_multiplier, mu, safety)

        if problem.x_star is not None:
            stop = StopRule.relative_error(problem.x_star, tol)
        else:
            stop = StopRule.constraint_residual(tol)

        config = SolverConfig(
            rho=rho, policy=policy, schedule=schedule, gamma=gamma,
            max_epochs=self.config.max_epochs if max_epochs is None else max_epochs,
            stop=stop,
            divergence_threshold=self.config.divergence_threshold,
            divergence_grace_epochs=self.config.divergence_grace_epochs,
            threads=self.config.threads,
            track_g_metric=track_g_metric,
        )
        x_ref, u_ref = self._reference(problem, with_dual=track_g_metric)
        report = run(problem, config, x_ref=x_ref, u_ref=u_ref)
        return report

    def _reference(self, problem: Problem, with_dual: bool = False
                   ) -> Tuple[Optional[np.ndarray], Optional[StateSnapshot]]:
        """Reference x* and, for ℓ2 with the G-metric on, the KKT pair (x*, y*)"""
        if problem.family is ProblemFamily.L2 and (problem.x_star is None or with_dual):
            x_star, y_star = l2_kkt_oracle(problem.matrix, problem.b)
            u_ref = StateSnapshot(BlockVector(problem.partition, x_star), y_star) if with_dual else None
            return (x_star if problem.x_star is None else problem.x_star), u_ref
        return problem.x_star, None

    def tau_report(self, problem: Problem, groups: Optional[int] = None, rho: Optional[float] = None,
                   mu: Optional[float] = None, first_size: Optional[int] = None) -> pd.DataFrame:
        rho = self.default_rho(problem) if rho is None else rho
        grouping = None if groups is None else make_contiguous_grouping(problem.partition, groups)
        two_groups = make_two_group_grouping(problem.partition, first_size) if problem.n >= 2 else None
        return tau_report(problem.matrix, rho, problem.mu if mu is None else mu, grouping, two_groups,
                          spectra=self.spectra(problem), include_two_group=not problem.mu > 0)

    def sweep(self, spec: SweepSpec) -> pd.DataFrame:
        return run_sweep(spec, self.config)


# ============================================
# COMMAND LINE
# ============================================

class CliParser(argparse.ArgumentParser):
    """Usage errors exit with 64"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _instance_option(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"{key}: {value!r} is not a number")


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (gen default: 0)")
    common.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: $FLEXADMM_OUTPUT_DIR or ./results)")
    common.add_argument("--threads", type=int, default=None, help="threads for within-epoch block solves")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = CliParser(prog="flexadmm", description="Flexible, hybrid and Jacobi ADMM benchmarks")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    gen = sub.add_parser("gen", parents=[common], help="generate a benchmark instance")
    gen.add_argument("family", choices=["l2", "l1"])
    gen.add_argument("--instance", type=_instance_option, action="append", default=[], metavar="KEY=VALUE",
                     help="override an instance constant (m, N, block_size, ...)")

    solve = sub.add_parser("solve", parents=[common], help="run one algorithm on a stored instance")
    solve.add_argument("problem_dir", type=Path)
    solve.add_argument("--alg", required=True, choices=sorted(THEORY_RULE))
    tau = solve.add_mutually_exclusive_group()
    tau.add_argument("--tau-rule", default="theory",
                     choices=["theory"] + [r.value for r in TauRule if r.is_theoretical])
    tau.add_argument("--tau-value", type=float, help="uniform τ for every block")
    tau.add_argument("--tau-multiplier", type=float, help="uniform τ = c·(ρ²/2)‖A‖₂⁴")
    solve.add_argument("--rho", type=float)
    solve.add_argument("--gamma", type=float, default=1.0)
    solve.add_argument("--groups", type=int, help="number of groups ℓ for hadmm")
    solve.add_argument("--first-size", type=int, help="blocks in the first group for hadmm2")
    solve.add_argument("--mu", type=float, help="strong convexity modulus assumed by the F/H τ rules")
    solve.add_argument("--safety", type=float, default=1.0)
    solve.add_argument("--max-epochs", type=int)
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("--trace", type=Path, help="write the per-epoch trace CSV here")
    solve.add_argument("--g-metric", action="store_true",
                       help="record the G-norm distance to the KKT point (l2) and the per-epoch G-norm step")

    sweep = sub.add_parser("sweep", parents=[common], help="run a table sweep from a TOML/JSON config")
    sweep.add_argument("config", type=Path)
    sweep.add_argument("--runs", type=int, help="override runs per cell")
    sweep.add_argument("--workers", type=int, help="processes running independent instances")

    report = sub.add_parser("tau-report", parents=[common], help="per-block τ for every applicable rule")
    report.add_argument("problem_dir", type=Path)
    report.add_argument("--groups", type=int)
    report.add_argument("--first-size", type=int)
    report.add_argument("--rho", type=float)
    report.add_argument("--mu", type=float)
    report.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    return parser


def _validate(parser: CliParser, args):
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.command == "solve":
        if args.alg == "hadmm" and args.groups is None:
            parser.error("--alg hadmm requires --groups")
        if args.rho is not None and not args.rho > 0:
            parser.error("--rho must be positive")
        if args.max_epochs is not None and args.max_epochs < 0:
            parser.error("--max-epochs must be >= 0")
    if args.command == "sweep" and args.runs is not None and args.runs < 1:
        parser.error("--runs must be >= 1")


def cmd_gen(app: FlexADMM, args) -> int:
    seed = 0 if args.seed is None else args.seed
    out_dir = args.out_dir or Path(app.config.output_dir) / f"{args.family}_seed{seed}"
    app.generate(args.family, seed, out_dir, dict(args.instance))
    print(out_dir)
    return EXIT_OK


def cmd_solve(app: FlexADMM, args) -> int:
    problem = app.load(args.problem_dir)
    tau_rule = None if args.tau_value is not None or args.tau_multiplier is not None else args.tau_rule
    report = app.solve(problem, args.alg, rho=args.rho, gamma=args.gamma, groups=args.groups,
                       first_size=args.first_size, tau_rule=tau_rule, tau_value=args.tau_value,
                       tau_multiplier=args.tau_multiplier, mu=args.mu, safety=args.safety,
                       max_epochs=args.max_epochs, tol=args.tol,
                       track_g_metric=args.g_metric)
    if args.trace is not None:
        app.formatter.write_csv(report.trace_frame(), args.trace)
    print(report.to_json(indent=2))
    return STATUS_EXIT[report.status]


def cmd_sweep(app: FlexADMM, parser: CliParser, args) -> int:
    data = load_mapping(args.config)
    if "algorithms" in data and not data["algorithms"]:
        parser.error(f"{args.config}: algorithm list is empty")
    if args.runs is not None:
        data["runs_per_cell"] = args.runs
        data["runs_overrides"] = {}
    if args.workers is not None:
        data["workers"] = args.workers
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        spec = SweepSpec(**data)
    except TypeError as e:
        raise InvalidConfigError(f"invalid sweep config {args.config}: {e}") from e

    table = app.sweep(spec)
    out_dir = Path(args.out_dir or app.config.output_dir)
    output = out_dir / (spec.output or f"{args.config.stem}.csv")
    app.formatter.write_csv(table, output)
    print(app.formatter.sweep_table(table))
    logger.info("sweep table written to %s", output)
    return EXIT_OK


def cmd_tau_report(app: FlexADMM, args) -> int:
    problem = app.load(args.problem_dir)
    report = app.tau_report(problem, args.groups, args.rho, args.mu, args.first_size)
    if args.out is not None:
        app.formatter.write_csv(report, args.out)
    else:
        sys.stdout.write(app.formatter.to_csv_text(report))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)

    try:
        config = Config()
        if args.threads is not None:
            config.threads = args.threads
        if args.out_dir is not None:
            config.output_dir = str(args.out_dir)
        configure_logging(config.log_level, args.verbose)
        app = FlexADMM(config)

        if args.command == "gen":
            return cmd_gen(app, args)
        if args.command == "solve":
            return cmd_solve(app, args)
        if args.command == "sweep":
            return cmd_sweep(app, parser, args)
        return cmd_tau_report(app, args)
    except FlexADMMError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        path = getattr(e, "filename", None)
        print(f"I/O error{f' on {path}' if path else ''}: {e.strerror or e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
