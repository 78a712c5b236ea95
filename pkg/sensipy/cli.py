"""Command-line interface.

Exit codes: 0 when every check passes, 2 when a study violates a bound,
1 on usage, configuration or input errors.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from sensipy import __version__
from sensipy.exceptions import SensipyError, UnboundedSupportError
from sensipy.experiments.config import StudyConfig, load_config
from sensipy.experiments.studies import run_study
from sensipy.grf.kl import kl_from_model
from sensipy.grf.matern import sample_field
from sensipy.io.read import read_samples
from sensipy.io.write import write, write_config, write_fields, write_kl, write_report
from sensipy.metrics.wasserstein import wasserstein_1d
from sensipy.parallel import resolve_threads
from sensipy.pde.solver import solve
from sensipy.risk.functional import AverageValueAtRisk
from sensipy.risk.sensitivity import sensitivity_bound, support_norm_bound
from sensipy.risk.spec import RiskFactory

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


class UsageError(SensipyError):
    """Raised for malformed command lines."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file.")
    common.add_argument("--out", type=Path, help="Output directory.")
    common.add_argument("--seed", type=int, help="Seed, overrides the configuration.")
    common.add_argument("--threads", type=int,
                        help="Worker threads, else $SENSIPY_THREADS, else 1.")
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = _Parser(prog="sensipy", description=(
        "Sensitivity of elliptic diffusion problems to perturbed input measures."))
    parser.add_argument("--version", action="version", version=f"sensipy {__version__}")
    verbs = parser.add_subparsers(dest="verb", metavar="VERB", required=True)

    sample = verbs.add_parser("field-sample", parents=[common],
                              help="Draw Gaussian fields, written to fields.csv.")
    sample.add_argument("-n", type=int, default=10, help="Number of fields.")
    sample.add_argument("--lognormal", action="store_true", help="Write exp of the field.")

    verbs.add_parser("kl", parents=[common], help="KL eigenpairs, written to kl.csv.")
    verbs.add_parser("solve", parents=[common],
                     help="Solve with the mean data, written to solution.csv.")

    distance = verbs.add_parser("distance", parents=[common],
                                help="Wasserstein distance of two sample files.")
    distance.add_argument("first", type=Path)
    distance.add_argument("second", type=Path)
    distance.add_argument("--p", type=float, help="Order, default from the configuration.")

    risk = verbs.add_parser("risk", parents=[common],
                            help="Risk of a sample file, written to risk.csv.")
    risk.add_argument("samples", type=Path)
    risk.add_argument("--compare", type=Path,
                      help="Second sample file; adds the gap and its sensitivity bound.")

    verbs.add_parser("study", parents=[common], help="Run a study, written to report.json.")
    return parser


def parse_config(path: Optional[Path], seed: Optional[int] = None) -> StudyConfig:
    """Configuration from `path`, or the defaults; `seed` overrides it."""
    config = StudyConfig() if path is None else load_config(path)
    return config.with_seed(seed)


def _out(args: argparse.Namespace) -> Path:
    out = Path(".") if args.out is None else args.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _field_sample(args: argparse.Namespace, config: StudyConfig) -> int:
    grid = config.grid.build()
    transform = "exponential" if args.lognormal else "identity"
    fields = sample_field(config.field.build(grid, transform), grid, config.seed, args.n)
    write_fields(_out(args) / "fields.csv", fields)
    return EXIT_OK


def _kl(args: argparse.Namespace, config: StudyConfig) -> int:
    basis = kl_from_model(config.field.build(config.grid.build()))
    write_kl(_out(args) / "kl.csv", basis)
    return EXIT_OK


def _solve(args: argparse.Namespace, config: StudyConfig) -> int:
    grid = config.grid.build()
    a = config.field.build(grid).mean.map(np.exp)
    u = solve(a, config.source.mean(grid), grid)
    names = ["x", "y"][:grid.dim]
    records = [dict(zip(names, point.tolist()), u=value)
               for point, value in zip(grid.coordinates, u.values)]
    write(_out(args) / "solution.csv", records)
    print(f"{config.qoi.kind} {config.qoi.spec().build(grid)(u)!r}")
    return EXIT_OK


def _distance(args: argparse.Namespace, config: StudyConfig) -> int:
    p = config.p if args.p is None else args.p
    value = wasserstein_1d(read_samples(args.first), read_samples(args.second), p=p)
    print(repr(value))
    return EXIT_OK


def _risk(args: argparse.Namespace, config: StudyConfig) -> int:
    spec = config.risk.spec()
    functional = RiskFactory.create(spec)
    samples = read_samples(args.samples)
    q = config.p / (config.p - 1) if config.p > 1 else np.inf
    try:
        norm = support_norm_bound(functional, q)
    except UnboundedSupportError:
        norm = None
    record = {"spec": spec.label, "value": functional(samples),
              "dual": functional.dual(samples) if isinstance(functional, AverageValueAtRisk)
              else None,
              "support_norm": norm}
    if args.compare is not None:
        other = read_samples(args.compare)
        holder = config.sensitivity
        constant, beta, p = ((1.0, 1.0, config.p) if holder is None
                             else (holder.holder_constant, holder.beta, holder.p))
        distance = wasserstein_1d(samples, other, p=p)
        bound = sensitivity_bound(spec, constant, beta, p, distance)
        record.update(gap=record["value"] - functional(other), distance=distance,
                      bound=bound.bound)
        print(f"{spec.label} gap {record['gap']!r} bound {bound.bound!r}")
    else:
        print(f"{spec.label} {record['value']!r}")
    if args.out is not None:
        write(_out(args) / "risk.csv", [record])
    return EXIT_OK


def _study(args: argparse.Namespace, config: StudyConfig) -> int:
    report = run_study(config, resolve_threads(args.threads))
    path = write_report(_out(args), report)
    for check in report.failures:
        print(f"violation: {check.name} observed {check.observed!r} bound {check.bound!r}",
              file=sys.stderr)
    logger.info("report written to %s", path)
    return EXIT_OK if report.passed else EXIT_VIOLATION


VERBS = {
    "field-sample": _field_sample,
    "kl": _kl,
    "solve": _solve,
    "distance": _distance,
    "risk": _risk,
    "study": _study,
}


def dispatch(args: argparse.Namespace) -> int:
    """Runs a parsed command and returns its exit code."""
    config = parse_config(args.config, args.seed)
    if args.out is not None or args.verb in ("field-sample", "kl", "solve", "study"):
        write_config(_out(args), config.to_dict())
    return VERBS[args.verb](args, config)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return dispatch(args)
    except (SensipyError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
