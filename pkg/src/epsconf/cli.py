"""Command-line front end.

Subcommands
-----------
simulate  run a Monte Carlo experiment and write a CSV or JSON report
gauss     closed-form oracle risk and score CDF for the Gaussian mixture
verify    run a numerical property suite

Exit codes: 0 success, 1 runtime or check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .distributions import gaussian_oracle_risk, gaussian_score_cdf, make_model
from .harness import ESTIMATOR_KINDS, ExperimentSpec, run_experiment
from .verify import SUITES

__all__ = ["main", "build_parser", "format_csv", "CSV_COLUMNS"]

CSV_SCHEMA = "#schema=1"
CSV_COLUMNS = (
    "model", "estimator", "n", "N", "K", "B", "epsilon",
    "mean_risk", "sd_risk", "mean_prop", "sd_prop", "undefined_count", "seed",
)


class UsageError(Exception):
    pass


def _epsilon_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values or any(not 0 < v <= 1 for v in values):
        raise argparse.ArgumentTypeError("epsilons must lie in (0, 1]")
    return values


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _float_list(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="epsconf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    sim.add_argument("--model", choices=("1", "2", "3", "gauss"), required=True)
    sim.add_argument("--estimator", choices=ESTIMATOR_KINDS, default="oracle")
    sim.add_argument("--n", type=_positive_int, default=1000, help="labeled training size")
    sim.add_argument("--N", type=_positive_int, default=1000, help="unlabeled calibration size")
    sim.add_argument("--K", type=_positive_int, default=1000, help="test size")
    sim.add_argument("--reps", type=_positive_int, default=100)
    sim.add_argument("--epsilons", type=_epsilon_list, default=[k / 10 for k in range(1, 11)])
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default="-", help="output path, '-' for stdout")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--workers", type=_positive_int, default=1)
    sim.add_argument("--mu0", type=_float_list)
    sim.add_argument("--mu1", type=_float_list)
    sim.add_argument("--sigma", type=_float_list, help="row-major covariance entries")
    sim.add_argument("--delta", type=float)
    sim.set_defaults(handler=cmd_simulate)

    gauss = sub.add_parser("gauss", help="closed-form Gaussian mixture quantities")
    gauss.add_argument("--delta", type=float, required=True)
    gauss.add_argument("--epsilon", type=float)
    gauss.add_argument("--cdf-at", type=float, dest="cdf_at")
    gauss.set_defaults(handler=cmd_gauss)

    ver = sub.add_parser("verify", help="run a numerical property suite")
    ver.add_argument("--suite", choices=sorted(SUITES), required=True)
    ver.add_argument("--budget", type=_positive_int, default=10**6, help="Monte Carlo draws")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--model", choices=("1", "2", "3"), default="2", help="control suite only")
    ver.add_argument("--estimator", choices=ESTIMATOR_KINDS[1:], default="logistic", help="control suite only")
    ver.add_argument("--n", type=_positive_int, default=100, help="control suite only")
    ver.add_argument("--N", type=_positive_int, default=100, help="control suite only")
    ver.add_argument("--K", type=_positive_int, default=1000, help="control suite only")
    ver.add_argument("--reps", type=_positive_int, default=100, help="control suite only")
    ver.set_defaults(handler=cmd_verify)
    return parser


def _gauss_model(args):
    if args.delta is not None:
        if any(v is not None for v in (args.mu0, args.mu1, args.sigma)):
            raise UsageError("--delta excludes --mu0/--mu1/--sigma")
        return make_model("gauss", delta=args.delta)
    if args.mu0 is None or args.mu1 is None:
        raise UsageError("gauss model needs --delta or both --mu0 and --mu1")
    if len(args.mu0) != len(args.mu1):
        raise UsageError("--mu0 and --mu1 must have the same length")
    sigma = None
    if args.sigma is not None:
        d = len(args.mu0)
        if len(args.sigma) != d * d:
            raise UsageError(f"--sigma needs {d * d} entries")
        sigma = [args.sigma[i * d : (i + 1) * d] for i in range(d)]
    return make_model("gauss", mu0=args.mu0, mu1=args.mu1, sigma=sigma)


def _num(value):
    return "" if value is None else f"{value:.6g}"


def format_csv(report):
    """CSV text for a report: schema comment, header, one row per epsilon."""
    spec = report.spec
    buf = io.StringIO()
    buf.write(CSV_SCHEMA + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in report.summaries:
        writer.writerow([
            getattr(spec.model, "name", str(spec.model)), spec.estimator, spec.n, spec.N, spec.K,
            spec.reps, _num(s.epsilon), _num(s.mean_risk), _num(s.sd_risk), _num(s.mean_prop),
            _num(s.sd_prop), s.undefined_count, spec.master_seed,
        ])
    return buf.getvalue()


def cmd_simulate(args):
    if args.model == "gauss":
        model = _gauss_model(args)
    else:
        if any(v is not None for v in (args.mu0, args.mu1, args.sigma, args.delta)):
            raise UsageError("--mu0/--mu1/--sigma/--delta only apply to --model gauss")
        model = make_model(args.model)
    spec = ExperimentSpec(
        model, args.estimator, n=args.n, N=args.N, K=args.K,
        epsilons=tuple(args.epsilons), reps=args.reps, master_seed=args.seed,
    )
    report = run_experiment(spec, workers=args.workers)
    if args.format == "csv":
        text = format_csv(report)
    else:
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if report.dropped:
        print(f"warning: {report.dropped} repetitions dropped", file=sys.stderr)
    return 0


def cmd_gauss(args):
    if args.epsilon is None and args.cdf_at is None:
        raise UsageError("give --epsilon, --cdf-at or both")
    if args.delta < 0:
        raise UsageError("--delta must be non-negative")
    if args.epsilon is not None:
        if not 0 < args.epsilon <= 1:
            raise UsageError("--epsilon must lie in (0, 1]")
        print(f"oracle_risk {gaussian_oracle_risk(args.delta, args.epsilon):.12g}")
    if args.cdf_at is not None:
        if not 0.5 <= args.cdf_at < 1:
            raise UsageError("--cdf-at must lie in [0.5, 1)")
        if args.delta == 0:
            raise UsageError("the score distribution is a point mass at 1/2 when --delta is 0")
        print(f"score_cdf {gaussian_score_cdf(args.delta, args.cdf_at):.12g}")
    return 0


def cmd_verify(args):
    if args.suite == "control":
        checks = SUITES["control"](
            model=make_model(args.model), estimator=args.estimator, n=args.n, N=args.N,
            K=args.K, reps=args.reps, seed=args.seed,
        )
    else:
        checks = SUITES[args.suite](draws=args.budget, seed=args.seed)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        try:
            return args.handler(args)
        except UsageError as exc:
            parser.error(str(exc))
    except SystemExit as exc:
        # argparse exits directly; hand the code back to the caller instead
        return exc.code if isinstance(exc.code, int) else 2
    except (ValueError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
