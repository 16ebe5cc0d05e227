"""Command-line interface: simulate, fit, predict, evaluate.

All randomness flows from ``--seed``; outputs are byte-identical across runs
and across ``--threads`` values.  Exit codes: 0 success, 1 runtime or
validation failure, 2 usage or I/O failure.
"""

import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import argparse
import csv
import json
import sys

import numpy as np

from .data import Propensity, load_dataset
from .estimator import SMCAL
from .exceptions import ValidationError
from .regime import Regime, bootstrap_value, decide, ipw_value
from .simulation import SCENARIO_IDS, ScenarioSpec, run_replications
from .tuning import TuningSpec

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated float list, got {text!r}")


def _propensity_arg(text):
    if text == "empirical":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a probability or 'empirical', got {text!r}"
        )


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size (>= 1)")
    parser.add_argument("--config", default=None, help="key=value file merged under the flags")


def _add_tuning(parser):
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--criterion", choices=["concordance", "value"], default="concordance")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="explicit penalty (skips lambda selection)")
    parser.add_argument("--alpha", type=float, default=None,
                        help="explicit smoothing scale (skips alpha selection)")
    parser.add_argument("--lambda-grid", type=_float_list, default=None)
    parser.add_argument("--alpha-grid", type=_float_list, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smcal",
        description="Concordance-based individualized treatment regimes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run seeded benchmark replications")
    p.add_argument("--scenario", choices=SCENARIO_IDS, required=True)
    p.add_argument("--method", choices=["smcal", "scal"], default="smcal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--n-eval", type=int, default=1000)
    p.add_argument("--output", default="simulation", help="output path prefix")
    _add_tuning(p)
    _add_common(p)

    p = sub.add_parser("fit", help="fit a regime from a y,a,x1..xd CSV file")
    p.add_argument("--input", required=True)
    p.add_argument("--propensity", type=_propensity_arg, default="empirical")
    p.add_argument("--baseline", choices=["zero", "control-mean"], default="control-mean")
    p.add_argument("--output", default="regime.json")
    _add_tuning(p)
    _add_common(p)

    p = sub.add_parser("predict", help="apply a fitted regime to covariate rows")
    p.add_argument("--regime", required=True)
    p.add_argument("--input", required=True, help="CSV with header x1,...,xd")
    p.add_argument("--output", default="decisions.csv")
    _add_common(p)

    p = sub.add_parser("evaluate", help="IPW value of a regime on a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--regime", required=True)
    p.add_argument("--propensity", type=_propensity_arg, default="empirical")
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap draws (0 disables CI)")
    p.add_argument("--boot-size", type=int, default=None)
    p.add_argument("--output", default="value.json")
    _add_common(p)

    return parser


def _find_config(argv):
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _apply_config(argv, parser):
    """Parse with config-file values inserted before the user's flags,
    so explicitly passed flags win."""
    config_path = _find_config(argv)
    if config_path is None:
        return parser.parse_args(argv)
    injected = []
    with open(config_path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{config_path}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            injected += [f"--{key.replace('_', '-')}", value]
    command, rest = argv[0], argv[1:]
    return parser.parse_args([command] + injected + rest)


def _tuning_from_args(args):
    lam_grid = (args.lam,) if args.lam is not None else args.lambda_grid
    alpha_grid = (args.alpha,) if args.alpha is not None else args.alpha_grid
    return TuningSpec(
        lambda_grid=lam_grid,
        alpha_grid=alpha_grid,
        folds=args.folds,
        criterion=args.criterion,
    )


def _load_covariates(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        d = len(header)
        if header != [f"x{j}" for j in range(1, d + 1)]:
            raise ValidationError(f"{path}: header must be x1,...,xd")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValidationError(f"{path}: line {line_no}: non-numeric cell") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.asarray(rows)


def cmd_simulate(args):
    spec = ScenarioSpec(id=args.scenario, n=args.n, d=args.d, seed=args.seed)
    report = run_replications(
        spec,
        method=args.method,
        reps=args.reps,
        tuning=_tuning_from_args(args),
        seed=args.seed,
        threads=args.threads,
        n_eval=args.n_eval,
    )
    report.to_csv(f"{args.output}_replicates.csv")
    report.to_json(f"{args.output}_aggregate.json")
    print(report.summary_table())
    return EXIT_OK if report.n_ok >= 1 else EXIT_RUNTIME


def cmd_fit(args):
    data = load_dataset(args.input)
    model = SMCAL(
        lambda_=args.lam,
        alpha=args.alpha,
        propensity=args.propensity,
        baseline=args.baseline,
        folds=args.folds,
        criterion=args.criterion,
        lambda_grid=args.lambda_grid,
        alpha_grid=args.alpha_grid,
        random_state=args.seed,
    )
    model.fit(data.x, data.y, treatment=data.a)
    model.regime_.save(args.output)
    result = model.fit_result_
    print(
        f"fitted beta ({int(np.sum(model.beta_ != 0))} nonzero of {data.d}), "
        f"c={model.c_:.6g}, lambda={model.lambda_selected_:.6g}, "
        f"alpha={model.alpha_selected_:.6g}, loss={result.final_loss:.6g}, "
        f"sweeps={result.sweeps}, converged={result.converged}"
    )
    return EXIT_OK


def cmd_predict(args):
    regime = Regime.load(args.regime)
    x = _load_covariates(args.input)
    decisions = decide(regime, x)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["decision"])
        for dec in decisions:
            writer.writerow([int(dec)])
    print(f"wrote {len(decisions)} decisions to {args.output}")
    return EXIT_OK


def cmd_evaluate(args):
    data = load_dataset(args.input)
    regime = Regime.load(args.regime)
    prop = (
        Propensity.empirical()
        if args.propensity == "empirical"
        else Propensity.constant(args.propensity)
    )
    value = ipw_value(data, prop, regime)
    if args.bootstrap > 0:
        est = bootstrap_value(
            data, prop, regime, n_boot=args.bootstrap, boot_size=args.boot_size, seed=args.seed
        )
        print(f"value={value:.6g}  95% CI [{est.ci_low:.6g}, {est.ci_high:.6g}]")
    else:
        est = None
        print(f"value={value:.6g}")
    payload = {"value": value} if est is None else {**est.to_dict(), "value": value}
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(argv, parser)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry_point():
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
