"""
Command-line interface: ``domaindiv {synth,train,divide,eval,ablate,run}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .config import DivisionConfig, PipelineConfig, load_config, load_synthetic_config, \
    read_json, validate
from .data import Dataset, make_dataset, read_features_csv, read_labels_csv, read_matrix, \
    write_dataset, write_prototypes
from .errors import DataError, DimensionMismatchError, DomainDivisionError
from .experiment import run_ablation_suite, run_experiment, write_ablation_table, \
    write_boundaries, write_decisions, write_predictions, write_report
from .pipeline import FittedPipeline, apply_pipeline, divide_pipeline, evaluate_outcome, \
    fit_pipeline, load_inputs, stage
from .store.model_file import load_model, save_boundaries, save_model
from .synthetic import generate_synthetic

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def _setup_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")


def _read_test(fitted: FittedPipeline, features: str, labels: Optional[str],
               labelled: bool) -> Dataset:
    """
    Read test instances. Without ``labelled`` the label column is ignored.
    """
    with stage("data"):
        if Path(features).suffix.lower() == ".ddiv":
            if labels is None:
                raise DataError("DDIV features need --labels.")
            ids, names = read_labels_csv(labels)
            X = read_matrix(features)
            if X.shape[0] != len(ids):
                raise DimensionMismatchError(f"{features} has {X.shape[0]} rows, {labels} "
                                             f"has {len(ids)}.")
        else:
            ids, names, X = read_features_csv(features)
        if labelled:
            return make_dataset(ids, names, X, fitted.classes)
        return Dataset(X, np.zeros(len(ids), dtype=np.int64), tuple(ids), fitted.classes)


def _division(fitted: FittedPipeline, args: argparse.Namespace) -> DivisionConfig:
    payload = fitted.config.division.model_dump()
    if args.no_bootstrap:
        payload["use_bootstrap"] = False
    if args.no_ks:
        payload["use_ks"] = False
    if args.fixed_delta is not None:
        payload["fixed_delta"] = args.fixed_delta
    return validate(DivisionConfig, payload)


def _train_config(args: argparse.Namespace) -> PipelineConfig:
    payload: Dict[str, Any] = read_json(args.config) if args.config else {}
    payload.pop("synthetic", None)
    payload["data"] = {"features": args.features, "prototypes": args.prototypes,
                       "split": args.split, "labels": args.labels}
    overrides = {"seed": args.seed, "alpha": args.alpha, "task": args.task}
    payload.update({k: v for k, v in overrides.items() if v is not None})
    scorer = dict(payload.get("scorer", {}))
    if args.kernel is not None:
        scorer["kernel"] = args.kernel
    if args.cv is not None:
        scorer["cross_validate"] = args.cv
    payload["scorer"] = scorer
    if args.bootstrap_n is not None:
        payload["bootstrap"] = {**payload.get("bootstrap", {}), "n_resamples": args.bootstrap_n}
    if args.alpha is not None:
        payload["bootstrap"] = {**payload.get("bootstrap", {}), "alpha": args.alpha}
    if args.ridge is not None:
        payload["embedding"] = {**payload.get("embedding", {}), "ridge": args.ridge}
    return validate(PipelineConfig, payload)


def cmd_synth(args: argparse.Namespace) -> None:
    cfg = load_synthetic_config(args.config)
    with stage("data"):
        dataset, split, prototypes = generate_synthetic(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_dataset(dataset, split, out / "features.csv", out / "split.json")
        write_prototypes(prototypes, out / "prototypes.csv")
    logger.info("Wrote synthetic dataset (%d instances) to %s", dataset.n_instances, out)


def cmd_train(args: argparse.Namespace) -> None:
    cfg = _train_config(args)
    dataset, split, prototypes = load_inputs(cfg)
    fitted = fit_pipeline(dataset, split, prototypes, cfg)
    with stage("artifacts"):
        save_model(args.out, fitted)


def cmd_divide(args: argparse.Namespace) -> None:
    fitted = load_model(args.model)
    test = _read_test(fitted, args.features, args.labels, labelled=False)
    divided = divide_pipeline(fitted, test, _division(fitted, args))
    with stage("artifacts"):
        write_decisions(args.out, divided.decisions)
        save_boundaries(args.model, fitted, divided.boundaries)
        if args.dump_boundaries:
            write_boundaries(args.dump_boundaries, divided.boundaries)


def cmd_eval(args: argparse.Namespace) -> None:
    fitted = load_model(args.model)
    test = _read_test(fitted, args.features, args.labels, labelled=True)
    outcome = apply_pipeline(fitted, test, _division(fitted, args), args.task)
    report = evaluate_outcome(fitted, test, outcome, args.per_class or None)
    with stage("artifacts"):
        write_report(args.out, report)
        if args.predictions:
            write_predictions(args.predictions, outcome.decisions, outcome.predictions)


def cmd_ablate(args: argparse.Namespace) -> None:
    table = run_ablation_suite(load_config(args.config))
    with stage("artifacts"):
        write_ablation_table(args.out, table)


def cmd_run(args: argparse.Namespace) -> None:
    run_experiment(load_config(args.config), args.out)


def _add_division_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-bootstrap", action="store_true",
                   help="Use the fixed threshold instead of the bootstrap estimate.")
    p.add_argument("--no-ks", action="store_true", help="Skip the K-S boundary shrinking.")
    p.add_argument("--fixed-delta", type=float, default=None,
                   help="Fixed threshold used with --no-bootstrap (default: from the model).")


def build_argparser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="domaindiv",
        description="Divide test data into known, unknown and uncertain domains."
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0,
                   help="Increase log verbosity (repeatable).")
    p.add_argument("-q", "--quiet", action="store_true", help="Only log errors.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="Generate a synthetic dataset.")
    s.add_argument("--config", required=True, help="Synthetic configuration JSON.")
    s.add_argument("--out", required=True, help="Output directory.")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="Fit scorers, calibration and embedding.")
    s.add_argument("--features", required=True, help="Features CSV or DDIV matrix.")
    s.add_argument("--labels", default=None, help="Labels CSV (with DDIV features).")
    s.add_argument("--prototypes", required=True, help="Prototypes CSV.")
    s.add_argument("--split", required=True, help="Split JSON.")
    s.add_argument("--out", required=True, help="Model file to write.")
    s.add_argument("--config", default=None, help="Pipeline configuration JSON.")
    s.add_argument("--kernel", choices=["rbf", "linear"], default=None)
    s.add_argument("--alpha", type=float, default=None, help="Significance level.")
    s.add_argument("--bootstrap-n", type=int, default=None, help="Bootstrap resample size.")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--cv", action=argparse.BooleanOptionalAction, default=None,
                   help="Cross-validate scorer C and gamma (default: from the config, on).")
    s.add_argument("--ridge", type=float, default=None, help="Embedding ridge strength.")
    s.add_argument("--task", choices=["gzsl", "osl"], default=None)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("divide", help="Divide test instances into domains.")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--labels", default=None)
    s.add_argument("--out", required=True, help="Decisions CSV to write.")
    s.add_argument("--dump-boundaries", default=None, help="Boundaries CSV to write.")
    _add_division_flags(s)
    s.set_defaults(func=cmd_divide)

    s = sub.add_parser("eval", help="Recognize and evaluate a labelled test set.")
    s.add_argument("--task", choices=["gzsl", "osl"], required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--labels", default=None)
    s.add_argument("--out", required=True, help="Report JSON to write.")
    s.add_argument("--predictions", default=None, help="Predictions CSV to write.")
    s.add_argument("--per-class", action="store_true", help="Class-averaged accuracies.")
    _add_division_flags(s)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("ablate", help="Run the four bootstrap/K-S variants.")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="Table CSV to write.")
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("run", help="Run a configured experiment end to end.")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="Artifact directory.")
    s.set_defaults(func=cmd_run)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_argparser().parse_args(argv)
    _setup_logging(args.verbose, args.quiet)
    try:
        args.func(args)
    except DomainDivisionError as e:
        where = f" [{e.stage}]" if e.stage else ""
        print(f"domaindiv{where}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
