"""
Command-line harness

Subcommands: synth, bench, online, rmse, tune, timecost. Options may also
come from a flat ``key = value`` file given with --config; flags win.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from dotenv.parser import parse_stream
from pydantic import ValidationError

from app.core.errors import DataError, MknnError, UsageError
from app.schemas.classify import ALGORITHMS
from app.schemas.run import SYNTHETIC_KINDS, RunConfig
from app.services.data_service import CURVES
from app.services.experiment_service import ExperimentRunner

logger = logging.getLogger(__name__)

SUPPRESS = argparse.SUPPRESS
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class HarnessParser(argparse.ArgumentParser):
    """Argument errors surface as UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def read_config_file(path: Path) -> Dict[str, str]:
    """Parse ``key = value`` lines with python-dotenv; ``#`` starts a comment"""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {path} does not exist")
    with path.open(encoding="utf-8") as fh:
        for binding in parse_stream(fh):
            if binding.error or (binding.key is not None and binding.value is None):
                raise UsageError(f"{path.name} line {binding.original.line}: expected key = value")
    values = dotenv_values(path, interpolate=False, encoding="utf-8")
    return {key.replace("-", "_"): value for key, value in values.items() if value is not None}


def _add_dataset_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("dataset")
    group.add_argument("--data", type=Path, default=SUPPRESS, help="CSV file, one sample per row")
    group.add_argument("--kind", choices=SYNTHETIC_KINDS, default=SUPPRESS, help="synthetic generator")
    group.add_argument("--per-class", dest="per_class", type=int, default=SUPPRESS)
    group.add_argument("--noise", type=float, default=SUPPRESS)
    group.add_argument("--bridging", type=int, default=SUPPRESS)
    group.add_argument("--data-seed", dest="data_seed", type=int, default=SUPPRESS)
    group.add_argument("--label-column", dest="label_column", default=SUPPRESS, help="name or index (default -1)")
    group.add_argument("--unlabeled-marker", dest="unlabeled_marker", default=SUPPRESS)
    group.add_argument("--standardize", action="store_true", default=SUPPRESS, help="z-score features")


def _add_model_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("model")
    group.add_argument("--k", type=int, default=SUPPRESS)
    group.add_argument("--sigma", type=float, default=SUPPRESS)
    group.add_argument("--alpha", type=float, default=SUPPRESS)
    group.add_argument("--tree-depth", dest="tree_depth", type=int, default=SUPPRESS)
    group.add_argument("--theta-fraction", dest="theta_fraction", type=float, default=SUPPRESS)
    group.add_argument("--tree-branch", dest="tree_branch", type=int, default=SUPPRESS)
    group.add_argument("--route", choices=("direct", "spd-fast"), default=SUPPRESS)
    group.add_argument("--self-loops", dest="self_loops", action="store_true", default=SUPPRESS)
    group.add_argument("--geo-neighbors", dest="geo_neighbors", type=int, default=SUPPRESS)


def _add_grid_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("grid search")
    group.add_argument("--sigma-grid", dest="sigma_grid", default=SUPPRESS, help="comma-separated values")
    group.add_argument("--alpha-grid", dest="alpha_grid", default=SUPPRESS)
    group.add_argument("--geo-grid", dest="geo_grid", default=SUPPRESS)
    group.add_argument("--folds", type=int, default=SUPPRESS)


def _add_common_options(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, default=SUPPRESS, help="key = value file")
    parser.add_argument("--out", "-o", dest="out", type=Path, default=SUPPRESS)
    parser.add_argument("--seed", type=int, default=SUPPRESS)
    parser.add_argument("--workers", type=int, default=SUPPRESS, help="defaults to MKNN_WORKERS")
    parser.add_argument("--log-level", dest="log_level", type=str.upper, choices=LOG_LEVELS, default=SUPPRESS)


def build_parser() -> HarnessParser:
    parser = HarnessParser(prog="mknn", description="Manifold kNN with constrained tired random walks")
    sub = parser.add_subparsers(dest="command", parser_class=HarnessParser)
    sub.required = True

    synth = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    synth.add_argument("--kind", choices=sorted(CURVES), default=SUPPRESS)
    synth.add_argument("--per-class", dest="per_class", type=int, default=SUPPRESS)
    synth.add_argument("--noise", type=float, default=SUPPRESS)
    synth.add_argument("--bridging", type=int, default=SUPPRESS)
    synth.add_argument("--seed", dest="data_seed", type=int, default=SUPPRESS)
    synth.add_argument("--out", "-o", dest="out", type=Path, required=True)
    synth.add_argument("--config", type=Path, default=SUPPRESS)
    synth.add_argument("--log-level", dest="log_level", type=str.upper, choices=LOG_LEVELS, default=SUPPRESS)

    bench = sub.add_parser("bench", help="error curves over k and repeated splits")
    _add_common_options(bench)
    _add_dataset_options(bench)
    _add_model_options(bench)
    _add_grid_options(bench)
    bench.add_argument("--algorithms", default=SUPPRESS, help=f"subset of {','.join(ALGORITHMS)}")
    bench.add_argument("--k-min", dest="k_min", type=int, default=SUPPRESS)
    bench.add_argument("--k-max", dest="k_max", type=int, default=SUPPRESS)
    bench.add_argument("--labels-per-class", dest="labels_per_class", default=SUPPRESS)
    bench.add_argument("--seeds", type=int, default=SUPPRESS, help="number of random splits")

    online = sub.add_parser("online", help="sequential vs refit mkNN")
    _add_common_options(online)
    _add_dataset_options(online)
    _add_model_options(online)
    online.add_argument("--train-labels-per-class", dest="train_labels_per_class", type=int, default=SUPPRESS)
    online.add_argument("--online-count", dest="online_counts", default=SUPPRESS, help="comma-separated sizes")
    online.add_argument("--k-recon", dest="k_recon", type=int, default=SUPPRESS)
    online.add_argument("--full-rows", dest="full_rows", action="store_true", default=SUPPRESS)
    online.add_argument("--refit-limit", dest="refit_limit", type=int, default=SUPPRESS)

    rmse = sub.add_parser("rmse", help="leave-one-out reconstruction error")
    _add_common_options(rmse)
    _add_dataset_options(rmse)
    _add_model_options(rmse)
    rmse.add_argument("--k-recon", dest="k_recon", type=int, default=SUPPRESS)
    rmse.add_argument("--labels-per-class", dest="labels_per_class", default=SUPPRESS)

    tune = sub.add_parser("tune", help="grid search by cross validation")
    _add_common_options(tune)
    _add_dataset_options(tune)
    _add_model_options(tune)
    _add_grid_options(tune)
    tune.add_argument("--algorithm", "--algorithms", dest="algorithms", default=SUPPRESS)
    tune.add_argument("--labels-per-class", dest="labels_per_class", default=SUPPRESS)

    timecost = sub.add_parser("timecost", help="fit-and-predict time per labeled ratio")
    _add_common_options(timecost)
    _add_dataset_options(timecost)
    _add_model_options(timecost)
    timecost.add_argument("--algorithms", default=SUPPRESS)
    timecost.add_argument("--ratios", default=SUPPRESS, help="comma-separated labeled fractions")
    timecost.add_argument("--repeats", type=int, default=SUPPRESS)

    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) under the explicit flags and validate"""
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level")}
    values: Dict[str, Any] = {}
    if getattr(args, "config", None) is not None:
        values.update(read_config_file(args.config))
    values.update(flags)
    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise UsageError(f"invalid options: {problems}")


def run_command(command: str, config: RunConfig) -> str:
    """Execute a subcommand and return a one-line summary"""
    runner = ExperimentRunner(config)
    if command == "synth":
        _, ds = runner.run_synth()
        return f"{ds.n} {ds.d} {ds.n_classes}"
    if command == "bench":
        curves = runner.run_bench()
        return f"{len(curves)} curve rows written to {config.out}"
    if command == "online":
        records = runner.run_online()
        return f"{len(records)} online sizes written to {config.out}"
    if command == "rmse":
        record = runner.run_rmse()
        return f"sample RMSE {record['sample_rmse']:.4f}% weight RMSE {record['weight_rmse']:.4f}%"
    if command == "tune":
        record = runner.run_tune()
        return "; ".join(
            f"{r['algorithm']}: sigma={r['sigma']} alpha={r['alpha']} geo={r['geo_neighbors']} "
            f"cv_error={r['cv_error']:.4f}"
            for r in record["results"]
        )
    if command == "timecost":
        frame = runner.run_timecost()
        return f"{len(frame)} time-cost rows written to {config.out}"
    raise UsageError(f"unknown command {command!r}")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "log_level", None):
            logging.getLogger().setLevel(args.log_level.upper())
        config = build_config(args)
        logger.info(f"Running {args.command} (workers={config.workers})")
        print(run_command(args.command, config))
        return 0
    except MknnError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        # schema checks on loaded data (non-finite samples, bad label codes)
        error = DataError(str(e).splitlines()[0])
        logger.error(f"Invalid data: {e}")
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code
    except OSError as e:
        # unreadable input or unwritable output path
        error = DataError(f"{e.strerror or e}: {e.filename}" if e.filename else str(e))
        logger.error(f"I/O failure: {e}")
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code
