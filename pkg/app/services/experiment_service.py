"""
Experiment Service
Runs the benchmark protocol end to end: repeated random splits with optional
grid search, online vs refit comparison, reconstruction error, tuning and the
time-cost table. Every report is written atomically under the output directory.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.core.errors import MknnError, UsageError
from app.schemas.classify import AlgorithmParams, TuneGrid
from app.schemas.dataset import Dataset, SplitSpec
from app.schemas.run import RunConfig
from app.services import data_service
from app.services.classify_service import classify_all, classify_point, fit_mknn, predict
from app.services.metrics_service import error_rate, latency_percentiles, rmse, summarize
from app.services.online_service import OnlineSession, reconstruct_leave_one_out
from app.services.report_service import write_csv, write_json, write_jsonl
from app.services.tuning_service import tune

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["algorithm", "k", "labels_per_class", "seed", "error"]


class ExperimentRunner:
    """Drives one subcommand's experiment from a validated RunConfig"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out = Path(config.out)
        self._bench_data: Optional[Dataset] = None

    # ------------------------------------------------------------------
    # Shared plumbing
    # ------------------------------------------------------------------

    def load_dataset(self) -> Dataset:
        """Dataset from --data or --kind, optionally standardized"""
        cfg = self.config
        if cfg.data is not None and cfg.kind is not None:
            raise UsageError("give either --data or --kind, not both")
        if cfg.data is not None:
            ds = data_service.load_csv(cfg.data, cfg.label_column, cfg.unlabeled_marker)
        elif cfg.kind is not None:
            ds = data_service.make_synthetic(cfg.kind, cfg.per_class, cfg.noise, cfg.data_seed, cfg.bridging)
        else:
            raise UsageError("a dataset is required: --data PATH or --kind KIND")
        if cfg.standardize:
            ds = data_service.standardize(ds)
        return ds

    def scored_dataset(self) -> Dataset:
        """The fully labeled rows, used wherever splits are drawn and scored"""
        ds = self.load_dataset()
        truth = ds.ground_truth
        keep = np.flatnonzero(truth > 0)
        if keep.size < ds.n:
            logger.warning(f"Dropping {ds.n - keep.size} unlabeled rows of {ds.name} from scored experiments")
            ds = Dataset(
                samples=ds.samples[keep],
                labels=truth[keep],
                truth=truth[keep],
                class_names=ds.class_names,
                name=ds.name
            )
        return ds

    def working_dataset(self, seed: int) -> Dataset:
        """Loaded labels when the data is partially labeled, else a per-class split"""
        ds = self.load_dataset()
        if ds.l < ds.n:
            return ds
        return data_service.split(ds, SplitSpec(labels_per_class=self.config.labels_per_class[0], seed=seed))

    def _fan_out(self, work: Callable, tasks: List) -> List:
        """Map ``work`` over tasks on the worker pool, results in task order"""
        if self.config.workers > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(work, tasks))
        return [work(task) for task in tasks]

    def _seeds(self) -> range:
        return range(self.config.seed, self.config.seed + self.config.seeds)

    # ------------------------------------------------------------------
    # synth
    # ------------------------------------------------------------------

    def run_synth(self) -> Tuple[Path, Dataset]:
        cfg = self.config
        if cfg.kind is None:
            raise UsageError("synth requires --kind")
        ds = data_service.make_synthetic(cfg.kind, cfg.per_class, cfg.noise, cfg.data_seed, cfg.bridging)
        path = data_service.save_csv(ds, cfg.out, use_truth=True)
        logger.info(f"Wrote synthetic {cfg.kind} dataset to {path}")
        return path, ds

    # ------------------------------------------------------------------
    # bench
    # ------------------------------------------------------------------

    def _sweep_predictions(self, ds: Dataset, algorithm: str, params: AlgorithmParams, ks: Iterable[int]) -> Dict[int, np.ndarray]:
        """Predictions for every k; an mkNN fit is reused across k when the tree branch is fixed"""
        results = {}
        shared = None
        for k in ks:
            k_eff = min(k, ds.l)
            if algorithm == "mknn" and params.tree_branch is not None:
                if shared is None:
                    shared = fit_mknn(ds, params.graph_config(), params.trw_config(), 1)
                predictions, _ = classify_all(shared.model_copy(update={"k": k_eff}))
                results[k] = predictions
            else:
                results[k] = predict(ds, algorithm, params.model_copy(update={"k": k_eff}))
        return results

    def _bench_task(self, task: Tuple[str, int, int]) -> Tuple[List[dict], Optional[dict]]:
        algorithm, labels_per_class, seed = task
        cfg = self.config
        ds = self._bench_data
        try:
            split_ds = data_service.split(ds, SplitSpec(labels_per_class=labels_per_class, seed=seed))
            params = cfg.params()
            tuned = None
            grid = cfg.grid()
            if grid is not None:
                base = params.model_copy(update={"k": min(params.k, split_ds.l)})
                result = tune(split_ds, algorithm, grid, seed, base_params=base, workers=1)
                params = result.best
                tuned = {
                    "algorithm": algorithm,
                    "labels_per_class": labels_per_class,
                    "seed": seed,
                    "sigma": params.sigma,
                    "alpha": params.alpha,
                    "geo_neighbors": params.geo_neighbors,
                    "cv_error": result.best_error,
                }

            unlabeled = split_ds.unlabeled_indices
            truth = split_ds.ground_truth[unlabeled]
            rows = []
            sweep = self._sweep_predictions(split_ds, algorithm, params, range(cfg.k_min, cfg.k_max + 1))
            for k, predictions in sweep.items():
                error = error_rate(predictions[unlabeled], truth) if unlabeled.size else 0.0
                rows.append({
                    "algorithm": algorithm,
                    "k": k,
                    "labels_per_class": labels_per_class,
                    "seed": seed,
                    "error": error,
                })
        except MknnError as e:
            logger.error(f"bench {algorithm} on {ds.name} (labels/class={labels_per_class}, seed={seed}) failed: {e}")
            raise

        logger.info(f"bench {algorithm} labels/class={labels_per_class} seed={seed} done")
        return rows, tuned

    def run_bench(self) -> pd.DataFrame:
        """
        Error curves over k for every algorithm, labels-per-class value and seed

        Writes curves.csv, summary.jsonl and, when a grid is searched,
        tuned_params.jsonl.
        """
        cfg = self.config
        self._bench_data = self.scored_dataset()
        if any(lpc * self._bench_data.n_classes < cfg.k_max for lpc in cfg.labels_per_class):
            logger.warning("k exceeds the labeled count for some sweeps; those points vote with k = l")

        tasks = [
            (algorithm, lpc, seed)
            for algorithm in cfg.algorithms
            for lpc in cfg.labels_per_class
            for seed in self._seeds()
        ]
        outcomes = self._fan_out(self._bench_task, tasks)

        rows = [row for task_rows, _ in outcomes for row in task_rows]
        tuned = [record for _, record in outcomes if record is not None]

        curves = pd.DataFrame(rows, columns=CURVE_COLUMNS)
        curves = curves.sort_values(["algorithm", "labels_per_class", "k", "seed"], kind="stable")
        curves = curves.reset_index(drop=True)

        summary = []
        for (algorithm, lpc, k), group in curves.groupby(["algorithm", "labels_per_class", "k"], sort=True):
            report = summarize(group["error"].tolist(), swept=int(k))
            summary.append({
                "algorithm": algorithm,
                "labels_per_class": int(lpc),
                "k": int(k),
                "mean": report.mean,
                "stddev": report.stddev,
                "seeds": len(report.per_seed_errors),
            })

        write_csv(curves, self.out / "curves.csv")
        write_jsonl(summary, self.out / "summary.jsonl")
        if tuned:
            tuned.sort(key=lambda r: (r["algorithm"], r["labels_per_class"], r["seed"]))
            write_jsonl(tuned, self.out / "tuned_params.jsonl")
        return curves

    # ------------------------------------------------------------------
    # online
    # ------------------------------------------------------------------

    def _online_count(self, ds: Dataset, count: int) -> Tuple[dict, dict]:
        cfg = self.config
        base, held, held_truth = data_service.split_holdout(ds, count, cfg.seed)
        base = data_service.split(base, SplitSpec(labels_per_class=cfg.train_labels_per_class, seed=cfg.seed))
        params = cfg.params(k=min(cfg.k, base.l))
        gcfg, tcfg = params.graph_config(), params.trw_config()

        start = time.perf_counter()
        model = fit_mknn(base, gcfg, tcfg, params.k)
        fit_seconds = time.perf_counter() - start

        session = OnlineSession(model, k_recon=cfg.k_recon, full_rows=cfg.full_rows)
        results, timings = session.batch_online(held)
        sequential = np.array([r.predicted_class for r in results], dtype=np.int64)

        compared = count if cfg.refit_limit is None else min(count, cfg.refit_limit)
        refit = np.empty(compared, dtype=np.int64)
        start = time.perf_counter()
        for i in range(compared):
            grown = Dataset(
                samples=np.vstack([base.samples, held[i]]),
                labels=np.append(base.labels, 0),
                class_names=base.class_names,
                name=base.name
            )
            refit[i], _ = classify_point(fit_mknn(grown, gcfg, tcfg, params.k), base.n)
        refit_seconds = time.perf_counter() - start
        sequential_seconds = float(np.sum(timings[:compared])) if compared else 0.0

        record = {
            "online_count": count,
            "compared": compared,
            "agreement": float(np.mean(sequential[:compared] == refit)) if compared else None,
            "sequential_error": error_rate(sequential, held_truth) if count else None,
            "refit_error": error_rate(refit, held_truth[:compared]) if compared else None,
        }
        timing = {
            "online_count": count,
            "fit_seconds": fit_seconds,
            "sequential_seconds": float(np.sum(timings)),
            "refit_seconds": refit_seconds,
            "speedup": refit_seconds / sequential_seconds if sequential_seconds > 0 else None,
            "latency": latency_percentiles(timings),
        }
        logger.info(
            f"online count={count}: agreement={record['agreement']} "
            f"sequential={timing['sequential_seconds']:.3f}s refit={refit_seconds:.3f}s"
        )
        return record, timing

    def run_online(self) -> List[dict]:
        """
        Sequential vs refit mkNN across online-set sizes

        Writes online.jsonl (agreement and error, deterministic) and
        online_timing.jsonl (fit time, cumulative times, latency percentiles).
        """
        ds = self.scored_dataset()
        outcomes = [self._online_count(ds, count) for count in self.config.online_counts]
        records = [record for record, _ in outcomes]
        write_jsonl(records, self.out / "online.jsonl")
        write_jsonl([timing for _, timing in outcomes], self.out / "online_timing.jsonl")
        return records

    # ------------------------------------------------------------------
    # rmse
    # ------------------------------------------------------------------

    def run_rmse(self) -> dict:
        """Leave-one-out reconstruction error of samples and TRW weights"""
        cfg = self.config
        ds = self.working_dataset(cfg.seed)
        k_recon = cfg.k_recon or cfg.k
        params = cfg.params(k=min(cfg.k, ds.l))
        model = fit_mknn(ds, params.graph_config(), params.trw_config(), params.k)
        x_hat, weights, weights_hat = reconstruct_leave_one_out(model, k_recon, columns="all")

        record = {
            "dataset": ds.name,
            "n": ds.n,
            "k": k_recon,
            "sample_rmse": rmse(ds.samples, x_hat),
            "weight_rmse": rmse(weights, weights_hat),
        }
        write_json(record, self.out / "rmse.json")
        return record

    # ------------------------------------------------------------------
    # tune
    # ------------------------------------------------------------------

    def run_tune(self) -> dict:
        """Grid search per requested algorithm on one split"""
        cfg = self.config
        ds = self.working_dataset(cfg.seed)
        grid = cfg.grid() or TuneGrid(
            sigma_values=[cfg.sigma],
            alpha_values=[cfg.alpha],
            geo_neighbors_values=[cfg.geo_neighbors],
            folds=cfg.folds
        )
        base = cfg.params(k=min(cfg.k, ds.l))

        results = []
        for algorithm in cfg.algorithms:
            result = tune(ds, algorithm, grid, cfg.seed, base_params=base, workers=cfg.workers)
            results.append({
                "algorithm": algorithm,
                "sigma": result.best.sigma,
                "alpha": result.best.alpha,
                "geo_neighbors": result.best.geo_neighbors,
                "k": result.best.k,
                "cv_error": result.best_error,
                "scores": [
                    {
                        "sigma": s.params.sigma,
                        "alpha": s.params.alpha,
                        "geo_neighbors": s.params.geo_neighbors,
                        "error": s.error,
                    }
                    for s in result.scores
                ],
            })

        record = {"dataset": ds.name, "seed": cfg.seed, "folds": grid.folds, "results": results}
        write_json(record, self.out / "best_params.json")
        return record

    # ------------------------------------------------------------------
    # timecost
    # ------------------------------------------------------------------

    def run_timecost(self) -> pd.DataFrame:
        """Mean fit-and-predict wall time per algorithm and labeled ratio"""
        cfg = self.config
        ds = self.scored_dataset()
        rows = []
        for ratio in cfg.ratios:
            for algorithm in cfg.algorithms:
                seconds, errors = [], []
                for r in range(cfg.repeats):
                    split_ds = data_service.split_fraction(ds, ratio, cfg.seed + r)
                    params = cfg.params(k=min(cfg.k, split_ds.l))
                    start = time.perf_counter()
                    predictions = predict(split_ds, algorithm, params)
                    seconds.append(time.perf_counter() - start)
                    unlabeled = split_ds.unlabeled_indices
                    errors.append(error_rate(predictions[unlabeled], split_ds.ground_truth[unlabeled]))
                rows.append({
                    "algorithm": algorithm,
                    "ratio": ratio,
                    "mean_seconds": float(np.mean(seconds)),
                    "mean_error": float(np.mean(errors)),
                })
                logger.info(f"timecost {algorithm} ratio={ratio}: {rows[-1]['mean_seconds']:.4f}s")

        frame = pd.DataFrame(rows, columns=["algorithm", "ratio", "mean_seconds", "mean_error"])
        write_csv(frame, self.out / "timecost.csv")
        return frame
