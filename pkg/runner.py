"""Experiment grid orchestration, result reports and audit artifacts."""
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

import config
from errors import BenchError, ConfigError, DataError
from evalx import (MetricSet, SearchPolicy, compute_metrics, make_splits,
                   random_search)
from ingest import AnnualSeries, load_gistemp
from roster import RosterFamily, get_model, search_space
from transform import PrepSpec
from utils import (calculate_file_hash, dumps_json, load_config_file,
                   stable_seed, to_jsonable, write_text_file)

log = logging.getLogger(__name__)

REPORT_COLUMNS = ["run_key", "model", "W", "rmse", "rmse_of_mean", "block_mean_rmse",
                  "mae", "mape", "seed", "hyperparams", "error"]
_CONFIG_TYPES = {"schema_version": int, "data_path": str, "column": str, "preps": list,
                 "test_sizes": list, "folds": int, "iterations": int, "base_seed": int,
                 "roster": list, "block_size": int, "workers": int}

# --- Configuration ---

@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str
    column: str
    preps: tuple[PrepSpec, ...]
    test_sizes: tuple[int, ...]
    folds: int
    iterations: int
    base_seed: int
    roster: tuple[str, ...]
    block_size: int = 5
    workers: int = 1
    schema_version: int = config.CONFIG_SCHEMA_VERSION

    @property
    def is_full_grid(self) -> bool:
        return len(self.preps) * len(self.test_sizes) == 18

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        """Builds a config from a parsed document, filling defaults for missing keys."""
        unknown = set(data) - set(config.DEFAULT_EXPERIMENT)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = {**config.DEFAULT_EXPERIMENT, **data}
        for key, expected in _CONFIG_TYPES.items():
            value = merged[key]
            if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
                raise ConfigError(f"'{key}' must be of type {expected.__name__}, got {value!r}")
        if merged["schema_version"] != config.CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {merged['schema_version']} "
                              f"(expected {config.CONFIG_SCHEMA_VERSION})")
        try:
            preps = tuple(PrepSpec.from_key(k) for k in merged["preps"])
        except DataError as e:
            raise ConfigError(str(e)) from e
        roster = tuple(get_model(str(code)).code for code in merged["roster"])
        test_sizes = tuple(merged["test_sizes"])
        if not preps or not test_sizes or not roster:
            raise ConfigError("preps, test_sizes and roster must all be non-empty")
        if any(not isinstance(t, int) or isinstance(t, bool) or t < 1 for t in test_sizes):
            raise ConfigError(f"test sizes must be positive integers, got {list(test_sizes)}")
        for key in ("folds", "iterations", "block_size", "workers"):
            if merged[key] < 1:
                raise ConfigError(f"'{key}' must be >= 1, got {merged[key]}")
        if len(set(preps)) != len(preps) or len(set(test_sizes)) != len(test_sizes) \
                or len(set(roster)) != len(roster):
            raise ConfigError("preps, test_sizes and roster must not contain duplicates")

        data_path = Path(merged["data_path"])
        if base_dir is not None and not data_path.is_absolute():
            data_path = Path(base_dir) / data_path
        return cls(data_path=str(data_path), column=merged["column"], preps=preps,
                   test_sizes=test_sizes, folds=merged["folds"], iterations=merged["iterations"],
                   base_seed=merged["base_seed"], roster=roster, block_size=merged["block_size"],
                   workers=merged["workers"], schema_version=merged["schema_version"])

    def validate_against(self, n: int):
        """Checks every test size against the series length and fold layout."""
        for T in self.test_sizes:
            if T % self.block_size:
                raise ConfigError(f"test size {T} is not divisible by block_size {self.block_size}")
            if n - T < (self.folds + 1) * T:
                raise ConfigError(
                    f"test size {T} violates n - T >= (folds + 1) * T "
                    f"for n={n}, folds={self.folds} (largest admissible T is {n // (self.folds + 2)})")

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "data_path": self.data_path,
                "column": self.column, "preps": [p.key for p in self.preps],
                "test_sizes": list(self.test_sizes), "folds": self.folds,
                "iterations": self.iterations, "base_seed": self.base_seed,
                "roster": list(self.roster), "block_size": self.block_size,
                "workers": self.workers}


def load_experiment_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    config_data, _, exists, parsed = load_config_file(path)
    if not exists:
        raise ConfigError(f"config file {path} not found")
    if not parsed:
        raise ConfigError(f"config file {path} is not a valid JSON/YAML mapping")
    config_data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(config_data, base_dir=Path(path).resolve().parent)

# --- Results ---

def cell_key(prep: PrepSpec, T: int, model: str) -> str:
    return f"{prep.key}-T{T}-{model}"


@dataclass
class RunResult:
    run_key: str
    prep: str
    test_size: int
    model: str
    window: int | None
    metrics: MetricSet | None
    chosen_hyperparams: dict
    per_year: list[tuple[int, float, float]]
    seed: int
    cv_score: float | None = None
    error: str | None = None
    audit: dict = field(default_factory=dict, repr=False)

    @property
    def cell(self) -> str:
        return f"{self.prep}-T{self.test_size}-{self.model}"

    def to_dict(self) -> dict:
        return {"run_key": self.run_key, "prep": self.prep, "test_size": self.test_size,
                "model": self.model, "window": self.window,
                "metrics": self.metrics.to_dict() if self.metrics else None,
                "chosen_hyperparams": to_jsonable(self.chosen_hyperparams),
                "per_year": [[int(y), float(o), float(p)] for y, o, p in self.per_year],
                "seed": self.seed, "cv_score": self.cv_score, "error": self.error}

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        metrics = data.get("metrics")
        return cls(run_key=data["run_key"], prep=data["prep"], test_size=int(data["test_size"]),
                   model=data["model"], window=data.get("window"),
                   metrics=MetricSet.from_dict(metrics) if metrics else None,
                   chosen_hyperparams=dict(data.get("chosen_hyperparams", {})),
                   per_year=[(int(y), float(o), float(p)) for y, o, p in data.get("per_year", [])],
                   seed=int(data["seed"]), cv_score=data.get("cv_score"), error=data.get("error"))


def _sort_key(r: RunResult) -> tuple:
    return (r.prep, r.test_size, r.model)

# --- Grid ---

def run_cell(series: AnnualSeries, prep: PrepSpec, T: int, model_code: str,
             cfg: ExperimentConfig) -> RunResult:
    """Tunes, refits and scores one (prep, test size, model) cell.

    Only the first n - T observations reach the pipeline, the search and the
    final fit; the last T are used for scoring alone.
    """
    model = get_model(model_code)
    key = cell_key(prep, T, model.code)
    seed = stable_seed(cfg.base_seed, key)
    base_key = f"{prep.key}-T{T}"
    result = RunResult(run_key=base_key, prep=prep.key, test_size=T, model=model.code,
                       window=None, metrics=None, chosen_hyperparams={}, per_year=[], seed=seed)
    try:
        n = series.n
        if T >= n:
            raise ConfigError(f"test size {T} leaves no training data (n={n})")
        train = series.values[:n - T].copy()
        test = series.values[n - T:]
        splits = make_splits(train.size, T, cfg.folds)
        family = RosterFamily(model, prep)
        policy = SearchPolicy(iterations=cfg.iterations, seed=seed)
        search = random_search(family, search_space(model.code), splits, policy, train)

        outcome = family.fit(search.best_params, train, T)
        window = search.best_params.get("window") if model.is_regression else None
        result.window = int(window) if window is not None else None
        result.run_key = f"W{window}-{base_key}" if window is not None else base_key
        result.chosen_hyperparams = dict(search.best_params)
        result.cv_score = search.cv_score
        result.metrics = compute_metrics(test, outcome.forecast, cfg.block_size)
        result.per_year = [(int(y), float(o), float(p))
                           for y, o, p in zip(series.years[n - T:], test, outcome.forecast)]
        result.audit = {"cell": key, "splits": splits.to_dict(), "pipeline": outcome.pipeline,
                        "model": outcome.model, "search": search.to_dict()}
        log.info("%s: RMSE %.4f (CV %.4f) with %s", key, result.metrics.rmse,
                 search.cv_score, search.best_params)
    except (BenchError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        result.error = f"{type(e).__name__}: {e}"
        result.audit = {"cell": key, "error": result.error}
        log.error("Run %s failed: %s", key, result.error, exc_info=True)
    return result


def _init_worker(level: int):
    logging.basicConfig(stream=sys.stderr, format=config.LOG_FORMAT, level=level)


def _run_job(job: tuple) -> RunResult:
    return run_cell(*job)


def run_grid(cfg: ExperimentConfig, series: AnnualSeries | None = None,
             workers: int | None = None, progress: bool = False) -> list[RunResult]:
    """Runs every (prep, test size, model) cell and returns results sorted by
    (prep, T, model). A failed cell is recorded, never fatal to the grid.

    With more than one worker, cells run in separate processes.
    """
    if series is None:
        series = load_gistemp(cfg.data_path, cfg.column)
    cfg.validate_against(series.n)
    cells = list(product(cfg.preps, cfg.test_sizes, cfg.roster))
    workers = workers or cfg.workers
    log.info("Running %d cells (%d preps x %d test sizes x %d models) with %d worker(s).",
             len(cells), len(cfg.preps), len(cfg.test_sizes), len(cfg.roster), workers)

    jobs = [(series, prep, T, model, cfg) for prep, T, model in cells]
    bar = tqdm(total=len(jobs), desc="grid", unit="run", file=sys.stderr,
               disable=not progress)
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(logging.getLogger().getEffectiveLevel(),)) as pool:
            for result in pool.map(_run_job, jobs):
                results.append(result)
                bar.update(1)
    else:
        for job in jobs:
            results.append(_run_job(job))
            bar.update(1)
    bar.close()
    failed = sum(1 for r in results if r.error)
    if failed:
        log.warning("%d of %d runs failed.", failed, len(results))
    return sorted(results, key=_sort_key)

# --- Reports ---

def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return ""
    return f"{value:.6f}"


def results_frame(results: list[RunResult]) -> pd.DataFrame:
    rows = []
    for r in sorted(results, key=_sort_key):
        m = r.metrics
        rows.append({
            "run_key": r.run_key,
            "model": r.model,
            "W": "" if r.window is None else str(r.window),
            "rmse": _fmt(m.rmse if m else None),
            "rmse_of_mean": _fmt(m.rmse_of_mean if m else None),
            "block_mean_rmse": _fmt(m.block_mean_rmse if m else None),
            "mae": _fmt(m.mae if m else None),
            "mape": _fmt(m.mape if m else None),
            "seed": str(r.seed),
            "hyperparams": json.dumps(to_jsonable(r.chosen_hyperparams), sort_keys=True),
            "error": r.error or "",
        })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def report(results: list[RunResult], fmt: str = "CSV", provenance: dict | None = None) -> str:
    """Serializes results as CSV or JSON with stable ordering and formatting."""
    if not results:
        raise DataError("report needs at least one result")
    fmt = fmt.upper()
    if fmt == "CSV":
        buffer = io.StringIO()
        results_frame(results).to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()
    if fmt == "JSON":
        document = {"provenance": provenance or {},
                    "results": [r.to_dict() for r in sorted(results, key=_sort_key)]}
        return dumps_json(document)
    raise ValueError(f"unknown report format '{fmt}'")


def parse_report_json(text: str) -> list[RunResult]:
    return [RunResult.from_dict(d) for d in json.loads(text)["results"]]


def baseline_comparison(results: list[RunResult], baseline: str = "NAV") -> tuple[pd.DataFrame, int]:
    """Per (prep, T) cell: baseline RMSE, best other model, and whether it wins.

    Returns the table and the number of cells where the best model beats
    the baseline.
    """
    rows = []
    ok = [r for r in results if r.metrics is not None]
    cells = sorted({(r.prep, r.test_size) for r in ok})
    for prep, T in cells:
        in_cell = [r for r in ok if r.prep == prep and r.test_size == T]
        base = next((r for r in in_cell if r.model == baseline), None)
        others = sorted((r for r in in_cell if r.model != baseline),
                        key=lambda r: (r.metrics.rmse, r.model))
        best = others[0] if others else None
        rows.append({
            "cell": f"{prep}-T{T}",
            "baseline_rmse": base.metrics.rmse if base else float("nan"),
            "best_model": best.model if best else "",
            "best_run_key": best.run_key if best else "",
            "best_rmse": best.metrics.rmse if best else float("nan"),
            "beats_baseline": bool(best and base and best.metrics.rmse < base.metrics.rmse),
        })
    table = pd.DataFrame(rows, columns=["cell", "baseline_rmse", "best_model", "best_run_key",
                                        "best_rmse", "beats_baseline"])
    return table, int(table["beats_baseline"].sum()) if rows else 0


def top_runs(results: list[RunResult], metric: str = "rmse", n: int = 1) -> pd.DataFrame:
    """The n best runs by ``metric`` for each (prep, T) cell."""
    rows = [{"cell": f"{r.prep}-T{r.test_size}", "run_key": r.run_key, "model": r.model,
             metric: getattr(r.metrics, metric)}
            for r in results if r.metrics is not None]
    frame = pd.DataFrame(rows, columns=["cell", "run_key", "model", metric])
    frame = frame.sort_values(["cell", metric, "model"], kind="mergesort")
    return frame.groupby("cell", sort=True).head(n).reset_index(drop=True)


def write_outputs(results: list[RunResult], out_dir: str | Path, cfg: ExperimentConfig) -> dict:
    """Writes results.csv, results.json, comparison.csv and per-run audit logs."""
    out = Path(out_dir)
    provenance = {"config": cfg.to_dict(), "data_sha256": calculate_file_hash(cfg.data_path)}
    written = {
        "csv": write_text_file(out / config.RESULTS_CSV, report(results, "CSV")),
        "json": write_text_file(out / config.RESULTS_JSON, report(results, "JSON", provenance)),
    }
    table, beaten = baseline_comparison(results)
    buffer = io.StringIO()
    table.to_csv(buffer, index=False, lineterminator="\n", float_format="%.6f")
    written["comparison"] = write_text_file(out / config.COMPARISON_CSV, buffer.getvalue())
    log.info("Best roster model beats the naive baseline in %d of %d cells.", beaten, len(table))

    for r in results:
        audit = {"provenance": provenance, "run": r.to_dict(), **r.audit}
        write_text_file(out / config.AUDIT_DIR / f"{r.cell}.json", dumps_json(audit))
    return written
