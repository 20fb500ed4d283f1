"""Command-line entry point: ``python app.py eda|run|validate``."""
import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

import config
from errors import BenchError, ConfigError, DataError
from ingest import describe, detect_outliers_iforest, detect_outliers_iqr, load_gistemp
from plots import load_plot_config, render_plots
from runner import load_experiment_config, run_grid, top_runs, write_outputs
from stattests import stationarity_report
from utils import calculate_file_hash, dumps_json

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


def setup_logging(level_name: str | None):
    level_name = (level_name or os.getenv(config.ENV_LOG_LEVEL) or "INFO").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level '{level_name}'")
    logging.basicConfig(stream=sys.stderr, level=level, format=config.LOG_FORMAT)
    logging.getLogger().setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="app.py", description="Global mean temperature forecasting benchmark.")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR "
                                            f"(default: ${config.ENV_LOG_LEVEL} or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    eda = sub.add_parser("eda", help="Descriptive statistics, stationarity tests and outliers as JSON.")
    eda.add_argument("data", help="GISTEMP annual CSV")
    eda.add_argument("--column", default=config.DEFAULT_COLUMN)

    run = sub.add_parser("run", help="Execute the experiment grid and write reports.")
    run.add_argument("--config", required=True, help="experiment config (JSON or YAML)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, help=f"grid workers (default: ${config.ENV_WORKERS} or config)")
    run.add_argument("--seed", type=int, help="override base_seed")
    run.add_argument("--column", help="override the data column")
    run.add_argument("--plot-config", help=f"plot styling YAML (default: {config.PLOT_CONFIG_FILE_NAME})")
    run.add_argument("--quiet", action="store_true", help="no progress bar")

    validate = sub.add_parser("validate", help="Check a config against its schema and the data.")
    validate.add_argument("--config", required=True)
    validate.add_argument("--seed", type=int)
    validate.add_argument("--column")
    return parser


def _overrides(args) -> dict:
    return {"base_seed": getattr(args, "seed", None), "column": getattr(args, "column", None)}


def cmd_eda(args) -> int:
    series = load_gistemp(args.data, args.column)
    document = {
        "source": {"path": str(args.data), "sha256": calculate_file_hash(args.data),
                   **series.to_dict()},
        "describe": describe(series).to_dict(),
        "stationarity": stationarity_report(series.values),
        "outliers": {
            "iqr": detect_outliers_iqr(series).to_dict(),
            "isolation_forest": detect_outliers_iforest(
                series, trees=config.IFOREST_TREES, seed=config.IFOREST_SEED).to_dict(),
        },
    }
    sys.stdout.write(dumps_json(document))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_experiment_config(args.config, _overrides(args))
    series = load_gistemp(cfg.data_path, cfg.column)
    cfg.validate_against(series.n)
    log.info("Config '%s' is valid: %d preps x %d test sizes x %d models over %d years.",
             args.config, len(cfg.preps), len(cfg.test_sizes), len(cfg.roster), series.n)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_experiment_config(args.config, _overrides(args))
    try:
        env_workers = int(os.getenv(config.ENV_WORKERS) or 0)
    except ValueError:
        raise ConfigError(f"${config.ENV_WORKERS} must be an integer") from None
    workers = args.workers or env_workers or cfg.workers
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    series = load_gistemp(cfg.data_path, cfg.column)
    progress = not args.quiet and sys.stderr.isatty()
    results = run_grid(cfg, series=series, workers=workers, progress=progress)

    out = Path(args.out)
    write_outputs(results, out, cfg)
    render_plots(results, series, out / config.PLOTS_DIR, load_plot_config(args.plot_config))
    for row in top_runs(results).itertuples(index=False):
        log.info("Best in %s: %s %s (RMSE %.4f)", row.cell, row.model, row.run_key, row.rmse)

    failed = [r.cell for r in results if r.error]
    if failed:
        log.warning("Grid finished with %d failed run(s): %s", len(failed), ", ".join(failed))
        return EXIT_PARTIAL
    log.info("Grid finished: %d runs written to %s.", len(results), out)
    return EXIT_OK


COMMANDS = {"eda": cmd_eda, "run": cmd_run, "validate": cmd_validate}


def cli(argv: list[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # usage errors count as configuration errors
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    try:
        setup_logging(args.log_level)
        return COMMANDS[args.command](args)
    except ConfigError as e:
        log.error("Configuration error: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        log.error("Data error: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except BenchError as e:
        log.error("%s: %s", type(e).__name__, e, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
