import os

CONFIG_SCHEMA_VERSION = 1
PLOT_CONFIG_FILE_NAME = "plot_config.yaml"
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
DEFAULT_DATA_PATH = os.path.join(BASE_DIR, "data", "gistemp_land_ocean_1880_2020.csv")
DEFAULT_COLUMN = "J-D"

# --- Environment overrides (a .env file next to the script is honoured) ---
ENV_LOG_LEVEL = "GMT_BENCH_LOG_LEVEL"
ENV_WORKERS = "GMT_BENCH_WORKERS"

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# --- Benchmark grid ---
BENCHMARK_PREPS = ["D0-NO", "D0-BC", "D0-YJ", "D1-NO", "D1-BC", "D1-YJ"]
BENCHMARK_TEST_SIZES = [5, 10, 15]
TIME_SERIES_CODES = ["NAV", "POT", "EXS", "ARI"]
REGRESSION_CODES = ["LIN", "RID", "KNN", "DTR"]

# --- Default experiment ---
# Keys missing from a user config fall back to these values.
DEFAULT_EXPERIMENT = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "data_path": DEFAULT_DATA_PATH,
    "column": DEFAULT_COLUMN,
    "preps": list(BENCHMARK_PREPS),
    "test_sizes": list(BENCHMARK_TEST_SIZES),
    "folds": 3,
    "iterations": 50,
    "base_seed": 2021,
    "roster": TIME_SERIES_CODES + REGRESSION_CODES,
    "block_size": 5,
    "workers": 1,
}

# --- Outlier detection defaults ---
IFOREST_TREES = 200
IFOREST_SEED = 7

# --- Output file names ---
RESULTS_CSV = "results.csv"
RESULTS_JSON = "results.json"
COMPARISON_CSV = "comparison.csv"
AUDIT_DIR = "audit"
PLOTS_DIR = "plots"
