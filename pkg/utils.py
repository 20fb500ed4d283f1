import hashlib
import json
import logging
import math
from enum import Enum
from pathlib import Path

import numpy as np
import yaml

from errors import IoFailure

log = logging.getLogger(__name__)

# --- File Handling ---

def calculate_file_hash(file_path: str | Path) -> str | None:
    """Calculates the SHA256 hash of a data file, for run provenance."""
    try:
        hasher = hashlib.sha256()
        with open(file_path, 'rb') as file:
            while True:
                chunk = file.read(4096)
                if not chunk:
                    break
                hasher.update(chunk)
        return hasher.hexdigest()
    except FileNotFoundError:
        log.warning("File not found for hashing: %s", file_path)
        return None
    except OSError as e:
        log.error("Error calculating hash for file '%s': %s", file_path, e, exc_info=True)
        return None


def write_text_file(path: str | Path, content: str) -> Path:
    """Writes text with '\\n' line endings, creating parent directories."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
    except OSError as e:
        log.error("Error writing '%s': %s", target, e, exc_info=True)
        raise IoFailure(f"could not write {target}: {e}") from e
    log.debug("Wrote %s (%d bytes).", target, len(content))
    return target

# --- Configuration Loading ---

def load_config_file(config_filename: str | Path) -> tuple[dict | None, str | None, bool, bool]:
    """Loads and parses a JSON or YAML configuration file.

    JSON documents are read through PyYAML's safe loader as well.

    Returns:
        tuple[dict | None, str | None, bool, bool]:
            config_data: Parsed content as dict, or None on error/not found.
            raw_content: Raw text content of the file, or None if not found/read error.
            file_exists: Boolean indicating if the file exists.
            parse_successful: Boolean indicating if parsing succeeded.
    """
    config_path = Path(config_filename)
    if not config_path.exists():
        log.info("Config file '%s' not found.", config_filename)
        return None, None, False, False

    try:
        raw_content = config_path.read_text(encoding='utf-8')
    except OSError as e:
        log.error("Error reading config file '%s': %s", config_filename, e, exc_info=True)
        return None, None, True, False

    try:
        config_data = yaml.safe_load(raw_content)
    except yaml.YAMLError as e:
        log.error("Error parsing config file '%s': %s", config_filename, e, exc_info=True)
        return None, raw_content, True, False

    if not isinstance(config_data, dict):
        log.warning("Config file '%s' content is not a mapping.", config_filename)
        return None, raw_content, True, False

    log.info("Config file '%s' parsed successfully.", config_filename)
    return config_data, raw_content, True, True

# --- Seeds ---

def stable_seed(base_seed: int, key: str) -> int:
    """Derives a 64-bit seed from (base_seed, key) independent of run order."""
    digest = hashlib.sha256(f"{int(base_seed)}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF

# --- JSON ---

def to_jsonable(value):
    """Converts numpy scalars/arrays, enums and tuples into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(value, indent: int | None = 2) -> str:
    """Deterministic JSON text (sorted keys, trailing newline when indented)."""
    text = json.dumps(to_jsonable(value), indent=indent, sort_keys=True)
    return text + "\n" if indent is not None else text
