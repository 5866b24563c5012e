"""Flat key = value experiment config files with comma-separated lists.

CLI flags override file values, which override defaults.
"""

from __future__ import annotations

from pathlib import Path

# keys whose values are comma-separated lists
LIST_KEYS = {"families", "algorithms", "criteria", "p_new", "sweep_m_values"}
FLOAT_KEYS = {"seeds_fraction", "ll_rel_tolerance"}
INT_KEYS = {
    "num_seed_classes",
    "num_partitions",
    "rng_seed",
    "max_iterations",
    "crp_epochs",
    "workers",
}
BOOL_KEYS = {"include_seeds_in_eval"}


class ConfigError(ValueError):
    pass


def parse_config(path: str | Path) -> dict:
    """Parse a flat config file; '#' starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        values[key.strip()] = coerce(key.strip(), raw.strip())
    return values


def coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    if key in LIST_KEYS:
        items = [v.strip() for v in raw.split(",") if v.strip()]
        if key == "p_new":
            return [float(v) for v in items]
        if key == "sweep_m_values":
            return [int(v) for v in items]
        return items
    if key in FLOAT_KEYS:
        return float(raw)
    if key in INT_KEYS:
        return int(raw)
    if key in BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    return raw


def merge(defaults: dict, file_values: dict, flag_values: dict) -> dict:
    """Precedence: flag > file > default. Flags set to None are unset."""
    merged = dict(defaults)
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged
