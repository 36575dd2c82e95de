"""Utility functions for artifacts, seed lists and summary statistics."""

import csv
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from .exceptions import InvalidInputError
from .models import RunResult


def parse_seed_list(text: str) -> List[int]:
    """Parse ``"1..5"``, ``"1,2,7"`` or a mix such as ``"0,3..4"``."""
    seeds: List[int] = []
    for part in (chunk.strip() for chunk in text.split(",")):
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split("..", 1))
                if hi < lo:
                    raise InvalidInputError(f"Empty seed range: {part}")
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise InvalidInputError(f"Invalid seed list entry: {part!r}") from None
    if not seeds:
        raise InvalidInputError("Seed list is empty")
    return seeds


def parse_float_list(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"Invalid number list: {text!r}") from None
    if not values:
        raise InvalidInputError("Number list is empty")
    return values


def parse_int_list(text: str) -> List[int]:
    try:
        values = [int(x.replace("_", "")) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"Invalid integer list: {text!r}") from None
    if not values:
        raise InvalidInputError("Integer list is empty")
    return values


def mean_ci(samples: Sequence[float], confidence: float = 0.95) -> Tuple[float, float]:
    """Sample mean and the half-width of its Student-t confidence interval."""
    x = np.asarray(samples, dtype=float)
    mean = float(x.mean())
    if x.size < 2:
        return mean, 0.0
    half = float(stats.t.ppf(0.5 + confidence / 2.0, df=x.size - 1) * stats.sem(x))
    return mean, half


def aggregate_results(results: Sequence[RunResult]) -> List[Dict[str, float]]:
    """Mean and 95% interval of the metric at every checkpoint shared by all runs."""
    if not results:
        return []
    shared = sorted(set.intersection(*(set(r.iterations) for r in results)))
    rows = []
    for it in shared:
        values = [r.metric[r.iterations.index(it)] for r in results]
        mean, half = mean_ci(values)
        rows.append({"iter": it, "mean": mean, "ci_low": mean - half, "ci_high": mean + half})
    return rows


def ensure_output_dir(path: Path) -> Path:
    """Create the output directory or fail with a readable message."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise InvalidInputError(f"Cannot create output directory {path}: {e}") from e
    if not os.access(path, os.W_OK):
        raise InvalidInputError(f"Output directory is not writable: {path}")
    return path


def write_result_csv(result: RunResult, path: Path) -> Path:
    """``iter, metric, sampler, seed``; one row per checkpoint."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "metric", "sampler", "seed"])
        for it, value in zip(result.iterations, result.metric):
            writer.writerow([it, repr(value), result.sampler.value, result.seed])
    return Path(path)


def write_rows_csv(rows: Sequence[Dict[str, Any]], path: Path) -> Path:
    if not rows:
        Path(path).write_text("")
        return Path(path)
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return Path(path)


def write_json(data: Dict[str, Any], path: Path) -> Path:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")
    return Path(path)


def write_config_sidecar(artifact: Path, config: Dict[str, Any]) -> Path:
    """Write ``config`` to ``<artifact stem>.config.json`` beside the artifact."""
    return write_json(config, Path(artifact).with_suffix(".config.json"))
