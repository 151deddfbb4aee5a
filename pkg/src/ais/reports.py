"""CSV report writers for the command-line front-end."""

import csv
import logging
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .negsel import Alert, Detector
from .parsers import format_pattern
from .recommender import Prediction
from .types import TrajectoryRow

logger = logging.getLogger(__name__)


def format_float(value: Optional[float]) -> str:
    """Fixed six-decimal text, empty for a missing value."""
    if value is None:
        return ""
    return f"{value:.6f}"


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> Path:
    """Write a header and rows with LF line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Wrote %s", path)
    return path


def write_predictions(path: Path, predictions: Iterable[Prediction]) -> Path:
    return write_csv(
        path,
        ("item_id", "predicted_score", "support"),
        (
            (p.item_id, format_float(p.predicted_score), p.support)
            for p in predictions
        ),
    )


def write_trajectory(path: Path, rows: Iterable[TrajectoryRow]) -> Path:
    return write_csv(
        path,
        ("iteration", "source_id", "concentration"),
        ((i, s, format_float(x)) for i, s, x in rows),
    )


def write_alerts(path: Path, alerts: Iterable[Alert]) -> Path:
    return write_csv(
        path,
        ("traffic_index", "detector_id", "detector_pattern"),
        ((a.traffic_index, a.detector_id, format_pattern(a.pattern)) for a in alerts),
    )


def write_detectors(path: Path, detectors: Iterable[Detector]) -> Path:
    return write_csv(
        path,
        ("detector_id", "state", "match_count", "activation_threshold", "pattern"),
        (
            (
                d.detector_id,
                d.state.value,
                d.match_count,
                d.activation_threshold,
                format_pattern(d.pattern),
            )
            for d in detectors
        ),
    )


def write_summary(path: Path, summary: Mapping[str, object]) -> Path:
    """Single-row report whose columns are the mapping's keys in order."""
    values = [
        format_float(v) if isinstance(v, float) else v for v in summary.values()
    ]
    return write_csv(path, tuple(summary), [values])


EvaluationRow = tuple[int, str, Optional[float], float, Optional[float]]


def write_evaluation(path: Path, rows: Iterable[EvaluationRow]) -> Path:
    """One row per seed and method; mae is empty when nothing was predicted."""
    return write_csv(
        path,
        ("seed", "method", "mae", "coverage", "baseline_mae"),
        (
            (
                seed,
                method,
                format_float(mae),
                format_float(coverage),
                format_float(base),
            )
            for seed, method, mae, coverage, base in rows
        ),
    )
