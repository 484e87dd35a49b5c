"""CSV and JSON files of a run directory.

Every CSV uses ``\\n`` line endings and ``repr`` floats so identical runs
produce byte-identical files.
"""
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import csv
import json
import logging

from src.agent.records import (
    DORMANCY_COLUMNS, METRIC_COLUMNS, PROBE_COLUMNS, RECYCLE_COLUMNS, MetricSeries, format_value,
)
from src.exceptions import SchemaError
logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
DORMANCY_FILE = "dormancy.csv"
RECYCLE_FILE = "recycle_events.csv"
PROBES_FILE = "probes.csv"
CONFIG_FILE = "config.yaml"
CHECKPOINT_FILE = "checkpoint.npz"
MANIFEST_FILE = "manifest.json"

PathLike = Union[str, Path]


def write_table(path: PathLike, columns: Sequence[str], rows: Iterable[Tuple]) -> Path:

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_table(path: PathLike, columns: Sequence[str]) -> List[Dict[str, str]]:

    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"Missing run file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != tuple(columns):
            raise SchemaError(f"{path} has columns {reader.fieldnames}, expected {list(columns)}")
        return list(reader)


def write_series(series: MetricSeries, run_dir: PathLike) -> Path:

    run_dir = Path(run_dir)
    write_table(run_dir / METRICS_FILE, METRIC_COLUMNS, (r.values() for r in series.rows))
    write_table(run_dir / DORMANCY_FILE, DORMANCY_COLUMNS, (r.values() for r in series.dormancy))
    write_table(run_dir / RECYCLE_FILE, RECYCLE_COLUMNS, (r.values() for r in series.recycle_events))
    write_table(run_dir / PROBES_FILE, PROBE_COLUMNS, (r.values() for r in series.probes))
    return run_dir


def write_json(path: PathLike, payload) -> Path:

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_json(path: PathLike):

    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"Missing file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def parse_float(cell: str) -> float:
    return float(cell) if cell != "" else float("nan")
