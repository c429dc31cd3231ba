"""Readers for the vortexlab run-directory format.

plotkit never recomputes physics: everything plotted or fitted comes from
diagnostics.csv, manifest.json and summary.json as written by the harness.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input files missing, malformed, or lacking expected columns."""


@dataclass
class RunDir:
    path: Path
    manifest: dict
    columns: list[str]
    values: np.ndarray

    @property
    def epsilon(self) -> float:
        return float(self.manifest["epsilon"])

    def col(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise SchemaError(
                f"{self.path}: column {name!r} not found; available: "
                f"{', '.join(self.columns)}") from None

    def label_columns(self, prefix: str) -> list[str]:
        cols = [c for c in self.columns
                if c.startswith(prefix) and not c.endswith("_pert")]
        if not cols:
            raise SchemaError(
                f"{self.path}: no columns with prefix {prefix!r}; available: "
                f"{', '.join(self.columns)}")
        return cols


def load_run_dir(path) -> RunDir:
    path = Path(path)
    manifest_path = path / "manifest.json"
    csv_path = path / "diagnostics.csv"
    for p in (manifest_path, csv_path):
        if not p.exists():
            raise SchemaError(f"{path}: missing {p.name}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise SchemaError(f"{path}: diagnostics.csv has no data rows")
    values = np.asarray(rows)
    for key in ("epsilon", "A_eps", "a", "fractions"):
        if key not in manifest:
            raise SchemaError(f"{path}: manifest.json lacks {key!r}")
    return RunDir(path=path, manifest=manifest, columns=columns, values=values)


def load_summary(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def fit_log_log(eps, values) -> tuple[float, float]:
    """Least-squares line through (log eps, log value); identical to the
    harness fit, so the two agree to rounding."""
    slope, intercept = np.polyfit(np.log(np.asarray(eps, dtype=np.float64)),
                                  np.log(np.asarray(values, dtype=np.float64)), 1)
    return float(slope), float(intercept)
