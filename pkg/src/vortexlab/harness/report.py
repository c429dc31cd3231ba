"""Sweep post-processing: power-law fits, bound ratios, confinement times.

The summary is machine-readable JSON and is stable under permutation of the
input run directories (runs are sorted by scenario and epsilon).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..diagnostics import read_records_csv
from .run import load_manifest


class ReportError(ValueError):
    pass


def fit_power_law(eps: list[float], values: list[float]) -> dict:
    """Least-squares line in log-log coordinates.

    Returns slope, intercept (natural log) and the residual as the largest
    multiplicative deviation of a data point from the fitted line.
    """
    x = np.log(np.asarray(eps, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "max_mult_residual": float(np.max(np.abs(np.expm1(resid)))),
    }


@dataclass
class _RunData:
    manifest: dict
    columns: list[str]
    values: np.ndarray

    def col(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise ReportError(f"column {name!r} missing from "
                              f"{self.manifest['directory']}") from None

    def label_cols(self, prefix: str) -> list[str]:
        return [c for c in self.columns
                if c.startswith(prefix) and not c.endswith("_pert")]


def tau_from_series(times: np.ndarray, radii: np.ndarray, threshold: float) -> float:
    """Last time before the radius series exceeds the threshold."""
    tau = 0.0
    for t, r in zip(times, radii):
        if r > threshold:
            break
        tau = float(t)
    return tau


def _analyze_run(run_dir: Path) -> dict:
    manifest = load_manifest(run_dir)
    columns, values = read_records_csv(Path(run_dir) / "diagnostics.csv")
    data = _RunData(manifest, columns, values)
    times = data.col("t")
    frac = manifest["fractions"][0]
    rf_cols = data.label_cols(f"rf{frac:g}_")
    radii = np.max(np.column_stack([data.col(c) for c in rf_cols]), axis=1)
    threshold = manifest["A_eps"] ** manifest["a"]
    tau = tau_from_series(times, radii, threshold)
    required = manifest["c0"] * abs(np.log(manifest["A_eps"]))

    out = {
        "directory": str(run_dir),
        "epsilon": manifest["epsilon"],
        "n_particles": manifest["n_particles"],
        "aborted": manifest["aborted"],
        "final_time": float(times[-1]),
        "support_radius_final": float(radii[-1]),
        "tau_measured": tau,
        "confinement_satisfied": bool(tau >= required * (1.0 - 1e-12)),
        "confinement_threshold": float(threshold),
        "confinement_required_time": float(required),
    }
    # outer (ring) masses at the final record, summed over vortex labels
    n_ring = len(manifest["ring_radii"])
    outer = []
    for i in range(n_ring):
        cols = data.label_cols(f"ring{i}_")
        outer.append(float(sum(data.col(c)[-1] for c in cols)))
    out["outer_mass_final"] = outer
    for kind, prefix in (("max_i_ratio", "iratio_"), ("max_gap_ratio", "gapratio_")):
        cols = data.label_cols(prefix)
        if cols:
            out[kind] = float(max(data.col(c).max() for c in cols))
    return out


def sweep_report(run_dirs, out_path=None) -> dict:
    """Summarize a set of run directories; fits need >= 3 epsilons."""
    dirs = [Path(d) for d in run_dirs]
    if len(dirs) < 3:
        raise ReportError(f"insufficient sweep size: {len(dirs)} run dirs, need >= 3")
    runs = [_analyze_run(d) for d in dirs]
    manifests = [load_manifest(d) for d in dirs]
    by_scenario: dict[str, list[dict]] = {}
    for run, man in zip(runs, manifests):
        by_scenario.setdefault(man["scenario"], []).append(run)

    summary: dict = {"scenarios": {}}
    for name, group in sorted(by_scenario.items()):
        group = sorted(group, key=lambda r: r["epsilon"])
        entry: dict = {"runs": group, "fits": {}}
        if len(group) >= 3:
            eps = [r["epsilon"] for r in group]
            if len(set(eps)) == len(eps):
                n_ring = min(len(r["outer_mass_final"]) for r in group)
                for i in range(n_ring):
                    vals = [r["outer_mass_final"][i] for r in group]
                    if all(v > 0.0 for v in vals):
                        entry["fits"][f"outer_mass_{i}"] = fit_power_law(eps, vals)
                radii = [r["support_radius_final"] for r in group]
                if all(v > 0.0 for v in radii):
                    entry["fits"]["support_radius"] = fit_power_law(eps, radii)
        summary["scenarios"][name] = entry

    if out_path is not None:
        with open(out_path, "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return summary
