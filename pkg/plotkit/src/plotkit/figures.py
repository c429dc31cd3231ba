"""The three figure kinds: scaling law, confinement timeline, bound ratios.

Each render writes the image plus a plain-text parameter sidecar
(<output>.params.txt) holding the fitted or extracted numbers with full
precision.  Inputs are validated before any file is created, so a failed
render leaves nothing behind.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import RunDir, SchemaError, fit_log_log, load_run_dir

KINDS = ("scaling-law", "confinement-timeline", "bound-ratios")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"pick one of {', '.join(KINDS)}")
        if not self.inputs:
            raise SchemaError("no input run directories given")


def sidecar_path(output) -> Path:
    out = Path(output)
    return out.with_name(out.stem + ".params.txt")


def _write_sidecar(output, entries: dict) -> None:
    with open(sidecar_path(output), "w") as fh:
        for key, val in entries.items():
            fh.write(f"{key} = {float(val)!r}\n" if isinstance(val, (int, float))
                     else f"{key} = {val}\n")


def read_sidecar(output) -> dict:
    entries = {}
    for line in Path(sidecar_path(output)).read_text().splitlines():
        key, _, val = line.partition(" = ")
        try:
            entries[key] = float(val)
        except ValueError:
            entries[key] = val
    return entries


def _outer_mass_final(run: RunDir) -> float:
    cols = run.label_columns("ring0_")
    return float(sum(run.col(c)[-1] for c in cols))


def _render_scaling_law(spec: FigureSpec, runs: list[RunDir]) -> dict:
    if len(runs) < 3:
        raise SchemaError(f"scaling-law needs at least 3 runs, got {len(runs)}")
    runs = sorted(runs, key=lambda r: r.epsilon)
    eps = [r.epsilon for r in runs]
    if len(set(eps)) != len(eps):
        raise SchemaError("scaling-law inputs carry duplicate epsilon values")
    masses = [_outer_mass_final(r) for r in runs]
    if any(m <= 0.0 for m in masses):
        raise SchemaError("outer masses must be positive for a log-log fit")
    slope, intercept = fit_log_log(eps, masses)

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, masses, "o", label="outer mass at final time")
    grid = np.linspace(min(eps), max(eps), 50)
    ax.loglog(grid, np.exp(intercept) * grid ** slope, "-",
              label=f"fit, slope {slope:.3f}")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("outer mass")
    ax.set_title(spec.title or "Outer-mass scaling")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return {"kind": spec.kind, "n_runs": len(runs),
            "slope": slope, "intercept": intercept}


def _render_confinement_timeline(spec: FigureSpec, runs: list[RunDir]) -> dict:
    if len(runs) != 1:
        raise SchemaError("confinement-timeline takes exactly one run directory")
    run = runs[0]
    frac = run.manifest["fractions"][0]
    cols = run.label_columns(f"rf{frac:g}_")
    t = run.col("t")
    threshold = float(run.manifest["A_eps"]) ** float(run.manifest["a"])

    fig, ax = plt.subplots(figsize=(5, 4))
    max_radius = 0.0
    tau = 0.0
    worst = np.zeros_like(t)
    for c in cols:
        series = run.col(c)
        worst = np.maximum(worst, series)
        max_radius = max(max_radius, float(series.max()))
        ax.plot(t, series, label=c)
    for ti, ri in zip(t, worst):
        if ri > threshold:
            break
        tau = float(ti)
    ax.axhline(threshold, color="k", linestyle="--",
               label=f"threshold {threshold:.3g}")
    ax.set_xlabel("t")
    ax.set_ylabel(f"support radius (fraction {frac:g})")
    ax.set_title(spec.title or f"Confinement, eps = {run.epsilon:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return {"kind": spec.kind, "threshold": threshold,
            "max_radius": max_radius, "tau_measured": tau}


def _render_bound_ratios(spec: FigureSpec, runs: list[RunDir]) -> dict:
    if len(runs) != 1:
        raise SchemaError("bound-ratios takes exactly one run directory")
    run = runs[0]
    i_cols = run.label_columns("iratio_")
    gap_cols = run.label_columns("gapratio_")
    t = run.col("t")

    fig, ax = plt.subplots(figsize=(5, 4))
    max_i = 0.0
    max_gap = 0.0
    for c in i_cols:
        series = run.col(c)
        max_i = max(max_i, float(series.max()))
        ax.plot(t, series, label=c)
    for c in gap_cols:
        series = run.col(c)
        max_gap = max(max_gap, float(series.max()))
        ax.plot(t, series, "--", label=c)
    ax.axhline(1.0, color="k", linewidth=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("measured / bound")
    ax.set_title(spec.title or f"Bound ratios, eps = {run.epsilon:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return {"kind": spec.kind, "max_i_ratio": max_i, "max_gap_ratio": max_gap}


_RENDERERS = {
    "scaling-law": _render_scaling_law,
    "confinement-timeline": _render_confinement_timeline,
    "bound-ratios": _render_bound_ratios,
}


def render(spec: FigureSpec) -> dict:
    """Validate inputs, draw the figure, write image + sidecar.

    Returns the sidecar entries.  Raises SchemaError (naming the offending
    file or columns) before creating any output file.
    """
    runs = [load_run_dir(p) for p in spec.inputs]
    entries = _RENDERERS[spec.kind](spec, runs)
    _write_sidecar(spec.output, entries)
    return entries
