"""Scenario execution: sampling, simulation, diagnostics files, manifests.

Output layout: one directory per (scenario, epsilon) holding diagnostics.csv,
diagnostics.schema.json, snapshots/ and manifest.json.
"""

from __future__ import annotations

import datetime
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..cloud import ParticleCloud
from ..diagnostics import DiagnosticsSpec, write_records_csv
from ..pointvortex import IntegratorSpec, VortexConfiguration, integrate
from ..profiles import a_eps_for_data, decompose, sample_particles
from ..kernel import velocity_bound
from ..simulator import BoundTracking, RunResult, SimSpec, run
from .config import MAX_BUDGET_PARTICLES, ConfigError, ScenarioConfig


@dataclass
class RunManifest:
    scenario: str
    epsilon: float
    config_hash: str
    directory: str
    files: list[str]
    started: str
    finished: str
    software_version: str
    mode: str
    aborted: bool
    error: str
    A_eps: float
    a: float
    c0: float
    fractions: list[float]
    mu_radii: list[float]
    ring_radii: list[float]
    ring_radii_eps_pow: list[float]
    n_particles: int
    sampled_circulations: dict
    snapshot_times: list[float]
    achieved_gamma: float
    final_time: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def write(self, path: Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def load_manifest(run_dir) -> dict:
    with open(Path(run_dir) / "manifest.json") as fh:
        return json.load(fh)


def write_snapshot(cloud: ParticleCloud, path) -> None:
    """One CSV row per particle: index, label, x, y, weight, omega0."""
    with open(path, "w", newline="") as fh:
        fh.write("index,label,x,y,weight,omega0\n")
        for i in range(len(cloud)):
            fh.write(f"{i},{int(cloud.labels[i])},{float(cloud.positions[i, 0])!r},"
                     f"{float(cloud.positions[i, 1])!r},{float(cloud.weights[i])!r},"
                     f"{float(cloud.omega0[i])!r}\n")


def read_snapshot(path) -> dict:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {"index": data[:, 0].astype(int), "label": data[:, 1].astype(int),
            "positions": data[:, 2:4], "weights": data[:, 4], "omega0": data[:, 5]}


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def run_single(config: ScenarioConfig, eps: float, run_dir: Path, *,
               serial: bool = True, velocity_override: str | None = None,
               force: bool = False) -> RunManifest:
    est = config.estimated_particles(eps)
    if est > MAX_BUDGET_PARTICLES and not force:
        raise ConfigError(
            f"{config.name}[eps={eps:g}]",
            f"estimated {est} particles exceeds the desk-scale budget "
            f"{MAX_BUDGET_PARTICLES}; pass force to override")

    started = _now()
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "snapshots").mkdir(exist_ok=True)

    data = config.initial_data(eps)
    q = config.diagnostics.q
    a_eps = a_eps_for_data(data, q)
    cloud = sample_particles(data, config.h_over_eps * eps, config.mass_capture,
                             split_beta=config.split_beta,
                             max_particles=4 * MAX_BUDGET_PARTICLES if force
                             else MAX_BUDGET_PARTICLES)

    # reference Helmholtz trajectory driven by the sampled circulations
    labels = cloud.vortex_labels()
    gammas = np.array([cloud.circulation(m) for m in labels])
    centers = np.array([v.center for v in config.vortices])
    reference = None
    if config.t_end > 0.0:
        traj = integrate(VortexConfiguration(centers, gammas),
                         IntegratorSpec(dt=config.dt, t_end=config.t_end))

        def reference(t, _traj=traj):
            return _traj.at_times(np.array([t]))[0]

    f2_sup = 0.0
    if config.split_beta is not None:
        l1 = lq = 0.0
        for v in config.vortices:
            d = decompose(v.radial_profile(), eps, config.split_beta, q)
            l1 += abs(v.gamma) * d.lp_norms[1.0]
            lq += abs(v.gamma) * d.lp_norms[q]
        if l1 > 0.0 and lq > 0.0:
            f2_sup = velocity_bound(l1, lq, q)

    diag = DiagnosticsSpec(
        mu_radii=config.diagnostics.resolve_mu(eps),
        ring_radii=config.diagnostics.resolve_ring(eps),
        fractions=config.diagnostics.fractions,
        reference=reference,
    )
    spec = SimSpec(
        dt=config.dt,
        t_end=config.t_end,
        velocity_method=velocity_override or config.velocity_method,
        tree_params=config.tree,
        record_every=config.record_every,
        serial=serial,
    )
    bounds = BoundTracking(f2_sup=f2_sup) if len(labels) > 1 else None
    result: RunResult = run(cloud, spec, diag, bounds=bounds,
                            snapshot_every=config.snapshot_every)

    files = ["diagnostics.csv", "diagnostics.schema.json", "manifest.json"]
    write_records_csv(result.records, diag, run_dir / "diagnostics.csv",
                      run_dir / "diagnostics.schema.json")
    snapshot_times = []
    for i, snap in enumerate(result.snapshots):
        name = f"snapshots/snap_{i:04d}.csv"
        write_snapshot(snap, run_dir / name)
        files.append(name)
        snapshot_times.append(snap.time)

    # hypothesis report: the core Lq norm against A_eps^-gamma
    lq_core = float((np.sum(np.abs(cloud.omega0) ** q) * cloud.grid_h ** 2)
                    ** (1.0 / q))
    achieved_gamma = (-math.log(lq_core) / math.log(a_eps)
                      if lq_core > 0.0 and a_eps < 1.0 else 0.0)

    manifest = RunManifest(
        scenario=config.name,
        epsilon=eps,
        config_hash=config.config_hash(),
        directory=str(run_dir),
        files=files,
        started=started,
        finished=_now(),
        software_version=__version__,
        mode="serial" if serial else "parallel",
        aborted=result.aborted,
        error=result.error,
        A_eps=a_eps,
        a=config.diagnostics.a,
        c0=config.diagnostics.c0,
        fractions=list(config.diagnostics.fractions),
        mu_radii=list(diag.mu_radii),
        ring_radii=list(diag.ring_radii),
        ring_radii_eps_pow=list(config.diagnostics.ring_radii_eps_pow),
        n_particles=len(cloud),
        sampled_circulations={str(m): cloud.circulation(m) for m in labels},
        snapshot_times=snapshot_times,
        achieved_gamma=achieved_gamma,
        final_time=result.records[-1].t,
    )
    manifest.write(run_dir / "manifest.json")
    return manifest


def run_scenario(config: ScenarioConfig, outdir, *, serial: bool = True,
                 velocity_override: str | None = None,
                 force: bool = False) -> list[RunManifest]:
    """Run every epsilon of the scenario; one output directory per epsilon."""
    outdir = Path(outdir)
    manifests = []
    for eps in config.epsilons:
        run_dir = outdir / f"{config.name}__eps{eps:g}"
        manifests.append(run_single(config, eps, run_dir, serial=serial,
                                    velocity_override=velocity_override,
                                    force=force))
    return manifests
