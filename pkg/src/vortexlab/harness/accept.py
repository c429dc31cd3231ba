"""The acceptance suite: every criterion as a named, runnable check.

Each criterion returns a CriterionResult and prints nothing by itself; the
CLI (`vortexlab accept`) and tests/test_acceptance.py render one pass/fail
line per criterion.  Scenario runs are cached in the context so overlapping
criteria share work.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cloud import ParticleCloud
from ..diagnostics import read_records_csv
from ..kernel import (BlobSpec, TreecodeParams, biot_savart, velocity_bound,
                      velocity_direct, velocity_tree)
from ..pointvortex import IntegratorSpec, VortexConfiguration, conserved_quantities, integrate
from ..profiles import RadialProfile, beta_floor, decompose
from .config import DiagnosticsConfig, ScenarioConfig, VortexEntry
from .report import fit_power_law, sweep_report
from .run import RunManifest, read_snapshot, run_scenario
from .scenarios import get_scenario

TWO_PI = 2.0 * math.pi


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime_s: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in self.details.items())
        return f"[{status}] {self.name} ({self.runtime_s:.1f}s) {info}"


class AcceptContext:
    """Caches scenario runs so criteria that share a sweep run it once."""

    def __init__(self, workdir):
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self._runs: dict[tuple, list[RunManifest]] = {}

    def scenario_run(self, config: ScenarioConfig, *, serial: bool = False,
                     tag: str = "") -> list[RunManifest]:
        key = (config.config_hash(), serial, tag)
        if key not in self._runs:
            out = self.workdir / (config.name + (f"-{tag}" if tag else ""))
            self._runs[key] = run_scenario(config, out, serial=serial)
        return self._runs[key]


def _records(manifest: RunManifest) -> tuple[list[str], np.ndarray]:
    return read_records_csv(Path(manifest.directory) / "diagnostics.csv")


def _cols(names, prefix):
    return [i for i, n in enumerate(names) if n.startswith(prefix)]


# ---------------------------------------------------------------------------
# 1. kernel identities + treecode accuracy
# ---------------------------------------------------------------------------

def crit_kernel_identities(ctx: AcceptContext) -> CriterionResult:
    """Antisymmetry/orthogonality of K at 1e-14 on 1e5 random inputs, and
    treecode max relative error < 1e-4 (theta = 0.5, order 6) against the
    direct sum on 100 random clouds of N = 1e4.  'Relative' is measured
    against the largest direct velocity of each cloud.  Budget: 60 s.
    """
    t0 = time.time()
    rng = np.random.default_rng(2024)
    z = rng.uniform(-1.0, 1.0, (100_000, 2))
    z = z[np.hypot(z[:, 0], z[:, 1]) > 1e-9]
    anti_worst = 0.0
    orth_worst = 0.0
    for spec in (BlobSpec.singular(), BlobSpec.blob(0.37)):
        k = biot_savart(z, spec)
        k_neg = biot_savart(-z, spec)
        mag = np.hypot(k[:, 0], k[:, 1])
        anti = np.hypot(*(k + k_neg).T)
        anti_worst = max(anti_worst, float(np.max(anti / np.maximum(mag, 1e-300))))
        dot = np.abs(z[:, 0] * k[:, 0] + z[:, 1] * k[:, 1])
        scale = np.hypot(z[:, 0], z[:, 1]) * mag
        orth_worst = max(orth_worst, float(np.max(dot / np.maximum(scale, 1e-300))))

    params = TreecodeParams(opening_angle=0.5, max_leaf_size=64, expansion_order=6)
    spec = BlobSpec.blob(0.01)
    tree_worst = 0.0
    n = 10_000
    for c in range(100):
        crng = np.random.default_rng(5000 + c)
        pos = crng.random((n, 2))
        w = crng.uniform(-1.0, 1.0, n) / n
        cloud = ParticleCloud(pos, w, np.zeros(n, dtype=np.int64), w, 0.01, spec.delta)
        ud = velocity_direct(cloud, pos, spec, serial=False)
        ut = velocity_tree(cloud, pos, spec, params, serial=False)
        err = float(np.max(np.hypot(*(ut - ud).T)) / np.max(np.hypot(*ud.T)))
        tree_worst = max(tree_worst, err)
    runtime = time.time() - t0
    passed = (anti_worst <= 1e-14 and orth_worst <= 1e-14
              and tree_worst < 1e-4 and runtime < 60.0)
    return CriterionResult("kernel-identities", passed, runtime, {
        "antisymmetry": anti_worst, "orthogonality": orth_worst,
        "tree_max_rel_err": tree_worst})


# ---------------------------------------------------------------------------
# 2. point-vortex analytics
# ---------------------------------------------------------------------------

def crit_pointvortex_analytics(ctx: AcceptContext) -> CriterionResult:
    """Opposite pair translates at speed 1 (error < 1e-6 over T = 10 at
    dt = 1e-3); same-sign pair closes its period-pi orbit within 1e-6;
    Hamiltonian drift < 1e-8 and center/linear-impulse drift < 1e-12
    (relative) over 1e4 steps.

    Both test pairs sit at distance 1, where the Hamiltonian vanishes, so
    'relative' drift uses the circulation energy scale sum|g_m g_l|/4pi;
    the center scale is the circulation-weighted mean initial distance.
    """
    t0 = time.time()
    dt = 1e-3
    translate = VortexConfiguration(np.array([[0.0, 0.5], [0.0, -0.5]]),
                                    np.array([TWO_PI, -TWO_PI]))
    corotate = VortexConfiguration(np.array([[0.5, 0.0], [-0.5, 0.0]]),
                                   np.array([TWO_PI, TWO_PI]))

    tr = integrate(translate, IntegratorSpec(dt=dt, t_end=10.0))
    exact = translate.positions[None, :, :] + np.array([1.0, 0.0]) * tr.times[:, None, None]
    translate_err = float(np.max(np.hypot(*(tr.positions - exact).transpose(2, 0, 1))))

    tr_pi = integrate(corotate, IntegratorSpec(dt=dt, t_end=math.pi))
    period_err = float(np.max(np.abs(tr_pi.final().positions - corotate.positions)))

    ham_worst = 0.0
    center_worst = 0.0
    for cfg in (translate, corotate):
        traj = integrate(cfg, IntegratorSpec(dt=dt, t_end=10.0))
        q0 = conserved_quantities(cfg)
        g = cfg.gammas
        e_scale = float(np.abs(np.outer(g, g)).sum() - np.abs(g * g).sum()) / (4 * math.pi)
        c_scale = max(float(np.hypot(*q0.center)),
                      float((np.abs(g) @ np.hypot(*cfg.positions.T)) / np.abs(g).sum()))
        for k in range(0, len(traj.times), 100):
            q = conserved_quantities(traj.config(k))
            ham_worst = max(ham_worst, abs(q.hamiltonian - q0.hamiltonian)
                            / max(abs(q0.hamiltonian), e_scale))
            center_worst = max(center_worst,
                               float(np.hypot(*(q.center - q0.center))) / c_scale)
    runtime = time.time() - t0
    passed = (translate_err < 1e-6 and period_err < 1e-6
              and ham_worst < 1e-8 and center_worst < 1e-12 and runtime < 30.0)
    return CriterionResult("pointvortex-analytics", passed, runtime, {
        "translate_err": translate_err, "period_err": period_err,
        "hamiltonian_drift": ham_worst, "center_drift": center_worst})


# ---------------------------------------------------------------------------
# 3. velocity-bound lemma
# ---------------------------------------------------------------------------

def _random_bump_cloud(seed: int) -> tuple[ParticleCloud, float, float, float]:
    rng = np.random.default_rng(seed)
    h = float(rng.uniform(0.02, 0.03))
    k = 20
    idx = np.arange(-k, k + 1)
    ox, oy = np.meshgrid(idx * h, idx * h, indexing="ij")
    pos = np.column_stack([ox.ravel(), oy.ravel()])
    f = np.zeros(len(pos))
    for _ in range(rng.integers(1, 4)):
        c = rng.uniform(-0.3, 0.3, 2) * k * h / 0.5
        s = rng.uniform(0.1, 0.25)
        amp = rng.uniform(0.5, 2.0)
        f += amp * np.exp(-((pos[:, 0] - c[0]) ** 2 + (pos[:, 1] - c[1]) ** 2)
                          / (2 * s * s))
    w = f * h * h
    cloud = ParticleCloud(pos, w, np.zeros(len(w), dtype=np.int64), f, h, 2 * h)
    l1 = float(w.sum())
    l4 = float((np.sum(f ** 4) * h * h) ** 0.25)
    return cloud, l1, l4, h


def crit_velocity_bound(ctx: AcceptContext) -> CriterionResult:
    """On 100 random nonnegative clouds every sampled |u| stays below
    velocity_bound(l1, l4-quadrature, 4) with the documented constant.
    Budget: 60 s."""
    t0 = time.time()
    worst = 0.0
    for seed in range(100):
        cloud, l1, l4, h = _random_bump_cloud(9000 + seed)
        u = velocity_direct(cloud, cloud.positions, BlobSpec.blob(2 * h), serial=False)
        umax = float(np.max(np.hypot(u[:, 0], u[:, 1])))
        worst = max(worst, umax / velocity_bound(l1, l4, 4.0))
    runtime = time.time() - t0
    passed = worst <= 1.0 and runtime < 60.0
    return CriterionResult("velocity-bound-lemma", passed, runtime,
                           {"max_ratio": worst})


# ---------------------------------------------------------------------------
# 4. decomposition scaling (Prop-style)
# ---------------------------------------------------------------------------

def crit_decomposition(ctx: AcceptContext) -> CriterionResult:
    """Cauchy tail mass at eps = 0.01, beta = 0.5 equals 1/101 within 1e-6;
    the A-quantity over eps in {0.1, 0.05, 0.025, 0.0125} fits a log-log
    slope within 10% of 1 (the sweep uses the cutoff exponent 2/(sigma+1),
    at which the tail interpolation norm scales exactly like eps)."""
    t0 = time.time()
    cauchy = RadialProfile.cauchy()
    tail = decompose(cauchy, 0.01, 0.5).tail_mass
    tail_err = abs(tail - 1.0 / 101.0)
    eps_list = [0.1, 0.05, 0.025, 0.0125]
    beta = beta_floor(2.0)
    a_vals = [decompose(cauchy, e, beta).A_eps for e in eps_list]
    fit = fit_power_law(eps_list, a_vals)
    runtime = time.time() - t0
    passed = tail_err <= 1e-6 and abs(fit["slope"] - 1.0) <= 0.1 and runtime < 30.0
    return CriterionResult("decomposition-scaling", passed, runtime, {
        "tail_mass_err": tail_err, "A_slope": fit["slope"]})


# ---------------------------------------------------------------------------
# 5. single-vortex steadiness
# ---------------------------------------------------------------------------

def crit_single_vortex(ctx: AcceptContext) -> CriterionResult:
    """single-cauchy run (eps = 0.05, N ~ 1e4, T = 1): center stays within
    1e-3 of the start and the second moment within 1% of its initial value
    at every record.  Budget: 120 s."""
    t0 = time.time()
    man = ctx.scenario_run(get_scenario("single-cauchy"))[0]
    names, vals = _records(man)
    cx = vals[:, names.index("cx_0")]
    cy = vals[:, names.index("cy_0")]
    mom = vals[:, names.index("I_0")]
    drift = float(np.max(np.hypot(cx - cx[0], cy - cy[0])))
    mom_dev = float(np.max(np.abs(mom / mom[0] - 1.0)))
    runtime = time.time() - t0
    passed = drift <= 1e-3 and mom_dev <= 0.01 and runtime < 120.0
    return CriterionResult("single-vortex-steadiness", passed, runtime, {
        "center_drift": drift, "moment_dev": mom_dev,
        "n_particles": man.n_particles})


# ---------------------------------------------------------------------------
# 6. Gronwall bounds with measured constants
# ---------------------------------------------------------------------------

def crit_theorem_bounds(ctx: AcceptContext) -> CriterionResult:
    """corotate at eps = 0.05: per-label second moment below its explicit
    bound and ODE gap below the center bound at every record (all ratios
    <= 1).  Budget: 300 s."""
    t0 = time.time()
    cfg = get_scenario("corotate").single_epsilon(0.05)
    man = ctx.scenario_run(cfg, tag="eps05")[0]
    names, vals = _records(man)
    iratio = max(float(vals[:, i].max()) for i in _cols(names, "iratio_"))
    gapratio = max(float(vals[:, i].max()) for i in _cols(names, "gapratio_"))
    runtime = time.time() - t0
    passed = iratio <= 1.0 and gapratio <= 1.0 and runtime < 300.0
    return CriterionResult("gronwall-bounds", passed, runtime, {
        "max_i_ratio": iratio, "max_gap_ratio": gapratio})


# ---------------------------------------------------------------------------
# 7. confinement across the sweep
# ---------------------------------------------------------------------------

def crit_confinement(ctx: AcceptContext) -> CriterionResult:
    """corotate sweep over eps in {0.1, 0.05, 0.025}: the f = 0.99 support
    radius at T = 1 stays below eps^0.45 for every eps and decreases
    strictly with eps.  Budget: 600 s."""
    t0 = time.time()
    mans = ctx.scenario_run(get_scenario("corotate"))
    radii = {}
    ok = True
    for man in sorted(mans, key=lambda m: m.epsilon):
        names, vals = _records(man)
        r99 = max(float(vals[-1, i]) for i in _cols(names, "rf0.99_"))
        radii[man.epsilon] = r99
        ok = ok and r99 <= man.epsilon ** 0.45
    eps_sorted = sorted(radii)
    decreasing = all(radii[a] < radii[b] for a, b in zip(eps_sorted, eps_sorted[1:]))
    runtime = time.time() - t0
    passed = ok and decreasing and runtime < 600.0
    return CriterionResult("confinement-scaling", passed, runtime, {
        "radii": {f"{e:g}": round(r, 5) for e, r in radii.items()},
        "below_threshold": ok, "strictly_decreasing": decreasing})


# ---------------------------------------------------------------------------
# 8. concentration scaling
# ---------------------------------------------------------------------------

def crit_concentration(ctx: AcceptContext) -> CriterionResult:
    """sweep-concentration: outer mass beyond eps^0.2 at T = 1 fits a
    log-log slope >= 0.9 against eps with every point within 10% of the
    fitted line.  Budget: 600 s."""
    t0 = time.time()
    mans = ctx.scenario_run(get_scenario("sweep-concentration"))
    dirs = [m.directory for m in mans]
    summary = sweep_report(dirs, Path(ctx.workdir) / "concentration-summary.json")
    fit = summary["scenarios"]["sweep-concentration"]["fits"]["outer_mass_0"]
    runtime = time.time() - t0
    passed = (fit["slope"] >= 0.9 and fit["max_mult_residual"] <= 0.10
              and runtime < 600.0)
    return CriterionResult("concentration-scaling", passed, runtime, {
        "slope": fit["slope"], "max_mult_residual": fit["max_mult_residual"]})


# ---------------------------------------------------------------------------
# 9. long-time confinement
# ---------------------------------------------------------------------------

def crit_long_time(ctx: AcceptContext) -> CriterionResult:
    """long-time scenario (t_end = 0.1 |log eps| at eps = 0.05) completes
    with the confinement check satisfied: tau_measured = t_end.
    Budget: 600 s."""
    t0 = time.time()
    cfg = get_scenario("long-time")
    man = ctx.scenario_run(cfg)[0]
    names, vals = _records(man)
    times = vals[:, names.index("t")]
    threshold = man.A_eps ** man.a
    radii = np.max(np.column_stack([vals[:, i] for i in _cols(names, "rf0.99_")]),
                   axis=1)
    tau = 0.0
    for t, r in zip(times, radii):
        if r > threshold:
            break
        tau = float(t)
    required = man.c0 * abs(math.log(man.A_eps))
    runtime = time.time() - t0
    passed = (tau >= required * (1 - 1e-12)
              and abs(tau - cfg.t_end) <= 1e-9 and runtime < 600.0)
    return CriterionResult("long-time", passed, runtime, {
        "tau_measured": tau, "required": required, "t_end": cfg.t_end})


# ---------------------------------------------------------------------------
# 10. determinism
# ---------------------------------------------------------------------------

def _mini_config() -> ScenarioConfig:
    return ScenarioConfig(
        name="mini-pair",
        vortices=(VortexEntry((0.0, 0.5), TWO_PI, "gaussian"),
                  VortexEntry((0.0, -0.5), -TWO_PI, "gaussian")),
        epsilons=(0.05,),
        h_over_eps=0.25,
        mass_capture=0.99,
        dt=1e-3,
        t_end=0.02,
        record_every=5,
        diagnostics=DiagnosticsConfig(mu_radii=(0.3,), ring_radii=(0.3,)),
    )


def crit_determinism(ctx: AcceptContext) -> CriterionResult:
    """Serial reruns are byte-identical (diagnostics.csv); parallel final
    positions agree with serial within 1e-12 relative."""
    t0 = time.time()
    cfg = _mini_config()
    m1 = ctx.scenario_run(cfg, serial=True, tag="a")[0]
    m2 = ctx.scenario_run(cfg, serial=True, tag="b")[0]
    b1 = (Path(m1.directory) / "diagnostics.csv").read_bytes()
    b2 = (Path(m2.directory) / "diagnostics.csv").read_bytes()
    byte_identical = b1 == b2
    mp = ctx.scenario_run(cfg, serial=False, tag="p")[0]
    xs = read_snapshot(sorted(Path(m1.directory).glob("snapshots/*.csv"))[-1])
    xp = read_snapshot(sorted(Path(mp.directory).glob("snapshots/*.csv"))[-1])
    scale = max(1.0, float(np.max(np.abs(xs["positions"]))))
    pos_dev = float(np.max(np.abs(xs["positions"] - xp["positions"]))) / scale
    runtime = time.time() - t0
    passed = byte_identical and pos_dev <= 1e-12
    return CriterionResult("determinism", passed, runtime, {
        "byte_identical": byte_identical, "parallel_pos_dev": pos_dev})


CRITERIA = {
    "kernel-identities": crit_kernel_identities,
    "pointvortex-analytics": crit_pointvortex_analytics,
    "velocity-bound-lemma": crit_velocity_bound,
    "decomposition-scaling": crit_decomposition,
    "single-vortex-steadiness": crit_single_vortex,
    "gronwall-bounds": crit_theorem_bounds,
    "confinement-scaling": crit_confinement,
    "concentration-scaling": crit_concentration,
    "long-time": crit_long_time,
    "determinism": crit_determinism,
}


def run_suite(names, workdir) -> list[CriterionResult]:
    ctx = AcceptContext(workdir)
    results = []
    for name in names:
        results.append(CRITERIA[name](ctx))
    return results
