"""Theorem quantities measured on labeled clouds, and the explicit bounds
they are compared against: centers, second moments, outer/ring masses,
support radii, Gronwall gaps, confinement times.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cloud import PERTURBATION_LABEL, FloatArray, ParticleCloud
from .kernel import lipschitz_farfield_bound


# ---------------------------------------------------------------------------
# Pointwise reductions
# ---------------------------------------------------------------------------

def _label_arrays(cloud: ParticleCloud, label: int):
    mask = cloud.label_mask(label)
    return cloud.positions[mask], cloud.weights[mask]


def center_and_moment(cloud: ParticleCloud, label: int) -> tuple[FloatArray, float]:
    """Circulation-weighted center and second moment of one label.

    Discrete versions of p = (1/Omega) int x omega dx and
    I = (1/(2 Omega)) int |x-p|^2 omega dx with the signed label circulation
    as Omega; labels are single-signed by construction, so I >= 0.
    """
    pos, w = _label_arrays(cloud, label)
    omega = w.sum()
    if omega == 0.0:
        raise ValueError(f"label {label} has zero total circulation")
    p = (w @ pos) / omega
    r2 = (pos[:, 0] - p[0]) ** 2 + (pos[:, 1] - p[1]) ** 2
    return p, float((w @ r2) / (2.0 * omega))


def smooth_cutoff(s) -> FloatArray:
    """Radially decreasing ramp: 1 for s <= 1, cosine down to 0 at s = 2.

    Satisfies |chi'| <= pi/2 and |chi''| <= pi^2/4 on the ramp, so the
    rescaled cutoff chi(|x|/R) obeys the |grad| <= C/R, |D^2| <= C/R^2
    requirements with C = pi/2 and pi^2/4.
    """
    s = np.asarray(s, dtype=np.float64)
    out = np.ones_like(s)
    ramp = (s > 1.0) & (s < 2.0)
    out[ramp] = 0.5 * (1.0 + np.cos(math.pi * (s[ramp] - 1.0)))
    out[s >= 2.0] = 0.0
    return out


def cutoff_mass(cloud: ParticleCloud, label: int, radius: float,
                center: FloatArray | None = None) -> float:
    """mu(R) = (1/Omega) sum w_i (1 - chi(|x_i - p|/R)) for one label."""
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    pos, w = _label_arrays(cloud, label)
    omega = w.sum()
    if omega == 0.0:
        raise ValueError(f"label {label} has zero total circulation")
    p = center if center is not None else (w @ pos) / omega
    s = np.hypot(pos[:, 0] - p[0], pos[:, 1] - p[1]) / radius
    return float((w @ (1.0 - smooth_cutoff(s))) / omega)


def ring_mass(cloud: ParticleCloud, label: int, radius: float,
              center: FloatArray | None = None) -> float:
    """Absolute circulation of the label at distance >= radius from its center."""
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    pos, w = _label_arrays(cloud, label)
    if len(w) == 0:
        return 0.0
    if center is None:
        omega = w.sum()
        if omega == 0.0:
            raise ValueError(f"label {label} has zero total circulation")
        center = (w @ pos) / omega
    d = np.hypot(pos[:, 0] - center[0], pos[:, 1] - center[1])
    return float(np.abs(w[d >= radius]).sum())


def support_radius(cloud: ParticleCloud, label: int, fraction: float,
                   center: FloatArray | None = None) -> float:
    """Smallest radius about the label center holding ``fraction`` of its |w|."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    pos, w = _label_arrays(cloud, label)
    if len(w) == 0:
        raise ValueError(f"label {label} is empty")
    if center is None:
        omega = w.sum()
        if omega == 0.0:
            raise ValueError(f"label {label} has zero total circulation")
        center = (w @ pos) / omega
    d = np.hypot(pos[:, 0] - center[0], pos[:, 1] - center[1])
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(np.abs(w)[order])
    total = cum[-1]
    if total == 0.0:
        return 0.0
    k = int(np.searchsorted(cum, fraction * total - 1e-15 * total))
    k = min(k, len(d) - 1)
    return float(d[order][k])


def gronwall_gap(cloud: ParticleCloud, ode_positions: FloatArray) -> float:
    """G = sum_m |p_m(measured) - p_m(ODE)| over vortex labels in order."""
    labels = cloud.vortex_labels()
    ode = np.asarray(ode_positions, dtype=np.float64).reshape(-1, 2)
    if len(ode) != len(labels):
        raise ValueError(f"{len(ode)} ODE positions for {len(labels)} vortex labels")
    total = 0.0
    for m, p_ode in zip(labels, ode):
        p, _ = center_and_moment(cloud, m)
        total += float(np.hypot(*(p - p_ode)))
    return total


# ---------------------------------------------------------------------------
# Explicit bounds
# ---------------------------------------------------------------------------

def theory_moment_bound(t: float, moment0: float, lipschitz: float,
                        f2_sup: float) -> float:
    """I(t) <= 2 e^(2Lt) [ I(0) + (F2^2/2) ((1 - e^(-Lt))/L)^2 ]."""
    if not lipschitz > 0.0:
        raise ValueError("lipschitz constant must be positive")
    if moment0 < 0.0 or f2_sup < 0.0:
        raise ValueError("moment0 and f2_sup must be nonnegative")
    integral = -math.expm1(-lipschitz * t) / lipschitz
    return 2.0 * math.exp(2.0 * lipschitz * t) * (
        moment0 + 0.5 * f2_sup * f2_sup * integral * integral)


def theory_center_bound(t: float, gap0: float, moment0: float,
                        lipschitz: float, f2_sup: float) -> float:
    """Gronwall bound on |p(t) - P(t)| with both iterated integrals closed-form:
    int_0^t e^(-Ls) ds = (1 - e^(-Lt))/L and
    int_0^t int_0^r e^(-Ls) ds dr = (t - (1 - e^(-Lt))/L)/L.
    """
    if not lipschitz > 0.0:
        raise ValueError("lipschitz constant must be positive")
    # expm1 keeps both integrals accurate down to t -> 0, where the naive
    # forms lose everything to cancellation
    em = math.expm1(-lipschitz * t)
    int1 = -em / lipschitz
    int2 = (em + lipschitz * t) / (lipschitz * lipschitz)
    drift = 2.0 * lipschitz * (math.sqrt(max(moment0, 0.0))
                               + f2_sup / (math.sqrt(2.0) * lipschitz)) * int2
    return math.exp(lipschitz * t) * (gap0 + drift + f2_sup * int1)


@dataclass(frozen=True)
class TheoryBounds:
    """Bound evaluators for one label, with the measured constants frozen in."""

    A_eps: float
    L_estimate: float
    F2_sup: float
    moment0: float
    gap0: float

    def I_bound(self, t: float) -> float:
        return theory_moment_bound(t, self.moment0, self.L_estimate, self.F2_sup)

    def center_gap_bound(self, t: float) -> float:
        return theory_center_bound(t, self.gap0, self.moment0,
                                   self.L_estimate, self.F2_sup)

    def confinement_radius(self, a: float) -> float:
        return self.A_eps ** a


def estimate_lipschitz(cloud: ParticleCloud, label: int, separation: float) -> float:
    """Far-field Lipschitz constant for the velocity the other vortices induce."""
    other = 0.0
    for m in cloud.vortex_labels():
        if m != label:
            other += abs(cloud.circulation(m))
    return lipschitz_farfield_bound(other, separation)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    """One timestamped row of every measured theorem quantity."""

    t: float
    labels: list[int]
    center: dict[int, FloatArray]
    moment: dict[int, float]
    circulation: dict[int, float]
    support100: dict[int, float]
    support_frac: dict[float, dict[int, float]]    # fraction -> label -> radius
    mu: dict[int, list[float]]                     # label -> per configured R
    ring: dict[int, list[float]]                   # label -> per configured r
    total_circulation: float
    linear_impulse: FloatArray
    angular_impulse: float
    perturbation_circulation: float | None = None
    gaps: dict[int, float] | None = None
    gronwall: float | None = None
    i_ratio: dict[int, float] = field(default_factory=dict)
    gap_ratio: dict[int, float] = field(default_factory=dict)

    def min_center_separation(self) -> float:
        labs = self.labels
        if len(labs) < 2:
            return math.inf
        best = math.inf
        for i, a in enumerate(labs):
            for b in labs[i + 1:]:
                d = float(np.hypot(*(self.center[a] - self.center[b])))
                best = min(best, d)
        return best


@dataclass(frozen=True)
class DiagnosticsSpec:
    """What to measure at each record."""

    mu_radii: tuple[float, ...] = ()
    ring_radii: tuple[float, ...] = ()
    fractions: tuple[float, ...] = (0.99,)
    reference: object = None          # callable t -> (M, 2) ODE positions, or None


def compute_record(cloud: ParticleCloud, spec: DiagnosticsSpec) -> DiagnosticsRecord:
    labels = cloud.vortex_labels()
    center = {}
    moment = {}
    circ = {}
    s100 = {}
    sfrac: dict[float, dict[int, float]] = {f: {} for f in spec.fractions}
    mu = {}
    ring = {}
    for m in labels:
        p, mom = center_and_moment(cloud, m)
        center[m] = p
        moment[m] = mom
        circ[m] = cloud.circulation(m)
        s100[m] = support_radius(cloud, m, 1.0, center=p)
        for f in spec.fractions:
            sfrac[f][m] = support_radius(cloud, m, f, center=p)
        mu[m] = [cutoff_mass(cloud, m, r, center=p) for r in spec.mu_radii]
        ring[m] = [ring_mass(cloud, m, r, center=p) for r in spec.ring_radii]
    w = cloud.weights
    pos = cloud.positions
    pert_circ = (cloud.circulation(PERTURBATION_LABEL)
                 if PERTURBATION_LABEL in cloud.labels else None)
    # total accumulated from the per-label sums in label order, so the
    # decomposition identity sum_m circ_m + circ_pert = total holds bitwise
    total = 0.0
    for v in circ.values():
        total += v
    if pert_circ is not None:
        total += pert_circ
    rec = DiagnosticsRecord(
        t=cloud.time,
        labels=labels,
        center=center,
        moment=moment,
        circulation=circ,
        support100=s100,
        support_frac=sfrac,
        mu=mu,
        ring=ring,
        total_circulation=total,
        linear_impulse=w @ pos,
        angular_impulse=float(w @ (pos[:, 0] ** 2 + pos[:, 1] ** 2)),
    )
    rec.perturbation_circulation = pert_circ
    if spec.reference is not None:
        ode = np.asarray(spec.reference(cloud.time), dtype=np.float64).reshape(-1, 2)
        gaps = {}
        for m, p_ode in zip(labels, ode):
            gaps[m] = float(np.hypot(*(center[m] - p_ode)))
        rec.gaps = gaps
        rec.gronwall = float(sum(gaps.values()))
    return rec


@dataclass(frozen=True)
class ConfinementReport:
    tau_measured: float
    satisfied: bool
    threshold_radius: float
    required_time: float


def confinement_check(records: list[DiagnosticsRecord], A_eps: float, a: float,
                      fraction: float, c0: float) -> ConfinementReport:
    """tau = last record time before any label's support radius exceeds A_eps^a;
    satisfied when tau >= c0 |log A_eps|.
    """
    if not records:
        raise ValueError("need at least one record")
    times = [r.t for r in records]
    if any(t2 < t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("records must be in nondecreasing time order")
    threshold = A_eps ** a
    tau = 0.0
    for rec in records:
        radii = rec.support_frac.get(fraction)
        if radii is None:
            raise ValueError(f"records do not carry fraction {fraction}")
        if max(radii.values()) > threshold:
            break
        tau = rec.t
    required = c0 * abs(math.log(A_eps))
    return ConfinementReport(
        tau_measured=tau,
        satisfied=tau >= required * (1.0 - 1e-12),
        threshold_radius=threshold,
        required_time=required,
    )


# ---------------------------------------------------------------------------
# CSV serialization (the external interface of this module)
# ---------------------------------------------------------------------------

def _columns(rec: DiagnosticsRecord, spec: DiagnosticsSpec):
    cols: list[tuple[str, dict]] = [("t", {"kind": "time"})]
    for m in rec.labels:
        cols.append((f"cx_{m}", {"kind": "center_x", "label": m}))
        cols.append((f"cy_{m}", {"kind": "center_y", "label": m}))
        cols.append((f"I_{m}", {"kind": "second_moment", "label": m}))
        cols.append((f"circ_{m}", {"kind": "circulation", "label": m}))
        cols.append((f"r100_{m}", {"kind": "support_radius", "fraction": 1.0, "label": m}))
        for f in spec.fractions:
            cols.append((f"rf{f:g}_{m}",
                         {"kind": "support_radius", "fraction": f, "label": m}))
        for i, r in enumerate(spec.mu_radii):
            cols.append((f"mu{i}_{m}", {"kind": "cutoff_mass", "radius": r, "label": m}))
        for i, r in enumerate(spec.ring_radii):
            cols.append((f"ring{i}_{m}", {"kind": "ring_mass", "radius": r, "label": m}))
        if rec.gaps is not None:
            cols.append((f"gap_{m}", {"kind": "ode_gap", "label": m}))
        if m in rec.i_ratio:
            cols.append((f"iratio_{m}", {"kind": "moment_bound_ratio", "label": m}))
        if m in rec.gap_ratio:
            cols.append((f"gapratio_{m}", {"kind": "center_bound_ratio", "label": m}))
    if rec.perturbation_circulation is not None:
        cols.append(("circ_pert", {"kind": "circulation", "label": PERTURBATION_LABEL}))
    cols.append(("total_circ", {"kind": "total_circulation"}))
    cols.append(("impulse_x", {"kind": "linear_impulse_x"}))
    cols.append(("impulse_y", {"kind": "linear_impulse_y"}))
    cols.append(("angular_impulse", {"kind": "angular_impulse"}))
    if rec.gronwall is not None:
        cols.append(("G", {"kind": "gronwall_gap_sum"}))
    return cols


def _row(rec: DiagnosticsRecord, spec: DiagnosticsSpec) -> list[float]:
    vals: list[float] = [rec.t]
    for m in rec.labels:
        vals += [rec.center[m][0], rec.center[m][1], rec.moment[m],
                 rec.circulation[m], rec.support100[m]]
        vals += [rec.support_frac[f][m] for f in spec.fractions]
        vals += rec.mu[m]
        vals += rec.ring[m]
        if rec.gaps is not None:
            vals.append(rec.gaps[m])
        if m in rec.i_ratio:
            vals.append(rec.i_ratio[m])
        if m in rec.gap_ratio:
            vals.append(rec.gap_ratio[m])
    if rec.perturbation_circulation is not None:
        vals.append(rec.perturbation_circulation)
    vals += [rec.total_circulation, rec.linear_impulse[0], rec.linear_impulse[1],
             rec.angular_impulse]
    if rec.gronwall is not None:
        vals.append(rec.gronwall)
    return vals


def write_records_csv(records: list[DiagnosticsRecord], spec: DiagnosticsSpec,
                      csv_path, schema_path=None) -> None:
    """One CSV row per record; float formatting is shortest-roundtrip, so
    identical records serialize to identical bytes.  A sidecar JSON schema
    documents every column (kind, label, radius/fraction).
    """
    if not records:
        raise ValueError("no records to write")
    cols = _columns(records[0], spec)
    names = [c[0] for c in cols]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for rec in records:
            vals = _row(rec, spec)
            if len(vals) != len(names):
                raise ValueError("inconsistent record shapes within one run")
            writer.writerow([repr(float(v)) for v in vals])
    if schema_path is not None:
        schema = {"columns": [{"name": n, **meta} for n, meta in cols]}
        with open(schema_path, "w") as fh:
            json.dump(schema, fh, indent=1, sort_keys=True)
            fh.write("\n")


def read_records_csv(csv_path) -> tuple[list[str], np.ndarray]:
    """Read a diagnostics CSV back as (column names, value matrix)."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return names, np.asarray(data)
