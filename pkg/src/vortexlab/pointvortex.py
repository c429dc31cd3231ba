"""The Helmholtz point-vortex system: RHS, conserved quantities, RK4 integration.

M is small here (a handful of ideal vortices), so everything is plain
vectorized numpy; the N-body machinery lives in :mod:`vortexlab.kernel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import FloatArray

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VortexConfiguration:
    """Positions and circulations of M ideal point vortices."""

    positions: FloatArray   # (M, 2)
    gammas: FloatArray      # (M,)

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64)
        g = np.asarray(self.gammas, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must have shape (M, 2)")
        if g.shape != (pos.shape[0],):
            raise ValueError("gammas must have shape (M,)")
        if not (np.isfinite(pos).all() and np.isfinite(g).all()):
            raise ValueError("configuration contains non-finite values")
        if np.any(g == 0.0):
            raise ValueError("gammas must all be nonzero")
        if pos.shape[0] > 1 and _min_separation(pos) == 0.0:
            raise ValueError("vortex positions must be pairwise distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "gammas", g)

    @property
    def m(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class IntegratorSpec:
    """Fixed-step RK4 parameters.  dt < 0 integrates backwards to t_end < t0.

    min_separation is the collapse guard: the paper's ODE can blow up in
    finite time for exceptional data, so we stop with a flag instead of
    integrating through near-collisions.
    """

    dt: float
    t_end: float
    min_separation: float = 1e-6

    def __post_init__(self) -> None:
        if self.dt == 0.0 or not math.isfinite(self.dt):
            raise ValueError("dt must be nonzero and finite")
        if not self.min_separation > 0.0:
            raise ValueError("min_separation must be positive")


@dataclass
class Trajectory:
    """Time series of configurations from :func:`integrate`."""

    times: FloatArray       # (K,)
    positions: FloatArray   # (K, M, 2)
    gammas: FloatArray      # (M,)
    stopped_early: bool = False
    stop_reason: str = ""

    def config(self, k: int) -> VortexConfiguration:
        return VortexConfiguration(self.positions[k], self.gammas)

    def final(self) -> VortexConfiguration:
        return self.config(len(self.times) - 1)

    def at_times(self, query: FloatArray) -> FloatArray:
        """Positions at the requested times, which must match stored steps."""
        idx = np.searchsorted(self.times, np.asarray(query) - 1e-12)
        if np.any(idx >= len(self.times)):
            raise ValueError("queried time beyond trajectory end")
        if not np.allclose(self.times[idx], query, atol=1e-9):
            raise ValueError("queried times do not lie on stored steps")
        return self.positions[idx]


def _min_separation(pos: FloatArray) -> float:
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    m = pos.shape[0]
    d[np.arange(m), np.arange(m)] = np.inf
    return float(d.min())


def _rhs(pos: FloatArray, gammas: FloatArray) -> FloatArray:
    diff = pos[:, None, :] - pos[None, :, :]            # p_m - p_l
    r2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
    np.fill_diagonal(r2, np.inf)
    coef = gammas[None, :] / (TWO_PI * r2)              # gamma_l / (2 pi r^2)
    out = np.empty_like(pos)
    out[:, 0] = -(coef * diff[..., 1]).sum(axis=1)
    out[:, 1] = (coef * diff[..., 0]).sum(axis=1)
    return out


def helmholtz_rhs(config: VortexConfiguration) -> FloatArray:
    """dp_m/dt = sum_{l != m} gamma_l/(2 pi) (p_m - p_l)^perp / |p_m - p_l|^2."""
    if config.m > 1 and _min_separation(config.positions) == 0.0:
        raise ValueError("coincident vortices")
    return _rhs(config.positions, config.gammas)


def integrate(config: VortexConfiguration, spec: IntegratorSpec) -> Trajectory:
    """Classical RK4 with fixed step dt plus one partial step to land on t_end.

    The trajectory records t = 0 and every accepted step.  If any pairwise
    distance drops below min_separation the run stops early with a flag
    (collapse guard), not an exception.
    """
    pos = config.positions.copy()
    g = config.gammas
    span = spec.t_end
    if span * spec.dt < 0.0:
        raise ValueError("dt and t_end must have the same sign")
    n_full = int(abs(span) / abs(spec.dt) + 1e-9)
    rem = span - n_full * spec.dt

    times = [0.0]
    traj = [pos.copy()]
    stopped = False
    reason = ""
    t = 0.0
    steps = [spec.dt] * n_full + ([rem] if abs(rem) > 1e-15 * max(1.0, abs(span)) else [])
    for h in steps:
        if config.m > 1 and _min_separation(pos) < spec.min_separation:
            stopped = True
            reason = "min_separation"
            break
        k1 = _rhs(pos, g)
        k2 = _rhs(pos + 0.5 * h * k1, g)
        k3 = _rhs(pos + 0.5 * h * k2, g)
        k4 = _rhs(pos + h * k3, g)
        pos = pos + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(pos).all():
            raise FloatingPointError(f"non-finite vortex position at t = {t + h:.6g}")
        t += h
        times.append(t)
        traj.append(pos.copy())
    return Trajectory(
        times=np.asarray(times),
        positions=np.asarray(traj),
        gammas=g.copy(),
        stopped_early=stopped,
        stop_reason=reason,
    )


@dataclass(frozen=True)
class ConservedQuantities:
    hamiltonian: float
    center: FloatArray
    center_is_linear_impulse: bool
    angular_impulse: float
    total_circulation: float


def conserved_quantities(config: VortexConfiguration) -> ConservedQuantities:
    """Kirchhoff invariants of the point-vortex system.

    When the total circulation vanishes the center of vorticity is undefined
    and the linear impulse sum(gamma_m p_m) is reported instead, flagged.
    """
    pos = config.positions
    g = config.gammas
    if config.m > 1 and _min_separation(pos) == 0.0:
        raise ValueError("coincident vortices")
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(d, 1.0)                    # log 1 = 0 on the diagonal
    h = -(g[:, None] * g[None, :] * np.log(d)).sum() / (4.0 * math.pi)
    total = float(g.sum())
    impulse = g @ pos
    zeroish = abs(total) <= 1e-12 * float(np.abs(g).sum())
    center = impulse if zeroish else impulse / total
    return ConservedQuantities(
        hamiltonian=float(h),
        center=center,
        center_is_linear_impulse=zeroish,
        angular_impulse=float(g @ (pos[:, 0] ** 2 + pos[:, 1] ** 2)),
        total_circulation=total,
    )
