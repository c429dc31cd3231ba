"""Particle cloud containers shared by the kernel, sampler and simulator."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

# Label carried by particles that belong to the perturbation part of the
# vorticity rather than to one of the numbered vortices.
PERTURBATION_LABEL = -1


@dataclass(frozen=True)
class VortexParticle:
    """One quadrature particle: position, circulation weight, provenance.

    ``label`` is the index of the vortex the particle was sampled from, or
    ``PERTURBATION_LABEL``.  ``omega0`` is the initial vorticity value at the
    particle's quadrature node; both are transported unchanged by the flow.
    """

    position: FloatArray
    weight: float
    label: int
    omega0: float


@dataclass(frozen=True)
class ParticleCloud:
    """Ordered particle collection with its quadrature metadata.

    Particle identity is the array index; advection never reorders, drops or
    relabels particles.  ``blob_delta`` is the blob regularization width used
    for all velocity evaluations on this cloud.
    """

    positions: FloatArray      # (N, 2)
    weights: FloatArray        # (N,)
    labels: IntArray           # (N,)
    omega0: FloatArray         # (N,)
    grid_h: float
    blob_delta: float
    time: float = 0.0

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must have shape (N, 2)")
        n = pos.shape[0]
        w = np.asarray(self.weights, dtype=np.float64)
        lab = np.asarray(self.labels, dtype=np.int64)
        om = np.asarray(self.omega0, dtype=np.float64)
        if w.shape != (n,) or lab.shape != (n,) or om.shape != (n,):
            raise ValueError("weights, labels and omega0 must all have shape (N,)")
        if not (np.isfinite(pos).all() and np.isfinite(w).all() and np.isfinite(om).all()):
            raise ValueError("cloud contains non-finite values")
        if not self.blob_delta > 0.0:
            raise ValueError("blob_delta must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "omega0", om)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def particle(self, i: int) -> VortexParticle:
        return VortexParticle(
            position=self.positions[i].copy(),
            weight=float(self.weights[i]),
            label=int(self.labels[i]),
            omega0=float(self.omega0[i]),
        )

    def vortex_labels(self) -> list[int]:
        """Distinct vortex labels present, in ascending order (perturbation excluded)."""
        labs = np.unique(self.labels)
        return [int(m) for m in labs if m != PERTURBATION_LABEL]

    def label_mask(self, label: int) -> NDArray[np.bool_]:
        return self.labels == label

    def circulation(self, label: int | None = None) -> float:
        """Signed total circulation, optionally restricted to one label."""
        if label is None:
            return float(self.weights.sum())
        return float(self.weights[self.label_mask(label)].sum())

    def with_positions(self, positions: FloatArray, time: float) -> "ParticleCloud":
        """New cloud with advected positions; everything else is carried over."""
        return replace(self, positions=positions, time=time)


def concatenate(clouds: list[ParticleCloud]) -> ParticleCloud:
    """Join clouds in the given order; metadata must agree."""
    if not clouds:
        raise ValueError("need at least one cloud")
    h = clouds[0].grid_h
    delta = clouds[0].blob_delta
    t = clouds[0].time
    for c in clouds[1:]:
        if (c.grid_h, c.blob_delta, c.time) != (h, delta, t):
            raise ValueError("clouds disagree on grid_h, blob_delta or time")
    return ParticleCloud(
        positions=np.concatenate([c.positions for c in clouds]),
        weights=np.concatenate([c.weights for c in clouds]),
        labels=np.concatenate([c.labels for c in clouds]),
        omega0=np.concatenate([c.omega0 for c in clouds]),
        grid_h=h,
        blob_delta=delta,
        time=t,
    )
