"""Biot-Savart kernel evaluation and N-body velocity summation.

The singular kernel is K(z) = (1/2pi) z_perp / |z|^2 with z_perp = (-z_y, z_x)
(counterclockwise convention: a positive vortex rotates fluid counterclockwise).
The regularized variant is the algebraic blob K_delta(z) = (1/2pi) z_perp /
(|z|^2 + delta^2), which is smooth, exactly antisymmetric and vanishes at z = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _accel
from .cloud import FloatArray, ParticleCloud

TWO_PI = 2.0 * math.pi


class KernelMode(Enum):
    SINGULAR = "singular"
    BLOB = "blob"


@dataclass(frozen=True)
class BlobSpec:
    """Kernel regularization choice.  delta is ignored in singular mode."""

    delta: float = 0.0
    mode: KernelMode = KernelMode.SINGULAR

    def __post_init__(self) -> None:
        if self.mode is KernelMode.BLOB and not self.delta > 0.0:
            raise ValueError("blob mode requires delta > 0")
        if not math.isfinite(self.delta) or self.delta < 0.0:
            raise ValueError("delta must be finite and nonnegative")

    @staticmethod
    def singular() -> "BlobSpec":
        return BlobSpec(0.0, KernelMode.SINGULAR)

    @staticmethod
    def blob(delta: float) -> "BlobSpec":
        return BlobSpec(delta, KernelMode.BLOB)

    @property
    def delta2(self) -> float:
        return self.delta * self.delta if self.mode is KernelMode.BLOB else 0.0


@dataclass(frozen=True)
class TreecodeParams:
    """Barnes-Hut acceptance and expansion parameters.

    A cell is evaluated by its multipole expansion when its particle radius
    about the expansion center is at most ``opening_angle / sqrt(2)`` times the
    distance to the target, which keeps the expansion ratio below 1/sqrt(2)
    for every admissible opening_angle.  The documented error model is
    tol(theta, p) = (theta/sqrt(2))^(p+1) / (1 - theta/sqrt(2)), measured
    relative to the largest direct-sum velocity; observed errors are well
    below it.
    """

    opening_angle: float = 0.5
    max_leaf_size: int = 64
    expansion_order: int = 6

    def __post_init__(self) -> None:
        if not 0.0 < self.opening_angle <= 1.0:
            raise ValueError("opening_angle must lie in (0, 1]")
        if self.max_leaf_size < 1:
            raise ValueError("max_leaf_size must be a positive integer")
        if self.expansion_order < 1:
            raise ValueError("expansion_order must be >= 1")

    def tol(self) -> float:
        rho = self.opening_angle / math.sqrt(2.0)
        return rho ** (self.expansion_order + 1) / (1.0 - rho)


def _as_points(x, name: str) -> FloatArray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2) if arr.size == 2 else arr
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (N, 2)")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def biot_savart(z, spec: BlobSpec) -> FloatArray:
    """Kernel value K(z) (singular) or K_delta(z) (blob); vectorized over rows."""
    arr = np.asarray(z, dtype=np.float64)
    single = arr.ndim == 1
    pts = _as_points(arr, "z")
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    if spec.mode is KernelMode.SINGULAR:
        if np.any(r2 == 0.0):
            raise ValueError("singular kernel evaluated at z = 0")
        denom = r2
    else:
        denom = r2 + spec.delta2
    out = np.empty_like(pts)
    out[:, 0] = -pts[:, 1] / denom / TWO_PI
    out[:, 1] = pts[:, 0] / denom / TWO_PI
    if spec.mode is KernelMode.BLOB:
        # blob kernel is zero at the origin; overwrite any 0/delta^2 = 0 rows
        out[r2 == 0.0] = 0.0
    return out[0] if single else out


def velocity_direct(sources: ParticleCloud, targets, spec: BlobSpec,
                    *, serial: bool = True) -> FloatArray:
    """Velocity at each target induced by all source particles.

    Summation runs in source-index order for every target, so serial results
    are bit-deterministic; the parallel driver distributes targets only and
    reproduces the serial bits exactly.
    """
    tgt = _as_points(targets, "targets")
    out = np.empty((tgt.shape[0], 2))
    flags = np.zeros(tgt.shape[0], dtype=np.int8)
    singular = spec.mode is KernelMode.SINGULAR
    sx = np.ascontiguousarray(sources.positions[:, 0])
    sy = np.ascontiguousarray(sources.positions[:, 1])
    fn = _accel.direct_eval_serial if serial else _accel.direct_eval_parallel
    fn(sx, sy, sources.weights, np.ascontiguousarray(tgt[:, 0]),
       np.ascontiguousarray(tgt[:, 1]), spec.delta2, singular, out, flags)
    if singular and flags.any():
        j = int(np.argmax(flags))
        raise ValueError(f"target {j} coincides with a source position in singular mode")
    return out


class _Quadtree:
    """Built tree over one source set, reusable for several target batches."""

    def __init__(self, sources: ParticleCloud, params: TreecodeParams):
        px = np.ascontiguousarray(sources.positions[:, 0])
        py = np.ascontiguousarray(sources.positions[:, 1])
        pw = sources.weights
        cap = max(256, 8 * len(pw) // max(1, params.max_leaf_size) + 64)
        while True:
            res = _accel.build_tree(px, py, pw, params.max_leaf_size,
                                    params.expansion_order, cap)
            if res[0] == 0:
                break
            cap *= 2
        (_, n_nodes, perm, child, start, end, is_leaf,
         cx, cy, side, rmax, moments) = res
        self.params = params
        self.px = px[perm]
        self.py = py[perm]
        self.pw = pw[perm]
        self.child = child[:n_nodes]
        self.start = start[:n_nodes]
        self.end = end[:n_nodes]
        self.is_leaf = is_leaf[:n_nodes]
        self.cx = cx[:n_nodes]
        self.cy = cy[:n_nodes]
        self.rmax = rmax[:n_nodes]
        self.moments = moments[:n_nodes]

    def evaluate(self, targets: FloatArray, delta2: float, *, serial: bool) -> FloatArray:
        out = np.empty((targets.shape[0], 2))
        mac2 = 0.5 * self.params.opening_angle ** 2
        fn = _accel.tree_eval_serial if serial else _accel.tree_eval_parallel
        fn(np.ascontiguousarray(targets[:, 0]), np.ascontiguousarray(targets[:, 1]),
           self.px, self.py, self.pw, self.child, self.start, self.end,
           self.is_leaf, self.cx, self.cy, self.rmax, self.moments,
           delta2, mac2, self.params.expansion_order, out)
        return out


def velocity_tree(sources: ParticleCloud, targets, spec: BlobSpec,
                  params: TreecodeParams, *, serial: bool = True) -> FloatArray:
    """Treecode approximation of :func:`velocity_direct` (blob mode only).

    With at most ``max_leaf_size`` sources the tree is a single leaf and the
    result is bit-exact equal to the direct sum.
    """
    if spec.mode is not KernelMode.BLOB:
        raise ValueError("the treecode requires blob mode (smooth far field)")
    tgt = _as_points(targets, "targets")
    if len(sources) == 0:
        return np.zeros((tgt.shape[0], 2))
    tree = _Quadtree(sources, params)
    return tree.evaluate(tgt, spec.delta2, serial=serial)


def velocity_bound(l1_norm: float, lq_norm: float, q: float) -> float:
    """Explicit sup bound on |u| induced by a vorticity with the given norms.

    Splitting the convolution at radius R and applying Hoelder on the near
    part gives, with q' = q/(q-1),

        |u| <= (1/2pi) [ (2pi/(2-q'))^(1/q') R^((2-q')/q') lq + l1 / R ],

    evaluated at the splitting radius R = (l1/lq)^(q'/2).
    """
    if not q > 2.0:
        raise ValueError("q must exceed 2")
    if l1_norm < 0.0 or lq_norm < 0.0:
        raise ValueError("norms must be nonnegative")
    if l1_norm == 0.0:
        return 0.0
    if lq_norm == 0.0:
        raise ValueError("lq_norm cannot vanish when l1_norm is positive")
    qp = q / (q - 1.0)
    rstar = (l1_norm / lq_norm) ** (qp / 2.0)
    near = (TWO_PI / (2.0 - qp)) ** (1.0 / qp) * rstar ** ((2.0 - qp) / qp) * lq_norm
    far = l1_norm / rstar
    return (near + far) / TWO_PI


def lipschitz_farfield_bound(l1_norm: float, delta_sep: float) -> float:
    """Velocity-gradient bound (4/2pi) * l1 / delta_sep^2 away from a blob.

    Traced constant: for vorticity supported in a ball of radius delta_sep/4
    about p and evaluation points at distance >= delta_sep from p, every
    source satisfies |x - y| >= delta_sep/2, and the kernel Jacobian has
    operator norm (1/2pi)/|x-y|^2 <= (1/2pi) * 4/delta_sep^2.
    """
    if not delta_sep > 0.0:
        raise ValueError("delta_sep must be positive")
    if l1_norm < 0.0:
        raise ValueError("l1_norm must be nonnegative")
    return 4.0 / TWO_PI * l1_norm / (delta_sep * delta_sep)
