"""Self-similar initial vorticity: radial profiles, core/tail decomposition,
deterministic midpoint-rule particle sampling.

All profiles integrate to one.  The scale-epsilon vortex is
omega(x) = (gamma/eps^2) eta((x - p0)/eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .cloud import PERTURBATION_LABEL, FloatArray, ParticleCloud, concatenate

TWO_PI = 2.0 * math.pi

# cells with |weight| below this fraction of the vortex circulation are dropped
WEIGHT_FLOOR = 1e-15


class ProfileKind(str, Enum):
    CAUCHY = "cauchy"
    ALGEBRAIC = "algebraic"
    GAUSSIAN = "gaussian"
    BUMP = "bump"


@lru_cache(maxsize=None)
def _algebraic_norm(sigma: float) -> float:
    # integral of 1/(1+r^(2+sigma)) over the plane: pi * (pi/p) / sin(pi/p),
    # p = (2+sigma)/2, via the substitution u = r^2
    p = 0.5 * (2.0 + sigma)
    total = math.pi * (math.pi / p) / math.sin(math.pi / p)
    return 1.0 / total


@lru_cache(maxsize=None)
def _bump_norm() -> float:
    total, _ = quad(lambda r: TWO_PI * r * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0)
    return 1.0 / total


@dataclass(frozen=True)
class RadialProfile:
    """A nonnegative unit-mass radial shape with algebraic tail exponent sigma.

    sigma is the decay exponent in eta <= C/(1 + r^(2+sigma)); the Gaussian
    and the compact bump decay faster than any power and carry sigma = inf.
    ``normalization`` is the constant making the total mass one, and
    ``tail_constant`` the documented C for the stated sigma.
    """

    kind: ProfileKind
    sigma: float
    normalization: float
    tail_constant: float

    @staticmethod
    def cauchy() -> "RadialProfile":
        # (1/pi)(1+r^2)^-2 <= (1/pi)/(1+r^4) since (1+r^2)^2 >= 1+r^4
        return RadialProfile(ProfileKind.CAUCHY, 2.0, 1.0 / math.pi, 1.0 / math.pi)

    @staticmethod
    def algebraic(sigma: float) -> "RadialProfile":
        if not sigma > 0.0:
            raise ValueError("sigma must be positive")
        c = _algebraic_norm(sigma)
        return RadialProfile(ProfileKind.ALGEBRAIC, sigma, c, c)

    @staticmethod
    def gaussian() -> "RadialProfile":
        # exp(-r^2)(1+r^4) peaks at about 1.31; C = 1.5/pi is a clean cover
        return RadialProfile(ProfileKind.GAUSSIAN, math.inf, 1.0 / math.pi, 1.5 / math.pi)

    @staticmethod
    def bump() -> "RadialProfile":
        c = _bump_norm()
        # support in r <= 1, so eta (1+r^4) <= 2 max eta = 2 c e^-1
        return RadialProfile(ProfileKind.BUMP, math.inf, c, 2.0 * c * math.exp(-1.0))

    def tail_sigma(self) -> float:
        """Decay exponent to use in tail-bound checks (4 stands in for inf)."""
        return self.sigma if math.isfinite(self.sigma) else 4.0

    # -- radial evaluation -------------------------------------------------

    def eval_radius(self, r) -> FloatArray:
        r = np.asarray(r, dtype=np.float64)
        c = self.normalization
        if self.kind is ProfileKind.CAUCHY:
            return c / (1.0 + r * r) ** 2
        if self.kind is ProfileKind.ALGEBRAIC:
            return c / (1.0 + r ** (2.0 + self.sigma))
        if self.kind is ProfileKind.GAUSSIAN:
            return c * np.exp(-(r * r))
        scalar = r.ndim == 0
        rr = np.atleast_1d(r)
        out = np.zeros_like(rr)
        inside = rr < 1.0
        out[inside] = c * np.exp(-1.0 / (1.0 - rr[inside] ** 2))
        return out[0] if scalar else out

    # -- cumulative mass ---------------------------------------------------

    def mass_within(self, rho: float) -> float:
        """Mass inside radius rho (closed form where available)."""
        if rho <= 0.0:
            return 0.0
        if self.kind is ProfileKind.CAUCHY:
            return rho * rho / (1.0 + rho * rho)
        if self.kind is ProfileKind.GAUSSIAN:
            return 1.0 - math.exp(-(rho * rho))
        if self.kind is ProfileKind.ALGEBRAIC:
            # complement of the tail integral, which converges cleanly
            return 1.0 - self.tail_mass(rho)
        if self.kind is ProfileKind.BUMP and rho >= 1.0:
            return 1.0
        val, _ = quad(lambda r: TWO_PI * r * float(self.eval_radius(r)), 0.0, rho,
                      limit=200)
        return min(val, 1.0)

    def tail_mass(self, rho: float) -> float:
        """Mass beyond radius rho, computed on the tail for accuracy."""
        if rho <= 0.0:
            return 1.0
        if self.kind is ProfileKind.CAUCHY:
            return 1.0 / (1.0 + rho * rho)
        if self.kind is ProfileKind.GAUSSIAN:
            return math.exp(-(rho * rho))
        if self.kind is ProfileKind.BUMP:
            if rho >= 1.0:
                return 0.0
            val, _ = quad(lambda r: TWO_PI * r * float(self.eval_radius(r)), rho, 1.0)
            return val
        val, _ = quad(lambda r: TWO_PI * r * float(self.eval_radius(r)), rho, np.inf,
                      limit=200)
        return val

    def radius_of_mass(self, mass: float) -> float:
        """Smallest radius containing the given mass fraction."""
        if not 0.0 < mass < 1.0:
            raise ValueError("mass fraction must lie in (0, 1)")
        if self.kind is ProfileKind.CAUCHY:
            return math.sqrt(mass / (1.0 - mass))
        if self.kind is ProfileKind.GAUSSIAN:
            return math.sqrt(-math.log(1.0 - mass))
        hi = 1.0
        if self.kind is not ProfileKind.BUMP:
            while self.mass_within(hi) < mass:
                hi *= 2.0
        return brentq(lambda r: self.mass_within(r) - mass, 1e-12, hi, xtol=1e-12)

    def lq_tail_norm(self, q: float, rho: float) -> float:
        """(integral of eta^q over |y| > rho)^(1/q)."""
        if self.kind is ProfileKind.BUMP and rho >= 1.0:
            return 0.0
        hi = 1.0 if self.kind is ProfileKind.BUMP else np.inf
        val, _ = quad(lambda r: TWO_PI * r * float(self.eval_radius(r)) ** q, rho, hi,
                      limit=200)
        return val ** (1.0 / q)


def eval_profile(profile: RadialProfile, y) -> FloatArray:
    """eta(y) for a point or an (..., 2) array of points."""
    y = np.asarray(y, dtype=np.float64)
    r = np.hypot(y[..., 0], y[..., 1])
    return profile.eval_radius(r)


@dataclass(frozen=True)
class VortexSpec:
    """One concentrated vortex of the initial data."""

    center: FloatArray
    gamma: float
    profile: RadialProfile
    epsilon: float

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=np.float64).reshape(2)
        if not np.isfinite(c).all():
            raise ValueError("center must be finite")
        if self.gamma == 0.0 or not math.isfinite(self.gamma):
            raise ValueError("gamma must be nonzero and finite")
        if not 0.0 < self.epsilon:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "center", c)


@dataclass(frozen=True)
class ExplicitPerturbation:
    """Explicit perturbation field sampled on its own grid (library use only)."""

    func: object                # callable (N,2) -> (N,) vorticity values
    center: tuple[float, float]
    half_extent: float


@dataclass(frozen=True)
class InitialData:
    vortices: tuple[VortexSpec, ...]
    perturbation: ExplicitPerturbation | None = None

    def __post_init__(self) -> None:
        vs = tuple(self.vortices)
        if not vs:
            raise ValueError("need at least one vortex")
        centers = np.array([v.center for v in vs])
        if len(vs) > 1:
            diff = centers[:, None, :] - centers[None, :, :]
            d = np.hypot(diff[..., 0], diff[..., 1])
            np.fill_diagonal(d, np.inf)
            if d.min() == 0.0:
                raise ValueError("vortex centers must be pairwise distinct")
        object.__setattr__(self, "vortices", vs)

    def min_separation(self) -> float:
        centers = np.array([v.center for v in self.vortices])
        if len(self.vortices) == 1:
            return math.inf
        diff = centers[:, None, :] - centers[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(d, np.inf)
        return float(d.min())


def eval_initial_vorticity(data: InitialData, x) -> FloatArray:
    """omega_0(x) = sum_m (gamma_m/eps_m^2) eta_m((x - p_m)/eps_m) + perturbation."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(-1, 2)
    out = np.zeros(pts.shape[0])
    for v in data.vortices:
        y = (pts - v.center) / v.epsilon
        out += (v.gamma / v.epsilon ** 2) * eval_profile(v.profile, y)
    if data.perturbation is not None:
        out += np.asarray(data.perturbation.func(pts), dtype=np.float64)
    return out[0] if single else out.reshape(x.shape[:-1])


# ---------------------------------------------------------------------------
# Exponents of the concentration theory
# ---------------------------------------------------------------------------

def beta_opt(sigma: float) -> float:
    """Cutoff exponent 2/(sigma+2) balancing core radius against tail decay."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    return 2.0 / (sigma + 2.0)


def beta_floor(sigma: float) -> float:
    """Cutoff exponent 2/(sigma+1), at which the tail interpolation norm
    decays exactly like the regularization scale epsilon itself (slope one).
    """
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    return 2.0 / (sigma + 1.0)


def a0_exponent(gamma1: float, sigma: float) -> float:
    """Concentration exponent (1/2) min{1 - gamma1/sigma, gamma1 + gamma1/sigma - 1},
    positive exactly on sigma/(sigma+1) < gamma1 < sigma.
    """
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    if not sigma / (sigma + 1.0) < gamma1 < sigma:
        raise ValueError("gamma1 must lie in (sigma/(sigma+1), sigma)")
    return 0.5 * min(1.0 - gamma1 / sigma, gamma1 + gamma1 / sigma - 1.0)


@dataclass(frozen=True)
class DecompositionResult:
    core_mass: float
    tail_mass: float
    beta: float
    cutoff_radius: float        # eps^(1-beta), physical units
    A_eps: float
    lp_norms: dict              # exponent -> norm of the physical tail part
    q: float


def decompose(profile: RadialProfile, epsilon: float, beta: float,
              q: float = 4.0) -> DecompositionResult:
    """Sharp cutoff of the unit vortex at radius eps^(1-beta).

    Tail norms refer to the physical field (1/eps^2) eta(x/eps) restricted to
    |x| > eps^(1-beta); the A-quantity is
    max{ ||tail||_q^(q/(2q-2)) ||tail||_1^((q-2)/(2q-2)), eps }.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not q > 2.0:
        raise ValueError("q must exceed 2")
    rho_cut = epsilon ** (-beta)            # cutoff radius in profile units
    tail = profile.tail_mass(rho_cut)
    core = profile.mass_within(rho_cut)
    l1 = tail
    lq = epsilon ** (2.0 / q - 2.0) * profile.lq_tail_norm(q, rho_cut)
    if l1 > 0.0 and lq > 0.0:
        product = lq ** (q / (2.0 * q - 2.0)) * l1 ** ((q - 2.0) / (2.0 * q - 2.0))
    else:
        product = 0.0
    return DecompositionResult(
        core_mass=core,
        tail_mass=tail,
        beta=beta,
        cutoff_radius=epsilon ** (1.0 - beta),
        A_eps=max(product, epsilon),
        lp_norms={1.0: l1, q: lq},
        q=q,
    )


def a_eps_for_data(data: InitialData, q: float = 4.0) -> float:
    """A-quantity of combined initial data (triangle-inequality upper bound).

    The cutoff exponent is beta_floor(sigma) for finite-sigma profiles and
    1/2 for the super-algebraic ones, whose tails are negligible anyway.
    """
    l1 = 0.0
    lq = 0.0
    eps_max = 0.0
    for v in data.vortices:
        sig = v.profile.sigma
        beta = beta_floor(sig) if math.isfinite(sig) else 0.5
        d = decompose(v.profile, v.epsilon, beta, q)
        l1 += abs(v.gamma) * d.lp_norms[1.0]
        lq += abs(v.gamma) * d.lp_norms[q]
        eps_max = max(eps_max, v.epsilon)
    if l1 > 0.0 and lq > 0.0:
        product = lq ** (q / (2.0 * q - 2.0)) * l1 ** ((q - 2.0) / (2.0 * q - 2.0))
    else:
        product = 0.0
    return max(product, eps_max)


# ---------------------------------------------------------------------------
# Particle sampling
# ---------------------------------------------------------------------------

def sample_particles(data: InitialData, grid_h: float, mass_capture: float,
                     *, split_beta: float | None = None,
                     max_particles: int = 200_000) -> ParticleCloud:
    """Midpoint-rule sampling of the initial vorticity on per-vortex grids.

    Each vortex gets a uniform grid of spacing h centered at its own p_m (so
    symmetric profiles sample with exactly zero first moment), truncated at
    the radius capturing ``mass_capture`` of the profile mass.  Weights are
    omega0(cell center) h^2; cells below the weight floor are dropped.  With
    ``split_beta`` set, cells beyond the decomposition cutoff eps^(1-beta)
    are labeled as perturbation instead of their vortex.  Output ordering is
    row-major per vortex, so identical inputs give identical clouds.
    """
    if not grid_h > 0.0:
        raise ValueError("grid_h must be positive")
    if not 0.0 < mass_capture < 1.0:
        raise ValueError("mass_capture must lie in (0, 1)")
    clouds = []
    for m, v in enumerate(data.vortices):
        radius = v.epsilon * v.profile.radius_of_mass(mass_capture)
        k = int(math.floor(radius / grid_h))
        nside = 2 * k + 1
        if nside * nside > 4 * max_particles:
            raise ValueError(
                f"vortex {m}: grid would have {nside * nside} cells; "
                f"raise grid_h or max_particles")
        idx = np.arange(-k, k + 1)
        ox, oy = np.meshgrid(idx * grid_h, idx * grid_h, indexing="ij")
        offsets = np.column_stack([ox.ravel(), oy.ravel()])
        keep = np.hypot(offsets[:, 0], offsets[:, 1]) <= radius
        offsets = offsets[keep]
        pos = v.center + offsets
        y = offsets / v.epsilon
        omega = (v.gamma / v.epsilon ** 2) * eval_profile(v.profile, y)
        w = omega * grid_h * grid_h
        keep = np.abs(w) >= WEIGHT_FLOOR * abs(v.gamma)
        pos, w, omega, offsets = pos[keep], w[keep], omega[keep], offsets[keep]
        labels = np.full(len(w), m, dtype=np.int64)
        if split_beta is not None:
            cut = v.epsilon ** (1.0 - split_beta)
            outside = np.hypot(offsets[:, 0], offsets[:, 1]) > cut
            labels[outside] = PERTURBATION_LABEL
        clouds.append(ParticleCloud(pos, w, labels, omega, grid_h, 2.0 * grid_h))
    if data.perturbation is not None:
        p = data.perturbation
        k = int(math.floor(p.half_extent / grid_h))
        idx = np.arange(-k, k + 1)
        ox, oy = np.meshgrid(idx * grid_h, idx * grid_h, indexing="ij")
        pos = np.column_stack([ox.ravel(), oy.ravel()]) + np.asarray(p.center)
        omega = np.asarray(p.func(pos), dtype=np.float64)
        w = omega * grid_h * grid_h
        scale = float(np.abs(w).sum())
        keep = np.abs(w) >= WEIGHT_FLOOR * max(scale, 1e-300)
        labels = np.full(int(keep.sum()), PERTURBATION_LABEL, dtype=np.int64)
        clouds.append(ParticleCloud(pos[keep], w[keep], labels, omega[keep],
                                    grid_h, 2.0 * grid_h))
    cloud = concatenate(clouds)
    if len(cloud) > max_particles:
        raise ValueError(f"sampled {len(cloud)} particles, exceeding the "
                         f"configured maximum {max_particles}")
    return cloud
