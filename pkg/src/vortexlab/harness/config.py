"""Scenario configuration: JSON schema, validation, resolution per epsilon.

A scenario config is a plain JSON object; see README for the full schema.
Validation errors carry the dotted path of the offending entry.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from ..kernel import TreecodeParams
from ..profiles import InitialData, ProfileKind, RadialProfile, VortexSpec
from ..simulator import VelocityMethod

MAX_BUDGET_PARTICLES = 100_000


class ConfigError(ValueError):
    """Invalid scenario configuration; message carries the config path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class VortexEntry:
    center: tuple[float, float]
    gamma: float
    profile: str
    sigma: float | None = None

    def radial_profile(self) -> RadialProfile:
        kind = ProfileKind(self.profile)
        if kind is ProfileKind.CAUCHY:
            return RadialProfile.cauchy()
        if kind is ProfileKind.GAUSSIAN:
            return RadialProfile.gaussian()
        if kind is ProfileKind.BUMP:
            return RadialProfile.bump()
        return RadialProfile.algebraic(float(self.sigma))


@dataclass(frozen=True)
class DiagnosticsConfig:
    mu_radii: tuple[float, ...] = ()
    mu_radii_eps_pow: tuple[float, ...] = ()
    ring_radii: tuple[float, ...] = ()
    ring_radii_eps_pow: tuple[float, ...] = ()
    fractions: tuple[float, ...] = (0.99,)
    a: float = 0.45
    q: float = 4.0
    c0: float = 0.1

    def resolve_mu(self, eps: float) -> tuple[float, ...]:
        return self.mu_radii + tuple(eps ** p for p in self.mu_radii_eps_pow)

    def resolve_ring(self, eps: float) -> tuple[float, ...]:
        return self.ring_radii + tuple(eps ** p for p in self.ring_radii_eps_pow)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    vortices: tuple[VortexEntry, ...]
    epsilons: tuple[float, ...]
    h_over_eps: float
    mass_capture: float
    dt: float
    t_end: float
    velocity_method: str = VelocityMethod.AUTO
    record_every: int = 1
    tree: TreecodeParams = TreecodeParams()
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()
    split_beta: float | None = None
    snapshot_every: int = 0

    def min_separation(self) -> float:
        centers = np.array([v.center for v in self.vortices])
        if len(centers) == 1:
            return math.inf
        diff = centers[:, None, :] - centers[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(d, np.inf)
        return float(d.min())

    def initial_data(self, eps: float) -> InitialData:
        return InitialData(tuple(
            VortexSpec(np.asarray(v.center), v.gamma, v.radial_profile(), eps)
            for v in self.vortices))

    def estimated_particles(self, eps: float) -> int:
        total = 0
        h = self.h_over_eps * eps
        for v in self.vortices:
            radius = eps * v.radial_profile().radius_of_mass(self.mass_capture)
            total += int(math.pi * (radius / h) ** 2) + 1
        return total

    def single_epsilon(self, eps: float) -> "ScenarioConfig":
        if eps not in self.epsilons:
            raise ValueError(f"{eps} is not part of this scenario's sweep")
        return replace(self, epsilons=(eps,))

    def to_dict(self) -> dict:
        d: dict = {
            "name": self.name,
            "vortices": [
                {"center": list(v.center), "gamma": v.gamma, "profile": v.profile,
                 **({"sigma": v.sigma} if v.sigma is not None else {})}
                for v in self.vortices
            ],
            "grid": {"h_over_eps": self.h_over_eps, "mass_capture": self.mass_capture},
            "sim": {"dt": self.dt, "t_end": self.t_end,
                    "velocity_method": self.velocity_method,
                    "record_every": self.record_every,
                    "tree": {"opening_angle": self.tree.opening_angle,
                             "max_leaf_size": self.tree.max_leaf_size,
                             "expansion_order": self.tree.expansion_order}},
            "diagnostics": {
                "mu_radii": list(self.diagnostics.mu_radii),
                "mu_radii_eps_pow": list(self.diagnostics.mu_radii_eps_pow),
                "ring_radii": list(self.diagnostics.ring_radii),
                "ring_radii_eps_pow": list(self.diagnostics.ring_radii_eps_pow),
                "fractions": list(self.diagnostics.fractions),
                "a": self.diagnostics.a, "q": self.diagnostics.q,
                "c0": self.diagnostics.c0,
            },
        }
        if len(self.epsilons) == 1:
            d["epsilon"] = self.epsilons[0]
        else:
            d["epsilon_sweep"] = list(self.epsilons)
        if self.split_beta is not None:
            d["perturbation"] = {"split_beta": self.split_beta}
        if self.snapshot_every:
            d["snapshot_every"] = self.snapshot_every
        return d

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        _expect(not required, f"{path}.{key}", "missing required entry")
        return default
    return d[key]


def _number(v, path: str) -> float:
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), path,
            f"expected a number, got {v!r}")
    _expect(math.isfinite(float(v)), path, "must be finite")
    return float(v)


def parse_config(raw: dict, path: str = "config") -> ScenarioConfig:
    """Validate a raw JSON object into a ScenarioConfig."""
    _expect(isinstance(raw, dict), path, "expected a JSON object")
    known = {"name", "vortices", "epsilon", "epsilon_sweep", "perturbation",
             "grid", "sim", "diagnostics", "snapshot_every"}
    for key in raw:
        _expect(key in known, f"{path}.{key}", "unknown entry")
    name = _get(raw, "name", path)
    _expect(isinstance(name, str) and name != "", f"{path}.name",
            "must be a nonempty string")

    vort_raw = _get(raw, "vortices", path)
    _expect(isinstance(vort_raw, list) and vort_raw, f"{path}.vortices",
            "must be a nonempty list")
    vortices = []
    for i, v in enumerate(vort_raw):
        vp = f"{path}.vortices[{i}]"
        _expect(isinstance(v, dict), vp, "expected an object")
        center = _get(v, "center", vp)
        _expect(isinstance(center, list) and len(center) == 2, f"{vp}.center",
                "must be a pair [x, y]")
        cx = _number(center[0], f"{vp}.center[0]")
        cy = _number(center[1], f"{vp}.center[1]")
        gamma = _number(_get(v, "gamma", vp), f"{vp}.gamma")
        _expect(gamma != 0.0, f"{vp}.gamma", "must be nonzero")
        profile = _get(v, "profile", vp)
        kinds = [k.value for k in ProfileKind]
        _expect(profile in kinds, f"{vp}.profile", f"must be one of {kinds}")
        sigma = v.get("sigma")
        if profile == ProfileKind.ALGEBRAIC.value:
            _expect(sigma is not None, f"{vp}.sigma",
                    "required for the algebraic profile")
            sigma = _number(sigma, f"{vp}.sigma")
            _expect(sigma > 0.0, f"{vp}.sigma", "must be positive")
        elif sigma is not None:
            sigma = _number(sigma, f"{vp}.sigma")
        vortices.append(VortexEntry((cx, cy), gamma, profile, sigma))
    centers = np.array([v.center for v in vortices])
    if len(centers) > 1:
        diff = centers[:, None, :] - centers[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(d, np.inf)
        _expect(float(d.min()) > 0.0, f"{path}.vortices",
                "vortex centers must be pairwise distinct")

    _expect(("epsilon" in raw) != ("epsilon_sweep" in raw), path,
            "give exactly one of 'epsilon' or 'epsilon_sweep'")
    if "epsilon" in raw:
        eps_list = [_number(raw["epsilon"], f"{path}.epsilon")]
    else:
        sweep = raw["epsilon_sweep"]
        _expect(isinstance(sweep, list) and sweep, f"{path}.epsilon_sweep",
                "must be a nonempty list")
        eps_list = [_number(e, f"{path}.epsilon_sweep[{i}]")
                    for i, e in enumerate(sweep)]
    for i, e in enumerate(eps_list):
        _expect(0.0 < e < 1.0, f"{path}.epsilon[{i}]", "must lie in (0, 1)")

    grid = _get(raw, "grid", path)
    _expect(isinstance(grid, dict), f"{path}.grid", "expected an object")
    h_over_eps = _number(_get(grid, "h_over_eps", f"{path}.grid"),
                         f"{path}.grid.h_over_eps")
    _expect(h_over_eps > 0.0, f"{path}.grid.h_over_eps", "must be positive")
    capture = _number(_get(grid, "mass_capture", f"{path}.grid"),
                      f"{path}.grid.mass_capture")
    _expect(0.0 < capture < 1.0, f"{path}.grid.mass_capture", "must lie in (0, 1)")

    sim = _get(raw, "sim", path)
    _expect(isinstance(sim, dict), f"{path}.sim", "expected an object")
    t_end = _number(_get(sim, "t_end", f"{path}.sim"), f"{path}.sim.t_end")
    _expect(t_end >= 0.0, f"{path}.sim.t_end", "must be nonnegative")
    if "dt" in sim:
        dt = _number(sim["dt"], f"{path}.sim.dt")
        _expect(dt > 0.0, f"{path}.sim.dt", "must be positive")
    else:
        from ..simulator import default_dt
        gmax = max(abs(v.gamma) for v in vortices)
        cfg_tmp = ScenarioConfig(name, tuple(vortices), tuple(eps_list),
                                 h_over_eps, capture, 1.0, t_end)
        dt = default_dt(cfg_tmp.min_separation(), gmax)
    method = sim.get("velocity_method", VelocityMethod.AUTO)
    _expect(method in (VelocityMethod.AUTO, VelocityMethod.DIRECT, VelocityMethod.TREE),
            f"{path}.sim.velocity_method", "must be auto, direct or tree")
    record_every = sim.get("record_every", 1)
    _expect(isinstance(record_every, int) and record_every >= 1,
            f"{path}.sim.record_every", "must be a positive integer")
    tree_raw = sim.get("tree", {})
    _expect(isinstance(tree_raw, dict), f"{path}.sim.tree", "expected an object")
    try:
        tree = TreecodeParams(
            opening_angle=float(tree_raw.get("opening_angle", 0.5)),
            max_leaf_size=int(tree_raw.get("max_leaf_size", 64)),
            expansion_order=int(tree_raw.get("expansion_order", 6)),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}.sim.tree", str(exc)) from exc

    diag_raw = _get(raw, "diagnostics", path, required=False, default={}) or {}
    _expect(isinstance(diag_raw, dict), f"{path}.diagnostics", "expected an object")

    def _tup(key: str) -> tuple[float, ...]:
        lst = diag_raw.get(key, [])
        _expect(isinstance(lst, list), f"{path}.diagnostics.{key}", "must be a list")
        return tuple(_number(v, f"{path}.diagnostics.{key}[{i}]")
                     for i, v in enumerate(lst))

    fractions = _tup("fractions") or (0.99,)
    for i, f in enumerate(fractions):
        _expect(0.0 < f <= 1.0, f"{path}.diagnostics.fractions[{i}]",
                "must lie in (0, 1]")
    diag = DiagnosticsConfig(
        mu_radii=_tup("mu_radii"),
        mu_radii_eps_pow=_tup("mu_radii_eps_pow"),
        ring_radii=_tup("ring_radii"),
        ring_radii_eps_pow=_tup("ring_radii_eps_pow"),
        fractions=fractions,
        a=_number(diag_raw.get("a", 0.45), f"{path}.diagnostics.a"),
        q=_number(diag_raw.get("q", 4.0), f"{path}.diagnostics.q"),
        c0=_number(diag_raw.get("c0", 0.1), f"{path}.diagnostics.c0"),
    )

    split_beta = None
    pert = raw.get("perturbation")
    if pert is not None:
        _expect(isinstance(pert, dict), f"{path}.perturbation", "expected an object")
        split_beta = _number(_get(pert, "split_beta", f"{path}.perturbation"),
                             f"{path}.perturbation.split_beta")
        _expect(0.0 < split_beta < 1.0, f"{path}.perturbation.split_beta",
                "must lie in (0, 1)")

    snapshot_every = raw.get("snapshot_every", 0)
    _expect(isinstance(snapshot_every, int) and snapshot_every >= 0,
            f"{path}.snapshot_every", "must be a nonnegative integer")

    return ScenarioConfig(
        name=name,
        vortices=tuple(vortices),
        epsilons=tuple(eps_list),
        h_over_eps=h_over_eps,
        mass_capture=capture,
        dt=dt,
        t_end=t_end,
        velocity_method=method,
        record_every=record_every,
        tree=tree,
        diagnostics=diag,
        split_beta=split_beta,
        snapshot_every=snapshot_every,
    )


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}, "
                                         f"column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)
