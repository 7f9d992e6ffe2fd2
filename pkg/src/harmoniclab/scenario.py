"""Scenario files: one TOML document describing a full lab run.

A scenario pins the domain, the target, the map construction (prescribed or
solved from boundary data), the solver settings, the analysis ladder and the
tolerances, plus an explicit RNG seed.  Parsing is strict and reports every
schema violation with its field path; geometry constraints (sigma-ladder vs
mesh size, ball clearance) are validated against the actually built mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .mesh import DomainTag, MeshDomain, build_mesh
from .targets import (EuclideanSpace, HyperbolicPlane, MetricTree, ProductSpace,
                      space_from_config)

__all__ = ["Scenario", "ScenarioError", "parse_scenario", "space_to_config",
           "builtin_scenario_path", "list_builtin_scenarios"]

_CHECK_NAMES = (
    "profiles", "order", "domain_variation", "target_variation",
    "cat1_target_variation", "energy_bound", "flux_energy", "mean_value",
    "bochner", "conformal_bound", "totally_geodesic", "lipschitz",
)

_DEFAULT_TOLERANCES = {
    "order": 0.05,
    "domain_variation": 0.05,
    "target_variation": 1e-3,
    "cat1_target_variation": 1e-2,
    "energy_bound": 0.05,
    "flux_energy": 0.05,
    "mean_value": 0.05,
    "bochner_factor": 1e-3,
    "bochner_pass_fraction": 0.95,
    "conformal": 0.05,
    "conformality_defect": 0.1,
    "totally_geodesic_factor": 2.0,
}


class ScenarioError(ValueError):
    """Scenario schema or geometry violations, all of them at once."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {e}" for e in self.errors))


def space_to_config(space) -> dict:
    if isinstance(space, EuclideanSpace):
        return {"kind": "euclidean", "dim": space.dim}
    if isinstance(space, MetricTree):
        return {"kind": "metric_tree",
                "edges": [[a, b, l] for (a, b), l in zip(space.edge_ends, space.edge_lengths)]}
    if isinstance(space, HyperbolicPlane):
        return {"kind": "hyperbolic_plane"}
    if isinstance(space, ProductSpace):
        return {"kind": "product", "factors": [space_to_config(f) for f in space.factors]}
    raise ValueError(f"unknown space type {type(space)!r}")


@dataclass
class Scenario:
    name: str
    seed: int
    domain_tag: DomainTag
    resolution: int
    target_config: dict
    map_config: dict
    solver_config: dict
    sigma_ladder: list[float]
    epsilon_factor: float
    basepoints: object           # "auto" or explicit list of vertex ids
    max_basepoints: int
    density_floor: float
    window: list | None          # [[x0, x1], [y0, y1]] chart window or None
    checks: list[str]
    bump_count: int
    bump_radius: list[float]
    bochner_sigma_factor: float
    geodesic_samples: int
    lipschitz_depth: float
    tolerances: dict
    output_dir: str | None

    def target_space(self):
        return space_from_config(self.target_config)

    def build_mesh(self) -> MeshDomain:
        return _cached_mesh(self.domain_tag, self.resolution)


@lru_cache(maxsize=16)
def _cached_mesh(tag: DomainTag, resolution: int) -> MeshDomain:
    return build_mesh(tag, resolution)


def _get(table, key, typ, errors, path, default=None, required=False):
    if key not in table:
        if required:
            errors.append(f"{path}.{key}: missing required field")
        return default
    val = table[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        errors.append(f"{path}.{key}: expected {getattr(typ, '__name__', typ)}, got {type(val).__name__}")
        return default
    return val


def _parse_target(table, errors, path="target") -> dict | None:
    kind = _get(table, "kind", str, errors, path, required=True)
    if kind is None:
        return None
    cfg = {"kind": kind}
    if kind == "euclidean":
        dim = _get(table, "dim", int, errors, path, required=True)
        cfg["dim"] = dim
    elif kind == "metric_tree":
        edges = _get(table, "edges", list, errors, path, required=True)
        cfg["edges"] = edges
    elif kind == "hyperbolic_plane":
        pass
    elif kind == "product":
        factors = _get(table, "factors", list, errors, path, required=True)
        if factors is not None:
            cfg["factors"] = [
                f for f in (_parse_target(t, errors, f"{path}.factors[{i}]")
                            for i, t in enumerate(factors)) if f]
    else:
        errors.append(f"{path}.kind: unknown target kind {kind!r}")
        return None
    try:
        space_from_config(cfg)
    except Exception as exc:
        errors.append(f"{path}: {exc}")
        return None
    return cfg


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario file; raises ScenarioError with the full
    list of violations if anything is off."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError([f"file not found: {path}"])
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError([f"TOML parse error: {exc}"]) from exc

    errors: list[str] = []
    meta = doc.get("scenario", {})
    name = _get(meta, "name", str, errors, "scenario", default=path.stem)
    seed = _get(meta, "seed", int, errors, "scenario", required=True, default=0)

    dom = doc.get("domain", {})
    if not dom:
        errors.append("domain: missing table")
    tag_name = _get(dom, "tag", str, errors, "domain", required=True)
    resolution = _get(dom, "resolution", int, errors, "domain", required=True, default=8)
    lengths = dom.get("lengths", [1.0, 1.0])
    radius = _get(dom, "radius", float, errors, "domain", default=1.0)
    domain_tag = None
    if tag_name is not None:
        try:
            domain_tag = DomainTag(tag_name, lengths=tuple(float(x) for x in lengths),
                                   radius=radius)
        except Exception as exc:
            errors.append(f"domain: {exc}")

    target_cfg = _parse_target(doc.get("target", {}), errors) if "target" in doc else None
    if "target" not in doc:
        errors.append("target: missing table")

    map_tbl = doc.get("map", {})
    map_kind = _get(map_tbl, "kind", str, errors, "map", required=True, default="solve")
    if map_kind not in (None, "solve", "prescribed"):
        errors.append(f"map.kind: must be 'solve' or 'prescribed', got {map_kind!r}")
    map_cfg = dict(map_tbl)

    sol = doc.get("solver", {})
    solver_cfg = {
        "max_sweeps": _get(sol, "max_sweeps", int, errors, "solver", default=20000),
        "energy_tol": _get(sol, "energy_tol", float, errors, "solver", default=1e-10),
        "move_tol": _get(sol, "move_tol", float, errors, "solver", default=1e-8),
        "sweep_mode": _get(sol, "sweep_mode", str, errors, "solver", default="jacobi"),
        "damping": _get(sol, "damping", float, errors, "solver", default=1.0),
    }
    if solver_cfg["sweep_mode"] not in ("jacobi", "gauss_seidel"):
        errors.append(f"solver.sweep_mode: unknown mode {solver_cfg['sweep_mode']!r}")
    for key in ("energy_tol", "move_tol"):
        if solver_cfg[key] is not None and solver_cfg[key] <= 0:
            errors.append(f"solver.{key}: must be positive")

    ana = doc.get("analysis", {})
    ladder = ana.get("sigma_ladder")
    if ladder is None and "sigma0" in ana:
        sigma0 = _get(ana, "sigma0", float, errors, "analysis", required=True)
        levels = _get(ana, "levels", int, errors, "analysis", default=4)
        ratio = _get(ana, "ratio", float, errors, "analysis", default=1.0 / math.sqrt(2.0))
        if sigma0 is not None:
            ladder = [sigma0 * ratio**i for i in range(levels)]
    if ladder is None:
        errors.append("analysis.sigma_ladder: missing (give sigma_ladder or sigma0/levels/ratio)")
        ladder = []
    else:
        try:
            ladder = [float(s) for s in ladder]
        except (TypeError, ValueError):
            errors.append("analysis.sigma_ladder: must be a list of numbers")
            ladder = []
    if any(s <= 0 for s in ladder):
        errors.append("analysis.sigma_ladder: entries must be positive")

    checks = ana.get("checks", list(_CHECK_NAMES))
    for c in checks:
        if c not in _CHECK_NAMES:
            errors.append(f"analysis.checks: unknown check {c!r} "
                          f"(valid: {', '.join(_CHECK_NAMES)})")

    tolerances = dict(_DEFAULT_TOLERANCES)
    for key, val in ana.get("tolerances", {}).items():
        if key not in tolerances:
            errors.append(f"analysis.tolerances.{key}: unknown tolerance name")
        elif not isinstance(val, (int, float)) or val <= 0:
            errors.append(f"analysis.tolerances.{key}: must be a positive number")
        else:
            tolerances[key] = float(val)

    window = ana.get("window")
    if window is not None:
        try:
            window = [[float(window[0][0]), float(window[0][1])],
                      [float(window[1][0]), float(window[1][1])]]
        except (TypeError, IndexError, ValueError):
            errors.append("analysis.window: expected [[x0, x1], [y0, y1]]")
            window = None

    basepoints = ana.get("basepoints", "auto")
    if basepoints != "auto" and not (isinstance(basepoints, list)
                                     and all(isinstance(b, int) for b in basepoints)):
        errors.append("analysis.basepoints: 'auto' or a list of vertex ids")
        basepoints = "auto"

    scenario = Scenario(
        name=name or path.stem,
        seed=seed or 0,
        domain_tag=domain_tag,
        resolution=resolution or 8,
        target_config=target_cfg or {},
        map_config=map_cfg,
        solver_config=solver_cfg,
        sigma_ladder=sorted(ladder),
        epsilon_factor=_get(ana, "epsilon_factor", float, errors, "analysis", default=4.0),
        basepoints=basepoints,
        max_basepoints=_get(ana, "max_basepoints", int, errors, "analysis", default=3),
        density_floor=_get(ana, "density_floor", float, errors, "analysis", default=1e-6),
        window=window,
        checks=list(checks),
        bump_count=_get(ana, "bump_count", int, errors, "analysis", default=50),
        bump_radius=[float(x) for x in ana.get("bump_radius", [0.08, 0.2])],
        bochner_sigma_factor=_get(ana, "bochner_sigma_factor", float, errors,
                                  "analysis", default=6.0),
        geodesic_samples=_get(ana, "geodesic_samples", int, errors, "analysis", default=100),
        lipschitz_depth=_get(ana, "lipschitz_depth", float, errors, "analysis", default=0.1),
        tolerances=tolerances,
        output_dir=doc.get("output", {}).get("directory"),
    )

    # geometry validation against the actual mesh
    if domain_tag is not None and not errors:
        try:
            mesh = scenario.build_mesh()
        except Exception as exc:
            errors.append(f"domain: mesh construction failed: {exc}")
        else:
            h = mesh.mesh_size
            for s in scenario.sigma_ladder:
                if s < 3.0 * h:
                    errors.append(
                        f"analysis.sigma_ladder: sigma={s:.4g} below 3h = {3 * h:.4g} "
                        f"at resolution {resolution}")
            if len(mesh.boundary_vertices):
                max_clear = float(mesh.boundary_clearance.max())
                for s in scenario.sigma_ladder:
                    if s + 2 * h >= max_clear:
                        errors.append(
                            f"analysis.sigma_ladder: sigma={s:.4g} leaves no vertex with "
                            f"ball clearance (max clearance {max_clear:.4g})")
            if scenario.map_config.get("kind", "solve") == "solve" and not len(mesh.boundary_vertices):
                bc = scenario.map_config.get("boundary")
                if bc not in (None, "none"):
                    errors.append("map.boundary: domain has no boundary vertices for Dirichlet data")

    # map/target compatibility
    if target_cfg and map_cfg:
        kind = map_cfg.get("kind", "solve")
        presc = map_cfg.get("prescription")
        if kind == "prescribed":
            if presc not in ("linear", "identity", "constant"):
                errors.append(f"map.prescription: unknown prescription {presc!r}")
            if presc == "linear" and target_cfg.get("kind") != "euclidean":
                errors.append("map.prescription: 'linear' needs a euclidean target")
            if presc == "identity":
                if not (domain_tag and domain_tag.kind == "hyperbolic_patch"
                        and target_cfg.get("kind") == "hyperbolic_plane"):
                    errors.append("map.prescription: 'identity' needs hyperbolic_patch "
                                  "domain and hyperbolic_plane target")
        else:
            bnd = map_cfg.get("boundary")
            if bnd not in ("affine", "three_arc_tripod", "identity", "constant"):
                errors.append(f"map.boundary: unknown boundary data {bnd!r}")
            if bnd == "three_arc_tripod" and target_cfg.get("kind") != "metric_tree":
                errors.append("map.boundary: 'three_arc_tripod' needs a metric_tree target")
            if bnd == "identity" and target_cfg.get("kind") != "hyperbolic_plane":
                errors.append("map.boundary: 'identity' needs a hyperbolic_plane target")

    if errors:
        raise ScenarioError(errors)
    return scenario


def builtin_scenario_path(name: str) -> Path:
    """Path of a bundled scenario file (without the .toml suffix)."""
    base = Path(__file__).parent / "scenarios"
    p = base / f"{name}.toml"
    if not p.exists():
        raise FileNotFoundError(
            f"no bundled scenario {name!r}; available: {', '.join(sorted(q.stem for q in base.glob('*.toml')))}")
    return p


def list_builtin_scenarios() -> list[str]:
    base = Path(__file__).parent / "scenarios"
    return sorted(p.stem for p in base.glob("*.toml"))
