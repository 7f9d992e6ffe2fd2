"""Scenario execution: build the pipeline, run the checks, collect results.

Deterministic by construction: a single seeded generator drives every random
choice, basepoints and bump centers are selected in fixed vertex order, and
per-basepoint checks reduce in basepoint order even when run on a thread
pool.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from .mesh import MeshDomain
from .scenario import Scenario
from .solver import (ConvergenceLog, MapState, SolverConfig, dirichlet_energy,
                     energy_density_field, pullback_tensor_estimate, solve_harmonic)
from .targets import CAT_MINUS_1, HyperbolicPlane, TreePoint, frechet_mean

__all__ = ["RunResult", "run_scenario", "build_map"]


@dataclass
class RunResult:
    scenario: Scenario
    mesh: MeshDomain
    state: MapState
    converged: bool
    energy: float
    wall_time: float
    margins: list = field(default_factory=list)          # InequalityMargin records
    profile_rows: list = field(default_factory=list)     # (bp, sigma, E, I, flux, order, bound)
    bochner_report: an.BochnerReport | None = None
    convergence_log: ConvergenceLog | None = None
    extras: dict = field(default_factory=dict)
    manifest: list = field(default_factory=list)

    @property
    def pass_fractions(self) -> dict:
        out: dict[str, list] = {}
        for m in self.margins:
            out.setdefault(m.check, []).append(m.passed)
        fractions = {k: float(np.mean(v)) for k, v in sorted(out.items())}
        if self.bochner_report is not None:
            key = ("bochner_cat1" if self.extras.get("curvature_class") == CAT_MINUS_1
                   else "bochner_npc")
            frac = (self.bochner_report.pass_fraction_cat1
                    if key == "bochner_cat1" else self.bochner_report.pass_fraction_npc)
            fractions[key] = frac
        return fractions

    @property
    def all_passed(self) -> bool:
        ok = all(m.passed for m in self.margins)
        if self.bochner_report is not None:
            thresh = self.scenario.tolerances["bochner_pass_fraction"]
            if self.extras.get("curvature_class") == CAT_MINUS_1:
                ok &= self.bochner_report.pass_fraction_cat1 >= thresh
            else:
                ok &= self.bochner_report.pass_fraction_npc >= thresh
        return ok


# ---------------------------------------------------------------------------
# map construction


def _square_arc_parameter(x: float, y: float) -> float:
    # boundary arc length of the unit square, counterclockwise from (0, 0)
    if y == 0.0:
        return x
    if x == 1.0:
        return 1.0 + y
    if y == 1.0:
        return 3.0 - x
    return 4.0 - y


def _tripod_boundary_values(mesh: MeshDomain, tree, vertex_ids):
    """Three boundary arcs onto the first three rays, offset peaking at 1 at
    each arc midpoint and returning to the center at the transitions."""
    center = tree.vertex_point(tree.star_center)
    vals = []
    for v in vertex_ids:
        s = _square_arc_parameter(*mesh.coords[v])
        arc = min(int(s // (4.0 / 3.0)), 2)
        loc = (s - arc * (4.0 / 3.0)) / (4.0 / 3.0)
        offset = 1.0 - abs(2.0 * loc - 1.0)
        if offset <= 1e-12:
            vals.append(center)
        else:
            a, _ = tree.edge_ends[arc]
            t = offset if a == tree.star_center else tree.edge_lengths[arc] - offset
            vals.append(tree.canonicalize(TreePoint(arc, t)))
    return vals


def _boundary_values(scenario: Scenario, mesh: MeshDomain, space):
    kind = scenario.map_config.get("boundary")
    ids = mesh.boundary_vertices
    if kind == "affine":
        A = np.asarray(scenario.map_config["matrix"], dtype=float)
        b = np.asarray(scenario.map_config.get("offset", np.zeros(A.shape[0])), dtype=float)
        return [A @ mesh.coords[v] + b for v in ids]
    if kind == "three_arc_tripod":
        if mesh.tag.kind != "flat_square":
            raise ValueError("three_arc_tripod boundary data needs the flat_square domain")
        if space.star_center is None or len(space.edge_ends) < 3:
            raise ValueError("three_arc_tripod needs a star tree with at least 3 rays")
        return _tripod_boundary_values(mesh, space, ids)
    if kind == "identity":
        return [space.canonicalize(mesh.coords[v]) for v in ids]
    if kind == "constant":
        p = space.decode_point(scenario.map_config["point"])
        return [p for _ in ids]
    raise ValueError(f"unknown boundary data {kind!r}")


def build_map(scenario: Scenario, mesh: MeshDomain, space):
    """Prescribed map or Dirichlet solve; returns (state, log_or_None)."""
    cfg = scenario.map_config
    if cfg.get("kind", "solve") == "prescribed":
        presc = cfg["prescription"]
        if presc == "linear":
            A = np.asarray(cfg["matrix"], dtype=float)
            b = np.asarray(cfg.get("offset", np.zeros(A.shape[0])), dtype=float)
            values = [A @ c + b for c in mesh.coords]
        elif presc == "identity":
            values = [space.canonicalize(c) for c in mesh.coords]
        elif presc == "constant":
            p = space.decode_point(cfg["point"])
            values = [p for _ in range(mesh.vertex_count)]
        else:
            raise ValueError(f"unknown prescription {presc!r}")
        return MapState.free(space, values), None

    bvals = _boundary_values(scenario, mesh, space)
    # deterministic low-energy start: every free vertex at the mean of the
    # boundary values
    start = frechet_mean(space, bvals, np.ones(len(bvals)))
    values = [None] * mesh.vertex_count
    for v, val in zip(mesh.boundary_vertices, bvals):
        values[v] = val
    for v in range(mesh.vertex_count):
        if values[v] is None:
            values[v] = start
    state = MapState.dirichlet(mesh, space, values)
    config = SolverConfig(**scenario.solver_config)
    return solve_harmonic(mesh, state, config)


# ---------------------------------------------------------------------------
# basepoint selection


def _window_mask(scenario: Scenario, mesh: MeshDomain) -> np.ndarray:
    if scenario.window is None:
        return np.ones(mesh.vertex_count, dtype=bool)
    (x0, x1), (y0, y1) = scenario.window
    c = mesh.coords
    if c.shape[1] != 2:
        warnings.warn("analysis.window ignored on embedded domains", stacklevel=2)
        return np.ones(mesh.vertex_count, dtype=bool)
    return (c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & (c[:, 1] <= y1)


def _select_basepoints(scenario: Scenario, mesh: MeshDomain,
                       density: np.ndarray) -> list[int]:
    if scenario.basepoints != "auto":
        return [int(b) for b in scenario.basepoints]
    sigma_max = max(scenario.sigma_ladder)
    window = _window_mask(scenario, mesh)
    floor = scenario.density_floor * max(float(density[window].max()), 1e-300)
    ok = np.zeros(mesh.vertex_count, dtype=bool)
    ok[an.eligible_vertices(mesh, density, sigma_max, scenario.density_floor)] = True
    ok &= window & (density >= floor)
    ids = np.flatnonzero(ok)
    if len(ids) == 0:
        raise ValueError("no eligible basepoint: ladder too wide or window too tight")
    if len(ids) <= scenario.max_basepoints:
        return [int(v) for v in ids]
    picks = np.linspace(0, len(ids) - 1, scenario.max_basepoints).round().astype(int)
    return [int(ids[p]) for p in picks]


# ---------------------------------------------------------------------------
# scenario execution


def run_scenario(scenario: Scenario, checks=None, threads: int = 1) -> RunResult:
    t_start = time.perf_counter()
    rng = np.random.default_rng(scenario.seed)
    mesh = scenario.build_mesh()
    space = scenario.target_space()
    checks = list(checks) if checks is not None else list(scenario.checks)

    state, log = build_map(scenario, mesh, space)
    converged = log.converged if log is not None else True
    energy = dirichlet_energy(mesh, state)

    curvature_class = space.curvature_class
    curv = mesh.vertex_curvature()
    h = mesh.mesh_size
    eps = scenario.epsilon_factor * h
    tol = scenario.tolerances

    density_edge = energy_density_field(mesh, state).values
    density_fit = an.fitted_density_field(mesh, state)
    window = _window_mask(scenario, mesh)

    result = RunResult(scenario=scenario, mesh=mesh, state=state, converged=converged,
                       energy=energy, wall_time=0.0, convergence_log=log,
                       extras={"curvature_class": curvature_class})

    margins = result.margins
    radial_checks = [c for c in ("profiles", "order", "domain_variation",
                                 "energy_bound", "flux_energy", "mean_value")
                     if c in checks]
    basepoints: list[int] = []
    if radial_checks:
        basepoints = _select_basepoints(scenario, mesh, density_fit)
        result.extras["basepoints"] = basepoints

        def run_basepoint(bp: int):
            rows, local = [], []
            prof = an.radial_profiles(mesh, state, bp, scenario.sigma_ladder,
                                      density=density_edge)
            pi0 = pullback_tensor_estimate(mesh, state, bp, eps).matrix
            order_rows = an.order_function(prof, curv, pi0)
            for (sigma, val, bound), E, I, flux in zip(order_rows, prof.E, prof.I, prof.flux):
                rows.append((bp, sigma, E, I, flux, val, bound))
            if "order" in checks:
                vals = [v for _, v, _ in order_rows if not math.isnan(v)]
                sigs = [s for s, v, _ in order_rows if not math.isnan(v)]
                if len(vals) >= 3:
                    fit = an.ladder_fit(sigs, vals)
                    bound = tol["order"] + 3.0 * fit.se_intercept
                    local.append(an.InequalityMargin("order_limit", bp, None,
                                                     lhs=bound, rhs=abs(fit.intercept - 1.0),
                                                     tolerance=0.0))
            if "domain_variation" in checks:
                per_sigma, summary = an.domain_variation_residuals(
                    mesh, state, bp, prof, pi0, tol=tol["domain_variation"])
                local.extend(per_sigma)
                local.append(summary)
            if "energy_bound" in checks:
                local.extend(an.energy_bound_check(prof, pi0, curvature_class,
                                                   tol_rel=tol["energy_bound"], basepoint=bp))
            if "flux_energy" in checks:
                local.extend(an.flux_energy_check(prof, curv, pi0, curvature_class,
                                                  tol_rel=tol["flux_energy"], basepoint=bp))
            if "mean_value" in checks:
                local.extend(an.mean_value_check(mesh, state, bp, scenario.sigma_ladder,
                                                 curvature_class, eps,
                                                 tol_rel=tol["mean_value"],
                                                 density=density_fit))
            return rows, local

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outputs = list(pool.map(run_basepoint, basepoints))
        else:
            outputs = [run_basepoint(bp) for bp in basepoints]
        for rows, local in outputs:  # deterministic reduction in basepoint order
            result.profile_rows.extend(rows)
            margins.extend(local)

    if "target_variation" in checks:
        for _ in range(scenario.bump_count):
            eta, center = an.random_bump(mesh, rng, tuple(scenario.bump_radius),
                                         allowed=window)
            margins.append(an.target_variation_check(
                mesh, state, state.values[center], eta,
                tol_factor=tol["target_variation"], basepoint=center))

    if "cat1_target_variation" in checks and curvature_class == CAT_MINUS_1:
        for _ in range(scenario.bump_count):
            eta, center = an.random_bump(mesh, rng, tuple(scenario.bump_radius),
                                         allowed=window)
            margins.append(an.cat1_target_variation_check(
                mesh, state, state.values[center], eta,
                tol_factor=tol["cat1_target_variation"], basepoint=center))

    if "bochner" in checks:
        sigma_b = scenario.bochner_sigma_factor * h
        verts = an.eligible_vertices(mesh, density_fit, sigma_b, scenario.density_floor)
        verts = verts[window[verts]]
        if len(verts):
            tol_b = tol["bochner_factor"] * max(float(density_fit[verts].max()), 1e-300)
            result.bochner_report = an.bochner_residual(
                mesh, state, sigma=sigma_b, epsilon=eps, tolerance=tol_b,
                vertices=verts, density=density_fit)

    if "conformal_bound" in checks and mesh.tag.kind == "hyperbolic_patch" \
            and curvature_class == CAT_MINUS_1:
        margin, report = an.conformal_bound_check(
            mesh, state, eps, tol=tol["conformal"],
            conformality_tol=tol["conformality_defect"])
        result.extras["conformality"] = report
        if margin is not None:
            margins.append(margin)

    if "totally_geodesic" in checks and mesh.tag.kind in ("flat_torus", "flat_square"):
        samples = an.sample_grid_geodesics(mesh, rng, count=scenario.geodesic_samples)
        margins.append(an.totally_geodesic_check(
            mesh, state, samples, tol=tol["totally_geodesic_factor"] * h))

    if "lipschitz" in checks:
        try:
            ratio, sqrt_energy = an.lipschitz_constant_estimate(
                mesh, state, scenario.lipschitz_depth)
            result.extras["lipschitz"] = {"max_stretch": ratio,
                                          "sqrt_energy": sqrt_energy}
        except ValueError as exc:
            warnings.warn(f"lipschitz estimate skipped: {exc}", stacklevel=2)

    if basepoints:
        bp0 = basepoints[0]
        result.extras["pointwise_defect"] = {
            "basepoint": bp0,
            "max_abs_e_over_r2": float(np.abs(
                an.pointwise_residual_distribution(mesh, state, bp0, eps)).max()),
        }
        result.extras["reference_point_shift"] = an.basepoint_reference_experiment(
            mesh, state, bp0, max(scenario.sigma_ladder))

    result.wall_time = time.perf_counter() - t_start
    return result
