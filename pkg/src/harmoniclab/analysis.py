"""Radial profiles, order function, weak Laplacians and inequality margins.

Every check here turns one of the variational or comparison inequalities for
energy-minimizing maps into a finite margin record: lhs, rhs, margin and a
pass flag at a stated tolerance.  Asymptotic statements are tested as fitted
trends over geometric sigma-ladders; nothing is asserted pointwise where the
underlying statement is only almost-everywhere or little-o.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureData
from .mesh import BallRegion, BallRegionError, MeshDomain, geodesic_ball_region
from .quadrature import unit_ball_volume
from .solver import (MapState, PullbackTensor, energy_density_field,
                     pullback_tensor_estimate)
from .targets import CAT_MINUS_1, frechet_mean

__all__ = [
    "RadialProfile",
    "InequalityMargin",
    "BochnerReport",
    "LadderFit",
    "ladder_fit",
    "radial_profiles",
    "order_function",
    "contract_tensors",
    "domain_variation_residuals",
    "target_variation_check",
    "cat1_target_variation_check",
    "energy_bound_check",
    "flux_energy_check",
    "mean_value_check",
    "weak_laplacian",
    "bochner_residual",
    "conformal_bound_check",
    "totally_geodesic_check",
    "sample_grid_geodesics",
    "lipschitz_constant_estimate",
    "eligible_vertices",
    "random_bump",
    "scalar_gradient",
    "local_pullback_fit",
    "fitted_density_field",
    "pointwise_residual_distribution",
    "basepoint_reference_experiment",
]


@dataclass(frozen=True)
class InequalityMargin:
    """One verified inequality: pass means margin >= -tolerance."""

    check: str
    basepoint: int | None
    sigma: float | None
    lhs: float
    rhs: float
    tolerance: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance


@dataclass(frozen=True)
class LadderFit:
    """Least-squares fit of y(sigma) = a + b sigma^2 over a sigma-ladder."""

    intercept: float
    slope: float
    se_intercept: float
    se_slope: float


def ladder_fit(sigmas, values) -> LadderFit:
    s = np.asarray(sigmas, dtype=float)
    y = np.asarray(values, dtype=float)
    X = np.stack([np.ones_like(s), s**2], axis=1)
    coef, res, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    dof = len(s) - 2
    if dof <= 0 or rank < 2:
        return LadderFit(float(coef[0]), float(coef[1]), math.inf, math.inf)
    resid = y - X @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return LadderFit(float(coef[0]), float(coef[1]),
                     math.sqrt(max(cov[0, 0], 0.0)), math.sqrt(max(cov[1, 1], 0.0)))


# ---------------------------------------------------------------------------
# local first-order estimators (face-stencil least squares)


def _stencil(mesh: MeshDomain, v: int):
    nbrs = mesh.face_neighbors(v)
    dx = mesh.log_map(v, nbrs)
    return nbrs, dx


def scalar_gradient(mesh: MeshDomain, values: np.ndarray, v: int) -> np.ndarray:
    """Gradient of a vertex field at v from difference quotients on the
    face stencil, projected to the chart basis at v."""
    nbrs, dx = _stencil(mesh, v)
    rhs = values[nbrs] - values[v]
    g, *_ = np.linalg.lstsq(dx, rhs, rcond=None)
    return g


def local_pullback_fit(mesh: MeshDomain, state: MapState, v: int) -> np.ndarray:
    """Edge-scale fit of the directional-stretch form at v:
    d^2(u(v), u(j)) ~ pi_ab dx^a dx^b over the face stencil."""
    nbrs, dx = _stencil(mesh, v)
    d2 = np.array([state.space.distance(state.values[v], state.values[j]) ** 2
                   for j in nbrs])
    rows = np.stack([dx[:, 0] ** 2, 2.0 * dx[:, 0] * dx[:, 1], dx[:, 1] ** 2], axis=1)
    sol, *_ = np.linalg.lstsq(rows, d2, rcond=None)
    return np.array([[sol[0], sol[1]], [sol[1], sol[2]]])


def fitted_density_field(mesh: MeshDomain, state: MapState) -> np.ndarray:
    """Per-vertex density tr(pi) from the edge-scale stretch fit.

    Unlike the lumped edge-energy shares, this is exact for affine and
    isometric maps on irregular meshes, so it is the density of choice for
    pointwise estimators (mean value, weak Laplacian) on the curved domains.
    """
    return np.array([max(float(np.trace(local_pullback_fit(mesh, state, v))), 0.0)
                     for v in range(mesh.vertex_count)])


def contract_tensors(curv: CurvatureData, pi: np.ndarray):
    """(Ric:pi, pi:pi, |grad u|^4) at the chart center."""
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (curv.dimension,) * 2:
        raise ValueError(f"tensor dimension mismatch: {pi.shape} vs n={curv.dimension}")
    ric_pi = float(np.sum(curv.ricci * pi))
    pi_pi = float(np.sum(pi * pi))
    dens_sq = float(np.trace(pi)) ** 2
    return ric_pi, pi_pi, dens_sq


# ---------------------------------------------------------------------------
# radial profiles


@dataclass
class RadialProfile:
    """E(sigma), I(sigma) and boundary flux around one basepoint."""

    basepoint: int
    sigmas: np.ndarray
    E: np.ndarray                 # int_{B} |grad u|^2 dmu
    I: np.ndarray                 # int_{bd B} d^2(u, Q) dSigma
    flux: np.ndarray              # int_{bd B} |du/dr|^2 dSigma
    radial_d2: np.ndarray         # int_{bd B} d/dr d^2(u, Q) dSigma
    shell_density: np.ndarray     # int_{bd B} tr(pi) dSigma
    Q: object
    density0: float               # edge-based |grad u|^2 at the basepoint
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        if np.any(self.E < -1e-12) or np.any(self.I < -1e-12) or np.any(self.flux < -1e-12):
            raise ValueError("profile entries must be nonnegative")
        if np.any(np.diff(self.E) < -1e-9 * max(1.0, float(self.E.max()))):
            raise ValueError("E(sigma) must be nondecreasing in sigma")


def radial_profiles(mesh: MeshDomain, state: MapState, basepoint: int,
                    sigmas, density: np.ndarray | None = None,
                    Q=None, layer_width: float | None = None) -> RadialProfile:
    """Sample E, I and flux on the given radii; under-resolved radii are
    skipped with a warning rather than failing the whole profile.

    The default shell width widens like sqrt(h * sigma), which suppresses the
    lattice fluctuation of thin annuli at an O(h/sigma) bias cost and keeps
    profile errors shrinking under mesh refinement at fixed sigma.
    """
    if density is None:
        density = energy_density_field(mesh, state).values
    if Q is None:
        Q = state.values[basepoint]
    d_to_Q = np.array([state.space.distance(p, Q) for p in state.values])

    h = mesh.mesh_size
    rows = []
    skipped = []
    pullback_cache: dict[int, np.ndarray] = {}
    for sigma in sorted(sigmas):
        lw = layer_width if layer_width is not None else max(h, 0.6 * math.sqrt(h * sigma))
        try:
            region = geodesic_ball_region(mesh, basepoint, float(sigma), layer_width=lw)
        except BallRegionError as exc:
            warnings.warn(f"sigma={sigma:.4g} skipped: {exc}", stacklevel=2)
            skipped.append(float(sigma))
            continue
        E = float(np.dot(region.interior_weights, density[region.ids]))
        I = float(np.dot(region.boundary_weights, d_to_Q[region.ids] ** 2))
        shell = np.flatnonzero(region.shell_mask)
        flux = 0.0
        shell_rho = 0.0
        rad_d2 = 0.0
        for k in shell:
            vtx = int(region.ids[k])
            if vtx not in pullback_cache:
                pullback_cache[vtx] = local_pullback_fit(mesh, state, vtx)
            pi_v = pullback_cache[vtx]
            xhat = region.radial_directions[k]
            bw = region.boundary_weights[k]
            flux += bw * max(float(xhat @ pi_v @ xhat), 0.0)
            shell_rho += bw * float(np.trace(pi_v))
            grad_d2 = scalar_gradient(mesh, d_to_Q**2, vtx)
            rad_d2 += bw * float(grad_d2 @ xhat)
        rows.append((float(sigma), E, I, flux, rad_d2, shell_rho))

    if not rows:
        raise BallRegionError("no resolvable sigma in the requested ladder")
    arr = np.array(rows)
    return RadialProfile(basepoint=basepoint, sigmas=arr[:, 0], E=arr[:, 1],
                         I=arr[:, 2], flux=arr[:, 3], radial_d2=arr[:, 4],
                         shell_density=arr[:, 5], Q=Q,
                         density0=float(density[basepoint]), skipped=skipped)


def order_function(profile: RadialProfile, curv: CurvatureData | None = None,
                   pullback0: np.ndarray | None = None):
    """Rows (sigma, sigma E/I, lower_bound) with the NPC bound
    1 + 2 Ric:pi sigma^2 / (3(n+2)|grad u|^2); entries with I=0 are flagged
    as NaN."""
    out = []
    n = 2
    for sigma, E, I in zip(profile.sigmas, profile.E, profile.I):
        if I <= 0:
            out.append((sigma, math.nan, math.nan))
            continue
        value = sigma * E / I
        bound = math.nan
        if curv is not None and pullback0 is not None and profile.density0 > 0:
            ric_pi, _, _ = contract_tensors(curv, pullback0)
            bound = 1.0 + 2.0 * ric_pi / (3.0 * (n + 2) * profile.density0) * sigma**2
        out.append((float(sigma), float(value), float(bound)))
    return out


# ---------------------------------------------------------------------------
# variation formulas


def domain_variation_residuals(mesh: MeshDomain, state: MapState, basepoint: int,
                               profile: RadialProfile, pullback0: np.ndarray,
                               tol: float = 0.05) -> tuple[list[InequalityMargin], InequalityMargin]:
    """Inner-variation identity margins over a sigma-ladder.

    lhs = (2-n) E(sigma) + sigma * int_{bd B} [|grad u|^2 - 2|du/dr|^2],
    rhs = omega_n (2 Ric:pi - S |grad u|^2)(x0) sigma^(n+2) / (3(n+2)),
    and the identity holds up to o(sigma^(n+2)), so the summary fit requires
    the intercept of |margin|/sigma^(n+2) = a + b sigma^2 to vanish within
    tol (plus 3 standard errors), relative to the density scale.
    """
    n = mesh.dimension
    curv = mesh.vertex_curvature(basepoint)
    ric_pi, _, _ = contract_tensors(curv, pullback0)
    rho0 = float(np.trace(pullback0))
    coeff = unit_ball_volume(n) * (2.0 * ric_pi - curv.scalar * rho0) / (3.0 * (n + 2))

    margins = []
    scaled = []
    for sigma, E, flux, shell_rho in zip(profile.sigmas, profile.E,
                                         profile.flux, profile.shell_density):
        lhs = (2 - n) * E + sigma * (shell_rho - 2.0 * flux)
        rhs = coeff * sigma ** (n + 2)
        margins.append(InequalityMargin("domain_variation", basepoint, float(sigma),
                                        lhs, rhs, tolerance=math.inf))
        scaled.append((lhs - rhs) / sigma ** (n + 2))
    scale = max(rho0, profile.density0, 1e-12)
    fit = ladder_fit(profile.sigmas, scaled)
    bound = tol * scale + 3.0 * fit.se_intercept
    summary = InequalityMargin("domain_variation_trend", basepoint, None,
                               lhs=bound, rhs=abs(fit.intercept), tolerance=0.0)
    return margins, summary


def random_bump(mesh: MeshDomain, rng: np.random.Generator,
                radius_range=(0.08, 0.2), allowed=None):
    """Nonnegative test bump supported strictly inside the domain.

    Returns (eta, center).  An optional boolean mask restricts admissible
    centers (and the support must stay within the mask's clearance)."""
    h = mesh.mesh_size
    lo, hi = radius_range
    radius = max(lo + (hi - lo) * rng.random(), 3.5 * h)
    depth = mesh.boundary_clearance
    ok = depth > radius + 2 * h
    if allowed is not None:
        ok &= np.asarray(allowed, dtype=bool)
    ok = np.flatnonzero(ok)
    if len(ok) == 0:
        raise ValueError("no admissible center for a bump of this radius")
    center = int(ok[rng.integers(len(ok))])
    rr = mesh.geodesic_distance(center)
    eta = np.maximum(1.0 - (rr / radius) ** 2, 0.0) ** 2
    eta[mesh.boundary] = 0.0
    return eta, center


def _laplacian_pairing(mesh: MeshDomain, eta: np.ndarray, f: np.ndarray) -> float:
    """int (Delta eta) f dmu through the weighted-graph summation by parts."""
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    return -float(np.dot(mesh.edge_weights, (eta[i] - eta[j]) * (f[i] - f[j])))


def target_variation_check(mesh: MeshDomain, state: MapState, Q,
                           eta: np.ndarray, tol_factor: float = 1e-3,
                           basepoint: int | None = None) -> InequalityMargin:
    """Weak form of (1/2) Lap d^2(u, Q) >= |grad u|^2:
    int (Delta eta) d^2 dmu >= 2 int eta |grad u|^2 dmu for nonneg bumps."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta[mesh.boundary] != 0.0):
        raise ValueError("test bump must vanish on the boundary")
    f = np.array([state.space.distance(p, Q) ** 2 for p in state.values])
    rho = energy_density_field(mesh, state).values
    lhs = _laplacian_pairing(mesh, eta, f)
    rhs = 2.0 * float(np.sum(eta * rho * mesh.measures))
    norm_eta = float(np.sum(np.abs(eta) * mesh.measures))
    return InequalityMargin("target_variation", basepoint, None, lhs, rhs,
                            tolerance=tol_factor * max(norm_eta, 1e-300))


def cat1_target_variation_check(mesh: MeshDomain, state: MapState, Q,
                                eta: np.ndarray, tol_factor: float = 1e-2,
                                basepoint: int | None = None) -> InequalityMargin:
    """CAT(-1) strengthening: the right side gains
    (d cosh d / sinh d - 1)(|grad u|^2 - |grad d(u,Q)|^2)."""
    if state.space.curvature_class != CAT_MINUS_1:
        raise ValueError("CAT(-1) target variation requires a CAT(-1) target")
    eta = np.asarray(eta, dtype=float)
    if np.any(eta[mesh.boundary] != 0.0):
        raise ValueError("test bump must vanish on the boundary")
    d = np.array([state.space.distance(p, Q) for p in state.values])
    rho = energy_density_field(mesh, state).values
    lhs = _laplacian_pairing(mesh, eta, d**2)

    support = np.flatnonzero(eta > 0)
    grad_d_sq = np.zeros(mesh.vertex_count)
    for v in support:
        grad_d_sq[v] = float(np.sum(scalar_gradient(mesh, d, v) ** 2))
    x = d[support]
    g = np.where(x > 1e-8, x * np.cosh(x) / np.maximum(np.sinh(x), 1e-300) - 1.0,
                 x**2 / 3.0)
    extra = np.zeros(mesh.vertex_count)
    extra[support] = g * (rho[support] - grad_d_sq[support])
    rhs = 2.0 * float(np.sum(eta * (rho + extra) * mesh.measures))
    norm_eta = float(np.sum(np.abs(eta) * mesh.measures))
    return InequalityMargin("cat1_target_variation", basepoint, None, lhs, rhs,
                            tolerance=tol_factor * max(norm_eta, 1e-300))


# ---------------------------------------------------------------------------
# energy-flux inequalities over the ladder


def energy_bound_check(profile: RadialProfile, pullback0: np.ndarray,
                       curvature_class: str, tol_rel: float = 0.05,
                       basepoint: int | None = None) -> list[InequalityMargin]:
    """E(sigma) <= [CAT(-1) factor] * sqrt(I(sigma) flux(sigma))."""
    pi_pi = float(np.sum(pullback0 * pullback0))
    rho0 = float(np.trace(pullback0))
    out = []
    n = 2
    for sigma, E, I, flux in zip(profile.sigmas, profile.E, profile.I, profile.flux):
        rhs = math.sqrt(max(I * flux, 0.0))
        if curvature_class == CAT_MINUS_1 and rho0 > 0:
            rhs *= 1.0 + (pi_pi - rho0**2) / (3.0 * (n + 2) * rho0) * sigma**2
        out.append(InequalityMargin("energy_bound", basepoint, float(sigma),
                                    lhs=rhs, rhs=E,
                                    tolerance=tol_rel * max(E, 1e-300)))
    return out


def flux_energy_check(profile: RadialProfile, curv: CurvatureData,
                      pullback0: np.ndarray, curvature_class: str,
                      tol_rel: float = 0.05,
                      basepoint: int | None = None) -> list[InequalityMargin]:
    """sigma * flux(sigma) >= (1 + A sigma^2) E(sigma) with the curvature-
    dependent coefficient A of the order-growth lemma."""
    ric_pi, pi_pi, dens_sq = contract_tensors(curv, pullback0)
    rho0 = float(np.trace(pullback0))
    n = 2
    if rho0 > 0:
        if curvature_class == CAT_MINUS_1:
            A = (2.0 * ric_pi + 3.0 * dens_sq - 3.0 * pi_pi) / (3.0 * (n + 2) * rho0)
        else:
            A = 2.0 * ric_pi / (3.0 * (n + 2) * rho0)
    else:
        A = 0.0
    out = []
    for sigma, E, flux in zip(profile.sigmas, profile.E, profile.flux):
        lhs = sigma * flux
        rhs = (1.0 + A * sigma**2) * E
        out.append(InequalityMargin("flux_energy", basepoint, float(sigma),
                                    lhs, rhs, tolerance=tol_rel * max(E, 1e-300)))
    return out


# ---------------------------------------------------------------------------
# mean value, weak Laplacian, Bochner


def weak_laplacian(mesh: MeshDomain, values: np.ndarray, basepoint: int,
                   sigma: float) -> float:
    """Ball-average Laplacian estimator
    Lap f ~ (2(n+2)/sigma^2)(avg_B f - f(x0))."""
    region = geodesic_ball_region(mesh, basepoint, sigma)
    n = mesh.dimension
    avg = float(np.dot(region.interior_weights, values[region.ids])
                / region.interior_weights.sum())
    return 2.0 * (n + 2) / sigma**2 * (avg - float(values[basepoint]))


def mean_value_check(mesh: MeshDomain, state: MapState, basepoint: int,
                     sigmas, curvature_class: str, epsilon: float,
                     tol_rel: float = 0.05,
                     density: np.ndarray | None = None) -> list[InequalityMargin]:
    """avg_B |grad u|^2 >= |grad u|^2(x0) + phi sigma^2 with
    phi = Ric:pi/(n+2) (NPC) or (Ric:pi + |grad u|^4 - pi:pi)/(n+2)."""
    if density is None:
        density = fitted_density_field(mesh, state)
    curv = mesh.vertex_curvature(basepoint)
    pi0 = pullback_tensor_estimate(mesh, state, basepoint, epsilon).matrix
    ric_pi, pi_pi, dens_sq = contract_tensors(curv, pi0)
    n = mesh.dimension
    if curvature_class == CAT_MINUS_1:
        phi = (ric_pi + dens_sq - pi_pi) / (n + 2)
    else:
        phi = ric_pi / (n + 2)
    rho0 = float(density[basepoint])
    scale = max(rho0, float(np.trace(pi0)), 1e-12)
    out = []
    for sigma in sigmas:
        region = geodesic_ball_region(mesh, basepoint, float(sigma))
        avg = float(np.dot(region.interior_weights, density[region.ids])
                    / region.interior_weights.sum())
        out.append(InequalityMargin("mean_value", basepoint, float(sigma),
                                    lhs=avg, rhs=rho0 + phi * sigma**2,
                                    tolerance=tol_rel * scale))
    return out


@dataclass
class BochnerReport:
    """Per-vertex ingredients and residuals of the differential inequality
    (1/2) Lap |grad u|^2 >= Ric:pi (+ |grad u|^4 - pi:pi for CAT(-1))."""

    vertices: np.ndarray
    density: np.ndarray
    ric_pi: np.ndarray
    pi_pi: np.ndarray
    dens_sq: np.ndarray
    lap_half: np.ndarray
    residual_npc: np.ndarray
    residual_cat1: np.ndarray
    sigma: float
    tolerance: float

    @property
    def pass_fraction_npc(self) -> float:
        if len(self.vertices) == 0:
            return math.nan
        return float(np.mean(self.residual_npc >= -self.tolerance))

    @property
    def pass_fraction_cat1(self) -> float:
        if len(self.vertices) == 0:
            return math.nan
        return float(np.mean(self.residual_cat1 >= -self.tolerance))


def eligible_vertices(mesh: MeshDomain, density: np.ndarray, sigma_max: float,
                      density_floor: float = 1e-6) -> np.ndarray:
    """Interior vertices with ball clearance and non-vanishing density
    (the discrete stand-in for the paper-level almost-every-point quantifier)."""
    clear = mesh.boundary_clearance > sigma_max + 2.0 * mesh.mesh_size
    dens = density >= density_floor * max(float(density.max()), 1e-300)
    return np.flatnonzero(clear & dens & ~mesh.boundary)


def bochner_residual(mesh: MeshDomain, state: MapState, sigma: float,
                     epsilon: float, tolerance: float,
                     vertices=None,
                     density: np.ndarray | None = None) -> BochnerReport:
    if density is None:
        density = fitted_density_field(mesh, state)
    if vertices is None:
        vertices = eligible_vertices(mesh, density, sigma)
    vertices = np.asarray(vertices, dtype=np.int64)
    curv = mesh.vertex_curvature()
    rows = np.zeros((len(vertices), 6))
    for k, v in enumerate(vertices):
        pi = pullback_tensor_estimate(mesh, state, int(v), epsilon).matrix
        ric_pi, pi_pi, dens_sq = contract_tensors(curv, pi)
        lap_half = 0.5 * weak_laplacian(mesh, density, int(v), sigma)
        rows[k] = (density[v], ric_pi, pi_pi, dens_sq, lap_half,
                   lap_half - ric_pi)
    residual_npc = rows[:, 5]
    residual_cat1 = residual_npc - rows[:, 3] + rows[:, 2]
    return BochnerReport(vertices=vertices, density=rows[:, 0], ric_pi=rows[:, 1],
                         pi_pi=rows[:, 2], dens_sq=rows[:, 3], lap_half=rows[:, 4],
                         residual_npc=residual_npc, residual_cat1=residual_cat1,
                         sigma=float(sigma), tolerance=float(tolerance))


# ---------------------------------------------------------------------------
# corollary checks


def conformal_bound_check(mesh: MeshDomain, state: MapState, epsilon: float,
                          tol: float = 0.05, conformality_tol: float = 0.1,
                          vertices=None):
    """Conformal-factor bound for hyperbolic domains and CAT(-1) targets:
    lambda <= 1/(n-1).  Returns (margin_or_None, conformality report)."""
    if mesh.tag.kind != "hyperbolic_patch":
        raise ValueError("conformal bound applies to hyperbolic domains")
    if state.space.curvature_class != CAT_MINUS_1:
        raise ValueError("conformal bound applies to CAT(-1) targets")
    density = energy_density_field(mesh, state).values
    if vertices is None:
        vertices = eligible_vertices(mesh, density, epsilon)
    lambdas = []
    defects = []
    for v in vertices:
        pi = pullback_tensor_estimate(mesh, state, int(v), epsilon).matrix
        tr = float(np.trace(pi))
        if tr <= 1e-12:
            lambdas.append(0.0)
            defects.append(0.0)
            continue
        evals = np.linalg.eigvalsh(pi)
        defects.append(max(abs(2.0 * pi[0, 1]) / tr, (evals[1] - evals[0]) / tr))
        lambdas.append(tr / 2.0)
    defects = np.array(defects)
    report = {
        "vertices_checked": int(len(vertices)),
        "max_conformality_defect": float(defects.max()) if len(defects) else math.nan,
        "conformality_tol": conformality_tol,
        "conformal": bool(len(defects) and defects.max() <= conformality_tol),
    }
    if not report["conformal"]:
        return None, report
    n = mesh.dimension
    margin = InequalityMargin("conformal_bound", None, None,
                              lhs=1.0 / (n - 1), rhs=float(np.max(lambdas)),
                              tolerance=tol)
    return margin, report


def sample_grid_geodesics(mesh: MeshDomain, rng: np.random.Generator,
                          count: int = 100, max_step: int | None = None):
    """Vertex-aligned geodesic triples (start, midpoint, end) on a flat grid,
    kept inside one fundamental window so chart coordinates never wrap."""
    if mesh.tag.kind not in ("flat_torus", "flat_square"):
        raise ValueError("grid geodesics need a flat grid domain")
    V = mesh.vertex_count
    k = int(round(math.sqrt(V)))
    if mesh.tag.kind == "flat_square":
        k -= 1
    nv = k if mesh.tag.kind == "flat_torus" else k + 1
    if max_step is None:
        max_step = max(1, k // 6)
    triples = []
    guard = 0
    while len(triples) < count:
        guard += 1
        if guard > 100 * count:
            raise RuntimeError("could not sample enough in-window geodesics")
        p = int(rng.integers(-max_step, max_step + 1))
        q = int(rng.integers(-max_step, max_step + 1))
        if p == 0 and q == 0:
            continue
        i = int(rng.integers(0, nv))
        j = int(rng.integers(0, nv))
        i2, j2 = i + 2 * p, j + 2 * q
        if not (0 <= i2 < nv and 0 <= j2 < nv):
            continue
        v0 = i * nv + j
        vm = (i + p) * nv + (j + q)
        v1 = i2 * nv + j2
        triples.append((v0, vm, v1))
    return triples


def totally_geodesic_check(mesh: MeshDomain, state: MapState, samples,
                           tol: float, basepoint: int | None = None) -> InequalityMargin:
    """Midpoint criterion along sampled domain geodesics: image distances
    must split evenly, d(u0, u1) = 2 d(u0, um) = 2 d(um, u1)."""
    space = state.space
    worst = 0.0
    for v0, vm, v1 in samples:
        d01 = space.distance(state.values[v0], state.values[v1])
        d0m = space.distance(state.values[v0], state.values[vm])
        dm1 = space.distance(state.values[vm], state.values[v1])
        worst = max(worst, abs(d01 - 2.0 * d0m), abs(d01 - 2.0 * dm1))
    return InequalityMargin("totally_geodesic", basepoint, None,
                            lhs=tol, rhs=worst, tolerance=0.0)


def lipschitz_constant_estimate(mesh: MeshDomain, state: MapState, r: float):
    """Largest image-stretch ratio d(u_i, u_j)/len_e over edges at depth >= r,
    reported with the sqrt(energy) comparison scale."""
    depth = mesh.boundary_clearance
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    keep = (depth[i] >= r) & (depth[j] >= r)
    if not np.any(keep):
        raise ValueError(f"no interior edges at depth {r}")
    from .solver import dirichlet_energy

    d = np.array([state.space.distance(state.values[a], state.values[b])
                  for a, b in zip(i[keep], j[keep])])
    ratio = float((d / mesh.edge_lengths[keep]).max())
    energy = dirichlet_energy(mesh, state)
    return ratio, math.sqrt(max(energy, 0.0))


# ---------------------------------------------------------------------------
# recorded experiments (no assertions; distributions for the reports)


def pointwise_residual_distribution(mesh: MeshDomain, state: MapState,
                                    basepoint: int, epsilon: float) -> np.ndarray:
    """Samples of [d^2(u(x), u(x0)) - pi_ab x^a x^b] / |x|^2 over the
    epsilon-ball: the measured second-order defect of the distance function."""
    pi0 = pullback_tensor_estimate(mesh, state, basepoint, epsilon).matrix
    region = geodesic_ball_region(mesh, basepoint, epsilon)
    keep = region.r > 1e-12
    x = region.chart[keep]
    d2 = np.array([state.space.distance(state.values[i], state.values[basepoint]) ** 2
                   for i in region.ids[keep]])
    quad = np.einsum("ki,ij,kj->k", x, pi0, x)
    return (d2 - quad) / region.r[keep] ** 2


def basepoint_reference_experiment(mesh: MeshDomain, state: MapState,
                                   basepoint: int, sigma: float):
    """I(sigma) with Q = u(x0) against Q = mean of the shell values: records
    how much the reference-point choice moves the boundary integral."""
    region = geodesic_ball_region(mesh, basepoint, sigma)
    shell_ids = region.ids[region.shell_mask]
    w = region.boundary_weights[region.shell_mask]
    pts = [state.values[i] for i in shell_ids]
    q_center = state.values[basepoint]
    q_mean = frechet_mean(state.space, pts, w)
    I_center = float(np.dot(w, [state.space.distance(p, q_center) ** 2 for p in pts]))
    I_mean = float(np.dot(w, [state.space.distance(p, q_mean) ** 2 for p in pts]))
    return {"I_at_map_value": I_center, "I_at_shell_mean": I_mean,
            "relative_shift": (I_center - I_mean) / max(I_center, 1e-300)}
