"""Discrete energy-minimizing maps from a mesh into a metric target.

The local move is always a weighted Frechet mean of neighbor values, which
for NPC targets never increases the edge energy sum.  Gauss-Seidel sweeps
relax vertices one at a time through the exact per-space mean; Jacobi sweeps
update every free vertex from an immutable snapshot through vectorized
per-space codecs (Euclidean arrays, star-tree ray/offset pairs, hyperboloid
triples), which is what makes the curved scenarios affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import MeshDomain, geodesic_ball_region
from .quadrature import unit_ball_volume
from .targets import (EuclideanSpace, FrechetConfig, HyperbolicPlane, MetricTree,
                      TreePoint, frechet_mean)

__all__ = [
    "MapState",
    "SolverConfig",
    "ConvergenceLog",
    "PullbackTensor",
    "EnergyDensityField",
    "dirichlet_energy",
    "relax_vertex",
    "solve_harmonic",
    "pullback_tensor_estimate",
    "energy_density",
    "energy_density_field",
]


@dataclass
class MapState:
    """Vertex-indexed assignment of target points."""

    space: object
    values: list
    fixed: np.ndarray  # True where the value is pinned (Dirichlet data)
    boundary_condition: str = "dirichlet"  # or "periodic" / "free"

    def __post_init__(self):
        self.values = [self.space.canonicalize(p) for p in self.values]
        self.fixed = np.asarray(self.fixed, dtype=bool)
        if len(self.values) != len(self.fixed):
            raise ValueError("values and fixed mask must have equal length")

    @classmethod
    def dirichlet(cls, mesh: MeshDomain, space, values):
        return cls(space=space, values=values, fixed=mesh.boundary.copy(),
                   boundary_condition="dirichlet")

    @classmethod
    def free(cls, space, values):
        return cls(space=space, values=values,
                   fixed=np.zeros(len(values), dtype=bool),
                   boundary_condition="periodic")

    def copy(self) -> "MapState":
        return MapState(space=self.space, values=list(self.values),
                        fixed=self.fixed.copy(),
                        boundary_condition=self.boundary_condition)

    def to_json(self) -> dict:
        from .scenario import space_to_config

        return {
            "space": space_to_config(self.space),
            "boundary_condition": self.boundary_condition,
            "fixed": [int(v) for v in np.flatnonzero(self.fixed)],
            "values": {str(i): self.space.encode_point(p) for i, p in enumerate(self.values)},
        }

    @classmethod
    def from_json(cls, rec: dict) -> "MapState":
        from .scenario import space_from_config

        space = space_from_config(rec["space"])
        n = len(rec["values"])
        values = [space.decode_point(rec["values"][str(i)]) for i in range(n)]
        fixed = np.zeros(n, dtype=bool)
        fixed[rec.get("fixed", [])] = True
        return cls(space=space, values=values, fixed=fixed,
                   boundary_condition=rec.get("boundary_condition", "dirichlet"))


@dataclass(frozen=True)
class SolverConfig:
    max_sweeps: int = 20000
    energy_tol: float = 1e-10   # relative energy decrease per sweep
    move_tol: float = 1e-9      # max vertex displacement per sweep
    sweep_mode: str = "gauss_seidel"  # or "jacobi"
    damping: float = 1.0

    def __post_init__(self):
        if self.energy_tol <= 0 or self.move_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")
        if self.sweep_mode not in ("gauss_seidel", "jacobi"):
            raise ValueError(f"unknown sweep mode {self.sweep_mode!r}")


@dataclass
class ConvergenceLog:
    sweeps: list = field(default_factory=list)  # (sweep, energy, max_move)
    converged: bool = False

    @property
    def final_energy(self) -> float:
        return self.sweeps[-1][1] if self.sweeps else math.nan

    def rows(self):
        return [(int(s), float(e), float(m)) for s, e, m in self.sweeps]


# ---------------------------------------------------------------------------
# per-space codecs for vectorized sweeps


class _EuclideanCodec:
    def __init__(self, space):
        self.space = space

    def encode(self, values):
        return np.array(values, dtype=float)

    def decode(self, state):
        return [row.copy() for row in state]

    def edge_d2(self, state, i, j):
        return np.sum((state[i] - state[j]) ** 2, axis=-1)

    def move_dist(self, old, new):
        return np.linalg.norm(new - old, axis=-1)

    def jacobi(self, state, nbr_idx, nbr_w, free, damping):
        wsum = nbr_w.sum(axis=1)
        mean = np.einsum("vd,vdk->vk", nbr_w, state[nbr_idx]) / wsum[:, None]
        new = state.copy()
        new[free] = (1 - damping) * state[free] + damping * mean[free]
        return new


class _HyperboloidCodec:
    def __init__(self, space):
        self.space = space

    def encode(self, values):
        return np.array(values, dtype=float)

    def decode(self, state):
        return [self.space.canonicalize(row) for row in state]

    @staticmethod
    def _mink(p, q):
        return -p[..., 0] * q[..., 0] + p[..., 1] * q[..., 1] + p[..., 2] * q[..., 2]

    def _dist(self, p, q):
        dvec = p - q
        m2 = np.maximum(self._mink(dvec, dvec), 0.0)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(m2))

    def edge_d2(self, state, i, j):
        return self._dist(state[i], state[j]) ** 2

    def move_dist(self, old, new):
        return self._dist(old, new)

    def jacobi(self, state, nbr_idx, nbr_w, free, damping):
        mu = state  # (V, 3)
        P = state[nbr_idx]  # (V, D, 3)
        c = np.maximum(-self._mink(mu[:, None, :], P), 1.0)
        d = np.arccosh(c)
        u = P - c[..., None] * mu[:, None, :]
        nrm2 = np.maximum(c**2 - 1.0, 0.0)
        factor = np.where(nrm2 > 1e-24, d / np.sqrt(np.maximum(nrm2, 1e-300)), 1.0)
        logs = factor[..., None] * u
        wsum = nbr_w.sum(axis=1)
        v = np.einsum("vd,vdk->vk", nbr_w, logs) / wsum[:, None]
        step = damping * v
        s = np.sqrt(np.maximum(self._mink(step, step), 0.0))
        small = s < 1e-14
        coef = np.where(small, 1.0, np.sinh(np.maximum(s, 1e-300)) / np.maximum(s, 1e-300))
        new = np.cosh(s)[:, None] * mu + coef[:, None] * step
        new[:, 0] = np.sqrt(1.0 + new[:, 1] ** 2 + new[:, 2] ** 2)
        out = state.copy()
        out[free] = new[free]
        return out


class _StarTreeCodec:
    """Trees whose edges all meet a common center: state is (ray, offset)."""

    def __init__(self, space: MetricTree):
        self.space = space
        self.center = space.star_center
        self.ray_len = np.array(space.edge_lengths)

    def encode(self, values):
        rays = np.empty(len(values), dtype=np.int64)
        offs = np.empty(len(values))
        for i, p in enumerate(values):
            e, t = p
            a, b = self.space.edge_ends[e]
            if a == self.center:
                rays[i], offs[i] = e, t
            else:
                rays[i], offs[i] = e, self.space.edge_lengths[e] - t
        return rays, offs

    def decode(self, state):
        rays, offs = state
        out = []
        for e, o in zip(rays, offs):
            a, b = self.space.edge_ends[e]
            t = o if a == self.center else self.space.edge_lengths[e] - o
            out.append(self.space.canonicalize(TreePoint(int(e), float(t))))
        return out

    @staticmethod
    def _dist(r1, o1, r2, o2):
        return np.where(r1 == r2, np.abs(o1 - o2), o1 + o2)

    def edge_d2(self, state, i, j):
        rays, offs = state
        return self._dist(rays[i], offs[i], rays[j], offs[j]) ** 2

    def move_dist(self, old, new):
        return self._dist(old[0], old[1], new[0], new[1])

    def jacobi(self, state, nbr_idx, nbr_w, free, damping):
        rays, offs = state
        nr = rays[nbr_idx]  # (V, D)
        no = offs[nbr_idx]
        W = nbr_w.sum(axis=1)
        best_val = np.full(len(rays), np.inf)
        best_ray = rays.copy()
        best_off = np.zeros(len(rays))
        const = (nbr_w * no**2).sum(axis=1)
        for c in range(len(self.ray_len)):
            same = nr == c
            s_same = (nbr_w * no * same).sum(axis=1)
            s_cross = (nbr_w * no * ~same).sum(axis=1)
            t = np.clip((s_same - s_cross) / W, 0.0, self.ray_len[c])
            val = W * t**2 - 2.0 * t * (s_same - s_cross) + const
            better = val < best_val - 1e-15
            best_val = np.where(better, val, best_val)
            best_ray = np.where(better, c, best_ray)
            best_off = np.where(better, t, best_off)
        # damped geodesic move from the current point toward the local mean;
        # a ray change walks through the center
        same = rays == best_ray
        lerp = offs + damping * (best_off - offs)
        total = offs + best_off
        s = damping * total
        cross_ray = np.where(s <= offs, rays, best_ray)
        cross_off = np.where(s <= offs, offs - s, s - offs)
        new_ray = np.where(same, rays, cross_ray)
        new_off = np.where(same, lerp, cross_off)
        out_ray, out_off = rays.copy(), offs.copy()
        out_ray[free] = new_ray[free]
        out_off[free] = np.maximum(new_off[free], 0.0)
        return out_ray, out_off


class _GenericCodec:
    """Fallback for spaces without an array representation."""

    def __init__(self, space):
        self.space = space

    def encode(self, values):
        return list(values)

    def decode(self, state):
        return list(state)

    def edge_d2(self, state, i, j):
        return np.array([self.space.distance(state[a], state[b]) ** 2
                         for a, b in zip(i, j)])

    def move_dist(self, old, new):
        return np.array([self.space.distance(a, b) for a, b in zip(old, new)])

    def jacobi(self, state, nbr_idx, nbr_w, free, damping):
        new = list(state)
        for v in np.flatnonzero(free):
            mask = nbr_w[v] > 0
            pts = [state[j] for j in nbr_idx[v][mask]]
            mean = frechet_mean(self.space, pts, nbr_w[v][mask])
            new[v] = self.space.interpolate(state[v], mean, damping)
        return new


def _codec_for(space):
    if isinstance(space, EuclideanSpace):
        return _EuclideanCodec(space)
    if isinstance(space, HyperbolicPlane):
        return _HyperboloidCodec(space)
    if isinstance(space, MetricTree) and space.star_center is not None:
        return _StarTreeCodec(space)
    return _GenericCodec(space)


def _padded_adjacency(mesh: MeshDomain):
    indptr, indices, weights, _ = mesh.adjacency
    V = mesh.vertex_count
    deg = np.diff(indptr)
    D = int(deg.max())
    nbr_idx = np.zeros((V, D), dtype=np.int64)
    nbr_w = np.zeros((V, D))
    for v in range(V):
        sl = slice(indptr[v], indptr[v + 1])
        k = indptr[v + 1] - indptr[v]
        nbr_idx[v, :k] = indices[sl]
        nbr_w[v, :k] = weights[sl]
    return nbr_idx, nbr_w


# ---------------------------------------------------------------------------
# energy and relaxation


def dirichlet_energy(mesh: MeshDomain, state: MapState) -> float:
    """Total edge energy sum_e w_e d^2(u_i, u_j)."""
    codec = _codec_for(state.space)
    enc = codec.encode(state.values)
    d2 = codec.edge_d2(enc, mesh.edges[:, 0], mesh.edges[:, 1])
    return float(np.dot(mesh.edge_weights, d2))


def relax_vertex(mesh: MeshDomain, state: MapState, v: int):
    """Energy-optimal replacement for u(v): the weighted mean of its neighbors."""
    nbrs, w, _ = mesh.neighbors(v)
    pts = [state.values[j] for j in nbrs]
    return frechet_mean(state.space, pts, w)


def solve_harmonic(mesh: MeshDomain, initial: MapState,
                   config: SolverConfig = SolverConfig()):
    """Minimize the edge energy by sweeping Frechet-mean relaxations.

    Returns (final MapState, ConvergenceLog).  Convergence means both the
    relative energy decrease and the largest vertex move of the last sweep
    fell below their thresholds; exceeding max_sweeps leaves the flag False.
    """
    codec = _codec_for(initial.space)
    state = initial.copy()
    free = ~state.fixed
    if not np.any(free):
        log = ConvergenceLog(converged=True)
        log.sweeps.append((0, dirichlet_energy(mesh, state), 0.0))
        return state, log

    nbr_idx, nbr_w = _padded_adjacency(mesh)
    enc = codec.encode(state.values)
    energy = float(np.dot(mesh.edge_weights,
                          codec.edge_d2(enc, mesh.edges[:, 0], mesh.edges[:, 1])))
    log = ConvergenceLog()
    log.sweeps.append((0, energy, math.nan))

    free_ids = np.flatnonzero(free)
    for sweep in range(1, config.max_sweeps + 1):
        if config.sweep_mode == "jacobi":
            new_enc = codec.jacobi(enc, nbr_idx, nbr_w, free, config.damping)
        else:
            values = codec.decode(enc)
            for v in free_ids:
                mask = nbr_w[v] > 0
                pts = [values[j] for j in nbr_idx[v][mask]]
                mean = frechet_mean(state.space, pts, nbr_w[v][mask])
                values[v] = (mean if config.damping == 1.0
                             else state.space.interpolate(values[v], mean, config.damping))
            new_enc = codec.encode(values)

        moves = codec.move_dist(enc, new_enc)
        max_move = float(np.max(moves[free])) if len(free_ids) else 0.0
        new_energy = float(np.dot(mesh.edge_weights,
                                  codec.edge_d2(new_enc, mesh.edges[:, 0], mesh.edges[:, 1])))
        if new_energy > energy + 1e-12 * max(1.0, abs(energy)):
            raise RuntimeError(
                f"energy increased in sweep {sweep}: {energy} -> {new_energy}")
        rel_drop = (energy - new_energy) / max(energy, 1e-300)
        enc, energy = new_enc, new_energy
        log.sweeps.append((sweep, energy, max_move))
        if rel_drop < config.energy_tol and max_move < config.move_tol:
            log.converged = True
            break

    state.values = codec.decode(enc)
    return state, log


# ---------------------------------------------------------------------------
# pull-back tensor and energy density


@dataclass(frozen=True)
class PullbackTensor:
    """Least-squares fit of d^2(u(x), u(v))/|x|^2 over directions x/|x|."""

    vertex: int
    matrix: np.ndarray
    epsilon: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))
        evals = np.linalg.eigvalsh(self.matrix)
        scale = max(1.0, float(abs(evals).max()))
        if evals.min() < -1e-8 * scale:
            raise ValueError(f"pull-back tensor not PSD within slack: eigenvalues {evals}")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def pullback_tensor_estimate(mesh: MeshDomain, state: MapState, v: int,
                             epsilon: float) -> PullbackTensor:
    """Fit the 2x2 directional-stretch form from distances on the eps-sphere."""
    region = geodesic_ball_region(mesh, v, epsilon)
    shell = region.shell_mask
    ids = region.ids[shell]
    if len(ids) < 4:
        raise ValueError(f"only {len(ids)} shell samples around vertex {v}")
    dirs = region.radial_directions[shell]
    radii = region.r[shell]
    d = np.array([state.space.distance(state.values[i], state.values[v]) for i in ids])
    rows = np.stack([dirs[:, 0] ** 2, 2.0 * dirs[:, 0] * dirs[:, 1], dirs[:, 1] ** 2], axis=1)
    if np.linalg.matrix_rank(rows, tol=1e-8) < 3:
        raise ValueError(f"rank-deficient direction set around vertex {v}")
    sol, *_ = np.linalg.lstsq(rows, d**2 / radii**2, rcond=None)
    m = np.array([[sol[0], sol[1]], [sol[1], sol[2]]])
    # project onto the PSD cone: the true stretch form is PSD, and near
    # mapped singularities the raw least-squares fit can dip indefinite
    evals, evecs = np.linalg.eigh(m)
    m = (evecs * np.maximum(evals, 0.0)) @ evecs.T
    return PullbackTensor(vertex=v, matrix=m, epsilon=float(epsilon))


def energy_density(mesh: MeshDomain, state: MapState, v: int, epsilon: float) -> float:
    """Ball-averaged density (n+2)/(omega_n eps^(n+2)) * int_B d^2(u, u(v)) dmu."""
    region = geodesic_ball_region(mesh, v, epsilon)
    n = mesh.dimension
    d2 = np.array([state.space.distance(state.values[i], state.values[v]) ** 2
                   for i in region.ids])
    integral = float(np.dot(region.interior_weights, d2))
    return (n + 2) / (unit_ball_volume(n) * epsilon ** (n + 2)) * integral


@dataclass(frozen=True)
class EnergyDensityField:
    """Per-vertex |grad u|^2 from the edge energy shares."""

    values: np.ndarray

    def __post_init__(self):
        if np.any(self.values < -1e-12):
            raise ValueError("energy density must be nonnegative")


def energy_density_field(mesh: MeshDomain, state: MapState) -> EnergyDensityField:
    """rho_v = sum_{e at v} w_e d^2(u_v, u_j) / (2 mu_v); sums back to the energy."""
    codec = _codec_for(state.space)
    enc = codec.encode(state.values)
    d2 = codec.edge_d2(enc, mesh.edges[:, 0], mesh.edges[:, 1])
    acc = np.zeros(mesh.vertex_count)
    contrib = mesh.edge_weights * d2
    np.add.at(acc, mesh.edges[:, 0], contrib)
    np.add.at(acc, mesh.edges[:, 1], contrib)
    return EnergyDensityField(values=acc / (2.0 * mesh.measures))
