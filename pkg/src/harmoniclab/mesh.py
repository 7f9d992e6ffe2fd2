"""Triangulated model domains with intrinsic cotangent weights.

Four tags are supported: flat_torus, flat_square, round_sphere and
hyperbolic_patch (geodesic disk in curvature -1).  All edge lengths, face
areas and corner angles are intrinsic, so the same assembly path serves the
flat and the curved models; edge weights are the usual half-cotangent sums,
chosen so the edge energy sum reproduces the Dirichlet integral of affine
maps exactly on flat meshes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import Delaunay

from .curvature import CurvatureData, constant_curvature

__all__ = [
    "DomainTag",
    "MeshDomain",
    "BallRegion",
    "MeshConstructionError",
    "BallRegionError",
    "build_mesh",
    "geodesic_ball_region",
    "save_mesh_json",
    "load_mesh_json",
]

_MIN_ANGLE_DEG = 8.0


class MeshConstructionError(ValueError):
    pass


class BallRegionError(ValueError):
    pass


@dataclass(frozen=True)
class DomainTag:
    """Which model domain a mesh discretizes, with its shape parameters."""

    kind: str  # flat_torus | flat_square | round_sphere | hyperbolic_patch
    lengths: tuple[float, float] = (1.0, 1.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("flat_torus", "flat_square", "round_sphere", "hyperbolic_patch"):
            raise MeshConstructionError(f"unknown domain tag {self.kind!r}")
        if self.kind == "flat_torus" and (self.lengths[0] <= 0 or self.lengths[1] <= 0):
            raise MeshConstructionError("torus periods must be positive")
        if self.radius <= 0:
            raise MeshConstructionError("radius must be positive")

    @property
    def sectional(self) -> float:
        if self.kind == "round_sphere":
            return 1.0 / self.radius**2
        if self.kind == "hyperbolic_patch":
            return -1.0
        return 0.0

    def to_json(self) -> dict:
        return {"kind": self.kind, "lengths": list(self.lengths), "radius": self.radius}

    @classmethod
    def from_json(cls, rec: dict) -> "DomainTag":
        return cls(kind=rec["kind"], lengths=tuple(rec.get("lengths", (1.0, 1.0))),
                   radius=float(rec.get("radius", 1.0)))


# ---------------------------------------------------------------------------
# intrinsic geometry per tag

def _mink(p, q):
    # Minkowski pairing on the hyperboloid sheet, vectorized over rows of q
    return -p[..., 0] * q[..., 0] + p[..., 1] * q[..., 1] + p[..., 2] * q[..., 2]


def _tag_distance(tag: DomainTag, coords: np.ndarray, p_idx: int, q_idx) -> np.ndarray:
    p = coords[p_idx]
    q = coords[q_idx]
    if tag.kind in ("flat_square",):
        return np.linalg.norm(q - p, axis=-1)
    if tag.kind == "flat_torus":
        d = q - p
        L = np.asarray(tag.lengths)
        d = d - L * np.round(d / L)
        return np.linalg.norm(d, axis=-1)
    if tag.kind == "round_sphere":
        r = tag.radius
        c = np.clip(np.sum(p * q, axis=-1) / r**2, -1.0, 1.0)
        return r * np.arccos(c)
    # hyperbolic_patch: coords are hyperboloid points, curvature -1;
    # chordal form avoids acosh cancellation at short edges
    dvec = q - p
    m2 = np.maximum(_mink(dvec, dvec), 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(m2))


def _sphere_tangent_basis(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([0.0, 0.0, 1.0]) if abs(p[2]) < 0.9 * np.linalg.norm(p) else np.array([1.0, 0.0, 0.0])
    phat = p / np.linalg.norm(p)
    e1 = a - (a @ phat) * phat
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(phat, e1)
    return e1, e2


def _hyperboloid_tangent_basis(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    basis = []
    for a in (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])):
        v = a + _mink(p, a) * p
        for b in basis:
            v = v - _mink(b, v) * b
        nrm = math.sqrt(max(_mink(v, v), 1e-300))
        basis.append(v / nrm)
    return basis[0], basis[1]


def _tag_log_map(tag: DomainTag, coords: np.ndarray, p_idx: int, q_idx) -> np.ndarray:
    """Normal coordinates of vertices q_idx in the chart centered at p_idx."""
    p = coords[p_idx]
    q = coords[q_idx]
    if tag.kind == "flat_square":
        return q - p
    if tag.kind == "flat_torus":
        d = q - p
        L = np.asarray(tag.lengths)
        return d - L * np.round(d / L)
    if tag.kind == "round_sphere":
        r = tag.radius
        phat = p / r
        qhat = q / r
        c = np.clip(qhat @ phat, -1.0, 1.0)
        theta = np.arccos(c)  # geodesic distance / r
        perp = qhat - c[..., None] * phat
        nrm = np.linalg.norm(perp, axis=-1)
        safe = np.maximum(nrm, 1e-300)
        dirs = perp / safe[..., None]
        e1, e2 = _sphere_tangent_basis(p)
        x = (r * theta) * (dirs @ e1)
        y = (r * theta) * (dirs @ e2)
        out = np.stack([x, y], axis=-1)
        out[nrm < 1e-14] = 0.0
        return out
    # hyperboloid
    c = np.maximum(-_mink(p, q), 1.0)
    d = np.arccosh(c)
    u = q - c[..., None] * p  # tangential component before normalization
    nrm = np.sqrt(np.maximum(_mink(u, u), 1e-300))
    dirs = u / nrm[..., None]
    e1, e2 = _hyperboloid_tangent_basis(p)
    x = d * _mink(dirs, e1)
    y = d * _mink(dirs, e2)
    out = np.stack([x, y], axis=-1)
    out[d < 1e-14] = 0.0
    return out


def _corner_angles(tag_kind: str, a: float, b: float, c: float) -> tuple[float, float, float]:
    """Angles opposite the sides (a, b, c) of an intrinsic triangle."""

    def _clamp(x):
        return min(1.0, max(-1.0, x))

    if tag_kind == "round_sphere_intrinsic":
        # spherical law of cosines on the unit sphere (lengths pre-scaled)
        ca, cb, cc = math.cos(a), math.cos(b), math.cos(c)
        sa, sb, sc = math.sin(a), math.sin(b), math.sin(c)
        alpha = math.acos(_clamp((ca - cb * cc) / max(sb * sc, 1e-300)))
        beta = math.acos(_clamp((cb - ca * cc) / max(sa * sc, 1e-300)))
        gamma = math.acos(_clamp((cc - ca * cb) / max(sa * sb, 1e-300)))
        return alpha, beta, gamma
    if tag_kind == "hyperbolic_intrinsic":
        cha, chb, chc = math.cosh(a), math.cosh(b), math.cosh(c)
        sha, shb, shc = math.sinh(a), math.sinh(b), math.sinh(c)
        alpha = math.acos(_clamp((chb * chc - cha) / max(shb * shc, 1e-300)))
        beta = math.acos(_clamp((cha * chc - chb) / max(sha * shc, 1e-300)))
        gamma = math.acos(_clamp((cha * chb - chc) / max(sha * shb, 1e-300)))
        return alpha, beta, gamma
    # Euclidean
    alpha = math.acos(_clamp((b * b + c * c - a * a) / max(2 * b * c, 1e-300)))
    beta = math.acos(_clamp((a * a + c * c - b * b) / max(2 * a * c, 1e-300)))
    gamma = math.acos(_clamp((a * a + b * b - c * c) / max(2 * a * b, 1e-300)))
    return alpha, beta, gamma


@dataclass
class MeshDomain:
    """Weighted triangulated domain with per-vertex measure and chart data."""

    tag: DomainTag
    coords: np.ndarray            # (V, 2) flat tags, (V, 3) sphere / hyperboloid
    faces: np.ndarray             # (F, 3) vertex indices
    edges: np.ndarray             # (E, 2) vertex indices, i < j
    edge_weights: np.ndarray      # (E,) cotangent weights, > 0
    edge_lengths: np.ndarray      # (E,) intrinsic lengths
    measures: np.ndarray          # (V,) lumped vertex measures
    boundary: np.ndarray          # (V,) bool

    @property
    def vertex_count(self) -> int:
        return self.coords.shape[0]

    @property
    def dimension(self) -> int:
        return 2

    @property
    def mesh_size(self) -> float:
        return float(self.edge_lengths.max())

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def vertex_curvature(self, v: int | None = None) -> CurvatureData:
        return constant_curvature(2, self.tag.sectional)

    @cached_property
    def adjacency(self):
        """CSR neighbor structure (indptr, indices, weights, lengths)."""
        V = self.vertex_count
        deg = np.zeros(V, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        indptr = np.zeros(V + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        weights = np.empty(indptr[-1])
        lengths = np.empty(indptr[-1])
        cursor = indptr[:-1].copy()
        for (i, j), w, l in zip(self.edges, self.edge_weights, self.edge_lengths):
            indices[cursor[i]] = j
            weights[cursor[i]] = w
            lengths[cursor[i]] = l
            cursor[i] += 1
            indices[cursor[j]] = i
            weights[cursor[j]] = w
            lengths[cursor[j]] = l
            cursor[j] += 1
        return indptr, indices, weights, lengths

    def neighbors(self, v: int):
        indptr, indices, weights, lengths = self.adjacency
        sl = slice(indptr[v], indptr[v + 1])
        return indices[sl], weights[sl], lengths[sl]

    @cached_property
    def face_adjacency(self):
        """CSR of all face-sharing vertex pairs (geometric stencil; includes
        pairs whose cotangent weight vanished and was dropped from edges)."""
        pairs = set()
        for i, j, k in self.faces:
            pairs.update(((min(i, j), max(i, j)), (min(j, k), max(j, k)),
                          (min(i, k), max(i, k))))
        V = self.vertex_count
        deg = np.zeros(V, dtype=np.int64)
        for i, j in pairs:
            deg[i] += 1
            deg[j] += 1
        indptr = np.zeros(V + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        cursor = indptr[:-1].copy()
        for i, j in sorted(pairs):
            indices[cursor[i]] = j
            cursor[i] += 1
            indices[cursor[j]] = i
            cursor[j] += 1
        return indptr, indices

    def face_neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.face_adjacency
        return indices[indptr[v]:indptr[v + 1]]

    def geodesic_distance(self, center: int, ids=None) -> np.ndarray:
        if ids is None:
            ids = np.arange(self.vertex_count)
        return _tag_distance(self.tag, self.coords, center, ids)

    def log_map(self, center: int, ids=None) -> np.ndarray:
        if ids is None:
            ids = np.arange(self.vertex_count)
        return _tag_log_map(self.tag, self.coords, center, ids)

    @cached_property
    def boundary_clearance(self) -> np.ndarray:
        """Geodesic distance from every vertex to the boundary vertex set."""
        if len(self.boundary_vertices) == 0:
            return np.full(self.vertex_count, np.inf)
        out = np.full(self.vertex_count, np.inf)
        for b in self.boundary_vertices:
            out = np.minimum(out, self.geodesic_distance(b))
        return out


# ---------------------------------------------------------------------------
# assembly

def _assemble(tag: DomainTag, coords: np.ndarray, faces: np.ndarray,
              boundary: np.ndarray) -> MeshDomain:
    faces = np.asarray(faces, dtype=np.int64)
    edge_map: dict[tuple[int, int], int] = {}
    edge_list: list[tuple[int, int]] = []

    def edge_id(i, j):
        key = (min(i, j), max(i, j))
        if key not in edge_map:
            edge_map[key] = len(edge_list)
            edge_list.append(key)
        return edge_map[key]

    F = len(faces)
    face_edge = np.empty((F, 3), dtype=np.int64)
    for f, (i, j, k) in enumerate(faces):
        face_edge[f] = (edge_id(j, k), edge_id(i, k), edge_id(i, j))

    edges = np.array(edge_list, dtype=np.int64)
    lengths = _tag_distance(tag, coords, edges[:, 0], edges[:, 1])
    if np.any(lengths <= 0):
        raise MeshConstructionError("duplicate vertices produce zero-length edges")

    if tag.kind == "round_sphere":
        angle_kind, scale = "round_sphere_intrinsic", tag.radius
    elif tag.kind == "hyperbolic_patch":
        angle_kind, scale = "hyperbolic_intrinsic", 1.0
    else:
        angle_kind, scale = "flat", 1.0

    cot_sum = np.zeros(len(edges))
    measures = np.zeros(coords.shape[0])
    min_angle = math.inf
    for f in range(F):
        e_a, e_b, e_c = face_edge[f]
        a, b, c = lengths[e_a] / scale, lengths[e_b] / scale, lengths[e_c] / scale
        alpha, beta, gamma = _corner_angles(angle_kind, a, b, c)
        min_angle = min(min_angle, alpha, beta, gamma)
        cot_sum[e_a] += 1.0 / math.tan(alpha)
        cot_sum[e_b] += 1.0 / math.tan(beta)
        cot_sum[e_c] += 1.0 / math.tan(gamma)
        if angle_kind == "round_sphere_intrinsic":
            area = scale**2 * (alpha + beta + gamma - math.pi)
        elif angle_kind == "hyperbolic_intrinsic":
            area = math.pi - (alpha + beta + gamma)
        else:
            s = 0.5 * (a + b + c)
            area = math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
        if area <= 0:
            raise MeshConstructionError(f"degenerate face {faces[f]} with area {area:.3g}")
        measures[faces[f]] += area / 3.0

    if math.degrees(min_angle) < _MIN_ANGLE_DEG:
        raise MeshConstructionError(
            f"triangle quality too low: min angle {math.degrees(min_angle):.2f} deg")

    weights = 0.5 * cot_sum
    keep = weights > 1e-12
    if np.any(weights < -1e-9):
        raise MeshConstructionError("negative cotangent weight; mesh not intrinsically Delaunay")

    return MeshDomain(tag=tag, coords=coords, faces=faces,
                      edges=edges[keep], edge_weights=weights[keep],
                      edge_lengths=lengths[keep],
                      measures=measures, boundary=boundary)


def _grid_faces(k1: int, k2: int, wrap: bool):
    """Right-triangle split of a k1 x k2 grid of cells."""
    nv1 = k1 if wrap else k1 + 1
    nv2 = k2 if wrap else k2 + 1

    def vid(i, j):
        return (i % nv1) * nv2 + (j % nv2) if wrap else i * nv2 + j

    faces = []
    for i in range(k1):
        for j in range(k2):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
    return np.array(faces, dtype=np.int64), nv1, nv2


def _build_flat_torus(tag: DomainTag, resolution: int) -> MeshDomain:
    L1, L2 = tag.lengths
    faces, nv1, nv2 = _grid_faces(resolution, resolution, wrap=True)
    a1, a2 = L1 / resolution, L2 / resolution
    ii, jj = np.meshgrid(np.arange(nv1), np.arange(nv2), indexing="ij")
    coords = np.stack([ii.ravel() * a1, jj.ravel() * a2], axis=1).astype(float)
    boundary = np.zeros(len(coords), dtype=bool)
    return _assemble(tag, coords, faces, boundary)


def _build_flat_square(tag: DomainTag, resolution: int) -> MeshDomain:
    faces, nv1, nv2 = _grid_faces(resolution, resolution, wrap=False)
    a = 1.0 / resolution
    ii, jj = np.meshgrid(np.arange(nv1), np.arange(nv2), indexing="ij")
    coords = np.stack([ii.ravel() * a, jj.ravel() * a], axis=1).astype(float)
    boundary = ((ii.ravel() == 0) | (ii.ravel() == resolution)
                | (jj.ravel() == 0) | (jj.ravel() == resolution))
    return _assemble(tag, coords, faces, boundary)


def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = []
    for a, b in [(1, phi), (-1, phi), (1, -phi), (-1, -phi)]:
        verts += [(0, a, b), (a, b, 0), (b, 0, a)]
    verts = np.array(verts, dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    # faces by proximity: each vertex pair at minimal distance shares an edge
    from itertools import combinations

    d2 = np.sum((verts[:, None] - verts[None]) ** 2, axis=-1)
    thresh = np.sort(np.unique(np.round(d2, 9)))[1] * 1.01
    faces = []
    for i, j, k in combinations(range(12), 3):
        if d2[i, j] < thresh and d2[j, k] < thresh and d2[i, k] < thresh:
            faces.append((i, j, k))
    return verts, np.array(faces, dtype=np.int64)


def _build_round_sphere(tag: DomainTag, resolution: int) -> MeshDomain:
    verts, faces = _icosahedron()
    for _ in range(resolution):
        midpoint: dict[tuple[int, int], int] = {}
        vlist = [tuple(v) for v in verts]

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                m /= np.linalg.norm(m)
                midpoint[key] = len(vlist)
                vlist.append(tuple(m))
            return midpoint[key]

        new_faces = []
        for i, j, k in faces:
            a, b, c = mid(i, j), mid(j, k), mid(i, k)
            new_faces += [(i, a, c), (a, j, b), (c, b, k), (a, b, c)]
        verts = np.array(vlist, dtype=float)
        verts /= np.linalg.norm(verts, axis=1, keepdims=True)
        faces = np.array(new_faces, dtype=np.int64)
    coords = tag.radius * verts
    boundary = np.zeros(len(coords), dtype=bool)
    return _assemble(tag, coords, faces, boundary)


def _build_hyperbolic_patch(tag: DomainTag, resolution: int) -> MeshDomain:
    """Delaunay triangulation of a polar grid in the Poincare disk."""
    R = tag.radius
    m = resolution
    ds = R / m
    pts2d = [(0.0, 0.0)]
    rings = [0]
    for j in range(1, m + 1):
        r = R * j / m
        nj = max(8, int(round(2.0 * math.pi * math.sinh(r) / ds)))
        rho = math.tanh(r / 2.0)
        offs = 0.5 * (j % 2)
        for l in range(nj):
            th = 2.0 * math.pi * (l + offs) / nj
            pts2d.append((rho * math.cos(th), rho * math.sin(th)))
        rings.append(nj)
    pts2d = np.array(pts2d)
    tri = Delaunay(pts2d)
    faces = tri.simplices.astype(np.int64)

    # hyperboloid lift of the Poincare points
    rho = np.linalg.norm(pts2d, axis=1)
    denom = 1.0 - rho**2
    x0 = (1.0 + rho**2) / denom
    x12 = 2.0 * pts2d / denom[:, None]
    coords = np.column_stack([x0, x12])

    nb = rings[-1]
    boundary = np.zeros(len(coords), dtype=bool)
    boundary[len(coords) - nb:] = True
    return _assemble(tag, coords, faces, boundary)


def build_mesh(tag: DomainTag, resolution: int) -> MeshDomain:
    """Construct the mesh for a model domain at the requested resolution.

    Resolution means: cells per period/side (flat tags), icosahedral
    subdivision level (sphere), radial rings (hyperbolic patch).
    """
    minimal = {"flat_torus": 8, "flat_square": 8, "round_sphere": 2, "hyperbolic_patch": 4}
    if resolution < minimal[tag.kind]:
        raise MeshConstructionError(
            f"resolution {resolution} below minimum {minimal[tag.kind]} for {tag.kind}")
    builder = {
        "flat_torus": _build_flat_torus,
        "flat_square": _build_flat_square,
        "round_sphere": _build_round_sphere,
        "hyperbolic_patch": _build_hyperbolic_patch,
    }[tag.kind]
    return builder(tag, resolution)


# ---------------------------------------------------------------------------
# geodesic ball regions

@dataclass(frozen=True)
class BallRegion:
    """Discrete geodesic ball: mollified interior weights plus a boundary shell.

    The indicator of the ball is mollified over one mesh layer with a C^1
    quadratic ramp; boundary weights carry the triangular kernel that is
    exactly the sigma-derivative of the interior ramp, so shell sums
    approximate surface integrals consistently with the ball sums.
    """

    center: int
    radius: float
    layer_width: float
    ids: np.ndarray               # vertices with r < radius + layer/2
    chart: np.ndarray             # (k, 2) normal coordinates about center
    r: np.ndarray                 # (k,) geodesic distances
    interior_weights: np.ndarray  # (k,) ramped measure weights
    shell_mask: np.ndarray        # (k,) bool
    boundary_weights: np.ndarray  # (k,) measure/width on the shell, else 0
    radial_directions: np.ndarray  # (k, 2) unit chart directions, 0 at center

    @property
    def interior_sum(self) -> float:
        return float(self.interior_weights.sum())

    @property
    def boundary_sum(self) -> float:
        return float(self.boundary_weights.sum())

    def shell_ids(self) -> np.ndarray:
        return self.ids[self.shell_mask]


def geodesic_ball_region(mesh: MeshDomain, center: int, sigma: float,
                         layer_width: float | None = None) -> BallRegion:
    """Integration weights for B_sigma(center) and its boundary sphere."""
    h = mesh.mesh_size
    if layer_width is None:
        layer_width = h
    if sigma < 3.0 * h:
        raise BallRegionError(f"sigma={sigma:.4g} under-resolved: needs sigma >= 3h = {3 * h:.4g}")
    clearance = mesh.boundary_clearance[center]
    if sigma + layer_width >= clearance:
        raise BallRegionError(
            f"ball of radius {sigma:.4g} at vertex {center} reaches the boundary "
            f"(clearance {clearance:.4g})")

    rr = mesh.geodesic_distance(center)
    delta = layer_width
    outer = sigma + delta
    inner = sigma - delta
    ids = np.flatnonzero(rr < outer)
    r = rr[ids]
    chart = mesh.log_map(center, ids)

    u = (r - sigma) / delta  # in (-inf, 1); ramp active on |u| < 1
    ramp = np.where(u <= -1.0, 1.0,
                    np.where(u <= 0.0, 1.0 - 0.5 * (1.0 + u) ** 2, 0.5 * (1.0 - u) ** 2))
    interior_weights = mesh.measures[ids] * ramp
    shell_mask = np.abs(u) < 1.0
    kernel = np.where(shell_mask, (1.0 - np.abs(u)) / delta, 0.0)
    boundary_weights = mesh.measures[ids] * kernel
    if not np.any(shell_mask):
        raise BallRegionError(f"empty boundary shell at sigma={sigma:.4g}")

    radial = np.zeros_like(chart)
    np.divide(chart, r[:, None], out=radial, where=r[:, None] > 1e-14)
    return BallRegion(center=center, radius=float(sigma), layer_width=float(layer_width),
                      ids=ids, chart=chart, r=r,
                      interior_weights=interior_weights, shell_mask=shell_mask,
                      boundary_weights=boundary_weights, radial_directions=radial)


# ---------------------------------------------------------------------------
# JSON interchange

def save_mesh_json(mesh: MeshDomain, path) -> None:
    rec = {
        "vertices": [
            {"xyz": mesh.coords[v].tolist(), "measure": float(mesh.measures[v]),
             "boundary": bool(mesh.boundary[v])}
            for v in range(mesh.vertex_count)
        ],
        "edges": [
            {"i": int(i), "j": int(j), "w": float(w), "len": float(l)}
            for (i, j), w, l in zip(mesh.edges, mesh.edge_weights, mesh.edge_lengths)
        ],
        "faces": mesh.faces.tolist(),
        "tag": mesh.tag.to_json(),
    }
    with open(path, "w") as fh:
        json.dump(rec, fh)


def load_mesh_json(path) -> MeshDomain:
    with open(path) as fh:
        rec = json.load(fh)
    tag = DomainTag.from_json(rec["tag"])
    coords = np.array([v["xyz"] for v in rec["vertices"]], dtype=float)
    measures = np.array([v["measure"] for v in rec["vertices"]], dtype=float)
    boundary = np.array([v["boundary"] for v in rec["vertices"]], dtype=bool)
    edges = np.array([[e["i"], e["j"]] for e in rec["edges"]], dtype=np.int64)
    weights = np.array([e["w"] for e in rec["edges"]], dtype=float)
    lengths = np.array([e["len"] for e in rec["edges"]], dtype=float)
    faces = np.array(rec["faces"], dtype=np.int64)
    return MeshDomain(tag=tag, coords=coords, faces=faces, edges=edges,
                      edge_weights=weights, edge_lengths=lengths,
                      measures=measures, boundary=boundary)
