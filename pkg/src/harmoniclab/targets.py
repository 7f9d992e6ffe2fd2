"""Metric-space arithmetic for the target side.

Supported targets: Euclidean space, finite metric trees, the hyperbolic
plane (hyperboloid model, for numerical stability near coincident points)
and finite products.  Every space provides distance, constant-speed geodesic
interpolation and weighted Frechet means; module-level helpers verify the
NPC / CAT(-1) comparison inequalities by planting triangles in the plane or
in the hyperbolic plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "EuclideanSpace",
    "MetricTree",
    "HyperbolicPlane",
    "ProductSpace",
    "TreePoint",
    "GeodesicSegment",
    "FrechetConfig",
    "FrechetDivergence",
    "ComparisonResult",
    "check_npc_comparison",
    "check_cat1_comparison",
    "frechet_mean",
    "frechet_objective",
    "make_tripod",
    "space_from_config",
    "random_point",
]

_VERTEX_SNAP = 1e-12

NPC = "NPC"
CAT_MINUS_1 = "CAT_MINUS_1"


class TreePoint(NamedTuple):
    """Point on a metric tree: an edge index and an offset from its first end."""

    edge: int
    t: float


@dataclass(frozen=True)
class GeodesicSegment:
    """Geodesic between two points, parameterized at constant speed on [0, 1]."""

    space: "object"
    p: object
    q: object
    length: float

    def point_at(self, t: float):
        return self.space.interpolate(self.p, self.q, t)


@dataclass(frozen=True)
class FrechetConfig:
    tol: float = 1e-10
    max_iters: int = 500
    damping: float = 0.5

    def __post_init__(self):
        if self.tol <= 0 or not (0 < self.damping <= 1):
            raise ValueError("tolerances must be positive and damping in (0, 1]")


class FrechetDivergence(RuntimeError):
    """Mean iteration failed to converge; carries the best iterate found."""

    def __init__(self, message, best_point, residual):
        super().__init__(message)
        self.best_point = best_point
        self.residual = residual


# ---------------------------------------------------------------------------
# Euclidean


class EuclideanSpace:
    curvature_class = NPC
    kind = "euclidean"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("euclidean dimension must be >= 1")
        self.dim = dim

    def __eq__(self, other):
        return isinstance(other, EuclideanSpace) and other.dim == self.dim

    def __hash__(self):
        return hash(("euclidean", self.dim))

    def canonicalize(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"point of wrong shape {p.shape} for R^{self.dim}")
        return p

    def distance(self, p, q) -> float:
        return float(np.linalg.norm(self.canonicalize(p) - self.canonicalize(q)))

    def interpolate(self, p, q, t: float):
        _check_t(t)
        p, q = self.canonicalize(p), self.canonicalize(q)
        return (1.0 - t) * p + t * q

    def frechet_mean(self, points, weights, config=FrechetConfig()):
        pts = np.array([self.canonicalize(p) for p in points])
        w = _check_weights(weights, len(points))
        return pts.T @ w / w.sum()

    def encode_point(self, p):
        return self.canonicalize(p).tolist()

    def decode_point(self, rec):
        return self.canonicalize(np.asarray(rec, dtype=float))

    def random_point(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.dim)


# ---------------------------------------------------------------------------
# metric trees


class MetricTree:
    """Finite combinatorial tree with positive edge lengths."""

    curvature_class = NPC
    kind = "metric_tree"

    def __init__(self, edges):
        self.edge_ends = []
        self.edge_lengths = []
        vertices = set()
        for a, b, length in edges:
            if length <= 0:
                raise ValueError(f"edge ({a},{b}) has non-positive length {length}")
            self.edge_ends.append((a, b))
            self.edge_lengths.append(float(length))
            vertices.update((a, b))
        self.vertices = sorted(vertices)
        if len(self.edge_ends) != len(self.vertices) - 1:
            raise ValueError("edge count must be vertex count - 1 for a tree")
        self.adj: dict[object, list[tuple[object, int]]] = {v: [] for v in self.vertices}
        for e, (a, b) in enumerate(self.edge_ends):
            self.adj[a].append((b, e))
            self.adj[b].append((a, e))
        self._check_connected()
        self._vdist, self._parent = self._all_pairs()

    def _check_connected(self):
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            v = stack.pop()
            for u, _ in self.adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != len(self.vertices):
            raise ValueError("tree graph is not connected")

    def _all_pairs(self):
        dist = {}
        parent = {}
        for src in self.vertices:
            d = {src: 0.0}
            par = {src: None}
            stack = [src]
            while stack:
                v = stack.pop()
                for u, e in self.adj[v]:
                    if u not in d:
                        d[u] = d[v] + self.edge_lengths[e]
                        par[u] = (v, e)
                        stack.append(u)
            dist[src] = d
            parent[src] = par
        return dist, parent

    def __eq__(self, other):
        return (isinstance(other, MetricTree) and other.edge_ends == self.edge_ends
                and other.edge_lengths == self.edge_lengths)

    def __hash__(self):
        return hash(("metric_tree", tuple(self.edge_ends), tuple(self.edge_lengths)))

    # -- star-tree structure (used by the vectorized solver path)

    @property
    def star_center(self):
        """Common endpoint of all edges if the tree is a star, else None."""
        common = set(self.edge_ends[0])
        for ends in self.edge_ends[1:]:
            common &= set(ends)
        return next(iter(common)) if common else None

    def vertex_point(self, v) -> TreePoint:
        """Canonical representative of a tree vertex: the smallest incident edge."""
        u, e = min(self.adj[v], key=lambda t: t[1])
        a, b = self.edge_ends[e]
        return TreePoint(e, 0.0 if v == a else self.edge_lengths[e])

    def canonicalize(self, p) -> TreePoint:
        e, t = p
        L = self.edge_lengths[e]
        if t < -_VERTEX_SNAP or t > L + _VERTEX_SNAP:
            raise ValueError(f"offset {t} outside edge {e} of length {L}")
        if t <= _VERTEX_SNAP:
            return self.vertex_point(self.edge_ends[e][0])
        if t >= L - _VERTEX_SNAP:
            return self.vertex_point(self.edge_ends[e][1])
        return TreePoint(int(e), float(t))

    def _to_ends(self, p: TreePoint):
        """Distances from p to the two endpoints of its edge."""
        a, b = self.edge_ends[p.edge]
        return (a, p.t), (b, self.edge_lengths[p.edge] - p.t)

    def distance(self, p, q) -> float:
        p, q = self.canonicalize(p), self.canonicalize(q)
        if p.edge == q.edge:
            return abs(p.t - q.t)
        best = math.inf
        for u, du in self._to_ends(p):
            for v, dv in self._to_ends(q):
                best = min(best, du + self._vdist[u][v] + dv)
        return best

    def _vertex_path(self, u, v):
        """Vertex sequence from u to v along the unique tree path."""
        path = [v]
        node = v
        while node != u:
            node, _ = self._parent[u][node]
            path.append(node)
        path.reverse()
        return path

    def interpolate(self, p, q, t: float) -> TreePoint:
        _check_t(t)
        p, q = self.canonicalize(p), self.canonicalize(q)
        if p.edge == q.edge:
            return self.canonicalize(TreePoint(p.edge, (1 - t) * p.t + t * q.t))
        best = (math.inf, None, None)
        for u, du in self._to_ends(p):
            for v, dv in self._to_ends(q):
                total = du + self._vdist[u][v] + dv
                if total < best[0] - 1e-15:
                    best = (total, (u, du), (v, dv))
        total, (u, du), (v, dv) = best
        s = t * total
        if s <= du:  # still on p's edge, moving toward u
            a, _ = self.edge_ends[p.edge]
            direction = -1.0 if u == a else 1.0
            return self.canonicalize(TreePoint(p.edge, p.t + direction * s))
        s -= du
        path = self._vertex_path(u, v)
        for x, y in zip(path[:-1], path[1:]):
            e = next(e for nb, e in self.adj[x] if nb == y)
            L = self.edge_lengths[e]
            if s <= L:
                a, _ = self.edge_ends[e]
                offset = s if x == a else L - s
                return self.canonicalize(TreePoint(e, offset))
            s -= L
        # remaining stretch lies on q's edge, moving from v toward q
        a, _ = self.edge_ends[q.edge]
        direction = 1.0 if v == a else -1.0
        base = 0.0 if v == a else self.edge_lengths[q.edge]
        return self.canonicalize(TreePoint(q.edge, base + direction * s))

    def frechet_mean(self, points, weights, config=FrechetConfig()):
        """Exact mean by convex 1-D minimization on every edge."""
        pts = [self.canonicalize(p) for p in points]
        w = _check_weights(weights, len(points))
        best_val, best_pt = math.inf, None
        for e in range(len(self.edge_ends)):
            val, pt = self._minimize_on_edge(e, pts, w)
            if val < best_val - 1e-15:
                best_val, best_pt = val, pt
        return self.canonicalize(best_pt)

    def _minimize_on_edge(self, e, pts, w):
        a, b = self.edge_ends[e]
        L = self.edge_lengths[e]
        breaks = {0.0, L}
        centers = []
        for p in pts:
            if p.edge == e:
                centers.append(("on", p.t))
                breaks.add(p.t)
            else:
                (u1, d1), (u2, d2) = self._to_ends(p)
                da = d1 + self._vdist[u1][a] if u1 != a else d1
                da = min(da, d2 + self._vdist[u2][a])
                db = min(d1 + self._vdist[u1][b], d2 + self._vdist[u2][b])
                crossover = 0.5 * (db - da + L)
                if 0.0 < crossover < L:
                    breaks.add(crossover)
                centers.append(("off", (da, db)))
        knots = sorted(breaks)
        best_val, best_s = math.inf, 0.0
        for lo, hi in zip(knots[:-1], knots[1:]):
            mid = 0.5 * (lo + hi)
            cs = []
            for kind, data in centers:
                if kind == "on":
                    cs.append(data)
                else:
                    da, db = data
                    cs.append(-da if da + mid <= db + (L - mid) else L + db)
            cs = np.asarray(cs)
            s_star = float(np.clip(np.dot(w, cs) / w.sum(), lo, hi))
            val = float(np.dot(w, (s_star - cs) ** 2))
            if val < best_val:
                best_val, best_s = val, s_star
        return best_val, TreePoint(e, best_s)

    def encode_point(self, p):
        p = self.canonicalize(p)
        return {"edge": int(p.edge), "offset": float(p.t)}

    def decode_point(self, rec):
        return self.canonicalize(TreePoint(int(rec["edge"]), float(rec["offset"])))

    def random_point(self, rng, scale=1.0):
        e = int(rng.integers(len(self.edge_ends)))
        return self.canonicalize(TreePoint(e, float(rng.random() * self.edge_lengths[e])))


def make_tripod(ray_length: float = 2.0) -> MetricTree:
    """Three rays of equal length joined at vertex 0 (rays end at 1, 2, 3)."""
    return MetricTree([(0, 1, ray_length), (0, 2, ray_length), (0, 3, ray_length)])


# ---------------------------------------------------------------------------
# hyperbolic plane (hyperboloid model)


def _mink(p, q):
    return -p[..., 0] * q[..., 0] + p[..., 1] * q[..., 1] + p[..., 2] * q[..., 2]


class HyperbolicPlane:
    curvature_class = CAT_MINUS_1
    kind = "hyperbolic_plane"

    def __eq__(self, other):
        return isinstance(other, HyperbolicPlane)

    def __hash__(self):
        return hash("hyperbolic_plane")

    def canonicalize(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (3,) or p[0] <= 0:
            raise ValueError("hyperboloid point must be (x0, x1, x2) with x0 > 0")
        x0 = math.sqrt(1.0 + p[1] ** 2 + p[2] ** 2)
        if abs(x0 - p[0]) > 1e-6 * max(1.0, x0):
            raise ValueError("point too far from the hyperboloid sheet")
        return np.array([x0, p[1], p[2]])

    @staticmethod
    def from_polar(r: float, theta: float) -> np.ndarray:
        return np.array([math.cosh(r), math.sinh(r) * math.cos(theta),
                         math.sinh(r) * math.sin(theta)])

    def distance(self, p, q) -> float:
        # chordal form 2 asinh(|p-q|_M / 2): immune to the acosh-near-1
        # cancellation for nearby points, exact at all separations
        p, q = self.canonicalize(p), self.canonicalize(q)
        dvec = p - q
        m2 = max(_mink(dvec, dvec), 0.0)
        return float(2.0 * math.asinh(0.5 * math.sqrt(m2)))

    def interpolate(self, p, q, t: float):
        _check_t(t)
        p, q = self.canonicalize(p), self.canonicalize(q)
        d = self.distance(p, q)
        if d < 1e-12:
            return self.canonicalize((1 - t) * p + t * q)
        out = (math.sinh((1 - t) * d) * p + math.sinh(t * d) * q) / math.sinh(d)
        return self.canonicalize(out)

    def log(self, base, p):
        base, p = self.canonicalize(base), self.canonicalize(p)
        c = max(-_mink(base, p), 1.0)
        d = math.acosh(c)
        u = p - c * base  # tangential: <base, u> = -c + c = 0 with <base,base>=-1
        nrm = math.sqrt(max(_mink(u, u), 0.0))
        if nrm < 1e-300 or d < 1e-15:
            return np.zeros(3)
        return (d / nrm) * u

    def exp(self, base, v):
        base = self.canonicalize(base)
        nrm = math.sqrt(max(_mink(v, v), 0.0))
        if nrm < 1e-15:
            return self.canonicalize(base + v)
        return self.canonicalize(math.cosh(nrm) * base + math.sinh(nrm) / nrm * v)

    def frechet_mean(self, points, weights, config=FrechetConfig()):
        pts = np.array([self.canonicalize(p) for p in points])
        w = _check_weights(weights, len(points))
        # Lorentzian centroid is an excellent starting point
        u = pts.T @ w
        mu = u / math.sqrt(max(-_mink(u, u), 1e-300))
        mu = self.canonicalize(mu)
        best = (math.inf, mu)
        for _ in range(config.max_iters):
            v = sum(wi * self.log(mu, p) for wi, p in zip(w, pts)) / w.sum()
            res = math.sqrt(max(_mink(v, v), 0.0))
            if res < best[0]:
                best = (res, mu)
            if res <= config.tol:
                return mu
            mu = self.exp(mu, config.damping * v)
        raise FrechetDivergence(
            f"hyperbolic mean did not reach tol {config.tol} in {config.max_iters} iters",
            best_point=best[1], residual=best[0])

    def encode_point(self, p):
        return self.canonicalize(p).tolist()

    def decode_point(self, rec):
        return self.canonicalize(np.asarray(rec, dtype=float))

    def random_point(self, rng, scale=1.0):
        r = abs(rng.standard_normal()) * scale
        theta = 2.0 * math.pi * rng.random()
        return self.from_polar(r, theta)


# ---------------------------------------------------------------------------
# products


class ProductSpace:
    kind = "product"

    def __init__(self, factors):
        self.factors = list(factors)
        if not self.factors:
            raise ValueError("product needs at least one factor")
        # a product is NPC when every factor is; it is never tagged CAT(-1)
        self.curvature_class = NPC

    def __eq__(self, other):
        return isinstance(other, ProductSpace) and other.factors == self.factors

    def __hash__(self):
        return hash(("product", tuple(hash(f) for f in self.factors)))

    def canonicalize(self, p):
        if len(p) != len(self.factors):
            raise ValueError("component count mismatch for product point")
        return tuple(f.canonicalize(c) for f, c in zip(self.factors, p))

    def distance(self, p, q) -> float:
        p, q = self.canonicalize(p), self.canonicalize(q)
        return math.sqrt(sum(f.distance(a, b) ** 2
                             for f, a, b in zip(self.factors, p, q)))

    def interpolate(self, p, q, t: float):
        _check_t(t)
        p, q = self.canonicalize(p), self.canonicalize(q)
        return tuple(f.interpolate(a, b, t) for f, a, b in zip(self.factors, p, q))

    def frechet_mean(self, points, weights, config=FrechetConfig()):
        pts = [self.canonicalize(p) for p in points]
        # the squared-distance objective separates over factors
        return tuple(
            f.frechet_mean([p[i] for p in pts], weights, config)
            for i, f in enumerate(self.factors))

    def encode_point(self, p):
        p = self.canonicalize(p)
        return [f.encode_point(c) for f, c in zip(self.factors, p)]

    def decode_point(self, rec):
        return tuple(f.decode_point(c) for f, c in zip(self.factors, rec))

    def random_point(self, rng, scale=1.0):
        return tuple(f.random_point(rng, scale) for f in self.factors)


# ---------------------------------------------------------------------------
# shared helpers


def _check_t(t: float):
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"interpolation parameter t={t} outside [0, 1]")


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError("weights must match the number of points")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    return w


def frechet_mean(space, points, weights=None, config=FrechetConfig()):
    """Weighted Frechet mean: minimizer of sum_i w_i d^2(p_i, x)."""
    if weights is None:
        weights = np.ones(len(points))
    return space.frechet_mean(points, weights, config)


def frechet_objective(space, points, weights, x) -> float:
    w = np.asarray(weights, dtype=float)
    return float(sum(wi * space.distance(p, x) ** 2 for wi, p in zip(w, points)))


def random_point(space, rng, scale=1.0):
    return space.random_point(rng, scale)


def space_from_config(cfg: dict):
    """Build a target space from its scenario-config record."""
    kind = cfg.get("kind")
    if kind == "euclidean":
        return EuclideanSpace(int(cfg["dim"]))
    if kind == "metric_tree":
        return MetricTree([(e[0], e[1], float(e[2])) for e in cfg["edges"]])
    if kind == "hyperbolic_plane":
        return HyperbolicPlane()
    if kind == "product":
        return ProductSpace([space_from_config(f) for f in cfg["factors"]])
    raise ValueError(f"unknown target kind {kind!r}")


# ---------------------------------------------------------------------------
# comparison-triangle checks


@dataclass(frozen=True)
class ComparisonResult:
    lhs: float
    rhs: float
    tol: float
    passed: bool
    sides: tuple[float, float, float]  # (d(B,C), d(A,C), d(A,B))
    t: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def witness(self, space, A, B, C) -> dict:
        return {"A": space.encode_point(A), "B": space.encode_point(B),
                "C": space.encode_point(C), "t": self.t,
                "lhs": self.lhs, "rhs": self.rhs}


def _triangle_sides(space, A, B, C):
    a = space.distance(B, C)
    b = space.distance(A, C)
    c = space.distance(A, B)
    slack = 1e-9 * max(a, b, c, 1.0)
    if a > b + c + slack or b > a + c + slack or c > a + b + slack:
        raise ValueError(f"side lengths ({a}, {b}, {c}) violate the triangle inequality")
    return a, b, c


def _clamp_cos(x: float) -> float:
    if x > 1.0 + 1e-12 or x < -1.0 - 1e-12:
        raise ValueError(f"cosine argument {x} out of range beyond slack")
    return min(1.0, max(-1.0, x))


def check_npc_comparison(space, A, B, C, t: float, tol: float = 1e-10) -> ComparisonResult:
    """d(A, point t of the way from B to C) against the Euclidean comparison."""
    a, b, c = _triangle_sides(space, A, B, C)
    lhs = space.distance(A, space.interpolate(B, C, t))
    if a < 1e-300:
        rhs = c
    else:
        cos_beta = _clamp_cos((a * a + c * c - b * b) / (2.0 * a * c)) if c > 0 else 1.0
        sin_beta = math.sqrt(max(1.0 - cos_beta**2, 0.0))
        abar = np.array([c * cos_beta, c * sin_beta])
        dbar = np.array([t * a, 0.0])
        rhs = float(np.linalg.norm(abar - dbar))
    return ComparisonResult(lhs=lhs, rhs=rhs, tol=tol, passed=lhs <= rhs + tol,
                            sides=(a, b, c), t=t)


def check_cat1_comparison(space, A, B, C, t: float, tol: float = 1e-9) -> ComparisonResult:
    """Same comparison with the triangle planted in the hyperbolic plane."""
    a, b, c = _triangle_sides(space, A, B, C)
    lhs = space.distance(A, space.interpolate(B, C, t))
    if a < 1e-300:
        rhs = c
    elif c < 1e-300:
        rhs = t * a
    else:
        cos_beta = _clamp_cos((math.cosh(a) * math.cosh(c) - math.cosh(b))
                              / (math.sinh(a) * math.sinh(c)))
        ta = t * a
        ch = math.cosh(c) * math.cosh(ta) - math.sinh(c) * math.sinh(ta) * cos_beta
        rhs = math.acosh(max(ch, 1.0))
    return ComparisonResult(lhs=lhs, rhs=rhs, tol=tol, passed=lhs <= rhs + tol,
                            sides=(a, b, c), t=t)
