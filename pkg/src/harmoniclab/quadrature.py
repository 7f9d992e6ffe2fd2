"""Closed-form and numeric integrals of quadratic forms over balls and spheres.

The three closed forms (sphere, ball, product-on-sphere) drive every
sigma^2-coefficient in the curvature expansions, so each one ships with an
independent numeric mode used as a cross-check: deterministic product-angle
grids for n <= 3 and Monte-Carlo with a reported standard error above that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuadraticForm",
    "unit_ball_volume",
    "integrate_quadratic_sphere",
    "integrate_quadratic_ball",
    "integrate_quadratic_product_sphere",
    "curvature_ball_integrals",
    "sphere_quadrature_rule",
]

#: dimension at which the numeric mode switches to Monte-Carlo
_DETERMINISTIC_MAX_DIM = 3


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in Euclidean n-space."""
    if n < 1:
        raise ValueError(f"invalid dimension n={n}")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric matrix Q acting as x -> x^T Q x."""

    matrix: np.ndarray = field()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"quadratic form must be a square matrix, got shape {m.shape}")
        if not np.allclose(m, m.T, atol=1e-12 * max(1.0, float(np.abs(m).max()))):
            raise ValueError("quadratic form matrix must be symmetric")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.matrix, x)

    def colon(self, other: "QuadraticForm") -> float:
        """Frobenius pairing tr(Q Qt) = Q_ij Qt_ji."""
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return float(np.sum(self.matrix * other.matrix))


def sphere_quadrature_rule(n: int, rng: np.random.Generator | None = None,
                           num_mc: int = 200_000):
    """Nodes and weights integrating over the unit sphere in R^n.

    Deterministic (exact for low-degree polynomials) for n <= 3, Monte-Carlo
    otherwise.  Returns (points, weights, is_exact); weights sum to the sphere
    area n*omega_n.
    """
    if n < 1:
        raise ValueError(f"invalid dimension n={n}")
    area = n * unit_ball_volume(n)
    if n == 1:
        pts = np.array([[-1.0], [1.0]])
        return pts, np.array([1.0, 1.0]), True
    if n == 2:
        m = 2048
        theta = 2.0 * math.pi * np.arange(m) / m
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        w = np.full(m, 2.0 * math.pi / m)
        return pts, w, True
    if n == 3:
        # Gauss-Legendre in cos(phi) x uniform grid in theta
        nu, nth = 64, 128
        u, wu = np.polynomial.legendre.leggauss(nu)
        theta = 2.0 * math.pi * np.arange(nth) / nth
        su = np.sqrt(1.0 - u**2)
        pts = np.empty((nu * nth, 3))
        w = np.empty(nu * nth)
        for i in range(nu):
            sl = slice(i * nth, (i + 1) * nth)
            pts[sl, 0] = su[i] * np.cos(theta)
            pts[sl, 1] = su[i] * np.sin(theta)
            pts[sl, 2] = u[i]
            w[sl] = wu[i] * (2.0 * math.pi / nth)
        return pts, w, True
    if rng is None:
        rng = np.random.default_rng(0)
    g = rng.standard_normal((num_mc, n))
    pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    w = np.full(num_mc, area / num_mc)
    return pts, w, False


@dataclass(frozen=True)
class NumericCheck:
    """Numeric companion value for a closed-form integral."""

    value: float
    standard_error: float  # 0 for deterministic rules
    is_exact_rule: bool


def _numeric_sphere_integral(fn, n: int, sigma: float, rng=None) -> NumericCheck:
    pts, w, exact = sphere_quadrature_rule(n, rng=rng)
    vals = fn(sigma * pts)
    total = float(np.dot(vals, w)) * sigma ** (n - 1)
    if exact:
        return NumericCheck(total, 0.0, True)
    # MC standard error of the weighted mean
    area = n * unit_ball_volume(n) * sigma ** (n - 1)
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) * area
    return NumericCheck(total, se, False)


def _require_sigma(sigma: float):
    if sigma <= 0:
        raise ValueError(f"radius must be positive, got sigma={sigma}")


def integrate_quadratic_sphere(Q: QuadraticForm, sigma: float, n: int,
                               numeric: bool = False, rng=None):
    """Integral of Q(x) over the sphere of radius sigma in R^n.

    Closed form: omega_n * tr(Q) * sigma^(n+1).  With numeric=True also
    returns the quadrature value as a NumericCheck.
    """
    _require_sigma(sigma)
    if n < 1:
        raise ValueError(f"invalid dimension n={n}")
    if Q.dim != n:
        raise ValueError(f"form dimension {Q.dim} does not match n={n}")
    analytic = unit_ball_volume(n) * Q.trace * sigma ** (n + 1)
    if not numeric:
        return analytic
    return analytic, _numeric_sphere_integral(Q, n, sigma, rng=rng)


def integrate_quadratic_ball(Q: QuadraticForm, sigma: float, n: int,
                             numeric: bool = False, rng=None):
    """Integral of Q(x) over the solid ball of radius sigma in R^n.

    Closed form: (omega_n/(n+2)) * tr(Q) * sigma^(n+2).
    """
    _require_sigma(sigma)
    if n < 1:
        raise ValueError(f"invalid dimension n={n}")
    if Q.dim != n:
        raise ValueError(f"form dimension {Q.dim} does not match n={n}")
    analytic = unit_ball_volume(n) / (n + 2) * Q.trace * sigma ** (n + 2)
    if not numeric:
        return analytic
    if n <= _DETERMINISTIC_MAX_DIM:
        # radial Gauss-Legendre on [0, sigma] against the exact sphere rule
        nr = 48
        r, wr = np.polynomial.legendre.leggauss(nr)
        r = 0.5 * sigma * (r + 1.0)
        wr = 0.5 * sigma * wr
        total = 0.0
        for ri, wi in zip(r, wr):
            # sphere integral of Q at radius ri carries ri^(n+1)
            total += wi * _numeric_sphere_integral(Q, n, ri).value
        return analytic, NumericCheck(float(total), 0.0, True)
    if rng is None:
        rng = np.random.default_rng(0)
    num_mc = 200_000
    g = rng.standard_normal((num_mc, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = sigma * rng.random(num_mc) ** (1.0 / n)
    vals = Q(g * radii[:, None])
    vol = unit_ball_volume(n) * sigma**n
    mc = float(np.mean(vals)) * vol
    se = float(np.std(vals, ddof=1) / math.sqrt(num_mc)) * vol
    return analytic, NumericCheck(mc, se, False)


def integrate_quadratic_product_sphere(Q: QuadraticForm, Qt: QuadraticForm,
                                       sigma: float, n: int,
                                       numeric: bool = False, rng=None):
    """Integral of Q(x)*Qt(x) over the sphere of radius sigma in R^n.

    Closed form: (omega_n/(n+2)) * (2 Q:Qt + tr(Q) tr(Qt)) * sigma^(n+3).
    """
    _require_sigma(sigma)
    if Q.dim != Qt.dim:
        raise ValueError(f"dimension mismatch between forms: {Q.dim} vs {Qt.dim}")
    if Q.dim != n:
        raise ValueError(f"form dimension {Q.dim} does not match n={n}")
    analytic = (unit_ball_volume(n) / (n + 2)
                * (2.0 * Q.colon(Qt) + Q.trace * Qt.trace) * sigma ** (n + 3))
    if not numeric:
        return analytic
    check = _numeric_sphere_integral(lambda x: Q(x) * Qt(x), n, sigma, rng=rng)
    return analytic, check


def curvature_ball_integrals(curv, v: np.ndarray, sigma: float):
    """Ball integrals of the two curvature quadratic forms at a basepoint.

    Returns (ricci_integral, sectional_integral):
      integral over B_sigma of Ric(x,x) dx        = (omega_n/(n+2)) S sigma^(n+2)
      integral over B_sigma of <R(v,x)x, v> dx    = (omega_n/(n+2)) Ric(v,v) sigma^(n+2)
    A non-unit direction v is normalized (with a warning via ValueError-free path).
    """
    _require_sigma(sigma)
    v = np.asarray(v, dtype=float)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise ValueError("direction vector must be nonzero")
    if abs(nrm - 1.0) > 1e-10:
        import warnings

        warnings.warn("direction vector normalized to unit length", stacklevel=2)
        v = v / nrm
    n = curv.dimension
    coeff = unit_ball_volume(n) / (n + 2) * sigma ** (n + 2)
    ric_vv = float(v @ curv.ricci @ v)
    return coeff * curv.scalar, coeff * ric_vv
