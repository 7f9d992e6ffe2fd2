"""Normal-coordinate charts: metric/volume expansions and exact space forms.

Second-order expansions at the chart center:
  g_ij(x)   = d_ij - (1/3) R_kijl(0) x^k x^l + O(|x|^3)
  sqrt g(x) = 1 - (1/6) Ric_ij(0) x^i x^j + O(|x|^3)
Exact evaluation is available for the flat, round-sphere and hyperbolic
models, and those closed forms are the oracles for the expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.integrate import quad

from .curvature import CurvatureData, constant_curvature
from .quadrature import unit_ball_volume

__all__ = ["ExactModel", "NormalChart", "OutOfChartError", "bishop_gromov_profile"]


class OutOfChartError(ValueError):
    """Evaluation point outside the chart's validity radius."""


@dataclass(frozen=True)
class ExactModel:
    """Closed-form space form: flat, round sphere or hyperbolic of given radius."""

    kind: Literal["flat", "round_sphere", "hyperbolic"]
    radius: float = 1.0

    @property
    def sectional(self) -> float:
        if self.kind == "flat":
            return 0.0
        k = 1.0 / self.radius**2
        return k if self.kind == "round_sphere" else -k

    def warp(self, t: float) -> float:
        """Metric warp s(t): geodesic circle of radius t has circumference-
        scale s(t) (equals t in the flat case)."""
        if self.kind == "flat":
            return t
        r = self.radius
        if self.kind == "round_sphere":
            return r * math.sin(t / r)
        return r * math.sinh(t / r)

    def injectivity_radius(self) -> float:
        if self.kind == "round_sphere":
            return math.pi * self.radius
        return math.inf

    def metric(self, x: np.ndarray) -> np.ndarray:
        """Exact g_ij in normal coordinates at |x| = t."""
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        t = float(np.linalg.norm(x))
        if t == 0.0 or self.kind == "flat":
            return np.eye(n)
        xhat = x / t
        p_rad = np.outer(xhat, xhat)
        scale = (self.warp(t) / t) ** 2
        return p_rad + scale * (np.eye(n) - p_rad)

    def volume_density(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        t = float(np.linalg.norm(x))
        if t == 0.0 or self.kind == "flat":
            return 1.0
        return (self.warp(t) / t) ** (n - 1)

    def sphere_area(self, n: int, sigma: float) -> float:
        """Area of the geodesic sphere of radius sigma in dimension n."""
        return n * unit_ball_volume(n) * self.warp(sigma) ** (n - 1)

    def ball_volume(self, n: int, sigma: float) -> float:
        val, _ = quad(lambda r: self.sphere_area(n, r), 0.0, sigma, epsabs=1e-13, epsrel=1e-12)
        return val


@dataclass(frozen=True)
class NormalChart:
    """Normal coordinates about a basepoint, with curvature symbols there."""

    dimension: int
    curvature: CurvatureData
    validity_radius: float
    basepoint: int | None = None
    exact_model: ExactModel | None = None

    def __post_init__(self):
        if self.curvature.dimension != self.dimension:
            raise ValueError("curvature dimension does not match chart dimension")
        if self.validity_radius <= 0:
            raise ValueError("validity radius must be positive")
        if self.exact_model is not None:
            if self.validity_radius >= self.exact_model.injectivity_radius():
                raise ValueError("validity radius exceeds the model injectivity radius")

    @classmethod
    def for_model(cls, model: ExactModel, dimension: int = 2,
                  validity_radius: float | None = None, basepoint=None) -> "NormalChart":
        if validity_radius is None:
            validity_radius = min(1.5, 0.45 * model.injectivity_radius())
        curv = constant_curvature(dimension, model.sectional)
        return cls(dimension=dimension, curvature=curv,
                   validity_radius=validity_radius, basepoint=basepoint,
                   exact_model=model)

    def _check_inside(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"coordinate vector must have shape ({self.dimension},)")
        if np.linalg.norm(x) > self.validity_radius * (1 + 1e-12):
            raise OutOfChartError(
                f"|x|={np.linalg.norm(x):.4g} exceeds validity radius {self.validity_radius:.4g}")
        return x

    def metric_expansion(self, x: np.ndarray) -> np.ndarray:
        """Second-order metric g_ij = d_ij - (1/3) R_kijl x^k x^l."""
        x = self._check_inside(x)
        corr = np.einsum("kijl,k,l->ij", self.curvature.riemann, x, x)
        return np.eye(self.dimension) - corr / 3.0

    def volume_density_expansion(self, x: np.ndarray) -> float:
        """Second-order density 1 - (1/6) Ric_ij x^i x^j."""
        x = self._check_inside(x)
        return 1.0 - float(x @ self.curvature.ricci @ x) / 6.0

    def metric_exact(self, x: np.ndarray) -> np.ndarray:
        if self.exact_model is None:
            raise ValueError("chart has no exact model attached")
        return self.exact_model.metric(self._check_inside(x))

    def volume_density_exact(self, x: np.ndarray) -> float:
        if self.exact_model is None:
            raise ValueError("chart has no exact model attached")
        return self.exact_model.volume_density(self._check_inside(x))


def evaluate_metric_expansion(chart: NormalChart, x: np.ndarray):
    """Expansion metric at x; with an exact model also the model's g_ij(x)."""
    approx = chart.metric_expansion(x)
    if chart.exact_model is None:
        return approx
    return approx, chart.metric_exact(x)


def evaluate_volume_density(chart: NormalChart, x: np.ndarray):
    """Expansion density at x; with an exact model also the exact sqrt(g)(x)."""
    approx = chart.volume_density_expansion(x)
    if chart.exact_model is None:
        return approx
    return approx, chart.volume_density_exact(x)


def bishop_gromov_profile(chart: NormalChart, sigma_list):
    """Sphere-to-ball measure ratios against the small-radius prediction.

    Rows are (sigma, measured_ratio, prediction, residual), with
    prediction = n/sigma - S*sigma/(3(n+2)).  The measured ratio needs an
    exact model; without one it is NaN and only the prediction column is
    meaningful (flagged by the caller checking for NaN).
    """
    n = chart.dimension
    S = chart.curvature.scalar
    rows = []
    for sigma in sigma_list:
        if sigma <= 0 or sigma > chart.validity_radius:
            raise OutOfChartError(f"sigma={sigma} outside chart validity")
        pred = n / sigma - S * sigma / (3.0 * (n + 2))
        if chart.exact_model is None:
            rows.append((float(sigma), math.nan, pred, math.nan))
            continue
        measured = (chart.exact_model.sphere_area(n, sigma)
                    / chart.exact_model.ball_volume(n, sigma))
        rows.append((float(sigma), measured, pred, measured - pred))
    return rows
