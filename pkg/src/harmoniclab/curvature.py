"""Curvature tensor symbols at a chart center.

Conventions (orthonormal frame at the basepoint):
  R_ijkl = <R(e_i,e_j)e_k, e_l>,  Ric_ij = sum_k R_kijk,  S = tr(Ric).
Constant-curvature models use R_ijkl = K (d_jk d_il - d_ik d_jl).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["CurvatureData", "constant_curvature", "flat_curvature"]


@dataclass(frozen=True)
class CurvatureData:
    """Riemann, Ricci and scalar curvature symbols at one point."""

    dimension: int
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float

    def __post_init__(self):
        n = self.dimension
        if n < 2:
            raise ValueError(f"dimension must be >= 2, got {n}")
        R = np.asarray(self.riemann, dtype=float)
        ric = np.asarray(self.ricci, dtype=float)
        if R.shape != (n, n, n, n):
            raise ValueError(f"riemann must have shape {(n,) * 4}, got {R.shape}")
        if ric.shape != (n, n):
            raise ValueError(f"ricci must have shape {(n, n)}, got {ric.shape}")
        object.__setattr__(self, "riemann", R)
        object.__setattr__(self, "ricci", ric)
        object.__setattr__(self, "scalar", float(self.scalar))
        self._validate()

    def _validate(self):
        R = self.riemann
        scale = max(1.0, float(np.abs(R).max()))
        tol = 1e-10 * scale
        if np.abs(R + np.transpose(R, (1, 0, 2, 3))).max() > tol:
            raise ValueError("Riemann symbols not antisymmetric in the first index pair")
        if np.abs(R + np.transpose(R, (0, 1, 3, 2))).max() > tol:
            raise ValueError("Riemann symbols not antisymmetric in the last index pair")
        if np.abs(R - np.transpose(R, (2, 3, 0, 1))).max() > tol:
            raise ValueError("Riemann symbols violate pair-exchange symmetry")
        bianchi = R + np.transpose(R, (1, 2, 0, 3)) + np.transpose(R, (2, 0, 1, 3))
        if np.abs(bianchi).max() > tol:
            raise ValueError("Riemann symbols violate the first Bianchi identity")
        ric_from_R = np.einsum("kijk->ij", R)
        if np.abs(ric_from_R - self.ricci).max() > 1e-10 * max(1.0, float(np.abs(self.ricci).max())):
            raise ValueError("Ricci symbols inconsistent with the Riemann contraction")
        if abs(float(np.trace(self.ricci)) - self.scalar) > 1e-10 * max(1.0, abs(self.scalar)):
            raise ValueError("scalar curvature inconsistent with tr(Ric)")

    @classmethod
    def from_riemann(cls, riemann: np.ndarray) -> "CurvatureData":
        R = np.asarray(riemann, dtype=float)
        n = R.shape[0]
        ric = np.einsum("kijk->ij", R)
        return cls(dimension=n, riemann=R, ricci=ric, scalar=float(np.trace(ric)))


def constant_curvature(n: int, K: float) -> CurvatureData:
    """Curvature symbols of the n-dimensional space form of curvature K."""
    eye = np.eye(n)
    R = K * (np.einsum("jk,il->ijkl", eye, eye) - np.einsum("ik,jl->ijkl", eye, eye))
    return CurvatureData.from_riemann(R)


def flat_curvature(n: int) -> CurvatureData:
    return constant_curvature(n, 0.0)
