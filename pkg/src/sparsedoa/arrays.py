"""Array geometry, steering vectors and the sampled/lifted manifolds.

Conventions, fixed project-wide:
  * sensor positions are in half-wavelength units along a line;
  * angles are degrees in [0, 180) measured from the array axis, so
    broadside is 90 degrees;
  * a steering entry is exp(j*pi*position*cos(theta)), hence position 0
    always responds with 1;
  * matrix vectorization stacks columns (column-major).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _cos_deg(theta_deg):
    """cos of an angle in degrees, exactly zero at broadside (90)."""
    theta_deg = np.asarray(theta_deg, dtype=float)
    c = np.cos(np.deg2rad(theta_deg))
    return np.where(theta_deg == 90.0, 0.0, c)


@dataclass(frozen=True)
class ArrayGeometry:
    """Linear array described by strictly increasing sensor positions."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 2:
            raise ValueError("need at least 2 sensor positions")
        if not np.all(np.diff(pos) > 0):
            raise ValueError("sensor positions must be strictly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def m(self) -> int:
        return self.positions.size

    @classmethod
    def ula(cls, m: int) -> "ArrayGeometry":
        """Uniform linear array with half-wavelength spacing (unit steps)."""
        if m < 2:
            raise ValueError("ULA needs m >= 2 sensors")
        return cls(np.arange(m, dtype=float))


@dataclass(frozen=True)
class AngularGrid:
    """Candidate directions in degrees, strictly increasing within [0, 180)."""

    angles: np.ndarray

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float)
        if ang.ndim != 1 or ang.size < 1:
            raise ValueError("grid needs at least one angle")
        if not np.all(np.diff(ang) > 0):
            raise ValueError("grid angles must be strictly increasing")
        if ang[0] < 0.0 or ang[-1] >= 180.0:
            raise ValueError("grid angles must lie in [0, 180)")
        ang.setflags(write=False)
        object.__setattr__(self, "angles", ang)

    @property
    def size(self) -> int:
        return self.angles.size

    @classmethod
    def uniform(cls, num_points: int) -> "AngularGrid":
        """Uniform grid over [0, 180) with spacing exactly 180/num_points."""
        if num_points < 1:
            raise ValueError("num_points must be positive")
        return cls(np.arange(num_points) * (180.0 / num_points))


def steering_vector(geom: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Complex array response to a unit plane wave from `theta_deg`."""
    if not 0.0 <= theta_deg < 180.0:
        raise ValueError(f"theta must be in [0, 180), got {theta_deg}")
    return np.exp(1j * np.pi * geom.positions * _cos_deg(theta_deg))


def manifold_matrix(geom: ArrayGeometry, grid: AngularGrid) -> np.ndarray:
    """Sampled manifold: column k is the steering vector at grid angle k."""
    phases = np.outer(geom.positions, _cos_deg(grid.angles))
    return np.exp(1j * np.pi * phases)


def khatri_rao_manifold(a_tilde: np.ndarray) -> np.ndarray:
    """Column-wise conj(a) (x) a lift of a manifold, shape (m^2, M).

    Column k is the Kronecker product conj(a_k) (x) a_k, laid out so that
    khatri_rao_manifold(A) @ p == vect(A @ diag(p) @ A^H) under column-major
    vectorization.
    """
    m, num_cols = a_tilde.shape
    lifted = a_tilde[:, None, :] * a_tilde.conj()[None, :, :]
    return lifted.reshape(m * m, num_cols, order="F")
