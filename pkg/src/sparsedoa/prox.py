"""Proximal operators and projections shared by all solvers.

Everything here is stateless and pure. Matrix operators take and return
dense complex ndarrays; Hermitian inputs are symmetrized first so that
eigendecompositions are well posed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermitian import hermitian_part
from .support import SupportSet


@dataclass(frozen=True)
class ProxConfig:
    """Numerical knobs for the PSD-cone operators.

    eig_tolerance is relative to the spectral radius and is used when
    certifying PSD-ness of iterates, not when projecting (projection
    clips at exactly zero).
    """

    eig_tolerance: float = 1e-12
    symmetrize: bool = True

    def __post_init__(self):
        if self.eig_tolerance < 0:
            raise ValueError("eig_tolerance must be >= 0")


def support_projection(x: np.ndarray, omega: SupportSet,
                       keep_complement: bool = True) -> np.ndarray:
    """Zero out entries on the support (keep_complement=True) or off it."""
    if x.shape != (omega.m, omega.m):
        raise ValueError(f"shape {x.shape} does not match support m={omega.m}")
    if keep_complement:
        return np.where(omega.mask, 0.0, x)
    return np.where(omega.mask, x, 0.0)


def project_psd(h: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite matrix."""
    h = hermitian_part(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError(
            f"eigendecomposition failed in PSD projection "
            f"(norm {np.linalg.norm(h):.3e}, finite={np.isfinite(h).all()})"
        ) from err
    w = np.maximum(w, 0.0)
    return (v * w) @ v.conj().T


def prox_nuclear_psd(h: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*||.||_* restricted to the PSD cone, at a Hermitian point.

    Eigenvalues are shifted down by t and clipped at zero; eigenvectors
    are kept. t = 0 reduces to the PSD projection.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    h = hermitian_part(h)
    w, v = np.linalg.eigh(h)
    w = np.maximum(w - t, 0.0)
    return (v * w) @ v.conj().T


def prox_nuclear_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*||.||_* over Hermitian matrices (no sign constraint).

    For a Hermitian argument the singular values are |eigenvalues|, so the
    prox shrinks each eigenvalue magnitude by t.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    h = hermitian_part(h)
    w, v = np.linalg.eigh(h)
    w = np.sign(w) * np.maximum(np.abs(w) - t, 0.0)
    return (v * w) @ v.conj().T


def prox_l1_nonneg(v: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*||.||_1 plus nonnegativity: entrywise max(v - t, 0)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return np.maximum(np.asarray(v, dtype=float) - t, 0.0)


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    """Complex magnitude shrinkage x * max(1 - t/|x|, 0), with 0 -> 0."""
    mag = np.abs(x)
    safe = np.where(mag > 0, mag, 1.0)
    return x * np.maximum(1.0 - t / safe, 0.0)


def prox_l1_psd_matrix(s: np.ndarray, t: float) -> np.ndarray:
    """Approximate prox of t*||.||_1 restricted to the PSD cone.

    Entrywise magnitude shrinkage followed by PSD projection. This is not
    the exact prox of the sum (which has no closed form); solvers that need
    exactness split the l1 term and the cone into separate variables.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    return project_psd(soft_threshold(hermitian_part(s), t))


def prox_l2_block(v: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*||.||_2: radial shrinkage of the whole block toward zero."""
    if t < 0:
        raise ValueError("t must be >= 0")
    n = np.linalg.norm(v)
    if n <= t:
        return np.zeros_like(v)
    return v * (1.0 - t / n)
