"""Small helpers for Hermitian matrices used throughout the package.

Covariances are plain complex ndarrays; these functions enforce and check
the Hermitian/PSD contracts at construction sites.
"""

from __future__ import annotations

import numpy as np

# Relative tolerance for declaring a matrix PSD: eigenvalues may dip below
# zero by at most this fraction of the largest eigenvalue (roundoff slack).
PSD_RTOL = 1e-10


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Nearest Hermitian matrix, 0.5 * (A + A^H)."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, rtol: float = 1e-12) -> bool:
    a = np.asarray(a)
    scale = max(np.linalg.norm(a), 1.0)
    return bool(np.linalg.norm(a - a.conj().T) <= rtol * scale)


def min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


def check_psd(a: np.ndarray, rtol: float = PSD_RTOL, what: str = "matrix") -> None:
    """Raise ValueError when `a` is not PSD within relative tolerance."""
    w = np.linalg.eigvalsh(hermitian_part(a))
    w_min, w_max = float(w[0]), float(w[-1])
    if w_min < -rtol * max(w_max, 1e-300):
        raise ValueError(
            f"{what} is not positive semidefinite: "
            f"minimum eigenvalue {w_min:.6e} (largest {w_max:.6e})"
        )


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clipped.

    Works for rank-deficient inputs (e.g. coherent source covariances)
    where a Cholesky factorization would fail.
    """
    w, v = np.linalg.eigh(hermitian_part(a))
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def nuclear_norm(a: np.ndarray) -> float:
    """Nuclear norm of a Hermitian matrix (sum of |eigenvalues|)."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(a)))))
