"""Support sets: index patterns where the noise covariance may be nonzero."""

from __future__ import annotations

import numpy as np


class SupportSet:
    """Symmetric index set over an m x m matrix, always containing the
    diagonal (noise variances are never assumed known).

    Stored as a boolean mask; immutable after construction.
    """

    def __init__(self, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError("support mask must be square")
        if not np.array_equal(mask, mask.T):
            raise ValueError("support set must be symmetric")
        if not np.all(np.diag(mask)):
            raise ValueError("support set must contain the full diagonal")
        mask = mask.copy()
        mask.setflags(write=False)
        self._mask = mask

    @property
    def mask(self) -> np.ndarray:
        """Boolean (m, m) mask; True on permitted-nonzero entries."""
        return self._mask

    @property
    def m(self) -> int:
        return self._mask.shape[0]

    @property
    def size(self) -> int:
        """Number of entries in the set, |Omega|."""
        return int(self._mask.sum())

    def complement_mask(self) -> np.ndarray:
        return ~self._mask

    def vec_mask(self) -> np.ndarray:
        """Column-major flattening of the mask, for vectorized operators."""
        return self._mask.flatten(order="F")

    def violation(self, x: np.ndarray) -> float:
        """Largest |entry| of x outside the support."""
        off = np.where(self._mask, 0.0, x)
        return float(np.abs(off).max()) if off.size else 0.0

    def __eq__(self, other) -> bool:
        return isinstance(other, SupportSet) and np.array_equal(self._mask, other._mask)

    def __repr__(self) -> str:
        return f"SupportSet(m={self.m}, size={self.size})"


def band_support(m: int, bandwidth: int) -> SupportSet:
    """All entries within `bandwidth` of the diagonal: |i - j| <= bandwidth."""
    if not 0 <= bandwidth < m:
        raise ValueError("need 0 <= bandwidth < m")
    i, j = np.indices((m, m))
    return SupportSet(np.abs(i - j) <= bandwidth)


def block_support(block_sizes) -> SupportSet:
    """Block-diagonal support, one square per block (subarray layout)."""
    sizes = [int(s) for s in block_sizes]
    if not sizes or any(s <= 0 for s in sizes):
        raise ValueError("block sizes must be positive")
    m = sum(sizes)
    mask = np.zeros((m, m), dtype=bool)
    start = 0
    for s in sizes:
        mask[start:start + s, start:start + s] = True
        start += s
    return SupportSet(mask)
