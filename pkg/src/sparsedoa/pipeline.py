"""From solver outputs to DOA estimates.

Estimates always land on grid points: peak picking has no interpolation,
which is why RMSE floors out near half the grid spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import AngularGrid, ArrayGeometry, manifold_matrix
from .solvers import (
    MaskedKrOperator,
    RegularizationSet,
    SolverConfig,
    solve_lowrank_completion,
    solve_sparse_source_cov,
    solve_uncorrelated,
    solve_unknown_support,
    solve_joint,
)
from .support import SupportSet

COARSE_SPACING_DEG = 2.5
FINE_SPACING_DEG = 0.5
FINE_MARGIN_DEG = 3.0


@dataclass(frozen=True)
class SpatialSpectrum:
    """Per-grid-angle power estimates (clipped at zero)."""

    grid: AngularGrid
    power: np.ndarray

    def __post_init__(self):
        power = np.asarray(self.power, dtype=float)
        if power.shape != (self.grid.size,):
            raise ValueError("power length does not match the grid")
        power = np.where(power > 0.0, power, 0.0)
        power.setflags(write=False)
        object.__setattr__(self, "power", power)


@dataclass(frozen=True)
class DoaEstimate:
    """Estimated directions (sorted ascending) with their powers."""

    angles_deg: np.ndarray
    powers: np.ndarray
    shortfall: bool = False

    def __post_init__(self):
        ang = np.asarray(self.angles_deg, dtype=float)
        pw = np.asarray(self.powers, dtype=float)
        if ang.shape != pw.shape:
            raise ValueError("angles and powers must have the same length")
        ang.setflags(write=False)
        pw.setflags(write=False)
        object.__setattr__(self, "angles_deg", ang)
        object.__setattr__(self, "powers", pw)


def spectrum_from_matrix(p_hat: np.ndarray, grid: AngularGrid) -> SpatialSpectrum:
    """Spectrum = real diagonal of the grid source covariance."""
    p_hat = np.asarray(p_hat)
    if p_hat.shape != (grid.size, grid.size):
        raise ValueError("matrix dimension does not match the grid")
    return SpatialSpectrum(grid, np.real(np.diag(p_hat)))


def spectrum_from_power(power: np.ndarray, grid: AngularGrid) -> SpatialSpectrum:
    return SpatialSpectrum(grid, np.asarray(power, dtype=float))


def _peak_indices(power: np.ndarray) -> list[int]:
    """Strict local maxima; plateaus contribute their center index (lower
    of the two middles on even length). Array edges count as valleys of
    -inf, and an all-constant spectrum has no peaks."""
    n = power.size
    peaks = []
    if n == 0 or np.all(power == power[0]):
        return peaks
    i = 0
    while i < n:
        j = i
        while j + 1 < n and power[j + 1] == power[i]:
            j += 1
        left = power[i - 1] if i > 0 else -np.inf
        right = power[j + 1] if j + 1 < n else -np.inf
        if power[i] > left and power[i] > right and power[i] > 0.0:
            peaks.append((i + j) // 2)
        i = j + 1
    return peaks


def find_peaks(spectrum: SpatialSpectrum, q: int | None = None,
               min_rel_height: float = 0.1) -> DoaEstimate:
    """Extract source directions from a spectrum.

    With q given, the q largest peaks are returned (fewer than q sets the
    shortfall flag). In auto mode every peak above min_rel_height times
    the maximum power is returned. Ties in power break toward the lower
    angle.
    """
    if q is None and not 0.0 < min_rel_height < 1.0:
        raise ValueError("min_rel_height must be in (0, 1) for auto mode")
    if q is not None and q < 1:
        raise ValueError("q must be >= 1")
    power = spectrum.power
    idx = _peak_indices(power)
    idx.sort(key=lambda i: (-power[i], i))
    shortfall = False
    if q is not None:
        shortfall = len(idx) < q
        idx = idx[:q]
    else:
        floor = min_rel_height * power.max() if power.size else 0.0
        idx = [i for i in idx if power[i] >= floor and power[i] > 0.0]
    idx = sorted(idx)
    return DoaEstimate(spectrum.grid.angles[idx], power[idx], shortfall)


def estimate_doas_uncorrelated(rx_hat: np.ndarray, omega: SupportSet,
                               geom: ArrayGeometry, grid: AngularGrid,
                               lambda_u: float, q: int | None,
                               cfg: SolverConfig = SolverConfig(),
                               operator: MaskedKrOperator | None = None) -> DoaEstimate:
    """End-to-end uncorrelated-source estimator on a fixed grid."""
    a_tilde = manifold_matrix(geom, grid)
    p_hat, _ = solve_uncorrelated(rx_hat, omega, a_tilde, lambda_u, cfg,
                                  operator=operator)
    return find_peaks(spectrum_from_power(p_hat, grid), q=q)


def fine_grid_around(lo_deg: float, hi_deg: float,
                     spacing: float = FINE_SPACING_DEG,
                     margin: float = FINE_MARGIN_DEG) -> AngularGrid:
    """Fine grid over [lo - margin, hi + margin], clamped inside (0, 180)."""
    lo = max(lo_deg - margin, 0.0)
    hi = min(hi_deg + margin, 180.0 - 1e-9)
    count = int(np.floor((hi - lo) / spacing + 1e-9)) + 1
    return AngularGrid(lo + spacing * np.arange(count))


def coarse_to_fine_correlated(rx_hat: np.ndarray, omega: SupportSet,
                              geom: ArrayGeometry,
                              regs: RegularizationSet = RegularizationSet(),
                              cfg: SolverConfig = SolverConfig(),
                              q: int = 2,
                              l_hat: np.ndarray | None = None) -> DoaEstimate:
    """Two-stage estimator for correlated or coherent sources.

    Stage 1 completes the low-rank source term from the off-support
    covariance entries and fits the sparse grid covariance on a coarse
    grid. Stage 2 rebuilds the manifold on a fine grid bracketing the
    coarse peaks (plus a margin) and refits against the same completed
    term. Pass `l_hat` to skip the completion (reused by variants that
    obtain the low-rank term differently).
    """
    if l_hat is None:
        l_hat, _ = solve_lowrank_completion(rx_hat, omega, regs.lambda1, cfg)

    coarse = AngularGrid.uniform(int(round(180.0 / COARSE_SPACING_DEG)))
    a_coarse = manifold_matrix(geom, coarse)
    p_coarse, _ = solve_sparse_source_cov(l_hat, a_coarse, regs.lambda2, cfg)
    stage1 = find_peaks(spectrum_from_matrix(p_coarse, coarse), q=q)
    if stage1.angles_deg.size == 0:
        return stage1

    fine = fine_grid_around(float(stage1.angles_deg.min()),
                            float(stage1.angles_deg.max()))
    a_fine = manifold_matrix(geom, fine)
    p_fine, _ = solve_sparse_source_cov(l_hat, a_fine, regs.lambda2, cfg)
    stage2 = find_peaks(spectrum_from_matrix(p_fine, fine), q=q)
    if stage1.shortfall and not stage2.shortfall:
        stage2 = DoaEstimate(stage2.angles_deg, stage2.powers, shortfall=True)
    return stage2


def estimate_doas_unknown_support(rx_hat: np.ndarray, geom: ArrayGeometry,
                                  regs: RegularizationSet,
                                  cfg: SolverConfig = SolverConfig(),
                                  q: int = 2) -> DoaEstimate:
    """Two-stage estimator when the noise support is unknown: the low-rank
    term comes from the low-rank plus sparse split, the grid stages are
    shared with the known-support path."""
    l_hat, _, _ = solve_unknown_support(rx_hat, regs.gamma_d, regs.lambda_d, cfg)
    # support no longer matters once the low-rank term is in hand; pass a
    # diagonal-only set for interface compatibility
    from .support import band_support

    omega = band_support(geom.m, 0)
    return coarse_to_fine_correlated(rx_hat, omega, geom, regs, cfg, q=q,
                                     l_hat=l_hat)


def estimate_doas_joint(rx_hat: np.ndarray, omega: SupportSet,
                        geom: ArrayGeometry, grid: AngularGrid,
                        regs: RegularizationSet,
                        cfg: SolverConfig = SolverConfig(),
                        q: int | None = 2) -> DoaEstimate:
    """Single-stage estimator through the joint program on a fixed grid."""
    a_tilde = manifold_matrix(geom, grid)
    p_hat, _ = solve_joint(rx_hat, omega, a_tilde, regs.alpha, regs.beta, cfg)
    return find_peaks(spectrum_from_matrix(p_hat, grid), q=q)
