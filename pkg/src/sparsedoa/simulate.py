"""Source/noise scenario types, snapshot simulation and sample covariances.

The data model is x(n) = A s(n) + w(n) with zero-mean circularly symmetric
complex Gaussian sources and noise. SNR is defined as

    snr_db = 10*log10(per-source power / mean noise variance),

so with a unit noise diagonal, 0 dB means unit-power sources. The scenario
`source_cov` carries the correlation structure (unit diagonal for equal
powers); the simulator scales it by the SNR-derived power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry, steering_vector
from .hermitian import hermitian_part, is_hermitian, check_psd, psd_sqrt
from .support import SupportSet, band_support


@dataclass(frozen=True)
class NoiseModel:
    """Noise covariance together with its permitted support."""

    covariance: np.ndarray
    support: SupportSet

    def __post_init__(self):
        cov = hermitian_part(np.asarray(self.covariance, dtype=complex))
        if cov.shape != (self.support.m, self.support.m):
            raise ValueError("covariance shape does not match support")
        violation = self.support.violation(cov)
        if violation > 1e-12:
            raise ValueError(
                f"covariance has entries outside the support "
                f"(largest magnitude {violation:.3e})"
            )
        check_psd(cov, what="noise covariance")
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @property
    def m(self) -> int:
        return self.support.m

    def mean_variance(self) -> float:
        return float(np.real(np.diag(self.covariance)).mean())


def tridiagonal_noise_covariance(m: int, diag_var: float,
                                 offdiag: complex) -> NoiseModel:
    """Adjacent-sensor coupling model: constant diagonal and first
    off-diagonals, zero elsewhere. Rejects non-PSD parameter choices."""
    if m < 2:
        raise ValueError("m must be >= 2")
    cov = np.zeros((m, m), dtype=complex)
    np.fill_diagonal(cov, diag_var)
    idx = np.arange(m - 1)
    cov[idx, idx + 1] = offdiag
    cov[idx + 1, idx] = np.conj(offdiag)
    return NoiseModel(covariance=cov, support=band_support(m, 1))


@dataclass(frozen=True)
class SourceScenario:
    """Source directions, correlation structure and SNR.

    `source_cov` is the q x q correlation structure; the simulator and the
    bound computations scale it to source power according to `snr_db` and
    the noise floor. q = 0 (no sources) gives a noise-only scenario.
    """

    thetas_deg: np.ndarray
    source_cov: np.ndarray
    snr_db: float

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.thetas_deg, dtype=float))
        cov = np.asarray(self.source_cov, dtype=complex)
        if cov.shape != (th.size, th.size):
            raise ValueError("source_cov must be q x q")
        if th.size:
            if not is_hermitian(cov):
                raise ValueError("source_cov must be Hermitian")
            check_psd(cov, what="source covariance")
        th.setflags(write=False)
        cov = cov.copy()
        cov.setflags(write=False)
        object.__setattr__(self, "thetas_deg", th)
        object.__setattr__(self, "source_cov", cov)

    @property
    def q(self) -> int:
        return self.thetas_deg.size

    @classmethod
    def uncorrelated(cls, thetas_deg, snr_db: float) -> "SourceScenario":
        th = np.atleast_1d(np.asarray(thetas_deg, dtype=float))
        return cls(th, np.eye(th.size, dtype=complex), snr_db)

    @classmethod
    def correlated_pair(cls, theta1_deg: float, theta2_deg: float,
                        correlation: complex, snr_db: float) -> "SourceScenario":
        cov = np.array([[1.0, correlation],
                        [np.conj(correlation), 1.0]], dtype=complex)
        return cls(np.array([theta1_deg, theta2_deg]), cov, snr_db)

    @classmethod
    def noise_only(cls) -> "SourceScenario":
        return cls(np.empty(0), np.empty((0, 0), dtype=complex), 0.0)

    def source_power(self, noise: NoiseModel) -> float:
        """Per-source power implied by snr_db against the noise floor."""
        return 10.0 ** (self.snr_db / 10.0) * noise.mean_variance()

    def effective_source_cov(self, noise: NoiseModel) -> np.ndarray:
        return self.source_power(noise) * self.source_cov


def steering_columns(geom: ArrayGeometry, thetas_deg) -> np.ndarray:
    """Steering vectors stacked as columns, in the order given."""
    thetas_deg = np.atleast_1d(np.asarray(thetas_deg, dtype=float))
    if thetas_deg.size == 0:
        return np.zeros((geom.m, 0), dtype=complex)
    return np.stack([steering_vector(geom, t) for t in thetas_deg], axis=1)


def true_covariance(scenario: SourceScenario, noise: NoiseModel,
                    geom: ArrayGeometry) -> np.ndarray:
    """Exact snapshot covariance A Rs A^H + Rw for the scenario."""
    rs = scenario.effective_source_cov(noise)
    a = steering_columns(geom, scenario.thetas_deg)
    return hermitian_part(a @ rs @ a.conj().T + noise.covariance)


def simulate_snapshots(scenario: SourceScenario, noise: NoiseModel,
                       geom: ArrayGeometry, num_snapshots: int,
                       seed: int) -> np.ndarray:
    """Draw an (m, N) snapshot matrix. Deterministic for a given seed.

    Sources and noise are coloured through Hermitian square roots of their
    covariances, so coherent (rank-deficient) source models are fine.
    """
    if num_snapshots < 1:
        raise ValueError("num_snapshots must be >= 1")
    if noise.m != geom.m:
        raise ValueError("noise model dimension does not match geometry")
    if scenario.q >= geom.m:
        raise ValueError("number of sources must be smaller than the array")
    a = steering_columns(geom, scenario.thetas_deg)

    rng = np.random.default_rng(seed)
    m, n, q = geom.m, num_snapshots, scenario.q

    x = np.zeros((m, n), dtype=complex)
    if q:
        ls = psd_sqrt(scenario.effective_source_cov(noise))
        s = (rng.standard_normal((q, n)) + 1j * rng.standard_normal((q, n)))
        x += a @ (ls @ s) / np.sqrt(2.0)
    lw = psd_sqrt(noise.covariance)
    w = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
    x += lw @ w / np.sqrt(2.0)
    return x


def sample_covariance(snapshots: np.ndarray) -> np.ndarray:
    """(1/N) sum of snapshot outer products; Hermitian PSD by construction."""
    snapshots = np.asarray(snapshots)
    if snapshots.ndim != 2 or snapshots.shape[1] < 1:
        raise ValueError("snapshots must be an (m, N) matrix with N >= 1")
    n = snapshots.shape[1]
    return hermitian_part(snapshots @ snapshots.conj().T / n)
