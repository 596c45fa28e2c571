"""Stochastic Cramer-Rao bound for DOA under structured noise covariance.

The bound treats every model quantity as unknown: the source directions,
all real parameters of the source covariance, and the free entries of the
noise covariance on its support. For circular complex Gaussian snapshots
the Fisher information has the trace form

    F_ab = N * tr(R^-1 dR/da R^-1 dR/db),

assembled over that parameter list. Angles enter in radians internally;
the public surface speaks degrees (and degrees^2 for variances).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .arrays import ArrayGeometry
from .hermitian import hermitian_part
from .simulate import NoiseModel, SourceScenario, steering_columns
from .support import SupportSet

RAD2DEG = 180.0 / np.pi


def steering_derivative(geom: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """d a(theta) / d theta in radians^-1.

    Entry k is j*pi*p_k*(-sin theta)*exp(j*pi*p_k*cos theta); the entry of
    a sensor at position zero is always 0.
    """
    if not 0.0 < theta_deg < 180.0:
        raise ValueError(f"theta must be in (0, 180), got {theta_deg}")
    th = np.deg2rad(theta_deg)
    pos = geom.positions
    return 1j * np.pi * pos * (-np.sin(th)) * np.exp(1j * np.pi * pos * np.cos(th))


@dataclass(frozen=True)
class ParameterVector:
    """Flat real parameterization of (thetas, source cov, noise cov).

    Source covariance: q real diagonal entries, then (Re, Im) pairs of the
    upper triangle row by row. Noise covariance: the diagonal, then
    (Re, Im) pairs of the upper-triangle support entries.
    """

    thetas_deg: np.ndarray
    source_cov_params: np.ndarray
    noise_params: np.ndarray

    @property
    def size(self) -> int:
        return (self.thetas_deg.size + self.source_cov_params.size
                + self.noise_params.size)

    @classmethod
    def from_matrices(cls, thetas_deg, rs: np.ndarray, rw: np.ndarray,
                      omega: SupportSet) -> "ParameterVector":
        thetas_deg = np.atleast_1d(np.asarray(thetas_deg, dtype=float))
        q = thetas_deg.size
        sp = [np.real(rs[i, i]) for i in range(q)]
        for i in range(q):
            for j in range(i + 1, q):
                sp += [np.real(rs[i, j]), np.imag(rs[i, j])]
        npar = [np.real(rw[i, i]) for i in range(omega.m)]
        for i, j in _upper_support(omega):
            npar += [np.real(rw[i, j]), np.imag(rw[i, j])]
        return cls(thetas_deg, np.array(sp), np.array(npar))

    def to_matrices(self, omega: SupportSet):
        """Exact reconstruction of (thetas, Rs, Rw)."""
        q = self.thetas_deg.size
        rs = np.zeros((q, q), dtype=complex)
        sp = self.source_cov_params
        rs[np.diag_indices(q)] = sp[:q]
        k = q
        for i in range(q):
            for j in range(i + 1, q):
                rs[i, j] = sp[k] + 1j * sp[k + 1]
                rs[j, i] = sp[k] - 1j * sp[k + 1]
                k += 2
        m = omega.m
        rw = np.zeros((m, m), dtype=complex)
        npar = self.noise_params
        rw[np.diag_indices(m)] = npar[:m]
        k = m
        for i, j in _upper_support(omega):
            rw[i, j] = npar[k] + 1j * npar[k + 1]
            rw[j, i] = npar[k] - 1j * npar[k + 1]
            k += 2
        return self.thetas_deg, rs, rw


def _upper_support(omega: SupportSet):
    iu, ju = np.where(np.triu(omega.mask, 1))
    return list(zip(iu.tolist(), ju.tolist()))


def _basis(m: int, i: int, j: int, value: complex) -> np.ndarray:
    e = np.zeros((m, m), dtype=complex)
    e[i, j] = value
    return e


def covariance_derivatives(scenario: SourceScenario, noise: NoiseModel,
                           geom: ArrayGeometry,
                           fix_source_cov: bool = False) -> list[np.ndarray]:
    """dR/d(parameter) matrices, ordered like ParameterVector.

    Theta derivatives are per radian.
    """
    q, m = scenario.q, geom.m
    rs = scenario.effective_source_cov(noise)
    a = steering_columns(geom, scenario.thetas_deg)
    derivs: list[np.ndarray] = []

    for i in range(q):
        da = np.zeros((m, q), dtype=complex)
        da[:, i] = steering_derivative(geom, float(scenario.thetas_deg[i]))
        d = da @ rs @ a.conj().T
        derivs.append(d + d.conj().T)

    if not fix_source_cov:
        for i in range(q):
            ai = a[:, i:i + 1]
            derivs.append(ai @ ai.conj().T)
        for i in range(q):
            for j in range(i + 1, q):
                er = _basis(q, i, j, 1.0) + _basis(q, j, i, 1.0)
                ei = _basis(q, i, j, 1j) + _basis(q, j, i, -1j)
                derivs.append(a @ er @ a.conj().T)
                derivs.append(a @ ei @ a.conj().T)

    omega = noise.support
    for i in range(m):
        derivs.append(_basis(m, i, i, 1.0))
    for i, j in _upper_support(omega):
        derivs.append(_basis(m, i, j, 1.0) + _basis(m, j, i, 1.0))
        derivs.append(_basis(m, i, j, 1j) + _basis(m, j, i, -1j))
    return derivs


def fisher_information(scenario: SourceScenario, noise: NoiseModel,
                       geom: ArrayGeometry, num_snapshots: int,
                       fix_source_cov: bool = False) -> np.ndarray:
    """Fisher information matrix over the full parameter vector."""
    if scenario.q == 0:
        raise ValueError("scenario has no sources")
    _reject_coherent(scenario)
    rs = scenario.effective_source_cov(noise)
    a = steering_columns(geom, scenario.thetas_deg)
    r = hermitian_part(a @ rs @ a.conj().T + noise.covariance)
    w_eig = np.linalg.eigvalsh(r)
    if w_eig[0] <= 0 or w_eig[0] / w_eig[-1] < 1e-14:
        raise ValueError(
            f"model covariance is numerically singular "
            f"(eigenvalues in [{w_eig[0]:.3e}, {w_eig[-1]:.3e}])"
        )
    r_inv = np.linalg.inv(r)
    derivs = covariance_derivatives(scenario, noise, geom, fix_source_cov)
    whitened = [r_inv @ d for d in derivs]
    num = len(whitened)
    fim = np.empty((num, num))
    for i in range(num):
        wt = whitened[i].T
        for j in range(i, num):
            val = float(np.real(np.sum(wt * whitened[j])))
            fim[i, j] = val
            fim[j, i] = val
    return num_snapshots * fim


def _reject_coherent(scenario: SourceScenario) -> None:
    if scenario.q < 2:
        return
    w = np.linalg.eigvalsh(hermitian_part(scenario.source_cov))
    if w[0] < 1e-12 * max(w[-1], 1e-300):
        raise ValueError(
            "source covariance is singular (coherent sources): the "
            "unknown-source-covariance bound is not defined; use a "
            "correlation magnitude strictly below 1"
        )


def crb_doa(scenario: SourceScenario, noise: NoiseModel, geom: ArrayGeometry,
            num_snapshots: int, fix_source_cov: bool = False) -> np.ndarray:
    """CRB of the DOA estimates in degrees^2 (one entry per source).

    All nuisance parameters (source covariance unless fixed, noise entries
    on the support) are treated as unknown; the bound is the theta block
    of the inverse Fisher information.
    """
    fim = fisher_information(scenario, noise, geom, num_snapshots,
                             fix_source_cov)
    q = scenario.q
    cond = np.linalg.cond(fim)
    if not np.isfinite(cond):
        raise np.linalg.LinAlgError(
            f"Fisher information is singular (condition number {cond})")
    if cond > 1e12:
        warnings.warn(
            f"Fisher information is ill-conditioned (cond {cond:.3e}); "
            f"falling back to a pseudo-inverse", RuntimeWarning)
        fim_inv = np.linalg.pinv(fim)
    else:
        fim_inv = np.linalg.inv(fim)
    crb_rad2 = np.diag(fim_inv)[:q].copy()
    return crb_rad2 * RAD2DEG ** 2
