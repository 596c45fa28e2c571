"""ADMM solvers for the covariance decomposition programs.

Five convex programs are covered, all over Hermitian PSD variables with
non-squared data fidelity terms:

  * masked low-rank completion of the source term,
        min ||X||_* + lambda1*||offsupport(X - Rx)||_F,  X >= 0
  * sparse source-covariance fit against a completed low-rank term,
        min ||P||_1 + lambda2*||L - A P A^H||_F,  P >= 0
  * the joint program combining both,
        min ||A P A^H||_* + alpha*||P||_1
            + beta*||offsupport(A P A^H - Rx)||_F,  P >= 0
  * the nonnegative square-root LASSO over the lifted manifold for
    uncorrelated sources,
        min ||p||_1 + lambda_u*||offsupport_vec(KR p - vect(Rx))||_2,  p >= 0
  * the unknown-support split into low-rank plus sparse PSD parts,
        min ||L||_* + gamma_d*||S||_1 + lambda_d*||Rx - L - S||_F,
        L >= 0, S >= 0.

Every objective here is positively homogeneous of degree 1 in (variable,
data) jointly, so each solver normalizes its data matrix to unit Frobenius
norm, solves, and rescales the estimate; penalties are therefore tuned on
a fixed scale. Reported residuals are on the normalized problem, reported
objectives on the original scale.

All sub-steps are exact proximal maps; the PSD constraints get their own
splitting variable wherever the combined prox has no closed form, so the
iterations carry no inner approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import khatri_rao_manifold
from .hermitian import hermitian_part, nuclear_norm
from .kernels import sqrt_lasso_admm
from .prox import (
    project_psd,
    prox_nuclear_psd,
    prox_nuclear_hermitian,
    prox_l2_block,
    soft_threshold,
    support_projection,
)
from .support import SupportSet

# Over-relaxation factor, inside the (0, 2) range required for convergence.
OVER_RELAXATION = 1.8
# Penalties on unit-Frobenius data, chosen so support identification
# happens within a few hundred iterations (a penalty of 1 stalls for
# thousands of iterations on fine grids); cfg.admm_penalty multiplies them.
SQRT_LASSO_PENALTY = 40.0
GRID_COV_PENALTY = 10.0
BALANCE_EVERY = 50
# Residual/stopping checks for the grid-covariance solvers carry extra
# manifold transforms, so they run on a cadence.
CHECK_EVERY = 10


@dataclass(frozen=True)
class SolverConfig:
    """Iteration and tolerance knobs shared by all solvers."""

    max_iter: int = 5000
    tol_primal: float = 1e-6
    tol_dual: float = 1e-6
    admm_penalty: float = 1.0
    verbose: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise ValueError("tolerances must be > 0")
        if self.admm_penalty <= 0:
            raise ValueError("admm_penalty must be > 0")


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    converged: bool
    history: tuple | None = None


@dataclass(frozen=True)
class RegularizationSet:
    """Weights of the five programs. Entries default to the numerically
    tuned values of the reference scenarios where such values exist."""

    lambda1: float = 10.0
    lambda2: float = 5.0
    alpha: float | None = None
    beta: float | None = None
    lambda_u: float = 0.54
    gamma_d: float | None = None
    lambda_d: float | None = None


def _require_positive(name: str, value) -> float:
    if value is None or value <= 0:
        raise ValueError(f"regularization {name} must be set and > 0")
    return float(value)


# ---------------------------------------------------------------------------
# shared pieces


def _masked_fidelity_prox(v: np.ndarray, data_off: np.ndarray,
                          mask: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*||offsupport(. - data)||_F at v.

    Entries on the support are free (kept); off-support entries shrink
    radially toward the data.
    """
    w = np.where(mask, 0.0, v - data_off)
    wn = np.linalg.norm(w)
    if wn <= t:
        shrunk = np.zeros_like(w)
    else:
        shrunk = w * (1.0 - t / wn)
    return np.where(mask, v, data_off + shrunk)


class _SteinSolver:
    """Solves  c0 * P + c1 * G P G = RHS  for Hermitian P, where
    G = A^H A, via one eigendecomposition of G."""

    def __init__(self, a_tilde: np.ndarray, c0: float, c1: float):
        g = hermitian_part(a_tilde.conj().T @ a_tilde)
        d, v = np.linalg.eigh(g)
        self._v = v
        self._denom = c0 + c1 * np.outer(d, d)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        v = self._v
        core = (v.conj().T @ rhs @ v) / self._denom
        return hermitian_part(v @ core @ v.conj().T)


def _balance(rho: float, rn: float, sn: float, duals: list) -> float:
    """Residual balancing: double/halve the penalty at 10x imbalance and
    rescale the scaled duals to keep the multipliers unchanged."""
    if rn > 10.0 * sn:
        rho *= 2.0
        for u in duals:
            u /= 2.0
    elif sn > 10.0 * rn:
        rho /= 2.0
        for u in duals:
            u *= 2.0
    return rho


def _finish(estimate, cfg, it, rn, sn, eps_pri, eps_dua, objective, history):
    converged = bool(rn <= eps_pri and sn <= eps_dua)
    report = SolverReport(
        iterations=it,
        primal_residual=float(rn),
        dual_residual=float(sn),
        objective=float(objective),
        converged=converged,
        history=tuple(history) if cfg.verbose else None,
    )
    return estimate, report


# ---------------------------------------------------------------------------
# masked low-rank completion


def lowrank_completion_objective(x: np.ndarray, rx_hat: np.ndarray,
                                 omega: SupportSet, lambda1: float) -> float:
    fid = np.linalg.norm(support_projection(x - rx_hat, omega))
    return nuclear_norm(x) + lambda1 * fid


def solve_lowrank_completion(rx_hat: np.ndarray, omega: SupportSet,
                             lambda1: float, cfg: SolverConfig = SolverConfig()):
    """Recover the low-rank source term from off-support covariance entries.

    Two-block ADMM: the nuclear-norm-plus-PSD prox on one side, the masked
    fidelity prox on the other.
    """
    lambda1 = _require_positive("lambda1", lambda1)
    m = omega.m
    rx_hat = hermitian_part(np.asarray(rx_hat, dtype=complex))
    if rx_hat.shape != (m, m):
        raise ValueError("covariance shape does not match support")

    scale = np.linalg.norm(rx_hat)
    if scale == 0.0:
        report = SolverReport(0, 0.0, 0.0, 0.0, True, None)
        return np.zeros((m, m), dtype=complex), report
    rx = rx_hat / scale
    mask = omega.mask
    data_off = np.where(mask, 0.0, rx)

    rho = cfg.admm_penalty
    alpha = OVER_RELAXATION
    x = np.zeros((m, m), dtype=complex)
    z = np.zeros_like(x)
    u = np.zeros_like(x)
    sq = np.sqrt(2.0) * m  # sqrt of real dimension of the constraint space
    history = []
    rn = sn = np.inf
    eps_pri = eps_dua = 0.0
    for it in range(1, cfg.max_iter + 1):
        x = prox_nuclear_psd(z - u, 1.0 / rho)
        x_r = alpha * x + (1.0 - alpha) * z
        z_old = z
        z = _masked_fidelity_prox(x_r + u, data_off, mask, lambda1 / rho)
        u = u + x_r - z
        rn = np.linalg.norm(x - z)
        sn = rho * np.linalg.norm(z - z_old)
        eps_pri = sq * cfg.tol_primal + cfg.tol_primal * max(
            np.linalg.norm(x), np.linalg.norm(z))
        eps_dua = sq * cfg.tol_dual + cfg.tol_dual * rho * np.linalg.norm(u)
        if cfg.verbose:
            history.append((it, float(rn), float(sn)))
        if rn < eps_pri and sn < eps_dua:
            break
        if it % BALANCE_EVERY == 0:
            rho = _balance(rho, rn, sn, [u])

    estimate = project_psd(x) * scale
    obj = lowrank_completion_objective(estimate, rx_hat, omega, lambda1)
    return _finish(estimate, cfg, it, rn, sn, eps_pri, eps_dua, obj, history)


# ---------------------------------------------------------------------------
# sparse source covariance against a completed low-rank term


def sparse_source_cov_objective(p: np.ndarray, l_hat: np.ndarray,
                                a_tilde: np.ndarray, lambda2: float) -> float:
    fit = l_hat - a_tilde @ p @ a_tilde.conj().T
    return float(np.sum(np.abs(p))) + lambda2 * np.linalg.norm(fit)


def solve_sparse_source_cov(l_hat: np.ndarray, a_tilde: np.ndarray,
                            lambda2: float, cfg: SolverConfig = SolverConfig()):
    """Fit a sparse PSD source covariance on the grid to a low-rank term.

    Splitting: copies for the entrywise l1 prox and the PSD projection,
    plus a transform-domain variable for the fidelity term; the coupling
    step is a Stein equation solved through the manifold Gram spectrum.
    """
    lambda2 = _require_positive("lambda2", lambda2)
    m, num_cols = a_tilde.shape
    l_hat = hermitian_part(np.asarray(l_hat, dtype=complex))
    if l_hat.shape != (m, m):
        raise ValueError("low-rank term shape does not match the manifold")

    scale = np.linalg.norm(l_hat)
    if scale == 0.0:
        report = SolverReport(0, 0.0, 0.0, 0.0, True, None)
        return np.zeros((num_cols, num_cols), dtype=complex), report
    l_n = l_hat / scale

    stein = _SteinSolver(a_tilde, c0=2.0, c1=1.0)
    ah = a_tilde.conj().T

    rho = GRID_COV_PENALTY * cfg.admm_penalty
    alpha = OVER_RELAXATION
    shape_p = (num_cols, num_cols)
    p = np.zeros(shape_p, dtype=complex)
    p1 = np.zeros(shape_p, dtype=complex)
    p2 = np.zeros(shape_p, dtype=complex)
    y = np.zeros((m, m), dtype=complex)
    u1 = np.zeros(shape_p, dtype=complex)
    u2 = np.zeros(shape_p, dtype=complex)
    u3 = np.zeros((m, m), dtype=complex)
    sq = np.sqrt(2.0 * (2 * num_cols ** 2 + m ** 2))
    history = []
    rn = sn = np.inf
    eps_pri = eps_dua = 0.0
    for it in range(1, cfg.max_iter + 1):
        check = (it % CHECK_EVERY == 0) or (it == cfg.max_iter)
        rhs = (p1 - u1) + (p2 - u2) + ah @ (y - u3) @ a_tilde
        p = stein.solve(hermitian_part(rhs))
        kp = a_tilde @ p @ ah
        p1_old, p2_old, y_old = p1, p2, y
        p1_r = alpha * p + (1.0 - alpha) * p1
        p2_r = alpha * p + (1.0 - alpha) * p2
        y_r = alpha * kp + (1.0 - alpha) * y
        p1 = soft_threshold(p1_r + u1, 1.0 / rho)
        p2 = project_psd(p2_r + u2)
        y = l_n + prox_l2_block((y_r + u3) - l_n, lambda2 / rho)
        u1 = u1 + p1_r - p1
        u2 = u2 + p2_r - p2
        u3 = u3 + y_r - y
        if not check:
            continue
        rn = np.sqrt(np.linalg.norm(p - p1) ** 2 + np.linalg.norm(p - p2) ** 2
                     + np.linalg.norm(kp - y) ** 2)
        dz = (p1 - p1_old) + (p2 - p2_old) + ah @ (y - y_old) @ a_tilde
        sn = rho * np.linalg.norm(dz)
        x_scale = np.sqrt(2 * np.linalg.norm(p) ** 2 + np.linalg.norm(kp) ** 2)
        z_scale = np.sqrt(np.linalg.norm(p1) ** 2 + np.linalg.norm(p2) ** 2
                          + np.linalg.norm(y) ** 2)
        du = u1 + u2 + ah @ u3 @ a_tilde
        eps_pri = sq * cfg.tol_primal + cfg.tol_primal * max(x_scale, z_scale)
        eps_dua = sq * cfg.tol_dual + cfg.tol_dual * rho * np.linalg.norm(du)
        if cfg.verbose:
            history.append((it, float(rn), float(sn)))
        if rn < eps_pri and sn < eps_dua:
            break
        if it % BALANCE_EVERY == 0:
            rho = _balance(rho, rn, sn, [u1, u2, u3])

    estimate = project_psd(p) * scale
    obj = sparse_source_cov_objective(estimate, l_hat, a_tilde, lambda2)
    return _finish(estimate, cfg, it, rn, sn, eps_pri, eps_dua, obj, history)


# ---------------------------------------------------------------------------
# joint program


def joint_objective(p: np.ndarray, rx_hat: np.ndarray, omega: SupportSet,
                    a_tilde: np.ndarray, alpha: float, beta: float) -> float:
    kp = a_tilde @ p @ a_tilde.conj().T
    fid = np.linalg.norm(support_projection(kp - rx_hat, omega))
    return (nuclear_norm(kp) + alpha * float(np.sum(np.abs(p)))
            + beta * fid)


def solve_joint(rx_hat: np.ndarray, omega: SupportSet, a_tilde: np.ndarray,
                alpha: float, beta: float, cfg: SolverConfig = SolverConfig()):
    """Solve directly for the grid source covariance, skipping the
    completion stage. Same machinery as the two-step pieces with two
    transform-domain variables (nuclear norm and masked fidelity)."""
    alpha = _require_positive("alpha", alpha)
    beta = _require_positive("beta", beta)
    m, num_cols = a_tilde.shape
    rx_hat = hermitian_part(np.asarray(rx_hat, dtype=complex))
    if rx_hat.shape != (m, m) or omega.m != m:
        raise ValueError("covariance/support shapes do not match the manifold")

    scale = np.linalg.norm(rx_hat)
    if scale == 0.0:
        report = SolverReport(0, 0.0, 0.0, 0.0, True, None)
        return np.zeros((num_cols, num_cols), dtype=complex), report
    rx = rx_hat / scale
    mask = omega.mask
    data_off = np.where(mask, 0.0, rx)

    stein = _SteinSolver(a_tilde, c0=2.0, c1=2.0)
    ah = a_tilde.conj().T

    rho = GRID_COV_PENALTY * cfg.admm_penalty
    relax = OVER_RELAXATION
    shape_p = (num_cols, num_cols)
    p = np.zeros(shape_p, dtype=complex)
    p1 = np.zeros(shape_p, dtype=complex)
    p2 = np.zeros(shape_p, dtype=complex)
    y1 = np.zeros((m, m), dtype=complex)
    y2 = np.zeros((m, m), dtype=complex)
    u1 = np.zeros(shape_p, dtype=complex)
    u2 = np.zeros(shape_p, dtype=complex)
    v1 = np.zeros((m, m), dtype=complex)
    v2 = np.zeros((m, m), dtype=complex)
    sq = np.sqrt(2.0 * (2 * num_cols ** 2 + 2 * m ** 2))
    history = []
    rn = sn = np.inf
    eps_pri = eps_dua = 0.0
    for it in range(1, cfg.max_iter + 1):
        check = (it % CHECK_EVERY == 0) or (it == cfg.max_iter)
        rhs = (p1 - u1) + (p2 - u2) + ah @ ((y1 - v1) + (y2 - v2)) @ a_tilde
        p = stein.solve(hermitian_part(rhs))
        kp = a_tilde @ p @ ah
        p1_old, p2_old, y1_old, y2_old = p1, p2, y1, y2
        p1_r = relax * p + (1.0 - relax) * p1
        p2_r = relax * p + (1.0 - relax) * p2
        y1_r = relax * kp + (1.0 - relax) * y1
        y2_r = relax * kp + (1.0 - relax) * y2
        p1 = soft_threshold(p1_r + u1, alpha / rho)
        p2 = project_psd(p2_r + u2)
        y1 = prox_nuclear_hermitian(y1_r + v1, 1.0 / rho)
        y2 = _masked_fidelity_prox(y2_r + v2, data_off, mask, beta / rho)
        u1 = u1 + p1_r - p1
        u2 = u2 + p2_r - p2
        v1 = v1 + y1_r - y1
        v2 = v2 + y2_r - y2
        if not check:
            continue
        rn = np.sqrt(np.linalg.norm(p - p1) ** 2 + np.linalg.norm(p - p2) ** 2
                     + np.linalg.norm(kp - y1) ** 2 + np.linalg.norm(kp - y2) ** 2)
        dz = ((p1 - p1_old) + (p2 - p2_old)
              + ah @ ((y1 - y1_old) + (y2 - y2_old)) @ a_tilde)
        sn = rho * np.linalg.norm(dz)
        x_scale = np.sqrt(2 * np.linalg.norm(p) ** 2 + 2 * np.linalg.norm(kp) ** 2)
        z_scale = np.sqrt(np.linalg.norm(p1) ** 2 + np.linalg.norm(p2) ** 2
                          + np.linalg.norm(y1) ** 2 + np.linalg.norm(y2) ** 2)
        du = u1 + u2 + ah @ (v1 + v2) @ a_tilde
        eps_pri = sq * cfg.tol_primal + cfg.tol_primal * max(x_scale, z_scale)
        eps_dua = sq * cfg.tol_dual + cfg.tol_dual * rho * np.linalg.norm(du)
        if cfg.verbose:
            history.append((it, float(rn), float(sn)))
        if rn < eps_pri and sn < eps_dua:
            break
        if it % BALANCE_EVERY == 0:
            rho = _balance(rho, rn, sn, [u1, u2, v1, v2])

    estimate = project_psd(p) * scale
    obj = joint_objective(estimate, rx_hat, omega, a_tilde, alpha, beta)
    return _finish(estimate, cfg, it, rn, sn, eps_pri, eps_dua, obj, history)


# ---------------------------------------------------------------------------
# uncorrelated sources: nonnegative square-root LASSO on the lifted manifold


@dataclass(frozen=True, eq=False)
class MaskedKrOperator:
    """Off-support rows of the lifted manifold, precomputed once per
    (manifold, support) pair so Monte-Carlo sweeps can reuse them."""

    dictionary: np.ndarray       # (k, M) complex, k = m^2 - |Omega|
    embedding: np.ndarray        # (2k, M) real
    embedding_t: np.ndarray      # (M, 2k) real
    woodbury_inv: np.ndarray     # (2k, 2k) real, inv(I + E E^T)
    row_selector: np.ndarray     # boolean (m^2,), True off support

    @classmethod
    def build(cls, a_tilde: np.ndarray, omega: SupportSet) -> "MaskedKrOperator":
        if a_tilde.shape[0] != omega.m:
            raise ValueError("manifold rows do not match support dimension")
        kr = khatri_rao_manifold(a_tilde)
        sel = ~omega.vec_mask()
        d = np.ascontiguousarray(kr[sel])
        e = np.ascontiguousarray(np.vstack([d.real, d.imag]))
        et = np.ascontiguousarray(e.T)
        two_k = e.shape[0]
        winv = np.linalg.inv(np.eye(two_k) + e @ e.T)
        return cls(d, e, et, winv, sel)

    def target(self, rx_hat: np.ndarray) -> np.ndarray:
        """Real embedding of the off-support entries of vect(rx_hat)."""
        c = rx_hat.flatten(order="F")[self.row_selector]
        return np.concatenate([c.real, c.imag])


def uncorrelated_objective(p: np.ndarray, rx_hat: np.ndarray,
                           omega: SupportSet, a_tilde: np.ndarray,
                           lambda_u: float) -> float:
    op = MaskedKrOperator.build(a_tilde, omega)
    resid = op.dictionary @ p - rx_hat.flatten(order="F")[op.row_selector]
    return float(np.sum(np.abs(p))) + lambda_u * float(np.linalg.norm(resid))


def solve_uncorrelated(rx_hat: np.ndarray, omega: SupportSet,
                       a_tilde: np.ndarray, lambda_u: float,
                       cfg: SolverConfig = SolverConfig(),
                       operator: MaskedKrOperator | None = None):
    """Estimate the per-grid-angle power vector for uncorrelated sources.

    The masked lifted-manifold system is a nonnegative square-root LASSO;
    the hot loop lives in `kernels` (numba or numpy backend). The penalty
    cancels out of the quadratic update, so the cached Woodbury factor
    survives penalty rescaling.
    """
    lambda_u = _require_positive("lambda_u", lambda_u)
    m, num_cols = a_tilde.shape
    rx_hat = hermitian_part(np.asarray(rx_hat, dtype=complex))
    if rx_hat.shape != (m, m) or omega.m != m:
        raise ValueError("covariance/support shapes do not match the manifold")
    if operator is None:
        operator = MaskedKrOperator.build(a_tilde, omega)

    c2 = operator.target(rx_hat)
    scale = np.linalg.norm(c2)
    if scale == 0.0:
        report = SolverReport(0, 0.0, 0.0, 0.0, True, None)
        return np.zeros(num_cols), report

    p, it, rn, sn, rho, converged = sqrt_lasso_admm(
        operator.embedding, operator.embedding_t, operator.woodbury_inv,
        c2 / scale, lambda_u,
        rho=SQRT_LASSO_PENALTY * cfg.admm_penalty,
        alpha=OVER_RELAXATION,
        max_iter=cfg.max_iter,
        abstol=min(cfg.tol_primal, cfg.tol_dual) / 10.0,
        reltol=min(cfg.tol_primal, cfg.tol_dual) * 10.0,
    )
    estimate = p * scale
    obj = (float(np.sum(np.abs(estimate))) + lambda_u * float(
        np.linalg.norm(operator.dictionary @ estimate
                       - rx_hat.flatten(order="F")[operator.row_selector])))
    report = SolverReport(
        iterations=int(it),
        primal_residual=float(rn),
        dual_residual=float(sn),
        objective=obj,
        converged=bool(converged),
        history=None,
    )
    return estimate, report


# ---------------------------------------------------------------------------
# unknown support: low-rank plus sparse PSD split


def unknown_support_objective(l_mat: np.ndarray, s_mat: np.ndarray,
                              rx_hat: np.ndarray, gamma_d: float,
                              lambda_d: float) -> float:
    return (nuclear_norm(l_mat) + gamma_d * float(np.sum(np.abs(s_mat)))
            + lambda_d * float(np.linalg.norm(rx_hat - l_mat - s_mat)))


def solve_unknown_support(rx_hat: np.ndarray, gamma_d: float, lambda_d: float,
                          cfg: SolverConfig = SolverConfig()):
    """Split a covariance into low-rank PSD plus sparse PSD parts without
    knowing the sparsity pattern.

    Consensus ADMM over three exact prox blocks on the pair (L, S):
    nuclear-plus-PSD together with the l1 term, the PSD cone for S, and
    the non-squared fidelity of the sum (closed form because the sum map
    satisfies T T^* = 2 I).
    """
    gamma_d = _require_positive("gamma_d", gamma_d)
    lambda_d = _require_positive("lambda_d", lambda_d)
    m = rx_hat.shape[0]
    rx_hat = hermitian_part(np.asarray(rx_hat, dtype=complex))

    scale = np.linalg.norm(rx_hat)
    if scale == 0.0:
        report = SolverReport(0, 0.0, 0.0, 0.0, True, None)
        zero = np.zeros((m, m), dtype=complex)
        return zero, zero.copy(), report
    rx = rx_hat / scale

    def prox_block0(lm, sm, t):
        return prox_nuclear_psd(lm, t), soft_threshold(sm, gamma_d * t)

    def prox_block1(lm, sm, t):
        return lm, project_psd(sm)

    def prox_block2(lm, sm, t):
        total = lm + sm
        shrunk = prox_l2_block(total - rx, 2.0 * t * lambda_d)
        delta = (rx + shrunk - total) / 2.0
        return lm + delta, sm + delta

    blocks = (prox_block0, prox_block1, prox_block2)
    nb = len(blocks)
    z = np.zeros((2, m, m), dtype=complex)
    xs = [np.zeros_like(z) for _ in range(nb)]
    us = [np.zeros_like(z) for _ in range(nb)]
    rho = cfg.admm_penalty
    sq = np.sqrt(2.0 * nb) * np.sqrt(2.0) * m
    history = []
    rn = sn = np.inf
    eps_pri = eps_dua = 0.0
    for it in range(1, cfg.max_iter + 1):
        for i, blk in enumerate(blocks):
            win = z - us[i]
            lm, sm = blk(win[0], win[1], 1.0 / rho)
            xs[i][0], xs[i][1] = lm, sm
        z_old = z
        z = sum(xs[i] + us[i] for i in range(nb)) / nb
        z[0] = hermitian_part(z[0])
        z[1] = hermitian_part(z[1])
        for i in range(nb):
            us[i] = us[i] + xs[i] - z
        rn = np.sqrt(sum(np.linalg.norm(xs[i] - z) ** 2 for i in range(nb)))
        sn = rho * np.sqrt(nb) * np.linalg.norm(z - z_old)
        x_scale = np.sqrt(sum(np.linalg.norm(xs[i]) ** 2 for i in range(nb)))
        z_scale = np.sqrt(nb) * np.linalg.norm(z)
        du = np.sqrt(sum(np.linalg.norm(us[i]) ** 2 for i in range(nb)))
        eps_pri = sq * cfg.tol_primal + cfg.tol_primal * max(x_scale, z_scale)
        eps_dua = sq * cfg.tol_dual + cfg.tol_dual * rho * du
        if cfg.verbose:
            history.append((it, float(rn), float(sn)))
        if rn < eps_pri and sn < eps_dua:
            break
        if it % BALANCE_EVERY == 0:
            rho = _balance(rho, rn, sn, us)

    l_hat = project_psd(z[0]) * scale
    s_hat = project_psd(z[1]) * scale
    obj = unknown_support_objective(l_hat, s_hat, rx_hat, gamma_d, lambda_d)
    converged = bool(rn <= eps_pri and sn <= eps_dua)
    report = SolverReport(it, float(rn), float(sn), float(obj), converged,
                          tuple(history) if cfg.verbose else None)
    return l_hat, s_hat, report


# ---------------------------------------------------------------------------
# data-driven regularization weight for the square-root LASSO


def lambda_u_rule(a_tilde: np.ndarray, omega: SupportSet,
                  n_trials: int = 300, seed: int = 0) -> float:
    """Pivotal weight for the square-root LASSO over the masked lift.

    Simulates the score statistic: for a standard circular Gaussian
    residual g on the off-support rows, take the maximum over grid columns
    of |d_j^H g| / (||d_j|| ||g||); the weight is

        1 / (1.1 * mean_max_score * sqrt(m^2 - |Omega|)).

    Deterministic for a fixed seed.
    """
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100 for a stable estimate")
    op = MaskedKrOperator.build(a_tilde, omega)
    d = op.dictionary
    k = d.shape[0]
    col_norms = np.linalg.norm(d, axis=0)
    dh = d.conj().T
    rng = np.random.default_rng(seed)
    maxima = np.empty(n_trials)
    for t in range(n_trials):
        g = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
        scores = np.abs(dh @ g) / (col_norms * np.linalg.norm(g))
        maxima[t] = scores.max()
    score_inf = float(maxima.mean())
    return 1.0 / (1.1 * score_inf * np.sqrt(k))
