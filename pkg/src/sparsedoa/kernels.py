"""Hot inner loop for the nonnegative square-root LASSO solver.

The loop runs on a real embedding of the complex least-squares operator:
a complex k x M dictionary D becomes E = [Re D; Im D] (2k x M real), which
halves the arithmetic of every matvec while keeping the geometry exact
(norms and real inner products are preserved).

The same Python function is compiled with numba when available; the pure
numpy version is the fallback and the reference. Selection happens per
call through the SPARSEDOA_NO_NUMBA environment variable, so the two
paths can be benchmarked against each other in one process.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

ENV_FLAG = "SPARSEDOA_NO_NUMBA"


def numba_enabled() -> bool:
    """True when the jitted path will be used for kernel calls."""
    if not _HAVE_NUMBA:
        return False
    return os.environ.get(ENV_FLAG, "0").lower() not in ("1", "true", "yes")


def _sqrt_lasso_loop(e, et, winv, c2, lam, rho, alpha, max_iter,
                     abstol, reltol, check_every, balance_every):
    """ADMM for  min ||p||_1 + lam*||E p - c2||_2  over p >= 0.

    e:    (2k, M) real dictionary embedding, columns assumed same norm scale
    et:   e transposed, contiguous
    winv: (2k, 2k) inverse of (I + E E^T); the p-update uses the Woodbury
          identity so no M x M factorization is ever formed
    c2:   (2k,) real embedding of the target vector
    rho:  ADMM penalty; it cancels in the p-update, so rescaling it never
          invalidates winv
    alpha: over-relaxation in (0, 2)

    Returns (p, iterations, primal_residual, dual_residual, rho, converged).
    """
    two_k, m_cols = e.shape
    q = np.zeros(m_cols)
    u1 = np.zeros(m_cols)
    r = np.zeros(two_k)
    u2 = np.zeros(two_k)
    q_prev = np.zeros(m_cols)
    r_prev = np.zeros(two_k)

    sq_pri = np.sqrt(m_cols + two_k)
    sq_dua = np.sqrt(m_cols)
    cn2 = np.sum(c2 * c2)

    rn = np.inf
    sn = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        check = (it % check_every == 0) or (it == max_iter)
        if check:
            q_prev[:] = q
            r_prev[:] = r

        v = (q - u1) + et @ (r + c2 - u2)
        y = winv @ (e @ v)
        p = v - et @ y
        ep = e @ p

        p_r = alpha * p + (1.0 - alpha) * q
        ep_r = alpha * ep + (1.0 - alpha) * (r + c2)

        q = np.maximum(p_r + u1 - 1.0 / rho, 0.0)
        t = ep_r - c2 + u2
        tn = np.sqrt(np.sum(t * t))
        thr = lam / rho
        if tn <= thr:
            r = np.zeros(two_k)
        else:
            r = t * (1.0 - thr / tn)
        u1 = u1 + p_r - q
        u2 = u2 + ep_r - r - c2

        if check:
            e1 = p - q
            e2 = ep - r - c2
            rn = np.sqrt(np.sum(e1 * e1) + np.sum(e2 * e2))
            dz = (q - q_prev) + et @ (r - r_prev)
            sn = rho * np.sqrt(np.sum(dz * dz))
            p_scale = np.sqrt(np.sum(p * p) + np.sum(ep * ep))
            z_scale = np.sqrt(np.sum(q * q) + np.sum(r * r) + cn2)
            du = u1 + et @ u2
            eps_pri = sq_pri * abstol + reltol * max(p_scale, z_scale)
            eps_dua = sq_dua * abstol + reltol * rho * np.sqrt(np.sum(du * du))
            if rn < eps_pri and sn < eps_dua:
                converged = True
                break
            if it % balance_every == 0:
                if rn > 10.0 * sn:
                    rho *= 2.0
                    u1 /= 2.0
                    u2 /= 2.0
                elif sn > 10.0 * rn:
                    rho /= 2.0
                    u1 *= 2.0
                    u2 *= 2.0

    return q, it, rn, sn, rho, converged


if _HAVE_NUMBA:
    _sqrt_lasso_loop_jit = numba.njit(cache=True)(_sqrt_lasso_loop)
else:  # pragma: no cover
    _sqrt_lasso_loop_jit = None


def sqrt_lasso_admm(e, et, winv, c2, lam, rho=40.0, alpha=1.8, max_iter=5000,
                    abstol=1e-7, reltol=1e-6, check_every=10, balance_every=50):
    """Run the square-root LASSO ADMM loop on the selected backend."""
    check_every = max(int(check_every), 1)
    # balancing only happens on check iterations; keep the cadences aligned
    balance_every = max(int(balance_every) // check_every, 1) * check_every
    args = (np.ascontiguousarray(e, dtype=np.float64),
            np.ascontiguousarray(et, dtype=np.float64),
            np.ascontiguousarray(winv, dtype=np.float64),
            np.ascontiguousarray(c2, dtype=np.float64),
            float(lam), float(rho), float(alpha), int(max_iter),
            float(abstol), float(reltol), check_every, balance_every)
    if numba_enabled():
        return _sqrt_lasso_loop_jit(*args)
    return _sqrt_lasso_loop(*args)


def warmup() -> None:
    """Trigger jit compilation on a tiny instance (no-op on the numpy path)."""
    if not numba_enabled():
        return
    e = np.ones((2, 3))
    winv = np.linalg.inv(np.eye(2) + e @ e.T)
    sqrt_lasso_admm(e, e.T.copy(), winv, np.ones(2), 1.0, max_iter=3,
                    check_every=1, balance_every=2)
