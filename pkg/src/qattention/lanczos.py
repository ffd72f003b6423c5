"""Lanczos ground-state solver with full reorthogonalization."""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError


def lanczos_ground(matvec, dim, rng, tol=1e-10, max_iter=400, check_every=5, dtype=np.float64):
    """Lowest eigenpair of a Hermitian operator given only ``matvec``.

    Returns ``(energy, vector, second_ritz_value, residual)``. The Krylov
    basis is reorthogonalized twice against all previous vectors at every
    step, so memory is ``max_iter * dim`` scalars. The true residual
    ``||H x - E x||`` of the returned vector is checked against ``100 * tol``
    before returning.
    """
    max_iter = min(max_iter, dim)
    basis = np.empty((max_iter + 1, dim), dtype=dtype)
    v = rng.normal(size=dim).astype(dtype)
    if np.iscomplexobj(basis):
        v = v + 1j * rng.normal(size=dim)
    basis[0] = v / np.linalg.norm(v)

    alphas, betas = [], []
    theta = s = None
    m = 0
    for j in range(max_iter):
        w = matvec(basis[j])
        alpha = np.vdot(basis[j], w).real
        w = w - alpha * basis[j]
        if j > 0:
            w -= betas[-1] * basis[j - 1]
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)
        m = j + 1

        exhausted = beta < 1e-12 or m == max_iter
        if exhausted or m % check_every == 0:
            theta, s = eigh_tridiagonal(np.array(alphas), np.array(betas), select="i", select_range=(0, min(1, m - 1)))
            if exhausted or beta * abs(s[-1, 0]) < tol:
                break
        betas.append(beta)
        basis[j + 1] = w / beta

    x = basis[:m].T @ s[:, 0]
    x /= np.linalg.norm(x)
    energy = float(theta[0])
    residual = float(np.linalg.norm(matvec(x) - energy * x))
    if residual > 100 * tol:
        raise ConvergenceError(
            f"Lanczos did not converge in {m} iterations (residual {residual:.3e})", residual=residual
        )
    second = float(theta[1]) if theta.size > 1 else np.nan
    return energy, x, second, residual
