"""Dense-matrix oracle for the full loss and its central-difference gradient."""

import numpy as np

import oracles as O
from qattention.ansatz import param_count, upper_pairs
from qattention.classifier import batch_loss_gradients


def oracle_loss(psi, labels, theta, W, b, n, layers):
    """Mean cross-entropy computed from dense matrices only."""
    U = O.ansatz_matrix(n, theta, layers)
    total = 0.0
    for amp, y in zip(psi, labels):
        phi = U @ amp
        q = np.array([np.vdot(phi, O.swap_matrix(n, i, j) @ phi).real for i, j in upper_pairs(n)])
        z = W @ q + b
        z = z - z.max()
        total -= z[y] - np.log(np.sum(np.exp(z)))
    return total / len(labels)


def central_difference(f, x, step=1e-6):
    g = np.zeros_like(x)
    for k in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def end_to_end_relative_error(rng, n=4, layers=1, batch=3):
    psi = np.stack([O.random_amplitudes(n, rng) for _ in range(batch)])
    y = rng.integers(0, 3, batch)
    m = n * (n - 1) // 2
    theta = rng.uniform(-np.pi, np.pi, param_count(n, layers))
    W, b = rng.normal(size=(3, m)), rng.normal(size=3)
    loss, g_t, g_w, g_b, _ = batch_loss_gradients(psi, y, theta, W, b, layers)
    assert abs(loss - oracle_loss(psi, y, theta, W, b, n, layers)) < 1e-12
    got = np.concatenate([g_t, g_w.ravel(), g_b])
    ref = np.concatenate([
        central_difference(lambda t: oracle_loss(psi, y, t, W, b, n, layers), theta),
        central_difference(lambda w: oracle_loss(psi, y, theta, w, b, n, layers), W).ravel(),
        central_difference(lambda c: oracle_loss(psi, y, theta, W, c, n, layers), b),
    ])
    return np.max(np.abs(got - ref)) / np.max(np.abs(ref))
