"""Layered RY / CRX feature map and its adjoint gradient.

One layer on ``n`` qubits is four sublayers of ``n`` gates each:

    A  RY on every qubit
    B  CRX on ring edges, control ``k``, target ``(k + 1) % n``
    C  RY on every qubit
    D  CRX on ring edges, control ``(k + 1) % n``, target ``k``

so a circuit of ``l`` layers has exactly ``4 n l`` angles, stored flat in
(layer, sublayer, qubit) order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, UsageError
from .statevec import StateVector, check_batch_norms, crx_, ry_, swap_
from .statevec import _pair_view, _single_view

SUBLAYERS = ("ry", "crx_fwd", "ry", "crx_bwd")


def param_count(n, l):
    if n < 2 or l < 1:
        raise UsageError(f"need n >= 2 and l >= 1, got n={n}, l={l}")
    return 4 * n * l


@dataclass
class AnsatzParams:
    n_qubits: int
    layers: int
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).ravel()
        expected = param_count(self.n_qubits, self.layers)
        if self.theta.size != expected:
            raise DimensionError(f"theta has {self.theta.size} entries, expected {expected}")

    @classmethod
    def zeros(cls, n_qubits, layers=1):
        return cls(n_qubits, layers, np.zeros(param_count(n_qubits, layers)))

    @classmethod
    def random(cls, n_qubits, layers, rng, scale=0.1):
        return cls(n_qubits, layers, rng.uniform(-scale, scale, param_count(n_qubits, layers)))

    def grid(self):
        """View of theta shaped ``(layers, 4, n_qubits)``."""
        return self.theta.reshape(self.layers, 4, self.n_qubits)

    @classmethod
    def from_grid(cls, grid):
        grid = np.asarray(grid, dtype=np.float64)
        layers, four, n = grid.shape
        if four != 4:
            raise DimensionError("second axis must index the four sublayers")
        return cls(n, layers, grid.reshape(-1))


def gate_sequence(n, layers):
    """Yield ``(kind, qubits, param_index)`` in application order."""
    k = 0
    for _ in range(layers):
        for sub in SUBLAYERS:
            for q in range(n):
                if sub == "ry":
                    yield "ry", (q,), k
                elif sub == "crx_fwd":
                    yield "crx", (q, (q + 1) % n), k
                else:
                    yield "crx", ((q + 1) % n, q), k
                k += 1


def _apply_gate(psi, n, kind, qubits, angle):
    if kind == "ry":
        ry_(psi, n, qubits[0], angle)
    else:
        crx_(psi, n, qubits[0], qubits[1], angle)


def apply_ansatz_array(psi, n, theta, layers):
    """Apply ``U(theta)`` in place to a ``(..., 2**n)`` amplitude array."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != param_count(n, layers):
        raise DimensionError(f"theta has {theta.size} entries, expected {param_count(n, layers)}")
    for kind, qubits, k in gate_sequence(n, layers):
        _apply_gate(psi, n, kind, qubits, theta[k])
    return psi


def apply_ansatz(state, p):
    """Apply the feature map to ``state`` in place and return it."""
    if state.n_qubits != p.n_qubits:
        raise DimensionError(f"state has {state.n_qubits} qubits, ansatz expects {p.n_qubits}")
    apply_ansatz_array(state.amplitudes, state.n_qubits, p.theta, p.layers)
    return state.check_norm()


def upper_pairs(n):
    """Qubit pairs ``(i, j)``, ``i < j``, in row-major order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def swap_observable_array(psi, n, weights):
    """``sum_ij w_ij SWAP_ij psi`` with ``weights`` shaped ``(..., n(n-1)/2)``."""
    weights = np.asarray(weights, dtype=np.float64)
    out = np.zeros_like(psi)
    scratch = np.empty_like(psi)
    for col, (i, j) in enumerate(upper_pairs(n)):
        w = weights[..., col]
        if not np.any(w):
            continue
        np.copyto(scratch, psi)
        swap_(scratch, n, i, j)
        out += w[..., None] * scratch
    return out


def _generator_overlap(lam, phi, n, kind, qubits):
    """``sum_batch <lam| G |phi>`` for the gate's generator ``G``."""
    if kind == "ry":
        # G = Y/2
        l0, l1 = _single_view(lam, n, qubits[0])
        p0, p1 = _single_view(phi, n, qubits[0])
        return 0.5j * (np.vdot(l1, p0) - np.vdot(l0, p1))
    # G = |1><1|_c (x) X_t / 2
    c, t = qubits
    lsub = _pair_view(lam, n, c, t)
    psub = _pair_view(phi, n, c, t)
    return 0.5 * (np.vdot(lsub(1, 0), psub(1, 1)) + np.vdot(lsub(1, 1), psub(1, 0)))


def adjoint_gradient_array(psi, n, theta, layers, weights):
    """Gradient of ``sum_b sum_ij w[b, ij] <Phi_b| SWAP_ij |Phi_b>`` w.r.t. theta.

    ``psi`` holds the *input* states (``(B, 2**n)``, left untouched) and
    ``weights`` the per-sample observable weights (``(B, m)`` or ``(m,)``).
    One forward pass and one reverse sweep serve every parameter.
    Returns ``(grad, Phi)`` where ``Phi`` are the feature-mapped states.
    """
    theta = np.asarray(theta, dtype=np.float64)
    psi = np.atleast_2d(psi)
    weights = np.broadcast_to(np.asarray(weights, dtype=np.float64), psi.shape[:-1] + (n * (n - 1) // 2,))
    phi_out = apply_ansatz_array(psi.copy(), n, theta, layers)

    stack = np.empty((2,) + psi.shape, dtype=np.complex128)
    stack[0] = phi_out
    stack[1] = swap_observable_array(phi_out, n, weights)
    phi, lam = stack[0], stack[1]

    grad = np.zeros(theta.size)
    for kind, qubits, k in reversed(list(gate_sequence(n, layers))):
        grad[k] = 2.0 * _generator_overlap(lam, phi, n, kind, qubits).imag
        _apply_gate(stack, n, kind, qubits, -theta[k])
    return grad, phi_out


def gradient_expectations(state, p, observable_weights):
    """``d/dtheta <psi(theta)| sum_{i<j} w_ij SWAP_ij |psi(theta)>`` as a flat array.

    ``observable_weights`` maps ``(i, j)`` pairs to weights (either order);
    it may also be an array already laid out in ``upper_pairs`` order.
    """
    n = p.n_qubits
    if state.n_qubits != n:
        raise DimensionError(f"state has {state.n_qubits} qubits, ansatz expects {n}")
    if isinstance(observable_weights, dict):
        index = {pair: col for col, pair in enumerate(upper_pairs(n))}
        w = np.zeros(len(index))
        for (i, j), val in observable_weights.items():
            key = (min(i, j), max(i, j))
            if key not in index:
                raise UsageError(f"invalid qubit pair {(i, j)} for {n} qubits")
            w[index[key]] += val
    else:
        w = np.asarray(observable_weights, dtype=np.float64)
        if w.shape != (n * (n - 1) // 2,):
            raise DimensionError(f"weights must have length {n * (n - 1) // 2}")
    grad, phi = adjoint_gradient_array(state.amplitudes[None, :], n, p.theta, p.layers, w[None, :])
    check_batch_norms(phi)
    return grad


__all__ = [
    "AnsatzParams",
    "StateVector",
    "adjoint_gradient_array",
    "apply_ansatz",
    "apply_ansatz_array",
    "gate_sequence",
    "gradient_expectations",
    "param_count",
    "swap_observable_array",
    "upper_pairs",
]
