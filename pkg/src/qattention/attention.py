"""Swap-test attention matrices.

``q_ij = 2 P_ij(0) - 1 = <Phi| SWAP_ij |Phi>``. The analytic mode evaluates
the overlap directly; the circuit mode runs the ancilla interferometer
(H, controlled-SWAP, H) on an ``n + 1`` qubit register, with the ancilla
as the most significant qubit ``n``.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .ansatz import upper_pairs
from .errors import DimensionError, NumericalHealthError, SizeError
from .statevec import (
    MAX_QUBITS,
    StateVector,
    _pair_view,
    apply_cswap,
    apply_h,
    inner_product,
    prob_qubit_zero,
    swap_qubits,
)

IMAG_TOL = 1e-10


class AttentionMatrix:
    """Symmetric ``n x n`` matrix of swap-test values with unit diagonal."""

    def __init__(self, q):
        q = np.array(q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DimensionError(f"attention matrix must be square, got {q.shape}")
        if not np.array_equal(q, q.T):
            raise NumericalHealthError("attention matrix is not symmetric")
        if not np.all(np.diag(q) == 1.0):
            raise NumericalHealthError("attention matrix diagonal must be 1")
        if np.any(np.abs(q) > 1 + 1e-9):
            raise NumericalHealthError("attention entries must lie in [-1, 1]")
        self.q = q
        self.n = q.shape[0]

    @classmethod
    def from_upper(cls, values, n):
        values = np.asarray(values, dtype=np.float64)
        m = n * (n - 1) // 2
        if values.shape != (m,):
            raise DimensionError(f"expected {m} upper-triangle values, got {values.shape}")
        q = np.eye(n)
        iu = np.triu_indices(n, k=1)
        q[iu] = values
        q.T[iu] = values
        return cls(q)

    def __repr__(self):
        return f"AttentionMatrix(n={self.n})"

    def __getitem__(self, key):
        return self.q[key]

    def to_csv(self, path):
        """Heatmap CSV: header of 1-based qubit labels, then ``n`` rows."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["qubit"] + [str(k + 1) for k in range(self.n)])
            for k, row in enumerate(self.q):
                writer.writerow([str(k + 1)] + [format(v, ".12g") for v in row])

    def to_json(self, path, h1=None, h2=None, label=None):
        doc = {"n": self.n, "h1": h1, "h2": h2, "label": label, "q": self.q.tolist()}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)


def upper_triangle(m):
    """``[q_01, q_02, ..., q_{n-2,n-1}]`` (row-major, ``i < j``)."""
    return m.q[np.triu_indices(m.n, k=1)].copy()


def attention_analytic(state):
    """Attention matrix from one permuted-state overlap per qubit pair."""
    n = state.n_qubits
    if n < 2:
        raise SizeError("attention needs at least two qubits")
    q = np.eye(n)
    for i, j in upper_pairs(n):
        val = inner_product(state, swap_qubits(state.copy(), i, j))
        if abs(val.imag) >= IMAG_TOL:
            raise NumericalHealthError(f"overlap for pair ({i}, {j}) has imaginary part {val.imag:.3e}")
        q[i, j] = q[j, i] = np.clip(val.real, -1.0, 1.0)
    return AttentionMatrix(q)


def attention_circuit(state, shots=None, seed=0):
    """Attention matrix from the ancilla swap-test circuit.

    Without ``shots`` the ancilla's zero-probability is used exactly. With
    ``shots`` it is replaced by the mean of a seeded binomial draw, pairs
    consumed in lexicographic order.
    """
    n = state.n_qubits
    if n < 2:
        raise SizeError("attention needs at least two qubits")
    if n + 1 > MAX_QUBITS:
        raise SizeError(f"swap-test register of {n + 1} qubits exceeds {MAX_QUBITS}")
    if shots is not None and shots < 1:
        raise ValueError("shots must be a positive integer")
    rng = np.random.default_rng(seed)
    register = np.concatenate([state.amplitudes, np.zeros_like(state.amplitudes)])
    q = np.eye(n)
    for i, j in upper_pairs(n):
        reg = StateVector(register.copy(), check_norm=False)
        apply_h(reg, n)
        apply_cswap(reg, n, i, j)
        apply_h(reg, n)
        p0 = prob_qubit_zero(reg, n)
        if shots is not None:
            p0 = rng.binomial(shots, p0) / shots
        q[i, j] = q[j, i] = np.clip(2.0 * p0 - 1.0, -1.0, 1.0)
    return AttentionMatrix(q)


def attention_features_array(phi, n):
    """Upper-triangle attention values for a ``(B, 2**n)`` batch of states.

    Uses ``<phi|SWAP_ij|phi> = |a_00|^2 + |a_11|^2 + 2 Re <a_01|a_10>`` on
    strided views, so no permuted copy is made. Returns ``(B, m)``.
    """
    phi = np.atleast_2d(phi)
    out = np.empty((phi.shape[0], n * (n - 1) // 2))
    for col, (i, j) in enumerate(upper_pairs(n)):
        sub = _pair_view(phi, n, i, j)
        a00, a11, a01, a10 = sub(0, 0), sub(1, 1), sub(0, 1), sub(1, 0)
        axes = tuple(range(1, a00.ndim))
        same = np.sum(a00.real**2 + a00.imag**2 + a11.real**2 + a11.imag**2, axis=axes)
        cross = np.sum((a01.conj() * a10).real, axis=axes)
        out[:, col] = same + 2.0 * cross
    return np.clip(out, -1.0, 1.0)
