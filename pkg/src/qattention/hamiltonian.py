"""Cluster-Ising chain: terms, ground states, order parameters and phase labels.

Open chain of ``N`` spins (0-based sites)::

    H = -J sum_{i=0}^{N-3} Z_i X_{i+1} Z_{i+2} - h1 sum_i X_i - h2 sum_{i=0}^{N-2} X_i X_{i+1}
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.signal import find_peaks

from .errors import ConvergenceError, DimensionError, DomainError, GridError
from .lanczos import lanczos_ground
from .statevec import PauliString, StateVector, expect_pauli, pauli_phase

DENSE_MAX_SITES = 10


class PhaseLabel(enum.IntEnum):
    """Phase labels; the integer values are the checkpoint class indices."""

    AFM = 0
    SPT = 1
    PM = 2


@dataclass(frozen=True)
class HamiltonianSpec:
    N: int
    h1: float
    h2: float
    J: float = 1.0

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N % 2 == 0 or not 3 <= self.N <= 15:
            raise DomainError(f"N must be odd and in [3, 15], got {self.N!r}")


def build_terms(spec, prune=True):
    """List of ``(coefficient, PauliString)``; zero-coefficient terms are dropped when ``prune``."""
    N = spec.N
    terms = []
    for i in range(N - 2):
        terms.append((-spec.J, PauliString(((i, "Z"), (i + 1, "X"), (i + 2, "Z")))))
    for i in range(N):
        terms.append((-spec.h1, PauliString(((i, "X"),))))
    for i in range(N - 1):
        terms.append((-spec.h2, PauliString(((i, "X"), (i + 1, "X")))))
    if prune:
        terms = [(c, p) for c, p in terms if c != 0.0]
    return terms


class PauliSumOperator:
    """Matrix-free ``sum_k c_k P_k`` on ``n`` qubits.

    Terms sharing the same bit-flip pattern are merged into one diagonal,
    so a product costs one gather and one multiply per distinct pattern
    rather than per term.
    """

    def __init__(self, terms, n):
        self.n = n
        self.dim = 1 << n
        idx = np.arange(self.dim, dtype=np.int64)
        groups = {}
        for coef, pauli in terms:
            if pauli.max_site >= n:
                raise DimensionError(f"term {pauli} acts outside {n} qubits")
            x = pauli.x_mask
            contrib = coef * pauli_phase(n, pauli)[idx ^ x]
            groups[x] = groups[x] + contrib if x in groups else contrib
        self.real = all(not np.iscomplexobj(d) or not np.any(d.imag) for d in groups.values())
        self.dtype = np.dtype(np.float64 if self.real else np.complex128)
        self._parts = []
        for x in sorted(groups):
            d = groups[x].real.copy() if self.real else groups[x].astype(np.complex128)
            self._parts.append((x, None if x == 0 else idx ^ x, d))

    def matvec(self, v):
        out = np.zeros(v.shape, dtype=np.result_type(v.dtype, self.dtype))
        for x, src, d in self._parts:
            out += d * (v if src is None else v[..., src])
        return out

    __call__ = matvec

    def to_dense(self):
        H = np.zeros((self.dim, self.dim), dtype=self.dtype)
        idx = np.arange(self.dim)
        for x, _, d in self._parts:
            H[idx, idx ^ x] += d
        return H


def matvec(terms, v):
    """``H|v>`` for a term list; ``v`` may be a StateVector or an amplitude array."""
    amps = v.amplitudes if isinstance(v, StateVector) else np.asarray(v)
    n = int(amps.shape[-1]).bit_length() - 1
    if 1 << n != amps.shape[-1]:
        raise DimensionError(f"vector length {amps.shape[-1]} is not a power of two")
    if not terms:
        out = np.zeros_like(amps)
    else:
        out = PauliSumOperator(terms, n).matvec(amps)
    return StateVector(out, check_norm=False) if isinstance(v, StateVector) else out


def _fix_gauge(x):
    """Rotate the global phase so the largest-magnitude amplitude is real positive."""
    k = int(np.argmax(np.abs(x)))
    return x * (abs(x[k]) / x[k])


def ground_state(spec, seed=0, method="auto", tol=1e-10, max_iter=600):
    """Lowest eigenpair of ``H(spec)``.

    Returns ``(energy, StateVector, gap)``. ``method="auto"`` uses a dense
    symmetric eigensolver up to ``DENSE_MAX_SITES`` sites and seeded
    Lanczos beyond. For an exactly degenerate ground level the Lanczos
    gap is the gap to the next *distinct* Ritz value reached from the start
    vector, so ``gap`` is only a near-degeneracy indicator.
    """
    op = PauliSumOperator(build_terms(spec), spec.N)
    if method == "auto":
        method = "dense" if spec.N <= DENSE_MAX_SITES else "lanczos"
    if method == "dense":
        w, v = scipy.linalg.eigh(op.to_dense(), subset_by_index=[0, 1])
        energy, x, gap = float(w[0]), v[:, 0], float(w[1] - w[0])
        residual = float(np.linalg.norm(op.matvec(x) - energy * x))
        if residual > 1e-8:
            raise ConvergenceError(f"dense eigensolver residual {residual:.3e}", residual)
    elif method == "lanczos":
        rng = np.random.default_rng(seed)
        energy, x, second, _ = lanczos_ground(
            op.matvec, op.dim, rng, tol=tol, max_iter=max_iter,
            dtype=np.float64 if op.real else np.complex128,
        )
        gap = second - energy
    else:
        raise ValueError(f"unknown method {method!r}")
    return energy, StateVector(_fix_gauge(x.astype(np.complex128))), gap


def string_order_pauli(N):
    if N % 2 == 0:
        raise DomainError(f"string order is defined for odd N, got {N}")
    factors = [(0, "Z")] + [(k, "X") for k in range(1, N - 1, 2)] + [(N - 1, "Z")]
    return PauliString(tuple(factors))


def string_order(state, N):
    """``<Z_0 X_1 X_3 ... X_{N-2} Z_{N-1}>``."""
    if state.n_qubits != N:
        raise DimensionError(f"state has {state.n_qubits} qubits, expected {N}")
    return expect_pauli(state, string_order_pauli(N))


def nn_xx(state, N):
    """Mean nearest-neighbour ``<X_i X_{i+1}>``."""
    if state.n_qubits != N:
        raise DimensionError(f"state has {state.n_qubits} qubits, expected {N}")
    vals = [expect_pauli(state, PauliString(((i, "X"), (i + 1, "X")))) for i in range(N - 1)]
    return float(np.mean(vals))


def energy_expectation(state, spec):
    op = PauliSumOperator(build_terms(spec), spec.N)
    return float(np.vdot(state.amplitudes, op.matvec(state.amplitudes)).real)


def label_point(string_order_value, nn_xx_value, tau_s=0.5, tau_a=0.3):
    """SPT when ``|<S>| >= tau_s``; otherwise AFM when ``nn_xx <= -tau_a``; otherwise PM."""
    if not (0 < tau_s < 1 and 0 < tau_a < 1):
        raise DomainError("thresholds must lie in (0, 1)")
    if abs(string_order_value) >= tau_s:
        return PhaseLabel.SPT
    if nn_xx_value <= -tau_a:
        return PhaseLabel.AFM
    return PhaseLabel.PM


def second_derivative_boundaries(values, grid, max_peaks=2, rel_prominence=0.1):
    """Crossover locations from the curvature of ``<H>`` along a 1-D cut.

    The ground energy is concave in every field, so its second derivative
    is non-positive and a crossover shows up as a sharp peak of
    ``-d2E/dh2``. Peaks whose prominence is below ``rel_prominence`` times
    the largest curvature magnitude are ignored; the ``max_peaks`` most
    prominent survive, refined by a parabola through the three points
    around each peak and returned in increasing order.
    """
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.shape != grid.shape:
        raise GridError("values and grid must be 1-D arrays of equal length")
    if values.size < 5:
        raise GridError(f"need at least 5 grid points, got {values.size}")
    steps = np.diff(grid)
    h = steps.mean()
    if not np.allclose(steps, h, rtol=1e-6, atol=1e-12) or h <= 0:
        raise GridError("grid must be uniform and increasing")

    curvature = -(values[2:] - 2 * values[1:-1] + values[:-2]) / h**2
    scale = np.max(np.abs(curvature))
    if scale == 0:
        return []
    peaks, props = find_peaks(curvature, prominence=rel_prominence * scale)
    if peaks.size == 0:
        return []
    keep = np.sort(peaks[np.argsort(props["prominences"])[::-1][:max_peaks]])

    out = []
    for p in keep:
        x = grid[p + 1]
        if 0 < p < curvature.size - 1:
            a, b, c = curvature[p - 1 : p + 2]
            denom = a - 2 * b + c
            if denom < 0:
                x += 0.5 * h * (a - c) / denom
        out.append(float(x))
    return out
