"""Dense statevector simulator.

Qubit ``k`` is bit ``k`` of the basis index, i.e. qubit 0 is the least
significant bit. ``|q_{n-1} ... q_1 q_0>`` therefore lives at index
``sum(q_k << k)``.

Two layers live here. The array kernels (``ry_``, ``crx_``, ``h_``,
``swap_``, ``cswap_``, ``apply_pauli_array``) act in place on raw complex
arrays whose *last* axis holds the ``2**n`` amplitudes; any leading axes
are treated as a batch, which is how the ansatz and the attention layer
push many samples through the same circuit at once. The ``StateVector``
functions wrap those kernels for single states, mutate the state they
are given and return it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, NumericalHealthError, QubitIndexError, SizeError

MAX_QUBITS = 16
NORM_TOL = 1e-8

_SQRT1_2 = 1.0 / np.sqrt(2.0)


def _check_size(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n!r}")


def _check_qubits(n, *qubits):
    for q in qubits:
        if not isinstance(q, (int, np.integer)) or not 0 <= q < n:
            raise QubitIndexError(f"qubit index {q!r} out of range for {n} qubits")
    if len(set(int(q) for q in qubits)) != len(qubits):
        raise QubitIndexError(f"qubit indices must be distinct, got {qubits}")


class StateVector:
    """Pure state of ``n_qubits`` qubits stored as ``2**n`` complex128 amplitudes."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes, check_norm=True):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise DimensionError("amplitudes must be one-dimensional")
        n = int(amps.size).bit_length() - 1
        if amps.size < 2 or 1 << n != amps.size:
            raise DimensionError(f"amplitude count {amps.size} is not a power of two")
        _check_size(n)
        self.n_qubits = n
        self.amplitudes = amps
        if check_norm:
            self.check_norm()

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"

    def __len__(self):
        return self.amplitudes.size

    def copy(self):
        return StateVector(self.amplitudes.copy(), check_norm=False)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self, tol=NORM_TOL):
        drift = abs(self.norm() - 1.0)
        if not drift <= tol:
            raise NumericalHealthError(f"state norm drifted by {drift:.3e} (tolerance {tol:g})")
        return self

    def to_csv(self, path):
        """Debug dump: one ``index, real, imag`` row per amplitude."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "real", "imag"])
            for k, a in enumerate(self.amplitudes):
                writer.writerow([k, format(a.real, ".17g"), format(a.imag, ".17g")])


# ---------------------------------------------------------------------------
# array kernels


def _single_view(psi, n, q):
    v = psi.reshape(psi.shape[:-1] + (1 << (n - 1 - q), 2, 1 << q))
    return v[..., 0, :], v[..., 1, :]


def _pair_view(psi, n, a, b):
    """Return ``sub(bit_a, bit_b)`` giving the in-place view with those bits fixed."""
    hi, lo = (a, b) if a > b else (b, a)
    v = psi.reshape(psi.shape[:-1] + (1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo))

    def sub(bit_a, bit_b):
        bh, bl = (bit_a, bit_b) if a > b else (bit_b, bit_a)
        return v[..., bh, :, bl, :]

    return sub


def ry_(psi, n, q, theta):
    a0, a1 = _single_view(psi, n, q)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    t0 = a0.copy()
    a0 *= c
    a0 -= s * a1
    a1 *= c
    a1 += s * t0
    return psi


def crx_(psi, n, control, target, theta):
    sub = _pair_view(psi, n, control, target)
    a0, a1 = sub(1, 0), sub(1, 1)
    c, s = np.cos(theta / 2), -1j * np.sin(theta / 2)
    t0 = a0.copy()
    a0 *= c
    a0 += s * a1
    a1 *= c
    a1 += s * t0
    return psi


def h_(psi, n, q):
    a0, a1 = _single_view(psi, n, q)
    t0 = a0.copy()
    a0 += a1
    a0 *= _SQRT1_2
    a1 -= t0
    a1 *= -_SQRT1_2
    return psi


def swap_(psi, n, i, j):
    sub = _pair_view(psi, n, i, j)
    a01, a10 = sub(0, 1), sub(1, 0)
    t = a01.copy()
    a01[...] = a10
    a10[...] = t
    return psi


@lru_cache(maxsize=None)
def swap_permutation(n, i, j):
    """Index array ``p`` with ``(SWAP_ij psi)[k] == psi[p[k]]``; read-only."""
    idx = np.arange(1 << n, dtype=np.int64)
    diff = ((idx >> i) ^ (idx >> j)) & 1
    perm = idx ^ ((diff << i) | (diff << j))
    perm = perm.astype(np.int32 if n < 31 else np.int64)
    perm.flags.writeable = False
    return perm


@lru_cache(maxsize=64)
def _cswap_permutation(n, control, a, b):
    idx = np.arange(1 << n, dtype=np.int64)
    diff = ((idx >> a) ^ (idx >> b)) & 1 & (idx >> control)
    perm = idx ^ ((diff << a) | (diff << b))
    perm.flags.writeable = False
    return perm


def cswap_(psi, n, control, a, b):
    psi[...] = psi[..., _cswap_permutation(n, control, a, b)]
    return psi


# ---------------------------------------------------------------------------
# Pauli strings

_AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site Paulis, e.g. ``PauliString(((0, "Z"), (1, "X")))``.

    Factors are stored sorted by site; a site may appear at most once.
    """

    factors: tuple = ()

    def __post_init__(self):
        factors = tuple(sorted((int(s), str(ax).upper()) for s, ax in self.factors))
        sites = [s for s, _ in factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in Pauli string {factors}")
        for s, ax in factors:
            if s < 0:
                raise QubitIndexError(f"negative site {s}")
            if ax not in _AXES:
                raise ValueError(f"unknown Pauli axis {ax!r}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def parse(cls, text):
        """``"Z0 X1 Z2"`` -> PauliString; an empty string is the identity."""
        return cls(tuple((int(tok[1:]), tok[0]) for tok in text.split()))

    def __str__(self):
        return " ".join(f"{ax}{s}" for s, ax in self.factors) or "I"

    @property
    def max_site(self):
        return max((s for s, _ in self.factors), default=-1)

    @property
    def x_mask(self):
        return sum(1 << s for s, ax in self.factors if ax in "XY")

    @property
    def z_mask(self):
        return sum(1 << s for s, ax in self.factors if ax in "YZ")

    @property
    def n_y(self):
        return sum(ax == "Y" for _, ax in self.factors)


def pauli_phase(n, pauli):
    """``phase[b]`` such that ``P|b> = phase[b] |b ^ x_mask>``."""
    idx = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(1 << n, dtype=np.int64)
    z = pauli.z_mask
    k = 0
    while z:
        if z & 1:
            parity ^= (idx >> k) & 1
        z >>= 1
        k += 1
    sign = 1 - 2 * parity
    ny = pauli.n_y % 4
    if ny == 0:
        return sign.astype(np.float64)
    return sign * (1j**ny)


def apply_pauli_array(psi, n, pauli):
    """Return ``P psi`` as a new array (batched over leading axes)."""
    if pauli.max_site >= n:
        raise QubitIndexError(f"Pauli string {pauli} acts outside {n} qubits")
    idx = np.arange(1 << n, dtype=np.int64)
    src = idx ^ pauli.x_mask
    phase = pauli_phase(n, pauli)
    return phase[src] * psi[..., src]


# ---------------------------------------------------------------------------
# StateVector operations


def zero_state(n):
    _check_size(n)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps, check_norm=False)


def basis_state(n, index):
    _check_size(n)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps, check_norm=False)


def random_state(n, rng):
    _check_size(n)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(amps / np.linalg.norm(amps))


def apply_ry(s, qubit, theta):
    """Apply ``exp(-i theta Y / 2)`` on ``qubit`` in place."""
    _check_qubits(s.n_qubits, qubit)
    ry_(s.amplitudes, s.n_qubits, qubit, theta)
    return s


def apply_crx(s, control, target, theta):
    """Apply ``RX(theta)`` on ``target`` conditioned on ``control`` being 1."""
    _check_qubits(s.n_qubits, control, target)
    crx_(s.amplitudes, s.n_qubits, control, target, theta)
    return s


def apply_h(s, qubit):
    _check_qubits(s.n_qubits, qubit)
    h_(s.amplitudes, s.n_qubits, qubit)
    return s


def apply_cswap(s, control, a, b):
    _check_qubits(s.n_qubits, control, a, b)
    cswap_(s.amplitudes, s.n_qubits, control, a, b)
    return s


def swap_qubits(s, i, j):
    _check_qubits(s.n_qubits, i, j)
    swap_(s.amplitudes, s.n_qubits, i, j)
    return s


def inner_product(a, b):
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"cannot contract {a.n_qubits}- and {b.n_qubits}-qubit states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def apply_pauli(s, pauli):
    """Return ``P|s>`` as a new (unchecked) StateVector."""
    return StateVector(apply_pauli_array(s.amplitudes, s.n_qubits, pauli), check_norm=False)


def expect_pauli(s, pauli):
    val = np.vdot(s.amplitudes, apply_pauli_array(s.amplitudes, s.n_qubits, pauli))
    if abs(val.imag) > 1e-10:
        raise NumericalHealthError(f"<{pauli}> has imaginary part {val.imag:.3e}")
    return float(np.clip(val.real, -1.0, 1.0))


def prob_qubit_zero(s, qubit):
    _check_qubits(s.n_qubits, qubit)
    a0, _ = _single_view(s.amplitudes, s.n_qubits, qubit)
    return float(min(1.0, np.sum(a0.real**2 + a0.imag**2)))


def as_amplitude_batch(states: Iterable | np.ndarray, n: int | None = None) -> np.ndarray:
    """Stack StateVectors (or pass through an array) into a ``(B, 2**n)`` complex array."""
    if isinstance(states, np.ndarray):
        arr = np.array(states, dtype=np.complex128, copy=True, order="C")
        if arr.ndim == 1:
            arr = arr[None, :]
    else:
        states = list(states)
        if not states:
            raise DimensionError("empty batch of states")
        arr = np.stack(
            [s.amplitudes if isinstance(s, StateVector) else np.asarray(s) for s in states]
        ).astype(np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"state batch must be 2-D, got shape {arr.shape}")
    width = arr.shape[1]
    m = width.bit_length() - 1
    if 1 << m != width:
        raise DimensionError(f"amplitude count {width} is not a power of two")
    if n is not None and m != n:
        raise DimensionError(f"expected {n}-qubit states, got {m}-qubit states")
    _check_size(m)
    return arr


def batch_qubits(psi: np.ndarray) -> int:
    return int(psi.shape[-1]).bit_length() - 1


def check_batch_norms(psi: np.ndarray, tol: float = NORM_TOL) -> None:
    drift = np.abs(np.linalg.norm(psi, axis=-1) - 1.0)
    worst = float(np.max(drift)) if drift.size else 0.0
    if not worst <= tol:
        raise NumericalHealthError(f"state norm drifted by {worst:.3e} (tolerance {tol:g})")


__all__: Sequence[str] = [
    "MAX_QUBITS",
    "PauliString",
    "StateVector",
    "apply_cswap",
    "apply_crx",
    "apply_h",
    "apply_pauli",
    "apply_ry",
    "basis_state",
    "expect_pauli",
    "inner_product",
    "prob_qubit_zero",
    "random_state",
    "swap_qubits",
    "zero_state",
]
