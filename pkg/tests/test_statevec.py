import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as O
from qattention.errors import DimensionError, NumericalHealthError, QubitIndexError, SizeError
from qattention.statevec import (
    PauliString,
    StateVector,
    apply_crx,
    apply_cswap,
    apply_h,
    apply_pauli,
    apply_ry,
    basis_state,
    expect_pauli,
    inner_product,
    prob_qubit_zero,
    random_state,
    swap_qubits,
    zero_state,
)

S2 = 1 / np.sqrt(2)


def state(amps):
    return StateVector(np.asarray(amps, dtype=complex))


class TestConstruction:
    def test_zero_state(self):
        assert np.array_equal(zero_state(1).amplitudes, [1, 0])
        assert np.array_equal(zero_state(2).amplitudes, [1, 0, 0, 0])

    @pytest.mark.parametrize("n", [0, 17, -1])
    def test_size_bounds(self, n):
        with pytest.raises(SizeError):
            zero_state(n)

    def test_sixteen_qubits_allowed(self):
        assert len(zero_state(16)) == 1 << 16

    def test_rejects_non_power_of_two(self):
        with pytest.raises(DimensionError):
            StateVector(np.ones(3) / np.sqrt(3))

    def test_rejects_unnormalised(self):
        with pytest.raises(NumericalHealthError):
            StateVector([1.0, 1.0])

    def test_csv_dump(self, tmp_path):
        s = state([S2, 1j * S2])
        s.to_csv(tmp_path / "a.csv")
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[0] == "index,real,imag"
        assert float(lines[2].split(",")[2]) == S2


class TestGateExamples:
    def test_ry(self):
        assert np.allclose(apply_ry(zero_state(1), 0, np.pi).amplitudes, [0, 1], atol=1e-15)
        assert np.allclose(apply_ry(zero_state(1), 0, np.pi / 2).amplitudes, [S2, S2], atol=1e-15)

    def test_ry_zero_is_identity(self, rng):
        s = random_state(3, rng)
        before = s.amplitudes.copy()
        assert np.array_equal(apply_ry(s, 1, 0.0).amplitudes, before)

    def test_crx(self, rng):
        s = random_state(2, rng)
        s.amplitudes[1::2] = 0  # qubit 0 (control) in |0>
        s.amplitudes /= np.linalg.norm(s.amplitudes)
        before = s.amplitudes.copy()
        assert np.allclose(apply_crx(s, 0, 1, 1.3).amplitudes, before, atol=1e-15)
        out = apply_crx(basis_state(2, 0b11), 0, 1, np.pi).amplitudes
        assert np.allclose(out, [0, -1j, 0, 0], atol=1e-15)

    def test_crx_zero_angle(self, rng):
        s = random_state(3, rng)
        before = s.amplitudes.copy()
        assert np.allclose(apply_crx(s, 2, 0, 0.0).amplitudes, before, atol=1e-15)

    def test_h(self):
        assert np.allclose(apply_h(zero_state(1), 0).amplitudes, [S2, S2])
        assert np.allclose(apply_h(basis_state(1, 1), 0).amplitudes, [S2, -S2])

    def test_h_involution(self, rng):
        s = random_state(4, rng)
        before = s.amplitudes.copy()
        apply_h(apply_h(s, 2), 2)
        assert np.max(np.abs(s.amplitudes - before)) < 1e-12

    def test_cswap(self):
        # control qubit 0, a=1, b=2: |1>|01> means bits (q0=1, q1=1, q2=0)
        out = apply_cswap(basis_state(3, 0b011), 0, 1, 2)
        assert out.amplitudes[0b101] == 1
        untouched = apply_cswap(basis_state(3, 0b010), 0, 1, 2)
        assert untouched.amplitudes[0b010] == 1

    def test_cswap_needs_distinct(self):
        with pytest.raises(QubitIndexError):
            apply_cswap(zero_state(3), 0, 1, 1)

    def test_swap(self, rng):
        s = random_state(4, rng)
        before = s.amplitudes.copy()
        swap_qubits(swap_qubits(s, 0, 3), 0, 3)
        assert np.array_equal(s.amplitudes, before)
        bell = state([S2, 0, 0, S2])
        assert np.array_equal(swap_qubits(bell, 0, 1).amplitudes, [S2, 0, 0, S2])
        assert swap_qubits(basis_state(2, 0b01), 0, 1).amplitudes[0b10] == 1

    @pytest.mark.parametrize("call", [
        lambda s: apply_ry(s, 3, 0.1),
        lambda s: apply_h(s, -1),
        lambda s: apply_crx(s, 1, 1, 0.1),
        lambda s: swap_qubits(s, 0, 5),
        lambda s: prob_qubit_zero(s, 3),
    ])
    def test_index_errors(self, call):
        with pytest.raises(QubitIndexError):
            call(zero_state(3))


class TestMatrixOracle:
    """Each kernel against its explicit 2^n x 2^n matrix for n <= 4."""

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_single_qubit_gates(self, n, rng):
        for q in range(n):
            theta = rng.uniform(-np.pi, np.pi)
            psi = O.random_amplitudes(n, rng)
            got = apply_ry(StateVector(psi.copy()), q, theta).amplitudes
            assert np.max(np.abs(got - O.single(n, q, O.ry(theta)) @ psi)) < 1e-12
            got = apply_h(StateVector(psi.copy()), q).amplitudes
            assert np.max(np.abs(got - O.single(n, q, O.H) @ psi)) < 1e-12

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_two_qubit_gates(self, n, rng):
        for c in range(n):
            for t in range(n):
                if c == t:
                    continue
                theta = rng.uniform(-np.pi, np.pi)
                psi = O.random_amplitudes(n, rng)
                got = apply_crx(StateVector(psi.copy()), c, t, theta).amplitudes
                assert np.max(np.abs(got - O.controlled(n, c, t, O.rx(theta)) @ psi)) < 1e-12
                got = swap_qubits(StateVector(psi.copy()), c, t).amplitudes
                assert np.max(np.abs(got - O.swap_matrix(n, c, t) @ psi)) < 1e-12

    @pytest.mark.parametrize("n", [3, 4])
    def test_cswap(self, n, rng):
        import itertools

        for c, a, b in itertools.permutations(range(n), 3):
            psi = O.random_amplitudes(n, rng)
            got = apply_cswap(StateVector(psi.copy()), c, a, b).amplitudes
            assert np.max(np.abs(got - O.cswap_matrix(n, c, a, b) @ psi)) < 1e-12

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_swap_equals_cswap_with_set_ancilla(self, n, rng):
        # ancilla on the extra top qubit, prepared in |1>; trace it out afterwards
        for i in range(n):
            for j in range(i + 1, n):
                psi = O.random_amplitudes(n, rng)
                reg = np.concatenate([np.zeros_like(psi), psi])
                out = apply_cswap(StateVector(reg), n, i, j).amplitudes
                assert np.all(out[: 1 << n] == 0)
                assert np.array_equal(out[1 << n:], swap_qubits(StateVector(psi.copy()), i, j).amplitudes)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 6),
    seed=st.integers(0, 2**31 - 1),
    gate=st.sampled_from(["ry", "crx", "h", "swap", "cswap"]),
    theta=st.floats(-10, 10, allow_nan=False),
)
def test_gates_preserve_norm(n, seed, gate, theta):
    rng = np.random.default_rng(seed)
    s = random_state(n, rng)
    q = rng.permutation(n)
    if gate == "ry":
        apply_ry(s, int(q[0]), theta)
    elif gate == "crx":
        apply_crx(s, int(q[0]), int(q[1]), theta)
    elif gate == "h":
        apply_h(s, int(q[0]))
    elif gate == "swap":
        swap_qubits(s, int(q[0]), int(q[1]))
    elif n >= 3:
        apply_cswap(s, int(q[0]), int(q[1]), int(q[2]))
    assert abs(s.norm() - 1) < 1e-12


class TestOverlapsAndExpectations:
    def test_inner_product(self, rng):
        a, b = random_state(3, rng), random_state(3, rng)
        assert abs(inner_product(a, a) - 1) < 1e-12
        assert inner_product(zero_state(1), basis_state(1, 1)) == 0
        assert abs(inner_product(a, b) - np.conj(inner_product(b, a))) < 1e-15

    def test_inner_product_dimension(self):
        with pytest.raises(DimensionError):
            inner_product(zero_state(2), zero_state(3))

    def test_expect_examples(self):
        plus = state([S2, S2])
        assert expect_pauli(zero_state(1), PauliString.parse("Z0")) == 1
        assert expect_pauli(zero_state(1), PauliString.parse("X0")) == 0
        assert abs(expect_pauli(plus, PauliString.parse("X0")) - 1) < 1e-15

    def test_pauli_parse(self):
        p = PauliString.parse("X3 Z0 Y1")
        assert p.factors == ((0, "Z"), (1, "Y"), (3, "X"))
        assert str(p) == "Z0 Y1 X3"
        with pytest.raises(ValueError):
            PauliString.parse("X1 Z1")

    def test_pauli_out_of_range(self):
        with pytest.raises(QubitIndexError):
            expect_pauli(zero_state(2), PauliString.parse("Z2"))

    @pytest.mark.parametrize("n", [1, 3, 4])
    def test_expect_matches_matrix_and_overlap(self, n, rng):
        for _ in range(20):
            k = rng.integers(1, n + 1)
            sites = rng.choice(n, size=k, replace=False)
            factors = [(int(s), "XYZ"[rng.integers(3)]) for s in sites]
            p = PauliString(tuple(factors))
            s = random_state(n, rng)
            direct = np.vdot(s.amplitudes, O.pauli_matrix(n, factors) @ s.amplitudes).real
            assert abs(expect_pauli(s, p) - direct) < 1e-12
            assert abs(expect_pauli(s, p) - inner_product(s, apply_pauli(s, p)).real) < 1e-12

    def test_prob_qubit_zero(self, rng):
        assert prob_qubit_zero(zero_state(3), 2) == 1
        assert abs(prob_qubit_zero(apply_h(zero_state(1), 0), 0) - 0.5) < 1e-15
        s = random_state(4, rng)
        p1 = np.sum(np.abs(s.amplitudes[[b for b in range(16) if b >> 1 & 1]]) ** 2)
        assert abs(prob_qubit_zero(s, 1) + p1 - 1) < 1e-12
