import numpy as np
import pytest

from qattention.analysis import (
    accuracy_experiment,
    cell_seed,
    contrast,
    contrast_value,
    correlation_profile,
    distance_profile,
    fit_decay_length,
    nearest_grid_value,
    phase_diagram,
    read_csv_digest,
    reference_qubit,
    side_submatrix,
    sign_crossings,
    sweep_h2_values,
    write_csv,
)
from qattention.attention import AttentionMatrix
from qattention.classifier import TrainConfig
from qattention.dataset import generate_dataset
from qattention.errors import FitError, UndefinedContrastError, UsageError


def exp_matrix(n, xi, offset=0):
    idx = np.arange(n)
    q = np.exp(-np.abs(idx[:, None] - idx[None, :]) / xi)
    return q


def random_attention(n, rng):
    a = rng.uniform(-1, 1, (n, n))
    q = (a + a.T) / 2
    np.fill_diagonal(q, 1.0)
    return AttentionMatrix(q)


class TestReferenceQubit:
    def test_tie_breaks_low(self):
        assert reference_qubit(AttentionMatrix(np.ones((9, 9)))) == 0

    def test_halved_row(self):
        q = np.full((9, 9), 0.8)
        np.fill_diagonal(q, 1)
        q[6, :6] /= 2
        q[6, 7:] /= 2
        q[:, 6] = q[6, :]
        assert reference_qubit(AttentionMatrix(q)) == 6

    def test_decoupled_first_qubit(self):
        q = np.full((9, 9), 0.9)
        q[0, 1:] = q[1:, 0] = 0.05
        np.fill_diagonal(q, 1)
        assert reference_qubit(AttentionMatrix(q)) == 0

    def test_permutation_covariant(self, rng):
        for _ in range(20):
            m = random_attention(7, rng)
            perm = rng.permutation(7)
            inv = np.argsort(perm)
            permuted = AttentionMatrix(m.q[np.ix_(perm, perm)])
            assert inv[reference_qubit(m)] == reference_qubit(permuted)

    def test_needs_three(self):
        with pytest.raises(UsageError):
            reference_qubit(AttentionMatrix(np.eye(2)))


class TestContrast:
    def test_values(self):
        assert contrast_value(0.4, 0.4) == 0
        assert contrast_value(0.6, 0.2) == pytest.approx(0.5)

    def test_antisymmetry(self, rng):
        for a, b in rng.uniform(-1, 1, (20, 2)):
            assert contrast_value(a, b) == pytest.approx(-contrast_value(b, a), abs=1e-15)

    def test_undefined(self):
        with pytest.raises(UndefinedContrastError):
            contrast_value(0.3, -0.3)

    def test_entries_for_first_qubit(self):
        q = np.full((9, 9), 0.9)
        q[0, 1:] = q[1:, 0] = np.linspace(0.6, 0.2, 8)
        np.fill_diagonal(q, 1)
        c = contrast(AttentionMatrix(q))
        assert (c.reference_qubit, c.side) == (0, "after")
        assert c.q_near == pytest.approx(0.6) and c.q_long == pytest.approx(0.2) and c.C == pytest.approx(0.5)

    def test_side_before(self):
        q = np.full((9, 9), 0.9)
        q[7, :7] = q[:7, 7] = np.linspace(0.1, 0.5, 7)
        q[7, 8] = q[8, 7] = 0.5
        np.fill_diagonal(q, 1)
        c = contrast(AttentionMatrix(q))
        assert (c.reference_qubit, c.side) == (7, "before")
        assert c.q_near == q[7, 6] and c.q_long == q[7, 0]

    def test_tie_goes_after(self):
        q = np.full((9, 9), 0.9)
        q[4, :] = q[:, 4] = 0.1
        np.fill_diagonal(q, 1)
        assert contrast(AttentionMatrix(q)).side == "after"


class TestProfile:
    def test_constant_offdiagonal(self):
        q = np.full((6, 6), 0.37)
        np.fill_diagonal(q, 1)
        assert np.allclose(distance_profile(q), 0.37)

    def test_entry_counts(self, rng):
        sub = rng.uniform(size=(6, 6))
        f = distance_profile(sub)
        for r in range(1, 6):
            assert f[r - 1] == pytest.approx(sum(sub[i, i + r] for i in range(6 - r)) / (6 - r))

    def test_exact_exponential(self):
        q = np.ones((9, 9))
        q[1:, 1:] = exp_matrix(8, 2.0)
        q[0, 1:] = q[1:, 0] = 0.0
        p = correlation_profile(AttentionMatrix(q))
        assert p.reference_qubit == 0 and p.n_sub == 8
        assert abs(p.xi - 2.0) < 1e-6 and not p.non_decaying

    @pytest.mark.parametrize("xi", [0.5, 1, 2, 5, 10])
    def test_planted_lengths(self, xi):
        r = np.arange(1, 8)
        fitted, _, used, flat = fit_decay_length(0.7 * np.exp(-r / xi))
        assert abs(fitted - xi) / xi < 0.01 and used == 7 and not flat

    def test_flat_profile(self):
        xi, slope, used, flat = fit_decay_length(np.full(6, 0.4))
        assert flat and xi == pytest.approx(1e12)

    def test_growing_profile_flagged(self):
        xi, slope, _, flat = fit_decay_length(np.exp(np.arange(5) * 0.1))
        assert flat and slope > 0 and xi == pytest.approx(10)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_decay_length([0.5, 0.0, -0.1])

    def test_side_submatrix(self):
        m = AttentionMatrix(np.eye(5))
        assert side_submatrix(m, 1, "after").shape == (3, 3)
        assert side_submatrix(m, 3, "before").shape == (3, 3)

    def test_small_side(self):
        q = np.full((4, 4), 0.9)
        q[1, :] = q[:, 1] = 0.1
        np.fill_diagonal(q, 1)
        with pytest.raises(UsageError):
            correlation_profile(AttentionMatrix(q))


class TestHelpers:
    def test_sign_crossings(self):
        x = np.linspace(-1, 1, 21)
        assert np.allclose(sign_crossings(x, x - 0.33), [0.33])
        assert sign_crossings(x, np.ones(21)) == []
        v = np.array([1.0, 0.0, -1.0, 0.0, -2.0])
        assert sign_crossings(np.arange(5.0), v) == [1.0]

    def test_sweep_grid(self):
        h2 = sweep_h2_values()
        assert h2.size == 65 and h2[0] == -1.6 and h2[-1] == 1.6 and 0.0 in h2
        assert nearest_grid_value(np.linspace(0, 1.6, 50), 0.39) == pytest.approx(0.391836734694)

    def test_cell_seeds_distinct(self):
        seeds = {cell_seed(0, s, r) for s in (5, 10) for r in range(10)}
        assert len(seeds) == 20

    def test_csv_digest(self, tmp_path):
        write_csv(tmp_path / "a.csv", ["x", "y"], [(1, 0.1234567890123456)], digest="abc")
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines == ["# config_digest=abc", "x,y", "1,0.123456789012"]
        assert read_csv_digest(tmp_path / "a.csv") == "abc"


@pytest.fixture(scope="module")
def small_dataset():
    return generate_dataset(N=5, shape=(6, 9), seed=1)


class TestExperiments:
    def test_phase_diagram(self, small_dataset):
        grid, bounds = phase_diagram(small_dataset)
        assert len(grid) == 54
        for h1, h2, s, label in grid:
            assert (abs(s) >= 0.5) == (label == "SPT")
        assert all(len([b for b in bounds if b[0] == h1]) <= 2 for h1 in small_dataset.h1_values)

    def test_accuracy_experiment(self, small_dataset):
        rows = accuracy_experiment(small_dataset, [5, 10], repeats=2, seed=0, config=TrainConfig(epochs=5))
        assert [r.size for r in rows] == [5, 10]
        for r in rows:
            assert len(r.accuracies) == 2 and r.failures == 0
            assert r.ci_half_width == pytest.approx(1.96 * r.std / np.sqrt(2))
        again = accuracy_experiment(small_dataset, [5, 10], repeats=2, seed=0, config=TrainConfig(epochs=5))
        assert [r.accuracies for r in rows] == [r.accuracies for r in again]

    def test_accuracy_validation(self, small_dataset):
        with pytest.raises(UsageError):
            accuracy_experiment(small_dataset, [5], repeats=1)
        with pytest.raises(UsageError):
            accuracy_experiment(small_dataset, [54], repeats=2)
