"""Interpretation of attention matrices and the figure-level experiments.

Contrast between near and far attention around a weakly attended
reference qubit, the distance profile ``f(r)`` of a one-sided submatrix with
its exponential decay length, phase-diagram grids, contrast / length
sweeps and the training-size accuracy study.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .attention import AttentionMatrix
from .classifier import TrainConfig, attention_of, predict_proba_array, train
from .errors import FitError, QAttentionError, UndefinedContrastError, UsageError
from .hamiltonian import HamiltonianSpec, PhaseLabel, ground_state, second_derivative_boundaries

logger = logging.getLogger(__name__)

XI_CAP = 1e12
FLOAT_FMT = ".12g"


def reference_qubit(m):
    """Index of the qubit with the smallest off-diagonal row sum (lowest index on ties)."""
    if m.n < 3:
        raise UsageError("reference qubit needs n >= 3")
    sums = m.q.sum(axis=1) - np.diag(m.q)
    return int(np.argmin(sums))


def _side(k, n):
    before, after = k, n - 1 - k
    return "after" if after >= before else "before"


@dataclass
class ContrastResult:
    reference_qubit: int
    side: str
    q_near: float
    q_long: float
    C: float
    h1: float | None = None
    h2: float | None = None


def contrast_value(q_near, q_long):
    denom = q_near + q_long
    if abs(denom) <= 1e-12:
        raise UndefinedContrastError(f"q_near + q_long = {denom:.3e}; contrast undefined")
    return (q_near - q_long) / denom


def contrast(m, h1=None, h2=None):
    """Near-vs-far contrast seen from the reference qubit, on its larger side."""
    k = reference_qubit(m)
    side = _side(k, m.n)
    if side == "after":
        near, far = k + 1, m.n - 1
    else:
        near, far = k - 1, 0
    q_near, q_long = float(m.q[k, near]), float(m.q[k, far])
    return ContrastResult(k, side, q_near, q_long, contrast_value(q_near, q_long), h1, h2)


@dataclass
class CorrelationProfile:
    reference_qubit: int
    side: str
    n_sub: int
    f: np.ndarray
    xi: float
    fit_slope: float
    fit_points_used: int
    non_decaying: bool

    @property
    def distances(self):
        return np.arange(1, self.n_sub)


def side_submatrix(m, k, side):
    """Attention restricted to the qubits strictly on ``side`` of qubit ``k``."""
    idx = np.arange(k + 1, m.n) if side == "after" else np.arange(0, k)
    return m.q[np.ix_(idx, idx)]


def distance_profile(sub):
    """``f(r) = mean_i sub[i, i + r]`` for ``r = 1 .. N_sub - 1``."""
    n_sub = sub.shape[0]
    return np.array([np.mean(np.diagonal(sub, offset=r)) for r in range(1, n_sub)])


def fit_decay_length(f):
    """Least-squares ``ln f(r) = a + slope * r`` over entries with ``f > 1e-12``.

    Returns ``(xi, slope, points_used, non_decaying)``. A non-negative slope
    (within 1e-12) has no decay length; ``xi`` is then ``1/max(|slope|, 1e-12)``
    and the flag is set.
    """
    f = np.asarray(f, dtype=float)
    r = np.arange(1, f.size + 1)
    usable = f > 1e-12
    if usable.sum() < 2:
        raise FitError(f"only {int(usable.sum())} positive profile points; need 2 for a fit")
    slope = float(np.polyfit(r[usable], np.log(f[usable]), 1)[0])
    if slope < -1e-12:
        return -1.0 / slope, slope, int(usable.sum()), False
    return 1.0 / max(abs(slope), 1.0 / XI_CAP), slope, int(usable.sum()), True


def correlation_profile(m):
    k = reference_qubit(m)
    side = _side(k, m.n)
    sub = side_submatrix(m, k, side)
    if sub.shape[0] < 3:
        raise UsageError(f"side '{side}' of qubit {k} has {sub.shape[0]} qubits; need at least 3")
    f = distance_profile(sub)
    xi, slope, used, flat = fit_decay_length(f)
    return CorrelationProfile(k, side, sub.shape[0], f, xi, slope, used, flat)


def sign_crossings(x, values):
    """Locations where ``values`` changes sign, by linear interpolation."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    out = []
    for a in range(v.size - 1):
        if v[a] == 0.0:
            if a > 0 and np.sign(v[a - 1]) != np.sign(v[a + 1]) and v[a - 1] != 0:
                out.append(float(x[a]))
            continue
        if v[a] * v[a + 1] < 0:
            out.append(float(x[a] - v[a] * (x[a + 1] - x[a]) / (v[a + 1] - v[a])))
    return out


# ---------------------------------------------------------------------------
# experiments


def sweep_h2_values(lo=-1.6, hi=1.6, step=0.05):
    count = int(round((hi - lo) / step)) + 1
    return np.round(np.linspace(lo, hi, count), 12)


def nearest_grid_value(values, target):
    values = np.asarray(values, dtype=float)
    return float(values[np.argmin(np.abs(values - target))])


@dataclass
class SweepPoint:
    h1: float
    h2: float
    energy: float
    label: PhaseLabel
    contrast: ContrastResult | None
    profile: CorrelationProfile | None
    attention: AttentionMatrix


def attention_sweep(checkpoint, h1, h2_values, seed=0, tau_s=0.5, tau_a=0.3):
    """Ground states along a fixed-``h1`` cut, pushed through a trained model."""
    from .hamiltonian import label_point, nn_xx, string_order

    N = checkpoint.n_qubits
    points = []
    for h2 in h2_values:
        energy, state, _ = ground_state(HamiltonianSpec(N, float(h1), float(h2)), seed=seed)
        label = label_point(string_order(state, N), nn_xx(state, N), tau_s, tau_a)
        m = attention_of(state, checkpoint)
        try:
            c = contrast(m, h1, float(h2))
        except UndefinedContrastError:
            c = None
        try:
            p = correlation_profile(m)
        except (FitError, UsageError):
            p = None
        points.append(SweepPoint(float(h1), float(h2), energy, label, c, p, m))
    return points


def sweep_boundaries(points):
    h2 = np.array([p.h2 for p in points])
    energy = np.array([p.energy for p in points])
    return second_derivative_boundaries(energy, h2)


def phase_diagram(dataset):
    """Grid rows ``(h1, h2, <S>, label)`` and per-row second-derivative boundaries.

    Boundaries are located along ``h2`` at every fixed ``h1``; the result
    holds ``(h1, h2_boundary, branch)`` with branch 0 the lower crossover.
    """
    n1, n2 = dataset.shape
    if len(dataset.records) != n1 * n2:
        raise UsageError(f"dataset has {len(dataset.records)} records, grid needs {n1 * n2}")
    grid = [(r.h1, r.h2, r.string_order, r.label.name) for r in dataset.records]
    boundaries = []
    if n2 >= 5:
        for i1, h1 in enumerate(dataset.h1_values):
            for branch, b in enumerate(second_derivative_boundaries(dataset.row_values(i1), dataset.h2_values)):
                boundaries.append((float(h1), b, branch))
    return grid, boundaries


def cell_seed(seed, size, repeat):
    return int(np.random.SeedSequence([seed, size, repeat]).generate_state(1, dtype=np.uint32)[0])


@dataclass
class AccuracyRow:
    size: int
    mean: float
    ci_half_width: float
    std: float
    accuracies: list
    failures: int


def accuracy_experiment(dataset, sizes, repeats=10, seed=0, config=None, layers=1, states=None):
    """Train on random subsets of each size and score on the remaining records.

    Per-cell seeds are derived from ``(seed, size, repeat)``; the cell seed
    both draws the training subset and initialises theta. Failed cells are
    logged and counted, not raised. The CI half-width is the normal
    approximation ``1.96 * std / sqrt(k)`` over the ``k`` successful repeats.
    """
    if repeats < 2:
        raise UsageError("repeats must be at least 2")
    config = config or TrainConfig()
    total = len(dataset.records)
    for s in sizes:
        if not 1 <= s < total:
            raise UsageError(f"training size {s} infeasible for {total} records")
    psi = dataset.states_array() if states is None else states
    y = dataset.labels
    rows = []
    for size in sizes:
        accs, failures = [], 0
        for rep in range(repeats):
            cseed = cell_seed(seed, size, rep)
            rng = np.random.default_rng(cseed)
            perm = rng.permutation(total)
            tr, te = perm[:size], perm[size:]
            cfg = TrainConfig(**{**config.to_dict(), "seed": cseed})
            try:
                ckpt, _ = train(psi[tr], y[tr], cfg, layers=layers)
                pred = predict_proba_array(psi[te], ckpt).argmax(axis=1)
                accs.append(float(np.mean(pred == y[te])))
            except QAttentionError as exc:
                failures += 1
                logger.warning("cell size=%d repeat=%d failed: %s", size, rep, exc)
        if accs:
            std = float(np.std(accs, ddof=1)) if len(accs) > 1 else 0.0
            rows.append(AccuracyRow(size, float(np.mean(accs)), 1.96 * std / np.sqrt(len(accs)), std, accs,
                                    failures))
        else:
            rows.append(AccuracyRow(size, float("nan"), float("nan"), float("nan"), [], failures))
    return rows


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), FLOAT_FMT)
    return v


def write_csv(path, header, rows, digest=None):
    """CSV with an optional leading ``# config_digest=...`` comment line."""
    with open(path, "w", newline="") as fh:
        if digest:
            fh.write(f"# config_digest={digest}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv_digest(path):
    with open(path) as fh:
        first = fh.readline().strip()
    if first.startswith("# config_digest="):
        return first.split("=", 1)[1]
    return None


def accuracy_rows(rows):
    return [(r.size, r.mean, r.ci_half_width, r.std, len(r.accuracies), r.failures) for r in rows]


ACCURACY_HEADER = ["size", "mean_accuracy", "ci95_half_width", "std", "repeats_ok", "failures"]
CONTRAST_HEADER = ["h1", "h2", "label", "reference_qubit", "side", "q_near", "q_long", "C"]
XI_HEADER = ["h1", "h2", "label", "reference_qubit", "side", "n_sub", "xi", "fit_slope", "fit_points",
             "non_decaying"]


def contrast_rows(points):
    rows = []
    for p in points:
        c = p.contrast
        if c is None:
            rows.append((p.h1, p.h2, p.label.name, "", "", "", "", "nan"))
        else:
            rows.append((p.h1, p.h2, p.label.name, c.reference_qubit, c.side, c.q_near, c.q_long, c.C))
    return rows


def xi_rows(points):
    rows = []
    for p in points:
        pr = p.profile
        if pr is None:
            rows.append((p.h1, p.h2, p.label.name, "", "", "", "nan", "nan", 0, ""))
        else:
            rows.append((p.h1, p.h2, p.label.name, pr.reference_qubit, pr.side, pr.n_sub, pr.xi, pr.fit_slope,
                         pr.fit_points_used, int(pr.non_decaying)))
    return rows
