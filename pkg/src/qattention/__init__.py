"""Quantum phase recognition with swap-test attention.

Cluster-Ising ground states, a trainable RY/CRX feature map, swap-test
attention matrices, a softmax classifier head trained jointly with the
circuit, and contrast / correlation-length analysis of the attention.

Qubit 0 is the least-significant bit of every basis index.
"""

from .analysis import (
    accuracy_experiment,
    attention_sweep,
    contrast,
    correlation_profile,
    fit_decay_length,
    phase_diagram,
    reference_qubit,
)
from .ansatz import AnsatzParams, apply_ansatz, gradient_expectations, param_count
from .attention import AttentionMatrix, attention_analytic, attention_circuit, upper_triangle
from .checkpoint import load_checkpoint, save_checkpoint
from .classifier import ModelCheckpoint, TrainConfig, cross_entropy, forward, loss_gradients, predict, train
from .config import RunConfig, load_config
from .dataset import Dataset, generate_dataset, load_dataset
from .errors import (
    CompatibilityError,
    ConvergenceError,
    NumericalHealthError,
    QAttentionError,
    StorageError,
    UsageError,
)
from .estimator import SwapAttentionClassifier
from .hamiltonian import (
    HamiltonianSpec,
    PhaseLabel,
    build_terms,
    ground_state,
    label_point,
    nn_xx,
    second_derivative_boundaries,
    string_order,
)
from .statevec import (
    PauliString,
    StateVector,
    apply_crx,
    apply_cswap,
    apply_h,
    apply_ry,
    basis_state,
    expect_pauli,
    inner_product,
    prob_qubit_zero,
    swap_qubits,
    zero_state,
)

__version__ = "0.1.0"
