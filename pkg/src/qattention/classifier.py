"""Softmax head over attention features and the joint (theta, W, b) training loop."""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .ansatz import AnsatzParams, adjoint_gradient_array, apply_ansatz_array, param_count
from .attention import AttentionMatrix, attention_analytic, attention_features_array, upper_triangle
from .errors import DimensionError, NumericalHealthError, UsageError
from .hamiltonian import PhaseLabel
from .statevec import StateVector, as_amplitude_batch, check_batch_norms

logger = logging.getLogger(__name__)

N_CLASSES = 3
PROB_FLOOR = 1e-12


@dataclass
class ClassifierParams:
    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.W.shape[0] != N_CLASSES or self.b.shape != (N_CLASSES,):
            raise DimensionError(f"W must be (3, m) and b (3,), got {self.W.shape}, {self.b.shape}")

    @classmethod
    def zeros(cls, m):
        return cls(np.zeros((N_CLASSES, m)), np.zeros(N_CLASSES))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    seed: int = 0
    batch: int | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_scale: float = 0.1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise UsageError("learning_rate must be positive")
        if self.epochs < 1:
            raise UsageError("epochs must be at least 1")
        if self.batch is not None and self.batch < 1:
            raise UsageError("batch must be positive or None (full batch)")

    def to_dict(self):
        return asdict(self)


@dataclass
class ModelCheckpoint:
    n_qubits: int
    layers: int
    theta: np.ndarray
    W: np.ndarray
    b: np.ndarray
    labels: tuple = tuple(p.name for p in PhaseLabel)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).ravel()
        m = self.n_qubits * (self.n_qubits - 1) // 2
        if self.theta.size != param_count(self.n_qubits, self.layers):
            raise DimensionError("theta length does not match 4 * n * layers")
        ClassifierParams(self.W, self.b)
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.shape[1] != m:
            raise DimensionError(f"W has {self.W.shape[1]} columns, expected {m}")
        self.labels = tuple(self.labels)

    @property
    def ansatz(self):
        return AnsatzParams(self.n_qubits, self.layers, self.theta)

    @property
    def head(self):
        return ClassifierParams(self.W, self.b)


def softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def forward(q_vec, p):
    """Class probabilities ``softmax(W q + b)``; ``q_vec`` may be ``(m,)`` or ``(B, m)``."""
    q_vec = np.asarray(q_vec, dtype=np.float64)
    if q_vec.shape[-1] != p.W.shape[1]:
        raise DimensionError(f"feature length {q_vec.shape[-1]} does not match W ({p.W.shape[1]})")
    return softmax(q_vec @ p.W.T + p.b)


def cross_entropy(pred, label):
    pred = np.asarray(pred, dtype=np.float64)
    return float(-np.log(max(pred[int(label)], PROB_FLOOR)))


def _as_labels(labels):
    out = []
    for y in labels:
        if isinstance(y, str):
            out.append(int(PhaseLabel[y]))
        else:
            out.append(int(y))
    out = np.asarray(out, dtype=np.int64)
    if out.size and (out.min() < 0 or out.max() >= N_CLASSES):
        raise UsageError(f"labels must be in 0..{N_CLASSES - 1}")
    return out


def batch_loss_gradients(psi, labels, theta, W, b, layers):
    """Mean cross-entropy over a batch and its gradients.

    ``psi`` is ``(B, 2**n)`` input amplitudes. The head gradients are the
    closed-form softmax backprop; the theta gradient is one adjoint sweep
    with observable weights ``dLoss/dq_ij``.
    Returns ``(loss, grad_theta, grad_W, grad_b, features)``.
    """
    n = int(psi.shape[-1]).bit_length() - 1
    labels = _as_labels(labels)
    B = psi.shape[0]

    phi = apply_ansatz_array(psi.copy(), n, theta, layers)
    check_batch_norms(phi)
    feats = attention_features_array(phi, n)
    probs = softmax(feats @ W.T + b)
    picked = np.maximum(probs[np.arange(B), labels], PROB_FLOOR)
    loss = float(-np.mean(np.log(picked)))

    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B
    grad_W = dlogits.T @ feats
    grad_b = dlogits.sum(axis=0)
    dfeats = dlogits @ W
    grad_theta, _ = adjoint_gradient_array(psi, n, theta, layers, dfeats)
    return loss, grad_theta, grad_W, grad_b, feats


def loss_gradients(sample, params):
    """Per-sample ``(grad_theta, grad_W, grad_b, loss)``.

    ``sample`` is anything with ``state`` and ``label`` attributes (e.g. a
    ``GroundStateRecord`` with its state attached).
    """
    state = getattr(sample, "state", None)
    if state is None:
        raise UsageError("sample has no statevector attached; regenerate it from its spec first")
    if state.n_qubits != params.n_qubits:
        raise DimensionError(f"state has {state.n_qubits} qubits, checkpoint expects {params.n_qubits}")
    loss, g_t, g_w, g_b, _ = batch_loss_gradients(
        state.amplitudes[None, :], [sample.label], params.theta, params.W, params.b, params.layers
    )
    return g_t, g_w, g_b, loss


class Adam:
    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(states, labels, config=None, layers=1, theta0=None):
    """Jointly optimise (theta, W, b) with Adam on the mean cross-entropy.

    ``states`` is a sequence of StateVectors or a ``(B, 2**n)`` array.
    With ``config.batch`` unset every step sees the full set; otherwise the
    set is reshuffled each epoch with the run seed. Returns
    ``(ModelCheckpoint, loss_history)`` where the history holds the loss
    evaluated before each epoch's update.
    """
    config = config or TrainConfig()
    psi = as_amplitude_batch(states)
    y = _as_labels(labels)
    if psi.shape[0] != y.size or y.size == 0:
        raise UsageError(f"need a nonempty set with one label per state ({psi.shape[0]} vs {y.size})")
    n = int(psi.shape[1]).bit_length() - 1
    missing = sorted(set(range(N_CLASSES)) - set(y.tolist()))
    if missing:
        warnings.warn(
            f"training set lacks classes {[PhaseLabel(k).name for k in missing]}", RuntimeWarning, stacklevel=2
        )

    rng = np.random.default_rng(config.seed)
    if theta0 is None:
        theta = AnsatzParams.random(n, layers, rng, config.init_scale).theta
    else:
        theta = AnsatzParams(n, layers, theta0).theta.copy()
    m = n * (n - 1) // 2
    W = np.zeros((N_CLASSES, m))
    b = np.zeros(N_CLASSES)
    opt = Adam([theta.shape, W.shape, b.shape], config.learning_rate, config.beta1, config.beta2, config.eps)

    history = []
    batch = config.batch or y.size
    for epoch in range(config.epochs):
        order = np.arange(y.size) if batch >= y.size else rng.permutation(y.size)
        epoch_loss = 0.0
        for start in range(0, y.size, batch):
            sel = order[start : start + batch]
            diagnostics = (f"epoch {epoch}: |theta|={np.linalg.norm(theta):.3e}, |W|={np.linalg.norm(W):.3e}, "
                           f"|b|={np.linalg.norm(b):.3e}, batch samples {sel.tolist()}")
            try:
                loss, g_t, g_w, g_b, _ = batch_loss_gradients(psi[sel], y[sel], theta, W, b, layers)
            except NumericalHealthError as exc:
                raise NumericalHealthError(f"{exc} at {diagnostics}") from exc
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in (g_t, g_w, g_b)):
                raise NumericalHealthError(f"non-finite loss at {diagnostics}")
            epoch_loss += loss * sel.size
            opt.step([theta, W, b], [g_t, g_w, g_b])
        history.append(epoch_loss / y.size)
        logger.debug("epoch %d loss %.6f", epoch, history[-1])

    final_loss = batch_loss_gradients(psi, y, theta, W, b, layers)[0]
    ckpt = ModelCheckpoint(
        n_qubits=n,
        layers=layers,
        theta=theta,
        W=W,
        b=b,
        metadata={"seed": config.seed, "train_config": config.to_dict(), "final_loss": final_loss,
                  "n_train": int(y.size)},
    )
    return ckpt, history


def attention_of(state, checkpoint):
    """Attention matrix of ``U(theta)|state>`` under a trained checkpoint."""
    if state.n_qubits != checkpoint.n_qubits:
        raise DimensionError(f"state has {state.n_qubits} qubits, checkpoint expects {checkpoint.n_qubits}")
    phi = state.copy()
    apply_ansatz_array(phi.amplitudes, phi.n_qubits, checkpoint.theta, checkpoint.layers)
    phi.check_norm()
    return attention_analytic(phi)


def predict(state, checkpoint):
    """``(PhaseLabel, probabilities)`` for one state."""
    probs = forward(upper_triangle(attention_of(state, checkpoint)), checkpoint.head)
    return PhaseLabel(int(np.argmax(probs))), probs


def predict_proba_array(psi, checkpoint, chunk=256):
    """Batched probabilities for a ``(B, 2**n)`` array, processed in chunks."""
    psi = as_amplitude_batch(psi, checkpoint.n_qubits)
    out = []
    for start in range(0, psi.shape[0], chunk):
        phi = apply_ansatz_array(psi[start : start + chunk].copy(), checkpoint.n_qubits,
                                 checkpoint.theta, checkpoint.layers)
        check_batch_norms(phi)
        out.append(forward(attention_features_array(phi, checkpoint.n_qubits), checkpoint.head))
    return np.concatenate(out)


__all__ = [
    "Adam",
    "AttentionMatrix",
    "ClassifierParams",
    "ModelCheckpoint",
    "StateVector",
    "TrainConfig",
    "attention_of",
    "batch_loss_gradients",
    "cross_entropy",
    "forward",
    "loss_gradients",
    "predict",
    "predict_proba_array",
    "softmax",
    "train",
]
