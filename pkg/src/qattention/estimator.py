"""scikit-learn estimator wrapping the swap-attention phase classifier.

``X`` is an ``(n_samples, 2**n)`` array of statevector amplitudes (or a
list of ``StateVector``); ``y`` holds phase labels as integers
(AFM=0, SPT=1, PM=2) or their names.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .ansatz import apply_ansatz_array
from .attention import attention_features_array
from .classifier import ModelCheckpoint, TrainConfig, predict_proba_array, train
from .hamiltonian import PhaseLabel
from .statevec import as_amplitude_batch, check_batch_norms


def check_states(X, n_qubits=None):
    """Validate and copy ``X`` into a C-contiguous complex ``(B, 2**n)`` array."""
    psi = as_amplitude_batch(X, n_qubits)
    if not np.all(np.isfinite(psi)):
        raise ValueError("state amplitudes contain NaN or infinity")
    check_batch_norms(psi)
    return psi


def check_labels(y, n_samples):
    y = np.asarray([int(PhaseLabel[v]) if isinstance(v, str) else int(v) for v in np.ravel(y)])
    if y.size != n_samples:
        raise ValueError(f"got {y.size} labels for {n_samples} states")
    if y.size and (y.min() < 0 or y.max() > 2):
        raise ValueError("labels must be 0 (AFM), 1 (SPT) or 2 (PM)")
    return y


class SwapAttentionClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Trainable RY/CRX feature map, swap-test attention and a softmax head.

    ``transform`` returns the upper-triangle attention features of the
    feature-mapped states, so the fitted map can feed other estimators.
    """

    def __init__(self, layers=1, learning_rate=0.05, epochs=200, batch_size=None, beta1=0.9, beta2=0.999,
                 eps=1e-8, init_scale=0.1, random_state=0):
        self.layers = layers
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.init_scale = init_scale
        self.random_state = random_state

    def _train_config(self):
        seed = self.random_state if self.random_state is not None else 0
        return TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs, seed=int(seed),
                           batch=self.batch_size, beta1=self.beta1, beta2=self.beta2, eps=self.eps,
                           init_scale=self.init_scale)

    def fit(self, X, y):
        psi = check_states(X)
        y = check_labels(y, psi.shape[0])
        ckpt, history = train(psi, y, self._train_config(), layers=self.layers)
        self._set_checkpoint(ckpt)
        self.loss_history_ = np.asarray(history)
        return self

    def _set_checkpoint(self, ckpt):
        self.checkpoint_ = ckpt
        self.n_qubits_ = ckpt.n_qubits
        self.theta_ = ckpt.theta
        self.coef_ = ckpt.W
        self.intercept_ = ckpt.b
        self.classes_ = np.arange(len(PhaseLabel))

    @classmethod
    def from_checkpoint(cls, ckpt: ModelCheckpoint):
        cfg = ckpt.metadata.get("train_config", {})
        est = cls(layers=ckpt.layers, learning_rate=cfg.get("learning_rate", 0.05), epochs=cfg.get("epochs", 200),
                  random_state=cfg.get("seed", 0))
        est._set_checkpoint(ckpt)
        return est

    def transform(self, X):
        check_is_fitted(self, "checkpoint_")
        psi = check_states(X, self.n_qubits_)
        apply_ansatz_array(psi, self.n_qubits_, self.theta_, self.checkpoint_.layers)
        return attention_features_array(psi, self.n_qubits_)

    def decision_function(self, X):
        feats = self.transform(X)
        return feats @ self.coef_.T + self.intercept_

    def predict_proba(self, X):
        check_is_fitted(self, "checkpoint_")
        return predict_proba_array(check_states(X, self.n_qubits_), self.checkpoint_)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

