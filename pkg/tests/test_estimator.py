import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.linear_model import LogisticRegression

from qattention.dataset import generate_dataset
from qattention.estimator import SwapAttentionClassifier, check_labels, check_states


@pytest.fixture(scope="module")
def data():
    ds = generate_dataset(N=5, shape=(6, 8), seed=0)
    return ds.states_array(), ds.labels


def test_params_and_clone():
    est = SwapAttentionClassifier(layers=2, learning_rate=0.02, random_state=4)
    params = est.get_params()
    assert params["layers"] == 2 and params["learning_rate"] == 0.02
    c = clone(est)
    assert c.get_params() == params and c is not est
    est.set_params(epochs=7)
    assert est.epochs == 7


def test_fit_predict(data):
    X, y = data
    est = SwapAttentionClassifier(epochs=30).fit(X, y)
    assert est.theta_.shape == (20,) and est.coef_.shape == (3, 10)
    assert list(est.classes_) == [0, 1, 2]
    proba = est.predict_proba(X)
    assert proba.shape == (48, 3) and np.allclose(proba.sum(axis=1), 1)
    assert np.array_equal(est.predict(X), proba.argmax(axis=1))
    assert 0 <= est.score(X, y) <= 1
    assert est.transform(X).shape == (48, 10)
    assert np.allclose(est.decision_function(X), est.transform(X) @ est.coef_.T + est.intercept_)
    assert len(est.loss_history_) == 30


def test_matches_functional_api(data):
    from qattention.classifier import TrainConfig, train

    X, y = data
    est = SwapAttentionClassifier(epochs=10, random_state=2).fit(X, y)
    ckpt, _ = train(X, y, TrainConfig(epochs=10, seed=2))
    assert np.array_equal(est.theta_, ckpt.theta)
    again = SwapAttentionClassifier.from_checkpoint(est.checkpoint_)
    assert np.array_equal(again.predict_proba(X), est.predict_proba(X))


def test_transform_feeds_pipeline(data):
    X, y = data
    pipe = make_pipeline(SwapAttentionClassifier(epochs=5), LogisticRegression(max_iter=500))
    # the transformer is fit on (X, y) before handing features on
    pipe.fit(X, y)
    assert pipe.predict(X).shape == (48,)


def test_unfitted():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        SwapAttentionClassifier().predict(np.eye(8)[:2])


def test_validation():
    with pytest.raises(ValueError):
        check_states(np.full((2, 8), np.nan))
    with pytest.raises(ValueError):
        check_labels([0, 1], 3)
    with pytest.raises(ValueError):
        check_labels([0, 5], 2)
    assert check_labels(["AFM", "PM"], 2).tolist() == [0, 2]
