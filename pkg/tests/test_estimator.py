import numpy as np
import pytest
from sklearn.utils.estimator_checks import parametrize_with_checks

from ditherlab import DitherMLPClassifier
from conftest import toy_dataset

SIZES = (10, 5, 3)


def small_clf(**kw):
    defaults = dict(hidden_units=5, epochs=10, learning_rate=0.05, random_state=0)
    defaults.update(kw)
    return DitherMLPClassifier(**defaults)


@pytest.fixture(scope="module")
def blobs():
    train = toy_dataset(n=40, sizes=SIZES, seed=5, centers_seed=99)
    test = toy_dataset(n=60, sizes=SIZES, seed=6, centers_seed=99)
    return train, test


class TestProtocol:
    def test_get_set_params_roundtrip(self):
        clf = small_clf(regime="parallel_dither", replicas=7)
        params = clf.get_params()
        clone = DitherMLPClassifier(**params)
        assert clone.get_params() == params
        clone.set_params(epochs=3)
        assert clone.get_params()["epochs"] == 3

    def test_unfitted_predict_raises(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            small_clf().predict(np.zeros((1, 10)))

    def test_classes_preserved(self, blobs):
        train, _ = blobs
        labels = np.array(["lo", "mid", "hi"])[train.labels]
        clf = small_clf(epochs=2).fit(train.inputs, labels)
        assert sorted(clf.classes_) == ["hi", "lo", "mid"]
        assert set(clf.predict(train.inputs)) <= set(clf.classes_)


class TestBehavior:
    def test_learns_blobs(self, blobs):
        train, test = blobs
        clf = small_clf(epochs=40).fit(train.inputs, train.labels)
        assert clf.score(test.inputs, test.labels) > 0.6

    def test_deterministic_given_random_state(self, blobs):
        train, test = blobs
        a = small_clf(regime="parallel_dither", replicas=4, epochs=3)
        b = small_clf(regime="parallel_dither", replicas=4, epochs=3)
        a.fit(train.inputs, train.labels)
        b.fit(train.inputs, train.labels)
        assert np.array_equal(a.predict_proba(test.inputs), b.predict_proba(test.inputs))

    def test_random_state_changes_fit(self, blobs):
        train, test = blobs
        a = small_clf(random_state=0).fit(train.inputs, train.labels)
        b = small_clf(random_state=1).fit(train.inputs, train.labels)
        assert not np.array_equal(a.predict_proba(test.inputs),
                                  b.predict_proba(test.inputs))

    def test_predict_proba_rows_normalized(self, blobs):
        train, test = blobs
        clf = small_clf(epochs=2).fit(train.inputs, train.labels)
        probs = clf.predict_proba(test.inputs)
        assert probs.shape == (60, 3)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(probs >= 0)

    @pytest.mark.parametrize("regime", ["dropout", "parallel_dither",
                                        "parallel_dither_dropout"])
    def test_all_regimes_fit(self, blobs, regime):
        train, _ = blobs
        clf = small_clf(regime=regime, replicas=3, epochs=2)
        clf.fit(train.inputs, train.labels)
        assert clf.predict(train.inputs).shape == (40,)

    def test_invalid_regime_rejected(self, blobs):
        train, _ = blobs
        with pytest.raises(ValueError):
            small_clf(regime="jitter").fit(train.inputs, train.labels)


@parametrize_with_checks([DitherMLPClassifier(hidden_units=16, epochs=40,
                                              learning_rate=0.1)])
def test_sklearn_compatibility(estimator, check):
    check(estimator)
