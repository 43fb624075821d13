import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from attention_overload import AttentionFrequencyBounds, PreferenceTest
from attention_overload.core import Alphabet, Menu, Preference
from attention_overload.estimators import check_choice_data, check_preference
from attention_overload.io import counts_from_rule
from attention_overload.models import Dataset

from conftest import example_rule


@pytest.fixture(scope="module")
def example_data():
    _, pi = example_rule()
    return counts_from_rule(pi, 4000)


def as_lists(data: Dataset):
    al = data.alphabet
    X = [Menu(int(b)).format(al) for b in data.menus]
    y = [al.label(int(c)) for c in data.choices]
    return X, y


class TestCheckChoiceData:
    def test_sequences(self):
        data = check_choice_data(["a;b", ["b", "c"], "a;b"], ["a", "c", "b"])
        assert data.alphabet.labels == ("a", "b", "c") and len(data) == 3

    def test_dataset_passthrough(self, example_data):
        assert check_choice_data(example_data) is example_data

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            check_choice_data(["a;b"], ["a", "b"])

    def test_missing_y(self):
        with pytest.raises(ValueError):
            check_choice_data(["a;b"])

    def test_y_with_dataset(self, example_data):
        with pytest.raises(ValueError):
            check_choice_data(example_data, ["a"])

    def test_preference_forms(self):
        al = Alphabet(["a", "b", "c"])
        expected = Preference.parse("c>a>b", al)
        assert check_preference("c>a>b", al) == expected
        assert check_preference(["c", "a", "b"], al) == expected
        with pytest.raises(ValueError):
            check_preference(Preference.identity(4), al)


class TestPreferenceTest:
    def test_params_and_clone(self):
        est = PreferenceTest(constraints=("AC", "RAM"), alpha=0.1, seed=3)
        assert est.get_params()["alpha"] == 0.1
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            PreferenceTest().test("a>b")

    def test_predict(self, example_data):
        est = PreferenceTest(draws=500).fit(example_data)
        assert est.n_observations_ == len(example_data)
        assert list(est.predict(["b>c>d>a", "d>c>b>a"])) == [True, False]

    def test_fit_on_lists_matches_dataset(self, example_data):
        X, y = as_lists(example_data)
        # labels register by first appearance; lead with the full menu
        order = sorted(range(len(X)), key=lambda i: -len(X[i]))
        X, y = [X[i] for i in order], [y[i] for i in order]
        a = PreferenceTest(draws=500).fit(X, y).test("b>c>d>a")
        b = PreferenceTest(draws=500).fit(example_data).test("b>c>d>a")
        assert (a.statistic, a.cv) == pytest.approx((b.statistic, b.cv))

    def test_confidence_set(self, example_data):
        members = PreferenceTest(draws=500).fit(example_data).confidence_set()
        assert members and all(p.prefers(3, 2) for p in members)


class TestAttentionFrequencyBounds:
    def test_predict_shape_and_order(self, six):
        data = six.sample(0)
        est = AttentionFrequencyBounds(pref="a1>a2>a3>a4>a5>a6").fit(data)
        out = est.predict([("a1", "a1;a2"), ("a3", ["a1", "a2", "a3", "a4"])])
        assert out.shape == (2, 2)
        assert np.all(out[:, 0] <= out[:, 1])

    def test_without_preference_upper_is_one(self, six):
        out = AttentionFrequencyBounds().fit(six.sample(0)).predict([("a2", "a2;a3")])
        assert out[0, 1] == 1.0

    def test_joint_is_wider(self, six):
        data = six.sample(1)
        targets = [("a1", "a1;a2"), ("a2", "a1;a2;a3"), ("a3", "a1;a2;a3;a4")]
        single = AttentionFrequencyBounds(pref="a1>a2>a3>a4>a5>a6").fit(data).predict(targets)
        joint = AttentionFrequencyBounds(pref="a1>a2>a3>a4>a5>a6", joint=True).fit(data).predict(targets)
        assert np.all(joint[:, 0] <= single[:, 0] + 1e-12)
        assert np.all(joint[:, 1] >= single[:, 1] - 1e-12)
