"""Estimator-style wrappers with scikit-learn parameter handling.

Both estimators are fitted on choice data given either as a
:class:`~attention_overload.models.Dataset` or as parallel sequences of
menus and chosen labels.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import Alphabet, Menu, Preference, canonical_menu
from .inference import (
    DEFAULT_C3,
    DEFAULT_DRAWS,
    BoundTarget,
    attention_bound_lower,
    attention_bound_upper,
    confidence_set,
    estimate_choice_rule,
    joint_attention_bounds,
    test_preference,
)
from .io import parse_menu
from .models import Dataset

__all__ = ["check_choice_data", "check_preference", "PreferenceTest", "AttentionFrequencyBounds"]


def check_choice_data(X, y=None, alphabet: Alphabet | None = None) -> Dataset:
    """Coerce choice data into a :class:`Dataset`.

    ``X`` may already be a Dataset (then ``y`` must be ``None``), or a
    sequence of menus, each a ``;``-joined string or a sequence of labels,
    with ``y`` the chosen labels.
    """
    if isinstance(X, Dataset):
        if y is not None:
            raise ValueError("y must be None when X is a Dataset")
        return X
    if y is None:
        raise ValueError("choices y are required when X is a sequence of menus")
    menus = [parse_menu(m) if isinstance(m, str) else [str(x) for x in m] for m in X]
    y = [str(c) for c in np.asarray(y, dtype=object).ravel()]
    if len(menus) != len(y):
        raise ValueError(f"X has {len(menus)} menus but y has {len(y)} choices")
    if not menus:
        raise ValueError("no observations")
    if alphabet is None:
        seen: dict[str, None] = {}
        for labels in menus:
            seen.update(dict.fromkeys(labels))
        alphabet = Alphabet(list(seen))
    bits = [canonical_menu(labels, alphabet).bits for labels in menus]
    return Dataset(alphabet, bits, [alphabet.index(c) for c in y])


def check_preference(pref, alphabet: Alphabet) -> Preference:
    if isinstance(pref, Preference):
        if pref.size != alphabet.size:
            raise ValueError("preference and data have different numbers of alternatives")
        return pref
    if isinstance(pref, str):
        return Preference.parse(pref, alphabet)
    return Preference.from_labels(list(pref), alphabet)


class PreferenceTest(BaseEstimator):
    """Test hypothesized preferences against choice data.

    Parameters
    ----------
    constraints : tuple of str
        Constraint families among ``"AC"``, ``"RAM"``, ``"BINARY_ETA"``.
    eta : float, optional
        Cap on singleton attention at binary menus; needed for
        ``"BINARY_ETA"``.
    alpha : float
        Significance level.
    method : {"two_step", "one_step"}
    c3 : float
        Pre-selection level of the two-step method.
    draws : int
        Gaussian draws for critical values.
    seed : int
    """

    def __init__(
        self,
        constraints=("AC",),
        eta=None,
        alpha=0.05,
        method="two_step",
        c3=DEFAULT_C3,
        draws=DEFAULT_DRAWS,
        seed=0,
    ):
        self.constraints = constraints
        self.eta = eta
        self.alpha = alpha
        self.method = method
        self.c3 = c3
        self.draws = draws
        self.seed = seed

    def fit(self, X, y=None):
        data = check_choice_data(X, y)
        self.alphabet_ = data.alphabet
        self.choice_rule_ = estimate_choice_rule(data)
        self.n_observations_ = len(data)
        return self

    def test(self, pref):
        check_is_fitted(self, "choice_rule_")
        return test_preference(
            self.choice_rule_,
            check_preference(pref, self.alphabet_),
            self.constraints,
            self.eta,
            self.alpha,
            self.method,
            self.c3,
            self.draws,
            self.seed,
        )

    def predict(self, prefs: Sequence) -> np.ndarray:
        """Rejection decision for each preference."""
        return np.array([self.test(p).reject for p in prefs], dtype=bool)

    def confidence_set(self) -> list[Preference]:
        check_is_fitted(self, "choice_rule_")
        return confidence_set(
            self.choice_rule_, self.alpha, self.constraints, self.eta, self.method, self.c3, self.draws, self.seed
        ).members


class AttentionFrequencyBounds(BaseEstimator):
    """Confidence bounds on attention frequencies.

    ``predict`` takes ``(alternative, menu)`` pairs with labels and returns
    an ``(n, 2)`` array of lower and upper bounds. Upper bounds need
    ``pref``; without it they are 1.
    """

    def __init__(self, pref=None, alpha=0.05, joint=False, draws=DEFAULT_DRAWS, seed=0):
        self.pref = pref
        self.alpha = alpha
        self.joint = joint
        self.draws = draws
        self.seed = seed

    def fit(self, X, y=None):
        data = check_choice_data(X, y)
        self.alphabet_ = data.alphabet
        self.choice_rule_ = estimate_choice_rule(data)
        self.pref_ = check_preference(self.pref, self.alphabet_) if self.pref is not None else None
        return self

    def _targets(self, targets) -> list[tuple[int, Menu]]:
        out = []
        for alt, menu in targets:
            labels = parse_menu(menu) if isinstance(menu, str) else list(menu)
            out.append((self.alphabet_.index(alt), canonical_menu(labels, self.alphabet_)))
        return out

    def predict(self, targets) -> np.ndarray:
        check_is_fitted(self, "choice_rule_")
        parsed = self._targets(targets)
        out = np.ones((len(parsed), 2))
        if self.joint:
            wanted = [BoundTarget(a, S, "lower") for a, S in parsed]
            if self.pref_ is not None:
                wanted += [BoundTarget(a, S, "upper", self.pref_) for a, S in parsed]
            est = joint_attention_bounds(self.choice_rule_, wanted, self.alpha, self.draws, self.seed)
            out[:, 0] = [e.value for e in est[: len(parsed)]]
            if self.pref_ is not None:
                out[:, 1] = [e.value for e in est[len(parsed) :]]
        else:
            out[:, 0] = [attention_bound_lower(self.choice_rule_, a, S, self.alpha).value for a, S in parsed]
            if self.pref_ is not None:
                out[:, 1] = [
                    attention_bound_upper(self.choice_rule_, self.pref_, a, S, self.alpha).value for a, S in parsed
                ]
        return out
