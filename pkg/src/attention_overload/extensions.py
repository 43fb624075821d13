"""Default options with choice overload, and preference revelation from
binary menus when attention there is bounded away from singletons."""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Mapping

import numpy as np

from .characterize import ac_satisfied
from .core import AOMError, Alphabet, ChoiceRule, Domain, Menu, Preference, enumerate_nested_pairs

__all__ = [
    "DEFAULT_LABEL",
    "AllMassOnDefault",
    "DefaultChoiceRule",
    "EtaRevelation",
    "check_choice_overload",
    "normalize_default",
    "eta_revealed_preference",
    "joint_characterization_check",
]

DEFAULT_LABEL = "o*"
TOL = 1e-12


class AllMassOnDefault(AOMError, ValueError):
    pass


class DefaultChoiceRule:
    """Choice rule over menus that always contain a default option.

    Menus are keyed by their non-default part ``S``; each carries a
    probability vector over ``S`` and the default's probability. The default
    is always the worst alternative.
    """

    def __init__(self, alphabet: Alphabet, probs: Mapping[Menu, np.ndarray], default: Mapping[Menu, float], atol=1e-12):
        if DEFAULT_LABEL in alphabet:
            raise ValueError(f"label {DEFAULT_LABEL!r} is reserved for the default option")
        self.alphabet = alphabet
        self._probs = {}
        self._default = {}
        for S, vec in probs.items():
            vec = np.asarray(vec, dtype=float)
            d = float(default[S])
            if vec.shape != (alphabet.size,):
                raise ValueError("probability vectors must have one entry per alternative")
            if np.any(vec[[i for i in range(alphabet.size) if i not in S]] != 0):
                raise ValueError(f"mass outside menu {S!r}")
            if np.any(vec < -atol) or d < -atol or abs(vec.sum() + d - 1) > atol:
                raise ValueError(f"probabilities at {S!r} do not form a distribution")
            self._probs[S] = vec
            self._default[S] = d

    @classmethod
    def from_labels(cls, alphabet: Alphabet, table: Mapping[str, Mapping[str, float]]) -> "DefaultChoiceRule":
        """``{"a;b": {"a": .3, "b": .2, "o*": .5}}``; the default may be
        omitted from the menu string."""
        probs, default = {}, {}
        for menu_text, row in table.items():
            labels = [x for x in menu_text.split(";") if x and x != DEFAULT_LABEL]
            S = Menu.of(alphabet.index(x) for x in labels)
            vec = np.zeros(alphabet.size)
            for lab, p in row.items():
                if lab != DEFAULT_LABEL:
                    vec[alphabet.index(lab)] = p
            probs[S] = vec
            default[S] = float(row.get(DEFAULT_LABEL, 0.0))
        return cls(alphabet, probs, default)

    @property
    def menus(self) -> tuple[Menu, ...]:
        return tuple(sorted(self._probs))

    @property
    def domain(self) -> Domain:
        return Domain(self.alphabet, self.menus)

    def prob(self, a: int, S: Menu) -> float:
        return float(self._probs[S][a])

    def default_prob(self, S: Menu) -> float:
        return self._default[S]

    def extended(self) -> tuple[ChoiceRule, int]:
        """Plain choice rule over the alphabet plus the default, and the
        default's index."""
        ext = Alphabet(list(self.alphabet.labels) + [DEFAULT_LABEL])
        o = self.alphabet.size
        probs = {}
        for S, vec in self._probs.items():
            probs[Menu(S.bits | 1 << o)] = np.append(vec, self._default[S])
        return ChoiceRule(ext, probs), o

    @staticmethod
    def extend_preference(pref: Preference) -> Preference:
        """``pref`` with the default appended as the worst alternative."""
        return Preference.from_order(list(pref.order) + [pref.size])


def check_choice_overload(pi: DefaultChoiceRule, domain: Domain | None = None, tol: float = TOL):
    """Whether the default is chosen weakly more often from larger menus.

    Returns ``(flag, violations)`` with violations ``(T, S, p_T, p_S)``.
    """
    domain = domain if domain is not None else pi.domain
    violations = []
    for T, S in enumerate_nested_pairs(domain):
        pS, pT = pi.default_prob(S), pi.default_prob(T)
        if pS < pT - tol:
            violations.append((T, S, pT, pS))
    return not violations, violations


def normalize_default(pi: DefaultChoiceRule) -> ChoiceRule:
    """Choice rule conditional on not choosing the default."""
    probs = {}
    for S in pi.menus:
        vec = pi._probs[S]
        total = vec.sum()
        if total <= TOL:
            raise AllMassOnDefault(f"all choice mass at {S!r} is on the default")
        probs[S] = vec / total
    return ChoiceRule(pi.alphabet, probs)


@dataclass(frozen=True)
class EtaRevelation:
    pairs: frozenset[tuple[int, int]]
    cycle: tuple[int, ...] | None

    @property
    def acyclic(self) -> bool:
        return self.cycle is None

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def __len__(self):
        return len(self.pairs)


def eta_revealed_preference(pi: ChoiceRule, eta: float, domain: Domain | None = None) -> EtaRevelation:
    """Pairs ``(a, b)`` with ``pi(a|{a,b}) > eta``.

    A cycle among the revealed pairs means no preference is compatible at
    this ``eta``; it is reported rather than dropped.
    """
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    domain = domain if domain is not None else pi.domain
    pairs = set()
    for B in domain.binary_menus():
        x, y = B.members
        if pi.prob(x, B) > eta:
            pairs.add((x, y))
        if pi.prob(y, B) > eta:
            pairs.add((y, x))
    graph: dict[int, set[int]] = {}
    for better, worse in pairs:
        graph.setdefault(worse, set()).add(better)
    cycle = None
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as err:
        cycle = tuple(err.args[1])
    return EtaRevelation(frozenset(pairs), cycle)


def joint_characterization_check(pi: ChoiceRule, pref: Preference, eta: float, domain: Domain | None = None) -> bool:
    """Attention compensation holds and ``pref`` agrees with every pair
    revealed at binary menus under ``eta``."""
    domain = domain if domain is not None else pi.domain
    ok, _ = ac_satisfied(pi, pref, domain)
    if not ok:
        return False
    revealed = eta_revealed_preference(pi, eta, domain)
    return all(pref.prefers(b, a) for b, a in revealed.pairs)
