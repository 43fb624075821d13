"""Attention rules, the choice rules they induce, and synthetic data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    AOMError,
    Alphabet,
    AlternativeNotInMenu,
    ChoiceRule,
    Domain,
    Menu,
    Preference,
    enumerate_nested_pairs,
    popcount,
    submasks,
)

__all__ = [
    "OutOfDomain",
    "GammaOutOfRange",
    "WeightsNotSimplex",
    "FilterViolation",
    "SizeZero",
    "AttentionRule",
    "OverloadReport",
    "Dataset",
    "logit_attention",
    "independent_consideration",
    "random_competition_filter",
    "attention_frequency",
    "check_attention_overload",
    "induced_choice_rule",
    "sample_dataset",
]

OVERLOAD_TOL = 1e-12


class OutOfDomain(AOMError, KeyError):
    pass


class GammaOutOfRange(AOMError, ValueError):
    pass


class WeightsNotSimplex(AOMError, ValueError):
    pass


class FilterViolation(AOMError, ValueError):
    def __init__(self, j, a, T, S):
        super().__init__(
            f"filter {j} keeps alternative {a} in {S!r} but drops it from {T!r}"
        )
        self.j, self.a, self.T, self.S = j, a, T, S


class SizeZero(AOMError, ValueError):
    pass


class AttentionRule:
    """Distribution over nonempty consideration sets for each menu.

    For each menu ``S`` the rule stores two aligned arrays: the submasks of
    ``S`` (all nonempty subsets, increasing) and their masses.
    """

    def __init__(self, alphabet: Alphabet, dist: Mapping[Menu, Mapping[int, float]], atol=1e-12):
        self.alphabet = alphabet
        self._subsets: dict[Menu, np.ndarray] = {}
        self._mass: dict[Menu, np.ndarray] = {}
        for menu, masses in sorted(dist.items()):
            subs = submasks(menu.bits)
            pos = {b: k for k, b in enumerate(subs)}
            vec = np.zeros(len(subs))
            for bits, p in masses.items():
                bits = bits.bits if isinstance(bits, Menu) else int(bits)
                if bits not in pos:
                    raise ValueError(f"{bits:b} is not a nonempty subset of {menu!r}")
                vec[pos[bits]] += p
            if np.any(vec < -atol) or abs(vec.sum() - 1.0) > atol:
                raise ValueError(f"attention masses for {menu!r} do not sum to one")
            self._subsets[menu] = np.array(subs, dtype=np.int64)
            self._mass[menu] = np.clip(vec, 0.0, None)

    @classmethod
    def from_arrays(cls, alphabet, subsets: Mapping[Menu, np.ndarray], masses: Mapping[Menu, np.ndarray]):
        rule = cls(alphabet, {})
        for menu in sorted(subsets):
            rule._subsets[menu] = np.asarray(subsets[menu], dtype=np.int64)
            rule._mass[menu] = np.asarray(masses[menu], dtype=float)
        return rule

    @property
    def menus(self) -> tuple[Menu, ...]:
        return tuple(self._subsets)

    @property
    def domain(self) -> Domain:
        return Domain(self.alphabet, self._subsets)

    def items(self, menu: Menu) -> tuple[np.ndarray, np.ndarray]:
        """``(subset_bits, masses)`` for ``menu``."""
        try:
            return self._subsets[menu], self._mass[menu]
        except KeyError:
            raise OutOfDomain(menu) from None

    def mass(self, T: Menu | int, S: Menu) -> float:
        bits = T.bits if isinstance(T, Menu) else int(T)
        subs, mass = self.items(S)
        k = np.searchsorted(subs, bits)
        if k < len(subs) and subs[k] == bits:
            return float(mass[k])
        return 0.0

    def frequencies(self, menu: Menu) -> np.ndarray:
        """Attention frequency of every alternative at ``menu`` (zero outside)."""
        subs, mass = self.items(menu)
        n = self.alphabet.size
        out = np.zeros(n)
        for i in menu:
            out[i] = mass[(subs >> i) & 1 == 1].sum()
        return out

    def __repr__(self):
        return f"AttentionRule({len(self._subsets)} menus)"


def _menu_rule(alphabet: Alphabet, domain: Domain | Iterable[Menu], weight: Callable[[np.ndarray, Menu], np.ndarray]):
    subsets, masses = {}, {}
    for menu in domain:
        subs = np.array(submasks(menu.bits), dtype=np.int64)
        w = np.asarray(weight(subs, menu), dtype=float)
        subsets[menu] = subs
        masses[menu] = w / w.sum()
    return AttentionRule.from_arrays(alphabet, subsets, masses)


def _sizes(subs: np.ndarray) -> np.ndarray:
    return np.array([popcount(int(b)) for b in subs], dtype=float)


def logit_attention(domain: Domain, varsigma: float) -> AttentionRule:
    """Consideration-set probabilities proportional to ``|T| ** varsigma``."""
    if not np.isfinite(varsigma):
        raise ValueError("varsigma must be finite")
    return _menu_rule(domain.alphabet, domain, lambda subs, _: _sizes(subs) ** varsigma)


def independent_consideration(domain: Domain, gamma: Mapping[int, float] | Sequence[float]) -> AttentionRule:
    """Each alternative is considered independently with probability ``gamma``.

    The empty consideration set is not allowed, so its mass is spread over the
    nonempty subsets in proportion to their raw probabilities. Attention
    frequencies therefore equal ``gamma`` only before that renormalization.
    """
    n = domain.alphabet.size
    g = np.array([gamma[i] for i in range(n)], dtype=float)
    if np.any(g <= 0) or np.any(g >= 1):
        raise GammaOutOfRange("consideration probabilities must lie strictly in (0, 1)")

    def weight(subs, menu):
        out = np.ones(len(subs))
        for i in menu:
            inside = (subs >> i) & 1 == 1
            out *= np.where(inside, g[i], 1.0 - g[i])
        return out

    return _menu_rule(domain.alphabet, domain, weight)


def random_competition_filter(
    domain: Domain,
    filters: Sequence[tuple[float, Callable[[Menu], Menu]]],
) -> AttentionRule:
    """Mixture of deterministic competition filters.

    Each filter maps a menu to a nonempty sub-menu and must keep an
    alternative in every smaller menu once it keeps it in a larger one.
    """
    weights = np.array([w for w, _ in filters], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightsNotSimplex("filter weights must be nonnegative and sum to one")
    images = []
    for j, (_, gamma) in enumerate(filters):
        img = {}
        for S in domain:
            G = gamma(S)
            G = G if isinstance(G, Menu) else Menu(int(G))
            if not G.issubset(S):
                raise ValueError(f"filter {j} maps {S!r} outside itself")
            img[S] = G
        for T, S in enumerate_nested_pairs(domain):
            for a in img[S]:
                if a in T and a not in img[T]:
                    raise FilterViolation(j, a, T, S)
        images.append(img)
    dist = {}
    for S in domain:
        row: dict[int, float] = {}
        for w, img in zip(weights, images):
            row[img[S].bits] = row.get(img[S].bits, 0.0) + w
        dist[S] = row
    return AttentionRule(domain.alphabet, dist)


def attention_frequency(mu: AttentionRule, a: int, S: Menu) -> float:
    """Probability that ``a`` belongs to the consideration set at ``S``."""
    if a not in S:
        raise AlternativeNotInMenu(f"alternative {a} not in {S!r}")
    subs, mass = mu.items(S)
    return float(mass[(subs >> a) & 1 == 1].sum())


@dataclass(frozen=True)
class OverloadReport:
    satisfied: bool
    violations: list[tuple[int, Menu, Menu, float, float]] = field(default_factory=list)

    def __bool__(self):
        return self.satisfied


def check_attention_overload(mu: AttentionRule, domain: Domain | None = None, tol: float = OVERLOAD_TOL) -> OverloadReport:
    """Check that attention frequencies weakly fall as menus grow.

    Violations are reported as ``(a, T, S, phi(a|S), phi(a|T))``.
    """
    domain = domain if domain is not None else mu.domain
    freq = {S: mu.frequencies(S) for S in domain}
    violations = []
    for T, S in enumerate_nested_pairs(domain):
        fS, fT = freq[S], freq[T]
        for a in T:
            if fS[a] > fT[a] + tol:
                violations.append((a, T, S, float(fS[a]), float(fT[a])))
    return OverloadReport(not violations, violations)


def induced_choice_rule(pref: Preference, mu: AttentionRule) -> ChoiceRule:
    """Choice rule of a decision maker maximizing ``pref`` over random
    consideration sets drawn from ``mu``."""
    n = mu.alphabet.size
    rank = np.array(pref.rank)
    probs = {}
    for S in mu.menus:
        subs, mass = mu.items(S)
        members = list(S)
        # best member of each consideration set
        best = np.full(len(subs), -1)
        best_rank = np.full(len(subs), n)
        for i in members:
            inside = (subs >> i) & 1 == 1
            better = inside & (rank[i] < best_rank)
            best[better] = i
            best_rank[better] = rank[i]
        vec = np.bincount(best, weights=mass, minlength=n)
        vec = vec / vec.sum()
        probs[S] = vec
    return ChoiceRule(mu.alphabet, probs)


class Dataset:
    """Observed ``(menu, choice)`` pairs.

    Stored as two integer arrays (menu bitsets and chosen alternative
    indices), in observation order.
    """

    def __init__(self, alphabet: Alphabet, menus: Sequence[int], choices: Sequence[int]):
        menus = np.asarray([m.bits if isinstance(m, Menu) else int(m) for m in menus], dtype=np.int64)
        choices = np.asarray(choices, dtype=np.int64)
        if menus.shape != choices.shape:
            raise ValueError("menus and choices must have the same length")
        if np.any(menus <= 0) or np.any(menus & ~alphabet.full_bits):
            raise ValueError("menus must be nonempty subsets of the alphabet")
        if len(choices) and np.any((menus >> choices) & 1 == 0):
            bad = int(np.flatnonzero((menus >> choices) & 1 == 0)[0])
            raise AlternativeNotInMenu(f"observation {bad}: choice not in menu")
        self.alphabet = alphabet
        self.menus = menus
        self.choices = choices

    @classmethod
    def from_counts(cls, alphabet: Alphabet, counts: Mapping[Menu, Sequence[int] | Mapping[int, int]]) -> "Dataset":
        """Expand per-menu counts (dense length-``n`` vectors or ``{alt: count}``)
        into observations."""
        menus, choices = [], []
        for menu in sorted(counts):
            c = counts[menu]
            items = c.items() if isinstance(c, Mapping) else enumerate(c)
            for a, k in items:
                k = int(k)
                if k and a not in menu:
                    raise AlternativeNotInMenu(f"alternative {a} not in {menu!r}")
                menus.extend([menu.bits] * k)
                choices.extend([a] * k)
        return cls(alphabet, menus, choices)

    def __len__(self) -> int:
        return len(self.choices)

    @property
    def domain(self) -> Domain:
        return Domain(self.alphabet, (Menu(int(b)) for b in np.unique(self.menus)))

    def counts(self) -> dict[Menu, np.ndarray]:
        """``N_{a,S}`` as dense integer vectors per observed menu."""
        n = self.alphabet.size
        out = {}
        for b in np.unique(self.menus):
            sel = self.menus == b
            out[Menu(int(b))] = np.bincount(self.choices[sel], minlength=n)
        return out

    def menu_sizes(self) -> dict[Menu, int]:
        """``N_S`` per observed menu."""
        bits, k = np.unique(self.menus, return_counts=True)
        return {Menu(int(b)): int(c) for b, c in zip(bits, k)}

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and np.array_equal(self.menus, other.menus)
            and np.array_equal(self.choices, other.choices)
        )

    def __repr__(self):
        return f"Dataset({len(self)} observations, {len(np.unique(self.menus))} menus)"


def menu_stream(seed: int, menu_index: int) -> np.random.Generator:
    """Counter-based generator for the draws of one menu."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0, int(menu_index)])))


def sample_dataset(pi: ChoiceRule, sizes: Mapping[Menu, int] | int, seed: int) -> Dataset:
    """Draw ``sizes[S]`` i.i.d. choices from ``pi(.|S)`` for every menu.

    Menu ``k`` of ``pi`` (in bitset order) uses its own stream keyed by
    ``(seed, k)``, so each menu's subsample does not depend on the others.
    """
    if isinstance(sizes, (int, np.integer)):
        sizes = {m: int(sizes) for m in pi.menus}
    menus, choices = [], []
    index = {m: k for k, m in enumerate(pi.menus)}
    for menu in sorted(sizes):
        N = int(sizes[menu])
        if N <= 0:
            raise SizeZero(f"menu {menu!r} has nonpositive sample size {N}")
        if menu not in index:
            raise OutOfDomain(menu)
        p = pi.vector(menu)
        support = np.flatnonzero(p > 0)
        cdf = np.cumsum(p[support])
        cdf[-1] = 1.0
        u = menu_stream(seed, index[menu]).random(N)
        draws = np.minimum(np.searchsorted(cdf, u, side="right"), len(support) - 1)
        menus.append(np.full(N, menu.bits, dtype=np.int64))
        choices.append(support[draws])
    if not menus:
        raise SizeZero("no menus to sample")
    return Dataset(pi.alphabet, np.concatenate(menus), np.concatenate(choices))
