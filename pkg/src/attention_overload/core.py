"""Alternatives, menus, preferences and the subset lattice.

Menus are bitsets over the indices of an :class:`Alphabet`. Every iteration
order in the package is lexicographic on those bitsets so that constraint
indices are reproducible from run to run.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

MAX_ALTERNATIVES = 63
MAX_ENUMERATION = 9

__all__ = [
    "AOMError",
    "UnknownLabel",
    "EmptyMenu",
    "AlternativeNotInMenu",
    "AlphabetTooLarge",
    "MenuMissing",
    "Alphabet",
    "Menu",
    "Preference",
    "Domain",
    "ChoiceRule",
    "canonical_menu",
    "enumerate_nested_pairs",
    "upper_contour",
    "all_preferences",
    "submasks",
    "popcount",
]


class AOMError(Exception):
    """Base class for all errors raised by this package."""


class UnknownLabel(AOMError, KeyError):
    def __init__(self, label):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f"unknown alternative label {self.label!r}"


class EmptyMenu(AOMError, ValueError):
    pass


class AlternativeNotInMenu(AOMError, ValueError):
    pass


class AlphabetTooLarge(AOMError, ValueError):
    pass


class MenuMissing(AOMError, KeyError):
    def __str__(self):
        return f"menu {self.args[0]} not present in choice rule"


def popcount(bits: int) -> int:
    return bin(bits).count("1")


def submasks(bits: int) -> list[int]:
    """All nonempty submasks of ``bits`` in increasing numeric order."""
    out = []
    sub = bits
    while sub:
        out.append(sub)
        sub = (sub - 1) & bits
    out.reverse()
    return out


@dataclass(frozen=True)
class Alphabet:
    """Ordered, duplicate-free collection of alternative labels."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(x) for x in labels)
        if not labels:
            raise ValueError("an alphabet needs at least one alternative")
        if len(set(labels)) != len(labels):
            raise ValueError("alternative labels must be unique")
        if len(labels) > MAX_ALTERNATIVES:
            raise AlphabetTooLarge(
                f"at most {MAX_ALTERNATIVES} alternatives are supported, got {len(labels)}"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def numbered(cls, n: int, prefix: str = "a") -> "Alphabet":
        """``a1, a2, ..., an``."""
        return cls(f"{prefix}{i + 1}" for i in range(n))

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(label) from None

    def label(self, i: int) -> str:
        return self.labels[i]

    @property
    def full_bits(self) -> int:
        return (1 << self.size) - 1


@dataclass(frozen=True, order=True)
class Menu:
    """A nonempty choice problem, stored as a bitset of alternative indices."""

    bits: int

    def __post_init__(self):
        if self.bits <= 0:
            raise EmptyMenu("a menu must contain at least one alternative")

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Menu":
        bits = 0
        for i in indices:
            bits |= 1 << int(i)
        return cls(bits)

    def __len__(self) -> int:
        return popcount(self.bits)

    def __contains__(self, i) -> bool:
        return bool(self.bits >> int(i) & 1)

    def __iter__(self) -> Iterator[int]:
        bits, i = self.bits, 0
        while bits:
            if bits & 1:
                yield i
            bits >>= 1
            i += 1

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(self)

    def issubset(self, other: "Menu") -> bool:
        return self.bits & other.bits == self.bits

    def is_proper_subset(self, other: "Menu") -> bool:
        return self.bits != other.bits and self.issubset(other)

    def without(self, i: int) -> int:
        """Bits of the menu with alternative ``i`` removed (may be 0)."""
        return self.bits & ~(1 << i)

    def labels(self, alphabet: Alphabet) -> tuple[str, ...]:
        return tuple(alphabet.label(i) for i in self)

    def format(self, alphabet: Alphabet, sep: str = ";") -> str:
        return sep.join(self.labels(alphabet))

    def __repr__(self) -> str:
        return "Menu({" + ",".join(str(i) for i in self) + "})"


def canonical_menu(labels: Sequence[str], alphabet: Alphabet) -> Menu:
    """Build a menu from labels, collapsing duplicates and ignoring order."""
    if len(labels) == 0:
        raise EmptyMenu("empty label sequence")
    return Menu.of(alphabet.index(lab) for lab in labels)


@dataclass(frozen=True)
class Preference:
    """A strict total order over the alphabet.

    ``rank[i]`` is the position of alternative ``i``; rank 0 is the most
    preferred alternative.
    """

    rank: tuple[int, ...]

    def __post_init__(self):
        rank = tuple(int(r) for r in self.rank)
        if sorted(rank) != list(range(len(rank))):
            raise ValueError(f"rank {rank} is not a permutation")
        object.__setattr__(self, "rank", rank)

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "Preference":
        """From a best-to-worst sequence of alternative indices."""
        rank = [0] * len(order)
        for pos, i in enumerate(order):
            rank[i] = pos
        return cls(tuple(rank))

    @classmethod
    def from_labels(cls, labels: Sequence[str], alphabet: Alphabet) -> "Preference":
        if len(labels) != alphabet.size:
            raise ValueError(
                f"preference must rank all {alphabet.size} alternatives, got {len(labels)}"
            )
        return cls.from_order([alphabet.index(lab) for lab in labels])

    @classmethod
    def parse(cls, text: str, alphabet: Alphabet) -> "Preference":
        """Parse a literal such as ``"a1>a2>a3"``."""
        return cls.from_labels([t.strip() for t in text.split(">")], alphabet)

    @classmethod
    def identity(cls, n: int) -> "Preference":
        return cls(tuple(range(n)))

    @property
    def size(self) -> int:
        return len(self.rank)

    @property
    def order(self) -> tuple[int, ...]:
        out = [0] * len(self.rank)
        for i, r in enumerate(self.rank):
            out[r] = i
        return tuple(out)

    def prefers(self, b: int, a: int) -> bool:
        """True when ``b`` is strictly better than ``a``."""
        return self.rank[b] < self.rank[a]

    def best_in(self, menu: Menu) -> int:
        return min(menu, key=self.rank.__getitem__)

    def worst_in(self, menu: Menu) -> int:
        return max(menu, key=self.rank.__getitem__)

    def strict_upper_bits(self, a: int) -> int:
        """Bitset of all alternatives strictly better than ``a``."""
        ra = self.rank[a]
        bits = 0
        for i, r in enumerate(self.rank):
            if r < ra:
                bits |= 1 << i
        return bits

    def format(self, alphabet: Alphabet) -> str:
        return ">".join(alphabet.label(i) for i in self.order)


def upper_contour(pref: Preference, a: int, menu: Menu, strict: bool = False) -> int:
    """Upper contour set of ``a`` within ``menu``, as a bitset.

    The strict version can be empty (returned as 0), so a raw bitset is
    returned rather than a :class:`Menu`.
    """
    if a not in menu:
        raise AlternativeNotInMenu(f"alternative {a} not in {menu!r}")
    bits = pref.strict_upper_bits(a) & menu.bits
    if not strict:
        bits |= 1 << a
    return bits


def all_preferences(n: int | Alphabet) -> Iterator[Preference]:
    """Every strict order over ``n`` alternatives, best-to-worst orders in
    lexicographic order."""
    if isinstance(n, Alphabet):
        n = n.size
    if n > MAX_ENUMERATION:
        raise AlphabetTooLarge(
            f"enumerating {factorial(n)} preferences over {n} alternatives is not supported"
        )
    for order in itertools.permutations(range(n)):
        yield Preference.from_order(order)


def preference_ranks(n: int) -> np.ndarray:
    """``(n!, n)`` array; row ``k`` is the rank vector of the ``k``-th
    preference produced by :func:`all_preferences`."""
    if n > MAX_ENUMERATION:
        raise AlphabetTooLarge(f"cannot enumerate preferences over {n} alternatives")
    orders = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    ranks = np.empty_like(orders)
    rows = np.arange(orders.shape[0])[:, None]
    ranks[rows, orders] = np.arange(n)
    return ranks


@dataclass(frozen=True)
class Domain:
    """The observed collection of menus, sorted by bitset."""

    alphabet: Alphabet
    menus: tuple[Menu, ...]

    def __init__(self, alphabet: Alphabet, menus: Iterable[Menu | int]):
        uniq = set()
        for m in menus:
            m = m if isinstance(m, Menu) else Menu(int(m))
            if m.bits & ~alphabet.full_bits:
                raise ValueError(f"{m!r} is not a subset of the alphabet")
            uniq.add(m)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "menus", tuple(sorted(uniq)))

    @classmethod
    def full(cls, alphabet: Alphabet, min_size: int = 2) -> "Domain":
        """All menus with at least ``min_size`` alternatives."""
        return cls(
            alphabet,
            (Menu(b) for b in range(1, alphabet.full_bits + 1) if popcount(b) >= min_size),
        )

    @classmethod
    def from_labels(cls, alphabet: Alphabet, menus: Iterable[Sequence[str]]) -> "Domain":
        return cls(alphabet, (canonical_menu(m, alphabet) for m in menus))

    def __len__(self) -> int:
        return len(self.menus)

    def __iter__(self) -> Iterator[Menu]:
        return iter(self.menus)

    def __contains__(self, menu) -> bool:
        return menu in self._set

    @property
    def _set(self) -> frozenset:
        cached = self.__dict__.get("_menu_set")
        if cached is None:
            cached = frozenset(self.menus)
            object.__setattr__(self, "_menu_set", cached)
        return cached

    def supersets(self, menu: Menu) -> list[Menu]:
        """Menus of the domain containing ``menu`` (itself included)."""
        return [m for m in self.menus if menu.issubset(m)]

    def subsets(self, menu: Menu, containing: int | None = None) -> list[Menu]:
        """Menus of the domain contained in ``menu`` (itself included)."""
        out = [m for m in self.menus if m.issubset(menu)]
        if containing is not None:
            out = [m for m in out if containing in m]
        return out

    def binary_menus(self) -> list[Menu]:
        return [m for m in self.menus if len(m) == 2]


def enumerate_nested_pairs(domain: Domain) -> list[tuple[Menu, Menu]]:
    """All ``(T, S)`` with ``T`` a strict subset of ``S``, both in the domain.

    Ordered by ``S`` and then by ``T``.
    """
    out = []
    for S in domain.menus:
        for T in domain.menus:
            if T.bits == S.bits:
                continue
            if T.bits & S.bits == T.bits:
                out.append((T, S))
    return out


class ChoiceRule:
    """Choice probabilities ``pi(a|S)`` on a domain of menus.

    ``probs`` maps each menu to a dense vector of length ``alphabet.size``
    that is zero outside the menu. ``sizes`` optionally holds the effective
    sample size ``N_S`` of each menu when the rule was estimated from data.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        probs: Mapping[Menu, Sequence[float]],
        sizes: Mapping[Menu, int] | None = None,
        atol: float = 1e-12,
    ):
        self.alphabet = alphabet
        n = alphabet.size
        table = {}
        for menu, vec in probs.items():
            vec = np.asarray(vec, dtype=float)
            if vec.shape == (len(menu),):
                full = np.zeros(n)
                full[list(menu)] = vec
                vec = full
            elif vec.shape != (n,):
                raise ValueError(f"probability vector for {menu!r} has shape {vec.shape}")
            outside = [i for i in range(n) if i not in menu]
            if outside and np.any(vec[outside] != 0):
                raise ValueError(f"positive probability outside {menu!r}")
            if np.any(vec < -atol) or abs(vec.sum() - 1.0) > atol:
                raise ValueError(f"probabilities for {menu!r} do not form a distribution")
            vec = vec.copy()
            vec.setflags(write=False)
            table[menu] = vec
        self._probs = dict(sorted(table.items()))
        self.sizes = dict(sorted(sizes.items())) if sizes is not None else None
        if self.sizes is not None:
            missing = set(self._probs) - set(self.sizes)
            if missing:
                raise ValueError(f"no sample size for menus {sorted(missing)}")

    @classmethod
    def from_labels(
        cls,
        alphabet: Alphabet,
        table: Mapping[Sequence[str] | str, Mapping[str, float]],
        sizes=None,
        atol: float = 1e-12,
    ) -> "ChoiceRule":
        """Build from ``{menu_labels: {label: prob}}``; a menu may be given as
        ``"a;b;c"`` or as a sequence of labels."""
        probs = {}
        for key, row in table.items():
            labels = key.split(";") if isinstance(key, str) else key
            menu = canonical_menu(labels, alphabet)
            vec = np.zeros(alphabet.size)
            for lab, p in row.items():
                vec[alphabet.index(lab)] = p
            probs[menu] = vec
        return cls(alphabet, probs, sizes=sizes, atol=atol)

    @property
    def menus(self) -> tuple[Menu, ...]:
        return tuple(self._probs)

    @property
    def domain(self) -> Domain:
        return Domain(self.alphabet, self._probs)

    def __contains__(self, menu) -> bool:
        return menu in self._probs

    def vector(self, menu: Menu) -> np.ndarray:
        try:
            return self._probs[menu]
        except KeyError:
            raise MenuMissing(menu) from None

    def prob(self, a: int, menu: Menu) -> float:
        return float(self.vector(menu)[a])

    def prob_of(self, bits: int, menu: Menu) -> float:
        """Probability that the choice from ``menu`` lands in the set ``bits``."""
        vec = self.vector(menu)
        return float(sum(vec[i] for i in Menu(bits))) if bits else 0.0

    def size(self, menu: Menu) -> int:
        if self.sizes is None:
            raise ValueError("choice rule carries no sample sizes")
        return self.sizes[menu]

    def restrict(self, menus: Iterable[Menu]) -> "ChoiceRule":
        menus = list(menus)
        sizes = None if self.sizes is None else {m: self.sizes[m] for m in menus}
        return ChoiceRule(self.alphabet, {m: self.vector(m) for m in menus}, sizes=sizes)

    def to_table(self) -> dict[str, dict[str, float]]:
        return {
            m.format(self.alphabet): {
                self.alphabet.label(i): float(self._probs[m][i]) for i in m
            }
            for m in self._probs
        }

    def __repr__(self) -> str:
        kind = "estimated" if self.sizes is not None else "exact"
        return f"ChoiceRule({kind}, {len(self._probs)} menus over {self.alphabet.size} alternatives)"
