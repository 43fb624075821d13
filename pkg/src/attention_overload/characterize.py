"""Population-level characterization: attention compensation inequalities,
revealed preference, revealed attention bounds and representations."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .core import (
    AOMError,
    AlternativeNotInMenu,
    ChoiceRule,
    Domain,
    Menu,
    MenuMissing,
    Preference,
    all_preferences,
    enumerate_nested_pairs,
    preference_ranks,
    submasks,
    upper_contour,
    MAX_ENUMERATION,
    AlphabetTooLarge,
)
from .models import AttentionRule, check_attention_overload, induced_choice_rule
from .simplex import phase_one

__all__ = [
    "Kind",
    "Constraint",
    "ConstraintSystem",
    "RevealedRelation",
    "NotAOM",
    "NOT_AOM",
    "AttentionBounds",
    "EtaMissing",
    "NoSupersetInDomain",
    "InfeasibleSystem",
    "enumerate_constraints",
    "evaluate_constraint",
    "ac_satisfied",
    "revealed_preference_pac",
    "binary_regularity_revelations",
    "regularity_disjunctions",
    "attention_bounds_population",
    "construct_pessimistic_representation",
    "solve_menu_attention",
    "is_aom",
]

AC_TOL = 1e-12


class EtaMissing(AOMError, ValueError):
    pass


class NoSupersetInDomain(AOMError, ValueError):
    pass


class InfeasibleSystem(AOMError, RuntimeError):
    pass


class Kind(str, Enum):
    AC = "AC"
    RAM = "RAM"
    BINARY_ETA = "BINARY_ETA"


@dataclass(frozen=True)
class Constraint:
    """One moment inequality ``D(a|S,T) <= 0``.

    For ``BINARY_ETA`` the menu is binary, ``S == T``, and ``a`` is the
    element hypothesized to be worse.
    """

    kind: Kind
    a: int
    S: Menu
    T: Menu
    eta: float | None = None

    def describe(self, alphabet) -> str:
        lab = alphabet.label(self.a)
        if self.kind is Kind.BINARY_ETA:
            return f"{self.kind.value}({lab}|{self.S.format(alphabet, ',')}; eta={self.eta:g})"
        return f"{self.kind.value}({lab}|{self.S.format(alphabet, ',')} vs {self.T.format(alphabet, ',')})"


def coordinates(menus: Iterable[Menu]) -> dict[tuple[Menu, int], int]:
    """Position of each ``(menu, alternative)`` choice probability in the
    stacked probability vector."""
    out = {}
    for menu in sorted(menus):
        for a in menu:
            out[(menu, a)] = len(out)
    return out


def stack(pi: ChoiceRule, coords: Mapping[tuple[Menu, int], int]) -> np.ndarray:
    vec = np.empty(len(coords))
    for (menu, a), k in coords.items():
        vec[k] = pi.vector(menu)[a]
    return vec


class ConstraintSystem:
    """Ordered list of inequalities, each an affine function of the stacked
    choice probabilities: ``D = R @ p + offset``."""

    def __init__(self, domain: Domain, pref: Preference, constraints: Sequence[Constraint]):
        self.domain = domain
        self.pref = pref
        self.constraints = list(constraints)
        self.coords = coordinates(domain.menus)
        m = len(self.constraints)
        rows, cols, vals = [], [], []
        offset = np.zeros(m)
        for k, c in enumerate(self.constraints):
            row, const = constraint_row(c, pref, self.coords)
            for j, v in row.items():
                rows.append(k)
                cols.append(j)
                vals.append(v)
            offset[k] = const
        self.R = sparse.csr_matrix((vals, (rows, cols)), shape=(m, len(self.coords)))
        self.offset = offset
        self.kinds = np.array([c.kind.value for c in self.constraints], dtype=object)

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def __getitem__(self, k) -> Constraint:
        return self.constraints[k]

    def counts(self) -> dict[str, int]:
        out = {k.value: 0 for k in Kind}
        for c in self.constraints:
            out[c.kind.value] += 1
        return out

    def evaluate(self, pi: ChoiceRule) -> np.ndarray:
        """``D`` for every constraint at the choice rule ``pi``."""
        for menu in self.domain:
            if menu not in pi:
                raise MenuMissing(menu)
        return self.R @ stack(pi, self.coords) + self.offset

    def subset(self, mask) -> "ConstraintSystem":
        keep = [c for c, k in zip(self.constraints, mask) if k]
        return ConstraintSystem(self.domain, self.pref, keep)

    def kind_mask(self, kinds: Iterable[str | Kind]) -> np.ndarray:
        wanted = {Kind(k).value for k in kinds}
        return np.array([k in wanted for k in self.kinds], dtype=bool)

    def __repr__(self):
        return f"ConstraintSystem({len(self)} constraints: {self.counts()})"


def constraint_row(c: Constraint, pref: Preference, coords) -> tuple[dict[int, float], float]:
    if c.kind is Kind.AC:
        row = {coords[(c.S, c.a)]: 1.0}
        for b in Menu(upper_contour(pref, c.a, c.T)):
            j = coords[(c.T, b)]
            row[j] = row.get(j, 0.0) - 1.0
        return row, 0.0
    if c.kind is Kind.RAM:
        return {coords[(c.S, c.a)]: 1.0, coords[(c.T, c.a)]: -1.0}, 0.0
    # pi(a|{a,b}) <= eta, written on the relative scale pi/eta - 1
    return {coords[(c.S, c.a)]: 1.0 / c.eta}, -1.0


def enumerate_constraints(
    domain: Domain,
    pref: Preference,
    kinds: Iterable[str | Kind] = (Kind.AC,),
    eta: float | None = None,
) -> ConstraintSystem:
    """Enumerate the inequalities implied by ``pref`` on ``domain``.

    * AC: every ``a in T < S``, except when ``a`` is the worst element of
      ``T`` (then the inequality holds trivially).
    * RAM: every ``a in T < S`` where all removed alternatives are better
      than ``a`` and ``|T| >= 2``.
    * BINARY_ETA: for every binary menu, the worse element is chosen with
      probability at most ``eta``.

    Kinds are emitted in the order AC, RAM, BINARY_ETA; within a kind by
    ``S``, then ``T``, then ``a``.
    """
    kinds = {Kind(k) for k in kinds}
    if Kind.BINARY_ETA in kinds:
        if eta is None:
            raise EtaMissing("BINARY_ETA constraints need eta")
        if not 0 < eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
    pairs = enumerate_nested_pairs(domain)
    out: list[Constraint] = []
    if Kind.AC in kinds:
        for T, S in pairs:
            worst = pref.worst_in(T)
            out.extend(Constraint(Kind.AC, a, S, T) for a in T if a != worst)
    if Kind.RAM in kinds:
        for T, S in pairs:
            if len(T) < 2:
                continue
            removed = S.bits & ~T.bits
            for a in T:
                if removed & ~pref.strict_upper_bits(a) == 0:
                    out.append(Constraint(Kind.RAM, a, S, T))
    if Kind.BINARY_ETA in kinds:
        for B in domain.binary_menus():
            out.append(Constraint(Kind.BINARY_ETA, pref.worst_in(B), B, B, float(eta)))
    return ConstraintSystem(domain, pref, out)


def evaluate_constraint(pi: ChoiceRule, c: Constraint, pref: Preference | None = None) -> float:
    """Value of ``D`` at ``pi``; positive means the inequality is violated.

    AC needs ``pref`` to form the weak upper contour set.
    """
    for menu in (c.S, c.T):
        if menu not in pi:
            raise MenuMissing(menu)
    if c.kind is Kind.AC:
        if pref is None:
            raise ValueError("AC constraints need the preference")
        return pi.prob(c.a, c.S) - pi.prob_of(upper_contour(pref, c.a, c.T), c.T)
    if c.kind is Kind.RAM:
        return pi.prob(c.a, c.S) - pi.prob(c.a, c.T)
    return pi.prob(c.a, c.S) / c.eta - 1.0


def ac_satisfied(
    pi: ChoiceRule, pref: Preference, domain: Domain | None = None, tol: float = AC_TOL
) -> tuple[bool, tuple[Constraint, float] | None]:
    """Whether ``(pi, pref)`` satisfies attention compensation on ``domain``.

    Also returns the constraint with the largest ``D`` (``None`` when there
    are no nontrivial constraints).
    """
    domain = domain if domain is not None else pi.domain
    system = enumerate_constraints(domain, pref, (Kind.AC,))
    if not len(system):
        return True, None
    values = system.evaluate(pi)
    k = int(np.argmax(values))
    return bool(values[k] <= tol), (system[k], float(values[k]))


def _superset_max(pi: ChoiceRule, domain: Domain) -> dict[Menu, np.ndarray]:
    """``max over S strictly containing T`` of ``pi(.|S)``, per menu ``T``
    (``-inf`` where no strict superset is observed)."""
    n = domain.alphabet.size
    out = {}
    for T in domain:
        best = np.full(n, -np.inf)
        for S in domain:
            if S.bits != T.bits and T.bits & S.bits == T.bits:
                best = np.maximum(best, pi.vector(S))
        out[T] = best
    return out


def ac_mask(pi: ChoiceRule, domain: Domain, tol: float = AC_TOL, chunk: int = 40320) -> np.ndarray:
    """Boolean vector over all preferences (in :func:`all_preferences` order)
    marking those satisfying AC with ``pi``."""
    n = domain.alphabet.size
    if n > MAX_ENUMERATION:
        raise AlphabetTooLarge(f"cannot enumerate preferences over {n} alternatives")
    for menu in domain:
        if menu not in pi:
            raise MenuMissing(menu)
    ranks_all = preference_ranks(n)
    sup = _superset_max(pi, domain)
    ok = np.ones(len(ranks_all), dtype=bool)
    for start in range(0, len(ranks_all), chunk):
        ranks = ranks_all[start : start + chunk]
        good = np.ones(len(ranks), dtype=bool)
        for T in domain:
            need = sup[T][list(T)]
            if not np.any(np.isfinite(need)):
                continue
            members = list(T)
            r = ranks[:, members]                       # (P, k)
            p = pi.vector(T)[members]                   # (k,)
            weakly_above = r[:, None, :] <= r[:, :, None]  # [P, a, b]: b ranks at or above a
            upper = weakly_above @ p                    # (P, k)
            good &= np.all(upper >= need[None, :] - tol, axis=1)
        ok[start : start + chunk] = good
    return ok


class NotAOM:
    """Marker returned when no preference satisfies attention compensation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return "NOT_AOM"


NOT_AOM = NotAOM()


@dataclass(frozen=True)
class RevealedRelation:
    """Pairs ``(better, worse)`` ranked the same way by every preference
    compatible with the data."""

    pairs: frozenset[tuple[int, int]]
    surviving_prefs: int
    survivors: tuple[Preference, ...] = field(repr=False, default=())

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def labelled(self, alphabet) -> list[tuple[str, str]]:
        return sorted((alphabet.label(b), alphabet.label(a)) for b, a in self.pairs)


def intersect_orders(prefs: Sequence[Preference]) -> frozenset[tuple[int, int]]:
    if not prefs:
        return frozenset()
    ranks = np.array([p.rank for p in prefs])
    n = ranks.shape[1]
    pairs = set()
    for b in range(n):
        for a in range(n):
            if a != b and np.all(ranks[:, b] < ranks[:, a]):
                pairs.add((b, a))
    return frozenset(pairs)


def revealed_preference_pac(pi: ChoiceRule, domain: Domain | None = None):
    """Intersection of all preferences satisfying attention compensation.

    Returns :data:`NOT_AOM` when no preference survives.
    """
    domain = domain if domain is not None else pi.domain
    mask = ac_mask(pi, domain)
    if not mask.any():
        return NOT_AOM
    prefs = list(all_preferences(domain.alphabet.size))
    survivors = tuple(p for p, keep in zip(prefs, mask) if keep)
    return RevealedRelation(intersect_orders(survivors), len(survivors), survivors)


def is_aom(pi: ChoiceRule, domain: Domain | None = None) -> Preference | None:
    """First preference (in enumeration order) satisfying attention
    compensation with ``pi``, or ``None``."""
    domain = domain if domain is not None else pi.domain
    mask = ac_mask(pi, domain)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        return None
    for k, pref in enumerate(all_preferences(domain.alphabet.size)):
        if k == hits[0]:
            return pref
    raise AssertionError("unreachable")


def binary_regularity_revelations(pi: ChoiceRule, domain: Domain | None = None, tol: float = AC_TOL) -> set[tuple[int, int]]:
    """Pairs ``(b, a)`` such that ``a`` is chosen more often from some larger
    menu than from ``{a, b}``."""
    domain = domain if domain is not None else pi.domain
    out = set()
    for B in domain.binary_menus():
        x, y = B.members
        for S in domain:
            if S.bits == B.bits or not B.issubset(S):
                continue
            for a, b in ((x, y), (y, x)):
                if pi.prob(a, S) > pi.prob(a, B) + tol:
                    out.add((b, a))
    return out


def regularity_disjunctions(pi: ChoiceRule, domain: Domain | None = None, tol: float = AC_TOL) -> list[tuple[int, Menu, int]]:
    """Every regularity violation ``pi(a|S) > pi(a|T)`` with ``T < S``.

    Each entry ``(a, T, candidates)`` says some alternative in
    ``candidates = T - {a}`` (a bitset) is better than ``a``. Entries are
    unique per ``(a, T)``.
    """
    domain = domain if domain is not None else pi.domain
    seen = {}
    for T, S in enumerate_nested_pairs(domain):
        for a in T:
            if pi.prob(a, S) > pi.prob(a, T) + tol and (a, T) not in seen:
                seen[(a, T)] = (a, T, T.without(a))
    return sorted(seen.values(), key=lambda e: (e[1], e[0]))


@dataclass(frozen=True)
class AttentionBounds:
    lower: float
    upper: float
    lower_argmax: Menu | None
    upper_argmin: Menu | None

    @property
    def classification(self) -> str:
        """Revealed full attention / inattention / no revealed attention /
        partial revealed attention."""
        if self.lower >= 1 and self.upper >= 1:
            return "full attention"
        if self.lower <= 0 and self.upper <= 0:
            return "inattention"
        if self.lower <= 0 and self.upper >= 1:
            return "no revealed attention"
        return "partial"

    @property
    def point_identified(self) -> bool:
        return abs(self.upper - self.lower) <= 1e-12


def attention_bounds_population(
    pi: ChoiceRule,
    pref: Preference | None,
    a: int,
    S: Menu,
    domain: Domain | None = None,
    eta: float | None = None,
) -> AttentionBounds:
    """Sharp bounds on the attention frequency of ``a`` at ``S``.

    The lower bound is the largest choice probability of ``a`` over observed
    supersets of ``S``; at binary menus ``1 - eta`` is a further floor. The
    upper bound is the smallest probability of choosing from the weak upper
    contour set of ``a`` over observed subsets of ``S`` containing ``a``;
    without a preference it is left at 1.
    """
    domain = domain if domain is not None else pi.domain
    if a not in S:
        raise AlternativeNotInMenu(f"alternative {a} not in {S!r}")
    sups = domain.supersets(S)
    if not sups:
        raise NoSupersetInDomain(f"{S!r} has no observed superset")
    lows = [pi.prob(a, R) for R in sups]
    k = int(np.argmax(lows))
    lower, lower_arg = lows[k], sups[k]
    if eta is not None and len(S) == 2 and 1.0 - eta > lower:
        lower, lower_arg = 1.0 - eta, None
    if pref is None:
        return AttentionBounds(lower, 1.0, lower_arg, None)
    subs = domain.subsets(S, containing=a)
    ups = [pi.prob_of(upper_contour(pref, a, T), T) for T in subs]
    j = int(np.argmin(ups))
    return AttentionBounds(lower, min(ups[j], 1.0), lower_arg, subs[j])


def pessimistic_targets(pi: ChoiceRule, domain: Domain) -> dict[Menu, np.ndarray]:
    """``max over observed R containing S`` of ``pi(.|R)``, per menu."""
    out = {}
    for S in domain:
        vec = np.zeros(domain.alphabet.size)
        for R in domain.supersets(S):
            vec = np.maximum(vec, pi.vector(R))
        out[S] = vec
    return out


def solve_menu_attention(
    pi_vec: np.ndarray,
    pref: Preference,
    S: Menu,
    targets: np.ndarray,
    tol: float = 1e-9,
) -> np.ndarray | None:
    """Attention masses at ``S`` explaining ``pi_vec`` with frequencies
    ``targets``; ``None`` if the linear system has no nonnegative solution.

    Returns masses aligned with ``submasks(S.bits)``.
    """
    subs = submasks(S.bits)
    members = list(S)
    best = [pref.best_in(Menu(b)) for b in subs]
    rows, rhs = [], []
    for a in members:
        rows.append([1.0 if best[k] == a else 0.0 for k in range(len(subs))])
        rhs.append(pi_vec[a])
    for a in members:
        rows.append([1.0 if b >> a & 1 else 0.0 for b in subs])
        rhs.append(targets[a])
    res = phase_one(np.array(rows), np.array(rhs), tol=tol)
    if not res.feasible:
        return None
    x = res.x
    return x / x.sum()


def construct_pessimistic_representation(
    pi: ChoiceRule,
    pref: Preference,
    domain: Domain | None = None,
    targets: Mapping[Menu, np.ndarray] | None = None,
    check_tol: float = 1e-8,
) -> AttentionRule:
    """Attention rule that, together with ``pref``, reproduces ``pi`` and
    whose attention frequency at each menu is the lower revealed-attention
    bound.

    ``targets`` replaces the per-menu frequency targets (used to realize
    other points of the identified set). Raises :class:`InfeasibleSystem`
    when some menu's linear system has no solution, which happens exactly
    when attention compensation fails.
    """
    domain = domain if domain is not None else pi.domain
    targets = targets if targets is not None else pessimistic_targets(pi, domain)
    subsets, masses = {}, {}
    for S in domain:
        x = solve_menu_attention(pi.vector(S), pref, S, targets[S])
        if x is None:
            raise InfeasibleSystem(f"no attention rule at {S!r} reproduces the data")
        subsets[S] = np.array(submasks(S.bits), dtype=np.int64)
        masses[S] = x
    mu = AttentionRule.from_arrays(domain.alphabet, subsets, masses)
    rebuilt = induced_choice_rule(pref, mu)
    for S in domain:
        if np.max(np.abs(rebuilt.vector(S) - pi.vector(S))) > check_tol:
            raise InfeasibleSystem(f"representation does not reproduce choices at {S!r}")
    if not check_attention_overload(mu, domain, tol=check_tol).satisfied:
        raise InfeasibleSystem("constructed attention rule violates attention overload")
    return mu
