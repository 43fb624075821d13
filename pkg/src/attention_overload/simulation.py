"""Seeded simulation drivers: the six-alternative logit attention design,
rejection-rate tables and attention-bound percentile tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .characterize import (
    AttentionBounds,
    Kind,
    attention_bounds_population,
    enumerate_constraints,
)
from .core import Alphabet, ChoiceRule, Domain, Menu, Preference
from .inference import (
    DEFAULT_C3,
    DEFAULT_DRAWS,
    attention_bound_lower,
    attention_bound_upper,
    estimate_choice_rule,
    test_columns,
)
from .models import attention_frequency, induced_choice_rule, logit_attention, sample_dataset

__all__ = [
    "LogitDesign",
    "TABLE_PREFERENCES",
    "TABLE_COLUMNS",
    "replication_seed",
    "population_table",
    "monte_carlo_table",
    "figure_menus",
    "population_bounds",
    "monte_carlo_bounds",
]

TABLE_PREFERENCES = (
    "a1>a2>a3>a4>a5>a6",
    "a2>a3>a4>a5>a6>a1",
    "a1>a2>a6>a5>a4>a3",
    "a1>a6>a5>a4>a3>a2",
)

# (name, constraint kinds, eta)
TABLE_COLUMNS: tuple[tuple[str, tuple[str, ...], float | None], ...] = (
    ("AOM", ("AC",), None),
    ("RAM", ("RAM",), None),
    ("AOM+RAM", ("AC", "RAM"), None),
    ("eta=0.9", ("AC", "RAM", "BINARY_ETA"), 0.9),
    ("eta=0.8", ("AC", "RAM", "BINARY_ETA"), 0.8),
    ("eta=0.7", ("AC", "RAM", "BINARY_ETA"), 0.7),
    ("eta=0.6", ("AC", "RAM", "BINARY_ETA"), 0.6),
)


@dataclass
class LogitDesign:
    """Logit attention ``mu(T|S) ~ |T|^varsigma`` over all menus with at
    least two alternatives, with a fixed true preference."""

    n_alts: int = 6
    varsigma: float = 2.0
    n_per_menu: int = 200
    true_pref: str | None = None
    alphabet: Alphabet = field(init=False)
    domain: Domain = field(init=False)
    pref: Preference = field(init=False)
    pi: ChoiceRule = field(init=False)

    def __post_init__(self):
        self.alphabet = Alphabet.numbered(self.n_alts)
        self.domain = Domain.full(self.alphabet, min_size=2)
        self.mu = logit_attention(self.domain, self.varsigma)
        self.pref = (
            Preference.parse(self.true_pref, self.alphabet)
            if self.true_pref
            else Preference.identity(self.n_alts)
        )
        self.pi = induced_choice_rule(self.pref, self.mu)

    def sample(self, seed: int):
        return sample_dataset(self.pi, self.n_per_menu, seed)


def replication_seed(seed: int, rep: int) -> int:
    """Independent 63-bit seed for replication ``rep``."""
    state = np.random.SeedSequence([int(seed), int(rep)]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


def _columns(columns):
    return [(name, list(kinds), eta) for name, kinds, eta in columns]


def population_table(
    design: LogitDesign,
    preferences: Sequence[str] = TABLE_PREFERENCES,
    columns=TABLE_COLUMNS,
) -> dict:
    """Restriction counts, violation counts and largest inequality for each
    preference and column, evaluated at the exact choice rule."""
    out = {"restrictions": {}, "rows": []}
    for text in preferences:
        pref = Preference.parse(text, design.alphabet)
        row = {"preference": text, "violations": {}, "max_inequality": {}}
        for name, kinds, eta in columns:
            system = enumerate_constraints(design.domain, pref, kinds, eta)
            d = system.evaluate(design.pi)
            out["restrictions"][name] = len(system)
            row["violations"][name] = int(np.sum(d > 1e-12))
            row["max_inequality"][name] = float(d.max()) if len(d) else None
        out["rows"].append(row)
    return out


def monte_carlo_table(
    design: LogitDesign,
    reps: int,
    seed: int = 0,
    preferences: Sequence[str] = TABLE_PREFERENCES,
    columns=TABLE_COLUMNS,
    alpha: float = 0.05,
    c3: float = DEFAULT_C3,
    draws: int = DEFAULT_DRAWS,
    method: str = "two_step",
) -> dict:
    """Empirical rejection frequencies over ``reps`` simulated datasets.

    Replication ``r`` draws its data and critical values from streams keyed
    by ``(seed, r)``.
    """
    cols = _columns(columns)
    prefs = [Preference.parse(t, design.alphabet) for t in preferences]
    systems = [
        enumerate_constraints(design.domain, p, [k.value for k in Kind], 1.0) for p in prefs
    ]
    rejections = np.zeros((len(prefs), len(cols)), dtype=np.int64)
    for r in range(reps):
        s = replication_seed(seed, r)
        pi_hat = estimate_choice_rule(design.sample(s))
        for i, (pref, system) in enumerate(zip(prefs, systems)):
            res = test_columns(
                pi_hat, pref, cols, alpha=alpha, method=method, c3=c3, draws=draws, seed=s, system=system
            )
            rejections[i] += [res[name].reject for name, _k, _e in cols]
    rates = rejections / max(reps, 1)
    return {
        "reps": reps,
        "seed": seed,
        "alpha": alpha,
        "c3": c3,
        "draws": draws,
        "rows": [
            {"preference": t, "rejection_rate": {name: float(rates[i, j]) for j, (name, _k, _e) in enumerate(cols)}}
            for i, t in enumerate(preferences)
        ],
    }


def figure_menus(design: LogitDesign, alternatives: Sequence[int] = (0, 1, 2)) -> list[tuple[int, Menu]]:
    """Nested menus ``{a1, ..., ak}`` containing each target alternative."""
    out = []
    for a in alternatives:
        for k in range(max(2, a + 1), design.n_alts + 1):
            out.append((a, Menu.of(range(k))))
    return out


def population_bounds(design: LogitDesign, alternatives: Sequence[int] = (0, 1, 2)) -> list[dict]:
    rows = []
    for a, S in figure_menus(design, alternatives):
        b: AttentionBounds = attention_bounds_population(design.pi, design.pref, a, S, design.domain)
        rows.append(
            {
                "alternative": design.alphabet.label(a),
                "menu": S.format(design.alphabet),
                "size": len(S),
                "true": attention_frequency(design.mu, a, S),
                "lower": b.lower,
                "upper": b.upper,
            }
        )
    return rows


def monte_carlo_bounds(
    design: LogitDesign,
    reps: int,
    seed: int = 0,
    alternatives: Sequence[int] = (0, 1, 2),
    alpha: float = 0.05,
) -> list[dict]:
    """Population bounds with the 95th percentile of estimated lower bounds
    and the 5th percentile of estimated upper bounds."""
    targets = figure_menus(design, alternatives)
    lows = np.empty((reps, len(targets)))
    ups = np.empty((reps, len(targets)))
    for r in range(reps):
        pi_hat = estimate_choice_rule(design.sample(replication_seed(seed, r)))
        for j, (a, S) in enumerate(targets):
            lows[r, j] = attention_bound_lower(pi_hat, a, S, alpha).value
            ups[r, j] = attention_bound_upper(pi_hat, design.pref, a, S, alpha).value
    rows = population_bounds(design, alternatives)
    for j, row in enumerate(rows):
        row["lower_p95"] = float(np.quantile(lows[:, j], 0.95)) if reps else None
        row["upper_p05"] = float(np.quantile(ups[:, j], 0.05)) if reps else None
    return rows
