"""Finite-sample inference: plug-in estimates, Studentized max statistics,
simulated Gaussian critical values, moment selection, confidence sets and
attention-frequency bound estimators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import ndtri

from .characterize import ConstraintSystem, Kind, coordinates, enumerate_constraints, stack
from .core import (
    AOMError,
    AlphabetTooLarge,
    AlternativeNotInMenu,
    ChoiceRule,
    Domain,
    Menu,
    MenuMissing,
    Preference,
    all_preferences,
    upper_contour,
)
from .models import Dataset

__all__ = [
    "EmptyDataset",
    "AlphaOutOfRange",
    "DimensionMismatch",
    "ConstraintStats",
    "CorrelationMatrix",
    "TestResult",
    "BoundEstimate",
    "BoundTarget",
    "estimate_choice_rule",
    "constraint_stats",
    "estimate_correlation",
    "standard_normal_draws",
    "critical_value",
    "two_step_selection",
    "test_preference",
    "test_columns",
    "confidence_set",
    "attention_bound_lower",
    "attention_bound_upper",
    "joint_attention_bounds",
]

DEFAULT_DRAWS = 2000
DEFAULT_C3 = 0.005
SIGMA_TOL = 1e-12  # below this a standard error is treated as exactly zero
CHUNK = 500        # draws per counter-based random stream


class EmptyDataset(AOMError, ValueError):
    pass


class AlphaOutOfRange(AOMError, ValueError):
    pass


class DimensionMismatch(AOMError, ValueError):
    pass


def _check_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise AlphaOutOfRange(f"level {alpha} outside (0, 1)")
    return float(alpha)


def estimate_choice_rule(data: Dataset | ChoiceRule, domain: Domain | None = None) -> ChoiceRule:
    """Empirical choice frequencies with per-menu sample sizes.

    Menus of ``domain`` without observations are dropped with a warning.
    """
    if isinstance(data, ChoiceRule):
        return data
    if len(data) == 0:
        raise EmptyDataset("dataset has no observations")
    counts = data.counts()
    if domain is not None:
        missing = [m for m in domain if m not in counts]
        if missing:
            warnings.warn(
                f"{len(missing)} menu(s) have no observations and are excluded",
                RuntimeWarning,
                stacklevel=2,
            )
        counts = {m: c for m, c in counts.items() if m in domain}
        if not counts:
            raise EmptyDataset("no observed menu lies in the requested domain")
    probs = {m: c / c.sum() for m, c in counts.items()}
    sizes = {m: int(c.sum()) for m, c in counts.items()}
    return ChoiceRule(data.alphabet, probs, sizes=sizes)


def _require_sizes(pi_hat: ChoiceRule) -> None:
    for m in pi_hat.menus:
        if pi_hat.size(m) is None:
            raise ValueError("estimated choice rule needs per-menu sample sizes")


@dataclass(frozen=True)
class ConstraintStats:
    d_hat: np.ndarray
    sigma_hat: np.ndarray
    degenerate: np.ndarray

    def __len__(self) -> int:
        return len(self.d_hat)

    def ratios(self) -> np.ndarray:
        """``D/sigma``; degenerate entries are ``+inf`` if violated, else ``-inf``."""
        out = np.full(len(self.d_hat), -np.inf)
        ok = ~self.degenerate
        out[ok] = self.d_hat[ok] / self.sigma_hat[ok]
        out[self.degenerate & (self.d_hat > SIGMA_TOL)] = np.inf
        return out


def _coordinate_variances(pi_hat: ChoiceRule, coords) -> tuple[np.ndarray, np.ndarray]:
    p = stack(pi_hat, coords)
    n = np.array([pi_hat.size(m) for (m, _a) in coords], dtype=float)
    return p, n


def constraint_stats(pi_hat: ChoiceRule, system: ConstraintSystem) -> ConstraintStats:
    """Plug-in ``D`` and its standard error for every constraint.

    Each side of a constraint is a choice probability of an event at one
    menu; its variance is the Bernoulli ``p(1-p)/N``. Different menus come
    from independent subsamples.
    """
    _require_sizes(pi_hat)
    d = system.evaluate(pi_hat)
    p, n = _coordinate_variances(pi_hat, system.coords)
    # group each row's coordinates by menu, sum the event probabilities
    keys = list(system.coords)
    menu_id = np.empty(len(keys), dtype=np.int64)
    ids: dict[Menu, int] = {}
    for j, (m, _a) in enumerate(keys):
        menu_id[j] = ids.setdefault(m, len(ids))
    R = system.R.tocoo()
    # event probability and scale per (row, menu)
    pair = R.row.astype(np.int64) * len(ids) + menu_id[R.col]
    uniq, inv = np.unique(pair, return_inverse=True)
    weight = np.zeros(len(uniq))
    prob = np.zeros(len(uniq))
    np.add.at(prob, inv, p[R.col])
    np.maximum.at(weight, inv, np.abs(R.data))
    size = np.zeros(len(uniq))
    size[inv] = n[R.col]
    prob = np.clip(prob, 0.0, 1.0)
    var = np.zeros(len(system))
    np.add.at(var, uniq // len(ids), weight**2 * prob * (1.0 - prob) / size)
    sigma = np.sqrt(var)
    return ConstraintStats(d, sigma, sigma <= SIGMA_TOL)


def _coordinate_factor(p: np.ndarray, n: np.ndarray, coords) -> sparse.csr_matrix:
    """Sparse ``L`` with ``L L^T`` the block-diagonal covariance of the
    stacked multinomial proportions: per menu ``(diag p - p p^T)/N``."""
    rows, cols, vals = [], [], []
    blocks: dict[Menu, list[int]] = {}
    for j, (m, _a) in enumerate(coords):
        blocks.setdefault(m, []).append(j)
    for idx in blocks.values():
        idx = np.array(idx)
        pb = p[idx]
        sq = np.sqrt(pb)
        block = (np.diag(sq) - np.outer(pb, sq)) / np.sqrt(n[idx[0]])
        r, c = np.nonzero(block)
        rows.extend(idx[r])
        cols.extend(idx[c])
        vals.extend(block[r, c])
    k = len(coords)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(k, k))


def standard_normal_draws(draws: int, dim: int, seed: int) -> np.ndarray:
    """``(draws, dim)`` standard normals; block ``b`` of draws comes from its
    own counter-based stream keyed by ``(seed, b)``."""
    out = np.empty((draws, dim))
    for b, start in enumerate(range(0, draws, CHUNK)):
        stop = min(start + CHUNK, draws)
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 1, b])))
        out[start:stop] = gen.standard_normal((stop - start, dim))
    return out


class CorrelationMatrix:
    """Correlation of the Studentized moments, stored through loadings
    ``A`` with ``Omega = A A^T``.

    ``index`` maps rows back to constraint positions in the originating
    system (degenerate constraints have no row).
    """

    def __init__(self, loadings, index: np.ndarray | None = None):
        self.loadings = loadings
        m = loadings.shape[0]
        self.index = np.arange(m) if index is None else np.asarray(index)
        self._matrix = None

    @classmethod
    def from_matrix(cls, omega) -> "CorrelationMatrix":
        """Symmetric square root of a correlation matrix, negative
        eigenvalues clipped to zero."""
        omega = np.atleast_2d(np.asarray(omega, dtype=float))
        if omega.shape[0] != omega.shape[1]:
            raise DimensionMismatch("correlation matrix must be square")
        omega = 0.5 * (omega + omega.T)
        w, v = np.linalg.eigh(omega)
        root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
        out = cls(root)
        return out

    @property
    def dim(self) -> int:
        return self.loadings.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            A = self.loadings
            M = A @ A.T
            M = M.toarray() if sparse.issparse(M) else np.asarray(M)
            d = np.sqrt(np.clip(np.diag(M), 1e-300, None))
            M = np.clip(M / np.outer(d, d), -1.0, 1.0)
            np.fill_diagonal(M, 1.0)
            self._matrix = M
        return self._matrix

    def sample(self, draws: int, seed: int) -> np.ndarray:
        """``(draws, dim)`` Gaussian vectors with covariance ``Omega``."""
        z = standard_normal_draws(draws, self.loadings.shape[1], seed)
        if sparse.issparse(self.loadings):
            return np.asarray((self.loadings @ z.T).T)
        return z @ self.loadings.T


def estimate_correlation(
    pi_hat: ChoiceRule, system: ConstraintSystem, stats: ConstraintStats | None = None
) -> CorrelationMatrix:
    """Plug-in correlation of the non-degenerate constraints of ``system``.

    Two estimated probabilities of events ``A`` and ``B`` at the same menu
    ``W`` covary as ``(p(A & B) - p(A) p(B)) / N_W``; across menus they are
    independent. Constraints are linear in the stacked proportions, so the
    covariance is ``R V R^T`` with block-diagonal ``V``.
    """
    if pi_hat.alphabet.size != system.domain.alphabet.size:
        raise DimensionMismatch("choice rule and constraint system use different alphabets")
    stats = stats if stats is not None else constraint_stats(pi_hat, system)
    if len(stats) != len(system):
        raise DimensionMismatch(f"{len(stats)} statistics for {len(system)} constraints")
    p, n = _coordinate_variances(pi_hat, system.coords)
    L = _coordinate_factor(p, n, system.coords)
    keep = np.flatnonzero(~stats.degenerate)
    scale = sparse.diags(1.0 / stats.sigma_hat[keep])
    loadings = (scale @ system.R[keep] @ L).tocsr()
    return CorrelationMatrix(loadings, keep)


def _quantile_of_max(draws: np.ndarray, alpha: float, floor: bool = True) -> float:
    if draws.shape[1] == 0:
        top = np.zeros(draws.shape[0])
    else:
        top = draws.max(axis=1)
    if floor:
        top = np.maximum(top, 0.0)
    return float(np.quantile(top, 1.0 - alpha, method="inverted_cdf"))


def critical_value(
    omega: CorrelationMatrix | np.ndarray,
    alpha: float,
    psi: np.ndarray | None = None,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
) -> float:
    """``(1 - alpha)``-quantile of ``max(max(Omega^{1/2} z + psi), 0)``.

    ``psi`` entries of ``-inf`` drop the coordinate.
    """
    alpha = _check_alpha(alpha)
    if draws < 100:
        raise ValueError("at least 100 draws are needed")
    if not isinstance(omega, CorrelationMatrix):
        omega = CorrelationMatrix.from_matrix(omega)
    if psi is not None:
        psi = np.asarray(psi, dtype=float)
        if psi.shape != (omega.dim,):
            raise DimensionMismatch(f"psi has shape {psi.shape}, expected ({omega.dim},)")
        keep = np.isfinite(psi)
        if not keep.any():
            return 0.0
    y = omega.sample(draws, seed)
    if psi is not None:
        y = y[:, keep] + psi[keep]
    return _quantile_of_max(y, alpha)


def two_step_selection(
    stats: ConstraintStats,
    omega: CorrelationMatrix,
    c3: float = DEFAULT_C3,
    alpha: float = 0.05,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    _sample: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Moment pre-selection.

    Returns ``psi`` over the rows of ``omega`` (0 keeps, ``-inf`` drops a
    constraint whose ratio lies below ``-2 cv(c3)``) and the critical value
    recomputed at level ``alpha`` on the kept constraints.
    """
    _check_alpha(alpha)
    _check_alpha(c3)
    y = _sample if _sample is not None else omega.sample(draws, seed)
    ratios = stats.ratios()[omega.index]
    cv1 = _quantile_of_max(y, c3)
    keep = ratios >= -2.0 * cv1
    psi = np.where(keep, 0.0, -np.inf)
    return psi, _quantile_of_max(y[:, keep], alpha)


@dataclass
class TestResult:
    statistic: float
    cv: float
    reject: bool
    alpha: float
    method: str
    c3: float | None
    mc_draws: int
    seed: int
    n_constraints: int
    n_violated: int
    max_inequality: float
    ratios: np.ndarray = field(repr=False)
    selected: np.ndarray = field(repr=False)
    deterministic_violation: bool = False
    cv_conservative: float | None = None
    reject_conservative: bool | None = None
    pref: Preference | None = field(default=None, repr=False)

    __test__ = False  # not a pytest class

    def summary(self) -> dict:
        out = {
            "statistic": self.statistic,
            "cv": self.cv,
            "reject": self.reject,
            "alpha": self.alpha,
            "method": self.method,
            "c3": self.c3,
            "n_constraints": self.n_constraints,
            "n_violated": self.n_violated,
            "max_inequality": self.max_inequality,
            "mc_draws": self.mc_draws,
            "seed": self.seed,
            "deterministic_violation": self.deterministic_violation,
        }
        if self.cv_conservative is not None:
            out["cv_conservative"] = self.cv_conservative
            out["reject_conservative"] = self.reject_conservative
        return out


def _decide(
    stats: ConstraintStats,
    sample_fn,
    index: np.ndarray,
    alpha: float,
    method: str,
    c3: float,
    draws: int,
    seed: int,
) -> TestResult:
    """Statistic, critical value and decision for one set of moments.

    ``sample_fn()`` returns Gaussian draws over the non-degenerate
    constraints listed in ``index``; it is only called when needed.
    """
    if method not in ("one_step", "two_step"):
        raise ValueError(f"unknown method {method!r}")
    ratios = stats.ratios()
    m = len(stats)
    finite = ratios[np.isfinite(ratios)]
    statistic = max(float(finite.max()) if finite.size else 0.0, 0.0)
    forced = bool(np.any(np.isposinf(ratios)))
    n_violated = int(np.sum(stats.d_hat > SIGMA_TOL))
    max_ineq = float(stats.d_hat.max()) if m else float("-inf")
    selected = np.zeros(m, dtype=bool)
    selected[index] = True
    res = TestResult(
        statistic=statistic,
        cv=0.0,
        reject=False,
        alpha=alpha,
        method=method,
        c3=c3 if method == "two_step" else None,
        mc_draws=draws,
        seed=seed,
        n_constraints=m,
        n_violated=n_violated,
        max_inequality=max_ineq,
        ratios=ratios,
        selected=selected,
        deterministic_violation=forced,
    )
    if forced:
        res.reject = True
        if method == "two_step":
            res.reject_conservative = True
        return res
    if statistic <= 0.0:
        # the statistic cannot exceed a nonnegative critical value
        if method == "two_step":
            res.reject_conservative = False
        return res
    y = sample_fn()
    if method == "one_step":
        res.cv = _quantile_of_max(y, alpha)
    else:
        cv1 = _quantile_of_max(y, c3)
        keep = ratios[index] >= -2.0 * cv1
        sel = np.zeros(m, dtype=bool)
        sel[index[keep]] = True
        res.selected = sel
        yk = y[:, keep]
        res.cv = _quantile_of_max(yk, alpha)
        if alpha - 2 * c3 > 0:
            res.cv_conservative = _quantile_of_max(yk, alpha - 2 * c3)
            res.reject_conservative = statistic > res.cv_conservative
    res.reject = statistic > res.cv
    return res


def test_preference(
    data: Dataset | ChoiceRule,
    pref: Preference,
    kinds: Iterable[str | Kind] = (Kind.AC,),
    eta: float | None = None,
    alpha: float = 0.05,
    method: str = "two_step",
    c3: float = DEFAULT_C3,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    domain: Domain | None = None,
) -> TestResult:
    """Test whether ``pref`` is compatible with the data.

    Rejects when the Studentized max statistic exceeds the simulated
    critical value. A constraint with zero standard error and a positive
    estimate is a deterministic violation and forces rejection.
    """
    alpha = _check_alpha(alpha)
    pi_hat = estimate_choice_rule(data)
    domain = domain if domain is not None else pi_hat.domain
    system = enumerate_constraints(domain, pref, kinds, eta)
    stats = constraint_stats(pi_hat, system)

    def sample():
        return estimate_correlation(pi_hat, system, stats).sample(draws, seed)

    res = _decide(stats, sample, np.flatnonzero(~stats.degenerate), alpha, method, c3, draws, seed)
    res.pref = pref
    return res


def test_columns(
    data: Dataset | ChoiceRule,
    pref: Preference,
    columns: Sequence[tuple[str, Sequence[str], float | None]],
    alpha: float = 0.05,
    method: str = "two_step",
    c3: float = DEFAULT_C3,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    domain: Domain | None = None,
    system: ConstraintSystem | None = None,
) -> dict[str, TestResult]:
    """Run several tests of one preference sharing a single Gaussian draw.

    ``columns`` lists ``(name, kinds, eta)``. The correlation of a binary
    constraint with the others does not depend on ``eta``, so all columns
    can share the draws of the full system.
    """
    alpha = _check_alpha(alpha)
    pi_hat = estimate_choice_rule(data)
    domain = domain if domain is not None else pi_hat.domain
    if system is None:
        system = enumerate_constraints(domain, pref, [k.value for k in Kind], 1.0)
    base = constraint_stats(pi_hat, system)
    binary = system.kind_mask([Kind.BINARY_ETA])
    p_bin = base.d_hat[binary] + 1.0  # system built at eta = 1
    sd_bin = base.sigma_hat[binary]
    corr = None
    cache = {}

    def full_sample():
        nonlocal corr
        if "y" not in cache:
            corr = estimate_correlation(pi_hat, system, base)
            cache["y"] = corr.sample(draws, seed)
            pos = np.full(len(system), -1)
            pos[corr.index] = np.arange(len(corr.index))
            cache["pos"] = pos
        return cache["y"], cache["pos"]

    out = {}
    for name, kinds, eta in columns:
        mask = system.kind_mask(kinds)
        d = base.d_hat.copy()
        s = base.sigma_hat.copy()
        if Kind.BINARY_ETA.value in {Kind(k).value for k in kinds}:
            if eta is None:
                raise ValueError(f"column {name!r} needs eta")
            d[binary] = (p_bin - eta) / eta
            s[binary] = sd_bin / eta
        stats = ConstraintStats(d[mask], s[mask], base.degenerate[mask])
        rows = np.flatnonzero(mask)
        index = np.flatnonzero(~stats.degenerate)

        def sample(rows=rows, index=index):
            y, pos = full_sample()
            return y[:, pos[rows[index]]]

        res = _decide(stats, sample, index, alpha, method, c3, draws, seed)
        res.pref = pref
        out[name] = res
    return out


@dataclass
class ConfidenceSet:
    members: list[Preference]
    results: list[TestResult] = field(repr=False)
    alpha: float = 0.05

    @property
    def specification_rejected(self) -> bool:
        """No preference survives: the model itself is rejected."""
        return not self.members

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, pref):
        return pref in self.members


def confidence_set(
    data: Dataset | ChoiceRule,
    alpha: float = 0.05,
    kinds: Iterable[str | Kind] = (Kind.AC,),
    eta: float | None = None,
    method: str = "two_step",
    c3: float = DEFAULT_C3,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    max_alternatives: int = 8,
) -> ConfidenceSet:
    """All preferences not rejected at level ``alpha``."""
    pi_hat = estimate_choice_rule(data)
    n = pi_hat.alphabet.size
    if n > max_alternatives:
        raise AlphabetTooLarge(f"confidence sets enumerate {n}! preferences; limit is {max_alternatives}")
    kinds = list(kinds)
    members, results = [], []
    for pref in all_preferences(n):
        res = test_preference(pi_hat, pref, kinds, eta, alpha, method, c3, draws, seed)
        results.append(res)
        if not res.reject:
            members.append(pref)
    return ConfidenceSet(members, results, alpha)


# ---------------------------------------------------------------- bounds


@dataclass
class BoundEstimate:
    value: float
    cv: float
    side: str
    alpha: float
    a: int
    S: Menu
    terms: list[tuple[Menu, float, float, float]] = field(default_factory=list)

    def summary(self, alphabet=None) -> dict:
        fmt = (lambda m: m.format(alphabet)) if alphabet is not None else (lambda m: m.bits)
        return {
            "side": self.side,
            "alternative": alphabet.label(self.a) if alphabet is not None else self.a,
            "menu": fmt(self.S),
            "value": self.value,
            "cv": self.cv,
            "alpha": self.alpha,
            "terms": [
                {"menu": fmt(m), "estimate": est, "se": se, "adjusted": adj} for m, est, se, adj in self.terms
            ],
        }


@dataclass(frozen=True)
class BoundTarget:
    a: int
    S: Menu
    side: str  # "lower" or "upper"
    pref: Preference | None = None


def _bound_events(pi_hat: ChoiceRule, target: BoundTarget) -> list[tuple[Menu, int]]:
    """``(menu, event bits)`` whose probabilities bound ``phi(a|S)``."""
    a, S = target.a, target.S
    if a not in S:
        raise AlternativeNotInMenu(f"alternative {a} not in {S!r}")
    domain = pi_hat.domain
    if target.side == "lower":
        return [(R, 1 << a) for R in domain.supersets(S)]
    if target.side == "upper":
        if target.pref is None:
            raise ValueError("upper bounds need a preference")
        return [(T, upper_contour(target.pref, a, T)) for T in domain.subsets(S, containing=a)]
    raise ValueError(f"unknown side {target.side!r}")


def _bound_from_events(pi_hat, target, events, cv, alpha) -> BoundEstimate:
    sign = -1.0 if target.side == "lower" else 1.0
    terms = []
    for W, bits in events:
        p = pi_hat.prob_of(bits, W)
        se = float(np.sqrt(max(p * (1 - p), 0.0) / pi_hat.size(W)))
        terms.append((W, p, se, p + sign * cv * se))
    if not terms:
        value = 0.0 if target.side == "lower" else 1.0
    elif target.side == "lower":
        value = max(t[3] for t in terms)
    else:
        value = min(t[3] for t in terms)
    return BoundEstimate(value, cv, target.side, alpha, target.a, target.S, terms)


def _independent_max_quantile(k: int, alpha: float) -> float:
    """``(1 - alpha)``-quantile of the max of ``k`` independent standard normals."""
    if k == 0:
        return 0.0
    return float(ndtri((1.0 - alpha) ** (1.0 / k)))


def _single_bound(data, target: BoundTarget, alpha: float) -> BoundEstimate:
    alpha = _check_alpha(alpha)
    pi_hat = estimate_choice_rule(data)
    _require_sizes(pi_hat)
    if target.S not in pi_hat:
        raise MenuMissing(target.S)
    events = _bound_events(pi_hat, target)
    live = sum(1 for W, bits in events if 0 < pi_hat.prob_of(bits, W) < 1)
    cv = _independent_max_quantile(live, alpha)
    return _bound_from_events(pi_hat, target, events, cv, alpha)


def attention_bound_lower(data: Dataset | ChoiceRule, a: int, S: Menu, alpha: float = 0.05) -> BoundEstimate:
    """One-sided lower confidence bound for the attention frequency of ``a``
    at ``S``: the largest superset choice probability, each shifted down by
    ``cv`` standard errors."""
    return _single_bound(data, BoundTarget(a, S, "lower"), alpha)


def attention_bound_upper(
    data: Dataset | ChoiceRule, pref: Preference, a: int, S: Menu, alpha: float = 0.05
) -> BoundEstimate:
    """One-sided upper confidence bound: the smallest subset probability of
    choosing from the weak upper contour set of ``a``, shifted up."""
    return _single_bound(data, BoundTarget(a, S, "upper", pref), alpha)


def joint_attention_bounds(
    data: Dataset | ChoiceRule,
    targets: Sequence[BoundTarget],
    alpha: float = 0.05,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
) -> list[BoundEstimate]:
    """Bounds for several targets sharing one critical value with joint
    coverage ``1 - alpha``.

    Upper-side coordinates enter the Gaussian maximum with flipped sign.
    """
    alpha = _check_alpha(alpha)
    if not targets:
        raise ValueError("no targets")
    pi_hat = estimate_choice_rule(data)
    _require_sizes(pi_hat)
    coords = coordinates(pi_hat.menus)
    p, n = _coordinate_variances(pi_hat, coords)
    per_target = [_bound_events(pi_hat, t) for t in targets]
    rows, cols, vals = [], [], []
    r = 0
    for t, events in zip(targets, per_target):
        sign = 1.0 if t.side == "lower" else -1.0
        for W, bits in events:
            q = pi_hat.prob_of(bits, W)
            se = np.sqrt(max(q * (1 - q), 0.0) / pi_hat.size(W))
            if se <= SIGMA_TOL:
                continue
            for b in Menu(bits):
                rows.append(r)
                cols.append(coords[(W, b)])
                vals.append(sign / se)
            r += 1
    if r == 0:
        cv = 0.0
    else:
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(r, len(coords)))
        L = _coordinate_factor(p, n, coords)
        y = CorrelationMatrix((A @ L).tocsr()).sample(draws, seed)
        cv = _quantile_of_max(y, alpha, floor=False)
    return [_bound_from_events(pi_hat, t, ev, cv, alpha) for t, ev in zip(targets, per_target)]
