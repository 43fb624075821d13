import itertools

import numpy as np
import pytest
from scipy.special import ndtri

from attention_overload import inference as inf
from attention_overload.characterize import enumerate_constraints
from attention_overload.core import Alphabet, ChoiceRule, Domain, Menu, Preference, all_preferences
from attention_overload.inference import (
    AlphaOutOfRange,
    BoundTarget,
    ConstraintStats,
    CorrelationMatrix,
    DimensionMismatch,
    EmptyDataset,
    attention_bound_lower,
    attention_bound_upper,
    confidence_set,
    constraint_stats,
    critical_value,
    estimate_choice_rule,
    estimate_correlation,
    joint_attention_bounds,
    standard_normal_draws,
    two_step_selection,
)
from attention_overload.io import counts_from_rule
from attention_overload.models import Dataset, attention_frequency, sample_dataset
from attention_overload.simulation import replication_seed

from conftest import example_rule, random_overload_rule, random_preference
from attention_overload.models import induced_choice_rule

ABC = Alphabet(["a", "b", "c"])
ABCD = Alphabet(["a", "b", "c", "d"])


def menu(al, text):
    return Menu.of(al.index(x) for x in text)


def sized_rule(al, table, n):
    """Choice rule from a label table with the same sample size everywhere."""
    pi = ChoiceRule.from_labels(al, table)
    return ChoiceRule(al, {m: pi.vector(m) for m in pi.menus}, sizes={m: n for m in pi.menus})


class TestEstimateChoiceRule:
    def test_ratio(self):
        ab = menu(ABC, "ab")
        data = Dataset.from_counts(ABC, {ab: np.array([150, 50, 0])})
        pi = estimate_choice_rule(data)
        assert pi.prob(0, ab) == 0.75 and pi.size(ab) == 200

    def test_rows_sum_to_one(self, six):
        pi = estimate_choice_rule(six.sample(1))
        for S in pi.menus:
            assert pi.vector(S).sum() == pytest.approx(1.0, abs=1e-15)

    def test_unobserved_menu_dropped_with_warning(self):
        ab = menu(ABC, "ab")
        data = Dataset.from_counts(ABC, {ab: np.array([3, 1, 0])})
        with pytest.warns(RuntimeWarning):
            pi = estimate_choice_rule(data, Domain(ABC, [ab, menu(ABC, "abc")]))
        assert pi.menus == (ab,)

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            estimate_choice_rule(Dataset(ABC, [], []))


def one_constraint_system():
    """Domain {abc, bc} under a > b > c: the single AC row is (b | abc, bc)."""
    dom = Domain(ABC, [menu(ABC, "abc"), menu(ABC, "bc")])
    system = enumerate_constraints(dom, Preference.identity(3))
    assert len(system) == 1 and system[0].a == 1
    return system


class TestConstraintStats:
    def test_standard_error(self):
        pi = sized_rule(ABC, {"a;b;c": {"a": 0.25, "b": 0.5, "c": 0.25}, "b;c": {"b": 0.5, "c": 0.5}}, 200)
        stats = constraint_stats(pi, one_constraint_system())
        assert stats.sigma_hat[0] == pytest.approx(0.05)
        assert stats.d_hat[0] == pytest.approx(0.0)

    def test_degenerate(self):
        pi = sized_rule(ABC, {"a;b;c": {"a": 1.0, "b": 0.0, "c": 0.0}, "b;c": {"b": 1.0, "c": 0.0}}, 50)
        stats = constraint_stats(pi, one_constraint_system())
        assert stats.degenerate[0] and stats.sigma_hat[0] == 0.0
        assert stats.ratios()[0] == -np.inf

    def test_four_alternative_difference(self):
        al, pi = example_rule()
        pi = ChoiceRule(al, {m: pi.vector(m) for m in pi.menus}, sizes={m: 100 for m in pi.menus})
        system = enumerate_constraints(pi.domain, Preference.parse("b>c>d>a", al))
        stats = constraint_stats(pi, system)
        assert stats.d_hat.max() == pytest.approx(0.05)

    def test_needs_sizes(self):
        _, pi = example_rule()
        system = enumerate_constraints(pi.domain, Preference.identity(4))
        with pytest.raises(ValueError):
            constraint_stats(pi, system)


def brute_force_covariance(data, system):
    """Plug-in covariance of the constraint estimates from the per-observation
    indicator vectors, each menu an independent subsample."""
    coords = system.coords
    V = np.zeros((len(coords), len(coords)))
    menus = np.asarray(data.menus)
    choices = np.asarray(data.choices)
    for W in system.domain:
        idx = [coords[(W, a)] for a in W]
        rows = choices[menus == W.bits]
        X = np.array([[1.0 if y == a else 0.0 for a in W] for y in rows])
        centered = X - X.mean(axis=0)
        N = len(rows)
        V[np.ix_(idx, idx)] = centered.T @ centered / N / N
    R = system.R.toarray()
    return R @ V @ R.T


class TestCorrelation:
    @pytest.mark.parametrize("seed", range(15))
    def test_matches_indicator_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 5))
        al = Alphabet.numbered(n)
        dom = Domain.full(al)
        pi = induced_choice_rule(random_preference(rng, n), random_overload_rule(rng, dom))
        data = sample_dataset(pi, int(rng.integers(10, 51)), seed=seed)
        pi_hat = estimate_choice_rule(data)
        pref = random_preference(rng, n)
        system = enumerate_constraints(pi_hat.domain, pref, ["AC", "RAM", "BINARY_ETA"], 0.8)
        stats = constraint_stats(pi_hat, system)
        C = brute_force_covariance(data, system)
        assert np.allclose(np.sqrt(np.diag(C)), stats.sigma_hat, atol=1e-12, rtol=0)
        corr = estimate_correlation(pi_hat, system, stats)
        keep = corr.index
        sd = np.sqrt(np.diag(C))[keep]
        expected = C[np.ix_(keep, keep)] / np.outer(sd, sd)
        assert np.allclose(corr.matrix, expected, atol=1e-12, rtol=0)
        assert np.allclose(np.diag(corr.matrix), 1.0)

    def test_nested_events_share_menu(self):
        # A within B at the same menu: cov = (p_A - p_A p_B) / N
        W = Menu(0b1111)
        coords = {(W, a): a for a in range(4)}
        p = np.array([0.3, 0.2, 0.1, 0.4])
        L = inf._coordinate_factor(p, np.full(4, 200.0), coords)
        V = (L @ L.T).toarray()
        A = np.array([1, 0, 0, 0.0])
        B = np.array([1, 1, 0, 0.0])
        assert A @ V @ B == pytest.approx((0.3 - 0.3 * 0.5) / 200, abs=1e-15)

    def test_disjoint_menus_uncorrelated(self):
        al = Alphabet.numbered(4)
        m1, m2 = menu(al, ["a1", "a2"]), menu(al, ["a3", "a4"])
        dom = Domain(al, [m1, m2, Menu(0b1011), Menu(0b1101)])
        rng = np.random.default_rng(0)
        pi = induced_choice_rule(Preference.identity(4), random_overload_rule(rng, dom))
        pi_hat = estimate_choice_rule(sample_dataset(pi, 40, seed=2))
        system = enumerate_constraints(pi_hat.domain, Preference.identity(4), ["RAM"])
        corr = estimate_correlation(pi_hat, system)
        M = corr.matrix
        for i, j in itertools.combinations(range(len(corr.index)), 2):
            ci, cj = system[corr.index[i]], system[corr.index[j]]
            if not {ci.S, ci.T} & {cj.S, cj.T}:
                assert M[i, j] == 0.0

    def test_from_matrix_clips_eigenvalues(self):
        bad = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
        corr = CorrelationMatrix.from_matrix(bad)
        assert np.linalg.eigvalsh(corr.matrix).min() >= -1e-12
        assert np.allclose(np.diag(corr.matrix), 1.0)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            CorrelationMatrix.from_matrix(np.ones((2, 3)))


class TestCriticalValue:
    def test_normal_quantile(self):
        assert critical_value(np.eye(1), 0.05, draws=20_000, seed=1) == pytest.approx(1.645, abs=0.02)

    def test_median(self):
        assert critical_value(np.eye(1), 0.5, draws=4000, seed=2) == pytest.approx(0.0, abs=0.05)

    def test_all_dropped(self):
        assert critical_value(np.eye(3), 0.05, psi=np.full(3, -np.inf)) == 0.0

    def test_deterministic(self):
        omega = np.array([[1.0, 0.4], [0.4, 1.0]])
        assert critical_value(omega, 0.05, seed=9) == critical_value(omega, 0.05, seed=9)

    def test_decreasing_in_alpha(self):
        values = [critical_value(np.eye(4), a, seed=3) for a in (0.01, 0.05, 0.1, 0.2, 0.5)]
        assert all(x >= y for x, y in zip(values, values[1:]))

    def test_increasing_in_dimension(self):
        values = [critical_value(np.eye(k), 0.05, draws=5000, seed=3) for k in (1, 2, 4, 8, 16)]
        assert all(x <= y for x, y in zip(values, values[1:]))

    def test_independent_matches_closed_form(self):
        cv = critical_value(np.eye(5), 0.05, draws=20_000, seed=4)
        assert cv == pytest.approx(ndtri(0.95 ** (1 / 5)), abs=0.03)

    def test_dropping_never_increases(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(6, 6))
        omega = np.corrcoef(A @ A.T)
        psi = np.zeros(6)
        base = critical_value(omega, 0.05, psi=psi, seed=5)
        for k in range(6):
            psi[k] = -np.inf
            now = critical_value(omega, 0.05, psi=psi, seed=5)
            assert now <= base
            base = now

    def test_alpha_range(self):
        with pytest.raises(AlphaOutOfRange):
            critical_value(np.eye(1), 1.0)

    def test_too_few_draws(self):
        with pytest.raises(ValueError):
            critical_value(np.eye(1), 0.05, draws=50)

    def test_psi_shape(self):
        with pytest.raises(DimensionMismatch):
            critical_value(np.eye(2), 0.05, psi=np.zeros(3))

    def test_draw_blocks_are_stable(self):
        # extending the draw count does not change earlier blocks
        short = standard_normal_draws(600, 3, seed=11)
        long = standard_normal_draws(1500, 3, seed=11)
        assert np.array_equal(short, long[:600])


class TestTwoStep:
    def _stats(self, ratios):
        ratios = np.asarray(ratios, dtype=float)
        return ConstraintStats(ratios * 0.1, np.full(len(ratios), 0.1), np.zeros(len(ratios), dtype=bool))

    def test_nothing_dropped(self):
        omega = CorrelationMatrix.from_matrix(np.eye(4))
        psi, cv = two_step_selection(self._stats([0.5, -0.1, 1.0, 0.0]), omega, 0.005, 0.05, 2000, 7)
        assert np.all(psi == 0)
        assert cv == pytest.approx(critical_value(omega, 0.05, draws=2000, seed=7))

    def test_everything_dropped(self):
        omega = CorrelationMatrix.from_matrix(np.eye(3))
        psi, cv = two_step_selection(self._stats([-50.0, -60.0, -70.0]), omega, 0.005, 0.05, 2000, 7)
        assert np.all(np.isneginf(psi)) and cv == 0.0

    def test_partial(self):
        omega = CorrelationMatrix.from_matrix(np.eye(3))
        psi, cv = two_step_selection(self._stats([0.2, -50.0, -0.5]), omega, 0.005, 0.05, 2000, 7)
        assert list(np.isfinite(psi)) == [True, False, True]
        assert cv == pytest.approx(critical_value(omega, 0.05, psi=psi, draws=2000, seed=7))

    def test_default_level(self):
        assert inf.DEFAULT_C3 == 0.005


class TestPreferenceTest:
    def test_no_positive_difference_never_rejects(self):
        weights = np.array([4.0, 3.0, 2.0, 1.0])
        dom = Domain.full(ABCD)
        probs = {}
        for S in dom:
            v = np.zeros(4)
            v[list(S)] = weights[list(S)] / weights[list(S)].sum()
            probs[S] = v
        pi = ChoiceRule(ABCD, probs, sizes={S: 100 for S in dom})
        for pref in list(all_preferences(4))[::5]:
            res = inf.test_preference(pi, pref)
            assert res.statistic == 0.0 and not res.reject and res.cv == 0.0

    def test_deterministic_violation(self):
        pi = sized_rule(ABC, {"a;b;c": {"a": 0.0, "b": 1.0, "c": 0.0}, "b;c": {"b": 0.0, "c": 1.0}}, 50)
        res = inf.test_preference(pi, Preference.identity(3))
        assert res.deterministic_violation and res.reject

    def test_four_alternative_large_sample(self):
        al, pi = example_rule()
        data = counts_from_rule(pi, 5000)
        bad = inf.test_preference(data, Preference.parse("b>c>d>a", al))
        good = inf.test_preference(data, Preference.parse("d>c>b>a", al))
        assert bad.reject and bad.max_inequality == pytest.approx(0.05)
        assert not good.reject

    def test_reject_iff_statistic_exceeds_cv(self, six):
        pref = Preference.parse("a2>a3>a4>a5>a6>a1", six.alphabet)
        for seed in range(3):
            for method in ("one_step", "two_step"):
                res = inf.test_preference(six.sample(seed), pref, method=method, seed=seed)
                assert res.reject == (res.statistic > res.cv)
                assert res.statistic >= 0 and res.cv >= 0

    def test_two_step_not_above_one_step(self, six):
        pref = Preference.parse("a1>a2>a6>a5>a4>a3", six.alphabet)
        data = six.sample(4)
        one = inf.test_preference(data, pref, ["AC", "RAM"], method="one_step", seed=1)
        two = inf.test_preference(data, pref, ["AC", "RAM"], method="two_step", seed=1)
        assert two.cv <= one.cv
        assert two.cv_conservative >= two.cv

    def test_seed_reproducible(self, six):
        data = six.sample(5)
        pref = Preference.parse("a2>a3>a4>a5>a6>a1", six.alphabet)
        a = inf.test_preference(data, pref, seed=3)
        b = inf.test_preference(data, pref, seed=3)
        assert (a.statistic, a.cv) == (b.statistic, b.cv)

    def test_columns_match_separate_tests(self, six):
        data = six.sample(6)
        pref = Preference.parse("a1>a6>a5>a4>a3>a2", six.alphabet)
        cols = [("AOM", ["AC"], None), ("RAM", ["RAM"], None), ("eta", ["AC", "RAM", "BINARY_ETA"], 0.7)]
        joint = inf.test_columns(data, pref, cols, seed=2)
        for name, kinds, eta in cols:
            alone = inf.test_preference(data, pref, kinds, eta, seed=2)
            assert joint[name].statistic == pytest.approx(alone.statistic, rel=1e-12)
            assert joint[name].n_violated == alone.n_violated
        assert joint["eta"].reject

    def test_unknown_method(self, six):
        with pytest.raises(ValueError):
            inf.test_preference(six.sample(0), six.pref, method="three_step")

    def test_size_on_logit_design(self, six):
        rejections = sum(
            inf.test_preference(six.sample(replication_seed(99, r)), six.pref, seed=r).reject for r in range(40)
        )
        assert rejections <= 3


class TestConfidenceSet:
    def test_regular_data_keeps_everything(self):
        al = Alphabet.numbered(4)
        dom = Domain.full(al)
        w = np.array([1.0, 2.0, 3.0, 4.0])
        probs = {S: np.where([i in S for i in range(4)], w, 0) / w[list(S)].sum() for S in dom}
        pi = ChoiceRule(al, probs, sizes={S: 60 for S in dom})
        cs = confidence_set(pi)
        assert len(cs) == 24 and not cs.specification_rejected

    def test_four_alternative_data(self):
        al, pi = example_rule()
        cs = confidence_set(counts_from_rule(pi, 4000))
        assert Preference.parse("b>c>d>a", al) not in cs
        assert all(p.prefers(3, 2) for p in cs)

    def test_non_aom_data_empties_the_set(self):
        pi = ChoiceRule.from_labels(
            ABCD,
            {
                "a;b;c;d": {"a": 0.5, "b": 0.5, "c": 0.0, "d": 0.0},
                "a;b;c": {"a": 0.0, "b": 2 / 3, "c": 1 / 3},
                "a;b": {"a": 0.5, "b": 0.5},
            },
        )
        cs = confidence_set(counts_from_rule(pi, 3000))
        assert cs.specification_rejected

    def test_alphabet_limit(self):
        from attention_overload.core import AlphabetTooLarge

        al = Alphabet.numbered(9)
        data = Dataset.from_counts(al, {Menu(0b11): np.array([1, 1] + [0] * 7)})
        with pytest.raises(AlphabetTooLarge):
            confidence_set(data)


class TestBounds:
    def test_single_superset_lower(self):
        pi = sized_rule(ABC, {"a;b": {"a": 0.6, "b": 0.4}}, 100)
        est = attention_bound_lower(pi, 0, menu(ABC, "ab"))
        se = np.sqrt(0.24 / 100)
        assert est.value == pytest.approx(0.6 - ndtri(0.95) * se)
        assert est.cv == pytest.approx(1.6448536, abs=1e-6)

    def test_single_subset_upper(self):
        pi = sized_rule(ABC, {"a;b;c": {"a": 0.2, "b": 0.5, "c": 0.3}}, 100)
        est = attention_bound_upper(pi, Preference.identity(3), 1, menu(ABC, "abc"))
        se = np.sqrt(0.7 * 0.3 / 100)
        assert est.value == pytest.approx(0.7 + ndtri(0.95) * se)

    def test_degenerate_term_unadjusted(self):
        pi = sized_rule(ABC, {"a;b": {"a": 1.0, "b": 0.0}, "a;b;c": {"a": 0.5, "b": 0.2, "c": 0.3}}, 100)
        est = attention_bound_lower(pi, 0, menu(ABC, "ab"))
        assert est.value == 1.0
        # one live term, so the cv is the one-dimensional quantile
        assert est.cv == pytest.approx(ndtri(0.95))

    def test_fixed_sign_adjustments(self, six):
        data = six.sample(3)
        pi_hat = estimate_choice_rule(data)
        for S in six.domain.supersets(Menu(0b100)):
            lo = attention_bound_lower(pi_hat, 2, S)
            up = attention_bound_upper(pi_hat, six.pref, 2, S)
            assert lo.value <= max(t[1] for t in lo.terms)
            assert up.value >= min(t[1] for t in up.terms)

    def test_alternative_not_in_menu(self):
        from attention_overload.core import AlternativeNotInMenu

        pi = sized_rule(ABC, {"a;b": {"a": 0.6, "b": 0.4}}, 100)
        with pytest.raises(AlternativeNotInMenu):
            attention_bound_lower(pi, 2, menu(ABC, "ab"))

    def test_joint_disjoint_families(self):
        pi = sized_rule(ABCD, {"a;b": {"a": 0.6, "b": 0.4}, "c;d": {"c": 0.3, "d": 0.7}}, 100)
        targets = [BoundTarget(0, menu(ABCD, "ab"), "lower"), BoundTarget(2, menu(ABCD, "cd"), "lower")]
        est = joint_attention_bounds(pi, targets, draws=20_000, seed=1)
        assert est[0].cv == est[1].cv == pytest.approx(ndtri(0.95**0.5), abs=0.03)

    def test_joint_positive_correlation(self):
        pi = sized_rule(ABCD, {"a;b;c;d": {"a": 0.3, "b": 0.2, "c": 0.3, "d": 0.2}}, 200)
        S = Menu(0b1111)
        pref = Preference.parse("b>c>a>d", ABCD)
        targets = [BoundTarget(0, S, "lower"), BoundTarget(2, S, "upper", pref)]
        cv = joint_attention_bounds(pi, targets, draws=20_000, seed=2)[0].cv
        assert ndtri(0.95) + 0.05 < cv < ndtri(0.95**0.5) - 0.02

    def test_joint_coverage_on_logit_design(self, six):
        targets = [BoundTarget(0, Menu.of(range(k)), "lower") for k in (2, 4, 6)]
        truth = [attention_frequency(six.mu, 0, t.S) for t in targets]
        covered = 0
        reps = 150
        for r in range(reps):
            est = joint_attention_bounds(six.sample(replication_seed(5, r)), targets, draws=1000, seed=r)
            covered += all(e.value <= v for e, v in zip(est, truth))
        assert covered / reps >= 0.93
