import numpy as np
import pytest

from attention_overload.core import Alphabet, ChoiceRule, Menu, Preference
from attention_overload.models import AttentionRule, logit_attention, random_competition_filter


def example_rule(bcd=(0.25, 0.0, 0.75)):
    """Four alternatives observed at {a,b,c,d} and {b,c,d}."""
    al = Alphabet(["a", "b", "c", "d"])
    b, c, d = bcd
    pi = ChoiceRule.from_labels(
        al,
        {"a;b;c;d": {"a": 0.0, "b": 0.2, "c": 0.3, "d": 0.5}, "b;c;d": {"b": b, "c": c, "d": d}},
    )
    return al, pi


def top_k_filter(ranking, k):
    """Keep the ``k`` highest-ranked members of each menu."""
    order = {a: r for r, a in enumerate(ranking)}

    def gamma(S):
        return Menu.of(sorted(S, key=order.__getitem__)[:k])

    return gamma


def random_overload_rule(rng, domain, n_filters=3):
    """Mixture of logit attention and random competition filters; such
    mixtures always satisfy attention overload."""
    n = domain.alphabet.size
    weights = rng.dirichlet(np.ones(n_filters))
    filters = [(float(w), top_k_filter(rng.permutation(n), int(rng.integers(1, n + 1)))) for w in weights]
    filters[-1] = (1.0 - sum(w for w, _ in filters[:-1]), filters[-1][1])
    rcf = random_competition_filter(domain, filters)
    logit = logit_attention(domain, float(rng.uniform(0, 3)))
    lam = float(rng.uniform())
    subsets, masses = {}, {}
    for S in domain:
        s1, m1 = logit.items(S)
        total = dict(zip(s1.tolist(), (lam * m1).tolist()))
        for b, m in zip(*rcf.items(S)):
            total[int(b)] = total.get(int(b), 0.0) + (1 - lam) * float(m)
        keys = sorted(total)
        subsets[S] = np.array(keys, dtype=np.int64)
        masses[S] = np.array([total[k] for k in keys])
    return AttentionRule.from_arrays(domain.alphabet, subsets, masses)


def random_preference(rng, n):
    return Preference.from_order(rng.permutation(n).tolist())


@pytest.fixture(scope="session")
def six():
    from attention_overload.simulation import LogitDesign

    return LogitDesign()
