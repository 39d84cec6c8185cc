import numpy as np
import pytest

from corrpress import (
    FiniteCorrespondence,
    ModeUnsupported,
    is_invariant,
    pushforward,
    uniform_measure,
)


def random_relation(rng, n):
    edges = set()
    for i in range(n):
        k = int(rng.integers(1, n + 1))
        for j in rng.choice(n, size=k, replace=False):
            edges.add((i, int(j)))
    return FiniteCorrespondence(n, sorted(edges))


def test_point_mass_at_a_swallowed_state_is_not_invariant():
    # 0 -> 1 -> 1: nothing returns to 0, so delta_0 cannot be invariant
    corr = FiniteCorrespondence(2, [(0, 1), (1, 1)])
    chk = is_invariant(corr, [1.0, 0.0])
    assert not chk.invariant
    assert chk.by_mode == {"lp": False, "subsets": False}
    assert chk.violating_subset == (0,)
    assert chk.witness_pair is None


def test_swap_relation_fixes_the_uniform_measure():
    corr = FiniteCorrespondence(2, [(0, 1), (1, 0)])
    chk = is_invariant(corr, uniform_measure(2))
    assert chk.invariant
    assert chk.witness_kernel is not None
    q = chk.witness_kernel.matrix
    assert q[0, 1] == pytest.approx(1.0) and q[1, 0] == pytest.approx(1.0)


def test_point_mass_on_a_self_loop_is_invariant():
    corr = FiniteCorrespondence(2, [(0, 0), (0, 1), (1, 0)])
    chk = is_invariant(corr, [1.0, 0.0])
    assert chk.invariant
    assert chk.witness_kernel.matrix[0, 0] == pytest.approx(1.0)


def test_violating_subset_actually_violates():
    """mu(S) must exceed the mass able to enter S for a reported subset."""
    rng = np.random.default_rng(41)
    found = 0
    for _ in range(200):
        corr = random_relation(rng, int(rng.integers(2, 7)))
        mu = rng.dirichlet(np.ones(corr.n_states))
        chk = is_invariant(corr, mu)
        if chk.invariant:
            continue
        found += 1
        s = set(chk.violating_subset)
        into = set(i for i in range(corr.n_states)
                   if any(j in s for j in corr.successors(i)))
        assert sum(mu[i] for i in s) > sum(mu[i] for i in into) - 1e-9
    assert found > 20


def test_modes_agree_and_witnesses_fix_the_measure():
    rng = np.random.default_rng(42)
    checked_positive = 0
    for _ in range(120):
        corr = random_relation(rng, int(rng.integers(2, 8)))
        if rng.random() < 0.5:
            mu = rng.dirichlet(np.ones(corr.n_states))
        else:
            # cycle-supported measures are invariant by construction
            mu = np.zeros(corr.n_states)
            x = int(rng.integers(corr.n_states))
            seen = {}
            walk = []
            while x not in seen:
                seen[x] = len(walk)
                walk.append(x)
                x = int(rng.choice(corr.successors(x)))
            cycle = walk[seen[x]:]
            for s in cycle:
                mu[s] += 1.0 / len(cycle)
        chk = is_invariant(corr, mu)
        assert chk.by_mode["lp"] == chk.by_mode["subsets"]
        if chk.invariant:
            checked_positive += 1
            gap = np.abs(pushforward(mu, chk.witness_kernel) - mu).sum()
            assert gap <= 1e-10
            pair = chk.witness_pair
            assert pair.sum() == pytest.approx(1.0, abs=1e-9)
            left = np.zeros(corr.n_states)
            right = np.zeros(corr.n_states)
            for (i, j), w in zip(corr.edges, pair):
                left[i] += w
                right[j] += w
            assert np.abs(left - mu).sum() <= 1e-9
            assert np.abs(right - mu).sum() <= 1e-9
    assert checked_positive > 30


def test_single_mode_calls():
    corr = FiniteCorrespondence(2, [(0, 1), (1, 0)])
    lp_only = is_invariant(corr, uniform_measure(2), mode="lp")
    assert list(lp_only.by_mode) == ["lp"]
    sub_only = is_invariant(corr, uniform_measure(2), mode="subsets")
    assert list(sub_only.by_mode) == ["subsets"]
    with pytest.raises(ModeUnsupported):
        is_invariant(corr, uniform_measure(2), mode="exact")
