import numpy as np
import pytest

from corrpress import (
    Decomposition,
    DuplicateEdge,
    EmptySuccessor,
    FiniteCorrespondence,
    IndexOutOfRange,
    InvalidPath,
    NotSurjective,
    Potential,
    birkhoff_sum,
    from_map,
    inverse_correspondence,
)
from corrpress.relations import decomposition_validate


def random_relation(rng, n):
    edges = set()
    for i in range(n):
        k = int(rng.integers(1, n + 1))
        for j in rng.choice(n, size=k, replace=False):
            edges.add((i, int(j)))
    return FiniteCorrespondence(n, sorted(edges))


def test_edges_sorted_and_deduplicated_input_rejected():
    corr = FiniteCorrespondence(3, [(2, 0), (0, 1), (1, 2), (0, 0)])
    assert corr.edges == ((0, 0), (0, 1), (1, 2), (2, 0))
    with pytest.raises(DuplicateEdge):
        FiniteCorrespondence(2, [(0, 1), (0, 1), (1, 0)])


def test_every_state_needs_a_successor():
    with pytest.raises(EmptySuccessor) as err:
        FiniteCorrespondence(3, [(0, 1), (1, 0)])
    assert err.value.states == [2]


def test_edges_must_lie_in_range():
    with pytest.raises(IndexOutOfRange):
        FiniteCorrespondence(2, [(0, 1), (1, 2)])
    with pytest.raises(IndexOutOfRange):
        FiniteCorrespondence(2, [(-1, 0), (0, 1), (1, 0)])


def test_successor_predecessor_tables_agree_with_edges():
    rng = np.random.default_rng(7)
    for _ in range(20):
        corr = random_relation(rng, int(rng.integers(2, 8)))
        for i, j in corr.edges:
            assert j in corr.successors(i)
            assert i in corr.predecessors(j)
            assert corr.has_edge(i, j)
        assert sum(len(corr.successors(i)) for i in range(corr.n_states)) \
            == corr.n_edges
        idx = corr.edge_index()
        for k, e in enumerate(corr.edges):
            assert idx[e] == k


def test_from_map_and_inverse():
    corr = from_map(3, [1, 2, 0])
    assert corr.edges == ((0, 1), (1, 2), (2, 0))
    inv = from_map(3, [1, 2, 0], direction="inverse")
    assert inv.edges == ((0, 2), (1, 0), (2, 1))
    with pytest.raises(NotSurjective):
        from_map(3, [1, 1, 2], direction="inverse")


def test_inverse_correspondence_is_transpose():
    corr = FiniteCorrespondence(3, [(0, 1), (1, 2), (2, 0), (2, 1)])
    inv = inverse_correspondence(corr)
    assert set(inv.edges) == {(1, 0), (2, 1), (0, 2), (1, 2)}
    # a state with no incoming edge has no inverse image
    with pytest.raises(NotSurjective):
        inverse_correspondence(FiniteCorrespondence(2, [(0, 1), (1, 1)]))


def test_relabel_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        corr = random_relation(rng, n)
        theta = list(rng.permutation(n))
        back = [0] * n
        for i, t in enumerate(theta):
            back[t] = i
        assert corr.relabel(theta).relabel(back) == corr


def test_restrict_keeps_induced_edges():
    corr = FiniteCorrespondence(4, [(0, 1), (1, 0), (1, 2), (2, 3), (3, 2)])
    sub, order = corr.restrict([2, 3])
    assert list(order) == [2, 3]
    assert sub.edges == ((0, 1), (1, 0))


def test_potential_forms_agree():
    corr = FiniteCorrespondence(2, [(0, 0), (0, 1), (1, 0)])
    by_dict = Potential(corr, {(0, 1): 2.0, (1, 0): -1.0})
    by_array = Potential(corr, np.array([0.0, 2.0, -1.0]))
    assert np.allclose(by_dict.values, by_array.values)
    assert Potential.zero(corr).sup_norm() == 0.0
    assert by_dict[(0, 1)] == 2.0
    with pytest.raises(IndexOutOfRange):
        Potential(corr, {(1, 1): 1.0})


def test_potential_algebra():
    corr = FiniteCorrespondence(2, [(0, 1), (1, 0), (1, 1)])
    phi = Potential(corr, np.array([1.0, 2.0, 3.0]))
    assert np.allclose(phi.shift(0.5).values, [1.5, 2.5, 3.5])
    assert np.allclose(phi.scale(-2.0).values, [-2.0, -4.0, -6.0])
    assert np.allclose((phi + phi.scale(2.0)).values, [3.0, 6.0, 9.0])
    assert phi.sup_norm() == 3.0


def test_state_difference_is_a_coboundary():
    corr = FiniteCorrespondence(3, [(0, 1), (1, 2), (2, 0), (0, 0)])
    psi = np.array([0.3, -0.1, 0.4])
    phi = Potential.from_state_difference(corr, psi)
    for (i, j), v in zip(corr.edges, phi.values):
        assert v == pytest.approx(psi[i] - psi[j], abs=1e-15)


def test_birkhoff_sum_follows_the_walk():
    corr = FiniteCorrespondence(3, [(0, 1), (1, 2), (2, 0)])
    phi = Potential(corr, {(0, 1): 1.0, (1, 2): 10.0, (2, 0): 100.0})
    assert birkhoff_sum(corr, phi, [0, 1, 2, 0, 1]) == pytest.approx(112.0)
    with pytest.raises(InvalidPath) as err:
        birkhoff_sum(corr, phi, [0, 2])
    assert err.value.position == 0


def test_decomposition_validation_conditions():
    corr = FiniteCorrespondence(3, [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)])
    good = decomposition_validate(corr, Decomposition([[0], [1], [2]]))
    assert good["valid"]
    # missing state
    rep = decomposition_validate(corr, Decomposition([[0], [1]]))
    assert not rep["valid"] and rep["missing"] == [2]
    # backward edge into an earlier block
    back = FiniteCorrespondence(2, [(0, 0), (1, 0), (1, 1)])
    rep = decomposition_validate(back, Decomposition([[0], [1]]))
    assert not rep["valid"]
    assert rep["forbidden_edges"][0]["edges"] == [(1, 0)]
    # overlapping blocks are allowed
    rep = decomposition_validate(corr, Decomposition([[0, 1], [1, 2]]))
    assert rep["valid"]
