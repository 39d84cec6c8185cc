import math
from fractions import Fraction

import numpy as np
import pytest

from corrpress import (
    FiniteCorrespondence,
    IntervalCorrespondence,
    MisalignedBreakpoints,
    NotMarkov,
    OutOfDomain,
    PiecewiseLinearMap,
    Potential,
    ShapeMismatch,
    example_branches,
    example_report,
    grid_discretize,
    markov_model,
    pl_eval,
    spectral_pressure,
)
from corrpress.intervals import example_blocks, example_inner_maps

LOG2 = math.log(2.0)

F = Fraction


def tent():
    return PiecewiseLinearMap(["0", "1/2", "1"], [("2", "0"), ("-2", "2")])


def identity_map():
    return PiecewiseLinearMap(["0", "1"], [("1", "0")])


def test_map_validation():
    with pytest.raises(ShapeMismatch):
        # discontinuous at the interior breakpoint
        PiecewiseLinearMap(["0", "1/2", "1"], [("2", "0"), ("2", "-1")])
    with pytest.raises(ShapeMismatch):
        PiecewiseLinearMap(["0", "1/2", "1/2", "1"],
                           [("1", "0"), ("1", "0"), ("1", "0")])
    with pytest.raises(ShapeMismatch):
        PiecewiseLinearMap(["0", "1"], [])
    with pytest.raises(OutOfDomain):
        # image escapes the domain interval
        PiecewiseLinearMap(["0", "1"], [("3", "0")])


def test_pl_eval_paper_branches():
    f, g = example_branches().branches
    assert pl_eval(f, F(3, 4)) == F(5, 8)
    assert pl_eval(g, F(1, 4)) == F(1, 2)
    # the two pieces of g meet at 1/2
    assert pl_eval(g, F(1, 2)) == F(1)
    assert pl_eval(identity_map(), F(3, 7)) == F(3, 7)
    with pytest.raises(OutOfDomain):
        pl_eval(tent(), F(3, 2))


def test_identity_discretizes_to_the_identity_relation():
    system = IntervalCorrespondence([identity_map()])
    grid = grid_discretize(system, 4)
    assert grid.corr.edges == ((0, 0), (1, 1), (2, 2), (3, 3))


def test_tent_cells_split_under_expansion():
    grid = grid_discretize(IntervalCorrespondence([tent()]), 4)
    # cell 0 = [0,1/4) maps onto [0,1/2), which covers two cells
    assert grid.corr.successors(0) == (0, 1)
    assert grid.corr.successors(1) == (2, 3)
    assert spectral_pressure(grid.corr, Potential.zero(grid.corr)).pressure \
        == pytest.approx(LOG2, abs=1e-12)


def test_misaligned_breakpoints_are_rejected():
    skew = PiecewiseLinearMap(["0", "1/3", "1"], [("1/2", "0"), ("1/4", "1/12")])
    with pytest.raises(MisalignedBreakpoints):
        grid_discretize(IntervalCorrespondence([skew]), 4)


def test_worked_example_grid_at_resolution_eight():
    grid = grid_discretize(example_branches(), 8)
    expected = {0: (0, 6, 7), 1: (1, 4, 5), 2: (2, 4, 5), 3: (3, 6, 7),
                4: (4, 7), 5: (4, 7), 6: (5, 6), 7: (5, 6)}
    for cell, succ in expected.items():
        assert grid.corr.successors(cell) == succ
    # cells in the right half keep two successors inside the right half
    for cell in (4, 5, 6, 7):
        inside = [j for j in grid.corr.successors(cell) if j >= 4]
        assert len(inside) == 2


def test_grid_cells_are_half_open():
    grid = grid_discretize(example_branches(), 8)
    lo, hi, is_last = grid.cell(0)
    assert (lo, hi, is_last) == (F(0), F(1, 8), False)
    assert grid.cell(7) == (F(7, 8), F(1), True)


def test_markov_model_of_the_inner_maps():
    h1, h2 = example_inner_maps()
    # identity on the left half, one cell, entropy zero
    model1 = markov_model(h1, [("0", "1/2")])
    assert model1.corr.edges == ((0, 0),)
    # tent-like on the right half, two cells, full transition matrix
    model2 = markov_model(h2, [("1/2", "3/4"), ("3/4", "1")])
    assert model2.corr.edges == ((0, 0), (0, 1), (1, 0), (1, 1))
    p = spectral_pressure(model2.corr, Potential.zero(model2.corr)).pressure
    assert p == pytest.approx(LOG2, abs=1e-12)


def test_markov_model_rejects_non_markov_partitions():
    with pytest.raises(NotMarkov):
        markov_model(tent(), [("0", "1/3"), ("1/3", "1")])
    with pytest.raises(NotMarkov):
        # cells leave a gap
        markov_model(tent(), [("0", "1/4"), ("1/2", "1")])


def test_doubling_type_full_branch_map():
    # both branches map their cell onto the whole interval
    m = PiecewiseLinearMap(["0", "1/2", "1"], [("2", "0"), ("-2", "2")])
    model = markov_model(m, [("0", "1/2"), ("1/2", "1")])
    assert spectral_pressure(model.corr, Potential.zero(model.corr)).pressure \
        == pytest.approx(LOG2, abs=1e-12)


def test_example_report_routes_agree():
    rep = example_report(8)
    assert rep["route_a"]["value"] == pytest.approx(LOG2, abs=1e-12)
    assert rep["route_a"]["decomposition_valid"]
    assert rep["gap_a"] <= 1e-12
    assert abs(rep["gap_b"]) <= 0.05
    assert abs(rep["gap_cb"]) <= 1e-9
    assert rep["grid_decomposition"]["valid"]
    assert rep["route_c"]["entropy"] + rep["route_c"]["integral"] \
        == pytest.approx(rep["route_c"]["value"], abs=1e-9)


def test_example_report_is_reproducible_bit_for_bit():
    a = example_report(64)
    b = example_report(64)
    assert a == b


def test_example_blocks_split_the_interval():
    grid = grid_discretize(example_branches(), 16)
    left, right = example_blocks(16).blocks
    assert left == tuple(range(8)) and right == tuple(range(8, 16))
    # no edge returns from the right half to the left half
    for i, j in grid.corr.edges:
        assert not (i in right and j in left)
