"""Interval systems discretized onto dyadic grids.

All geometry here is exact: breakpoints, slopes and cell bounds are
Fractions, so two runs of a discretization agree bit for bit.  The
built-in example is a two-branch system on [0, 1] whose entropy,
log 2, is recovered three independent ways.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DegenerateCell,
    MisalignedBreakpoints,
    NotMarkov,
    OutOfDomain,
    ShapeMismatch,
)
from .pressure import decomposition_pressure, spectral_pressure
from .relations import (
    Decomposition,
    FiniteCorrespondence,
    Potential,
    decomposition_validate,
    inverse_correspondence,
)

GRID_MIN = 4
GRID_MAX = 4096


def _frac(x):
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    return Fraction(x)


class PiecewiseLinearMap:
    """Continuous piecewise-affine self-map of an interval.

    pieces[k] = (slope, intercept) applies on
    [breakpoints[k], breakpoints[k+1]]; values are exact rationals.
    """

    def __init__(self, breakpoints, pieces):
        bp = tuple(_frac(b) for b in breakpoints)
        pc = tuple((_frac(s), _frac(t)) for s, t in pieces)
        if len(bp) < 2 or len(pc) != len(bp) - 1:
            raise ShapeMismatch("need one piece per breakpoint gap")
        if any(bp[k] >= bp[k + 1] for k in range(len(bp) - 1)):
            raise ShapeMismatch("breakpoints must increase strictly")
        for k in range(1, len(pc)):
            left = pc[k - 1][0] * bp[k] + pc[k - 1][1]
            right = pc[k][0] * bp[k] + pc[k][1]
            if left != right:
                raise ShapeMismatch(f"discontinuity at {bp[k]}")
        lo, hi = bp[0], bp[-1]
        for k, (s, t) in enumerate(pc):
            for x in (bp[k], bp[k + 1]):
                v = s * x + t
                if v < lo or v > hi:
                    raise OutOfDomain(v, lo, hi)
        self.breakpoints = bp
        self.pieces = pc

    @property
    def domain(self):
        return self.breakpoints[0], self.breakpoints[-1]

    def piece_at(self, x):
        k = bisect_right(self.breakpoints, x) - 1
        return min(max(k, 0), len(self.pieces) - 1)

    def __call__(self, x):
        return pl_eval(self, x)


def pl_eval(pmap, x):
    """Exact value of the map at a rational point."""
    x = _frac(x)
    lo, hi = pmap.domain
    if x < lo or x > hi:
        raise OutOfDomain(x, lo, hi)
    s, t = pmap.pieces[pmap.piece_at(x)]
    return s * x + t


@dataclass(frozen=True)
class IntervalCorrespondence:
    """Finitely many piecewise-linear branches over [0, 1]."""

    branches: tuple

    def __init__(self, branches):
        branches = tuple(branches)
        if not branches:
            raise ShapeMismatch("need at least one branch")
        for b in branches:
            if b.domain != (Fraction(0), Fraction(1)):
                raise OutOfDomain(b.domain[0], 0, 1)
        object.__setattr__(self, "branches", branches)


@dataclass(frozen=True, eq=False)
class GridRelation:
    resolution: int
    corr: FiniteCorrespondence

    def cell(self, k):
        n = self.resolution
        return Fraction(k, n), Fraction(k + 1, n), k == n - 1


def _cell_image(pmap, lo, hi):
    """Exact image of one grid cell under one branch.

    The cell is half open (closed when it ends at the domain top), and
    breakpoints are grid-aligned, so a single affine piece covers it.
    Returns (lo, hi) of the image with the slope sign, hi included
    exactly when the cell end is.
    """
    s, t = pmap.pieces[pmap.piece_at(lo)]
    va = s * lo + t
    vb = s * hi + t
    return (va, vb) if s >= 0 else (vb, va), s


def grid_discretize(system, resolution):
    """Transition relation of the branches at a dyadic resolution.

    Cell i points to cell j when some branch image of cell i meets
    cell j with nonempty interior; a branch whose image of the cell is
    a single point (flat piece) contributes the cell containing that
    point.  Half-open cells keep the identity map's relation equal to
    the identity.
    """
    n = resolution
    if n < GRID_MIN or n > GRID_MAX or n & (n - 1):
        raise ShapeMismatch(
            f"resolution must be a power of two in [{GRID_MIN}, {GRID_MAX}]")
    branches = system.branches if isinstance(system, IntervalCorrespondence) else tuple(system)
    bad = []
    for b in branches:
        for p in b.breakpoints:
            if (p * n).denominator != 1:
                bad.append(p)
    if bad:
        raise MisalignedBreakpoints(bad, n)
    edges = set()
    for b in branches:
        for k in range(n):
            lo = Fraction(k, n)
            hi = Fraction(k + 1, n)
            (ilo, ihi), slope = _cell_image(b, lo, hi)
            if slope == 0:
                j = min(int(ilo * n), n - 1)
                edges.add((k, j))
                continue
            j_lo = max(int(math.floor(ilo * n)), 0)
            j_hi = min(int(math.floor(ihi * n)) + 1, n - 1)
            for j in range(j_lo, j_hi + 1):
                c_lo = Fraction(j, n)
                c_hi = Fraction(j + 1, n)
                if max(ilo, c_lo) < min(ihi, c_hi):
                    edges.add((k, j))
    return GridRelation(n, FiniteCorrespondence(n, sorted(edges)))


@dataclass(frozen=True, eq=False)
class MarkovModel:
    pmap: PiecewiseLinearMap
    cells: tuple
    corr: FiniteCorrespondence


def markov_model(pmap, cells):
    """Transition relation of a map over a partition it maps cell-onto-cells.

    Every cell must sit inside one affine piece and its exact image
    must be a union of cells; cell i then points to every cell its
    image covers.  Checked entirely in rational arithmetic.
    """
    cells = tuple((_frac(a), _frac(b)) for a, b in cells)
    for a, b in cells:
        if a >= b:
            raise DegenerateCell(f"cell [{a}, {b}]")
    lo, hi = pmap.domain
    order = sorted(cells)
    cuts = [lo]
    for a, b in order:
        if a != cuts[-1]:
            raise NotMarkov(f"cells leave a gap or overlap at {a}")
        cuts.append(b)
    if cuts[-1] != hi:
        raise NotMarkov("cells do not cover the domain")
    cut_set = set(cuts)
    images = []
    for a, b in order:
        if any(a < p < b for p in pmap.breakpoints):
            raise NotMarkov(f"cell [{a}, {b}] straddles a breakpoint")
        s, t = pmap.pieces[pmap.piece_at(a)]
        va, vb = s * a + t, s * b + t
        ilo, ihi = min(va, vb), max(va, vb)
        if ilo not in cut_set or ihi not in cut_set:
            raise NotMarkov(
                f"image [{ilo}, {ihi}] of cell [{a}, {b}] is not a union of cells")
        images.append((ilo, ihi))
    edges = []
    for i, (ilo, ihi) in enumerate(images):
        for j, (a, b) in enumerate(order):
            if ilo <= a and b <= ihi:
                edges.append((i, j))
    return MarkovModel(pmap, order, FiniteCorrespondence(len(order), edges))


def example_branches():
    """The built-in two-branch system: a half-identity branch and a
    folded branch that exchanges the halves of [0, 1]."""
    f = PiecewiseLinearMap(
        [0, Fraction(1, 2), 1],
        [(1, 0), (Fraction(1, 2), Fraction(1, 4))])
    g = PiecewiseLinearMap(
        [0, Fraction(1, 4), Fraction(1, 2), 1],
        [(-2, 1), (2, 0), (Fraction(-1, 2), Fraction(5, 4))])
    return IntervalCorrespondence((f, g))


def example_inner_maps():
    """The two one-dimensional factors: identity on the lower half and
    a full tent on the upper half."""
    h1 = PiecewiseLinearMap([0, Fraction(1, 2)], [(1, 0)])
    h2 = PiecewiseLinearMap(
        [Fraction(1, 2), Fraction(3, 4), 1],
        [(2, Fraction(-1, 2)), (-2, Fraction(5, 2))])
    return h1, h2


def example_blocks(resolution):
    half = resolution // 2
    return Decomposition([tuple(range(half)), tuple(range(half, resolution))])


def example_report(resolution=1024):
    """Three routes to the entropy of the built-in system.

    (a) one-cell and tent Markov models assembled along the block
    structure, exactly log 2; (b) spectral pressure of the grid
    relation; (c) the Gibbs equilibrium pressure on the same grid.
    """
    h1, h2 = example_inner_maps()
    m1 = markov_model(h1, [(0, Fraction(1, 2))])
    m2 = markov_model(h2, [(Fraction(1, 2), Fraction(3, 4)), (Fraction(3, 4), 1)])
    inv2 = inverse_correspondence(m2.corr)
    offset = m1.corr.n_states
    edges = list(m1.corr.edges)
    edges += [(i + offset, j + offset) for i, j in inv2.edges]
    # the folded branch carries the lower half onto the upper block
    for j in range(inv2.n_states):
        edges.append((0, offset + j))
    assembled = FiniteCorrespondence(offset + inv2.n_states, sorted(set(edges)))
    blocks_a = Decomposition([tuple(range(offset)),
                              tuple(range(offset, assembled.n_states))])
    report_a = decomposition_validate(assembled, blocks_a)
    dp_a = decomposition_pressure(assembled, Potential.zero(assembled), blocks_a)

    grid = grid_discretize(example_branches(), resolution)
    value_b = spectral_pressure(grid.corr, Potential.zero(grid.corr)).pressure

    from .variational import gibbs_equilibrium
    eq = gibbs_equilibrium(grid.corr, Potential.zero(grid.corr))

    blocks_g = example_blocks(resolution)
    report_g = decomposition_validate(grid.corr, blocks_g)
    dp_g = decomposition_pressure(grid.corr, Potential.zero(grid.corr), blocks_g)

    log2 = math.log(2.0)
    return {
        "resolution": resolution,
        "route_a": {
            "block_values": list(dp_a.block_values),
            "value": dp_a.value,
            "decomposition_valid": report_a["valid"],
        },
        "route_b": {"value": value_b},
        "route_c": {"value": eq.pressure, "entropy": eq.entropy,
                    "integral": eq.integral},
        "grid_decomposition": {
            "valid": report_g["valid"],
            "block_values": list(dp_g.block_values),
            "value": dp_g.value,
        },
        "target": log2,
        "gap_a": abs(dp_a.value - log2),
        "gap_b": abs(value_b - log2),
        "gap_cb": abs(eq.pressure - value_b),
    }
