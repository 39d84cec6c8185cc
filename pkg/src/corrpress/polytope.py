"""Invariant measures of a correspondence and their polytope.

A state measure mu is invariant when some pair measure on the edges
has both marginals equal to mu; equivalently some kernel supported by
the edges fixes mu, and equivalently mu(A) <= mu(preimage of A) for
every subset A.  The set of such mu is a polytope whose extreme
points come from vertices of the pair-measure polytope.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ModeUnsupported,
    NotAFunctionOnBlock,
    NotInvariant,
    NotInvariantOnBlock,
    NotSurjective,
    ShapeMismatch,
    TooLarge,
)
from .kernels import TransitionKernel, kernel_from_pair, validate_measure
from .simplex import INFEASIBLE, OPTIMAL, gauss_solve, simplex

SUBSET_STATE_CAP = 16
EDGE_CAP = 24
WITNESS_TOL = 1e-10


def _marginal_system(corr, drop_last_column=True):
    """Equality rows for: row sums = mu, column sums = mu (last dropped)."""
    n, m = corr.n_states, corr.n_edges
    rows = []
    for i in range(n):
        rows.append([1 if e[0] == i else 0 for e in corr.edges])
    upto = n - 1 if drop_last_column else n
    for j in range(upto):
        rows.append([1 if e[1] == j else 0 for e in corr.edges])
    return rows


@dataclass(frozen=True, eq=False)
class InvarianceCheck:
    invariant: bool
    by_mode: dict
    witness_pair: np.ndarray | None
    witness_kernel: TransitionKernel | None
    violating_subset: tuple | None


def _invariant_lp(corr, mu, feas_tol):
    a = _marginal_system(corr)
    b = list(mu) + list(mu[:-1])
    status, x, _ = simplex(a, [float(v) for v in b], [0.0] * corr.n_edges,
                           exact=False, feas_tol=feas_tol)
    if status != OPTIMAL:
        return None
    return np.array([float(v) for v in x])


def _invariant_subsets(corr, mu, slack):
    """Hall-type check over all target subsets, bitmask dynamic programs."""
    n = corr.n_states
    if n > SUBSET_STATE_CAP:
        raise TooLarge(f"subset mode limited to {SUBSET_STATE_CAP} states")
    pred_mask = [0] * n
    for i, j in corr.edges:
        pred_mask[j] |= 1 << i
    size = 1 << n
    mass = [0.0] * size
    pre = [0] * size
    for m in range(1, size):
        low = (m & -m).bit_length() - 1
        rest = m & (m - 1)
        mass[m] = mass[rest] + float(mu[low])
        pre[m] = pre[rest] | pred_mask[low]
    for m in range(1, size):
        pm = pre[m]
        pmass = mass[pm] if pm != m else mass[m]
        if mass[m] > pmass + slack:
            return tuple(i for i in range(n) if m >> i & 1)
    return None


def is_invariant(corr, mu, mode="both", feas_tol=1e-9):
    """Decide invariance of a state measure, with a witness either way.

    mode "lp" solves the coupling feasibility problem and returns a
    pair-measure witness plus the kernel obtained by row-normalizing
    it; mode "subsets" searches for a violating subset; "both" runs
    the two and reports them side by side.
    """
    mu = validate_measure(corr.n_states, mu)
    if mode not in ("lp", "subsets", "both"):
        raise ModeUnsupported(f"unknown mode {mode!r}")
    by_mode = {}
    pair = None
    violating = None
    if mode in ("lp", "both"):
        pair = _invariant_lp(corr, mu, feas_tol)
        by_mode["lp"] = pair is not None
    if mode in ("subsets", "both"):
        violating = _invariant_subsets(corr, mu, feas_tol)
        by_mode["subsets"] = violating is None
    verdict = by_mode.get("lp", by_mode.get("subsets"))
    kernel = None
    if pair is not None:
        kernel = kernel_from_pair(corr, pair)
    return InvarianceCheck(bool(verdict), by_mode, pair, kernel, violating)


def _exact_rank(rows):
    rows = [list(map(Fraction, r)) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    r = 0
    for col in range(ncols):
        sel = next((i for i in range(r, len(rows)) if rows[i][col] != 0), -1)
        if sel < 0:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        piv = rows[r][col]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
        if r == len(rows):
            break
    return rank


@dataclass(frozen=True, eq=False)
class PolytopeExtremes:
    pair_vertices: tuple       # exact edge vectors (tuples of Fraction)
    projections: tuple         # exact state marginals of the vertices
    extremes_exact: tuple      # surviving extreme marginals, exact
    extremes: tuple            # same, as float arrays


def invariant_polytope_extremes(corr):
    """Extreme points of the invariant-measure polytope, exactly.

    Vertices of the pair polytope (balanced mass-one edge vectors) are
    found by basic-feasible-solution search over the equality system,
    in rational arithmetic since that system is integral.  Projections
    that are convex combinations of the others are then removed by
    exact feasibility tests.
    """
    n, m = corr.n_states, corr.n_edges
    if m > EDGE_CAP:
        raise TooLarge(f"vertex enumeration limited to {EDGE_CAP} edges")
    a = []
    for i in range(n):
        a.append([(1 if e[0] == i else 0) - (1 if e[1] == i else 0)
                  for e in corr.edges])
    a.append([1] * m)
    rank = _exact_rank(a)
    seen = {}
    for cols in itertools.combinations(range(m), rank):
        sub = [[row[c] for c in cols] for row in a]
        b = [0] * n + [1]
        kind, x = gauss_solve(sub, b, exact=True)
        if kind != "unique" or any(v < 0 for v in x):
            continue
        full = [Fraction(0)] * m
        for c, v in zip(cols, x):
            full[c] = v
        seen[tuple(full)] = True
    vertices = sorted(seen)
    projections = []
    for v in vertices:
        marg = [Fraction(0)] * n
        for (i, _), w in zip(corr.edges, v):
            marg[i] += w
        projections.append(tuple(marg))
    distinct = sorted(set(projections))
    keep = []
    for k, p in enumerate(distinct):
        others = [q for t, q in enumerate(distinct) if t != k]
        if not others:
            keep.append(p)
            continue
        rows = [[q[i] for q in others] for i in range(n)]
        rows.append([1] * len(others))
        status, _, _ = simplex(rows, list(p) + [1], [0] * len(others), exact=True)
        if status == INFEASIBLE:
            keep.append(p)
    return PolytopeExtremes(
        tuple(vertices),
        tuple(projections),
        tuple(keep),
        tuple(np.array([float(v) for v in p]) for p in keep),
    )


DECOMP_SUBSET_CAP = 200000


def extremal_decomposition(corr, mu, extremes=None):
    """Write an invariant measure as a convex combination of extremes.

    Among all feasible combinations the one with the fewest atoms is
    returned, ties resolved by lexicographic order of the index set.
    Exact arithmetic is used when mu is given in rationals.
    """
    exact = all(isinstance(v, (int, Fraction)) for v in mu)
    if extremes is None:
        extremes = invariant_polytope_extremes(corr)
    pool = extremes.extremes_exact if exact else [tuple(map(float, p))
                                                 for p in extremes.extremes_exact]
    n = corr.n_states
    target = list(mu) + [1 if exact else 1.0]
    rows_full = [[p[i] for p in pool] for i in range(n)]
    rows_full.append([1] * len(pool) if exact else [1.0] * len(pool))
    status, lam_any, _ = simplex(rows_full, target, [0] * len(pool), exact=exact)
    if status != OPTIMAL:
        raise NotInvariant()
    tol = 0 if exact else 1e-9
    tried = 0
    for s in range(1, len(pool) + 1):
        for combo in itertools.combinations(range(len(pool)), s):
            tried += 1
            if tried > DECOMP_SUBSET_CAP:
                raise TooLarge("atom-minimal search budget exhausted")
            sub = [[rows_full[r][c] for c in combo] for r in range(n + 1)]
            kind, lam = gauss_solve(sub, target, exact=exact)
            if kind == "none":
                continue
            if kind == "many":
                st, lam, _ = simplex(sub, target, [0] * s, exact=exact)
                if st != OPTIMAL:
                    continue
            if all(v >= -tol for v in lam):
                weights = [max(v, 0) for v in lam]
                return list(combo), weights, pool
    raise NotInvariant()


@dataclass(frozen=True, eq=False)
class HatLift:
    measure: np.ndarray
    kernel: TransitionKernel
    block_map: dict


def hat_lift(corr, block, mu_block, variant="forward"):
    """Extend a measure invariant on a block to the whole space.

    Forward variant: the correspondence restricted to the block is the
    graph of a map f, and mu_block must be f-invariant.  Inverse
    variant: the restriction is the inverse graph of a map g (each
    block state has exactly one block predecessor) and the whole
    correspondence must be surjective; mu_block must be g-invariant.
    The extension by zero is invariant, witnessed by the returned
    kernel.
    """
    block = sorted(set(block))
    bset = set(block)
    mu_block = np.asarray(mu_block, dtype=float)
    if mu_block.shape != (len(block),):
        raise ShapeMismatch("block measure length mismatch")
    if abs(float(np.sum(mu_block)) - 1.0) > 1e-9 or np.any(mu_block < -1e-12):
        raise ShapeMismatch("block measure is not a probability vector")
    local = {s: k for k, s in enumerate(block)}
    n = corr.n_states
    if variant == "forward":
        fmap = {}
        for y in block:
            inside = [j for j in corr.successors(y) if j in bset]
            if len(inside) != 1:
                raise NotAFunctionOnBlock(y, inside)
            fmap[y] = inside[0]
    elif variant == "inverse":
        missing = [j for j in range(n) if not corr.predecessors(j)]
        if missing:
            raise NotSurjective(missing)
        fmap = {}
        for y in block:
            inside = [i for i in corr.predecessors(y) if i in bset]
            if len(inside) != 1:
                raise NotAFunctionOnBlock(y, inside)
            fmap[y] = inside[0]
    else:
        raise ModeUnsupported(f"unknown variant {variant!r}")
    push = np.zeros(len(block))
    for y in block:
        push[local[fmap[y]]] += mu_block[local[y]]
    gap = float(np.max(np.abs(push - mu_block)))
    if gap > WITNESS_TOL:
        raise NotInvariantOnBlock(f"block map does not fix the measure (gap {gap:.3e})")
    mu_hat = np.zeros(n)
    for y in block:
        mu_hat[y] = mu_block[local[y]]
    q = np.zeros((n, n))
    if variant == "forward":
        for y in block:
            q[y, fmap[y]] = 1.0
        for x in range(n):
            if x not in bset:
                q[x, corr.successors(x)[0]] = 1.0
    else:
        for x in range(n):
            if x in bset and mu_hat[x] > 0.0:
                for y in block:
                    if fmap[y] == x:
                        q[x, y] = mu_hat[y] / mu_hat[x]
                # rounding headroom: renormalize the row exactly
                q[x] /= np.sum(q[x])
            else:
                q[x, corr.successors(x)[0]] = 1.0
    return HatLift(mu_hat, TransitionKernel(corr, q), fmap)
