"""Transition kernels supported by a correspondence, and their chains.

A kernel row Q(x, .) is a probability vector carried by the successor
set of x.  Chains are built inductively: the length-0 chain from x is
the point mass at x, and each step extends a path by one kernel draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, TooLarge, NotStationary, IndexOutOfRange
from .pressure import strongly_connected_components

DENSE_PATH_LIMIT = 10 ** 7


def validate_measure(n_states, weights, tol=1e-9):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_states,):
        raise ShapeMismatch(f"measure has shape {w.shape}, expected ({n_states},)")
    if np.any(w < -1e-12):
        raise ShapeMismatch("negative weight in measure")
    if abs(float(np.sum(w)) - 1.0) > tol:
        raise ShapeMismatch(f"measure mass {float(np.sum(w))!r} is not 1")
    return np.where(w < 0.0, 0.0, w)


def uniform_measure(n_states):
    return np.full(n_states, 1.0 / n_states)


class TransitionKernel:
    """Row-stochastic matrix whose support lies inside the edge set."""

    def __init__(self, corr, matrix, tol=1e-12):
        m = np.asarray(matrix, dtype=float)
        n = corr.n_states
        if m.shape != (n, n):
            raise ShapeMismatch(f"kernel has shape {m.shape}, expected ({n}, {n})")
        if np.any(m < -tol):
            raise ShapeMismatch("negative kernel entry")
        m = np.where(m < 0.0, 0.0, m)
        bad = [(i, j) for i in range(n) for j in range(n)
               if m[i, j] > 0.0 and not corr.has_edge(i, j)]
        if bad:
            raise ShapeMismatch(f"kernel mass outside the edge set: {bad[:8]}")
        rows = np.sum(m, axis=1)
        if np.any(np.abs(rows - 1.0) > tol):
            worst = int(np.argmax(np.abs(rows - 1.0)))
            raise ShapeMismatch(
                f"row {worst} sums to {rows[worst]!r}")
        self.corr = corr
        self.matrix = m

    @classmethod
    def from_rows(cls, corr, rows, tol=1e-12):
        """Build from per-state lists of (successor, probability)."""
        m = np.zeros((corr.n_states, corr.n_states))
        for i, row in enumerate(rows):
            for j, p in row:
                m[int(i), int(j)] += float(p)
        return cls(corr, m, tol)

    def row(self, i):
        return self.matrix[i]

    def relabel(self, theta):
        relabeled = self.corr.relabel(theta)
        m = np.zeros_like(self.matrix)
        for i in range(self.corr.n_states):
            for j in range(self.corr.n_states):
                m[theta[i], theta[j]] = self.matrix[i, j]
        return TransitionKernel(relabeled, m)


def pushforward(mu, kernel):
    """Distribution after one step: (mu Q)(j) = sum_i mu(i) Q(i, j)."""
    return np.asarray(mu, dtype=float) @ kernel.matrix


def pullback(kernel, f):
    """Conditional expectation of an observable: (Q f)(i) = sum_j Q(i, j) f(j)."""
    return kernel.matrix @ np.asarray(f, dtype=float)


class Partition:
    """Partition of the state set into nonempty cells."""

    def __init__(self, n_states, cells):
        cells = tuple(tuple(sorted(int(s) for s in c)) for c in cells)
        seen = []
        for c in cells:
            if not c:
                raise ShapeMismatch("empty partition cell")
            seen.extend(c)
        if sorted(seen) != list(range(n_states)):
            raise ShapeMismatch("cells do not partition the state set")
        self.n_states = n_states
        self.cells = cells
        self.cell_of = {}
        for k, c in enumerate(cells):
            for s in c:
                self.cell_of[s] = k

    @classmethod
    def discrete(cls, n_states):
        return cls(n_states, [(i,) for i in range(n_states)])

    def indicator(self, k):
        v = np.zeros(self.n_states)
        v[list(self.cells[k])] = 1.0
        return v


@dataclass(frozen=True, eq=False)
class PathDistribution:
    """Law of (X_1, ..., X_{length}) for a start measure and a kernel."""

    start: np.ndarray
    kernel: TransitionKernel
    length: int

    @property
    def corr(self):
        return self.kernel.corr

    def dense(self):
        """Explicit path weights; guarded, since the support is exponential."""
        n = self.corr.n_states
        if n ** self.length > DENSE_PATH_LIMIT:
            raise TooLarge(f"{n}^{self.length} paths exceed the dense limit")
        out = {}
        frontier = [((x,), float(self.start[x]))
                    for x in range(n) if self.start[x] > 0.0]
        for _ in range(self.length - 1):
            nxt = []
            for path, w in frontier:
                x = path[-1]
                for y in self.corr.successors(x):
                    p = self.kernel.matrix[x, y]
                    if p > 0.0:
                        nxt.append((path + (y,), w * p))
            frontier = nxt
        for path, w in frontier:
            out[path] = out.get(path, 0.0) + w
        return out

    def marginal_first(self, k):
        """Marginal onto the first k coordinates (exact, by Markov consistency)."""
        if not 1 <= k <= self.length:
            raise ShapeMismatch(f"cannot take {k} of {self.length} coordinates")
        return PathDistribution(self.start, self.kernel, k)

    def shifted_block(self, t, k):
        """Law of the k-block starting after t steps."""
        if t < 0 or k < 1 or t + k > self.length:
            raise ShapeMismatch(f"block ({t}, {k}) outside length {self.length}")
        mu = np.asarray(self.start, dtype=float)
        for _ in range(t):
            mu = mu @ self.kernel.matrix
        return PathDistribution(mu, self.kernel, k)


def chain_distribution(start, kernel, n):
    """Chain law over length-(n+1) paths; n = 0 gives the start itself."""
    if n < 0:
        raise ShapeMismatch("negative path length")
    start = validate_measure(kernel.corr.n_states, start)
    return PathDistribution(start, kernel, n + 1)


def partition_entropy(dist, partition, n_coords=None):
    """Shannon entropy of the coarsened path law.

    Walks the tree of cell sequences carrying the vector of state
    probabilities compatible with the prefix, pruning zero branches.
    """
    if n_coords is not None and n_coords != dist.length:
        raise ShapeMismatch(
            f"distribution has {dist.length} coordinates, expected {n_coords}")
    k = len(partition.cells)
    if k ** dist.length > DENSE_PATH_LIMIT:
        raise TooLarge("too many cell sequences")
    masks = [partition.indicator(c) for c in range(k)]
    total = 0.0
    stack = [(1, np.asarray(dist.start, dtype=float) * m) for m in masks]
    while stack:
        depth, vec = stack.pop()
        mass = float(np.sum(vec))
        if mass <= 0.0:
            continue
        if depth == dist.length:
            total -= mass * math.log(mass)
            continue
        nxt = vec @ dist.kernel.matrix
        for m in masks:
            stack.append((depth + 1, nxt * m))
    return total


def measure_entropy(mu):
    mu = np.asarray(mu, dtype=float)
    pos = mu[mu > 0.0]
    return float(-np.sum(pos * np.log(pos)))


def entropy_rate(mu, kernel):
    """h = -sum_i mu(i) sum_j Q(i,j) log Q(i,j)."""
    m = kernel.matrix
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(m > 0.0, np.log(np.where(m > 0.0, m, 1.0)), 0.0)
    return float(-np.sum(np.asarray(mu, dtype=float)[:, None] * m * lg))


def stationary_gap(mu, kernel):
    return float(np.sum(np.abs(pushforward(mu, kernel) - np.asarray(mu, dtype=float))))


def stationary_measures(kernel, tol=1e-10):
    """Ergodic stationary measures, one per recurrent class of the support.

    Returns a list of (class_states, measure) with full-length measure
    vectors, ordered by the smallest state of the class.
    """
    n = kernel.corr.n_states
    support_succ = [tuple(j for j in range(n) if kernel.matrix[i, j] > 0.0)
                    for i in range(n)]
    comps = strongly_connected_components(n, support_succ)
    member = {}
    for k, c in enumerate(comps):
        for s in c:
            member[s] = k
    out = []
    for k, c in enumerate(comps):
        closed = all(member[j] == k for i in c for j in support_succ[i])
        if not closed:
            continue
        idx = list(c)
        block = kernel.matrix[np.ix_(idx, idx)]
        a = np.vstack([block.T - np.eye(len(idx)), np.ones(len(idx))])
        b = np.zeros(len(idx) + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        pi = np.where(pi < 0.0, 0.0, pi)
        pi = pi / float(np.sum(pi))
        mu = np.zeros(n)
        mu[idx] = pi
        if stationary_gap(mu, kernel) > tol:
            raise NotStationary(stationary_gap(mu, kernel))
        out.append((c, mu))
    out.sort(key=lambda pair: min(pair[0]))
    return out


def kernel_entropy(mu, kernel, n_max, partition=None):
    """Entropy sequence (1/n) H of the n-coordinate chain law, and its limit.

    For the discrete partition the closed form
    (H(mu) + (n-1) h) / n is used, where h is the entropy rate; the
    limit is h, and the discrete partition attains the supremum over
    partitions.  For a coarser partition the sequence is computed from
    the coarsened chain law and the last term is reported as the limit
    estimate.  The measure must be stationary for the kernel.
    """
    mu = validate_measure(kernel.corr.n_states, mu)
    gap = stationary_gap(mu, kernel)
    if gap > 1e-9:
        raise NotStationary(gap)
    if n_max < 1:
        raise ShapeMismatch("n_max must be at least 1")
    if partition is None or len(partition.cells) == kernel.corr.n_states:
        h = entropy_rate(mu, kernel)
        h0 = measure_entropy(mu)
        seq = np.array([(h0 + (n - 1) * h) / n for n in range(1, n_max + 1)])
        return seq, h
    seq = []
    for n in range(1, n_max + 1):
        dist = chain_distribution(mu, kernel, n - 1)
        seq.append(partition_entropy(dist, partition) / n)
    return np.array(seq), float(seq[-1])


def pair_from_kernel(mu, kernel):
    """Edge vector of the pair law mu(i) Q(i, j), aligned with corr.edges."""
    corr = kernel.corr
    mu = np.asarray(mu, dtype=float)
    return np.array([mu[i] * kernel.matrix[i, j] for i, j in corr.edges])


def kernel_from_pair(corr, pair_values, fallback="lowest"):
    """Row-normalize a pair measure into a kernel.

    Rows with no mass get the point mass at their lowest-index
    successor, so the result is always a valid kernel.
    """
    n = corr.n_states
    idx = corr.edge_index()
    m = np.zeros((n, n))
    for (i, j), k in idx.items():
        m[i, j] = max(float(pair_values[k]), 0.0)
    rows = np.sum(m, axis=1)
    for i in range(n):
        if rows[i] > 0.0:
            m[i] /= rows[i]
        else:
            if fallback != "lowest":
                raise IndexOutOfRange([], n)
            m[i, corr.successors(i)[0]] = 1.0
    return TransitionKernel(corr, m)
