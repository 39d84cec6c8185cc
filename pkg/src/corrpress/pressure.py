"""Topological pressure of a finite correspondence.

Two independent routes are implemented.  The orbit route accumulates
weighted path sums in log domain and reports the sequence
a_n = (1/n) log sum over length-(n+1) walks of exp(S_n phi); with the
discrete metric every set of walks is separated, so no net is needed.
The spectral route computes log of the spectral radius of the edge
weight matrix M_ij = exp(phi(i, j)), component by component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, InvalidDecomposition
from .relations import Decomposition, decomposition_validate

# Spectral classes whose log radius lies within this distance of the
# maximum count as dominant.  Shared with the variational layer.
TIE_TOL = 1e-9

POWER_CAP = 100000
BRACKET_TOL = 1e-13


def strongly_connected_components(n_states, successors):
    """Tarjan's algorithm, iterative; components in reverse topological order."""
    index = [-1] * n_states
    low = [0] * n_states
    on_stack = [False] * n_states
    stack = []
    components = []
    counter = 0
    for root in range(n_states):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(successors[v])):
                w = successors[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(tuple(sorted(comp)))
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return components


def component_period(comp, successors):
    """gcd of cycle lengths inside one strongly connected component."""
    comp_set = set(comp)
    root = comp[0]
    level = {root: 0}
    queue = [root]
    while queue:
        nxt = []
        for u in queue:
            for w in successors[u]:
                if w in comp_set and w not in level:
                    level[w] = level[u] + 1
                    nxt.append(w)
        queue = nxt
    g = 0
    for u in comp:
        for w in successors[u]:
            if w in comp_set:
                g = math.gcd(g, level[u] + 1 - level[w])
    return abs(g)


def _log_matvec(v, src, dst, weights, size):
    out = np.full(size, -np.inf)
    np.logaddexp.at(out, dst, v[src] + weights)
    return out


def _component_log_radius(comp, corr, values):
    """log spectral radius of the weight matrix restricted to one component.

    Power iteration from the all-ones vector, run in log domain with
    max-norm normalization.  For a component of period p the growth is
    averaged over p consecutive steps; the two-sided growth bracket
    (Collatz-Wielandt) certifies the estimate, so the stopping rule
    bounds the error by half the bracket width.
    """
    pos = {s: k for k, s in enumerate(comp)}
    src, dst, w = [], [], []
    loop_weight = None
    for eidx, (i, j) in enumerate(corr.edges):
        if i in pos and j in pos:
            src.append(pos[i])
            dst.append(pos[j])
            w.append(values[eidx])
            if i == j:
                loop_weight = values[eidx]
    if not src:
        return -np.inf
    k = len(comp)
    if k == 1:
        return float(loop_weight)
    src = np.array(src, dtype=np.int64)
    dst = np.array(dst, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    p = component_period(comp, corr._succ)
    v = np.zeros(k)
    steps = 0
    width = np.inf
    while steps < POWER_CAP:
        u = v
        for _ in range(p):
            u = _log_matvec(u, src, dst, w, k)
        steps += p
        diffs = u - v
        lo = float(np.min(diffs))
        hi = float(np.max(diffs))
        width = (hi - lo) / p
        if width < BRACKET_TOL:
            return (lo + hi) / (2.0 * p)
        v = u - np.max(u)
    raise ConvergenceFailure(steps, residual=width)


@dataclass(frozen=True)
class SpectralResult:
    pressure: float
    components: tuple
    log_radii: tuple
    dominant: tuple

    @property
    def dominant_classes(self):
        return tuple(self.components[k] for k in self.dominant)


def spectral_pressure(corr, phi, tie_tol=TIE_TOL):
    """Pressure as log spectral radius, with the list of dominant classes.

    Classes are strongly connected components of the edge graph; a
    single state with no self-loop has radius zero and never
    dominates.  Every state has a successor, so some cycle exists and
    the pressure is finite.
    """
    comps = strongly_connected_components(corr.n_states, corr._succ)
    radii = [_component_log_radius(c, corr, phi.values) for c in comps]
    top = max(radii)
    dominant = [k for k, r in enumerate(radii) if top - r <= tie_tol]
    dominant.sort(key=lambda k: min(comps[k]))
    return SpectralResult(float(top), tuple(comps), tuple(radii), tuple(dominant))


def path_pressure_sequence(corr, phi, n_max):
    """The sequence a_n for n = 1..n_max via the log-domain recursion.

    a_n converges to the pressure; for a primitive relation the gap
    |a_n - P| is of order 1/n.
    """
    src, dst = corr.edge_arrays()
    w = phi.values
    v = np.zeros(corr.n_states)
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        v = _log_matvec(v, src, dst, w, corr.n_states)
        m = float(np.max(v))
        out[n - 1] = (m + math.log(float(np.sum(np.exp(v - m))))) / n
    return out


@dataclass(frozen=True)
class DecompositionPressure:
    value: float
    block_values: tuple


def decomposition_pressure(corr, phi, decomp):
    """Max of the block pressures of a valid generating cover."""
    if not isinstance(decomp, Decomposition):
        decomp = Decomposition(decomp)
    report = decomposition_validate(corr, decomp)
    if not report["valid"]:
        raise InvalidDecomposition(report)
    vals = []
    for block in decomp.blocks:
        sub, order = corr.restrict(block)
        vals.append(spectral_pressure(sub, phi.restrict(sub, order)).pressure)
    return DecompositionPressure(float(max(vals)), tuple(vals))


class SpectralCache:
    """Dense eigensolver path over a fixed edge graph.

    The component structure depends only on the support, so it is
    computed once; per-potential quantities (radii, Perron data) then
    come from small dense eigenproblems.  Used by the variational
    layer, where the potential changes every iteration; agreement with
    the power iteration route is covered by tests.
    """

    def __init__(self, corr):
        self.corr = corr
        self.components = strongly_connected_components(corr.n_states, corr._succ)
        self._local = []
        for comp in self.components:
            pos = {s: k for k, s in enumerate(comp)}
            rows, cols, eidx = [], [], []
            for k, (i, j) in enumerate(corr.edges):
                if i in pos and j in pos:
                    rows.append(pos[i])
                    cols.append(pos[j])
                    eidx.append(k)
            self._local.append((np.array(rows, dtype=np.int64),
                                np.array(cols, dtype=np.int64),
                                np.array(eidx, dtype=np.int64)))

    def _matrix(self, c, values):
        comp = self.components[c]
        rows, cols, eidx = self._local[c]
        if eidx.size == 0:
            return None, 0.0
        shift = float(np.max(values[eidx]))
        m = np.zeros((len(comp), len(comp)))
        m[rows, cols] = np.exp(values[eidx] - shift)
        return m, shift

    def log_radii(self, values):
        out = []
        for c, comp in enumerate(self.components):
            m, shift = self._matrix(c, values)
            if m is None:
                out.append(-np.inf)
            elif len(comp) == 1:
                out.append(shift)
            else:
                # entries can underflow to an exact zero matrix
                rho = float(np.max(np.abs(np.linalg.eigvals(m))))
                out.append(shift + math.log(rho) if rho > 0.0 else -np.inf)
        return out

    def pressure(self, values):
        return max(self.log_radii(values))

    def dominant(self, values, tie_tol=TIE_TOL):
        radii = self.log_radii(values)
        top = max(radii)
        dom = [c for c, r in enumerate(radii) if top - r <= tie_tol]
        dom.sort(key=lambda c: min(self.components[c]))
        return top, dom, radii

    def perron(self, c, values):
        """(log radius, right vector, left vector) on component c.

        Vectors are strictly positive and normalized to sum one; the
        component must contain a cycle.
        """
        comp = self.components[c]
        m, shift = self._matrix(c, values)
        if m is None:
            raise ValueError("component has no cycle")
        if len(comp) == 1:
            return shift, np.ones(1), np.ones(1)
        w, vecs = np.linalg.eig(m)
        rho = float(np.max(np.abs(w)))
        right = _perron_from(w, vecs, rho)
        left = _perron_vector(m.T, rho)
        return shift + math.log(rho), right, left

    def radii_and_perron(self, values, tie_tol=TIE_TOL):
        """Radii of every class plus Perron data on the lowest dominant one.

        Single fused pass for descent loops, where value and gradient
        are wanted at the same potential: one eig call per side on the
        dominant class instead of separate radius and vector solves.
        Returns (pressure, dominant indices, (logrho, right, left)).
        """
        if len(self.components) == 1 and len(self.components[0]) > 1:
            m, shift = self._matrix(0, values)
            w, vecs = np.linalg.eig(m)
            rho = float(np.max(np.abs(w)))
            if rho <= 0.0:
                raise ConvergenceFailure(0)
            right = _perron_from(w, vecs, rho)
            left = _perron_vector(m.T, rho)
            top = shift + math.log(rho)
            return top, [0], (top, right, left)
        radii = []
        mats = []
        for c, comp in enumerate(self.components):
            m, shift = self._matrix(c, values)
            mats.append((m, shift))
            if m is None:
                radii.append(-np.inf)
            elif len(comp) == 1:
                radii.append(shift)
            else:
                rho = float(np.max(np.abs(np.linalg.eigvals(m))))
                radii.append(shift + math.log(rho) if rho > 0.0 else -np.inf)
        top = max(radii)
        dom = [c for c, r in enumerate(radii) if top - r <= tie_tol]
        dom.sort(key=lambda c: min(self.components[c]))
        c = dom[0]
        m, shift = mats[c]
        if m is None or not np.isfinite(radii[c]):
            raise ConvergenceFailure(0)
        if len(self.components[c]) == 1:
            return top, dom, (shift, np.ones(1), np.ones(1))
        w, vecs = np.linalg.eig(m)
        rho = float(np.max(np.abs(w)))
        right = _perron_from(w, vecs, rho)
        left = _perron_vector(m.T, rho)
        return top, dom, (shift + math.log(rho), right, left)


def _perron_from(w, vecs, rho):
    idx = int(np.argmin(np.abs(w - rho)))
    v = vecs[:, idx]
    # rotate the phase away, then insist on a positive real vector
    pivot = v[int(np.argmax(np.abs(v)))]
    v = np.real(v / pivot)
    v = np.where(v < 0.0, 0.0, v)
    s = float(np.sum(v))
    if s <= 0.0:
        raise ConvergenceFailure(0)
    return v / s


def _perron_vector(m, rho):
    w, vecs = np.linalg.eig(m)
    return _perron_from(w, vecs, rho)
