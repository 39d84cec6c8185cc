"""Dense two-phase simplex and exact linear solves.

Instances in this package are tiny (tens of variables), so the solver
favors determinism over speed: Bland's rule everywhere, plain row
operations on Python lists.  With Fraction entries the arithmetic is
exact and the tolerance is zero.
"""

from __future__ import annotations

from fractions import Fraction

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _pivot(rows, cost, basis, r, j):
    piv = rows[r][j]
    rows[r] = [v / piv for v in rows[r]]
    for i, row in enumerate(rows):
        if i != r and row[j]:
            f = row[j]
            rows[i] = [a - f * b for a, b in zip(row, rows[r])]
    if cost[j]:
        f = cost[j]
        cost[:] = [a - f * b for a, b in zip(cost, rows[r])]
    basis[r] = j


def _bland_loop(rows, cost, basis, n_real, tol):
    while True:
        enter = -1
        for j in range(len(cost) - 1):
            if cost[j] < -tol:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best = None
        for i, row in enumerate(rows):
            if row[enter] > tol:
                ratio = row[-1] / row[enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(rows, cost, basis, leave, enter)


def simplex(A, b, c, exact=False, feas_tol=None):
    """Minimize c.x subject to A x = b, x >= 0.

    Returns (status, x, value).  With exact=True all input entries are
    converted to Fraction and comparisons are exact; otherwise floats
    with a small pivot tolerance are used.
    """
    m = len(A)
    n = len(A[0]) if m else len(c)
    if exact:
        conv = Fraction
        tol = Fraction(0)
    else:
        conv = float
        tol = 1e-11
    if feas_tol is None:
        feas_tol = tol if exact else 1e-9
    rows = []
    for i in range(m):
        row = [conv(v) for v in A[i]] + [conv(b[i])]
        if row[-1] < 0:
            row = [-v for v in row]
        rows.append(row)
    # phase one: artificial identity basis
    for i in range(m):
        ext = [conv(0)] * m
        ext[i] = conv(1)
        rows[i] = rows[i][:-1] + ext + [rows[i][-1]]
    cost = [conv(0)] * (n + m + 1)
    for i in range(m):
        for j in range(n + m + 1):
            cost[j] -= rows[i][j]
    for i in range(m):
        cost[n + i] += conv(1)
    basis = [n + i for i in range(m)]
    status = _bland_loop(rows, cost, basis, n, tol)
    infeas = -cost[-1]
    if status != OPTIMAL or infeas > feas_tol:
        return INFEASIBLE, None, None
    # remove artificials still basic (possible with redundant rows)
    drop = []
    for i in range(m):
        if basis[i] >= n:
            piv = -1
            for j in range(n):
                if abs(rows[i][j]) > tol:
                    piv = j
                    break
            if piv >= 0:
                _pivot(rows, cost, basis, i, piv)
            else:
                drop.append(i)
    for i in sorted(drop, reverse=True):
        del rows[i], basis[i]
    rows = [row[:n] + [row[-1]] for row in rows]
    # phase two
    cost = [conv(v) for v in c] + [conv(0)]
    for i, bi in enumerate(basis):
        if cost[bi]:
            f = cost[bi]
            cost = [a - f * bv for a, bv in zip(cost, rows[i])]
    status = _bland_loop(rows, cost, basis, n, tol)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None
    x = [conv(0)] * n
    for i, bi in enumerate(basis):
        x[bi] = rows[i][-1]
    return OPTIMAL, x, -cost[-1]


def gauss_solve(A, b, exact=True):
    """Solve A x = b by Gaussian elimination.

    Returns (kind, x) with kind one of "none", "unique", "many"; for
    "many" x is one particular solution with free variables at zero.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    if exact:
        conv = Fraction
        def nonzero(v):
            return v != 0
    else:
        conv = float
        def nonzero(v):
            return abs(v) > 1e-11
    rows = [[conv(v) for v in A[i]] + [conv(b[i])] for i in range(m)]
    pivots = []
    r = 0
    for col in range(n):
        sel = -1
        if exact:
            for i in range(r, m):
                if nonzero(rows[i][col]):
                    sel = i
                    break
        else:
            best = 0.0
            for i in range(r, m):
                if abs(rows[i][col]) > max(best, 1e-11):
                    best = abs(rows[i][col])
                    sel = i
        if sel < 0:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        piv = rows[r][col]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(m):
            if i != r and nonzero(rows[i][col]):
                f = rows[i][col]
                rows[i] = [a - f * bv for a, bv in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if nonzero(rows[i][-1]):
            return "none", None
    x = [conv(0)] * n
    for i, col in enumerate(pivots):
        x[col] = rows[i][-1]
    return ("unique" if r == n else "many"), x
