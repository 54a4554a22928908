"""Dense linear-programming and minimum-norm subproblem engine.

Everything here is desk-scale by design: a two-phase primal simplex with
Bland's anti-cycling rule (float or end-to-end rational arithmetic) over
free variables with inequality rows, plus Wolfe's minimum-norm-point
algorithm over finite vertex sets.  Instances have tens of rows, not
thousands; determinism beats speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import Infeasible, SolverStall

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LpProblem:
    """min objective . y  subject to  constraint_matrix @ y <= rhs, y free."""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        m = np.atleast_2d(np.asarray(self.constraint_matrix, dtype=float))
        q = np.asarray(self.rhs, dtype=float)
        if m.size == 0:
            m = m.reshape(0, c.shape[0])
        if m.shape[1] != c.shape[0] or m.shape[0] != q.shape[0]:
            raise ValueError("inconsistent LP dimensions")
        if not (np.isfinite(c).all() and np.isfinite(m).all() and np.isfinite(q).all()):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", m)
        object.__setattr__(self, "rhs", q)


@dataclass(frozen=True, eq=False)
class LpResult:
    """Solver outcome.  ``point``/``value`` are floats; the exact rational
    counterparts are populated when the exact flag was set."""

    status: str
    value: float
    point: np.ndarray
    basis: tuple
    exact_value: Optional[Fraction] = None
    exact_point: Optional[tuple] = None


def _pivot(tab, basis, row, col):
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    prow = tab[row]
    for i, r in enumerate(tab):
        if i == row:
            continue
        f = r[col]
        if f != 0:
            tab[i] = [a - f * b for a, b in zip(r, prow)]
    basis[row] = col


def _bland(tab, cost, basis, allowed, tol):
    """Primal simplex iterations with Bland's rule on tableau ``tab`` (rows of
    [A | b]) and reduced-cost row ``cost`` ([z | -obj]).  Mutates in place."""
    nrows = len(tab)
    while True:
        enter = -1
        for j in allowed:
            if cost[j] < -tol:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best = None
        for i in range(nrows):
            a = tab[i][enter]
            if a > tol:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(tab, basis, leave, enter)
        f = cost[enter]
        if f != 0:
            prow = tab[leave]
            for j in range(len(cost)):
                cost[j] -= f * prow[j]


def _solve_inequality_lp(c, M, q, tol, zero):
    """min c.y s.t. M y <= q with free y, scalars of one type (float/Fraction).

    Returns (status, value, y, basis).
    """
    m = len(c)
    p = len(q)
    if p == 0:
        if all(v == zero for v in c):
            return OPTIMAL, zero, [zero] * m, ()
        return UNBOUNDED, zero, [zero] * m, ()

    # columns: y+ (m) | y- (m) | slack (p) | artificials (appended as needed)
    ncols = 2 * m + p
    tab = []
    basis = []
    art_cols = []
    for i in range(p):
        row = list(M[i]) + [-v for v in M[i]] + [zero] * p
        rhs = q[i]
        row[2 * m + i] = zero + 1
        if rhs < zero:
            row = [-v for v in row]
            rhs = -rhs
        tab.append(row + [rhs])
        if row[2 * m + i] > zero:  # slack usable as initial basic
            basis.append(2 * m + i)
        else:
            basis.append(-1)
    need_art = [i for i in range(p) if basis[i] < 0]
    for k, i in enumerate(need_art):
        col = ncols + k
        art_cols.append(col)
        basis[i] = col
    ntot = ncols + len(art_cols)
    for i in range(p):
        row = tab[i]
        ext = [zero] * len(art_cols) + [row.pop()]
        tab[i] = row + ext
        if basis[i] >= ncols:
            tab[i][basis[i]] = zero + 1

    if art_cols:
        cost = [zero] * (ntot + 1)
        for col in art_cols:
            cost[col] = zero + 1
        for i in range(p):
            if basis[i] in art_cols:
                f = cost[basis[i]]
                cost = [a - f * b for a, b in zip(cost, tab[i])]
        status = _bland(tab, cost, basis, range(ntot), tol)
        assert status == OPTIMAL  # phase 1 is always bounded
        scale = max((abs(v) for v in (list(q) + [zero])), default=zero)
        if -cost[-1] > tol * (1 + scale):
            return INFEASIBLE, zero, [zero] * m, ()
        # Drive leftover artificials out of the basis; drop redundant rows.
        for i in range(p - 1, -1, -1):
            if basis[i] in art_cols:
                piv = -1
                for j in range(ncols):
                    if abs(tab[i][j]) > tol:
                        piv = j
                        break
                if piv >= 0:
                    _pivot(tab, basis, i, piv)
                else:
                    tab.pop(i)
                    basis.pop(i)

    cost = list(c) + [-v for v in c] + [zero] * (len(tab[0]) - 2 * m - 1) + [zero]
    for i in range(len(tab)):
        f = cost[basis[i]]
        if f != 0:
            cost = [a - f * b for a, b in zip(cost, tab[i])]
    status = _bland(tab, cost, basis, range(ncols), tol)
    if status == UNBOUNDED:
        return UNBOUNDED, zero, [zero] * m, tuple(basis)

    z = [zero] * len(tab[0])
    for i, b in enumerate(basis):
        z[b] = tab[i][-1]
    y = [z[j] - z[m + j] for j in range(m)]
    value = sum(ci * yi for ci, yi in zip(c, y))
    return OPTIMAL, value, y, tuple(basis)


def lp_solve(prob: LpProblem, exact: bool = False, feas_tol: float = _FEAS_TOL) -> LpResult:
    """Solve ``prob`` by two-phase simplex with Bland's rule.

    With ``exact`` the whole pivot sequence runs in rational arithmetic and the
    exact optimum is reported alongside its float rendering.
    """
    if exact:
        c = [Fraction(v) for v in prob.objective.tolist()]
        M = [[Fraction(v) for v in row] for row in prob.constraint_matrix.tolist()]
        q = [Fraction(v) for v in prob.rhs.tolist()]
        status, value, y, basis = _solve_inequality_lp(c, M, q, Fraction(0), Fraction(0))
        return LpResult(
            status=status,
            value=float(value),
            point=np.array([float(v) for v in y]),
            basis=basis,
            exact_value=value if status == OPTIMAL else None,
            exact_point=tuple(y) if status == OPTIMAL else None,
        )
    c = prob.objective.tolist()
    M = prob.constraint_matrix.tolist()
    q = prob.rhs.tolist()
    status, value, y, basis = _solve_inequality_lp(c, M, q, feas_tol, 0.0)
    return LpResult(status=status, value=float(value), point=np.array(y, dtype=float), basis=basis)


def solve_exact(c, M, q):
    """Rational-arithmetic LP on already-Fraction data; internal helper for the
    exact vertex-enumeration path.  Returns (status, value, point)."""
    status, value, y, _ = _solve_inequality_lp(list(c), [list(r) for r in M], list(q), Fraction(0), Fraction(0))
    return status, value, y


def min_norm_point(vertices: Sequence, feas_tol: float = _FEAS_TOL, max_iter: Optional[int] = None) -> np.ndarray:
    """Minimum-norm point of conv(vertices) by Wolfe's algorithm.

    Finite termination is certified by the optimality condition
    <x, v - x> >= -tol for every vertex v; hitting the iteration cap without
    the certificate raises ``SolverStall``.
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    n = V.shape[0]
    if n == 0:
        raise ValueError("empty vertex set")
    if max_iter is None:
        max_iter = 50 * max(n, 2)
    norms = np.einsum("ij,ij->i", V, V)
    idx = [int(np.argmin(norms))]
    lam = np.array([1.0])
    x = V[idx[0]].copy()
    scale = 1.0 + float(np.max(np.abs(V))) ** 2
    for _ in range(max_iter):
        scores = V @ x
        j = int(np.argmin(scores))
        if scores[j] >= x @ x - feas_tol * scale:
            return x
        if j in idx:
            return x  # numerically optimal within the current corral
        idx.append(j)
        lam = np.append(lam, 0.0)
        while True:
            S = V[idx]
            k = len(idx)
            G = np.empty((k + 1, k + 1))
            G[:k, :k] = 2.0 * (S @ S.T)
            G[:k, k] = 1.0
            G[k, :k] = 1.0
            G[k, k] = 0.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol = np.linalg.lstsq(G, rhs, rcond=None)[0]
            alpha = sol[:k]
            if np.all(alpha >= -1e-12):
                lam = np.clip(alpha, 0.0, None)
                lam /= lam.sum()
                x = lam @ S
                break
            mask = alpha < lam - 1e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(mask & (lam - alpha > 0), lam / (lam - alpha), np.inf)
            theta = float(np.min(steps))
            lam = (1.0 - theta) * lam + theta * alpha
            keep = lam > 1e-12
            if keep.all():
                lam[np.argmin(lam)] = 0.0
                keep = lam > 0
            idx = [i for i, k_ in zip(idx, keep) if k_]
            lam = lam[keep]
            lam /= lam.sum()
            x = lam @ V[idx]
    scores = V @ x
    if float(np.min(scores)) >= x @ x - 1e-6 * scale:
        return x
    raise SolverStall("minimum-norm point did not converge within the iteration cap")


def remove_redundant(M: np.ndarray, q: np.ndarray, feas_tol: float = _FEAS_TOL):
    """Drop rows whose omission does not enlarge the feasible set.

    One LP per row: maximize the row functional subject to the other rows
    (capped one unit above its own offset); the row is kept iff the optimum
    exceeds its offset.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.asarray(q, dtype=float)
    feas = lp_solve(LpProblem(np.zeros(M.shape[1]), M, q), feas_tol=feas_tol)
    if feas.status == INFEASIBLE:
        raise Infeasible("cannot prune an inconsistent system")
    keep = list(range(M.shape[0]))
    i = 0
    while i < len(keep):
        row = keep[i]
        others = [r for r in keep if r != row]
        cap_m = np.vstack([M[others], M[row][None, :]])
        cap_q = np.append(q[others], q[row] + 1.0)
        res = lp_solve(LpProblem(-M[row], cap_m, cap_q), feas_tol=feas_tol)
        if res.status == OPTIMAL and -res.value <= q[row] + feas_tol:
            keep.pop(i)
        else:
            i += 1
    return M[keep], q[keep]
