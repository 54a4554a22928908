"""Convex polytope kernel.

Dual-representation polytopes carrying an orthonormal affine frame and an
intrinsic dimension, with exact-where-possible measures (triangulated
intrinsic volume, closed-form planar Steiner points) and the convex-body
maps the rest of the package builds on: Hausdorff distance, Minkowski
interpolation, symmetric-difference volume, minimum enclosing balls,
radial/inner-radius functionals and orthogonal projections.

Conventions
-----------
* The 0-dimensional measure of a point is 1, so the uniform law on a
  singleton is the Dirac mass (the unique consistent extension of the
  normalized-volume definition).
* Vertex sets are stored lexicographically sorted; ties in extreme-point
  pruning are therefore broken deterministically.
* H-representations carry unit row normals and include affine-hull pinning
  rows for lower-dimensional polytopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError

from . import convexsolve
from .errors import (
    AffineHullMismatch,
    EmptyInput,
    Infeasible,
    NumericalRankAmbiguity,
    OriginNotContained,
    OriginNotRelativeInterior,
    QuadratureBudgetExceeded,
    Unbounded,
)


@dataclass(frozen=True)
class Tolerances:
    """Numerical policy threaded through every operation.

    rank_tol is relative to the largest singular value; rng_seed feeds every
    randomized estimator so runs are reproducible bit for bit.
    """

    feas_tol: float = 1e-9
    rank_tol: float = 1e-9
    sphere_nodes: int = 20000
    rng_seed: int = 20250810

    def __post_init__(self):
        if self.feas_tol <= 0 or self.rank_tol <= 0 or self.sphere_nodes <= 0:
            raise ValueError("tolerances must be strictly positive")


DEFAULT_TOL = Tolerances()


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AffineFrame:
    """Affine subspace {origin + basis @ t} with orthonormal basis columns."""

    origin: np.ndarray  # (m,)
    basis: np.ndarray  # (m, k), orthonormal columns

    def __post_init__(self):
        object.__setattr__(self, "origin", _readonly(self.origin))
        object.__setattr__(self, "basis", _readonly(np.asarray(self.basis, dtype=float).reshape(self.origin.shape[0], -1)))

    @property
    def ambient_dim(self) -> int:
        return self.origin.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def to_frame(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.origin) @ self.basis

    def to_ambient(self, coords: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(np.asarray(coords, dtype=float))
        if self.dim == 0:
            return np.repeat(self.origin[None, :], t.shape[0], axis=0)
        return self.origin + t @ self.basis.T

    @cached_property
    def complement(self) -> np.ndarray:
        """Orthonormal basis (m, m-k) of the orthogonal complement of span(basis)."""
        m, k = self.basis.shape
        if k == m:
            return np.zeros((m, 0))
        full = np.linalg.svd(self.basis, full_matrices=True)[0]
        comp = full[:, k:]
        return _canonical_signs(comp)

    def orthonormality_defect(self) -> float:
        k = self.dim
        return float(np.max(np.abs(self.basis.T @ self.basis - np.eye(k)))) if k else 0.0


@dataclass(frozen=True, eq=False)
class Polytope:
    """Nonempty compact convex polytope with cached dual representations.

    ``vrep`` holds exactly the extreme points (lexicographically sorted);
    ``hrep_normals/hrep_offsets`` give unit-normal rows M y <= q including
    pinning rows when the polytope is lower-dimensional; ``frame`` spans the
    affine hull; ``intrinsic_dim`` is its dimension.
    """

    hrep_normals: np.ndarray  # (p, m)
    hrep_offsets: np.ndarray  # (p,)
    vrep: np.ndarray  # (n, m)
    frame: AffineFrame
    intrinsic_dim: int
    volume_cache: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "hrep_normals", _readonly(np.atleast_2d(self.hrep_normals)))
        object.__setattr__(self, "hrep_offsets", _readonly(np.atleast_1d(self.hrep_offsets)))
        object.__setattr__(self, "vrep", _readonly(np.atleast_2d(self.vrep)))

    @property
    def hrep(self):
        return self.hrep_normals, self.hrep_offsets

    @property
    def vertices(self) -> np.ndarray:
        return self.vrep

    @property
    def ambient_dim(self) -> int:
        return self.vrep.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vrep.shape[0]

    @cached_property
    def vertices_frame(self) -> np.ndarray:
        return self.frame.to_frame(self.vrep)

    @cached_property
    def hull_order(self) -> np.ndarray:
        """Counterclockwise vertex order in frame coordinates (k == 2 only)."""
        if self.intrinsic_dim != 2:
            raise ValueError("hull order is defined for 2-dimensional polytopes")
        t = self.vertices_frame
        c = t.mean(axis=0)
        ang = np.arctan2(t[:, 1] - c[1], t[:, 0] - c[0])
        return np.argsort(ang, kind="stable")

    @cached_property
    def intrinsic_facets(self):
        """(N, c): unit facet normals/offsets in frame coordinates, N t <= c."""
        return _intrinsic_facets(self.vertices_frame, self.intrinsic_dim)

    def contains(self, y, tol: float = DEFAULT_TOL.feas_tol) -> bool:
        y = np.asarray(y, dtype=float)
        if self.hrep_normals.shape[0] == 0:
            return bool(np.linalg.norm(y - self.vrep[0]) <= tol)
        return bool(np.max(self.hrep_normals @ y - self.hrep_offsets) <= tol)

    def bounding_box(self):
        return self.vrep.min(axis=0), self.vrep.max(axis=0)

    def validate(self, tol: Tolerances = DEFAULT_TOL) -> None:
        """Assert the type invariants; used by the test-suite."""
        M, q = self.hrep
        if M.shape[0]:
            worst = float(np.max(M @ self.vrep.T - q[:, None]))
            if worst > 10 * tol.feas_tol:
                raise AssertionError(f"vertex violates H-rep by {worst}")
        if self.frame.orthonormality_defect() > 1e-12:
            raise AssertionError("frame basis is not orthonormal to 1e-12")
        d = self.vrep - self.vrep.mean(axis=0)
        if self.n_vertices > 1:
            resid = d - (d @ self.frame.basis) @ self.frame.basis.T
            if float(np.max(np.abs(resid))) > 1e-7:
                raise AssertionError("frame does not span the vertex differences")
        svals = np.linalg.svd(d, compute_uv=False) if self.n_vertices > 1 else np.zeros(1)
        if _numerical_rank(svals, tol.rank_tol, strict=False) != self.intrinsic_dim:
            raise AssertionError("intrinsic_dim disagrees with numerical rank")


# ---------------------------------------------------------------------------
# construction helpers


def _canonical_signs(basis: np.ndarray) -> np.ndarray:
    basis = basis.copy()
    for j in range(basis.shape[1]):
        col = basis[:, j]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            basis[:, j] = -col
    return basis


def _numerical_rank(svals: np.ndarray, rank_tol: float, strict: bool = True) -> int:
    svals = np.asarray(svals, dtype=float)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    thresh = rank_tol * svals[0]
    if strict:
        lo, hi = thresh / 10.0, thresh * 10.0
        for s in svals:
            if lo < s < hi:
                raise NumericalRankAmbiguity(
                    f"singular value {s:.3e} lies inside the rank band ({lo:.1e}, {hi:.1e})"
                )
    return int(np.sum(svals > thresh))


def _dedup_points(pts: np.ndarray, tol: float) -> np.ndarray:
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    keep = []
    for p in pts:
        if not keep or min(np.linalg.norm(p - k) for k in keep[-8:]) > tol:
            if keep and any(np.linalg.norm(p - k) <= tol for k in keep):
                continue
            keep.append(p)
    return np.array(keep)


def _monotone_chain(t: np.ndarray, eps: float):
    """Indices of hull vertices of 2-D points ``t`` in ccw order; collinear
    interior points are dropped."""
    order = np.lexsort((t[:, 1], t[:, 0]))
    pts = t[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for i in range(len(pts)):
        while len(lower) >= 2 and cross(pts[lower[-2]], pts[lower[-1]], pts[i]) <= eps:
            lower.pop()
        lower.append(i)
    for i in range(len(pts) - 1, -1, -1):
        while len(upper) >= 2 and cross(pts[upper[-2]], pts[upper[-1]], pts[i]) <= eps:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    return order[hull]


def _facets_from_hull_2d(t: np.ndarray):
    """Unit edge normals/offsets for ccw-ordered 2-D hull points."""
    n = len(t)
    normals, offsets = [], []
    for i in range(n):
        a, b = t[i], t[(i + 1) % n]
        e = b - a
        nrm = np.array([e[1], -e[0]])
        ln = np.linalg.norm(nrm)
        if ln == 0:
            continue
        nrm /= ln
        normals.append(nrm)
        offsets.append(float(nrm @ a))
    return np.array(normals), np.array(offsets)


def _intrinsic_facets(t: np.ndarray, k: int):
    if k == 0:
        return np.zeros((0, 0)), np.zeros(0)
    if k == 1:
        x = t[:, 0]
        return np.array([[1.0], [-1.0]]), np.array([float(x.max()), float(-x.min())])
    if k == 2:
        order = _ccw_order(t)
        return _facets_from_hull_2d(t[order])
    hull = ConvexHull(t)
    eqs = hull.equations  # A x + b <= 0
    normals = eqs[:, :-1]
    offsets = -eqs[:, -1]
    rounded = np.round(np.column_stack([normals, offsets]), 9)
    _, uniq = np.unique(rounded, axis=0, return_index=True)
    return normals[np.sort(uniq)], offsets[np.sort(uniq)]


def _ccw_order(t: np.ndarray) -> np.ndarray:
    c = t.mean(axis=0)
    ang = np.arctan2(t[:, 1] - c[1], t[:, 0] - c[0])
    return np.argsort(ang, kind="stable")


def _build_polytope(points: np.ndarray, tol: Tolerances, strict_rank: bool = True) -> Polytope:
    """Canonicalize an ambient point cloud into a Polytope: dedup, detect the
    affine hull, prune to extreme points, and rebuild both representations."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptyInput("no points supplied")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    m = pts.shape[1]
    scale = 1.0 + float(np.max(np.abs(pts)))
    pts = _dedup_points(pts, max(tol.feas_tol, 1e-12) * scale)

    centroid = pts.mean(axis=0)
    diffs = pts - centroid
    if pts.shape[0] == 1:
        k = 0
        basis = np.zeros((m, 0))
    else:
        _, svals, vt = np.linalg.svd(diffs, full_matrices=True)
        k = _numerical_rank(svals, tol.rank_tol, strict=strict_rank)
        basis = _canonical_signs(vt[:k].T)

    t = diffs @ basis  # (n, k)
    if k == 0:
        sel = np.array([0])
    elif k == 1:
        sel = np.array([int(np.argmin(t[:, 0])), int(np.argmax(t[:, 0]))])
    elif k == 2:
        sel = _monotone_chain(t, 1e-12 * scale * scale)
    else:
        try:
            hull = ConvexHull(t)
        except QhullError:
            hull = ConvexHull(t, qhull_options="QJ")
        sel = hull.vertices
    verts = pts[np.sort(sel)]
    order = np.lexsort(verts.T[::-1])
    verts = verts[order]

    origin = verts.mean(axis=0)
    frame = AffineFrame(origin=origin, basis=basis)
    tv = frame.to_frame(verts)
    N, c = _intrinsic_facets(tv, k)

    comp = frame.complement
    rows = []
    offs = []
    for i in range(N.shape[0]):
        nrm = basis @ N[i]
        rows.append(nrm)
        offs.append(c[i] + float(nrm @ origin))
    for j in range(comp.shape[1]):
        d = comp[:, j]
        rows.append(d)
        offs.append(float(d @ origin))
        rows.append(-d)
        offs.append(float(-d @ origin))
    if rows:
        Mh = np.array(rows)
        qh = np.array(offs)
    else:  # single point in 0-dimensional ambient space is impossible; k==0, m>=1 handled above
        Mh = np.zeros((0, m))
        qh = np.zeros(0)
    return Polytope(
        hrep_normals=Mh,
        hrep_offsets=qh,
        vrep=verts,
        frame=frame,
        intrinsic_dim=k,
    )


# ---------------------------------------------------------------------------
# incremental halfspace clipping (double-description style)


def _clip_float(verts: np.ndarray, base_rows, new_rows, tol: float):
    """Clip the polytope given by vertex array ``verts`` (full-dimensional in
    its d coordinates, described by ``base_rows``) with ``new_rows``, keeping
    vertex and active-row bookkeeping in step.

    Adjacency of an (inside, outside) pair is decided by the rank of their
    common active rows (== d-1 exactly on edges); the active tolerance is kept
    loose on purpose — spurious candidates are pruned by the final hull
    reconstruction, missed edges would lose vertices.
    """
    d = verts.shape[1]
    V = np.asarray(verts, dtype=float)
    rows = [(np.asarray(n, dtype=float), float(c)) for n, c in base_rows]
    act_tol = max(100.0 * tol, 1e-7)

    for nrm, off in new_rows:
        nrm = np.asarray(nrm, dtype=float)
        ln = float(np.linalg.norm(nrm))
        if ln <= 1e-14:
            if off < -tol:
                return None
            continue
        nrm = nrm / ln
        off = off / ln
        s = off - V @ nrm
        if np.all(s >= -tol):
            rows.append((nrm, off))
            continue
        inside = s > tol
        on = np.abs(s) <= tol
        outside = s < -tol
        if not (inside.any() or on.any()):
            return None
        new_pts = []
        if inside.any() and outside.any():
            N = np.array([r[0] for r in rows])
            C = np.array([r[1] for r in rows])
            act = np.abs(V @ N.T - C) <= act_tol
            for i in np.nonzero(inside)[0]:
                for j in np.nonzero(outside)[0]:
                    common = act[i] & act[j]
                    nc = int(common.sum())
                    if d == 1:
                        adjacent = True
                    elif nc < d - 1:
                        adjacent = False
                    else:
                        sub = N[common]
                        sv = np.linalg.svd(sub, compute_uv=False)
                        adjacent = int(np.sum(sv > 1e-7 * max(1.0, sv[0]))) >= d - 1
                    if adjacent:
                        tcut = s[i] / (s[i] - s[j])
                        new_pts.append(V[i] + tcut * (V[j] - V[i]))
        keep = V[inside | on]
        if new_pts:
            keep = np.vstack([keep, np.array(new_pts)])
        if keep.shape[0] == 0:
            return None
        V = _dedup_points(keep, max(tol, 1e-12) * (1.0 + float(np.max(np.abs(keep)))))
        rows.append((nrm, off))
    return V


def _exact_rank(rows) -> int:
    """Rank of a list of Fraction tuples by Gaussian elimination."""
    mat = [list(r) for r in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(mat)):
            if mat[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        prow = mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / prow[col]
                mat[r] = [a - f * b for a, b in zip(mat[r], prow)]
        rank += 1
    return rank


def _clip_exact(verts, base_rows, new_rows):
    """Rational-arithmetic twin of ``_clip_float`` (zero tolerances)."""
    if not verts:
        return None
    d = len(verts[0])
    V = [tuple(v) for v in verts]
    rows = [(tuple(n), c) for n, c in base_rows]

    for nrm, off in new_rows:
        nrm = tuple(nrm)
        if all(v == 0 for v in nrm):
            if off < 0:
                return None
            continue
        s = [off - sum(a * b for a, b in zip(nrm, v)) for v in V]
        if all(v >= 0 for v in s):
            rows.append((nrm, off))
            continue
        inside = [i for i, v in enumerate(s) if v > 0]
        on = [i for i, v in enumerate(s) if v == 0]
        outside = [i for i, v in enumerate(s) if v < 0]
        if not inside and not on:
            return None
        new_pts = []
        if inside and outside:
            act = []
            for v in V:
                act.append([sum(a * b for a, b in zip(r[0], v)) == r[1] for r in rows])
            for i in inside:
                for j in outside:
                    common = [rows[r][0] for r in range(len(rows)) if act[i][r] and act[j][r]]
                    if d == 1:
                        adjacent = True
                    elif len(common) < d - 1:
                        adjacent = False
                    else:
                        adjacent = _exact_rank(common) >= d - 1
                    if adjacent:
                        tcut = s[i] / (s[i] - s[j])
                        new_pts.append(tuple(a + tcut * (b - a) for a, b in zip(V[i], V[j])))
        keep = [V[i] for i in inside + on] + new_pts
        if not keep:
            return None
        V = list(dict.fromkeys(keep))
        rows.append((nrm, off))
    return V


def _box_rows(lo, hi):
    d = len(lo)
    rows = []
    for i in range(d):
        e = [0.0] * d
        e[i] = 1.0
        rows.append((np.array(e), float(hi[i])))
        e2 = [0.0] * d
        e2[i] = -1.0
        rows.append((np.array(e2), float(-lo[i])))
    return rows


def _box_corners(lo, hi):
    d = len(lo)
    corners = np.array(np.meshgrid(*[[lo[i], hi[i]] for i in range(d)], indexing="ij"))
    return corners.reshape(d, -1).T


def clip_with_box(box_lo, box_hi, rows, tol: Tolerances, strict_rank: bool = True) -> Optional[Polytope]:
    """Vertex-enumerate {y : rows} inside a known bounding box; None if empty."""
    lo = np.asarray(box_lo, dtype=float) - 1.0
    hi = np.asarray(box_hi, dtype=float) + 1.0
    V = _clip_float(_box_corners(lo, hi), _box_rows(lo, hi), rows, tol.feas_tol)
    if V is None or V.shape[0] == 0:
        return None
    return _build_polytope(V, tol, strict_rank=strict_rank)


def clip_with_box_exact(box_lo, box_hi, rows, tol: Tolerances) -> Optional[Polytope]:
    """Exact-arithmetic variant: rows are (sequence-of-Fraction, Fraction)."""
    lo = [Fraction(math.floor(v)) - 1 for v in np.asarray(box_lo, dtype=float)]
    hi = [Fraction(math.ceil(v)) + 1 for v in np.asarray(box_hi, dtype=float)]
    d = len(lo)
    base = []
    for i in range(d):
        e = [Fraction(0)] * d
        e[i] = Fraction(1)
        base.append((tuple(e), hi[i]))
        e2 = [Fraction(0)] * d
        e2[i] = Fraction(-1)
        base.append((tuple(e2), -lo[i]))
    corners = []
    for mask in range(1 << d):
        corners.append(tuple(hi[i] if (mask >> i) & 1 else lo[i] for i in range(d)))
    V = _clip_exact(corners, base, rows)
    if not V:
        return None
    pts = np.array([[float(x) for x in v] for v in V])
    return _build_polytope(pts, tol)


# ---------------------------------------------------------------------------
# public constructors


def from_vrep(points: Sequence, tol: Tolerances = DEFAULT_TOL) -> Polytope:
    """Polytope from a point cloud: conv(points) with interior points pruned."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptyInput("from_vrep needs at least one point")
    return _build_polytope(pts, tol)


def from_hrep(M: Sequence, q: Sequence, tol: Tolerances = DEFAULT_TOL, exact: bool = False) -> Polytope:
    """Polytope from inequality rows M y <= q.

    Feasibility and boundedness are certified by LPs (2m + 1 of them); the
    vertex set is then enumerated by incremental halfspace clipping of the
    certified bounding box.  ``exact`` runs the LPs and the clipping in
    rational arithmetic before rounding the vertices to floats.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    q = np.asarray(q, dtype=float)
    m = M.shape[1]
    lo = np.empty(m)
    hi = np.empty(m)
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        res_min = convexsolve.lp_solve(convexsolve.LpProblem(e, M, q), exact=exact, feas_tol=tol.feas_tol)
        if res_min.status == convexsolve.INFEASIBLE:
            raise Infeasible("inequality system has no solution")
        if res_min.status == convexsolve.UNBOUNDED:
            raise Unbounded(f"recession direction along -e_{i}")
        res_max = convexsolve.lp_solve(convexsolve.LpProblem(-e, M, q), exact=exact, feas_tol=tol.feas_tol)
        if res_max.status == convexsolve.UNBOUNDED:
            raise Unbounded(f"recession direction along +e_{i}")
        lo[i] = res_min.value
        hi[i] = -res_max.value
    if exact:
        rows = [
            (tuple(Fraction(v) for v in M[i]), Fraction(q[i]))
            for i in range(M.shape[0])
        ]
        poly = clip_with_box_exact(lo, hi, rows, tol)
    else:
        rows = [(M[i], float(q[i])) for i in range(M.shape[0])]
        poly = clip_with_box(lo, hi, rows, tol)
    if poly is None:
        raise Infeasible("inequality system has no solution")
    return poly


# ---------------------------------------------------------------------------
# measures and functionals


def volume(P: Polytope) -> float:
    """Intrinsic k-dimensional measure; a point has measure 1 by convention."""
    if P.volume_cache is not None:
        return P.volume_cache
    k = P.intrinsic_dim
    if k == 0:
        val = 1.0
    else:
        t = P.vertices_frame
        val = 0.0
        for simplex in _triangulate_frame(t, k):
            d = t[simplex[1:]] - t[simplex[0]]
            val += abs(float(np.linalg.det(d))) / math.factorial(k)
    object.__setattr__(P, "volume_cache", val)
    return val


def _triangulate_frame(t: np.ndarray, k: int):
    if k == 1:
        return [np.array([int(np.argmin(t[:, 0])), int(np.argmax(t[:, 0]))])]
    if k == 2:
        order = _ccw_order(t)
        return [np.array([order[0], order[i], order[i + 1]]) for i in range(1, len(order) - 1)]
    try:
        tri = Delaunay(t)
    except QhullError:
        tri = Delaunay(t, qhull_options="QJ")
    sims = [s for s in tri.simplices]
    return sims


def triangulate(P: Polytope):
    """Simplices (lists of ambient vertex arrays) whose intrinsic volumes sum
    to volume(P); a point yields a single 0-simplex."""
    if P.intrinsic_dim == 0:
        return [P.vrep[:1]]
    return [P.vrep[s] for s in _triangulate_frame(P.vertices_frame, P.intrinsic_dim)]


def support(P: Polytope, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.max(P.vrep @ u))


def diameter(P: Polytope) -> float:
    V = P.vrep
    if V.shape[0] == 1:
        return 0.0
    d2 = np.sum((V[:, None, :] - V[None, :, :]) ** 2, axis=-1)
    return float(math.sqrt(np.max(d2)))


def radial(P: Polytope, u, tol: Tolerances = DEFAULT_TOL) -> float:
    """sup{t >= 0 : t*u in P} by ray clipping; requires 0 in P."""
    u = np.asarray(u, dtype=float)
    if not P.contains(np.zeros(P.ambient_dim), tol.feas_tol):
        raise OriginNotContained("radial function needs 0 in the polytope")
    B = P.frame.basis
    drift = u - B @ (B.T @ u) if B.shape[1] else u
    orig_off = P.frame.origin - B @ (B.T @ P.frame.origin) if B.shape[1] else P.frame.origin
    # ray leaves the affine hull immediately unless u is parallel to it
    if float(np.linalg.norm(drift)) > 1e-9 * max(1.0, float(np.linalg.norm(u))):
        return 0.0
    M, q = P.hrep
    t_max = math.inf
    for i in range(M.shape[0]):
        a = float(M[i] @ u)
        if a > tol.feas_tol:
            t_max = min(t_max, float(q[i]) / a)
    if t_max is math.inf:  # bounded polytope: can only happen for a point at 0
        return 0.0
    return max(t_max, 0.0)


def inner_radius(P: Polytope, tol: Tolerances = DEFAULT_TOL) -> float:
    """Distance from the origin to the nearest intrinsic facet; requires
    0 in the relative interior."""
    t0 = P.frame.to_frame(np.zeros(P.ambient_dim))[0]
    resid = np.linalg.norm(P.frame.to_ambient(t0)[0])
    if resid > tol.feas_tol * 10:
        raise OriginNotRelativeInterior("origin is outside the affine hull")
    if P.intrinsic_dim == 0:
        raise OriginNotRelativeInterior("a point has empty relative interior")
    N, c = P.intrinsic_facets
    slack = c - N @ t0
    if np.any(slack <= tol.feas_tol):
        raise OriginNotRelativeInterior("origin is not strictly inside the intrinsic facets")
    return float(np.min(slack))


def steiner_point(P: Polytope, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Mean-width centroid of the polytope.

    Computed inside the affine hull (the functional is compatible with
    embeddings): points and segments are exact, planar bodies use closed-form
    arc-wise integration of the support function over the circle, and higher
    intrinsic dimensions fall back to deterministic sphere quadrature with
    ``tol.sphere_nodes`` nodes (O(nodes^-1/2) error).
    """
    k = P.intrinsic_dim
    if k == 0:
        return P.vrep[0].copy()
    t = P.vertices_frame
    if k == 1:
        s_frame = np.array([0.5 * (t[:, 0].min() + t[:, 0].max())])
    elif k == 2:
        s_frame = _steiner_2d(t[P.hull_order])
    else:
        s_frame = _steiner_quadrature(t, k, tol)
    point = P.frame.to_ambient(s_frame)[0]
    N, c = P.intrinsic_facets
    if N.shape[0] and np.any(N @ s_frame - c > 100 * tol.feas_tol):
        raise QuadratureBudgetExceeded(
            "computed point failed the relative-interior containment check"
        )
    return point


def _steiner_2d(hull_pts: np.ndarray) -> np.ndarray:
    """Exact planar mean-width centroid: between consecutive edge normals the
    support function is <u, vertex>, so each arc integrates in closed form."""
    n = hull_pts.shape[0]
    thetas = []
    for i in range(n):
        a, b = hull_pts[i], hull_pts[(i + 1) % n]
        e = b - a
        thetas.append(math.atan2(-e[0], e[1]))  # outward normal angle
    total = np.zeros(2)
    for i in range(n):
        v = hull_pts[(i + 1) % n]  # vertex between edge i and edge i+1
        a0 = thetas[i]
        a1 = thetas[(i + 1) % n]
        while a1 <= a0 - 1e-15:
            a1 += 2 * math.pi
        total += _arc_integral(a0, a1, v)
    return total / math.pi


def _arc_integral(a: float, b: float, v: np.ndarray) -> np.ndarray:
    """Integral over angle in [a, b] of (cos t, sin t) * (v1 cos t + v2 sin t)."""

    def anti(t):
        c2 = math.cos(2 * t)
        s2 = math.sin(2 * t)
        ix = v[0] * (t / 2 + s2 / 4) + v[1] * (-c2 / 4)
        iy = v[0] * (-c2 / 4) + v[1] * (t / 2 - s2 / 4)
        return np.array([ix, iy])

    return anti(b) - anti(a)


def _sphere_nodes(k: int, n: int, seed: int) -> np.ndarray:
    if k == 3:
        i = np.arange(n) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i  # Fibonacci lattice
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, 1.0))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, k))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _steiner_quadrature(t: np.ndarray, k: int, tol: Tolerances) -> np.ndarray:
    u = _sphere_nodes(k, tol.sphere_nodes, tol.rng_seed)
    sigma = np.max(u @ t.T, axis=1)
    return (k / tol.sphere_nodes) * (u * sigma[:, None]).sum(axis=0)


# ---------------------------------------------------------------------------
# distances


def _dist_point_polygon_2d(P: Polytope, y: np.ndarray) -> float:
    if P.contains(y):
        return 0.0
    V = P.vrep
    if P.intrinsic_dim == 0:
        return float(np.linalg.norm(y - V[0]))
    if P.intrinsic_dim == 1:
        segs = [(V[0], V[-1])]
    else:
        order = P.hull_order
        pts = V[order]
        segs = [(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]
    best = math.inf
    for a, b in segs:
        e = b - a
        denom = float(e @ e)
        t = 0.0 if denom == 0 else float(np.clip((y - a) @ e / denom, 0.0, 1.0))
        best = min(best, float(np.linalg.norm(y - (a + t * e))))
    return best


def _dist_to_polytope(P: Polytope, y: np.ndarray) -> float:
    if P.ambient_dim == 2:
        return _dist_point_polygon_2d(P, y)
    z = convexsolve.min_norm_point(P.vrep - y)
    return float(np.linalg.norm(z))


def hausdorff(P: Polytope, Q: Polytope) -> float:
    """max of the two excesses; the point-to-set distance over a polytope is
    attained at a vertex, so vertex sweeps are exact."""
    if P.ambient_dim != Q.ambient_dim:
        raise ValueError("ambient dimensions differ")
    e_pq = max(_dist_to_polytope(Q, v) for v in P.vrep)
    e_qp = max(_dist_to_polytope(P, v) for v in Q.vrep)
    return max(e_pq, e_qp)


def dist_point(P: Polytope, y, tol: Tolerances = DEFAULT_TOL):
    """(d(y, P), projection) via the minimum-norm-point solver on translated
    vertices; the projection satisfies the variational inequality against
    every vertex within feas_tol."""
    y = np.asarray(y, dtype=float)
    z = convexsolve.min_norm_point(P.vrep - y, feas_tol=tol.feas_tol)
    proj = y + z
    gaps = (P.vrep - proj) @ (y - proj)
    scale = 1.0 + float(np.max(np.abs(P.vrep - y))) ** 2
    if float(np.max(gaps, initial=0.0)) > 1e-6 * scale:
        raise convexsolve.SolverStall("projection failed its variational-inequality certificate")
    return float(np.linalg.norm(z)), proj


# ---------------------------------------------------------------------------
# set operations


def same_affine_hull(P: Polytope, Q: Polytope, tol: Tolerances = DEFAULT_TOL) -> bool:
    if P.intrinsic_dim != Q.intrinsic_dim:
        return False
    pts = np.vstack([P.vrep, Q.vrep])
    diffs = pts - pts.mean(axis=0)
    svals = np.linalg.svd(diffs, compute_uv=False)
    return _numerical_rank(svals, tol.rank_tol, strict=False) == P.intrinsic_dim


def intersect(P: Polytope, Q: Polytope, tol: Tolerances = DEFAULT_TOL) -> Optional[Polytope]:
    """P ∩ Q or None when empty.

    The clipping runs in the frame coordinates of the lower-dimensional
    operand, where that operand is full-dimensional; the other operand's
    ambient rows (pinning rows included) are mapped into the frame.
    """
    if P.ambient_dim != Q.ambient_dim:
        raise ValueError("ambient dimensions differ")
    base, other = (P, Q) if P.intrinsic_dim <= Q.intrinsic_dim else (Q, P)
    if base.intrinsic_dim == 0:
        pt = base.vrep[0]
        return base if other.contains(pt, tol.feas_tol) else None
    B = base.frame.basis
    o = base.frame.origin
    M, q = other.hrep
    extent = 1.0 + float(np.max(np.abs(base.vertices_frame)))
    rows = []
    for i in range(M.shape[0]):
        n_f = B.T @ M[i]
        off = float(q[i] - M[i] @ o)
        ln = float(np.linalg.norm(n_f)) / max(float(np.linalg.norm(M[i])), 1e-300)
        if ln <= tol.feas_tol:
            # The row is constant on the base's affine hull to within
            # tolerance (its variation over the base is <= ln * extent);
            # normalizing it would amplify hull-rounding noise into an
            # arbitrary cut.  Either the whole hull region passes or the
            # intersection is empty.
            if off < -100.0 * tol.feas_tol * extent:
                return None
            continue
        rows.append((n_f, off))
    N, c = base.intrinsic_facets
    base_rows = [(N[i], float(c[i])) for i in range(N.shape[0])]
    V = _clip_float(base.vertices_frame, base_rows, rows, tol.feas_tol)
    if V is None or V.shape[0] == 0:
        return None
    return _build_polytope(base.frame.to_ambient(V), tol, strict_rank=False)


def minkowski_sum(P: Polytope, Q: Polytope, tol: Tolerances = DEFAULT_TOL) -> Polytope:
    sums = (P.vrep[:, None, :] + Q.vrep[None, :, :]).reshape(-1, P.ambient_dim)
    return _build_polytope(sums, tol, strict_rank=False)


def minkowski_interpolate(P: Polytope, Q: Polytope, t: float, tol: Tolerances = DEFAULT_TOL) -> Polytope:
    """Hull of {t*q + (1-t)*p}: the Minkowski geodesic between P (t=0) and Q (t=1)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("interpolation parameter must lie in [0, 1]")
    pts = ((1.0 - t) * P.vrep[:, None, :] + t * Q.vrep[None, :, :]).reshape(-1, P.ambient_dim)
    return _build_polytope(pts, tol, strict_rank=False)


def sym_diff_volume(P: Polytope, Q: Polytope, tol: Tolerances = DEFAULT_TOL) -> float:
    """lambda_k(P Δ Q) for polytopes sharing an affine hull."""
    if not same_affine_hull(P, Q, tol):
        raise AffineHullMismatch("symmetric-difference volume needs identical affine hulls")
    pq = intersect(P, Q, tol)
    common = 0.0
    if pq is not None and pq.intrinsic_dim == P.intrinsic_dim:
        common = volume(pq)
    return volume(P) + volume(Q) - 2.0 * common


def translate(P: Polytope, v) -> Polytope:
    v = np.asarray(v, dtype=float)
    return Polytope(
        hrep_normals=P.hrep_normals,
        hrep_offsets=P.hrep_offsets + P.hrep_normals @ v,
        vrep=P.vrep + v,
        frame=AffineFrame(origin=P.frame.origin + v, basis=P.frame.basis),
        intrinsic_dim=P.intrinsic_dim,
        volume_cache=P.volume_cache,
    )


def scale(P: Polytope, factor: float) -> Polytope:
    """Scale about the ambient origin by a positive factor."""
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    vol = None if P.volume_cache is None else P.volume_cache * factor**P.intrinsic_dim
    return Polytope(
        hrep_normals=P.hrep_normals,
        hrep_offsets=P.hrep_offsets * factor,
        vrep=P.vrep * factor,
        frame=AffineFrame(origin=P.frame.origin * factor, basis=P.frame.basis),
        intrinsic_dim=P.intrinsic_dim,
        volume_cache=vol,
    )


def affine_frame(P: Polytope) -> AffineFrame:
    return P.frame


def project(P: Polytope, sub: AffineFrame, tol: Tolerances = DEFAULT_TOL) -> Polytope:
    """Orthogonal projection of P onto the affine subspace of ``sub``."""
    if sub.orthonormality_defect() > 1e-10:
        raise ValueError("projection frame must be orthonormal")
    B = sub.basis
    o = sub.origin
    diff = P.vrep - o
    proj = o + (diff @ B) @ B.T if B.shape[1] else np.repeat(o[None, :], P.n_vertices, axis=0)
    return _build_polytope(proj, tol, strict_rank=False)


# ---------------------------------------------------------------------------
# enclosing balls


def _circumball(points) -> tuple:
    """Smallest ball with all ``points`` on its boundary (affinely independent).

    The center lies in the affine hull of the points, so it is solved there.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return None, -1.0
    if len(pts) == 1:
        return pts[0], 0.0
    p0 = pts[0]
    D = pts[1:] - p0  # (j, m)
    rhs = 0.5 * np.einsum("ij,ij->i", D, D)
    G = D @ D.T
    alpha, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    center = p0 + alpha @ D
    r = float(np.max(np.linalg.norm(pts - center, axis=1)))
    return center, r


def _welzl(pts: np.ndarray, rng: np.random.Generator):
    order = rng.permutation(len(pts))
    P = pts[order]

    def mb(n, boundary):
        if n == 0 or len(boundary) == pts.shape[1] + 1:
            return _circumball(boundary)
        c, r = mb(n - 1, boundary)
        p = P[n - 1]
        if c is not None and np.linalg.norm(p - c) <= r * (1 + 1e-12) + 1e-12:
            return c, r
        return mb(n - 1, boundary + [p])

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * len(P) + 100))
    try:
        return mb(len(P), [])
    finally:
        sys.setrecursionlimit(old)


def enclosing_ball(P: Polytope, tol: Tolerances = DEFAULT_TOL):
    """Minimum enclosing ball of the vertices: exact recursive algorithm up to
    ambient dimension 3, certified shrinking heuristic above."""
    V = P.vrep
    if V.shape[0] == 1:
        return V[0].copy(), 0.0
    if P.ambient_dim <= 3:
        rng = np.random.default_rng(tol.rng_seed)
        c, r = _welzl(V, rng)
        return c, float(np.max(np.linalg.norm(V - c, axis=1)))
    c = V.mean(axis=0)
    for it in range(1, 2000):
        d = np.linalg.norm(V - c, axis=1)
        far = int(np.argmax(d))
        step = 1.0 / (it + 1)
        c = c + step * (V[far] - c)
    r = float(np.max(np.linalg.norm(V - c, axis=1)))
    return c, r


# ---------------------------------------------------------------------------
# constants


def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


def volume_lipschitz_constant(diam: float, m: int) -> float:
    """Lipschitz constant of the m-volume on convex subsets of a body of the
    given diameter: 2 m vol(B_m) (diam * sqrt(m / (2(m+1))))^(m-1)."""
    jung = diam * math.sqrt(m / (2.0 * (m + 1.0)))
    return 2.0 * m * unit_ball_volume(m) * jung ** (m - 1)
