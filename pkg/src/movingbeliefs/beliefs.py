"""Uniform and density-weighted laws on polytopes, their expectations, and
distances between them.

The uniform ("neutral") law on a support lives on the Lebesgue measure of the
support's affine hull; a singleton support carries the Dirac mass.  Total
variation follows the un-halved convention (supremum of expectation gaps over
test functions bounded by 1, range [0, 2]) — much software halves this, we do
not.  Uniform laws on supports with distinct affine hulls are mutually
singular, so their total variation distance is exactly 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import geomkernel as gk
from .errors import (
    DegreeCapExceeded,
    PositivityViolation,
    RejectionBudgetExceeded,
    ResolutionTooCoarse,
)
from .geomkernel import DEFAULT_TOL, Polytope, Tolerances

DEGREE_CAP = 8


@dataclass(frozen=True)
class Polynomial:
    """Polynomial integrand on R^m: terms maps exponent tuples to coefficients."""

    terms: tuple  # tuple of (exponent tuple, coeff), sorted
    dim: int
    lip_hint: Optional[float] = None

    @staticmethod
    def from_dict(terms: dict, dim: int, lip_hint=None, cap: int = DEGREE_CAP) -> "Polynomial":
        clean = {}
        for exps, coeff in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} for dimension {dim}")
            if not math.isfinite(coeff):
                raise ValueError("coefficients must be finite")
            if coeff != 0.0:
                clean[exps] = clean.get(exps, 0.0) + float(coeff)
        deg = max((sum(e) for e in clean), default=0)
        if deg > cap:
            raise DegreeCapExceeded(f"degree {deg} exceeds the cap {cap}")
        return Polynomial(terms=tuple(sorted(clean.items())), dim=dim, lip_hint=lip_hint)

    @staticmethod
    def constant(c: float, dim: int) -> "Polynomial":
        return Polynomial.from_dict({(0,) * dim: c}, dim)

    @staticmethod
    def coordinate(i: int, dim: int) -> "Polynomial":
        exps = [0] * dim
        exps[i] = 1
        return Polynomial.from_dict({tuple(exps): 1.0}, dim)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for exps, coeff in self.terms:
            term = np.full(pts.shape[0], coeff)
            for j, e in enumerate(exps):
                if e:
                    term = term * pts[:, j] ** e
            out += term
        return out

    def multiply(self, other: "Polynomial") -> "Polynomial":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        prod: dict = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                key = tuple(a + b for a, b in zip(e1, e2))
                prod[key] = prod.get(key, 0.0) + c1 * c2
        # internal products may exceed the public cap; the quadrature handles it
        return Polynomial.from_dict(prod, self.dim, cap=2 * DEGREE_CAP)


@dataclass(frozen=True)
class Opaque:
    """Black-box integrand; expectations fall back to Monte Carlo."""

    fn: Callable[[np.ndarray], np.ndarray]
    dim: int
    lip_hint: Optional[float] = None
    label: str = "opaque"

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.fn(pts), dtype=float).reshape(pts.shape[0])


Integrand = Union[Polynomial, Opaque]


@dataclass(frozen=True)
class Belief:
    """Law family over a moving support: uniform by default, or re-weighted by
    a strictly positive density."""

    density: Optional[Integrand] = None

    @property
    def is_neutral(self) -> bool:
        return self.density is None


NEUTRAL = Belief()


@dataclass(frozen=True, eq=False)
class MeasurePair:
    """Two supports compared as measures; ``common_hull`` records whether the
    affine hulls coincide (decides absolute continuity)."""

    P: Polytope
    Q: Polytope
    common_hull: bool

    @staticmethod
    def make(P: Polytope, Q: Polytope, tol: Tolerances = DEFAULT_TOL) -> "MeasurePair":
        return MeasurePair(P=P, Q=Q, common_hull=gk.same_affine_hull(P, Q, tol))


# ---------------------------------------------------------------------------
# simplex quadrature


@lru_cache(maxsize=64)
def _gm_rule(k: int, s: int):
    """Grundmann-Moller rule of degree 2s+1 on the standard k-simplex.

    Returns (points (q, k), weights (q,)); the weights are used in normalized
    form so any global constant cancels.
    """
    d = 2 * s + 1
    pts = []
    wts = []
    for i in range(s + 1):
        denom = d + k - 2 * i
        w = (-1.0) ** i * 2.0 ** (-2 * s) * float(denom) ** d / (
            math.factorial(i) * math.factorial(d + k - i)
        )
        for beta in _compositions(s - i, k + 1):
            coords = [(2 * b + 1) / denom for b in beta[1:]]
            pts.append(coords)
            wts.append(w)
    return np.array(pts), np.array(wts)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def simplex_average(f: Callable, vertices: np.ndarray, degree: int) -> float:
    """Average of ``f`` over the simplex spanned by ``vertices`` ((k+1, m)),
    exact for polynomials up to ``degree``."""
    k = vertices.shape[0] - 1
    if k == 0:
        return float(f(vertices[:1])[0])
    s = max(0, (degree - 1 + 1) // 2)  # smallest s with 2s+1 >= degree
    pts, wts = _gm_rule(k, s)
    ambient = vertices[0] + pts @ (vertices[1:] - vertices[0])
    vals = f(ambient)
    return float((wts @ vals) / wts.sum())


# ---------------------------------------------------------------------------
# expectations


def expect_neutral(P: Polytope, f: Integrand, tol: Tolerances = DEFAULT_TOL) -> float:
    """E[f] under the uniform law on P: exact triangulation + simplex
    quadrature for polynomials, Monte Carlo for opaque integrands."""
    value, _ = expect_neutral_with_error(P, f, tol)
    return value


def expect_neutral_with_error(
    P: Polytope, f: Integrand, tol: Tolerances = DEFAULT_TOL, n_samples: int = 20000
):
    """Like ``expect_neutral`` but reports the standard error (0 on the exact
    polynomial path)."""
    if P.intrinsic_dim == 0:
        return float(f(P.vrep[:1])[0]), 0.0
    if isinstance(f, Polynomial):
        total = 0.0
        mass = 0.0
        k = P.intrinsic_dim
        tframe = P.vertices_frame
        deg = f.degree
        for simplex in gk._triangulate_frame(tframe, k):
            d = tframe[simplex[1:]] - tframe[simplex[0]]
            vol = abs(float(np.linalg.det(d))) / math.factorial(k)
            if vol == 0.0:
                continue
            total += vol * simplex_average(f, P.vrep[simplex], deg)
            mass += vol
        if mass == 0.0:
            raise ValueError("degenerate triangulation")
        return total / mass, 0.0
    pts = sample_uniform(P, n_samples, tol.rng_seed, tol)
    vals = f(pts)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def expect_density(P: Polytope, h: Integrand, f: Integrand, tol: Tolerances = DEFAULT_TOL) -> float:
    """E[f] under the density-h re-weighting of the uniform law:
    E_u[h f] / E_u[h]; exact when both factors are polynomial."""
    _check_positive(P, h, tol)
    if isinstance(h, Polynomial) and isinstance(f, Polynomial):
        num = expect_neutral(P, h.multiply(f), tol)
        den = expect_neutral(P, h, tol)
    else:
        hf = Opaque(fn=lambda pts: np.asarray(h(pts)) * np.asarray(f(pts)), dim=P.ambient_dim)
        num = expect_neutral(P, hf, tol)
        den = expect_neutral(P, h if isinstance(h, Opaque) else Opaque(fn=h, dim=P.ambient_dim), tol)
    return num / den


def _check_positive(P: Polytope, h: Integrand, tol: Tolerances, n: int = 256) -> None:
    if P.intrinsic_dim == 0:
        vals = h(P.vrep[:1])
    else:
        vals = h(sample_uniform(P, n, tol.rng_seed ^ 0x5EED, tol))
    if np.min(vals) <= 0.0:
        raise PositivityViolation("density must be strictly positive on the support")


def expect(P: Polytope, belief: Belief, f: Integrand, tol: Tolerances = DEFAULT_TOL) -> float:
    if belief.is_neutral:
        return expect_neutral(P, f, tol)
    return expect_density(P, belief.density, f, tol)


# ---------------------------------------------------------------------------
# sampling


def sample_uniform(P: Polytope, n: int, seed: int, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """n approximately-i.i.d. uniform points on P (deterministic per seed).

    Rejection from the frame bounding box for intrinsic dimension <= 3,
    hit-and-run with 100*k burn-in and k-fold thinning above.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    k = P.intrinsic_dim
    if k == 0:
        return np.repeat(P.vrep[:1], n, axis=0)
    rng = np.random.default_rng(seed)
    t = P.vertices_frame
    lo, hi = t.min(axis=0), t.max(axis=0)
    N, c = P.intrinsic_facets
    if k <= 3:
        out = []
        drawn = 0
        accepted = 0
        while accepted < n:
            batch = max(1024, 4 * (n - accepted))
            cand = rng.uniform(lo, hi, size=(batch, k))
            ok = np.all(cand @ N.T <= c + tol.feas_tol, axis=1)
            got = cand[ok]
            out.append(got)
            drawn += batch
            accepted += got.shape[0]
            if drawn >= 1_000_000 and accepted / drawn < 1e-6:
                raise RejectionBudgetExceeded(
                    f"acceptance rate {accepted/drawn:.2e} below 1e-6"
                )
        coords = np.vstack(out)[:n]
    else:
        burn = 100 * k
        thin = k
        x = t.mean(axis=0)
        samples = np.empty((n, k))
        kept = 0
        step = 0
        while kept < n:
            d = rng.standard_normal(k)
            d /= np.linalg.norm(d)
            denom = N @ d
            bounds = c - N @ x
            t_hi = np.inf
            t_lo = -np.inf
            pos = denom > 1e-14
            neg = denom < -1e-14
            if pos.any():
                t_hi = np.min(bounds[pos] / denom[pos])
            if neg.any():
                t_lo = np.max(bounds[neg] / denom[neg])
            if not (np.isfinite(t_hi) and np.isfinite(t_lo)):
                raise RejectionBudgetExceeded("hit-and-run found an unbounded chord")
            x = x + rng.uniform(t_lo, t_hi) * d
            step += 1
            if step > burn and (step - burn) % thin == 0:
                samples[kept] = x
                kept += 1
        coords = samples
    return P.frame.to_ambient(coords)


# ---------------------------------------------------------------------------
# distances between uniform laws


def tv_distance(pair: MeasurePair, tol: Tolerances = DEFAULT_TOL) -> float:
    """Total variation (un-halved, range [0, 2]) between the uniform laws.

    Closed form from intersection volumes when the affine hulls coincide;
    mutually singular (distance 2) otherwise.
    """
    if not pair.common_hull:
        return 2.0
    P, Q = pair.P, pair.Q
    vol_p = gk.volume(P)
    vol_q = gk.volume(Q)
    inter = gk.intersect(P, Q, tol)
    vol_i = 0.0
    if inter is not None and inter.intrinsic_dim == P.intrinsic_dim:
        vol_i = gk.volume(inter)
    return (
        (vol_p - vol_i) / vol_p
        + (vol_q - vol_i) / vol_q
        + vol_i * abs(1.0 / vol_p - 1.0 / vol_q)
    )


def _segment_coords_on_common_line(P: Polytope, Q: Polytope, tol: Tolerances):
    """If P and Q are points/segments on one common line, return their
    1-D interval coordinates (a, b), (c, d) on that line, else None."""
    if P.intrinsic_dim > 1 or Q.intrinsic_dim > 1:
        return None
    pts = np.vstack([P.vrep, Q.vrep])
    center = pts.mean(axis=0)
    diffs = pts - center
    svals = np.linalg.svd(diffs, compute_uv=False)
    if _rank_loose(svals, tol.rank_tol) > 1:
        return None
    if svals.size == 0 or svals[0] == 0.0:
        axis = np.zeros(P.ambient_dim)
        axis[0] = 1.0
    else:
        axis = np.linalg.svd(diffs, full_matrices=False)[2][0]
    tp = (P.vrep - center) @ axis
    tq = (Q.vrep - center) @ axis
    return (float(tp.min()), float(tp.max())), (float(tq.min()), float(tq.max()))


def _rank_loose(svals, rank_tol):
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > rank_tol * svals[0]))


def _w1_uniform_intervals(a, b, c, d) -> float:
    """Exact W1 between uniform laws on [a,b] and [c,d] via the quantile
    integral of |(a-c) + t((b-a)-(d-c))|."""
    alpha = a - c
    gamma = (b - a) - (d - c)
    if abs(gamma) < 1e-15:
        return abs(alpha)
    u0, u1 = alpha, alpha + gamma
    if u0 * u1 >= 0:
        return abs(u0 + u1) / 2.0
    return (u0 * u0 + u1 * u1) / (2.0 * abs(gamma))


def w1_distance(
    pair: MeasurePair,
    resolution: Optional[float] = None,
    tol: Tolerances = DEFAULT_TOL,
):
    """(Wasserstein-1 distance, error bound).

    Exact (error 0) for Dirac pairs and for uniform laws on intervals of a
    common line (which covers ambient dimension 1).  Otherwise both laws are
    discretized on a shared axis-aligned grid — cell mass proportional to the
    exact intersection volume, mass placed at the piece centroid — and the
    transportation LP is solved; the reported error bound is 2 * cell diameter.
    """
    P, Q = pair.P, pair.Q
    if P.intrinsic_dim == 0 and Q.intrinsic_dim == 0:
        return float(np.linalg.norm(P.vrep[0] - Q.vrep[0])), 0.0
    coords = _segment_coords_on_common_line(P, Q, tol)
    if coords is not None:
        (a, b), (c, d) = coords
        return _w1_uniform_intervals(a, b, c, d), 0.0

    lo = np.minimum(P.vrep.min(axis=0), Q.vrep.min(axis=0))
    hi = np.maximum(P.vrep.max(axis=0), Q.vrep.max(axis=0))
    span = float(np.max(hi - lo))
    if resolution is None:
        resolution = span / 12.0
    cells_per_axis = np.maximum(1, np.ceil((hi - lo) / resolution - 1e-12).astype(int))
    m = P.ambient_dim
    cell_diam = resolution * math.sqrt(m)

    def discretize(R: Polytope):
        masses, centers = [], []
        r_lo, r_hi = R.bounding_box()
        i_lo = np.clip(np.floor((r_lo - lo) / resolution).astype(int), 0, cells_per_axis - 1)
        i_hi = np.clip(np.floor((r_hi - lo) / resolution - 1e-12).astype(int), 0, cells_per_axis - 1)
        ranges = [range(i_lo[j], i_hi[j] + 1) for j in range(m)]
        for idx in itertools.product(*ranges):
            c_lo = lo + np.array(idx) * resolution
            c_hi = c_lo + resolution
            box = _box_polytope(c_lo, c_hi, tol)
            piece = gk.intersect(R, box, tol)
            if piece is None or piece.intrinsic_dim < R.intrinsic_dim:
                continue
            w = gk.volume(piece)
            if w <= 0.0:
                continue
            masses.append(w)
            centers.append(_centroid(piece))
        if len(masses) < 8:
            raise ResolutionTooCoarse(
                f"only {len(masses)} cells receive mass; refine the grid"
            )
        mass = np.array(masses)
        return mass / mass.sum(), np.array(centers)

    a_mass, a_pts = discretize(P)
    b_mass, b_pts = discretize(Q)
    cost = np.linalg.norm(a_pts[:, None, :] - b_pts[None, :, :], axis=-1)
    value = _transport_lp(a_mass, b_mass, cost)
    return value, 2.0 * cell_diam


def _centroid(P: Polytope) -> np.ndarray:
    if P.intrinsic_dim == 0:
        return P.vrep[0].copy()
    k = P.intrinsic_dim
    t = P.vertices_frame
    total = np.zeros(P.ambient_dim)
    mass = 0.0
    for simplex in gk._triangulate_frame(t, k):
        d = t[simplex[1:]] - t[simplex[0]]
        vol = abs(float(np.linalg.det(d))) / math.factorial(k)
        total += vol * P.vrep[simplex].mean(axis=0)
        mass += vol
    return total / mass


def _box_polytope(lo, hi, tol: Tolerances) -> Polytope:
    corners = gk._box_corners(np.asarray(lo, float), np.asarray(hi, float))
    return gk._build_polytope(corners, tol, strict_rank=False)


def _transport_lp(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> float:
    """Transportation LP between discrete measures (scipy HiGHS backend)."""
    n1, n2 = cost.shape
    data, rows, cols = [], [], []
    for i in range(n1):
        for j in range(n2):
            rows.append(i)
            cols.append(i * n2 + j)
            data.append(1.0)
    for j in range(n2):
        for i in range(n1):
            rows.append(n1 + j)
            cols.append(i * n2 + j)
            data.append(1.0)
    A = sparse.csr_matrix((data, (rows, cols)), shape=(n1 + n2, n1 * n2))
    rhs = np.concatenate([a, b])
    res = linprog(cost.ravel(), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    return float(res.fun)


@dataclass(frozen=True)
class W1TvReport:
    """Both sides of the diameter-scaled domination of W1 by total variation."""

    w1: float
    w1_error: float
    tv: float
    bound: float
    margin: float

    @property
    def holds(self) -> bool:
        return self.margin >= -(self.w1_error + 1e-9)


def w1_tv_inequality_check(
    pair: MeasurePair,
    y_diam: float,
    resolution: Optional[float] = None,
    tol: Tolerances = DEFAULT_TOL,
) -> W1TvReport:
    """Evaluate W1 <= (diam(Y)/2) * TV for the pair inside a body of the given
    diameter and report the margin."""
    w1, err = w1_distance(pair, resolution, tol)
    tv = tv_distance(pair, tol)
    bound = 0.5 * y_diam * tv
    return W1TvReport(w1=w1, w1_error=err, tv=tv, bound=bound, margin=bound - w1)
