"""Uniform beliefs over moving polytopal supports.

A library plus CLI for decision-dependent uniform distributions on
parameter-dependent convex polytopes: expected-value functions, distances
between the induced laws (total variation, Wasserstein-1, Hausdorff on
supports), and numerical probes for Lipschitz/calmness behavior of the
expected value, including linear bilevel solution maps.
"""

from .geomkernel import (  # noqa: F401
    AffineFrame,
    DEFAULT_TOL,
    Polytope,
    Tolerances,
    diameter,
    dist_point,
    enclosing_ball,
    from_hrep,
    from_vrep,
    hausdorff,
    inner_radius,
    intersect,
    minkowski_interpolate,
    minkowski_sum,
    project,
    radial,
    scale,
    steiner_point,
    support,
    sym_diff_volume,
    translate,
    triangulate,
    volume,
    volume_lipschitz_constant,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
