"""Command-line entry point: example reproduction, verification suites, and
grid-search evaluation of linear bilevel leader objectives.

Problem files are JSON (schema-checked, version-tagged); bulk numeric output
is CSV with the fixed column order x, phi, fd, ratio, bound_lhs, bound_rhs,
margin (reference columns appended after, when a closed form exists).

Exit-code contract: 0 pass, 1 verified-property violation, 2 usage/schema/
precondition error.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import click
import jsonschema
import numpy as np

from . import beliefs as bl
from . import geomkernel as gk
from . import probe as pr
from . import svmaps as sv
from .beliefs import Belief, NEUTRAL, Opaque, Polynomial
from .errors import MovingBeliefsError
from .geomkernel import Tolerances

SCHEMA_VERSION = "1"

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _NUMBER_ARRAY}

INTEGRAND_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "polynomial"},
                "dim": {"type": "integer", "minimum": 1},
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            "coeff": {"type": "number"},
                        },
                        "required": ["exponents", "coeff"],
                    },
                },
            },
            "required": ["kind", "dim", "terms"],
        },
        {
            "properties": {
                "kind": {"const": "opaque"},
                "callable": {"type": "string"},
                "dim": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "callable", "dim"],
        },
    ],
}

MAP_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {
            "enum": [
                "trapezoid",
                "qmap",
                "rotseg",
                "interp",
                "bilevel_linear",
                "eps_argmin",
                "generic_affine",
            ]
        },
        "q": {"type": "number", "minimum": 1},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "body_a": {"type": "object"},
        "body_b": {"type": "object"},
        "a_matrix": _MATRIX,
        "b_matrix": _MATRIX,
        "rhs": _NUMBER_ARRAY,
        "cost": _NUMBER_ARRAY,
    },
    "required": ["kind"],
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "movingbeliefs problem file",
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "map": MAP_SCHEMA,
        "belief": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["neutral", "density"]},
                "density": INTEGRAND_SCHEMA,
            },
            "required": ["kind"],
        },
        "theta": {
            "type": "object",
            "properties": {
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "coeff": {"type": "number"},
                            "x_exponent": {"type": "integer", "minimum": 0},
                            "y_exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                        },
                        "required": ["coeff", "y_exponents"],
                    },
                }
            },
            "required": ["terms"],
        },
        "grid": {
            "type": "object",
            "properties": {
                "start": {"type": "number"},
                "stop": {"type": "number"},
                "count": {"type": "integer", "minimum": 1},
                "log": {"type": "boolean"},
            },
            "required": ["start", "stop", "count"],
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "feas_tol": {"type": "number", "exclusiveMinimum": 0},
                "rank_tol": {"type": "number", "exclusiveMinimum": 0},
                "sphere_nodes": {"type": "integer", "minimum": 1},
                "rng_seed": {"type": "integer"},
            },
        },
        "anchor": {"type": "number"},
        "y_box": {"type": "array", "items": _NUMBER_ARRAY, "minItems": 2, "maxItems": 2},
        "w1_resolution": {"type": "number", "exclusiveMinimum": 0},
        "leader": {
            "type": "object",
            "properties": {"g": _NUMBER_ARRAY, "h": _NUMBER_ARRAY},
            "required": ["g", "h"],
        },
    },
    "required": ["version", "map", "grid"],
}


# ---------------------------------------------------------------------------
# (de)serialization


def polytope_to_json(P: gk.Polytope) -> dict:
    return {"vertices": [[float(v) for v in row] for row in P.vrep]}


def polytope_from_json(obj: dict, tol: Tolerances) -> gk.Polytope:
    return gk.from_vrep(np.asarray(obj["vertices"], dtype=float), tol)


def integrand_to_json(f) -> dict:
    if isinstance(f, Polynomial):
        return {
            "kind": "polynomial",
            "dim": f.dim,
            "terms": [{"exponents": list(e), "coeff": c} for e, c in f.terms],
        }
    return {"kind": "opaque", "callable": f.label, "dim": f.dim}


def integrand_from_json(obj: dict) -> bl.Integrand:
    if obj["kind"] == "polynomial":
        terms = {tuple(t["exponents"]): t["coeff"] for t in obj["terms"]}
        return Polynomial.from_dict(terms, obj["dim"])
    mod_name, _, attr = obj["callable"].partition(":")
    if not attr:
        raise ValueError("opaque integrands need a 'module:attribute' callable")
    import importlib

    fn = getattr(importlib.import_module(mod_name), attr)
    return Opaque(fn=fn, dim=obj["dim"], label=obj["callable"])


def map_to_json(spec: sv.MapSpec) -> dict:
    kind = spec.kind
    if kind == "trapezoid" or kind == "rotseg":
        return {"kind": kind}
    if kind == "qmap":
        return {"kind": kind, "q": spec.q}
    if kind == "interp":
        return {"kind": kind, "body_a": polytope_to_json(spec.body_a), "body_b": polytope_to_json(spec.body_b)}
    if kind in ("bilevel_linear", "eps_argmin"):
        s = spec.spec
        out = {
            "kind": kind,
            "a_matrix": s.a_matrix.tolist(),
            "b_matrix": s.b_matrix.tolist(),
            "rhs": s.rhs.tolist(),
            "cost": s.cost.tolist(),
        }
        if kind == "eps_argmin":
            out["eps"] = spec.eps
        return out
    if kind == "generic_affine":
        return {
            "kind": kind,
            "a_matrix": spec.a_matrix.tolist(),
            "b_matrix": spec.b_matrix.tolist(),
            "rhs": spec.rhs.tolist(),
        }
    raise ValueError(f"unknown map kind {kind}")


def map_from_json(obj: dict, tol: Tolerances) -> sv.MapSpec:
    kind = obj["kind"]
    if kind == "trapezoid":
        return sv.TrapezoidMap()
    if kind == "qmap":
        return sv.QMap(q=float(obj.get("q", 2.0)))
    if kind == "rotseg":
        return sv.RotSegMap()
    if kind == "interp":
        return sv.InterpMap(
            body_a=polytope_from_json(obj["body_a"], tol),
            body_b=polytope_from_json(obj["body_b"], tol),
        )
    if kind in ("bilevel_linear", "eps_argmin"):
        spec = sv.BilevelLinearSpec(
            a_matrix=np.asarray(obj["a_matrix"], dtype=float),
            b_matrix=np.asarray(obj["b_matrix"], dtype=float),
            rhs=np.asarray(obj["rhs"], dtype=float),
            cost=np.asarray(obj["cost"], dtype=float),
        )
        if kind == "bilevel_linear":
            return sv.BilevelSolutionMap(spec=spec)
        return sv.EpsArgminMap(spec=spec, eps=float(obj["eps"]))
    if kind == "generic_affine":
        return sv.GenericAffineMap(
            a_matrix=np.asarray(obj["a_matrix"], dtype=float),
            b_matrix=np.asarray(obj["b_matrix"], dtype=float),
            rhs=np.asarray(obj["rhs"], dtype=float),
        )
    raise ValueError(f"unknown map kind {kind}")


def belief_to_json(b: Belief) -> dict:
    if b.is_neutral:
        return {"kind": "neutral"}
    return {"kind": "density", "density": integrand_to_json(b.density)}


def belief_from_json(obj: Optional[dict]) -> Belief:
    if obj is None or obj["kind"] == "neutral":
        return NEUTRAL
    return Belief(density=integrand_from_json(obj["density"]))


@dataclass(frozen=True)
class ThetaPoly:
    """Cost family polynomial in the parameter and the response:
    theta(x, y) = sum coeff * x^a * prod y_j^b_j."""

    terms: tuple  # ((x_exponent, y_exponents tuple, coeff), ...)
    y_dim: int

    def __call__(self, x) -> Polynomial:
        xv = float(x) if np.isscalar(x) else float(np.asarray(x).ravel()[0])
        agg: dict = {}
        for x_exp, y_exps, coeff in self.terms:
            agg[y_exps] = agg.get(y_exps, 0.0) + coeff * xv**x_exp
        return Polynomial.from_dict(agg, self.y_dim)

    def to_json(self) -> dict:
        return {
            "terms": [
                {"coeff": c, "x_exponent": a, "y_exponents": list(b)} for a, b, c in self.terms
            ]
        }

    @staticmethod
    def from_json(obj: dict) -> "ThetaPoly":
        terms = []
        y_dim = None
        for t in obj["terms"]:
            y_exps = tuple(int(e) for e in t["y_exponents"])
            y_dim = len(y_exps) if y_dim is None else y_dim
            if len(y_exps) != y_dim:
                raise ValueError("inconsistent response dimension in theta terms")
            terms.append((int(t.get("x_exponent", 0)), y_exps, float(t["coeff"])))
        return ThetaPoly(terms=tuple(terms), y_dim=y_dim)


def tolerances_from_json(obj: Optional[dict]) -> Tolerances:
    if not obj:
        return gk.DEFAULT_TOL
    base = gk.DEFAULT_TOL
    return Tolerances(
        feas_tol=float(obj.get("feas_tol", base.feas_tol)),
        rank_tol=float(obj.get("rank_tol", base.rank_tol)),
        sphere_nodes=int(obj.get("sphere_nodes", base.sphere_nodes)),
        rng_seed=int(obj.get("rng_seed", base.rng_seed)),
    )


@dataclass(eq=False)
class ProblemFile:
    version: str
    map_spec: sv.MapSpec
    belief: Belief
    theta: Optional[ThetaPoly]
    grid: np.ndarray
    tolerances: Tolerances
    anchor: Optional[float]
    y_box: Optional[tuple]
    w1_resolution: Optional[float]
    leader: Optional[dict]
    raw: dict

    @staticmethod
    def parse(obj: dict) -> "ProblemFile":
        jsonschema.validate(obj, PROBLEM_SCHEMA)
        tol = tolerances_from_json(obj.get("tolerances"))
        spec = map_from_json(obj["map"], tol)
        g = obj["grid"]
        grid = pr.make_grid(g["start"], g["stop"], g["count"], g.get("log", False))
        if not all(spec.in_domain(x) for x in grid):
            raise jsonschema.ValidationError("grid leaves the map domain")
        y_box = None
        if "y_box" in obj:
            y_box = (np.asarray(obj["y_box"][0], float), np.asarray(obj["y_box"][1], float))
        return ProblemFile(
            version=obj["version"],
            map_spec=spec,
            belief=belief_from_json(obj.get("belief")),
            theta=ThetaPoly.from_json(obj["theta"]) if "theta" in obj else None,
            grid=grid,
            tolerances=tol,
            anchor=obj.get("anchor"),
            y_box=y_box,
            w1_resolution=obj.get("w1_resolution"),
            leader=obj.get("leader"),
            raw=obj,
        )

    def serialize(self) -> dict:
        out = {
            "version": self.version,
            "map": map_to_json(self.map_spec),
            "belief": belief_to_json(self.belief),
            "grid": dict(self.raw["grid"]),
        }
        if self.theta is not None:
            out["theta"] = self.theta.to_json()
        for key in ("tolerances", "anchor", "y_box", "w1_resolution", "leader"):
            if key in self.raw:
                out[key] = self.raw[key]
        return out


# ---------------------------------------------------------------------------
# output helpers

CSV_COLUMNS = ["x", "phi", "fd", "ratio", "bound_lhs", "bound_rhs", "margin"]


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def _json_rows(rows):
    """NaN is not valid JSON; render undefined cells as null."""
    out = []
    for row in rows:
        out.append({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()})
    return out


def rows_to_csv(rows, extra_columns=()) -> str:
    cols = CSV_COLUMNS + list(extra_columns)
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _parse_grid_flag(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if parts[0] == "log":
        if len(parts) != 4:
            raise click.UsageError("log grid spec is log:start:stop:count")
        return pr.make_grid(float(parts[1]), float(parts[2]), int(parts[3]), log=True)
    if len(parts) != 3:
        raise click.UsageError("grid spec is start:stop:count or log:start:stop:count")
    return pr.make_grid(float(parts[0]), float(parts[1]), int(parts[2]))


# ---------------------------------------------------------------------------
# commands


@click.group()
def main():
    """Uniform beliefs over moving polytopal supports: sweeps and checks."""


_CLOSED_FORMS = {
    "trapezoid": lambda x, q: (3.0 - np.sqrt(x)) / (6.0 - 3.0 * x**0.25),
    "qmap": lambda x, q: (2.0 * x ** (q - 1.0) + 3.0) / (6.0 + 3.0 * x ** (q - 1.0)),
}


@main.command("example")
@click.argument("name", type=click.Choice(["trapezoid", "qmap", "rotseg"]))
@click.option("--q", type=float, default=2.0, help="exponent of the power-wedge family")
@click.option("--grid", "grid_spec", default=None, help="start:stop:count or log:start:stop:count")
@click.option("--seed", type=int, default=None)
@click.option("--tol", type=float, default=None, help="feasibility tolerance")
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--exact", is_flag=True, help="rational vertex enumeration where applicable")
def cmd_example(name, q, grid_spec, seed, tol, out, fmt, exact):
    """Sweep a built-in example family and compare against its closed form."""
    tolerances = gk.DEFAULT_TOL
    if seed is not None or tol is not None:
        tolerances = Tolerances(
            feas_tol=tol or gk.DEFAULT_TOL.feas_tol,
            rank_tol=gk.DEFAULT_TOL.rank_tol,
            sphere_nodes=gk.DEFAULT_TOL.sphere_nodes,
            rng_seed=seed if seed is not None else gk.DEFAULT_TOL.rng_seed,
        )
    if name == "trapezoid":
        spec = sv.TrapezoidMap()
        grid = _parse_grid_flag(grid_spec) if grid_spec else pr.make_grid(1e-6, 1.0, 100, log=True)
    elif name == "qmap":
        spec = sv.QMap(q=q)
        grid = _parse_grid_flag(grid_spec) if grid_spec else pr.make_grid(1e-6, 1.0, 100, log=True)
    else:
        spec = sv.RotSegMap()
        grid = _parse_grid_flag(grid_spec) if grid_spec else np.linspace(0.0, 1.0, 101)[:-1]

    try:
        report = pr.sweep_phi(spec, NEUTRAL, None, grid, tolerances, exact=exact)
    except MovingBeliefsError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)

    rows = report.rows()
    extra = ()
    exit_code = 0
    if name in _CLOSED_FORMS:
        ref = _CLOSED_FORMS[name](report.grid, q)
        err = np.abs(report.phi - ref)
        for row, r, e in zip(rows, ref, err):
            row["phi_ref"] = float(r)
            row["abs_err"] = float(e)
        extra = ("phi_ref", "abs_err")
        if float(err.max()) > 1e-9:
            click.echo(f"closed-form mismatch: max |phi - ref| = {err.max():.3e}", err=True)
            exit_code = 1
        def masked_max(mask):
            vals = report.ratio[mask]
            vals = vals[np.isfinite(vals)]
            return float(vals.max()) if vals.size else math.nan

        lo_ratio = masked_max(report.grid <= report.grid.min() * 100.0)
        hi_ratio = masked_max(report.grid >= report.grid.max() / 10.0)
        if np.isfinite(lo_ratio) and np.isfinite(hi_ratio) and lo_ratio > 10.0 * max(hi_ratio, 1e-12):
            report.notes.append("phi non-Lipschitz near 0: ratios diverging")
    else:
        report.notes.append("no closed-form reference for this family")

    if fmt == "csv":
        text = rows_to_csv(rows, extra)
        if report.notes:
            text += "".join(f"# {n}\n" for n in report.notes)
    else:
        text = json.dumps(
            {"rows": _json_rows(rows), "notes": report.notes, "max_ratio": report.max_ratio},
            indent=2,
        )
    _emit(text, out)
    for note in report.notes:
        click.echo(f"note: {note}", err=True)
    sys.exit(exit_code)


def _builtin_problem(name: str):
    if name == "eps-toy":
        return sv.EpsArgminMap(spec=sv.toy_bilevel_spec(), eps=0.1), pr.make_grid(0.0, 0.9, 50), 0.0
    if name == "bilevel-toy":
        return sv.BilevelSolutionMap(spec=sv.toy_bilevel_spec()), pr.make_grid(0.0, 0.9, 25), 0.0
    if name == "trapezoid":
        return sv.TrapezoidMap(), pr.make_grid(0.0, 1.0, 50), 0.0
    if name == "qmap":
        return sv.QMap(q=2.0), pr.make_grid(0.0, 1.0, 50), 0.0
    raise click.UsageError(f"unknown builtin '{name}'")


@main.command("verify")
@click.argument("suite", type=click.Choice(["body", "tv-bound", "sandwich", "w1"]))
@click.argument("problem", type=click.Path(exists=True), required=False)
@click.option("--builtin", "builtin", default=None, help="eps-toy | bilevel-toy | trapezoid | qmap")
@click.option("--samples", type=int, default=500, help="sample count for the body suite")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def cmd_verify(suite, problem, builtin, samples, seed, out, fmt):
    """Run a verification suite; exit 0 iff no violations."""
    try:
        if suite == "body":
            report = pr.verify_body_lemmas(samples=samples, seed=seed)
        else:
            if problem:
                with open(problem) as fh:
                    pf = ProblemFile.parse(json.load(fh))
                spec, grid, anchor, tol = pf.map_spec, pf.grid, pf.anchor, pf.tolerances
                y_box, resolution = pf.y_box, pf.w1_resolution
            elif builtin:
                spec, grid, anchor = _builtin_problem(builtin)
                tol, y_box, resolution = gk.DEFAULT_TOL, None, None
            else:
                raise click.UsageError("this suite needs a problem file or --builtin")
            if suite == "tv-bound":
                report = pr.verify_tv_bound(spec, grid, tol, y_box)
            elif suite == "sandwich":
                report = pr.verify_sandwich_and_h(spec, anchor if anchor is not None else grid[0], grid, tol)
            else:
                report = pr.verify_w1_regime(spec, grid, tol, resolution)
    except (jsonschema.ValidationError, json.JSONDecodeError) as exc:
        click.echo(f"schema error: {getattr(exc, 'message', exc)}", err=True)
        sys.exit(2)
    except click.UsageError:
        raise
    except MovingBeliefsError as exc:
        click.echo(f"precondition error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)

    if fmt == "json":
        _emit(report.to_json() + "\n", out)
    else:
        meta = report.metadata
        rows = []
        grid = meta.get("grid")
        if grid is not None:
            lhs = meta.get("lhs", np.full(len(grid), np.nan))
            rhs = meta.get("rhs", np.full(len(grid), np.nan))
            for i, x in enumerate(grid):
                rows.append(
                    {
                        "x": float(x),
                        "phi": math.nan,
                        "fd": math.nan,
                        "ratio": math.nan,
                        "bound_lhs": float(lhs[i]),
                        "bound_rhs": float(rhs[i]),
                        "margin": float(rhs[i] - lhs[i]),
                    }
                )
        _emit(rows_to_csv(rows), out)
    sys.exit(0 if report.passed else 1)


@main.command("bilevel")
@click.argument("problem", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--exact", is_flag=True)
def cmd_bilevel(problem, out, fmt, exact):
    """Evaluate the leader objective g.x + E[h.y] on the grid under the
    neutral (or density) belief and report the grid argmin."""
    try:
        with open(problem) as fh:
            pf = ProblemFile.parse(json.load(fh))
        if pf.leader is None:
            raise click.UsageError("bilevel command needs a 'leader' section {g, h}")
        if not isinstance(pf.map_spec, (sv.BilevelSolutionMap, sv.EpsArgminMap)):
            raise click.UsageError("bilevel command needs a bilevel_linear or eps_argmin map")
        if len(pf.grid) == 0:
            raise click.UsageError("empty grid")
    except (jsonschema.ValidationError, json.JSONDecodeError) as exc:
        click.echo(f"schema error: {getattr(exc, 'message', exc)}", err=True)
        sys.exit(2)

    g_vec = np.asarray(pf.leader["g"], dtype=float)
    h_vec = np.asarray(pf.leader["h"], dtype=float)
    m = pf.map_spec.spec.n_vars
    h_poly = Polynomial.from_dict({tuple(int(i == j) for i in range(m)): float(h_vec[j]) for j in range(m)}, m)

    xs, vals = [], []
    skipped = []
    for x in pf.grid:
        try:
            img = sv.eval_map(pf.map_spec, x, pf.tolerances, exact)
        except MovingBeliefsError as exc:
            skipped.append(float(x))
            click.echo(f"warning: skipping x={x}: {type(exc).__name__}", err=True)
            continue
        follower = bl.expect(img, pf.belief, h_poly, pf.tolerances)
        xs.append(float(x))
        vals.append(float(g_vec @ np.atleast_1d(x) + follower))
    if not xs:
        click.echo("error: every grid point was infeasible", err=True)
        sys.exit(2)
    xs = np.array(xs)
    vals = np.array(vals)
    best = int(np.argmin(vals))
    ratios = np.abs(np.diff(vals)) / np.maximum(np.abs(np.diff(xs)), 1e-300)
    summary = {
        "argmin_x": float(xs[best]),
        "argmin_value": float(vals[best]),
        "lipschitz_estimate": float(ratios.max()) if len(ratios) else 0.0,
        "skipped": skipped,
    }
    rows = []
    for i in range(len(xs)):
        rows.append(
            {
                "x": float(xs[i]),
                "phi": float(vals[i]),
                "fd": math.nan,
                "ratio": float(ratios[i - 1]) if i > 0 else math.nan,
                "bound_lhs": math.nan,
                "bound_rhs": math.nan,
                "margin": math.nan,
            }
        )
    if fmt == "json":
        _emit(json.dumps({"summary": summary, "rows": _json_rows(rows)}, indent=2) + "\n", out)
    else:
        _emit(rows_to_csv(rows), out)
    sys.exit(0)


if __name__ == "__main__":
    main()
