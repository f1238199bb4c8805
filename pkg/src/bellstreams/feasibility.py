"""Which correlation sets can come from actual ±1 streams.

A set of N rows of (a, b, b') values is a distribution over the 8 sign
patterns ("atoms"), and its correlations are the matching mixture of the
atoms' products. So a triple of correlations is realizable iff some
probability vector over the atoms reproduces it, an exact LP feasibility
question. The quadruple case uses the 16 atoms of (a, a', b, b').

Facets of the correlation polytope are derived here from its vertices by
enumeration, never typed in; the scan uses them for fast vectorized
verdicts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Mapping, Sequence

import numpy as np

from . import simplex
from .core_streams import eval_inequality3, eval_inequality4, negative_cosine

TRIPLE_KEYS = ("ab", "ab'", "bb'")
QUAD_KEYS = ("ab", "ab'", "a'b", "a'b'")
FLOAT_TOL = 1e-9


class InfeasibleError(ValueError):
    """The given correlations cannot come from any ±1 streams."""


# Atom tuples: (a, b, b') for triples, (a, a', b, b') for quadruples.
ATOMS3 = tuple(itertools.product((1, -1), repeat=3))
ATOMS4 = tuple(itertools.product((1, -1), repeat=4))

_PRODUCTS3 = {
    "ab": lambda a, b, bp: a * b,
    "ab'": lambda a, b, bp: a * bp,
    "bb'": lambda a, b, bp: b * bp,
}
_PRODUCTS4 = {
    "ab": lambda a, ap, b, bp: a * b,
    "ab'": lambda a, ap, b, bp: a * bp,
    "a'b": lambda a, ap, b, bp: ap * b,
    "a'b'": lambda a, ap, b, bp: ap * bp,
    "aa'": lambda a, ap, b, bp: a * ap,
    "bb'": lambda a, ap, b, bp: b * bp,
}


def _atoms(mode: str):
    if mode == "triple":
        return ATOMS3, _PRODUCTS3, TRIPLE_KEYS
    if mode == "quadruple":
        return ATOMS4, _PRODUCTS4, QUAD_KEYS
    raise ValueError(f"mode must be 'triple' or 'quadruple', got {mode!r}")


def product_row(mode: str, key: str) -> list[int]:
    atoms, products, _ = _atoms(mode)
    return [products[key](*atom) for atom in atoms]


@dataclass(frozen=True)
class CorrelationPoint:
    values: dict

    def __post_init__(self):
        keys = tuple(self.values)
        if set(keys) not in (set(TRIPLE_KEYS), set(QUAD_KEYS)):
            raise ValueError(f"keys must be {TRIPLE_KEYS} or {QUAD_KEYS}, got {keys}")
        for k, v in self.values.items():
            if not -1 <= v <= 1:
                raise ValueError(f"correlation {k}={v!r} outside [-1, 1]")

    @property
    def mode(self) -> str:
        return "triple" if len(self.values) == 3 else "quadruple"

    @property
    def keys(self) -> tuple[str, ...]:
        return TRIPLE_KEYS if self.mode == "triple" else QUAD_KEYS

    def vector(self) -> tuple:
        return tuple(self.values[k] for k in self.keys)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Rational) for v in self.values.values())

    @classmethod
    def coerce(cls, point, mode: str | None = None) -> "CorrelationPoint":
        if isinstance(point, CorrelationPoint):
            return point
        if isinstance(point, Mapping):
            return cls(dict(point))
        point = tuple(point)
        keys = TRIPLE_KEYS if len(point) == 3 else QUAD_KEYS
        if mode is not None and keys != _atoms(mode)[2]:
            raise ValueError(f"{mode} point needs {len(_atoms(mode)[2])} values")
        return cls(dict(zip(keys, point)))


@dataclass(frozen=True)
class Facet:
    """Inequality ``coeffs @ x <= bound`` over the mode's correlation keys."""

    coeffs: tuple[int, ...]
    bound: int
    keys: tuple[str, ...]

    def slack(self, x: Sequence) -> float | Fraction:
        return self.bound - sum(c * v for c, v in zip(self.coeffs, x))

    def describe(self) -> str:
        terms = []
        for c, k in zip(self.coeffs, self.keys):
            if c:
                sign = "-" if c < 0 else "+"
                mag = "" if abs(c) == 1 else f"{abs(c)}*"
                terms.append(f"{sign} {mag}<{k}>")
        text = " ".join(terms)
        return (text[2:] if text.startswith("+ ") else text) + f" <= {self.bound}"

    def to_dict(self) -> dict:
        return {"coeffs": dict(zip(self.keys, self.coeffs)), "bound": self.bound, "text": self.describe()}


def correlation_vertices(mode: str) -> list[tuple[int, ...]]:
    """Distinct correlation vectors of the deterministic atoms."""
    atoms, products, keys = _atoms(mode)
    verts = {tuple(products[k](*atom) for k in keys) for atom in atoms}
    return sorted(verts, reverse=True)


def _nullspace_vector(rows: list[list[Fraction]]) -> list[Fraction] | None:
    """A nonzero vector spanning the null space when it is one-dimensional."""
    M = [r[:] for r in rows]
    ncols = len(M[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if pr is None:
            continue
        M[r], M[pr] = M[pr], M[r]
        p = M[r][c]
        M[r] = [v / p for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        return None
    fc = free[0]
    vec = [Fraction(0)] * ncols
    vec[fc] = Fraction(1)
    for i, pc in enumerate(pivots):
        vec[pc] = -M[i][fc]
    return vec


def derive_facets(vertices: Sequence[Sequence[int]], keys: Sequence[str]) -> list[Facet]:
    """Facets of a full-dimensional polytope given by its vertices.

    Every facet is spanned by ``d`` affinely independent vertices, so try all
    d-subsets, take the hyperplane through them and keep it when all other
    vertices fall on one side.
    """
    d = len(vertices[0])
    facets = set()
    for subset in itertools.combinations(vertices, d):
        # w @ v - beta = 0 for every v in the subset; unknowns (w, beta).
        rows = [[Fraction(x) for x in v] + [Fraction(-1)] for v in subset]
        vec = _nullspace_vector(rows)
        if vec is None:
            continue
        w, beta = vec[:-1], vec[-1]
        if not any(w):
            continue
        side = [sum(wi * vi for wi, vi in zip(w, v)) - beta for v in vertices]
        if all(s <= 0 for s in side):
            pass
        elif all(s >= 0 for s in side):
            w, beta = [-x for x in w], -beta
        else:
            continue
        scale = math.lcm(*(x.denominator for x in [*w, beta]))
        ints = [int(x * scale) for x in [*w, beta]]
        g = math.gcd(*ints)
        ints = [x // g for x in ints]
        facets.add((tuple(ints[:-1]), ints[-1]))
    return [Facet(c, b, tuple(keys)) for c, b in sorted(facets, reverse=True)]


@lru_cache(maxsize=None)
def polytope_facets(mode: str) -> tuple[Facet, ...]:
    _, _, keys = _atoms(mode)
    return tuple(derive_facets(correlation_vertices(mode), keys))


@dataclass
class FeasibilityResult:
    feasible: bool
    point: CorrelationPoint
    witness: dict | None = None
    violated_facets: list = field(default_factory=list)
    residual: Fraction = Fraction(0)
    bounds: tuple | None = None

    def reproduces(self) -> dict:
        """Correlations implied by the witness, as exact fractions."""
        if self.witness is None:
            return {}
        atoms, products, keys = _atoms(self.point.mode)
        return {
            k: sum((p * products[k](*atom) for atom, p in self.witness.items()), Fraction(0))
            for k in keys
        }

    def to_dict(self) -> dict:
        d = {
            "mode": self.point.mode,
            "point": {k: float(v) for k, v in self.point.values.items()},
            "feasible": self.feasible,
            "residual": float(self.residual),
            "violated_facets": [
                {**f.to_dict(), "slack": float(s)} for f, s in self.violated_facets
            ],
        }
        if self.witness is not None:
            d["witness"] = {
                "".join("+" if s > 0 else "-" for s in atom): {
                    "probability": float(p),
                    "exact": f"{p.numerator}/{p.denominator}",
                }
                for atom, p in self.witness.items()
                if p
            }
        if self.bounds is not None:
            d["bounds"] = [float(x) for x in self.bounds]
        return d


def _lp_rows(mode: str, keys: Sequence[str]):
    atoms, _, _ = _atoms(mode)
    return [[1] * len(atoms)] + [product_row(mode, k) for k in keys]


def _tolerance(values) -> Fraction:
    return Fraction(0) if all(isinstance(v, Rational) for v in values) else Fraction(FLOAT_TOL)


def _feasible(point: CorrelationPoint) -> FeasibilityResult:
    mode = point.mode
    atoms = _atoms(mode)[0]
    vec = point.vector()
    res = simplex.solve(_lp_rows(mode, point.keys), [1, *vec], tol=_tolerance(vec))
    if res.feasible:
        witness = dict(zip(atoms, res.x))
        return FeasibilityResult(True, point, witness, [], res.residual)
    exact_vec = [Fraction(v) for v in vec]
    violated = []
    for f in polytope_facets(mode):
        s = f.slack(exact_vec)
        if s < 0:
            violated.append((f, s))
    return FeasibilityResult(False, point, None, violated, res.residual)


def feasible_triple(point) -> FeasibilityResult:
    """Decide whether (<ab>, <ab'>, <bb'>) is realizable by ±1 streams."""
    point = CorrelationPoint.coerce(point, "triple")
    if point.mode != "triple":
        raise ValueError("feasible_triple needs an (ab, ab', bb') point")
    return _feasible(point)


def feasible_quadruple(point) -> FeasibilityResult:
    """Decide whether (<ab>, <ab'>, <a'b>, <a'b'>) is realizable."""
    point = CorrelationPoint.coerce(point, "quadruple")
    if point.mode != "quadruple":
        raise ValueError("feasible_quadruple needs an (ab, ab', a'b, a'b') point")
    return _feasible(point)


@dataclass
class Bounds:
    lower: Fraction
    upper: Fraction
    lower_witness: dict
    upper_witness: dict

    def __iter__(self):
        return iter((self.lower, self.upper))

    def __getitem__(self, i):
        return (self.lower, self.upper)[i]

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return float(self.lower) - tol <= value <= float(self.upper) + tol

    def to_dict(self) -> dict:
        return {
            "min": float(self.lower),
            "max": float(self.upper),
            "min_exact": f"{self.lower.numerator}/{self.lower.denominator}",
            "max_exact": f"{self.upper.numerator}/{self.upper.denominator}",
        }


def _bounds(mode: str, given: dict, target: str) -> Bounds:
    for k, v in given.items():
        if not -1 <= v <= 1:
            raise ValueError(f"correlation {k}={v!r} outside [-1, 1]")
    atoms = _atoms(mode)[0]
    keys = list(given)
    A = _lp_rows(mode, keys)
    b = [1, *given.values()]
    tol = _tolerance(given.values())
    obj = product_row(mode, target)
    lo = simplex.solve(A, b, obj, tol=tol)
    if not lo.feasible:
        raise InfeasibleError(f"no ±1 streams realize {given} (residual {float(lo.residual):.3g})")
    hi = simplex.solve(A, b, [-c for c in obj], tol=tol)
    return Bounds(lo.objective, -hi.objective, dict(zip(atoms, lo.x)), dict(zip(atoms, hi.x)))


def third_correlation_bounds(cab, cabp) -> Bounds:
    """Range of <bb'> over all realizable triples with the given <ab>, <ab'>."""
    return _bounds("triple", {"ab": cab, "ab'": cabp}, "bb'")


def induced_fourth_report(cab, cabp, capb) -> Bounds:
    """Range of <a'b'> over realizable quadruples extending the three inputs.

    Raises InfeasibleError when the three values alone are unrealizable.
    """
    return _bounds("quadruple", {"ab": cab, "ab'": cabp, "a'b": capb}, "a'b'")


@dataclass
class ViolationMap:
    mode: str
    resolution_deg: float
    angles_deg: np.ndarray      # (rows, k) in label order, theta_a fixed at 0
    angle_names: tuple[str, ...]
    correlations: np.ndarray    # (rows, 3 or 4)
    inequality_lhs: np.ndarray
    inequality_slack: np.ndarray
    facet_slack: np.ndarray     # min over derived facets; >= -tol means feasible

    @property
    def inequality_satisfied(self) -> np.ndarray:
        return self.inequality_slack >= -1e-12

    @property
    def feasible(self) -> np.ndarray:
        return self.facet_slack >= -FLOAT_TOL

    def __len__(self) -> int:
        return int(self.angles_deg.shape[0])

    def find(self, angles_deg: Sequence[float]) -> int:
        hit = np.flatnonzero(np.all(np.isclose(self.angles_deg, np.asarray(angles_deg, float)), axis=1))
        if hit.size == 0:
            raise KeyError(f"grid has no point {tuple(angles_deg)}")
        return int(hit[0])

    def summary(self) -> dict:
        i = int(np.argmax(self.inequality_lhs))
        j = int(np.argmin(self.inequality_slack))
        return {
            "mode": self.mode,
            "resolution_deg": self.resolution_deg,
            "points": len(self),
            "violations": int(np.count_nonzero(~self.inequality_satisfied)),
            "infeasible": int(np.count_nonzero(~self.feasible)),
            "max_lhs": float(self.inequality_lhs[i]),
            "argmax_lhs_deg": dict(zip(self.angle_names, self.angles_deg[i].tolist())),
            "min_slack": float(self.inequality_slack[j]),
            "argmin_slack_deg": dict(zip(self.angle_names, self.angles_deg[j].tolist())),
        }

    def write_csv(self, path) -> None:
        keys = TRIPLE_KEYS if self.mode == "triple" else QUAD_KEYS
        names = [f"{n}_deg" for n in self.angle_names] + [f"corr_{k}" for k in keys]
        names += ["inequality_lhs", "inequality_slack", "inequality_satisfied", "feasible", "facet_slack"]
        cols = [self.angles_deg[:, i] for i in range(self.angles_deg.shape[1])]
        cols += [self.correlations[:, i] for i in range(self.correlations.shape[1])]
        cols += [self.inequality_lhs, self.inequality_slack,
                 self.inequality_satisfied.astype(int), self.feasible.astype(int), self.facet_slack]
        fmt = ["%.10g"] * len(self.angle_names) + ["%.12f"] * len(keys) + ["%.12f", "%.12f", "%d", "%d", "%.12f"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(names) + "\n")
            np.savetxt(fh, np.column_stack(cols), fmt=fmt, delimiter=",")


def _grid(resolution_deg: float) -> np.ndarray:
    if not resolution_deg >= 2:
        raise ValueError(f"resolution must be >= 2 degrees, got {resolution_deg!r}")
    steps = 360.0 / resolution_deg
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError(f"resolution {resolution_deg} does not divide 360 degrees")
    return np.arange(int(round(steps))) * float(resolution_deg)


def angle_violation_scan(resolution_deg: float, mode: str = "triple") -> ViolationMap:
    """Evaluate the -cos correlation set over a grid of detector angles.

    theta_a is pinned at 0: every correlation depends on angle differences
    only. Triple mode sweeps (b, b'); quadruple mode sweeps (a', b, b').
    """
    _atoms(mode)
    g = np.deg2rad(_grid(resolution_deg))
    if mode == "triple":
        tb, tbp = (x.ravel() for x in np.meshgrid(g, g, indexing="ij"))
        ta = np.zeros_like(tb)
        corr = np.column_stack([-np.cos(ta - tb), -np.cos(ta - tbp), -np.cos(tb - tbp)])
        lhs = np.abs(corr[:, 1] - corr[:, 0])
        rhs = 1.0 - corr[:, 2]
        angles = np.column_stack([ta, tb, tbp])
        names = ("a", "b", "b'")
    else:
        tap, tb, tbp = (x.ravel() for x in np.meshgrid(g, g, g, indexing="ij"))
        ta = np.zeros_like(tb)
        corr = np.column_stack([-np.cos(ta - tb), -np.cos(ta - tbp), -np.cos(tap - tb), -np.cos(tap - tbp)])
        lhs = np.abs(corr[:, 0] + corr[:, 1]) + np.abs(corr[:, 2] - corr[:, 3])
        rhs = np.full_like(lhs, 2.0)
        angles = np.column_stack([ta, tap, tb, tbp])
        names = ("a", "a'", "b", "b'")
    facets = polytope_facets(mode)
    W = np.array([f.coeffs for f in facets], dtype=float)
    beta = np.array([f.bound for f in facets], dtype=float)
    facet_slack = (beta[None, :] - corr @ W.T).min(axis=1)
    result = ViolationMap(mode, float(resolution_deg), np.rad2deg(angles), names, corr, lhs, rhs - lhs, facet_slack)
    # Covered facets: a violated inequality must mean infeasible.
    bad = ~result.inequality_satisfied & result.feasible
    if bad.any():
        raise AssertionError(f"{int(bad.sum())} grid points violate the inequality yet pass the facet test")
    return result


def negative_cosine_point(mode: str, *angles: float) -> CorrelationPoint:
    """-cos correlations for (a, b, b') or (a, a', b, b') angles in radians."""
    if mode == "triple":
        ta, tb, tbp = angles
        vals = (negative_cosine(ta, tb), negative_cosine(ta, tbp), negative_cosine(tb, tbp))
    else:
        ta, tap, tb, tbp = angles
        vals = (negative_cosine(ta, tb), negative_cosine(ta, tbp), negative_cosine(tap, tb), negative_cosine(tap, tbp))
    return CorrelationPoint.coerce(tuple(max(-1.0, min(1.0, v)) for v in vals), mode)


def inequality_verdict(point: CorrelationPoint):
    """Inequality evaluation matching the point's mode."""
    v = [float(x) for x in point.vector()]
    return eval_inequality3(*v) if point.mode == "triple" else eval_inequality4(*v)
