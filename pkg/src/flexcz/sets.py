"""Set representations: H-polytopes, zonotopes, constrained zonotopes.

A constrained zonotope (CZ) is the affine image of a constrained unit box,

    Z = { c + G a  :  A a = b,  ||a||_inf <= 1 },

with center ``c`` (n,), generators ``G`` (n, n_g), and constraint rows
``A`` (m, n_g), ``b`` (m,). CZs are closed under linear maps, halfspace
intersection, and hyperplane intersection, which is what the conversion
pipeline builds on. Support evaluation, membership, and emptiness all reduce
to small LPs over the generator coefficients ``a``.

All set types are immutable values: construction adopts float64 arrays
in place and marks them read-only (other inputs are converted first), so
building a set from large arrays costs no extra copy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import EmptyIntersectionError, InfeasibleModelError, SchemaError

CZ_SCHEMA_ID = "flexcz-cz/1"

# Slack of a halfspace against the interval hull may be a hair negative from
# roundoff even when the cut is tight; anything below this is a real bounds bug.
_DM_TOL = 1e-9


def _freeze(*arrays: np.ndarray) -> tuple[np.ndarray, ...]:
    out = []
    for a in arrays:
        arr = np.asarray(a, dtype=float)
        if arr.base is not None:  # a view: detach it from the shared buffer
            arr = arr.copy()
        arr.setflags(write=False)
        out.append(arr)
    return tuple(out)


@dataclass(frozen=True)
class HPolytope:
    """{ x : A_ineq x <= b_ineq, A_eq x = b_eq } with optional row tags.

    Tags classify rows for the conversion pipeline (e.g. which inequality
    rows are forecast-dependent); they carry no geometric meaning.
    """

    A_ineq: np.ndarray
    b_ineq: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    ineq_tags: tuple[str, ...] | None = None
    eq_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        A, b, Ae, be = _freeze(self.A_ineq, self.b_ineq, self.A_eq, self.b_eq)
        if A.ndim != 2 or Ae.ndim != 2:
            raise ValueError("constraint matrices must be 2-D")
        if A.shape[0] != b.shape[0] or Ae.shape[0] != be.shape[0]:
            raise ValueError("row counts of A and b disagree")
        if A.shape[0] and Ae.shape[0] and A.shape[1] != Ae.shape[1]:
            raise ValueError("inequality and equality blocks disagree on dimension")
        if self.ineq_tags is not None and len(self.ineq_tags) != A.shape[0]:
            raise ValueError("one tag per inequality row required")
        if self.eq_tags is not None and len(self.eq_tags) != Ae.shape[0]:
            raise ValueError("one tag per equality row required")
        object.__setattr__(self, "A_ineq", A)
        object.__setattr__(self, "b_ineq", b)
        object.__setattr__(self, "A_eq", Ae)
        object.__setattr__(self, "b_eq", be)

    @property
    def n(self) -> int:
        return self.A_ineq.shape[1] if self.A_ineq.size else self.A_eq.shape[1]

    @property
    def m_ineq(self) -> int:
        return self.A_ineq.shape[0]

    @property
    def m_eq(self) -> int:
        return self.A_eq.shape[0]

    @staticmethod
    def from_inequalities(A, b, tags=None) -> "HPolytope":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return HPolytope(A, b, np.zeros((0, A.shape[1])), np.zeros(0), ineq_tags=tags)


@dataclass(frozen=True)
class Zonotope:
    """Affine image of the unit box: { c + G a : ||a||_inf <= 1 }."""

    c: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        c, G = _freeze(self.c, self.G)
        if c.ndim != 1 or G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise ValueError("center and generators disagree on dimension")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "G", G)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def n_g(self) -> int:
        return self.G.shape[1]

    def support(self, direction) -> float:
        d = np.asarray(direction, dtype=float)
        return float(d @ self.c + np.abs(d @ self.G).sum())


@dataclass(frozen=True)
class ConstrainedZonotope:
    """{ c + G a : A a = b, ||a||_inf <= 1 }."""

    c: np.ndarray
    G: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c, G, A, b = _freeze(self.c, self.G, self.A, self.b)
        if c.ndim != 1 or G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise ValueError("center and generators disagree on dimension")
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise ValueError("constraint rows and rhs disagree")
        if A.shape[0] and A.shape[1] != G.shape[1]:
            raise ValueError("constraints must act on the generator coefficients")
        if A.shape[0] == 0 and A.shape[1] != G.shape[1]:
            A = A.reshape(0, G.shape[1])
            A.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def n_g(self) -> int:
        return self.G.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @staticmethod
    def from_zonotope(z: Zonotope) -> "ConstrainedZonotope":
        return ConstrainedZonotope(z.c, z.G, np.zeros((0, z.n_g)), np.zeros(0))


@dataclass(frozen=True)
class Halfspace:
    """{ x : h x <= zeta }."""

    h: np.ndarray
    zeta: float

    def __post_init__(self):
        (h,) = _freeze(self.h)
        if h.ndim != 1:
            raise ValueError("normal must be a vector")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "zeta", float(self.zeta))


@dataclass(frozen=True)
class Hyperplane:
    """{ x : h x = zeta }."""

    h: np.ndarray
    zeta: float

    def __post_init__(self):
        (h,) = _freeze(self.h)
        if h.ndim != 1:
            raise ValueError("normal must be a vector")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "zeta", float(self.zeta))


# ---------------------------------------------------------------------------
# construction and intersection


def bounding_zonotope(lb, ub) -> Zonotope:
    """Axis-aligned box [lb, ub] as a zonotope.

    The center is the box midpoint and the generator matrix is diagonal with
    the half-widths. Zero-width coordinates keep their (zero) generator
    column, so the generator count always equals the dimension.
    """
    lb = np.atleast_1d(np.asarray(lb, dtype=float))
    ub = np.atleast_1d(np.asarray(ub, dtype=float))
    if lb.shape != ub.shape:
        raise ValueError("bound vectors disagree in length")
    for i in range(lb.shape[0]):
        if not (np.isfinite(lb[i]) and np.isfinite(ub[i])):
            raise ValueError(f"coordinate {i} has non-finite bounds")
        if lb[i] > ub[i]:
            raise ValueError(f"coordinate {i} has lb > ub")
    c = 0.5 * (ub + lb)
    G = np.diag(0.5 * (ub - lb))
    return Zonotope(c, G)


def intersect_halfspace(cz: ConstrainedZonotope, hs: Halfspace) -> ConstrainedZonotope:
    """Intersect a CZ with { x : h x <= zeta }.

    Adds one generator column and one constraint row. With the interval-hull
    slack d = zeta - h c + sum_i |h G_i|, the new row is
    [h G, d/2] a = zeta - h c - d/2, which encodes the halfspace exactly on
    the part of the box the CZ can reach. d < 0 means the halfspace strictly
    separates even the interval hull of the generators, which cannot happen
    when the CZ came from a valid bounding box; it is reported as an error
    rather than silently producing an empty set.
    """
    h = hs.h
    if h.shape[0] != cz.dim:
        raise ValueError("halfspace dimension mismatch")
    g_row = h @ cz.G
    hc = float(h @ cz.c)
    d = hs.zeta - hc + float(np.abs(g_row).sum())
    if d < -_DM_TOL * max(1.0, abs(hs.zeta), abs(hc)):
        raise EmptyIntersectionError(
            f"halfspace with offset {hs.zeta!r} separates the interval hull")
    d = max(d, 0.0)
    n_g, m = cz.n_g, cz.m
    A = np.zeros((m + 1, n_g + 1))
    A[:m, :n_g] = cz.A
    A[m, :n_g] = g_row
    A[m, n_g] = 0.5 * d
    b = np.append(cz.b, hs.zeta - hc - 0.5 * d)
    G = np.zeros((cz.dim, n_g + 1))
    G[:, :n_g] = cz.G
    return ConstrainedZonotope(cz.c, G, A, b)


def intersect_hyperplane(cz: ConstrainedZonotope, h, zeta: float) -> ConstrainedZonotope:
    """Intersect a CZ with { x : h x = zeta }.

    Appends the single constraint row h G a = zeta - h c; no generator column
    is added since an equality consumes rather than creates slack.
    """
    h = np.asarray(h, dtype=float)
    if h.shape[0] != cz.dim:
        raise ValueError("hyperplane dimension mismatch")
    g_row = h @ cz.G
    A = np.vstack([cz.A, g_row[None, :]]) if cz.m else g_row[None, :]
    b = np.append(cz.b, float(zeta) - float(h @ cz.c))
    return ConstrainedZonotope(cz.c, cz.G, A, b)


def linear_map(cz: ConstrainedZonotope, M) -> ConstrainedZonotope:
    """Image of a CZ under x -> M x: maps center and generators, keeps A, b.

    Coordinate selections (rows of M that are distinct unit vectors) are
    recognized and served by row indexing, which yields the same values as
    the general product without touching the full generator matrix.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != cz.dim:
        raise ValueError("map dimension mismatch")
    if M.shape[0] and np.all(np.count_nonzero(M, axis=1) == 1):
        cols = np.argmax(M != 0.0, axis=1)
        if np.all(M[np.arange(M.shape[0]), cols] == 1.0):
            return ConstrainedZonotope(cz.c[cols], cz.G[cols], cz.A, cz.b)
    return ConstrainedZonotope(M @ cz.c, M @ cz.G, cz.A, cz.b)


# ---------------------------------------------------------------------------
# LP-backed queries


def _coeff_lp(cz: ConstrainedZonotope, c_vec: np.ndarray,
              method: str = "auto") -> lp.LpSolution:
    ones = np.ones(cz.n_g)
    prob = lp.LpProblem(c=c_vec,
                        A_eq=cz.A if cz.m else None,
                        b_eq=cz.b if cz.m else None,
                        lb=-ones, ub=ones)
    return lp.solve(prob, method=method)


def support(cz: ConstrainedZonotope, direction,
            method: str = "auto") -> tuple[float, np.ndarray]:
    """Support value and a witness point: max d x over the CZ.

    Raises :class:`InfeasibleModelError` when the CZ is empty.
    """
    d = np.asarray(direction, dtype=float)
    if d.shape[0] != cz.dim:
        raise ValueError("direction dimension mismatch")
    if cz.n_g == 0:
        if cz.m and float(np.max(np.abs(cz.b), initial=0.0)) > lp.EPS_FEAS:
            raise InfeasibleModelError("constrained zonotope is empty")
        return float(d @ cz.c), cz.c.copy()
    sol = _coeff_lp(cz, -(d @ cz.G), method=method)
    if sol.status != lp.OPTIMAL:
        raise InfeasibleModelError("constrained zonotope is empty")
    alpha = sol.x
    return float(d @ cz.c) - sol.objective_value, cz.c + cz.G @ alpha


def is_empty(cz: ConstrainedZonotope, method: str = "auto") -> bool:
    """True iff no coefficient vector satisfies the constraints and the box."""
    if cz.n_g == 0:
        return bool(cz.m and float(np.max(np.abs(cz.b), initial=0.0)) > lp.EPS_FEAS)
    if cz.m == 0:
        return False
    sol = _coeff_lp(cz, np.zeros(cz.n_g), method=method)
    return sol.status != lp.OPTIMAL


def contains(cz: ConstrainedZonotope, x, tol: float = 1e-6,
             method: str = "auto") -> bool:
    """True iff some admissible coefficient vector reproduces x within tol.

    Solved as min t s.t. |c + G a - x| <= t componentwise, A a = b,
    ||a||_inf <= 1; membership holds iff the optimum is at most tol.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != cz.dim:
        raise ValueError("point dimension mismatch")
    n_g, n = cz.n_g, cz.dim
    if n_g == 0:
        ok = float(np.max(np.abs(x - cz.c), initial=0.0)) <= tol
        return ok and not is_empty(cz)
    # variables: [a (n_g), t (1)]
    c_vec = np.zeros(n_g + 1)
    c_vec[-1] = 1.0
    A_ub = np.zeros((2 * n, n_g + 1))
    A_ub[:n, :n_g] = cz.G
    A_ub[:n, -1] = -1.0
    A_ub[n:, :n_g] = -cz.G
    A_ub[n:, -1] = -1.0
    b_ub = np.concatenate([x - cz.c, cz.c - x])
    lb = np.concatenate([-np.ones(n_g), [0.0]])
    ub = np.concatenate([np.ones(n_g), [np.inf]])
    prob = lp.LpProblem(c=c_vec, A_ub=A_ub, b_ub=b_ub,
                        A_eq=np.hstack([cz.A, np.zeros((cz.m, 1))]) if cz.m else None,
                        b_eq=cz.b if cz.m else None, lb=lb, ub=ub)
    sol = lp.solve(prob, method=method)
    if sol.status != lp.OPTIMAL:
        return False
    return sol.objective_value <= tol


def halfspace_is_cutting(cz: ConstrainedZonotope, hs: Halfspace,
                         method: str = "auto") -> bool:
    """True iff { x : h x <= zeta } removes points from the CZ."""
    value, _ = support(cz, hs.h, method=method)
    return value > hs.zeta + lp.EPS_FEAS


# ---------------------------------------------------------------------------
# serialization: full double precision, bit-exact round trips


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("only finite values are serializable")
    return format(float(x), ".17g")


def _fmt_list(values) -> str:
    return "[" + ", ".join(_fmt(v) for v in np.ravel(values)) + "]"


def to_json(cz: ConstrainedZonotope) -> str:
    """Serialize a CZ to one JSON line with 17 significant digits per value.

    Matrices are flattened row-major. Seventeen significant decimal digits
    identify every IEEE double uniquely, so parsing the output reproduces the
    exact bit patterns.
    """
    parts = [
        f'"schema": "{CZ_SCHEMA_ID}"',
        f'"dim": {cz.dim}',
        f'"n_g": {cz.n_g}',
        f'"c": {_fmt_list(cz.c)}',
        f'"G": {_fmt_list(cz.G)}',
        f'"A": {_fmt_list(cz.A)}',
        f'"b": {_fmt_list(cz.b)}',
    ]
    return "{" + ", ".join(parts) + "}"


def from_json(text: str) -> ConstrainedZonotope:
    """Parse the output of :func:`to_json` back into a CZ."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return from_dict(doc)


def from_dict(doc) -> ConstrainedZonotope:
    """Build a CZ from an already-parsed document."""
    if not isinstance(doc, dict) or doc.get("schema") != CZ_SCHEMA_ID:
        raise SchemaError(f"expected schema {CZ_SCHEMA_ID!r}")
    try:
        n = int(doc["dim"])
        n_g = int(doc["n_g"])
        c = np.asarray(doc["c"], dtype=float)
        G = np.asarray(doc["G"], dtype=float).reshape(n, n_g)
        b = np.asarray(doc["b"], dtype=float)
        A = np.asarray(doc["A"], dtype=float).reshape(b.shape[0], n_g)
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"malformed CZ document: {exc}") from exc
    if c.shape != (n,) or b.shape[0] != A.shape[0]:
        raise SchemaError("CZ document has inconsistent shapes")
    return ConstrainedZonotope(c, G, A, b)
