"""Linear programming kernel.

Everything in the package that needs an LP (variable bounds, support
functions, membership, emptiness, redundancy certificates) goes through
:func:`solve`. Two backends sit behind the same problem type:

``simplex``
    A dense two-phase primal simplex with Bland's anti-cycling rule.
    Equality rows are handled natively, variable bounds may be infinite,
    ties are broken by lowest index, and the dual vector is recovered from
    the final basis. Deterministic: the same problem yields bit-identical
    output across runs.

``highs``
    scipy's HiGHS wrapper, used for instances whose dense tableau would be
    disproportionate. Also deterministic for a fixed scipy build.

``auto`` picks between the two from the problem dimensions alone, so the
choice is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import InfeasibleModelError, NumericalError, UnboundedProblemError

if TYPE_CHECKING:  # pragma: no cover - import only for annotations
    from .sets import HPolytope

EPS_FEAS = 1e-8
PIVOT_TOL = 1e-10

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Dense tableaus above this many cells go to HiGHS under method="auto".
_AUTO_CELL_LIMIT = 8_000

_MAX_PIVOTS_BASE = 5_000


def _as_matrix(a, n: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, n), dtype=float)
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


def _as_vector(b, m: int) -> np.ndarray:
    if b is None:
        return np.zeros(0, dtype=float)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape != (m,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({m},)")
    return b


@dataclass(frozen=True)
class LpProblem:
    """min c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub.

    Bounds may be +-inf. Arrays are normalised to float64 on construction.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = c.shape[0]
        A_ub = _as_matrix(self.A_ub, n)
        A_eq = _as_matrix(self.A_eq, n)
        b_ub = _as_vector(self.b_ub, A_ub.shape[0])
        b_eq = _as_vector(self.b_eq, A_eq.shape[0])
        lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        if A_ub.shape[1] != n or A_eq.shape[1] != n or lb.shape != (n,) or ub.shape != (n,):
            raise ValueError("inconsistent problem dimensions")
        if not np.all(np.isfinite(c)):
            raise ValueError("objective coefficients must be finite")
        for name, val in (("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq), ("b_eq", b_eq)):
            if name != "c" and val.size and not np.all(np.isfinite(val)):
                raise ValueError(f"{name} must be finite")
        for arr in (c, A_ub, b_ub, A_eq, b_eq, lb, ub):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_ub", b_ub)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m_ub(self) -> int:
        return self.A_ub.shape[0]

    @property
    def m_eq(self) -> int:
        return self.A_eq.shape[0]


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome.

    ``x`` and the objective values are meaningful only when ``status`` is
    ``optimal``. ``dual_objective`` is recovered from the final basis (or the
    backend's multipliers) and equals the primal objective at an optimum up
    to roundoff, which the tests use as a strong-duality check.
    """

    status: str
    x: np.ndarray | None
    objective_value: float | None
    dual_objective: float | None = None
    iterations: int = 0
    method: str = "simplex"

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


def _auto_method(problem: LpProblem) -> str:
    two_sided = int(np.sum(np.isfinite(problem.lb) & np.isfinite(problem.ub)))
    rows = problem.m_ub + problem.m_eq + two_sided
    cells = (rows + 1) * (problem.n + rows + 1)
    return "simplex" if cells <= _AUTO_CELL_LIMIT else "highs"


def solve(problem: LpProblem, method: str = "auto") -> LpSolution:
    """Solve an :class:`LpProblem`.

    Parameters
    ----------
    problem:
        The LP in inequality/equality/bounds form.
    method:
        "simplex", "highs", or "auto" (default) which dispatches on problem
        size so small instances keep the in-house deterministic path.

    Returns
    -------
    LpSolution
        With ``status`` one of "optimal", "infeasible", "unbounded".

    Raises
    ------
    NumericalError
        If the backend fails to converge or reports a numerical breakdown.
    """
    if method == "auto":
        method = _auto_method(problem)
    if method == "simplex":
        return _solve_simplex(problem)
    if method == "highs":
        return _solve_highs(problem)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# dense two-phase simplex


class _Standardized:
    """Standard-form image of an LpProblem: min c'y, E y = f, y >= 0."""

    __slots__ = ("E", "f", "c", "shift", "col_var", "col_sign", "offset", "n_orig",
                 "slack_of_row")

    def __init__(self, p: LpProblem):
        n = p.n
        lb, ub = p.lb, p.ub
        if np.any(lb > ub):
            raise InfeasibleModelError("crossed variable bounds")

        col_var: list[int] = []
        col_sign: list[float] = []
        offset = np.zeros(n)
        upper_rows: list[tuple[int, float]] = []  # (column, width) for two-sided vars
        for i in range(n):
            lo, hi = lb[i], ub[i]
            if np.isfinite(lo) and np.isfinite(hi):
                if lo == hi:
                    offset[i] = lo  # fixed variable: folded into constants, no column
                    continue
                offset[i] = lo
                upper_rows.append((len(col_var), hi - lo))
                col_var.append(i)
                col_sign.append(1.0)
            elif np.isfinite(lo):
                offset[i] = lo
                col_var.append(i)
                col_sign.append(1.0)
            elif np.isfinite(hi):
                offset[i] = hi
                col_var.append(i)
                col_sign.append(-1.0)
            else:
                col_var.extend((i, i))
                col_sign.extend((1.0, -1.0))

        n_cols = len(col_var)
        var_cols = np.asarray(col_var, dtype=int)
        signs = np.asarray(col_sign)

        def substitute(A: np.ndarray) -> np.ndarray:
            return A[:, var_cols] * signs if A.size else np.zeros((A.shape[0], n_cols))

        m_ub, m_eq, m_up = p.m_ub, p.m_eq, len(upper_rows)
        m = m_ub + m_eq + m_up
        n_slack = m_ub + m_up
        E = np.zeros((m, n_cols + n_slack))
        f = np.zeros(m)
        E[:m_ub, :n_cols] = substitute(p.A_ub)
        f[:m_ub] = p.b_ub - p.A_ub @ offset
        E[m_ub:m_ub + m_eq, :n_cols] = substitute(p.A_eq)
        f[m_ub:m_ub + m_eq] = p.b_eq - p.A_eq @ offset
        for j, (col, width) in enumerate(upper_rows):
            r = m_ub + m_eq + j
            E[r, col] = 1.0
            f[r] = width
        # one slack per inequality row, in row order
        slack_of_row = np.full(m, -1, dtype=int)
        for j in range(m_ub):
            E[j, n_cols + j] = 1.0
            slack_of_row[j] = n_cols + j
        for j in range(m_up):
            r = m_ub + m_eq + j
            E[r, n_cols + m_ub + j] = 1.0
            slack_of_row[r] = n_cols + m_ub + j

        c = np.zeros(n_cols + n_slack)
        c[:n_cols] = p.c[var_cols] * signs

        self.E, self.f, self.c = E, f, c
        self.shift = float(p.c @ offset)
        self.col_var, self.col_sign = var_cols, signs
        self.offset = offset
        self.n_orig = n
        self.slack_of_row = slack_of_row

    def recover(self, y: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        np.add.at(x, self.col_var, self.col_sign * y[: len(self.col_var)])
        return x


def _pivot(T: np.ndarray, basis: np.ndarray, r: int, c: int) -> None:
    prow = T[r] / T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, prow)
    T[r] = prow
    basis[r] = c


def _bland_iterate(T: np.ndarray, basis: np.ndarray, allowed: np.ndarray,
                   max_pivots: int) -> tuple[str, int]:
    """Run Bland-rule pivots until optimal or unbounded.

    ``allowed`` masks the columns eligible to enter. Returns the outcome and
    the pivot count. The loop is finite by Bland's theorem; the hard cap only
    guards against float-degenerate stalls.
    """
    m = T.shape[0] - 1
    pivots = 0
    while True:
        obj = T[-1, :-1]
        candidates = np.nonzero(allowed & (obj < -PIVOT_TOL))[0]
        if candidates.size == 0:
            return OPTIMAL, pivots
        c = int(candidates[0])  # lowest index enters
        col = T[:m, c]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            return UNBOUNDED, pivots
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        tied = np.nonzero(ratios <= best + PIVOT_TOL * (1.0 + abs(best)))[0]
        r = int(tied[np.argmin(basis[tied])])  # lowest basic index leaves
        _pivot(T, basis, r, c)
        pivots += 1
        if pivots > max_pivots:
            raise NumericalError(f"simplex exceeded {max_pivots} pivots")


def _solve_simplex(problem: LpProblem) -> LpSolution:
    try:
        std = _Standardized(problem)
    except InfeasibleModelError:
        return LpSolution(INFEASIBLE, None, None, method="simplex")

    E, f, c = std.E, std.f, std.c
    m, n_cols = E.shape
    flip = f < 0.0
    E = np.where(flip[:, None], -E, E)
    f = np.abs(f)

    # Tableau: structural+slack columns, one artificial per row, rhs.
    T = np.zeros((m + 1, n_cols + m + 1))
    T[:m, :n_cols] = E
    T[:m, n_cols:n_cols + m] = np.eye(m)
    T[:m, -1] = f
    basis = np.arange(n_cols, n_cols + m)

    # Slack columns whose +1 survived the sign flip seed the basis directly.
    # The artificial identity block is left intact: those columns never enter,
    # and keeping them exact makes the final tableau carry B^-1, which is what
    # the dual extraction below reads off.
    for i in range(m):
        s = std.slack_of_row[i]
        if s >= 0 and not flip[i]:
            basis[i] = s

    max_pivots = _MAX_PIVOTS_BASE + 50 * (m + n_cols)
    artificial = basis >= n_cols
    iterations = 0
    if np.any(artificial):
        # Phase 1: drive the artificial variables to zero.
        T[-1, :] = 0.0
        for i in np.nonzero(artificial)[0]:
            T[-1] -= T[i]
        allowed = np.ones(n_cols + m, dtype=bool)
        allowed[n_cols:] = False
        status, piv1 = _bland_iterate(T, basis, allowed, max_pivots)
        iterations += piv1
        if status != OPTIMAL:  # pragma: no cover - phase 1 is always bounded
            raise NumericalError("phase 1 terminated abnormally")
        if -T[-1, -1] > EPS_FEAS * (1.0 + np.abs(f).max(initial=0.0)):
            return LpSolution(INFEASIBLE, None, None, iterations=iterations, method="simplex")
        # Pivot leftover artificials out on any usable structural column.
        for i in range(m):
            if basis[i] >= n_cols:
                row = np.abs(T[i, :n_cols])
                j = int(np.argmax(row))
                if row[j] > PIVOT_TOL:
                    _pivot(T, basis, i, j)
                    iterations += 1

    # Phase 2 objective, priced out against the current basis.
    T[-1, :] = 0.0
    T[-1, :n_cols] = c
    for i in range(m):
        if basis[i] < n_cols and c[basis[i]] != 0.0:
            T[-1] -= c[basis[i]] * T[i]
    allowed = np.ones(n_cols + m, dtype=bool)
    allowed[n_cols:] = False
    status, piv2 = _bland_iterate(T, basis, allowed, max_pivots)
    iterations += piv2
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None, iterations=iterations, method="simplex")

    y_std = np.zeros(n_cols)
    rows = basis < n_cols
    y_std[basis[rows]] = T[:m, -1][rows]
    x = std.recover(y_std)
    # Duals: the reduced cost of artificial i equals -y_i after phase 2.
    duals = -T[-1, n_cols:n_cols + m]
    dual_obj = float(duals @ f) + std.shift
    obj = float(problem.c @ x)
    return LpSolution(OPTIMAL, x, obj, dual_objective=dual_obj,
                      iterations=iterations, method="simplex")


# ---------------------------------------------------------------------------
# HiGHS backend


def _solve_highs(problem: LpProblem) -> LpSolution:
    from scipy.optimize import linprog
    import scipy.sparse as sp

    n = problem.n
    A_ub = problem.A_ub if problem.m_ub else None
    A_eq = problem.A_eq if problem.m_eq else None
    if A_ub is not None and A_ub.size > 200_000:
        A_ub = sp.csr_matrix(A_ub)
    if A_eq is not None and A_eq.size > 200_000:
        A_eq = sp.csr_matrix(A_eq)
    bounds = list(zip(problem.lb, problem.ub))
    res = linprog(problem.c, A_ub=A_ub, b_ub=problem.b_ub if problem.m_ub else None,
                  A_eq=A_eq, b_eq=problem.b_eq if problem.m_eq else None,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, None, method="highs")
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, None, method="highs")
    if res.status != 0:
        raise NumericalError(f"HiGHS failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    dual = None
    if res.get("ineqlin") is not None:
        dual = 0.0
        if problem.m_ub:
            dual += float(problem.b_ub @ res.ineqlin.marginals)
        if problem.m_eq:
            dual += float(problem.b_eq @ res.eqlin.marginals)
        lo_m = np.asarray(res.lower.marginals)
        up_m = np.asarray(res.upper.marginals)
        fin_lo = np.isfinite(problem.lb)
        fin_up = np.isfinite(problem.ub)
        dual += float(problem.lb[fin_lo] @ lo_m[fin_lo]) + float(problem.ub[fin_up] @ up_m[fin_up])
    it = int(np.ravel(res.nit)[0]) if np.size(res.nit) else 0
    return LpSolution(OPTIMAL, x, float(res.fun), dual_objective=dual,
                      iterations=it, method="highs")


# ---------------------------------------------------------------------------
# polytope helpers


def polytope_support(poly: "HPolytope", direction, method: str = "auto") -> tuple[float, np.ndarray]:
    """Support value and maximiser of ``direction`` over an H-polytope.

    Raises :class:`InfeasibleModelError` for an empty polytope and
    :class:`UnboundedProblemError` when the direction is unbounded.
    """
    d = np.asarray(direction, dtype=float)
    prob = LpProblem(c=-d, A_ub=poly.A_ineq, b_ub=poly.b_ineq,
                     A_eq=poly.A_eq if poly.m_eq else None,
                     b_eq=poly.b_eq if poly.m_eq else None)
    sol = solve(prob, method=method)
    if sol.status == INFEASIBLE:
        raise InfeasibleModelError("polytope is empty")
    if sol.status == UNBOUNDED:
        raise UnboundedProblemError("support direction is unbounded")
    return -sol.objective_value, sol.x


def variable_bounds(poly: "HPolytope", i: int, method: str = "auto") -> tuple[float, float]:
    """Exact [min, max] of coordinate ``i`` over an H-polytope via two LPs.

    Raises :class:`UnboundedProblemError` naming the coordinate if either LP
    is unbounded, and :class:`InfeasibleModelError` if the polytope is empty.
    """
    e = np.zeros(poly.n)
    e[i] = 1.0
    try:
        hi, _ = polytope_support(poly, e, method=method)
        lo, _ = polytope_support(poly, -e, method=method)
    except UnboundedProblemError as exc:
        raise UnboundedProblemError(f"coordinate {i} is unbounded") from exc
    return -lo, hi
