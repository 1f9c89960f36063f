"""Exact polytope projection by variable elimination.

This is the reference path the zonotope pipeline is validated against. It
computes the orthogonal projection of an H-polytope onto a subset of its
coordinates exactly: equality rows are removed first by Gaussian
substitution, then the remaining unwanted coordinates are eliminated one at
a time by pairing every positive-coefficient inequality with every
negative-coefficient one. Row counts grow fast, so an LP-based redundancy
prune runs between eliminations and a hard row cap aborts runaway cases.
"""

from __future__ import annotations

import numpy as np

from . import lp
from .errors import RowCapError, SchemaError
from .sets import HPolytope

_COEF_TOL = 1e-11
DEFAULT_ROW_CAP = 2_000_000


def eliminate_equalities(poly: HPolytope, protect: tuple[int, ...] = ()) -> tuple[HPolytope, np.ndarray]:
    """Substitute equality rows away, never pivoting on protected columns.

    Returns an inequality-only polytope over the surviving coordinates and
    the index array mapping its columns back to the original ones. Pivots
    take the largest-magnitude eligible coefficient, column-eliminating one
    variable per equality row. Rows that end up with no eligible pivot but
    touch only protected columns are kept as paired inequalities instead.
    """
    A_iq = poly.A_ineq.copy()
    b_iq = poly.b_ineq.copy()
    A_eq = poly.A_eq.copy()
    b_eq = poly.b_eq.copy()
    n = poly.n
    protected = np.zeros(n, dtype=bool)
    protected[list(protect)] = True
    alive = np.ones(n, dtype=bool)
    extra_rows: list[np.ndarray] = []
    extra_rhs: list[float] = []

    row_used = np.zeros(A_eq.shape[0], dtype=bool)
    for _ in range(A_eq.shape[0]):
        # pick the largest eligible pivot over all unused rows
        masked = np.abs(A_eq) * (alive & ~protected)
        masked[row_used] = 0.0
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        if masked[i, j] <= _COEF_TOL:
            break
        row_used[i] = True
        piv = A_eq[i] / A_eq[i, j]
        rhs = b_eq[i] / A_eq[i, j]
        # substitute x_j = rhs - sum_{k != j} piv_k x_k everywhere
        for M, r in ((A_eq, b_eq), (A_iq, b_iq)):
            col = M[:, j].copy()
            if np.any(col):
                M -= np.outer(col, piv)
                r -= col * rhs
        alive[j] = False

    for i in range(A_eq.shape[0]):
        if row_used[i]:
            continue
        row = A_eq[i] * alive
        if np.max(np.abs(row)) <= _COEF_TOL:
            if abs(b_eq[i]) > 1e-7:
                from .errors import InfeasibleModelError
                raise InfeasibleModelError("equality rows are inconsistent")
            continue
        # equality over protected coordinates only: keep as two inequalities
        extra_rows.extend([row, -row])
        extra_rhs.extend([b_eq[i], -b_eq[i]])

    keep_cols = np.flatnonzero(alive)
    rows = [A_iq[:, keep_cols]]
    rhs = [b_iq]
    if extra_rows:
        rows.append(np.array(extra_rows)[:, keep_cols])
        rhs.append(np.array(extra_rhs))
    out = HPolytope(
        A_ineq=np.vstack(rows),
        b_ineq=np.concatenate(rhs),
        A_eq=np.zeros((0, keep_cols.size)),
        b_eq=np.zeros(0),
    )
    return out, keep_cols


def _drop_trivial(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop all-zero rows; detect 0 <= b with b < 0 as infeasibility."""
    norms = np.max(np.abs(A), axis=1) if A.size else np.zeros(A.shape[0])
    zero = norms <= _COEF_TOL
    if np.any(zero & (b < -1e-9)):
        from .errors import InfeasibleModelError
        raise InfeasibleModelError("projection target is empty")
    keep = ~zero
    return A[keep], b[keep]


def redundancy_prune(A: np.ndarray, b: np.ndarray, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Remove inequalities implied by the rest of the system.

    Each row is tested by maximizing its left side subject to every other
    surviving row, with the tested row relaxed by one unit so the LP stays
    bounded. A row is kept only when the optimum exceeds its bound.
    """
    A, b = _drop_trivial(np.asarray(A, dtype=float), np.asarray(b, dtype=float))
    m = A.shape[0]
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        rows = keep.copy()
        b_test = b.copy()
        b_test[i] += 1.0
        prob = lp.LpProblem(
            c=-A[i],
            A_ub=A[rows],
            b_ub=b_test[rows],
            lb=np.full(A.shape[1], -np.inf),
            ub=np.full(A.shape[1], np.inf),
        )
        sol = lp.solve(prob, method=method)
        if sol.status == lp.UNBOUNDED:
            continue
        if sol.status == lp.OPTIMAL and -sol.objective_value > b[i] + 1e-9:
            continue
        keep[i] = False
    return A[keep], b[keep]


def _eliminate_one(A: np.ndarray, b: np.ndarray, col: int) -> tuple[np.ndarray, np.ndarray]:
    """Project out one coordinate by pairing opposite-sign rows."""
    c = A[:, col]
    pos = np.flatnonzero(c > _COEF_TOL)
    neg = np.flatnonzero(c < -_COEF_TOL)
    none = np.flatnonzero(np.abs(c) <= _COEF_TOL)
    cols = np.ones(A.shape[1], dtype=bool)
    cols[col] = False
    out_rows = [A[none][:, cols]]
    out_rhs = [b[none]]
    if pos.size and neg.size:
        # combine: row_p / c_p - row_n / c_n, one row per (p, n) pair
        Ap = A[pos][:, cols] / c[pos, None]
        bp = b[pos] / c[pos]
        An = A[neg][:, cols] / (-c[neg, None])
        bn = b[neg] / (-c[neg])
        comb = Ap[:, None, :] + An[None, :, :]
        rhs = bp[:, None] + bn[None, :]
        out_rows.append(comb.reshape(-1, A.shape[1] - 1))
        out_rhs.append(rhs.ravel())
    return np.vstack(out_rows), np.concatenate(out_rhs)


def fourier_motzkin_project(poly: HPolytope, keep: list[int] | np.ndarray,
                            prune_every: int = 1,
                            row_cap: int = DEFAULT_ROW_CAP,
                            method: str = "auto") -> HPolytope:
    """Exact projection of ``poly`` onto the coordinates in ``keep``.

    ``keep`` lists original coordinate indices; their order defines the
    output coordinate order. Equality rows are substituted out first.
    ``prune_every`` controls how many eliminations run between LP-based
    redundancy prunes; ``row_cap`` aborts with RowCapError when an
    intermediate system would exceed it.
    """
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise SchemaError("projection coordinates repeat")
    if not keep:
        raise SchemaError("projection needs at least one coordinate")
    if min(keep) < 0 or max(keep) >= poly.n:
        raise SchemaError("projection coordinate out of range")

    reduced, cols = eliminate_equalities(poly, protect=tuple(keep))
    col_of = {orig: i for i, orig in enumerate(cols)}
    A, b = _drop_trivial(reduced.A_ineq, reduced.b_ineq)

    target = [col_of[k] for k in keep]
    drop = [i for i in range(cols.size) if i not in set(target)]
    # eliminate the cheapest coordinate first: fewest pairings
    since_prune = 0
    while drop:
        best = min(drop, key=lambda j: (np.sum(A[:, j] > _COEF_TOL) *
                                        np.sum(A[:, j] < -_COEF_TOL)))
        pos = int(np.sum(A[:, best] > _COEF_TOL))
        neg = int(np.sum(A[:, best] < -_COEF_TOL))
        predicted = A.shape[0] - pos - neg + pos * neg
        if predicted > row_cap:
            raise RowCapError(
                f"elimination would produce {predicted} rows (cap {row_cap})")
        A, b = _eliminate_one(A, b, best)
        A, b = _drop_trivial(A, b)
        # renumber the bookkeeping after removing one column
        drop = [j - (j > best) for j in drop if j != best]
        target = [j - (j > best) for j in target]
        since_prune += 1
        if drop and since_prune >= prune_every:
            A, b = redundancy_prune(A, b, method=method)
            since_prune = 0

    A, b = redundancy_prune(A, b, method=method)
    # reorder surviving columns so output coordinate r is keep[r]
    perm = np.array(target, dtype=int)
    return HPolytope(A_ineq=A[:, perm], b_ineq=b,
                     A_eq=np.zeros((0, len(perm))), b_eq=np.zeros(0))


def project_onto(poly: HPolytope, M: np.ndarray, **kwargs) -> HPolytope:
    """Project onto the row space of a selection matrix M (rows of M must be
    distinct unit vectors; general linear maps are not supported here)."""
    M = np.asarray(M, dtype=float)
    keep = []
    for r in range(M.shape[0]):
        nz = np.flatnonzero(M[r])
        if nz.size != 1 or M[r, nz[0]] != 1.0:
            raise SchemaError("projection matrix rows must be unit vectors")
        keep.append(int(nz[0]))
    return fourier_motzkin_project(poly, keep, **kwargs)


def vertices_2d(poly: HPolytope) -> np.ndarray:
    """Vertex list (counterclockwise) of a bounded 2-D H-polytope.

    Intersects every pair of facet lines, keeps points satisfying all rows,
    and orders them by angle around the centroid. Duplicates within 1e-9 are
    merged.
    """
    if poly.n != 2 or poly.m_eq:
        raise SchemaError("vertex enumeration expects a 2-D inequality system")
    A, b = _drop_trivial(poly.A_ineq, poly.b_ineq)
    pts = []
    m = A.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            M = np.array([A[i], A[j]])
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            if abs(det) < 1e-12:
                continue
            pt = np.linalg.solve(M, np.array([b[i], b[j]]))
            if np.all(A @ pt <= b + 1e-7 * (1 + np.abs(b))):
                pts.append(pt)
    if not pts:
        return np.zeros((0, 2))
    pts = np.array(pts)
    merged: list[np.ndarray] = []
    for pt in pts:
        if not any(np.max(np.abs(pt - q)) < 1e-9 for q in merged):
            merged.append(pt)
    pts = np.array(merged)
    center = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    return pts[np.argsort(angles)]


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of an ordered polygon vertex list."""
    v = np.asarray(vertices, dtype=float)
    if v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
