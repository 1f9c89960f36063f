"""Conversion of affine feasible sets into constrained zonotopes.

The pipeline encloses the feasible polytope in an axis-aligned box, lifts the
box to a zonotope with one generator per coordinate, and then re-imposes
every polytope row on that zonotope: equality rows become constraint rows in
generator space, inequality rows additionally spend one fresh generator each.
The result represents the polytope exactly, and projecting it onto the
coupling coordinates is a cheap matrix product instead of an exponential
variable elimination.

Rows whose tag is listed in ``ConversionConfig.dynamic_tags`` are withheld
from the heavy offline pass and applied by the online pass, so callers can
re-run only the part that depends on refreshed forecast data. Every per-row
coefficient vector is computed against the initial box generators with a
dense dot product; later columns are structurally zero, which keeps a
single-row refresh ``update_with_constraints`` exactly consistent with a
rebuild.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import lp
from .errors import EmptyIntersectionError, InfeasibleModelError, SchemaError
from .grid import GridCase, build_feasible_set, coupling_projection_matrix, structural_bounds
from .sets import (
    ConstrainedZonotope,
    Halfspace,
    HPolytope,
    Hyperplane,
    halfspace_is_cutting,
    intersect_halfspace,
    intersect_hyperplane,
    linear_map,
    support,
)

_DM_TOL = 1e-9  # matches the halfspace-intersection emptiness tolerance


@dataclass(frozen=True)
class ConversionConfig:
    """Knobs for the polytope-to-CZ conversion.

    bounds_mode "exact" computes the enclosing box with two LPs per
    coordinate; "structural" uses caller-provided bounds (for grid cases,
    the interval-arithmetic bounds derived from the case data).
    ``enlarge_factor`` widens the box about its center, demonstrating that
    the conversion result does not depend on box tightness.
    ``dynamic_tags`` names row tags deferred to the online pass.
    ``prune_redundant`` skips rows that cannot cut the initial box.
    ``parallel`` computes per-row coefficients in a thread pool; results are
    identical to the sequential pass bit for bit.
    """

    bounds_mode: str = "exact"
    enlarge_factor: float = 1.0
    dynamic_tags: frozenset[str] = frozenset()
    prune_redundant: bool = False
    parallel: bool = False
    workers: int = 4
    lp_method: str = "auto"

    def __post_init__(self):
        if self.bounds_mode not in ("exact", "structural"):
            raise SchemaError(f"unknown bounds_mode {self.bounds_mode!r}")
        if self.enlarge_factor < 1.0:
            raise SchemaError("enlarge_factor must be >= 1 to keep the box enclosing")
        if self.workers < 1:
            raise SchemaError("workers must be >= 1")
        object.__setattr__(self, "dynamic_tags", frozenset(self.dynamic_tags))


@dataclass
class ConversionReport:
    """Wall-clock and size figures for one conversion."""

    offline_seconds: float = 0.0
    online_seconds: float = 0.0
    projection_seconds: float = 0.0
    n_g: int = 0
    m: int = 0
    rows_skipped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _exact_bounds(poly: HPolytope, method: str) -> tuple[np.ndarray, np.ndarray]:
    lb = np.empty(poly.n)
    ub = np.empty(poly.n)
    for i in range(poly.n):
        lb[i], ub[i] = lp.variable_bounds(poly, i, method=method)
    return lb, ub


def _row_coefficients(A: np.ndarray, G0: np.ndarray, rows: np.ndarray,
                      out: np.ndarray, sums: np.ndarray) -> None:
    """Dense per-row products against the box generators.

    Each row is one dot product so that refreshing a single row later costs
    exactly one of these units of work.
    """
    for r in rows:
        g = A[r] @ G0
        out[r] = g
        sums[r] = np.sum(np.abs(g))


def polytope_to_cz(poly: HPolytope, cfg: ConversionConfig | None = None,
                   base_bounds: tuple[np.ndarray, np.ndarray] | None = None,
                   ) -> tuple[ConstrainedZonotope, ConversionReport]:
    """Represent an H-polytope exactly as a constrained zonotope.

    Offline work covers the enclosing box and every row whose tag is not
    dynamic; dynamic rows run in the online pass. Raises
    EmptyIntersectionError when a row certifies the polytope empty, and
    InfeasibleModelError / UnboundedProblemError from the exact-bounds LPs.
    """
    cfg = cfg or ConversionConfig()
    report = ConversionReport()
    n = poly.n

    t0 = time.perf_counter()
    if cfg.bounds_mode == "structural":
        if base_bounds is None:
            raise SchemaError("bounds_mode 'structural' needs precomputed bounds")
        lb, ub = np.asarray(base_bounds[0], float), np.asarray(base_bounds[1], float)
        if lb.shape != (n,) or ub.shape != (n,):
            raise SchemaError("bounds length does not match the polytope dimension")
    else:
        lb, ub = _exact_bounds(poly, cfg.lp_method)
    if cfg.enlarge_factor != 1.0:
        center = 0.5 * (ub + lb)
        half = 0.5 * (ub - lb) * cfg.enlarge_factor
        lb, ub = center - half, center + half

    c0 = 0.5 * (ub + lb)
    G0 = np.diag(0.5 * (ub - lb))

    eq_tags = poly.eq_tags or ("",) * poly.m_eq
    iq_tags = poly.ineq_tags or ("",) * poly.m_ineq
    eq_static = np.array([t not in cfg.dynamic_tags for t in eq_tags], dtype=bool)
    iq_static = np.array([t not in cfg.dynamic_tags for t in iq_tags], dtype=bool)

    state = _apply_rows(poly, c0, G0, eq_static, iq_static, cfg, report)
    report.offline_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    cz = _apply_rows(poly, c0, G0, ~eq_static, ~iq_static, cfg, report, state=state)
    report.online_seconds = time.perf_counter() - t1

    report.n_g = cz.n_g
    report.m = cz.m
    return cz, report


def _apply_rows(poly: HPolytope, c0: np.ndarray, G0: np.ndarray,
                eq_mask: np.ndarray, iq_mask: np.ndarray,
                cfg: ConversionConfig, report: ConversionReport,
                state: ConstrainedZonotope | None = None) -> ConstrainedZonotope:
    """Impose the selected polytope rows on the running CZ.

    Equality rows append constraint rows; inequality rows also append one
    generator column each. Row coefficients are taken against the initial
    box generators G0 (all later columns are zero there), so the computation
    is independent of how many rows were applied before.
    """
    n = poly.n
    eq_idx = np.flatnonzero(eq_mask)
    iq_idx = np.flatnonzero(iq_mask)
    m_eq, m_iq = eq_idx.size, iq_idx.size
    if state is not None and m_eq == 0 and m_iq == 0:
        return state

    prev_rows = 0 if state is None else state.A.shape[0]
    prev_ng = n if state is None else state.n_g

    HG_eq = np.zeros((m_eq, n))
    sums_eq = np.zeros(m_eq)  # unused for equalities, kept for symmetry
    HG_iq = np.zeros((m_iq, n))
    sums_iq = np.zeros(m_iq)

    if m_eq:
        _compute_block(poly.A_eq[eq_idx], G0, HG_eq, sums_eq, cfg)
    if m_iq:
        _compute_block(poly.A_ineq[iq_idx], G0, HG_iq, sums_iq, cfg)

    rhs_eq = poly.b_eq[eq_idx] - poly.A_eq[eq_idx] @ c0 if m_eq else np.zeros(0)
    zeta = poly.b_ineq[iq_idx] if m_iq else np.zeros(0)
    hc = poly.A_ineq[iq_idx] @ c0 if m_iq else np.zeros(0)

    keep = np.ones(m_iq, dtype=bool)
    dm = np.zeros(m_iq)
    for j in range(m_iq):
        d = zeta[j] - hc[j] + sums_iq[j]
        scale = max(1.0, abs(zeta[j]), abs(hc[j]))
        if d < -_DM_TOL * scale:
            raise EmptyIntersectionError(
                f"inequality row {int(iq_idx[j])} certifies an empty feasible set")
        dm[j] = max(d, 0.0)
        if cfg.prune_redundant and d >= 2.0 * sums_iq[j]:
            # the whole box satisfies this row; it cannot cut
            keep[j] = False
            report.rows_skipped += 1
    kept = np.flatnonzero(keep)
    k_new = kept.size

    new_rows = m_eq + k_new
    new_cols = prev_ng + k_new
    A = np.zeros((prev_rows + new_rows, new_cols))
    b = np.zeros(prev_rows + new_rows)
    if state is not None and prev_rows:
        A[:prev_rows, :prev_ng] = state.A
        b[:prev_rows] = state.b
    r = prev_rows
    for j in range(m_eq):
        A[r, :n] = HG_eq[j]
        b[r] = rhs_eq[j]
        r += 1
    for col, j in enumerate(kept):
        A[r, :n] = HG_iq[j]
        A[r, prev_ng + col] = 0.5 * dm[j]
        b[r] = zeta[j] - hc[j] - 0.5 * dm[j]
        r += 1

    G = np.zeros((n, new_cols))
    if state is None:
        G[:, :n] = G0
    else:
        G[:, :prev_ng] = state.G
    return ConstrainedZonotope(c0, G, A, b)


def _compute_block(A: np.ndarray, G0: np.ndarray, out: np.ndarray,
                   sums: np.ndarray, cfg: ConversionConfig) -> None:
    rows = np.arange(A.shape[0])
    if cfg.parallel and cfg.workers > 1 and rows.size > 1:
        chunks = np.array_split(rows, cfg.workers)
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_row_coefficients, A, G0, chunk, out, sums)
                       for chunk in chunks if chunk.size]
            for fut in futures:
                fut.result()
    else:
        _row_coefficients(A, G0, rows, out, sums)


def compute_for(case: GridCase, N: int | None = None, mode: str = "lossless",
                selection="root_pq", cfg: ConversionConfig | None = None,
                ) -> tuple[ConstrainedZonotope, ConversionReport]:
    """Feasible operation region of a case over the coupling quantities.

    Builds the multi-period feasible set, converts it to a constrained
    zonotope (structural case bounds by default), and projects it onto the
    selected coordinates. Model assembly is not counted in the report
    timings; the offline figure covers bounds and static rows, the online
    figure dynamic rows, and the projection figure the final linear map.
    """
    if N is not None and N != case.horizon:
        case = case.with_horizon(N)
    cfg = cfg or ConversionConfig(bounds_mode="structural")
    poly, idx = build_feasible_set(case, mode)
    M = coupling_projection_matrix(case, idx, selection)

    base = None
    bounds_seconds = 0.0
    if cfg.bounds_mode == "structural":
        t0 = time.perf_counter()
        base = structural_bounds(case, idx, mode)
        bounds_seconds = time.perf_counter() - t0

    cz_full, report = polytope_to_cz(poly, cfg, base_bounds=base)
    report.offline_seconds += bounds_seconds

    t1 = time.perf_counter()
    cz = linear_map(cz_full, M)
    report.projection_seconds = time.perf_counter() - t1
    return cz, report


def update_with_constraints(cz: ConstrainedZonotope,
                            rows: list[Halfspace | Hyperplane],
                            prune: bool = True,
                            method: str = "auto",
                            ) -> tuple[ConstrainedZonotope, float]:
    """Intersect an already-built CZ with refreshed constraint rows.

    Halfspaces spend one generator each; hyperplanes only add a constraint
    row. With ``prune`` on, halfspaces that do not cut the current set are
    dropped (one support LP each). Returns the new CZ and the wall-clock
    seconds spent.
    """
    t0 = time.perf_counter()
    out = cz
    for row in rows:
        if isinstance(row, Halfspace):
            if prune and not halfspace_is_cutting(out, row, method=method):
                continue
            out = intersect_halfspace(out, row)
        elif isinstance(row, Hyperplane):
            out = intersect_hyperplane(out, row.h, row.zeta)
        else:
            raise SchemaError("update rows must be Halfspace or Hyperplane")
    return out, time.perf_counter() - t0


def conditional_for(cz_for: ConstrainedZonotope, value: float,
                    coord: int = 0, keep: tuple[int, ...] = (1, 2),
                    method: str = "auto") -> ConstrainedZonotope:
    """Slice a region at a fixed value of one coordinate.

    Intersects with the hyperplane ``x[coord] = value`` and projects onto
    ``keep``. Raises InfeasibleModelError when the value lies outside the
    coordinate's feasible interval (reported in the message).
    """
    n = cz_for.dim
    if not 0 <= coord < n:
        raise SchemaError(f"coordinate {coord} out of range for dimension {n}")
    if any(not 0 <= k < n for k in keep):
        raise SchemaError("kept coordinate out of range")
    e = np.zeros(n)
    e[coord] = 1.0
    hi, _ = support(cz_for, e, method=method)
    lo_neg, _ = support(cz_for, -e, method=method)
    lo = -lo_neg
    tol = 1e-9 * max(1.0, abs(hi), abs(lo))
    if not lo - tol <= value <= hi + tol:
        raise InfeasibleModelError(
            f"conditioning value {value} outside feasible interval [{lo}, {hi}]")
    sliced = intersect_hyperplane(cz_for, e, float(value))
    M = np.zeros((len(keep), n))
    for r, k in enumerate(keep):
        M[r, k] = 1.0
    return linear_map(sliced, M)


def hull_2d(cz: ConstrainedZonotope, n_dirs: int = 720,
            method: str = "auto") -> np.ndarray:
    """Vertices (counterclockwise) of a planar CZ via support sampling.

    Collects the support witnesses of ``n_dirs`` evenly spaced directions,
    deduplicates them, and returns their convex hull by the monotone-chain
    construction. Exact for polytopes whenever every facet normal falls
    between two sampled directions that share its witness vertex; 720
    directions resolve half-degree features.
    """
    if cz.dim != 2:
        raise SchemaError(f"hull_2d expects a planar set, got dimension {cz.dim}")
    pts = []
    for i in range(n_dirs):
        theta = 2.0 * np.pi * i / n_dirs
        d = np.array([np.cos(theta), np.sin(theta)])
        _, witness = support(cz, d, method=method)
        pts.append(witness)
    pts = np.array(pts)

    uniq: list[np.ndarray] = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) < 1e-7 for q in uniq):
            uniq.append(p)
    pts = np.array(sorted(uniq, key=lambda p: (p[0], p[1])))
    if pts.shape[0] <= 2:
        return pts

    def half(points):
        chain: list[np.ndarray] = []
        for p in points:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 1e-14:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of an ordered vertex list."""
    v = np.asarray(vertices, dtype=float)
    if v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
