"""Command-line interface.

Subcommands:

* ``for``      compute a feasible operation region and write it as a
               single-line JSON document (plus a figure next to ``--out``)
* ``compare``  validate the region against the exact projection baseline
* ``bench``    tabulate pipeline phase times across horizons (CSV or JSON)
* ``slice``    planar cross-section of a stored region at fixed values
* ``convert``  turn a raw H-polytope document into a constrained zonotope

Exit codes: 0 success, 2 invalid input or schema violation, 3 infeasible or
unbounded model, 4 numerical failure, 5 baseline mismatch beyond tolerance,
6 projection row cap exceeded, 1 anything else. Errors are emitted as a
single JSON line on stderr. Figures render with the Agg backend by default
whenever ``--out`` is given; ``--no-plot`` disables them. Timing fields in
the output documents vary run to run; all other fields are deterministic.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import lp
from .aggregate import (
    ConversionConfig,
    compute_for,
    hull_2d,
    polygon_area,
    polytope_to_cz,
    update_with_constraints,
)
from .baseline import fourier_motzkin_project, vertices_2d
from .baseline import DEFAULT_ROW_CAP
from .errors import FlexczError, MismatchError, SchemaError
from .grid import (
    EQ_TAGS,
    INEQ_TAGS,
    MODES,
    VariableIndex,
    build_feasible_set,
    load_case,
    resolve_selection,
    split_name_list,
    structural_bounds,
)
from .sets import (
    ConstrainedZonotope,
    Halfspace,
    HPolytope,
    from_dict,
    intersect_hyperplane,
    linear_map,
    support,
    to_json,
)

_ERROR_NAMES = {2: "schema", 3: "infeasible", 4: "numerical",
                5: "mismatch", 6: "row_cap"}
_KNOWN_TAGS = set(EQ_TAGS) | set(INEQ_TAGS)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# document IO


def _load_doc(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return doc


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text + "\n")
    except OSError as exc:
        raise FlexczError(f"cannot write {path}: {exc}") from exc


def _region_from_doc(doc: dict) -> tuple[ConstrainedZonotope, list[str]]:
    """Accept a region document or a bare CZ document."""
    from .schemas import validate_document

    schema = doc.get("schema")
    if schema == "flexcz-for/1":
        validate_document(doc, "for")
        cz = from_dict(doc["cz"])
        return cz, list(doc["selection"])
    if schema == "flexcz-cz/1":
        validate_document(doc, "cz")
        cz = from_dict(doc)
        return cz, [f"x{i + 1}" for i in range(cz.dim)]
    raise SchemaError(f"expected a region or CZ document, got schema {schema!r}")


def _poly_from_doc(doc: dict) -> tuple[HPolytope, list[str]]:
    from .schemas import validate_document

    validate_document(doc, "poly")
    n = int(doc["dim"])
    b_iq = np.asarray(doc["b_ineq"], dtype=float)
    try:
        A_iq = np.asarray(doc["A_ineq"], dtype=float).reshape(b_iq.shape[0], n)
        b_eq = np.asarray(doc.get("b_eq", []), dtype=float)
        A_eq = np.asarray(doc.get("A_eq", []), dtype=float).reshape(b_eq.shape[0], n)
    except ValueError as exc:
        raise SchemaError(f"polytope document has inconsistent shapes: {exc}") from exc
    names = list(doc.get("names") or (f"x{i + 1}" for i in range(n)))
    if len(names) != n:
        raise SchemaError("polytope names do not match its dimension")
    return HPolytope(A_iq, b_iq, A_eq, b_eq), names


def _report_json(report) -> str:
    return ("{" +
            f'"offline_seconds": {_fmt(report.offline_seconds)}, '
            f'"online_seconds": {_fmt(report.online_seconds)}, '
            f'"projection_seconds": {_fmt(report.projection_seconds)}, '
            f'"n_g": {report.n_g}, "m": {report.m}, '
            f'"rows_skipped": {report.rows_skipped}' + "}")


def _for_document(case, mode: str, names: list[str], cz, report) -> str:
    parts = [
        '"schema": "flexcz-for/1"',
        f'"case": {json.dumps(case.name)}',
        f'"mode": "{mode}"',
        f'"horizon": {case.horizon}',
        f'"dt_hours": {_fmt(case.dt_hours)}',
        f'"selection": {json.dumps(names)}',
        f'"cz": {to_json(cz)}',
        f'"report": {_report_json(report)}',
    ]
    return "{" + ", ".join(parts) + "}"


def _slice_document(axes: list[str], fixed: dict[str, float],
                    vertices: np.ndarray, area: float) -> str:
    fixed_s = "{" + ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in fixed.items()) + "}"
    verts_s = "[" + ", ".join(f"[{_fmt(p[0])}, {_fmt(p[1])}]" for p in vertices) + "]"
    parts = [
        '"schema": "flexcz-slice/1"',
        f'"axes": {json.dumps(axes)}',
        f'"fixed": {fixed_s}',
        f'"vertices": {verts_s}',
        f'"area": {_fmt(area)}',
    ]
    return "{" + ", ".join(parts) + "}"


# ---------------------------------------------------------------------------
# shared option handling


def _add_case_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("case", help="path to a flexcz-case/1 JSON document")
    p.add_argument("--horizon", "-N", type=int, default=None,
                   help="override the document's horizon")
    p.add_argument("--mode", choices=MODES, default="lossless",
                   help="how squared branch currents are handled")
    p.add_argument("--select", default="root_pq",
                   help="coupling selection: root_pq, root_p1p2q2, or names")


def _add_conversion_options(p: argparse.ArgumentParser, default_bounds: str) -> None:
    p.add_argument("--bounds", choices=("structural", "exact"),
                   default=default_bounds, help="enclosing box source")
    p.add_argument("--enlarge", type=float, default=1.0,
                   help="box widening factor (>= 1)")
    p.add_argument("--dynamic", default="",
                   help="comma list of row tags applied in the online pass")
    p.add_argument("--prune-redundant", action="store_true",
                   help="skip rows that cannot cut the enclosing box")
    p.add_argument("--parallel", action="store_true",
                   help="compute row coefficients in a thread pool")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--lp-method", choices=("auto", "simplex", "highs"),
                   default="auto")


def _conversion_config(args) -> ConversionConfig:
    tags = frozenset(t.strip() for t in args.dynamic.split(",") if t.strip())
    unknown = tags - _KNOWN_TAGS
    if unknown:
        raise SchemaError(f"unknown row tags {sorted(unknown)}; "
                          f"known tags: {sorted(_KNOWN_TAGS)}")
    return ConversionConfig(
        bounds_mode=args.bounds,
        enlarge_factor=args.enlarge,
        dynamic_tags=tags,
        prune_redundant=args.prune_redundant,
        parallel=args.parallel,
        workers=args.workers,
        lp_method=args.lp_method,
    )


def _prepare_case(args):
    case = load_case(args.case)
    if args.horizon is not None:
        case = case.with_horizon(args.horizon)
    return case


def _coordinate_pairs(names: list[str]) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(0, len(names) - 1, 2)]


def _pair_hull(cz, i: int, j: int, n_dirs: int, method: str) -> np.ndarray:
    M = np.zeros((2, cz.dim))
    M[0, i] = 1.0
    M[1, j] = 1.0
    return hull_2d(linear_map(cz, M), n_dirs=n_dirs, method=method)


# ---------------------------------------------------------------------------
# subcommands


def cmd_for(args) -> int:
    case = _prepare_case(args)
    cfg = _conversion_config(args)
    idx = VariableIndex(case)
    names = resolve_selection(case, idx, args.select)
    cz, report = compute_for(case, None, args.mode, names, cfg)
    doc = _for_document(case, args.mode, names, cz, report)
    if args.out is None:
        print(doc)
        return 0
    out = Path(args.out)
    _write_text(out, doc)
    if not args.no_plot:
        from . import plots
        panels = []
        for i, j in _coordinate_pairs(names):
            verts = _pair_hull(cz, i, j, args.plot_dirs, args.lp_method)
            panels.append((names[i], names[j], verts))
        if panels:
            plots.pair_grid_figure(panels, out.with_suffix(".png"),
                                   suptitle=f"{case.name} horizon {case.horizon} ({args.mode})")
    return 0


def cmd_convert(args) -> int:
    doc = _load_doc(args.polytope)
    poly, _names = _poly_from_doc(doc)
    cfg = ConversionConfig(bounds_mode=args.bounds, enlarge_factor=args.enlarge,
                           prune_redundant=args.prune_redundant,
                           parallel=args.parallel, workers=args.workers,
                           lp_method=args.lp_method)
    cz, _report = polytope_to_cz(poly, cfg)
    text = to_json(cz)
    if args.out is None:
        print(text)
    else:
        _write_text(Path(args.out), text)
    return 0


def _mismatch_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic probe directions: evenly spaced in 2-D, otherwise the
    coordinate axes plus seeded unit Gaussians."""
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    rng = np.random.default_rng(0)
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    rand = rng.standard_normal((max(count - 2 * dim, 0), dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([axes, rand])


def cmd_compare(args) -> int:
    case = _prepare_case(args)
    cfg = _conversion_config(args)
    idx = VariableIndex(case)
    names = resolve_selection(case, idx, args.select)
    cz, report = compute_for(case, None, args.mode, names, cfg)

    poly, idx = build_feasible_set(case, args.mode)
    keep = [idx.coord(name) for name in names]
    t0 = time.perf_counter()
    fm = fourier_motzkin_project(poly, keep, row_cap=args.row_cap,
                                 method=args.lp_method)
    fm_seconds = time.perf_counter() - t0

    worst = 0.0
    for d in _mismatch_directions(len(names), args.dirs):
        s_cz, _ = support(cz, d, method=args.lp_method)
        s_fm, _ = lp.polytope_support(fm, d, method=args.lp_method)
        worst = max(worst, abs(s_cz - s_fm) / (1.0 + abs(s_fm)))
    within = worst <= args.tol

    cz_seconds = report.offline_seconds + report.online_seconds + report.projection_seconds
    out_doc = ("{" + ", ".join([
        f'"case": {json.dumps(case.name)}',
        f'"mode": "{args.mode}"',
        f'"horizon": {case.horizon}',
        f'"selection": {json.dumps(names)}',
        f'"directions": {args.dirs}',
        f'"max_rel_mismatch": {_fmt(worst)}',
        f'"tol": {_fmt(args.tol)}',
        f'"within_tol": {"true" if within else "false"}',
        f'"cz_seconds": {_fmt(cz_seconds)}',
        f'"fm_seconds": {_fmt(fm_seconds)}',
        f'"fm_rows": {fm.m_ineq}',
    ]) + "}")
    print(out_doc)
    if args.out is not None:
        out = Path(args.out)
        _write_text(out, out_doc)
        if not args.no_plot and len(names) == 2:
            from . import plots
            cz_hull = hull_2d(cz, n_dirs=args.plot_dirs, method=args.lp_method)
            plots.region_figure(
                [("constrained zonotope", cz_hull), ("exact projection", vertices_2d(fm))],
                names[0], names[1], out.with_suffix(".png"),
                title=f"{case.name} horizon {case.horizon}")
    if not within:
        raise MismatchError(
            f"support mismatch {worst:.3e} exceeds tolerance {args.tol:.3e}")
    return 0


_BENCH_COLUMNS = ("horizon", "offline_s", "online_s", "projection_s", "total_s",
                  "insert_s", "n_g", "m", "rows_skipped", "fm_s", "fm_rows",
                  "speedup_total", "speedup_online")


def cmd_bench(args) -> int:
    case0 = load_case(args.case)
    try:
        horizons = [int(h) for h in str(args.horizons).split(",") if h.strip()]
    except ValueError as exc:
        raise SchemaError(f"invalid horizon list {args.horizons!r}") from exc
    if not horizons or any(h < 1 for h in horizons):
        raise SchemaError(f"invalid horizon list {args.horizons!r}")
    if args.repeats < 1:
        raise SchemaError("repeats must be at least 1")
    cfg = _conversion_config(args)

    rows = []
    for N in horizons:
        case = case0.with_horizon(N)
        idx = VariableIndex(case)
        names = resolve_selection(case, idx, args.select)
        poly, idx = build_feasible_set(case, args.mode)
        base = None
        if cfg.bounds_mode == "structural":
            base = structural_bounds(case, idx, args.mode)
        M = np.zeros((len(names), idx.n))
        for r, name in enumerate(names):
            M[r, idx.coord(name)] = 1.0

        offline, online, projection, inserts = [], [], [], []
        cz_full = None
        for _ in range(args.repeats):
            cz_full, rep = polytope_to_cz(poly, cfg, base_bounds=base)
            t0 = time.perf_counter()
            linear_map(cz_full, M)
            projection.append(time.perf_counter() - t0)
            offline.append(rep.offline_seconds)
            online.append(rep.online_seconds)
        if case.generators:
            gen = case.generators[0]
            from .grid import _series
            h = np.zeros(idx.n)
            h[idx.pg(0, 1)] = 1.0
            zeta = 0.5 * _series(gen.f_max, N, "f_max")[0]
            for _ in range(args.repeats):
                _, secs = update_with_constraints(cz_full, [Halfspace(h, zeta)],
                                                  prune=False)
                inserts.append(secs)
        fm_s = fm_rows = None
        if args.fm:
            keep = [idx.coord(name) for name in names]
            t0 = time.perf_counter()
            fm = fourier_motzkin_project(poly, keep, row_cap=args.row_cap,
                                         method=args.lp_method)
            fm_s = time.perf_counter() - t0
            fm_rows = fm.m_ineq

        mean = lambda xs: float(np.mean(xs)) if xs else None
        row = {
            "horizon": N,
            "offline_s": mean(offline),
            "online_s": mean(online),
            "projection_s": mean(projection),
            "insert_s": mean(inserts),
            "n_g": cz_full.n_g,
            "m": cz_full.m,
            "rows_skipped": rep.rows_skipped,
            "fm_s": fm_s,
            "fm_rows": fm_rows,
        }
        row["total_s"] = row["offline_s"] + row["online_s"] + row["projection_s"]
        if fm_s is not None:
            row["speedup_total"] = fm_s / row["total_s"]
            row["speedup_online"] = fm_s / (row["online_s"] + row["projection_s"])
        else:
            row["speedup_total"] = row["speedup_online"] = None
        rows.append(row)

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, int):
            return str(v)
        return _fmt(v)

    csv_lines = [",".join(_BENCH_COLUMNS)]
    csv_lines += [",".join(cell(row[c]) for c in _BENCH_COLUMNS) for row in rows]
    csv_text = "\n".join(csv_lines)

    if args.out is None:
        print(csv_text)
        return 0
    out = Path(args.out)
    if out.suffix == ".json":
        names0 = resolve_selection(case0.with_horizon(horizons[0]),
                                   VariableIndex(case0.with_horizon(horizons[0])),
                                   args.select)
        row_objs = []
        for row in rows:
            fields = [f'"horizon": {row["horizon"]}',
                      f'"cz_offline_seconds": {_fmt(row["offline_s"])}',
                      f'"cz_online_seconds": {_fmt(row["online_s"])}',
                      f'"cz_total_seconds": {_fmt(row["total_s"])}']
            if row["insert_s"] is not None:
                fields.append(f'"insert_seconds": {_fmt(row["insert_s"])}')
            if row["fm_s"] is not None:
                fields.append(f'"fm_seconds": {_fmt(row["fm_s"])}')
                fields.append(f'"fm_rows": {row["fm_rows"]}')
                fields.append(f'"speedup_total": {_fmt(row["speedup_total"])}')
                fields.append(f'"speedup_online": {_fmt(row["speedup_online"])}')
            row_objs.append("{" + ", ".join(fields) + "}")
        doc = ("{" + ", ".join([
            '"schema": "flexcz-bench/1"',
            f'"case": {json.dumps(case0.name)}',
            f'"mode": "{args.mode}"',
            f'"selection": {json.dumps(names0)}',
            f'"repeats": {args.repeats}',
            f'"rows": [{", ".join(row_objs)}]',
        ]) + "}")
        _write_text(out, doc)
    else:
        _write_text(out, csv_text)
    if not args.no_plot:
        from . import plots
        series = {
            "offline": [row["offline_s"] for row in rows],
            "online + projection": [row["online_s"] + row["projection_s"] for row in rows],
        }
        if any(row["fm_s"] is not None for row in rows):
            series["exact projection"] = [row["fm_s"] for row in rows]
        plots.runtime_figure(horizons, series, out.with_suffix(".png"),
                             title=f"{case0.name} ({args.mode})")
    return 0


def cmd_slice(args) -> int:
    doc = _load_doc(args.region)
    cz, names = _region_from_doc(doc)
    coord = {name: i for i, name in enumerate(names)}

    fixed: dict[str, float] = {}
    if args.at:
        for item in split_name_list(args.at):
            if "=" not in item:
                raise SchemaError(f"--at entries look like name=value, got {item!r}")
            name, _, value = item.partition("=")
            name = name.strip()
            if name not in coord:
                raise SchemaError(f"unknown coordinate {name!r}; have {names}")
            if name in fixed:
                raise SchemaError(f"coordinate {name!r} fixed twice")
            try:
                fixed[name] = float(value)
            except ValueError as exc:
                raise SchemaError(f"bad value for {name!r}: {value!r}") from exc

    if args.axes:
        axes = split_name_list(args.axes)
    else:
        axes = [n for n in names if n not in fixed][:2]
    if len(axes) != 2:
        raise SchemaError("slice needs exactly two axes")
    for name in axes:
        if name not in coord:
            raise SchemaError(f"unknown axis {name!r}; have {names}")
        if name in fixed:
            raise SchemaError(f"axis {name!r} is also fixed")

    sub = cz
    from .errors import InfeasibleModelError
    for name, value in fixed.items():
        e = np.zeros(sub.dim)
        e[coord[name]] = 1.0
        hi, _ = support(sub, e, method=args.lp_method)
        lo, _ = support(sub, -e, method=args.lp_method)
        lo = -lo
        tol = 1e-9 * max(1.0, abs(hi), abs(lo))
        if not lo - tol <= value <= hi + tol:
            raise InfeasibleModelError(
                f"{name} = {value} outside feasible interval [{lo}, {hi}]")
        sub = intersect_hyperplane(sub, e, value)
    M = np.zeros((2, cz.dim))
    M[0, coord[axes[0]]] = 1.0
    M[1, coord[axes[1]]] = 1.0
    plane = linear_map(sub, M)
    verts = hull_2d(plane, n_dirs=args.dirs, method=args.lp_method)
    area = polygon_area(verts)

    out_doc = _slice_document(axes, fixed, verts, area)
    if args.out is None:
        print(out_doc)
        return 0
    out = Path(args.out)
    _write_text(out, out_doc)
    if not args.no_plot:
        from . import plots
        title = ", ".join(f"{k} = {v:g}" for k, v in fixed.items()) or None
        plots.region_figure([("cross-section", verts)], axes[0], axes[1],
                            out.with_suffix(".png"), title=title)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexcz",
        description="Multi-period feasible operation regions for radial grids "
                    "as constrained zonotopes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("for", help="compute a feasible operation region")
    _add_case_options(p)
    _add_conversion_options(p, default_bounds="structural")
    p.add_argument("--out", default=None, help="write the region document here")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--plot-dirs", type=int, default=72,
                   help="support directions per figure panel")
    p.set_defaults(func=cmd_for)

    p = sub.add_parser("compare", help="validate against the exact projection")
    _add_case_options(p)
    _add_conversion_options(p, default_bounds="structural")
    p.add_argument("--dirs", type=int, default=360,
                   help="number of probe directions")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="maximum allowed relative support mismatch")
    p.add_argument("--row-cap", type=int, default=DEFAULT_ROW_CAP)
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--plot-dirs", type=int, default=360)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time the pipeline phases per horizon")
    p.add_argument("case")
    p.add_argument("--horizons", default="2,3,4", help="comma list of horizons")
    p.add_argument("--mode", choices=MODES, default="lossless")
    p.add_argument("--select", default="root_pq")
    _add_conversion_options(p, default_bounds="structural")
    p.add_argument("--repeats", type=int, default=10,
                   help="repeats per horizon; means are reported")
    p.add_argument("--fm", action="store_true",
                   help="also run the exact projection baseline")
    p.add_argument("--row-cap", type=int, default=DEFAULT_ROW_CAP)
    p.add_argument("--out", default=None, help=".csv or .json target")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("slice", help="planar cross-section of a stored region")
    p.add_argument("region", help="flexcz-for/1 or flexcz-cz/1 document")
    p.add_argument("--at", default="", help="fixed values, e.g. 'p_{1,2}(1)=0.05'")
    p.add_argument("--axes", default="", help="two coordinate names")
    p.add_argument("--dirs", type=int, default=720)
    p.add_argument("--lp-method", choices=("auto", "simplex", "highs"),
                   default="auto")
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("convert", help="H-polytope document to constrained zonotope")
    p.add_argument("polytope", help="flexcz-poly/1 document")
    p.add_argument("--bounds", choices=("exact",), default="exact")
    p.add_argument("--enlarge", type=float, default=1.0)
    p.add_argument("--prune-redundant", action="store_true")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--lp-method", choices=("auto", "simplex", "highs"),
                   default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except FlexczError as exc:
        name = _ERROR_NAMES.get(exc.exit_code, "error")
        print(json.dumps({"error": name, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
