"""Radial grid cases and their multi-period affine feasible sets.

The network model is the linearized branch-flow formulation on a tree. For
every branch from parent bus m to child bus l, with squared voltage ``nu``,
squared current magnitude ``ell``, and per-unit impedance r + jx:

    p[m,l] = sum_j p[l,j] - (pg[l] - pd[l] + ps[l]) + r * ell[m,l]
    q[m,l] = sum_j q[l,j] - (qg[l] - qd[l])         + x * ell[m,l]
    nu[l]  = nu[m] - 2 (r p[m,l] + x q[m,l]) + (r^2 + x^2) ell[m,l]

where the sums run over branches leaving l. Positive branch flow points away
from the interconnection, so flow on the root branch is power imported from
the upstream grid. In ``lossless`` mode every ell is pinned to zero; in
``loss_linearized`` mode ell is tied to a first-order expansion of
(p^2 + q^2) / nu around a nominal operating point.

Per-generator limits: active power within the (possibly time-varying)
forecast band, an apparent-power cap pg <= s_max * cos(alpha), and the
power-factor band -p <= alpha * q <= p on the bus net injection. Storage
units couple time steps through the energy recursion
e(k+1) = e(k) - dt * ps(k).

Every constraint row carries a tag so callers can classify rows (for example
treating forecast bands as the refreshable part of a conversion).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import NumericalError, SchemaError
from .sets import HPolytope

CASE_SCHEMA_ID = "flexcz-case/1"

MODES = ("lossless", "loss_linearized")

# Row tags emitted by build_feasible_set, equalities then inequalities.
EQ_TAGS = ("flow_p", "flow_q", "voltage", "current", "storage_init", "storage_dyn")
INEQ_TAGS = ("voltage_box", "current_box", "gen_bound", "gen_apparent",
             "gen_pf", "storage_power", "storage_energy")


def _series(raw, N: int, what: str) -> np.ndarray:
    """Expand a scalar-or-list series to length N."""
    if isinstance(raw, (int, float)):
        return np.full(N, float(raw))
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (N,):
        raise SchemaError(f"{what}: series has length {arr.shape[0]}, horizon is {N}")
    return arr


@dataclass(frozen=True)
class Bus:
    id: int
    v_min_sq: float
    v_max_sq: float
    p_demand: float | tuple
    q_demand: float | tuple


@dataclass(frozen=True)
class Branch:
    """Oriented parent -> child; orientation is fixed at load time."""

    from_bus: int
    to_bus: int
    r: float
    x: float
    l_min: float
    l_max: float


@dataclass(frozen=True)
class Generator:
    bus: int
    f_max: float | tuple
    s_max: float | tuple
    alpha_pf: float = 0.95


@dataclass(frozen=True)
class Storage:
    bus: int
    e_min: float
    e_max: float
    p_min: float
    p_max: float
    e0: float


@dataclass(frozen=True)
class GridCase:
    """A radial case plus study horizon. Values are per-unit on base_mva."""

    name: str
    base_mva: float
    dt_hours: float
    horizon: int
    coupling_node: int
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    storages: tuple[Storage, ...]

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    def bus_pos(self, bus_id: int) -> int:
        for i, bus in enumerate(self.buses):
            if bus.id == bus_id:
                return i
        raise SchemaError(f"unknown bus id {bus_id}")

    def with_horizon(self, N: int) -> "GridCase":
        if N < 1:
            raise SchemaError(f"horizon must be >= 1, got {N}")
        case = replace(self, horizon=int(N))
        _validate_series(case)
        return case

    def root_branch(self) -> int:
        """Position of the unique branch leaving the coupling node."""
        hits = [i for i, br in enumerate(self.branches) if br.from_bus == self.coupling_node]
        if len(hits) != 1:
            raise SchemaError(
                f"coupling node {self.coupling_node} has {len(hits)} outgoing branches,"
                " need exactly one for a root-branch selection")
        return hits[0]

    def children_of(self, bus_id: int) -> list[int]:
        return [i for i, br in enumerate(self.branches) if br.from_bus == bus_id]

    def generator_at(self, bus_id: int) -> int | None:
        for i, g in enumerate(self.generators):
            if g.bus == bus_id:
                return i
        return None

    def storage_at(self, bus_id: int) -> int | None:
        for i, s in enumerate(self.storages):
            if s.bus == bus_id:
                return i
        return None


def _validate_series(case: GridCase) -> None:
    N = case.horizon
    for bus in case.buses:
        _series(bus.p_demand, N, f"bus {bus.id} p_demand")
        _series(bus.q_demand, N, f"bus {bus.id} q_demand")
    for gen in case.generators:
        _series(gen.f_max, N, f"generator at bus {gen.bus} f_max")
        _series(gen.s_max, N, f"generator at bus {gen.bus} s_max")


def _orient_tree(bus_ids: list[int], raw_branches: list[dict], root: int) -> list[tuple[int, int]]:
    """Orient branches away from the root; reject cycles and disconnection."""
    adjacency: dict[int, list[tuple[int, int]]] = {b: [] for b in bus_ids}
    for idx, br in enumerate(raw_branches):
        adjacency[br["from"]].append((br["to"], idx))
        adjacency[br["to"]].append((br["from"], idx))
    orientation: dict[int, tuple[int, int]] = {}
    seen = {root}
    frontier = [root]
    while frontier:
        bus = frontier.pop(0)
        for other, idx in adjacency[bus]:
            if idx in orientation:
                continue
            if other in seen:
                raise SchemaError("branch list contains a cycle")
            orientation[idx] = (bus, other)
            seen.add(other)
            frontier.append(other)
    if len(seen) != len(bus_ids):
        missing = sorted(set(bus_ids) - seen)
        raise SchemaError(f"buses not reachable from the coupling node: {missing}")
    return [orientation[i] for i in range(len(raw_branches))]


def load_case(source: str | Path, horizon: int | None = None) -> GridCase:
    """Load and validate a case document.

    ``source`` is a path, or the JSON text itself when it starts with "{".
    ``horizon`` overrides the document's default horizon.
    """
    if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise SchemaError(f"cannot read case file: {exc}") from exc
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"case document is not valid JSON: {exc}") from exc
    return case_from_dict(doc, horizon=horizon)


def case_from_dict(doc: dict, horizon: int | None = None) -> GridCase:
    from .schemas import validate_document

    validate_document(doc, "case")
    if doc.get("schema") != CASE_SCHEMA_ID:
        raise SchemaError(f"expected schema {CASE_SCHEMA_ID!r}, got {doc.get('schema')!r}")

    bus_ids = [b["id"] for b in doc["buses"]]
    if len(set(bus_ids)) != len(bus_ids):
        raise SchemaError("duplicate bus ids")
    if len(doc["branches"]) != len(bus_ids) - 1:
        raise SchemaError(
            f"{len(doc['branches'])} branches for {len(bus_ids)} buses: not a tree")
    root = doc["coupling"]["node"]
    if root not in bus_ids:
        raise SchemaError(f"coupling node {root} is not a bus")
    for br in doc["branches"]:
        if br["from"] not in bus_ids or br["to"] not in bus_ids:
            raise SchemaError(f"branch {br['from']}-{br['to']} references unknown buses")

    oriented = _orient_tree(bus_ids, doc["branches"], root)
    branches = tuple(
        Branch(from_bus=fr, to_bus=to, r=float(br["r"]), x=float(br["x"]),
               l_min=float(br.get("l_min", 0.0)), l_max=float(br["l_max"]))
        for (fr, to), br in zip(oriented, doc["branches"]))
    for br in branches:
        if br.r < 0 or br.x < 0 or br.l_min > br.l_max:
            raise SchemaError(f"branch {br.from_bus}-{br.to_bus} has invalid parameters")

    def tup(v):
        return tuple(v) if isinstance(v, list) else float(v)

    buses = tuple(
        Bus(id=b["id"], v_min_sq=float(b["v_min_sq"]), v_max_sq=float(b["v_max_sq"]),
            p_demand=tup(b.get("p_demand", 0.0)), q_demand=tup(b.get("q_demand", 0.0)))
        for b in doc["buses"])
    for bus in buses:
        if bus.v_min_sq > bus.v_max_sq or bus.v_min_sq <= 0:
            raise SchemaError(f"bus {bus.id} has invalid voltage bounds")

    generators = tuple(
        Generator(bus=g["bus"], f_max=tup(g["f_max"]), s_max=tup(g["s_max"]),
                  alpha_pf=float(g.get("alpha_pf", 0.95)))
        for g in doc.get("generators", []))
    storages = tuple(
        Storage(bus=s["bus"], e_min=float(s["e_min"]), e_max=float(s["e_max"]),
                p_min=float(s["p_min"]), p_max=float(s["p_max"]), e0=float(s["e0"]))
        for s in doc.get("storages", []))
    for g in generators:
        if g.bus not in bus_ids:
            raise SchemaError(f"generator references unknown bus {g.bus}")
        if not 0.0 < g.alpha_pf < math.pi / 2:
            raise SchemaError(f"generator at bus {g.bus}: alpha_pf out of range")
    for s in storages:
        if s.bus not in bus_ids:
            raise SchemaError(f"storage references unknown bus {s.bus}")
        if not (s.e_min <= s.e0 <= s.e_max and s.p_min <= s.p_max):
            raise SchemaError(f"storage at bus {s.bus} has inconsistent limits")
    if len({g.bus for g in generators}) != len(generators):
        raise SchemaError("at most one generator per bus")
    if len({s.bus for s in storages}) != len(storages):
        raise SchemaError("at most one storage per bus")

    case = GridCase(
        name=str(doc.get("name", "unnamed")),
        base_mva=float(doc["base_mva"]),
        dt_hours=float(doc["dt_hours"]),
        horizon=int(horizon if horizon is not None else doc["horizon"]),
        coupling_node=root,
        buses=buses,
        branches=branches,
        generators=generators,
        storages=storages,
    )
    if case.horizon < 1:
        raise SchemaError(f"horizon must be >= 1, got {case.horizon}")
    if case.dt_hours <= 0:
        raise SchemaError("dt_hours must be positive")
    _validate_series(case)
    return case


# ---------------------------------------------------------------------------
# variable indexing


class VariableIndex:
    """Bijection between variable names and coordinates.

    Layout is branch-major, then time: all p flows (per branch, k = 1..N),
    all q flows, squared voltages (per bus), squared currents, generator
    p and q, storage power, storage energy (k = 1..N+1). Names follow the
    pattern ``p_{m,l}(k)``, ``nu_{m}(k)``, ``pg_{m}(k)``, ``e_{m}(k)``.
    """

    def __init__(self, case: GridCase, N: int | None = None):
        self.case = case
        self.N = case.horizon if N is None else int(N)
        N = self.N
        names: list[str] = []
        self._p0 = 0
        for br in case.branches:
            names += [f"p_{{{br.from_bus},{br.to_bus}}}({k})" for k in range(1, N + 1)]
        self._q0 = len(names)
        for br in case.branches:
            names += [f"q_{{{br.from_bus},{br.to_bus}}}({k})" for k in range(1, N + 1)]
        self._nu0 = len(names)
        for bus in case.buses:
            names += [f"nu_{{{bus.id}}}({k})" for k in range(1, N + 1)]
        self._ell0 = len(names)
        for br in case.branches:
            names += [f"ell_{{{br.from_bus},{br.to_bus}}}({k})" for k in range(1, N + 1)]
        self._pg0 = len(names)
        for gen in case.generators:
            names += [f"pg_{{{gen.bus}}}({k})" for k in range(1, N + 1)]
        self._qg0 = len(names)
        for gen in case.generators:
            names += [f"qg_{{{gen.bus}}}({k})" for k in range(1, N + 1)]
        self._ps0 = len(names)
        for sto in case.storages:
            names += [f"ps_{{{sto.bus}}}({k})" for k in range(1, N + 1)]
        self._e0 = len(names)
        for sto in case.storages:
            names += [f"e_{{{sto.bus}}}({k})" for k in range(1, N + 2)]
        self.names = tuple(names)
        self._by_name = {name: i for i, name in enumerate(names)}

    @property
    def n(self) -> int:
        return len(self.names)

    def coord(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"unknown quantity name {name!r}") from None

    def name(self, i: int) -> str:
        return self.names[i]

    # positional getters; k runs from 1
    def p(self, branch: int, k: int) -> int:
        return self._p0 + branch * self.N + (k - 1)

    def q(self, branch: int, k: int) -> int:
        return self._q0 + branch * self.N + (k - 1)

    def nu(self, bus: int, k: int) -> int:
        return self._nu0 + bus * self.N + (k - 1)

    def ell(self, branch: int, k: int) -> int:
        return self._ell0 + branch * self.N + (k - 1)

    def pg(self, gen: int, k: int) -> int:
        return self._pg0 + gen * self.N + (k - 1)

    def qg(self, gen: int, k: int) -> int:
        return self._qg0 + gen * self.N + (k - 1)

    def ps(self, sto: int, k: int) -> int:
        return self._ps0 + sto * self.N + (k - 1)

    def e(self, sto: int, k: int) -> int:
        # energy has N+1 samples per storage
        return self._e0 + sto * (self.N + 1) + (k - 1)


# ---------------------------------------------------------------------------
# nominal operating point


@dataclass(frozen=True)
class OperatingPoint:
    """Lossless snapshot used to linearize the current equation.

    Branch arrays are (n_branch, N); ``nu0`` is (n_bus, N). ``ell0`` is the
    squared current implied by the snapshot flows at the child-bus voltage.
    """

    p0: np.ndarray
    q0: np.ndarray
    nu0: np.ndarray
    ell0: np.ndarray

    def __post_init__(self):
        for field in ("p0", "q0", "nu0", "ell0"):
            arr = np.array(getattr(self, field), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)


def nominal_operating_point(case: GridCase) -> OperatingPoint:
    """Lossless flow solve with generators at half forecast and storage idle.

    Branch flows accumulate downstream net demand; voltages descend from the
    midpoint of the coupling-node band. The implied squared current
    (p0^2 + q0^2) / nu0_child seeds the loss linearization.
    """
    N = case.horizon
    n_br, n_bus = case.n_branch, case.n_bus
    pd = np.stack([_series(b.p_demand, N, "p_demand") for b in case.buses])
    qd = np.stack([_series(b.q_demand, N, "q_demand") for b in case.buses])
    net_p = -pd.copy()
    net_q = -qd.copy()
    for gen in case.generators:
        net_p[case.bus_pos(gen.bus)] += 0.5 * _series(gen.f_max, N, "f_max")

    p0 = np.zeros((n_br, N))
    q0 = np.zeros((n_br, N))
    # children before parents: repeatedly sweep unresolved branches
    order: list[int] = []
    resolved = set()
    pending = set(range(n_br))
    while pending:
        progressed = False
        for bi in sorted(pending):
            kids = case.children_of(case.branches[bi].to_bus)
            if all(j in resolved for j in kids):
                order.append(bi)
                resolved.add(bi)
                pending.discard(bi)
                progressed = True
        if not progressed:  # pragma: no cover - tree validation forbids this
            raise NumericalError("branch ordering did not converge")
    for bi in order:
        br = case.branches[bi]
        child = case.bus_pos(br.to_bus)
        p0[bi] = -net_p[child]
        q0[bi] = -net_q[child]
        for j in case.children_of(br.to_bus):
            p0[bi] += p0[j]
            q0[bi] += q0[j]

    nu0 = np.zeros((n_bus, N))
    root_pos = case.bus_pos(case.coupling_node)
    root = case.buses[root_pos]
    nu0[root_pos] = 0.5 * (root.v_min_sq + root.v_max_sq)
    for bi in reversed(order):  # parents before children
        br = case.branches[bi]
        parent = case.bus_pos(br.from_bus)
        child = case.bus_pos(br.to_bus)
        nu0[child] = nu0[parent] - 2.0 * (br.r * p0[bi] + br.x * q0[bi])
    if np.any(nu0 <= 0):
        raise NumericalError("nominal squared voltage is not positive")

    ell0 = np.zeros((n_br, N))
    for bi, br in enumerate(case.branches):
        child = case.bus_pos(br.to_bus)
        ell0[bi] = (p0[bi] ** 2 + q0[bi] ** 2) / nu0[child]
    return OperatingPoint(p0, q0, nu0, ell0)


# ---------------------------------------------------------------------------
# feasible set assembly


def build_feasible_set(case: GridCase, mode: str,
                       op: OperatingPoint | None = None) -> tuple[HPolytope, VariableIndex]:
    """Assemble the affine feasible set over the full horizon.

    Returns the tagged H-polytope and the variable index. ``mode`` selects
    how squared currents are handled: pinned to zero ("lossless") or tied to
    a first-order loss model around ``op`` ("loss_linearized", computing the
    nominal point on demand when ``op`` is None).
    """
    if mode not in MODES:
        raise SchemaError(f"mode must be one of {MODES}, got {mode!r}")
    if case.horizon < 1:
        raise SchemaError("horizon must be >= 1")
    if mode == "loss_linearized" and op is None:
        op = nominal_operating_point(case)

    N = case.horizon
    idx = VariableIndex(case)
    n = idx.n
    pd = np.stack([_series(b.p_demand, N, "p_demand") for b in case.buses])
    qd = np.stack([_series(b.q_demand, N, "q_demand") for b in case.buses])

    eq_rows: list[np.ndarray] = []
    eq_rhs: list[float] = []
    eq_tags: list[str] = []
    iq_rows: list[np.ndarray] = []
    iq_rhs: list[float] = []
    iq_tags: list[str] = []

    def eq(row, rhs, tag):
        eq_rows.append(row)
        eq_rhs.append(rhs)
        eq_tags.append(tag)

    def le(row, rhs, tag):
        iq_rows.append(row)
        iq_rhs.append(rhs)
        iq_tags.append(tag)

    for k in range(1, N + 1):
        for bi, br in enumerate(case.branches):
            child_pos = case.bus_pos(br.to_bus)
            kids = case.children_of(br.to_bus)
            gen = case.generator_at(br.to_bus)
            sto = case.storage_at(br.to_bus)

            row = np.zeros(n)
            row[idx.p(bi, k)] = 1.0
            for j in kids:
                row[idx.p(j, k)] = -1.0
            if gen is not None:
                row[idx.pg(gen, k)] = 1.0
            if sto is not None:
                row[idx.ps(sto, k)] = 1.0
            row[idx.ell(bi, k)] = -br.r
            eq(row, pd[child_pos, k - 1], "flow_p")

            row = np.zeros(n)
            row[idx.q(bi, k)] = 1.0
            for j in kids:
                row[idx.q(j, k)] = -1.0
            if gen is not None:
                row[idx.qg(gen, k)] = 1.0
            row[idx.ell(bi, k)] = -br.x
            eq(row, qd[child_pos, k - 1], "flow_q")

        for bi, br in enumerate(case.branches):
            parent_pos = case.bus_pos(br.from_bus)
            child_pos = case.bus_pos(br.to_bus)
            row = np.zeros(n)
            row[idx.nu(child_pos, k)] = 1.0
            row[idx.nu(parent_pos, k)] = -1.0
            row[idx.p(bi, k)] = 2.0 * br.r
            row[idx.q(bi, k)] = 2.0 * br.x
            row[idx.ell(bi, k)] = -(br.r ** 2 + br.x ** 2)
            eq(row, 0.0, "voltage")

        for bi, br in enumerate(case.branches):
            row = np.zeros(n)
            row[idx.ell(bi, k)] = 1.0
            if mode == "lossless":
                eq(row, 0.0, "current")
            else:
                child_pos = case.bus_pos(br.to_bus)
                nu_c = op.nu0[child_pos, k - 1]
                p_c = op.p0[bi, k - 1]
                q_c = op.q0[bi, k - 1]
                l_c = op.ell0[bi, k - 1]
                jp = 2.0 * p_c / nu_c
                jq = 2.0 * q_c / nu_c
                jv = -l_c / nu_c
                row[idx.p(bi, k)] = -jp
                row[idx.q(bi, k)] = -jq
                row[idx.nu(child_pos, k)] = -jv
                eq(row, l_c - jp * p_c - jq * q_c - jv * nu_c, "current")

    for si, sto in enumerate(case.storages):
        row = np.zeros(n)
        row[idx.e(si, 1)] = 1.0
        eq(row, sto.e0, "storage_init")
        for k in range(1, N + 1):
            row = np.zeros(n)
            row[idx.e(si, k + 1)] = 1.0
            row[idx.e(si, k)] = -1.0
            row[idx.ps(si, k)] = case.dt_hours
            eq(row, 0.0, "storage_dyn")

    for k in range(1, N + 1):
        for pos, bus in enumerate(case.buses):
            row = np.zeros(n)
            row[idx.nu(pos, k)] = 1.0
            le(row, bus.v_max_sq, "voltage_box")
            le(-row, -bus.v_min_sq, "voltage_box")
        for bi, br in enumerate(case.branches):
            row = np.zeros(n)
            row[idx.ell(bi, k)] = 1.0
            le(row, br.l_max, "current_box")
            le(-row, -br.l_min, "current_box")
        for gi, gen in enumerate(case.generators):
            f_max = _series(gen.f_max, N, "f_max")[k - 1]
            s_max = _series(gen.s_max, N, "s_max")[k - 1]
            bus_pos = case.bus_pos(gen.bus)
            sto = case.storage_at(gen.bus)
            row = np.zeros(n)
            row[idx.pg(gi, k)] = 1.0
            le(row, f_max, "gen_bound")
            le(-row, 0.0, "gen_bound")
            row = np.zeros(n)
            row[idx.pg(gi, k)] = 1.0
            le(row, s_max * math.cos(gen.alpha_pf), "gen_apparent")
            # power-factor band on the net injection at the generator bus:
            # |alpha * q_bus| <= p_bus with p = pg - pd + ps, q = qg - qd
            a = gen.alpha_pf
            base = np.zeros(n)
            base[idx.pg(gi, k)] = -1.0
            if sto is not None:
                base[idx.ps(sto, k)] = -1.0
            row = base.copy()
            row[idx.qg(gi, k)] = a
            le(row, a * qd[bus_pos, k - 1] - pd[bus_pos, k - 1], "gen_pf")
            row = base.copy()
            row[idx.qg(gi, k)] = -a
            le(row, -a * qd[bus_pos, k - 1] - pd[bus_pos, k - 1], "gen_pf")
        for si, sto in enumerate(case.storages):
            row = np.zeros(n)
            row[idx.ps(si, k)] = 1.0
            le(row, sto.p_max, "storage_power")
            le(-row, -sto.p_min, "storage_power")
    for si, sto in enumerate(case.storages):
        for k in range(2, N + 2):
            row = np.zeros(n)
            row[idx.e(si, k)] = 1.0
            le(row, sto.e_max, "storage_energy")
            le(-row, -sto.e_min, "storage_energy")

    poly = HPolytope(
        A_ineq=np.array(iq_rows).reshape(len(iq_rows), n),
        b_ineq=np.array(iq_rhs),
        A_eq=np.array(eq_rows).reshape(len(eq_rows), n),
        b_eq=np.array(eq_rhs),
        ineq_tags=tuple(iq_tags),
        eq_tags=tuple(eq_tags),
    )
    return poly, idx


# ---------------------------------------------------------------------------
# structural bounds and coupling selections


def structural_bounds(case: GridCase, idx: VariableIndex, mode: str,
                      op: OperatingPoint | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Cheap per-variable outer bounds derived from the case data alone.

    Box rows bound voltages, currents, generator and storage injections
    directly; branch flows are bounded by accumulating downstream net-power
    intervals up the tree. The result always contains the feasible set, which
    is all an enclosing box must guarantee.
    """
    if mode not in MODES:
        raise SchemaError(f"mode must be one of {MODES}, got {mode!r}")
    N = idx.N
    n = idx.n
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    pd = np.stack([_series(b.p_demand, N, "p_demand") for b in case.buses])
    qd = np.stack([_series(b.q_demand, N, "q_demand") for b in case.buses])

    for pos, bus in enumerate(case.buses):
        for k in range(1, N + 1):
            lb[idx.nu(pos, k)] = bus.v_min_sq
            ub[idx.nu(pos, k)] = bus.v_max_sq
    for bi, br in enumerate(case.branches):
        lo, hi = (0.0, 0.0) if mode == "lossless" else (br.l_min, br.l_max)
        for k in range(1, N + 1):
            lb[idx.ell(bi, k)] = lo
            ub[idx.ell(bi, k)] = hi
    for si, sto in enumerate(case.storages):
        for k in range(1, N + 1):
            lb[idx.ps(si, k)] = sto.p_min
            ub[idx.ps(si, k)] = sto.p_max
        for k in range(1, N + 2):
            lb[idx.e(si, k)] = sto.e_min
            ub[idx.e(si, k)] = sto.e_max

    # net-power intervals per bus and step (lo, hi), generation positive
    net_p_lo = -pd.copy()
    net_p_hi = -pd.copy()
    net_q_lo = -qd.copy()
    net_q_hi = -qd.copy()
    for gi, gen in enumerate(case.generators):
        pos = case.bus_pos(gen.bus)
        f_max = _series(gen.f_max, N, "f_max")
        s_max = _series(gen.s_max, N, "s_max")
        pg_hi = np.minimum(f_max, s_max * math.cos(gen.alpha_pf))
        sto = case.storage_at(gen.bus)
        ps_hi = case.storages[sto].p_max if sto is not None else 0.0
        # |alpha q_bus| <= p_bus caps reachable net reactive power
        p_hat = np.maximum(pg_hi - pd[pos] + ps_hi, 0.0)
        q_span = p_hat / gen.alpha_pf
        for k in range(1, N + 1):
            lb[idx.pg(gi, k)] = 0.0
            ub[idx.pg(gi, k)] = pg_hi[k - 1]
            lb[idx.qg(gi, k)] = qd[pos, k - 1] - q_span[k - 1]
            ub[idx.qg(gi, k)] = qd[pos, k - 1] + q_span[k - 1]
        net_p_hi[pos] += pg_hi
        # net reactive power qg - qd with qg centered at the demand
        net_q_lo[pos] += qd[pos] - q_span
        net_q_hi[pos] += qd[pos] + q_span
    for sto in case.storages:
        pos = case.bus_pos(sto.bus)
        net_p_lo[pos] += sto.p_min
        net_p_hi[pos] += sto.p_max

    # accumulate flow intervals children-first
    flow_p = np.zeros((case.n_branch, N, 2))
    flow_q = np.zeros((case.n_branch, N, 2))
    done: set[int] = set()

    def visit(bi: int):
        if bi in done:
            return
        br = case.branches[bi]
        child_pos = case.bus_pos(br.to_bus)
        kids = case.children_of(br.to_bus)
        for j in kids:
            visit(j)
        ell_lo = lb[[idx.ell(bi, k) for k in range(1, N + 1)]]
        ell_hi = ub[[idx.ell(bi, k) for k in range(1, N + 1)]]
        p_lo = -net_p_hi[child_pos] + br.r * ell_lo
        p_hi = -net_p_lo[child_pos] + br.r * ell_hi
        q_lo = -net_q_hi[child_pos] + br.x * ell_lo
        q_hi = -net_q_lo[child_pos] + br.x * ell_hi
        for j in kids:
            p_lo += flow_p[j, :, 0]
            p_hi += flow_p[j, :, 1]
            q_lo += flow_q[j, :, 0]
            q_hi += flow_q[j, :, 1]
        flow_p[bi, :, 0], flow_p[bi, :, 1] = p_lo, p_hi
        flow_q[bi, :, 0], flow_q[bi, :, 1] = q_lo, q_hi
        done.add(bi)

    for bi in range(case.n_branch):
        visit(bi)
    for bi in range(case.n_branch):
        for k in range(1, N + 1):
            lb[idx.p(bi, k)] = flow_p[bi, k - 1, 0]
            ub[idx.p(bi, k)] = flow_p[bi, k - 1, 1]
            lb[idx.q(bi, k)] = flow_q[bi, k - 1, 0]
            ub[idx.q(bi, k)] = flow_q[bi, k - 1, 1]
    return lb, ub


def split_name_list(text: str) -> list[str]:
    """Split a comma-separated list of quantity names.

    Commas inside braces belong to the name (branch names look like
    ``p_{1,2}(1)``), so only commas at brace depth zero separate items.
    """
    items: list[str] = []
    depth = 0
    buf: list[str] = []
    for ch in str(text):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(0, depth - 1)
        if ch == "," and depth == 0:
            items.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    tail = "".join(buf).strip()
    if tail:
        items.append(tail)
    return [s for s in items if s]


def resolve_selection(case: GridCase, idx: VariableIndex, selection) -> list[str]:
    """Expand a selection preset or comma list into variable names.

    "root_pq" takes the (p, q) pair of the root branch for every step;
    "root_p1p2q2" takes p(1), p(2), q(2) of the root branch (needs N >= 2).
    Anything else is treated as comma-separated variable names (commas
    inside braces are part of the name).
    """
    if isinstance(selection, (list, tuple)):
        names = list(selection)
    elif selection == "root_pq":
        bi = case.root_branch()
        names = []
        for k in range(1, idx.N + 1):
            br = case.branches[bi]
            names += [f"p_{{{br.from_bus},{br.to_bus}}}({k})",
                      f"q_{{{br.from_bus},{br.to_bus}}}({k})"]
    elif selection == "root_p1p2q2":
        if idx.N < 2:
            raise SchemaError("selection root_p1p2q2 needs a horizon of at least 2")
        bi = case.root_branch()
        br = case.branches[bi]
        pair = f"{{{br.from_bus},{br.to_bus}}}"
        names = [f"p_{pair}(1)", f"p_{pair}(2)", f"q_{pair}(2)"]
    else:
        names = split_name_list(selection)
        if not names:
            raise SchemaError("empty selection")
    for name in names:
        idx.coord(name)
    return names


def coupling_projection_matrix(case: GridCase, idx: VariableIndex,
                               selection) -> np.ndarray:
    """0/1 matrix mapping the full variable vector onto the selection."""
    names = resolve_selection(case, idx, selection)
    M = np.zeros((len(names), idx.n))
    for r, name in enumerate(names):
        M[r, idx.coord(name)] = 1.0
    return M
