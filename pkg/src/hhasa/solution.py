"""Giant-tour solutions: evaluation, validation, construction and text I/O."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels as K
from .instance import Instance


class Unrepairable(RuntimeError):
    """No load or station repair can make the tour feasible."""


class SolutionFormatError(ValueError):
    pass


class Tour:
    """Node sequence ``[0, ..., 0]`` with inner zeros separating routes."""

    __slots__ = ("seq", "_fitness")

    def __init__(self, seq: Iterable[int], fitness: Optional[float] = None):
        self.seq = np.array(seq, dtype=np.int64)
        self.seq.setflags(write=False)
        self._fitness = fitness

    @property
    def fitness(self) -> Optional[float]:
        return self._fitness

    def routes(self) -> list[list[int]]:
        """Routes without their depot delimiters."""
        out: list[list[int]] = []
        cur: list[int] = []
        for v in self.seq[1:].tolist():
            if v == 0:
                out.append(cur)
                cur = []
            else:
                cur.append(v)
        return out

    def tolist(self) -> list[int]:
        return self.seq.tolist()

    def __len__(self) -> int:
        return len(self.seq)

    def __eq__(self, other) -> bool:
        return isinstance(other, Tour) and np.array_equal(self.seq, other.seq)

    def __hash__(self):
        return hash(self.seq.tobytes())

    def __repr__(self) -> str:
        return f"Tour({self.seq.tolist()})"

    @classmethod
    def from_routes(cls, routes: Iterable[Iterable[int]]) -> "Tour":
        seq = [0]
        for r in routes:
            seq.extend(r)
            seq.append(0)
        return cls(seq)


@dataclass
class RouteView:
    nodes: list[int]
    load: float
    energy_trace: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class Violation:
    kind: str
    route: int = -1
    position: int = -1
    node: int = -1

    def __str__(self) -> str:
        where = f"route {self.route} pos {self.position}" if self.route >= 0 else ""
        what = f"node {self.node}" if self.node >= 0 else ""
        detail = ", ".join(x for x in (what, where) if x)
        return f"{self.kind}({detail})" if detail else self.kind


DUPLICATE_CUSTOMER = "DuplicateCustomer"
MISSING_CUSTOMER = "MissingCustomer"
LOAD_EXCEEDED = "LoadExceeded"
BATTERY_NEGATIVE = "BatteryNegative"
MALFORMED_DELIMITERS = "MalformedDelimiters"
UNKNOWN_NODE = "UnknownNode"


def _check_delimiters(seq: np.ndarray) -> None:
    if seq.ndim != 1 or len(seq) < 2 or seq[0] != 0 or seq[-1] != 0:
        raise ValueError("tour must start and end at the depot")


def evaluate(tour: Tour, inst: Instance) -> float:
    """Total travelled distance; caches the value on the tour."""
    _check_delimiters(tour.seq)
    if tour.seq.max() >= inst.n_nodes or tour.seq.min() < 0:
        raise ValueError("tour references nodes outside the instance")
    tour._fitness = float(K.tour_length(tour.seq, inst.dist))
    return tour._fitness


def route_views(tour: Tour, inst: Instance) -> list[RouteView]:
    """Per-route load and remaining battery after each arc."""
    views = []
    for nodes in tour.routes():
        path = [0] + nodes + [0]
        battery = inst.max_energy
        trace = []
        for a, b in zip(path, path[1:]):
            battery -= inst.h * inst.dist[a, b]
            trace.append(battery)
            if b == 0 or inst.is_station(b):
                battery = inst.max_energy
        load = float(sum(inst.demand[v] for v in nodes if inst.is_customer(v)))
        views.append(RouteView(nodes, load, trace))
    return views


def validate(tour: Tour, inst: Instance) -> list[Violation]:
    """Every constraint violation of the tour; empty iff feasible.

    Written independently of the search kernels so it can serve as their
    oracle.
    """
    seq = tour.seq.tolist()
    out: list[Violation] = []
    if not seq or seq[0] != 0 or seq[-1] != 0:
        out.append(Violation(MALFORMED_DELIMITERS, position=0))
        if not seq or seq[0] != 0:
            seq = [0] + seq
        if seq[-1] != 0:
            seq = seq + [0]
    bad = [(i, v) for i, v in enumerate(seq) if not 0 <= v < inst.n_nodes]
    for i, v in bad:
        out.append(Violation(UNKNOWN_NODE, position=i, node=v))
    if bad:
        seq = [v if 0 <= v < inst.n_nodes else 0 for v in seq]

    routes: list[list[int]] = []
    cur: list[int] = []
    for i, v in enumerate(seq[1:], 1):
        if v == 0:
            if not cur:
                out.append(Violation(MALFORMED_DELIMITERS, route=len(routes), position=i))
            else:
                routes.append(cur)
            cur = []
        else:
            cur.append(v)

    seen: dict[int, int] = {}
    for r, nodes in enumerate(routes):
        for p, v in enumerate(nodes):
            if inst.is_customer(v):
                if v in seen:
                    out.append(Violation(DUPLICATE_CUSTOMER, route=r, position=p, node=v))
                seen[v] = seen.get(v, 0) + 1
    for c in inst.customers:
        if c not in seen:
            out.append(Violation(MISSING_CUSTOMER, node=c))

    for r, nodes in enumerate(routes):
        load = 0.0
        for p, v in enumerate(nodes):
            load += inst.demand[v]
            if load > inst.max_load:
                out.append(Violation(LOAD_EXCEEDED, route=r, position=p, node=v))
                break
        battery = inst.max_energy
        path = nodes + [0]
        prev = 0
        for p, v in enumerate(path):
            battery -= inst.h * inst.distance(prev, v)
            if battery < -K.EPS:
                out.append(Violation(BATTERY_NEGATIVE, route=r, position=p, node=v))
                break
            if v == 0 or inst.is_station(v):
                battery = inst.max_energy
            prev = v
    return out


def is_feasible(tour: Tour, inst: Instance) -> bool:
    return not validate(tour, inst)


def normalize(tour: Tour, inst: Instance) -> Tour:
    """Remove empty routes, station runs and stations right after the depot."""
    return Tour(K.normalize(tour.seq, inst.dist, inst.n_c))


def insert_stations(tour: Tour, inst: Instance) -> Tour:
    """Insert charging stops wherever a route would run out of battery.

    Raises :class:`Unrepairable` if some route cannot be fixed.
    """
    _check_delimiters(tour.seq)
    seq, status = K.insert_stations(tour.seq, inst.dist, inst.energy_matrix,
                                    inst.max_energy, inst.n_c, inst.n_nodes)
    if status != K.OK:
        raise Unrepairable("no charging station placement makes every route feasible")
    return Tour(seq)


def split_by_load(perm: Iterable[int], inst: Instance) -> Tour:
    """Greedy left-to-right split into routes that respect capacity."""
    seq = [0]
    load = 0.0
    for c in perm:
        q = inst.demand[c]
        if load + q > inst.max_load:
            seq.append(0)
            load = 0.0
        seq.append(int(c))
        load += q
    seq.append(0)
    return Tour(seq)


def _repaired_route(nodes: list[int], inst: Instance) -> Optional[np.ndarray]:
    seq = np.array([0, *nodes, 0], dtype=np.int64)
    fixed, status = K.insert_stations(seq, inst.dist, inst.energy_matrix, inst.max_energy,
                                      inst.n_c, inst.n_nodes)
    return fixed if status == K.OK else None


def split_feasible(perm: Iterable[int], inst: Instance) -> Tour:
    """Greedy split that opens a new route when load or charging would fail.

    A customer joins the current route only if the route stays within
    capacity and can still be completed with charging stops.
    """
    out = [0]
    cur: list[int] = []
    cur_fixed: Optional[np.ndarray] = None
    load = 0.0
    for c in perm:
        c = int(c)
        q = inst.demand[c]
        fixed = _repaired_route(cur + [c], inst) if cur and load + q <= inst.max_load else None
        if fixed is None:
            if cur:
                out.extend(cur_fixed[1:].tolist())
            cur, load = [c], q
            cur_fixed = _repaired_route(cur, inst)
            if cur_fixed is None:
                raise Unrepairable(f"customer {c} cannot be served even on its own route")
        else:
            cur.append(c)
            load += q
            cur_fixed = fixed
    if cur:
        out.extend(cur_fixed[1:].tolist())
    return Tour(out)


def construct_initial(inst: Instance, rng: np.random.Generator, max_attempts: int = 100) -> Tour:
    """Random permutation, split by load, stations added where needed.

    If the plain load split leaves a route that no station placement can
    rescue, the split is redone so that it also checks charging feasibility.
    """
    for _ in range(max_attempts):
        perm = rng.permutation(inst.n_c) + 1
        try:
            tour = insert_stations(split_by_load(perm, inst), inst)
        except Unrepairable:
            tour = split_feasible(perm, inst)
        evaluate(tour, inst)
        return tour
    raise Unrepairable(f"no feasible initial solution after {max_attempts} attempts")


def format_solution(tour: Tour, inst: Instance, fitness: Optional[float] = None) -> str:
    """Comma-separated file ids followed by a ``FITNESS:`` line."""
    if fitness is None:
        fitness = tour.fitness if tour.fitness is not None else evaluate(tour, inst)
    ids = ",".join(str(v) for v in inst.to_file_ids(tour.seq.tolist()))
    return f"{ids}\nFITNESS: {fitness:.6f}\n"


def parse_solution(text: str, inst: Instance) -> tuple[Tour, Optional[float]]:
    """Inverse of :func:`format_solution`; the fitness line is optional."""
    ids: list[int] = []
    stated = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.upper().startswith("FITNESS"):
            try:
                stated = float(line.split(":", 1)[1])
            except (IndexError, ValueError):
                raise SolutionFormatError(f"bad fitness line {line!r}") from None
            continue
        for tok in line.replace(",", " ").split():
            try:
                ids.append(int(tok))
            except ValueError:
                raise SolutionFormatError(f"non-integer node id {tok!r}") from None
    if not ids:
        raise SolutionFormatError("solution contains no nodes")
    try:
        seq = inst.from_file_ids(ids)
    except KeyError as exc:
        raise SolutionFormatError(str(exc)) from None
    return Tour(seq), stated
