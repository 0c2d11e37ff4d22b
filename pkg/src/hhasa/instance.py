"""CEVRP problem instances: parsing, distances and neighbour tables.

Nodes use a canonical layout regardless of the numbering in the source file:
the depot is node 0, customers are ``1..n_c`` and charging stations are
``n_c+1..n_c+n_s``.  ``Instance.file_ids`` maps canonical nodes back to the ids
used in the file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

import numpy as np


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed into a valid instance."""


_HEADER_KEYS = {
    "NAME", "COMMENT", "TYPE", "OPTIMAL_VALUE", "VEHICLES", "DIMENSION",
    "STATIONS", "CAPACITY", "ENERGY_CAPACITY", "ENERGY_CONSUMPTION",
    "EDGE_WEIGHT_FORMAT", "EDGE_WEIGHT_TYPE",
}
_SECTIONS = {
    "NODE_COORD_SECTION", "DEMAND_SECTION", "STATIONS_COORD_SECTION", "DEPOT_SECTION",
}


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    n_c: int
    n_s: int
    coords: np.ndarray
    demand: np.ndarray
    max_load: float
    max_energy: float
    h: float
    min_routes: int = 0
    file_ids: Optional[np.ndarray] = None
    optimal_value: Optional[float] = None

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        demand = np.ascontiguousarray(self.demand, dtype=np.float64)
        n = 1 + self.n_c + self.n_s
        if coords.shape != (n, 2):
            raise InstanceFormatError(f"expected {n} coordinates, got shape {coords.shape}")
        if demand.shape != (n,):
            raise InstanceFormatError(f"expected {n} demands, got shape {demand.shape}")
        if self.n_c < 1:
            raise InstanceFormatError("instance has no customers")
        if not (self.h > 0 and self.max_energy > 0 and self.max_load > 0):
            raise InstanceFormatError("h, energy capacity and load capacity must be positive")
        if demand[0] != 0 or np.any(demand[self.n_c + 1:] != 0):
            raise InstanceFormatError("depot and stations must have zero demand")
        cust = demand[1:self.n_c + 1]
        if np.any(cust <= 0):
            bad = int(np.flatnonzero(cust <= 0)[0]) + 1
            raise InstanceFormatError(f"customer {bad} has non-positive demand")
        if np.any(cust > self.max_load):
            bad = int(np.argmax(cust)) + 1
            raise InstanceFormatError(
                f"customer {bad} demand {cust[bad - 1]:g} exceeds capacity {self.max_load:g}")
        file_ids = self.file_ids
        if file_ids is None:
            file_ids = np.arange(1, n + 1, dtype=np.int64)
        file_ids = np.asarray(file_ids, dtype=np.int64)
        if file_ids.shape != (n,) or len(set(file_ids.tolist())) != n:
            raise InstanceFormatError("file id mapping must be a bijection")
        coords.setflags(write=False)
        demand.setflags(write=False)
        file_ids.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "file_ids", file_ids)

    @property
    def n_nodes(self) -> int:
        return 1 + self.n_c + self.n_s

    @property
    def customers(self) -> range:
        return range(1, self.n_c + 1)

    @property
    def stations(self) -> range:
        return range(self.n_c + 1, self.n_nodes)

    def is_customer(self, node: int) -> bool:
        return 1 <= node <= self.n_c

    def is_station(self, node: int) -> bool:
        return self.n_c < node < self.n_nodes

    @cached_property
    def dist(self) -> np.ndarray:
        """Full Euclidean distance matrix, unrounded."""
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        d = np.sqrt((diff ** 2).sum(axis=-1))
        d.setflags(write=False)
        return d

    @cached_property
    def energy_matrix(self) -> np.ndarray:
        e = self.h * self.dist
        e.setflags(write=False)
        return e

    @cached_property
    def best_station(self) -> np.ndarray:
        """``best_station[a, b]`` is the station minimising d(a,s) + d(s,b)."""
        if self.n_s == 0:
            return np.full((self.n_nodes, self.n_nodes), -1, dtype=np.int64)
        st = np.arange(self.n_c + 1, self.n_nodes)
        d = self.dist
        # (n, n, n_s) detour through each station; argmin keeps the lowest index on ties
        via = d[:, st][:, None, :] + d[st, :].T[None, :, :]
        table = st[np.argmin(via, axis=2)].astype(np.int64)
        table.setflags(write=False)
        return table

    @cached_property
    def proximity(self) -> np.ndarray:
        """Row ``c`` lists the other customers by ascending distance to ``c``.

        Row 0 is padding so rows can be indexed by customer id directly.
        """
        n_c = self.n_c
        table = np.zeros((n_c + 1, max(n_c - 1, 0)), dtype=np.int64)
        cust = np.arange(1, n_c + 1)
        d = self.dist[1:n_c + 1, 1:n_c + 1]
        for i in range(n_c):
            order = np.argsort(d[i], kind="stable")
            order = order[order != i]
            table[i + 1] = cust[order]
        table.setflags(write=False)
        return table

    def distance(self, a: int, b: int) -> float:
        return float(self.dist[a, b])

    def energy(self, a: int, b: int) -> float:
        return float(self.h * self.dist[a, b])

    def nearest_station(self, a: int, b: int) -> int:
        if self.n_s == 0:
            raise ValueError("instance has no charging stations")
        return int(self.best_station[a, b])

    def closeness_count(self, r: float) -> int:
        """Number of candidates kept for closeness fraction ``r`` (ceil, at least 1)."""
        if not 0 < r <= 1:
            raise ValueError(f"closeness fraction must be in (0, 1], got {r}")
        others = self.n_c - 1
        if others == 0:
            return 0
        # guard against 0.1 * 30 == 3.0000000000000004
        return min(others, max(1, math.ceil(r * others - 1e-9)))

    def closest_customers(self, c: int, r: float) -> list[int]:
        if not self.is_customer(c):
            raise ValueError(f"node {c} is not a customer")
        return self.proximity[c, :self.closeness_count(r)].tolist()

    @cached_property
    def _inverse_ids(self) -> dict[int, int]:
        return {int(f): i for i, f in enumerate(self.file_ids)}

    def to_file_ids(self, seq: Iterable[int]) -> list[int]:
        return [int(self.file_ids[v]) for v in seq]

    def from_file_ids(self, ids: Iterable[int]) -> list[int]:
        lookup = self._inverse_ids
        out = []
        for f in ids:
            if int(f) not in lookup:
                raise KeyError(f"unknown node id {f}")
            out.append(lookup[int(f)])
        return out


def _number(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(f"non-numeric {what}: {token!r}") from None


def _int(token: str, what: str) -> int:
    value = _number(token, what)
    if value != int(value):
        raise InstanceFormatError(f"non-integer {what}: {token!r}")
    return int(value)


def parse_instance(text: str | Iterable[str]) -> Instance:
    """Parse a WCCI2020-style ``.evrp`` instance."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header: dict[str, str] = {}
    sections: dict[str, list[list[str]]] = {}
    current = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if upper in _SECTIONS:
            if upper in sections:
                raise InstanceFormatError(f"line {lineno}: duplicate section {upper}")
            current = upper
            sections[current] = []
            continue
        if ":" in line and not line[0].isdigit() and not line.startswith("-"):
            key, _, value = line.partition(":")
            key = key.strip().upper()
            if key not in _HEADER_KEYS:
                raise InstanceFormatError(f"line {lineno}: unknown header key {key!r}")
            header[key] = value.strip()
            current = None
            continue
        if current is None:
            raise InstanceFormatError(f"line {lineno}: unexpected content {line!r}")
        sections[current].append(line.split())

    for key in ("DIMENSION", "STATIONS", "CAPACITY", "ENERGY_CAPACITY", "ENERGY_CONSUMPTION"):
        if key not in header:
            raise InstanceFormatError(f"missing header {key}")
    if header.get("TYPE", "EVRP").upper() != "EVRP":
        raise InstanceFormatError(f"unsupported TYPE {header['TYPE']!r}")
    ewf = header.get("EDGE_WEIGHT_FORMAT", header.get("EDGE_WEIGHT_TYPE", "EUC_2D"))
    if ewf.upper() != "EUC_2D":
        raise InstanceFormatError(f"unsupported edge weight format {ewf!r}")

    dimension = _int(header["DIMENSION"], "DIMENSION")
    n_s = _int(header["STATIONS"], "STATIONS")
    if dimension < 2 or n_s < 0:
        raise InstanceFormatError("DIMENSION must be >= 2 and STATIONS >= 0")
    required = ["NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION"]
    if n_s:
        required.append("STATIONS_COORD_SECTION")
    for sec in required:
        if sec not in sections:
            raise InstanceFormatError(f"missing section {sec}")

    coords: dict[int, tuple[float, float]] = {}
    for row in sections["NODE_COORD_SECTION"]:
        if len(row) != 3:
            raise InstanceFormatError(f"bad coordinate line {' '.join(row)!r}")
        nid = _int(row[0], "node id")
        if nid in coords:
            raise InstanceFormatError(f"duplicate node id {nid}")
        coords[nid] = (_number(row[1], "coordinate"), _number(row[2], "coordinate"))
    if len(coords) != dimension + n_s:
        raise InstanceFormatError(
            f"dimension mismatch: expected {dimension + n_s} coordinates, got {len(coords)}")

    demands: dict[int, float] = {}
    for row in sections["DEMAND_SECTION"]:
        if len(row) != 2:
            raise InstanceFormatError(f"bad demand line {' '.join(row)!r}")
        nid = _int(row[0], "node id")
        if nid not in coords:
            raise InstanceFormatError(f"demand for unknown node {nid}")
        demands[nid] = _number(row[1], "demand")
    if len(demands) != dimension:
        raise InstanceFormatError(
            f"dimension mismatch: expected {dimension} demands, got {len(demands)}")

    station_ids: list[int] = []
    for row in sections.get("STATIONS_COORD_SECTION", []):
        nid = _int(row[0], "station id")
        if nid not in coords or nid in station_ids:
            raise InstanceFormatError(f"bad station id {nid}")
        station_ids.append(nid)
    if len(station_ids) != n_s:
        raise InstanceFormatError(
            f"dimension mismatch: expected {n_s} stations, got {len(station_ids)}")

    depot_rows = [r[0] for r in sections["DEPOT_SECTION"] if r[0] != "-1"]
    if len(depot_rows) != 1:
        raise InstanceFormatError("DEPOT_SECTION must list exactly one depot")
    depot = _int(depot_rows[0], "depot id")
    if depot not in coords or depot in station_ids:
        raise InstanceFormatError(f"bad depot id {depot}")
    if demands.get(depot, 0.0) != 0:
        raise InstanceFormatError("depot demand must be 0")

    station_set = set(station_ids)
    customer_ids = sorted(i for i in coords if i != depot and i not in station_set)
    if len(customer_ids) != dimension - 1:
        raise InstanceFormatError("customer count does not match DIMENSION - 1")
    missing = [c for c in customer_ids if c not in demands]
    if missing:
        raise InstanceFormatError(f"customer {missing[0]} has no demand")

    order = [depot] + customer_ids + station_ids
    demand = np.array([0.0] + [demands[c] for c in customer_ids] + [0.0] * n_s)
    capacity = _number(header["CAPACITY"], "CAPACITY")
    if np.any(demand > capacity):
        raise InstanceFormatError("a customer demand exceeds capacity; instance unsolvable")

    opt = header.get("OPTIMAL_VALUE")
    return Instance(
        name=header.get("NAME", "unnamed"),
        n_c=dimension - 1,
        n_s=n_s,
        coords=np.array([coords[i] for i in order]),
        demand=demand,
        max_load=capacity,
        max_energy=_number(header["ENERGY_CAPACITY"], "ENERGY_CAPACITY"),
        h=_number(header["ENERGY_CONSUMPTION"], "ENERGY_CONSUMPTION"),
        min_routes=_int(header.get("VEHICLES", "0"), "VEHICLES"),
        file_ids=np.array(order),
        optimal_value=_number(opt, "OPTIMAL_VALUE") if opt else None,
    )


def load_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def format_instance(inst: Instance) -> str:
    """Serialise an instance in the same file format ``parse_instance`` reads."""
    def num(v: float) -> str:
        return repr(float(v)) if v != int(v) else str(int(v))

    fid = inst.file_ids
    out = [
        f"NAME: {inst.name}",
        "TYPE: EVRP",
        f"VEHICLES: {inst.min_routes}",
        f"DIMENSION: {inst.n_c + 1}",
        f"STATIONS: {inst.n_s}",
        f"CAPACITY: {num(inst.max_load)}",
        f"ENERGY_CAPACITY: {num(inst.max_energy)}",
        f"ENERGY_CONSUMPTION: {num(inst.h)}",
        "EDGE_WEIGHT_FORMAT: EUC_2D",
        "NODE_COORD_SECTION",
    ]
    if inst.optimal_value is not None:
        out.insert(2, f"OPTIMAL_VALUE: {inst.optimal_value!r}")
    out += [f"{fid[i]} {num(x)} {num(y)}" for i, (x, y) in enumerate(inst.coords)]
    out.append("DEMAND_SECTION")
    out += [f"{fid[i]} {num(inst.demand[i])}" for i in range(inst.n_c + 1)]
    out.append("STATIONS_COORD_SECTION")
    out += [str(fid[s]) for s in inst.stations]
    out += ["DEPOT_SECTION", str(fid[0]), "-1", "EOF"]
    return "\n".join(out) + "\n"


def random_instance(n_c: int, n_s: int, rng: np.random.Generator, *, name: str = "random",
                    size: float = 100.0, max_load: float = 100.0, max_energy: float | None = None,
                    h: float = 1.0, demand_range: tuple[int, int] = (10, 40)) -> Instance:
    """Uniform random instance with the depot at the centre.

    ``max_energy`` defaults to a range that forces some, but not all, routes
    through a station.  Stations are scattered uniformly.
    """
    coords = np.empty((1 + n_c + n_s, 2))
    coords[0] = size / 2
    coords[1:] = rng.uniform(0, size, size=(n_c + n_s, 2)).round(1)
    demand = np.zeros(1 + n_c + n_s)
    demand[1:n_c + 1] = rng.integers(demand_range[0], demand_range[1] + 1, size=n_c)
    if max_energy is None:
        max_energy = h * size * 1.2
    return Instance(name=name, n_c=n_c, n_s=n_s, coords=coords, demand=demand,
                    max_load=max_load, max_energy=max_energy, h=h)
