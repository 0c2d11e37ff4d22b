"""The low-level heuristic pool and the generate / repair / adjust-station steps."""
from __future__ import annotations

import enum
from collections import deque
from typing import Optional

import numpy as np

from . import _kernels as K
from .instance import Instance
from .solution import Tour, Unrepairable

OPERATORS = ("Swap", "Reversion", "2Opt", "Insertion")


class HeuristicId(enum.IntEnum):
    SWAP_R1 = 0
    REVERSION_R1 = 1
    TWO_OPT_R1 = 2
    INSERTION_R1 = 3
    SWAP_R2 = 4
    REVERSION_R2 = 5
    TWO_OPT_R2 = 6
    INSERTION_R2 = 7

    @property
    def op(self) -> int:
        return int(self) % 4

    @property
    def closeness(self) -> int:
        """1 for the r1 neighbourhood, 2 for r2."""
        return 1 + int(self) // 4

    @property
    def label(self) -> str:
        return f"{OPERATORS[self.op]}_r{self.closeness}"


N_HEURISTICS = len(HeuristicId)


class CustomerQueue:
    """Random order in which customers take the role of ``c1``.

    Refilled with a fresh permutation whenever it runs dry.
    """

    def __init__(self, n_c: int, items=()):
        self.n_c = n_c
        self._items = deque(int(c) for c in items)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def pop(self, rng: np.random.Generator) -> int:
        if not self._items:
            self._items.extend((rng.permutation(self.n_c) + 1).tolist())
        return self._items.popleft()

    def copy(self) -> "CustomerQueue":
        return CustomerQueue(self.n_c, self._items)


def apply_heuristic(tour: Tour, h: HeuristicId, c1: int, c2: int, inst: Instance) -> Tour:
    """Apply one operator to customers ``c1`` and ``c2`` and normalise the result."""
    if c1 == c2:
        raise ValueError("c1 and c2 must differ")
    seq = K.apply_operator(tour.seq, HeuristicId(h).op, c1, c2)
    return Tour(K.normalize(seq, inst.dist, inst.n_c))


def select_c2(c1: int, h: HeuristicId, inst: Instance, rng: np.random.Generator,
              r1: float = 0.10, r2: float = 1.0) -> Optional[int]:
    """Uniform draw among the closest customers to ``c1``; None if ``n_c == 1``."""
    r = r1 if HeuristicId(h).closeness == 1 else r2
    k = inst.closeness_count(r)
    if k == 0:
        return None
    return int(inst.proximity[c1, rng.integers(k)])


def generate(tour: Tour, h: HeuristicId, queue: CustomerQueue, inst: Instance,
             rng: np.random.Generator, r1: float = 0.10, r2: float = 1.0) -> tuple[Tour, CustomerQueue]:
    """Pop ``c1`` from the queue, pick ``c2`` and apply the heuristic.

    The result may violate load or battery limits.
    """
    c1 = queue.pop(rng)
    c2 = select_c2(c1, h, inst, rng, r1, r2)
    if c2 is None:
        return Tour(tour.seq), queue
    return apply_heuristic(tour, h, c1, c2, inst), queue


def repair_load(tour: Tour, inst: Instance) -> Tour:
    """Make every route respect the load capacity, or raise :class:`Unrepairable`."""
    seq, status = K.repair_load(tour.seq, inst.demand, inst.max_load, inst.dist, inst.n_c)
    if status != K.OK:
        raise Unrepairable("no route has room for an overflowing customer")
    return Tour(seq)


def adjust_stations(tour: Tour, inst: Instance, memory: float, p_m: float, p_e: float,
                    rng: np.random.Generator) -> Tour:
    """Per route: add stations where needed, otherwise maybe move or drop one.

    With probability ``1 - memory`` a route that is already energy feasible
    gets a roulette-wheel choice between moving one of its station visits to
    another arc (weight ``p_m``) and eliminating it (weight ``p_e``); stations
    are then re-added if the route can no longer be completed.
    """
    if abs(p_m + p_e - 1.0) > 1e-9:
        raise ValueError("p_m + p_e must equal 1")
    rand = rng.random((K.count_routes(tour.seq), 4))
    seq, status = K.adjust_stations(tour.seq, rand, memory, p_m, inst.dist, inst.energy_matrix,
                                    inst.max_energy, inst.n_c, inst.n_nodes)
    if status != K.OK:
        raise Unrepairable("station adjustment left a route without enough charge")
    return Tour(seq)
