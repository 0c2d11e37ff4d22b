"""Shared builders for the test suite."""
from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np

from hhasa.instance import Instance, random_instance

ROOT = Path(__file__).resolve().parent.parent
DATA = Path(__file__).resolve().parent / "data"


def instance_dir() -> Path:
    """Directory holding the published ``.evrp`` benchmark files."""
    return Path(os.environ.get("CEVRP_INSTANCE_DIR", ROOT / "instances"))


def benchmark_path(name: str) -> Path:
    return instance_dir() / f"{name}.evrp"


def make_instance(coords, demand, *, n_s=0, max_load=100.0, max_energy=1000.0, h=1.0,
                  name="hand") -> Instance:
    coords = np.asarray(coords, dtype=float)
    n_c = len(coords) - 1 - n_s
    full = np.zeros(len(coords))
    full[1:n_c + 1] = demand
    return Instance(name=name, n_c=n_c, n_s=n_s, coords=coords, demand=full,
                    max_load=max_load, max_energy=max_energy, h=h)


def toy_instance(seed: int, n_c: int = 7, n_s: int = 2) -> Instance:
    """Random instance small enough for brute force, rejecting unsolvable draws.

    The battery range is drawn so that stations matter on some routes.
    """
    from oracle import BruteForce

    rng = np.random.default_rng(seed)
    while True:
        inst = random_instance(n_c, n_s, rng, name=f"toy{seed}", max_load=100,
                               max_energy=float(rng.uniform(70, 110)))
        opt, _ = BruteForce.from_instance(inst).solve()
        if opt < math.inf:
            return inst


def feasible_random_instance(seed: int, n_c: int, n_s: int, **kw) -> Instance:
    """Random instance where every customer is servable on its own route."""
    from hhasa.solution import Tour, Unrepairable, insert_stations

    rng = np.random.default_rng(seed)
    while True:
        inst = random_instance(n_c, n_s, rng, **kw)
        try:
            for c in inst.customers:
                insert_stations(Tour([0, c, 0]), inst)
        except Unrepairable:
            continue
        return inst
