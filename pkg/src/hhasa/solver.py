"""Simulated annealing with bandit-driven heuristic selection and adaptive reheating."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .bandit import BanditState, record_outcome, select
from .instance import Instance
from .neighborhoods import CustomerQueue, HeuristicId
from .solution import Tour, construct_initial, evaluate, format_solution

# relative margin below which a fitness change is treated as float noise
IMPROVE_TOL = 1e-9
# an epoch gives up after this many attempts per planned evaluation
EPOCH_ATTEMPTS = 10

_SELECTOR_ALIASES = {
    "random": "random", "eg": "eg", "epsilongreedy": "eg", "epsilon_greedy": "eg",
    "ts": "ts", "thompson": "ts", "ucb1": "ucb1", "ucb": "ucb1",
}


def canonical_selector(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in _SELECTOR_ALIASES:
        raise ValueError(f"unknown selector {name!r}")
    return _SELECTOR_ALIASES[key]


@dataclass
class SolverConfig:
    alpha: float = 0.99
    t0: float = 1.0
    limit: int = 20
    iters_per_epoch: int = 40         # multiplied by n_c
    max_acc: int = 25000              # multiplied by n_c
    budget_scale: float = 1.0
    max_evaluations: Optional[int] = None   # absolute override of max_acc * n_c * scale
    x_min: float = 0.0
    x_max: float = 90.0
    y_min: float = 0.05
    y_max: float = 1.0
    epsilon: float = 0.1
    memory: float = 0.5
    p_m: float = 0.6
    p_e: float = 0.4
    r1: float = 0.10
    r2: float = 1.0
    selector: str = "ts"
    ucb_variant: str = "scaled"
    reward: float = 1.0
    seed: int = 0
    delta_mode: str = "relative"
    relative_scale: float = 100.0     # relative deltas are in percent of current fitness

    def __post_init__(self):
        self.selector = canonical_selector(self.selector)
        self.delta_mode = self.delta_mode.lower()
        if self.delta_mode not in ("raw", "relative"):
            raise ValueError("delta_mode must be 'raw' or 'relative'")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if self.limit < 1 or self.iters_per_epoch < 1:
            raise ValueError("limit and iters_per_epoch must be >= 1")
        if self.budget_scale <= 0:
            raise ValueError("budget_scale must be positive")
        if abs(self.p_m + self.p_e - 1.0) > 1e-9:
            raise ValueError("p_m + p_e must equal 1")
        if not 0 <= self.memory <= 1:
            raise ValueError("memory must be in [0, 1]")

    def epoch_length(self, n_c: int) -> int:
        return self.iters_per_epoch * n_c

    def budget(self, n_c: int) -> int:
        if self.max_evaluations is not None:
            return int(self.max_evaluations)
        return max(1, int(round(self.max_acc * n_c * self.budget_scale)))

    @classmethod
    def from_mapping(cls, values: dict, base: Optional["SolverConfig"] = None) -> "SolverConfig":
        """Build a config from string or typed values, e.g. a parsed key=value file."""
        base = base or cls()
        kw = asdict(base)
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            if not isinstance(raw, str):
                kw[key] = raw
                continue
            current = kw[key]
            if key == "max_evaluations":
                kw[key] = None if raw.lower() in ("", "none") else int(raw)
            elif isinstance(current, bool):
                kw[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                kw[key] = int(raw)
            elif isinstance(current, float):
                kw[key] = float(raw)
            else:
                kw[key] = raw
        return cls(**kw)


@dataclass
class SolverState:
    current: Tour
    best: Tour
    T: float
    h_up: int = 0
    acc: int = 0
    bandit: BanditState = field(default_factory=BanditState)
    queue: CustomerQueue = None
    epoch_improved: bool = False
    epoch_evals: int = 0


@dataclass
class RunRecord:
    instance: str
    selector: str
    seed: int
    best_fitness: float
    evaluations: int
    initial_fitness: float
    best_tour: str
    wall_ms: float = field(default=0.0, compare=False)
    epoch_trace: list = field(default_factory=list)
    bandit_trace: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))

    @classmethod
    def failed(cls, instance: str, selector: str, seed: int, error: str) -> "RunRecord":
        return cls(instance, selector, seed, math.nan, 0, math.nan, "", error=error)


def metropolis_accept(delta: float, T: float, rng: np.random.Generator) -> bool:
    """Always accept non-worsening moves, otherwise with probability exp(-delta/T)."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    if delta <= 0:
        return True
    return math.exp(-delta / T) > rng.random()


def reheat_beta(acc: int, max_acc: int, cfg: SolverConfig) -> float:
    """Temperature increment, rising linearly with the share of budget spent.

    The line passes through (x_min, y_min) and (x_max, y_max) in percent of
    budget, and the result is clamped to [y_min, y_max].
    """
    if not 0 <= acc <= max_acc:
        raise ValueError("acc must lie in [0, max_acc]")
    if cfg.x_max == cfg.x_min:
        return cfg.y_max
    pct = 100.0 * acc / max_acc
    m = (cfg.y_max - cfg.y_min) / (cfg.x_max - cfg.x_min)
    beta = m * pct + (cfg.y_max - m * cfg.x_max)
    return min(max(beta, cfg.y_min), cfg.y_max)


def initial_state(inst: Instance, cfg: SolverConfig, rng: np.random.Generator) -> SolverState:
    tour = construct_initial(inst, rng)
    return SolverState(current=tour, best=tour, T=cfg.t0,
                       queue=CustomerQueue(inst.n_c))


Observer = Callable[[SolverState, int, bool], None]


def local_search_epoch(state: SolverState, inst: Instance, cfg: SolverConfig,
                       rng: np.random.Generator, max_acc: Optional[int] = None,
                       observer: Optional[Observer] = None) -> SolverState:
    """One block of ``cfg.epoch_length(n_c)`` evaluations at a fixed temperature.

    ``observer(state, arm, accepted)`` is called after every evaluated
    candidate; tests use it to check intermediate tours.
    """
    max_acc = cfg.budget(inst.n_c) if max_acc is None else max_acc
    dist, energy, demand = inst.dist, inst.energy_matrix, inst.demand
    n_c, n_nodes = inst.n_c, inst.n_nodes
    k_r1 = inst.closeness_count(cfg.r1)
    k_r2 = inst.closeness_count(cfg.r2)
    proximity = inst.proximity
    bandit = state.bandit
    cur_seq = state.current.seq
    cur_fit = state.current.fitness
    best_fit = state.best.fitness
    state.epoch_improved = False
    state.epoch_evals = 0

    length_target = cfg.epoch_length(n_c)
    # unrepairable candidates do not count as evaluations; cap the attempts
    # so an instance where nearly every move fails still terminates
    for _ in range(EPOCH_ATTEMPTS * length_target):
        if state.acc >= max_acc or state.epoch_evals >= length_target:
            break
        arm = select(cfg.selector, bandit, rng, epsilon=cfg.epsilon, ucb_variant=cfg.ucb_variant)
        h = HeuristicId(arm)
        c1 = state.queue.pop(rng)
        k = k_r1 if h.closeness == 1 else k_r2
        c2 = int(proximity[c1, rng.integers(k)]) if k > 0 else -1
        # adjust-station uniforms; repair never adds routes so this bounds the need
        rand = rng.random((K.count_routes(cur_seq), 4))
        cand, status, length = K.propose(cur_seq, h.op, c1, c2, rand, cfg.memory, cfg.p_m,
                                         demand, inst.max_load, dist, energy,
                                         inst.max_energy, n_c, n_nodes)
        if status != K.OK:
            record_outcome(bandit, arm, False)
            continue
        state.acc += 1
        state.epoch_evals += 1
        delta = length - cur_fit
        if cfg.delta_mode == "relative":
            delta *= cfg.relative_scale / cur_fit
        improved = length < cur_fit * (1.0 - IMPROVE_TOL)
        if improved and length < best_fit * (1.0 - IMPROVE_TOL):
            best_fit = length
            state.best = Tour(cand, length)
            state.epoch_improved = True
        accepted = metropolis_accept(delta, state.T, rng)
        if accepted:
            cur_seq = cand
            cur_fit = length
            state.current = Tour(cand, length)
        record_outcome(bandit, arm, improved, cfg.reward)
        if observer is not None:
            observer(state, arm, accepted)
    return state


def run(inst: Instance, cfg: SolverConfig, observer: Optional[Observer] = None) -> RunRecord:
    """One full annealing run, deterministic for a given ``cfg.seed``."""
    t_start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    max_acc = cfg.budget(inst.n_c)
    state = initial_state(inst, cfg, rng)
    initial_fitness = state.best.fitness
    epoch_trace = []
    bandit_trace = []
    while state.acc < max_acc:
        state.bandit.reset_epoch()
        T_epoch = state.T
        local_search_epoch(state, inst, cfg, rng, max_acc, observer)
        if state.epoch_improved:
            state.h_up = 0
        else:
            state.h_up += 1
        if state.h_up < cfg.limit:
            state.T *= cfg.alpha
        else:
            state.T += reheat_beta(state.acc, max_acc, cfg)
            state.h_up = 0
        epoch_trace.append({"T": T_epoch, "best": state.best.fitness, "h_up": state.h_up})
        bandit_trace.append({
            "selections": state.bandit.selection_counts().tolist(),
            "rewards": state.bandit.R.tolist(),
        })
        if state.epoch_evals == 0:
            # every move in the epoch was unrepairable; more epochs will not help
            break
    best = state.best
    best_fitness = evaluate(Tour(best.seq), inst)
    return RunRecord(
        instance=inst.name,
        selector=cfg.selector,
        seed=cfg.seed,
        best_fitness=best_fitness,
        evaluations=state.acc,
        initial_fitness=initial_fitness,
        best_tour=format_solution(best, inst, best_fitness),
        wall_ms=(time.perf_counter() - t_start) * 1000.0,
        epoch_trace=epoch_trace,
        bandit_trace=bandit_trace,
    )
