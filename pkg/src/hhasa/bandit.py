"""Multi-armed bandit selectors over the heuristic pool.

All selectors read a :class:`BanditState` holding per-arm reward totals ``R``,
penalty counts ``P`` and selection counts ``S`` for the current local search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .neighborhoods import N_HEURISTICS


def _zeros(dtype):
    return field(default_factory=lambda: np.zeros(N_HEURISTICS, dtype=dtype))


@dataclass
class BanditState:
    R: np.ndarray = _zeros(np.float64)
    P: np.ndarray = _zeros(np.int64)
    S: np.ndarray = _zeros(np.int64)
    k: int = 0
    # selections made this epoch, in order (trace output only)
    picks: list = field(default_factory=list)

    @property
    def n_arms(self) -> int:
        return len(self.R)

    def reset_epoch(self) -> None:
        self.R[:] = 0
        self.P[:] = 0
        self.S[:] = 0
        self.k = 0
        self.picks = []

    def selection_counts(self) -> np.ndarray:
        return np.bincount(np.asarray(self.picks, dtype=np.int64), minlength=self.n_arms)


def _argmax_random_tie(values: np.ndarray, rng: np.random.Generator) -> int:
    best = np.flatnonzero(values == values.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


def select_epsilon_greedy(state: BanditState, epsilon: float, rng: np.random.Generator) -> int:
    """Explore uniformly with probability ``epsilon``, else exploit argmax R."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must be in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(state.n_arms))
    return _argmax_random_tie(state.R, rng)


def select_thompson(state: BanditState, rng: np.random.Generator) -> int:
    theta = rng.beta(state.R + 1.0, state.P + 1.0)
    return int(np.argmax(theta))


def ucb1_scores(state: BanditState, k: int, variant: str = "scaled") -> np.ndarray:
    """Upper-confidence scores at iteration ``k``.

    ``variant="scaled"`` divides the whole exploration term by S_i,
    ``R_i/S_i + sqrt(2 ln k)/S_i``; ``"textbook"`` is the usual
    ``R_i/S_i + sqrt(2 ln k / S_i)``.
    """
    S = state.S.astype(np.float64)
    if variant == "scaled":
        return state.R / S + math.sqrt(2.0 * math.log(k)) / S
    if variant == "textbook":
        return state.R / S + np.sqrt(2.0 * math.log(k) / S)
    raise ValueError(f"unknown UCB1 variant {variant!r}")


def select_ucb1(state: BanditState, variant: str = "scaled") -> tuple[int, BanditState]:
    """Round-robin over the arms for the first pass, then argmax of the UCB score.

    ``state.k`` counts finished iterations, so the upcoming one is ``k + 1``.
    The chosen arm's selection count is incremented.
    """
    k = state.k + 1
    if k <= state.n_arms:
        arm = k - 1
    else:
        # np.argmax keeps the lowest index on ties
        arm = int(np.argmax(ucb1_scores(state, k, variant)))
    state.S[arm] += 1
    return arm, state


def select_random(rng: np.random.Generator, n_arms: int = N_HEURISTICS) -> int:
    return int(rng.integers(n_arms))


def record_outcome(state: BanditState, arm: int, improved: bool, reward: float = 1.0) -> BanditState:
    if improved:
        state.R[arm] += reward
    else:
        state.P[arm] += 1
    state.k += 1
    return state


SELECTORS = ("random", "eg", "ts", "ucb1")


def select(name: str, state: BanditState, rng: np.random.Generator, *,
           epsilon: float = 0.1, ucb_variant: str = "scaled") -> int:
    """Dispatch on selector name and log the pick on the state."""
    if name == "random":
        arm = select_random(rng, state.n_arms)
    elif name == "eg":
        arm = select_epsilon_greedy(state, epsilon, rng)
    elif name == "ts":
        arm = select_thompson(state, rng)
    elif name == "ucb1":
        arm, _ = select_ucb1(state, ucb_variant)
    else:
        raise ValueError(f"unknown selector {name!r}; expected one of {SELECTORS}")
    state.picks.append(arm)
    return arm
