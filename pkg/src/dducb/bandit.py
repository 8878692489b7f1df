"""Stochastic bandit instances and counter-based reward sampling.

Reward noise for ``(master_seed, rep, agent, round)`` comes from a Philox
stream keyed by ``(master_seed, rep)`` whose counter is positioned by the
round; agent ``i`` takes the ``i``-th draw of that round's stream. A draw
therefore depends only on its key, never on evaluation order or on how many
agents share the round.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ArmOutOfRangeError

__all__ = [
    "BanditInstance",
    "GapProfile",
    "RewardKey",
    "benchmark_arms",
    "gaps",
    "sample_reward",
    "round_draws",
    "draw_matrix",
    "rewards_from_draws",
    "load_means_csv",
]

Distribution = Literal["gaussian", "bernoulli"]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class BanditInstance:
    means: np.ndarray
    sigma: float = 1.0
    distribution: Distribution = "gaussian"

    def __post_init__(self):
        means = np.array(self.means, dtype=np.float64).reshape(-1)
        if means.size < 1:
            raise ValueError("need at least one arm")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        if self.distribution == "bernoulli":
            if np.any(means < 0.0) or np.any(means > 1.0):
                raise ValueError("bernoulli means must lie in [0, 1]")
            object.__setattr__(self, "sigma", 0.5)
        elif self.distribution != "gaussian":
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")

    @property
    def n_arms(self) -> int:
        return int(self.means.size)


@dataclass(frozen=True)
class GapProfile:
    gaps: np.ndarray
    optimal_arm_set: frozenset[int] = field(default_factory=frozenset)


@dataclass(frozen=True)
class RewardKey:
    master_seed: int
    rep: int
    agent: int
    round: int


def benchmark_arms() -> BanditInstance:
    """One arm with mean 1 and sixteen with mean 0.8, unit-variance Gaussian."""
    return BanditInstance(np.array([1.0] + [0.8] * 16), sigma=1.0)


def gaps(instance: BanditInstance) -> GapProfile:
    mu = instance.means
    best = mu.max()
    g = best - mu
    optimal = frozenset(int(k) for k in np.flatnonzero(mu == best))
    g[list(optimal)] = 0.0
    return GapProfile(gaps=g, optimal_arm_set=optimal)


def _generator(master_seed: int, rep: int, round_: int) -> np.random.Generator:
    key = np.array([master_seed & _MASK64, rep & _MASK64], dtype=np.uint64)
    counter = np.array([0, round_ & _MASK64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def round_draws(master_seed: int, rep: int, round_: int, n: int, distribution: Distribution = "gaussian") -> np.ndarray:
    """Draws for agents ``0..n-1`` at one round: standard normals or uniforms."""
    gen = _generator(master_seed, rep, round_)
    if distribution == "gaussian":
        return gen.standard_normal(n)
    return gen.random(n)


def draw_matrix(master_seed: int, rep: int, rounds: int, n: int, distribution: Distribution = "gaussian") -> np.ndarray:
    """``rounds x n`` block of draws; row ``t - 1`` belongs to round ``t``."""
    out = np.empty((rounds, n))
    for t in range(1, rounds + 1):
        out[t - 1] = round_draws(master_seed, rep, t, n, distribution)
    return out


def rewards_from_draws(instance: BanditInstance, arms: np.ndarray, draws: np.ndarray) -> np.ndarray:
    mu = instance.means[arms]
    if instance.distribution == "gaussian":
        return mu + instance.sigma * draws
    return (draws < mu).astype(np.float64)


def sample_reward(instance: BanditInstance, arm: int, key: RewardKey) -> float:
    if not 0 <= arm < instance.n_arms:
        raise ArmOutOfRangeError(f"arm {arm} out of range for {instance.n_arms} arms")
    draw = round_draws(key.master_seed, key.rep, key.round, key.agent + 1, instance.distribution)[-1]
    return float(rewards_from_draws(instance, np.array([arm]), np.array([draw]))[0])


def load_means_csv(path: str | Path, sigma: float = 1.0, distribution: Distribution = "gaussian") -> BanditInstance:
    """Arm means from a one-column CSV; a non-numeric first row is a header."""
    values = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"{path}: row {i + 1} is not a number: {row[0]!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError(f"{path}: no finite arm means found")
    return BanditInstance(np.array(values), sigma=sigma, distribution=distribution)
