"""Synchronous round engine, repetition runner and node-count estimation.

Every round each agent selects an arm, pulls it, updates locally, then
exchanges messages with its graph neighbors and mixes. Rewards come from the
counter-based stream in :mod:`dducb.bandit`, so a repetition's trace depends
only on the configuration and ``(master_seed, rep)``. Repetitions can run in
worker processes; results are collected in repetition order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .bandit import BanditInstance, benchmark_arms, draw_matrix, gaps as arm_gaps, rewards_from_draws, round_draws
from .errors import LengthMismatchError, ZeroMixedValueError
from .graph import GossipMatrix, build_gossip_matrix, build_topology, cycle_half_matrix
from .mixing import MixParams, compute_delay
from .policy import (
    AgentState,
    CentralizedUCB,
    DDUCBNetwork,
    IndependentUCB,
    PolicyConfig,
    RunningConsensusUCB,
    StageAudit,
    choose_arm,
    dducb_init,
    dducb_round,
    make_message,
    stage_commit,
)

__all__ = [
    "ALGORITHMS",
    "VARIANTS",
    "SimulationConfig",
    "RegretTrace",
    "AggregateCurve",
    "NodeCountEstimate",
    "build_matrix",
    "policy_config",
    "run_repetition",
    "run_simulation",
    "aggregate_traces",
    "estimate_node_count",
]

Algorithm = Literal["dducb", "dducb_unaccel", "centralized", "independent", "running_consensus"]
ALGORITHMS = ("dducb", "dducb_unaccel", "centralized", "independent", "running_consensus")
VARIANTS = ("base", "local_pulls", "delta_mix", "share_pulls")


@dataclass(frozen=True)
class SimulationConfig:
    """One algorithm on one topology and bandit for ``repetitions`` runs.

    ``variant`` is ``"base"`` or a ``+``-joined set of DDUCB modifications
    (``local_pulls``, ``delta_mix``, ``share_pulls``). ``delay`` fixes the
    stage length for DDUCB, overriding the one derived from ``epsilon``.
    ``matrix`` chooses between the Laplacian construction and, for odd
    cycles, the zero-diagonal ``1/2`` cycle matrix.
    """

    topology: str = "cycle"
    n_nodes: int = 100
    bandit: BanditInstance = field(default_factory=benchmark_arms)
    algorithm: Algorithm = "dducb"
    horizon: int = 10_000
    master_seed: int = 0
    repetitions: int = 1
    eta: float = 2.0
    epsilon: float = 1.0 / 22.0
    gamma: float = 2.0
    variant: str = "base"
    bandwidth: int | None = None
    lambda2_override: float | None = None
    delay: int | None = None
    edges: tuple[tuple[int, int], ...] | None = None
    matrix: Literal["laplacian", "cycle_half"] = "laplacian"
    label: str | None = None
    record_choices: bool = False
    audit: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}")

    @property
    def variants(self) -> frozenset[str]:
        return frozenset(p.strip() for p in self.variant.split("+") if p.strip()) - {"base"}

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.algorithm == "running_consensus":
            return f"running_consensus_g{self.gamma:g}"
        return self.algorithm


@dataclass
class RegretTrace:
    """Cumulative pseudo-regret of one repetition.

    ``cumulative[t - 1]`` is the regret after round ``t``, computed from the
    integer pull counts so the final value equals ``sum_k gap_k * n_T^k``.
    ``choices`` (``T x N`` arm ids) is kept only when requested.
    """

    rep: int
    algo: str
    cumulative: np.ndarray
    pull_counts: np.ndarray
    choices: np.ndarray | None = None
    audits: list[StageAudit] = field(default_factory=list)
    message_size: int = 0
    stage_length: int | None = None


@dataclass(frozen=True)
class AggregateCurve:
    algo: str
    mean: np.ndarray
    std: np.ndarray
    n_traces: int


def build_matrix(config: SimulationConfig) -> GossipMatrix:
    if config.matrix == "cycle_half":
        if config.topology != "cycle":
            raise ValueError("cycle_half matrix needs the cycle topology")
        return cycle_half_matrix(config.n_nodes)
    topo = build_topology(config.topology, config.n_nodes, config.edges)
    return build_gossip_matrix(topo)


def policy_config(config: SimulationConfig, matrix: GossipMatrix) -> PolicyConfig:
    lam = config.lambda2_override if config.lambda2_override is not None else matrix.lambda2_abs
    v = config.variants
    return PolicyConfig(
        n_nodes=config.n_nodes,
        lambda2_bound=lam,
        sigma=config.bandit.sigma,
        eta=config.eta,
        epsilon=config.epsilon,
        accelerated=config.algorithm != "dducb_unaccel",
        variant_local_pulls="local_pulls" in v,
        variant_delta_mix="delta_mix" in v,
        variant_share_pulls="share_pulls" in v,
        bandwidth_L=config.bandwidth,
        delay=config.delay,
    )


def _cumulative_regret(gap: np.ndarray, count_history: np.ndarray) -> np.ndarray:
    positive = np.flatnonzero(gap > 0.0)
    g = gap[positive].tolist()
    return np.array([math.fsum(x * n for x, n in zip(g, row)) for row in count_history[:, positive].tolist()])


def _vectorized(config: SimulationConfig, matrix: GossipMatrix, rep: int):
    inst, n, horizon = config.bandit, config.n_nodes, config.horizon
    draws = draw_matrix(config.master_seed, rep, horizon, n, inst.distribution)
    algo = config.algorithm
    extra: dict = {}
    if algo == "centralized":
        policy = CentralizedUCB(inst, n, eta=config.eta)
        return policy.run(draws), None, extra
    if algo == "independent":
        policy = IndependentUCB(inst, n, eta=config.eta)
    elif algo == "running_consensus":
        policy = RunningConsensusUCB(inst, matrix.entries, gamma=config.gamma)
        extra["message_size"] = policy.message_size
    else:
        policy = DDUCBNetwork(policy_config(config, matrix), matrix.entries, inst, audit=config.audit)
        extra["message_size"] = policy.message_size
        extra["stage_length"] = policy.stage_length
    hist = np.empty((horizon, inst.n_arms), dtype=np.int64)
    choices = np.empty((horizon, n), dtype=np.int64) if config.record_choices else None
    for t in range(horizon):
        arms = policy.round(draws[t])
        hist[t] = policy.counts
        if choices is not None:
            choices[t] = arms
    if isinstance(policy, DDUCBNetwork):
        extra["audits"] = policy.audits
    return hist, choices, extra


def _agents(config: SimulationConfig, matrix: GossipMatrix, rep: int):
    """Per-agent engine: explicit messages, each agent reading only its neighbors."""
    if config.algorithm not in ("dducb", "dducb_unaccel"):
        raise ValueError("the agents engine runs DDUCB only")
    inst, n, k = config.bandit, config.n_nodes, config.bandit.n_arms
    cfg = policy_config(config, matrix)
    rows = [matrix.row(i) for i in range(n)]
    neighbors = [[j for j in sorted(rows[i]) if j != i] for i in range(n)]
    counts = np.zeros(k, dtype=np.int64)
    hist = np.empty((config.horizon, k), dtype=np.int64)
    choices = np.empty((config.horizon, n), dtype=np.int64) if config.record_choices else None
    warm = np.zeros((n, k))
    states: list[AgentState] = []
    for t in range(1, config.horizon + 1):
        draws = round_draws(config.master_seed, rep, t, n, inst.distribution)
        if t <= k:
            arms = np.full(n, t - 1, dtype=np.int64)
            warm[:, t - 1] = rewards_from_draws(inst, arms, draws)
            if t == k:
                states = [dducb_init(warm[i], cfg, node=i, p_row=rows[i]) for i in range(n)]
        else:
            arms = np.array([choose_arm(s, cfg) for s in states], dtype=np.int64)
            rewards = rewards_from_draws(inst, arms, draws)
            outbox = [make_message(s, cfg, rewards[i]) for i, s in enumerate(states)]
            for i, s in enumerate(states):
                dducb_round(s, float(rewards[i]), {j: outbox[j] for j in neighbors[i]}, cfg)
            for s in states:
                if s.r == s.plan.stage_length:
                    stage_commit(s, cfg)
        counts += np.bincount(arms, minlength=k)
        hist[t - 1] = counts
        if choices is not None:
            choices[t - 1] = arms
    plan = cfg.schedule(k)
    size = 2 * k if plan.full else max(len(e) for e in plan.rounds)
    size += 2 * k * cfg.variant_delta_mix + 2 * cfg.variant_share_pulls
    return hist, choices, {"message_size": size, "stage_length": plan.stage_length}


def run_repetition(config: SimulationConfig, rep: int, engine: str = "vectorized") -> RegretTrace:
    matrix = build_matrix(config) if config.algorithm not in ("centralized", "independent") else None
    if engine == "vectorized":
        hist, choices, extra = _vectorized(config, matrix, rep)
    elif engine == "agents":
        hist, choices, extra = _agents(config, matrix, rep)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    rounds = np.arange(1, config.horizon + 1)
    if not np.array_equal(hist.sum(axis=1), rounds * config.n_nodes):
        raise RuntimeError("ground-truth counts do not add up to N pulls per round")
    gap = arm_gaps(config.bandit).gaps
    return RegretTrace(
        rep=rep,
        algo=config.name,
        cumulative=_cumulative_regret(gap, hist),
        pull_counts=hist[-1].copy(),
        choices=choices,
        audits=extra.get("audits", []),
        message_size=extra.get("message_size", 0),
        stage_length=extra.get("stage_length"),
    )


def _run_rep_args(args) -> RegretTrace:
    return run_repetition(*args)


def run_simulation(config: SimulationConfig, workers: int = 1, engine: str = "vectorized") -> list[RegretTrace]:
    """All repetitions of ``config``, in repetition order."""
    jobs = [(config, rep, engine) for rep in range(config.repetitions)]
    if workers <= 1 or len(jobs) == 1:
        return [_run_rep_args(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_rep_args, jobs))


def aggregate_traces(traces: Sequence[RegretTrace | np.ndarray], algo: str | None = None) -> AggregateCurve:
    """Pointwise mean and sample standard deviation (zero for a single trace)."""
    if not traces:
        raise ValueError("need at least one trace")
    curves = [t.cumulative if isinstance(t, RegretTrace) else np.asarray(t, dtype=np.float64) for t in traces]
    lengths = {c.shape for c in curves}
    if len(lengths) != 1:
        raise LengthMismatchError(f"trace lengths differ: {sorted(s[0] for s in lengths)}")
    stack = np.vstack(curves)
    mean = stack.mean(axis=0)
    std = stack.std(axis=0, ddof=1) if len(curves) > 1 else np.zeros_like(mean)
    if algo is None:
        algo = traces[0].algo if isinstance(traces[0], RegretTrace) else ""
    return AggregateCurve(algo=algo, mean=mean, std=std, n_traces=len(curves))


@dataclass(frozen=True)
class NodeCountEstimate:
    """Per-node estimates of ``N`` and their range across nodes.

    ``collision`` is set when the smallest draw was shared by two or more
    nodes in some repetition; such a result underestimates ``N``.
    """

    lower: float
    upper: float
    per_node: np.ndarray
    collision: bool
    steps: int


def _one_count_round(p: np.ndarray, closed: list[np.ndarray], u: np.ndarray, steps: int) -> np.ndarray:
    # Every node tracks the smallest draw it has heard of and mixes only the
    # mass that descends from it; mass from a losing draw is discarded.
    m = u.copy()
    x = u.copy()
    for _ in range(steps):
        m_next = np.array([m[nb].min() for nb in closed])
        same = m[None, :] == m_next[:, None]
        x = (p * same) @ x
        m = m_next
    u_min = u.min()
    mixed = np.where(m == u_min, x, 0.0)
    if np.any(mixed <= 0.0):
        raise ZeroMixedValueError(f"the smallest draw has not reached every node after {steps} steps")
    return u_min / mixed


def estimate_node_count(
    matrix: GossipMatrix,
    epsilon: float,
    steps: int | None = None,
    rng: np.random.Generator | None = None,
    repetitions: int = 1,
    u: np.ndarray | None = None,
) -> NodeCountEstimate:
    """Estimate ``N`` by mixing the smallest of ``N`` uniform draws.

    Each node draws ``u_i`` in ``(0, 1]``; min-propagation identifies the
    smallest draw ``u*`` and plain gossip spreads its mass to about ``u*/N``
    at every node, so ``u* / x_i`` estimates ``N``. ``steps`` defaults to the
    unaccelerated delay for accuracy ``epsilon``. Repetitions keep the largest
    estimate per node, since a collision can only lower the estimate. ``u``
    fixes the draws of a single repetition.
    """
    p = matrix.entries
    n = p.shape[0]
    if steps is None:
        steps = compute_delay(MixParams(matrix.lambda2_abs, n, epsilon), accelerated=False)
    closed = [np.flatnonzero((p[i] != 0.0) | (np.arange(n) == i)) for i in range(n)]
    rng = rng if rng is not None else np.random.default_rng()
    best = None
    collision = False
    for _ in range(repetitions if u is None else 1):
        draw = np.asarray(u, dtype=np.float64) if u is not None else 1.0 - rng.random(n)
        collision |= int(np.count_nonzero(draw == draw.min())) > 1
        est = _one_count_round(p, closed, draw, steps)
        best = est if best is None else np.maximum(best, est)
    return NodeCountEstimate(lower=float(best.min()), upper=float(best.max()), per_node=best, collision=collision, steps=steps)
