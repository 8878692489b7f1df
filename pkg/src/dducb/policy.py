"""DDUCB agents, its variants, and the comparison baselines.

Two forms of DDUCB live here:

* a per-agent state machine (:class:`AgentState` with :func:`dducb_init`,
  :func:`choose_arm`, :func:`make_message`, :func:`dducb_round`,
  :func:`stage_commit`) that exchanges explicit :class:`RoundMessage`
  values with its neighbors;
* :class:`DDUCBNetwork`, which holds every agent's variables as ``N x K``
  arrays and advances them together. It is what the simulator runs.

Each agent keeps three pairs of statistics: ``alpha/a`` (mixed, used for
decisions), ``beta/b`` (being mixed during the current stage) and
``gamma/c`` (collected during the current stage). ``delta/d`` accumulate the
mixed values across stages. Reward sums are Greek, pull counts Latin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bandit import BanditInstance, rewards_from_draws
from .errors import StaleNeighborIterateError, ZeroCountError
from .mixing import MixerState, MixParams, NetworkMixer, compute_delay, mix_step, mixer_start, unaccel_mix_step

__all__ = [
    "PolicyConfig",
    "AgentState",
    "RoundMessage",
    "BandwidthPlan",
    "StageAudit",
    "StageCommitWarning",
    "ucb_index",
    "dducb_init",
    "choose_arm",
    "make_message",
    "dducb_round",
    "stage_commit",
    "limited_bandwidth_schedule",
    "DDUCBNetwork",
    "IndependentUCB",
    "CentralizedUCB",
    "RunningConsensusUCB",
    "independent_ucb_round",
    "centralized_ucb_round",
    "running_consensus_ucb_round",
]


class StageCommitWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    """DDUCB parameters.

    ``lambda2_bound`` is the value of ``|lambda_2|`` the agents believe; it
    sets both the delay ``C`` and the Chebyshev recursion. ``delay`` overrides
    the computed ``C``, in which case ``epsilon`` is informational only.
    """

    n_nodes: int
    lambda2_bound: float
    sigma: float = 1.0
    eta: float = 2.0
    epsilon: float = 1.0 / 22.0
    accelerated: bool = True
    variant_local_pulls: bool = False
    variant_delta_mix: bool = False
    variant_share_pulls: bool = False
    bandwidth_L: int | None = None
    delay: int | None = None

    def __post_init__(self):
        if self.eta <= 1.0:
            raise ValueError(f"eta must exceed 1, got {self.eta}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.delay is None and self.epsilon >= self.epsilon_limit:
            raise ValueError(
                f"epsilon must be below (eta-1)/(7(eta+1)) = {self.epsilon_limit:.6g}, got {self.epsilon}"
            )
        if self.bandwidth_L is not None and self.bandwidth_L < 1:
            raise ValueError("bandwidth_L must be >= 1")
        if self.delay is not None and self.delay < 1:
            raise ValueError("delay must be >= 1")

    @property
    def epsilon_limit(self) -> float:
        return (self.eta - 1.0) / (7.0 * (self.eta + 1.0))

    @property
    def C(self) -> int:
        if self.delay is not None:
            return self.delay
        return compute_delay(MixParams(self.lambda2_bound, self.n_nodes, self.epsilon), self.accelerated)

    @property
    def ucb_coef(self) -> float:
        """``2 eta sigma^2 / N``: the radius is ``sqrt(coef * ln s / a)``."""
        return 2.0 * self.eta * self.sigma**2 / self.n_nodes

    @property
    def reselect_each_round(self) -> bool:
        return self.variant_local_pulls or self.variant_delta_mix or self.variant_share_pulls

    def schedule(self, n_arms: int) -> "BandwidthPlan":
        return limited_bandwidth_schedule(n_arms, self.C, self.bandwidth_L)


@dataclass(frozen=True)
class BandwidthPlan:
    """Which entries of ``concat(beta, b)`` are sent at each round of a stage.

    ``rounds[r]`` are the entry indices sent at within-stage round ``r``;
    ``None`` means the full vector every round.
    """

    stage_length: int
    rounds: tuple[np.ndarray, ...] | None

    @property
    def full(self) -> bool:
        return self.rounds is None

    def entries(self, r: int) -> np.ndarray | None:
        return None if self.rounds is None else self.rounds[r]


def limited_bandwidth_schedule(K: int, C: int, L: int | None) -> BandwidthPlan:
    """Stage length ``E = ceil(2KC/L)`` and a per-round send plan.

    The plan walks the sequence ``(step 0: entries 0..2K-1), (step 1: ...)``
    in chunks of ``L``, so every entry is sent ``C`` times, its steps stay in
    order, and no round carries the same entry twice.
    """
    width = 2 * K
    if L is None or L >= width:
        return BandwidthPlan(stage_length=C, rounds=None)
    if L < 1:
        raise ValueError("L must be >= 1")
    stage = -(-width * C // L)
    seq = np.tile(np.arange(width, dtype=np.int64), C)
    rounds = tuple(seq[i * L:(i + 1) * L] for i in range(stage))
    return BandwidthPlan(stage_length=stage, rounds=rounds)


def ucb_index(alpha, a, s, config: PolicyConfig) -> int:
    """Arm maximizing ``alpha/a + sqrt(2 eta sigma^2 ln s / (N a))``; lowest index on ties."""
    alpha = np.asarray(alpha, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0.0):
        raise ZeroCountError("UCB index needs positive counts for every arm")
    log_s = max(math.log(s), 0.0) if s > 0 else 0.0
    index = alpha / a + np.sqrt(config.ucb_coef * log_s / a)
    return int(np.argmax(index))


@dataclass(frozen=True)
class RoundMessage:
    """What one agent sends its neighbors in one round.

    ``values`` are the current iterates of ``concat(beta, b)`` restricted to
    ``entries`` (all ``2K`` when ``entries`` is None).
    """

    sender: int
    round: int
    step: int
    values: np.ndarray
    entries: np.ndarray | None = None
    delta_values: np.ndarray | None = None
    fresh_pull: tuple[int, float] | None = None

    @property
    def beta_iterate(self) -> np.ndarray:
        return self.values[: self.values.size // 2]

    @property
    def b_iterate(self) -> np.ndarray:
        return self.values[self.values.size // 2:]

    @property
    def size(self) -> int:
        n = self.values.size
        if self.delta_values is not None:
            n += self.delta_values.size
        if self.fresh_pull is not None:
            n += 2
        return n


@dataclass
class AgentState:
    node: int
    n_arms: int
    n_nodes: int
    lambda2: float
    p_row: dict[int, float]
    plan: BandwidthPlan
    alpha: np.ndarray
    a: np.ndarray
    gamma: np.ndarray
    c: np.ndarray
    delta: np.ndarray
    d: np.ndarray
    mixers: list[MixerState]
    t: int
    s: float
    k_star: int = -1
    r: int = 0
    committed: bool = False

    @property
    def beta(self) -> np.ndarray:
        return self._mixed_block()[: self.n_arms]

    @property
    def b(self) -> np.ndarray:
        return self._mixed_block()[self.n_arms:]

    def _mixed_block(self) -> np.ndarray:
        if len(self.mixers) == 1:
            return self.mixers[0].y_curr
        return np.array([m.y_curr[0] for m in self.mixers])


def _start_mixers(block: np.ndarray, plan: BandwidthPlan) -> list[MixerState]:
    if plan.full:
        return [mixer_start(block)]
    return [mixer_start(block[e:e + 1]) for e in range(block.size)]


def dducb_init(initial_rewards, config: PolicyConfig, node: int = 0, p_row: dict[int, float] | None = None) -> AgentState:
    """State after the warm-up sweep that pulled every arm once."""
    x = np.array(initial_rewards, dtype=np.float64)
    k = x.size
    n = config.n_nodes
    plan = config.schedule(k)
    block = np.concatenate([x, np.ones(k)])
    return AgentState(
        node=node,
        n_arms=k,
        n_nodes=n,
        lambda2=config.lambda2_bound,
        p_row=dict(p_row) if p_row is not None else {node: 1.0},
        plan=plan,
        alpha=x / n,
        a=np.full(k, 1.0 / n),
        gamma=np.zeros(k),
        c=np.zeros(k),
        delta=np.zeros(k),
        d=np.zeros(k),
        mixers=_start_mixers(block, plan),
        t=k,
        s=float(k),
    )


def _decision_stats(state: AgentState, config: PolicyConfig):
    if config.variant_delta_mix and state.committed:
        return state.delta, state.d
    return state.alpha, state.a


def choose_arm(state: AgentState, config: PolicyConfig) -> int:
    """Arm to play this round; recomputed every round only for the variants."""
    if state.r == 0 or config.reselect_each_round or state.k_star < 0:
        sums, counts = _decision_stats(state, config)
        state.k_star = ucb_index(sums, counts, state.s, config)
    return state.k_star


def make_message(state: AgentState, config: PolicyConfig, reward: float | None = None) -> RoundMessage:
    entries = state.plan.entries(state.r)
    if entries is None:
        values = state.mixers[0].y_curr.copy()
    else:
        values = np.array([state.mixers[e].y_curr[0] for e in entries])
    delta_values = np.concatenate([state.delta, state.d]) if config.variant_delta_mix else None
    fresh = None
    if config.variant_share_pulls and reward is not None:
        fresh = (state.k_star, float(reward))
    return RoundMessage(
        sender=state.node,
        round=state.t + 1,
        step=state.r,
        values=values,
        entries=None if entries is None else entries.copy(),
        delta_values=delta_values,
        fresh_pull=fresh,
    )


def _mix_one(mixer: MixerState, incoming_vals: dict[int, np.ndarray], state: AgentState, config: PolicyConfig) -> MixerState:
    if config.accelerated:
        return mix_step(mixer, incoming_vals, state.p_row, state.lambda2, self_id=state.node)
    y = unaccel_mix_step(mixer.y_curr, incoming_vals, state.p_row, self_id=state.node)
    return MixerState(y_curr=y, y_prev=mixer.y_curr, r=mixer.r + 1)


def dducb_round(state: AgentState, reward: float, incoming: dict[int, RoundMessage], config: PolicyConfig):
    """Record this round's pull, mix with the neighbors' iterates, advance clocks.

    ``incoming`` holds this round's messages from every neighbor (not
    including the agent itself). Returns ``(state, pulled_arm)``; the caller
    runs :func:`stage_commit` once ``state.r`` reaches the stage length.
    """
    for j, msg in incoming.items():
        if msg.round != state.t + 1 or msg.step != state.r:
            raise StaleNeighborIterateError(
                f"node {state.node} at round {state.t + 1} step {state.r} got round {msg.round} step {msg.step} from {j}"
            )
    k = state.k_star
    n = state.n_nodes
    state.gamma[k] += reward
    state.c[k] += 1.0

    entries = state.plan.entries(state.r)
    if entries is None:
        vals = {j: m.values for j, m in incoming.items()}
        state.mixers[0] = _mix_one(state.mixers[0], vals, state, config)
    else:
        for pos, e in enumerate(entries):
            vals = {j: m.values[pos:pos + 1] for j, m in incoming.items()}
            state.mixers[e] = _mix_one(state.mixers[e], vals, state, config)

    state.t += 1
    if config.variant_local_pulls:
        state.alpha[k] += reward / n
        state.a[k] += 1.0 / n
        state.s += 1.0
    if config.variant_delta_mix:
        block = np.concatenate([state.delta, state.d])
        vals = {j: m.delta_values for j, m in incoming.items()}
        mixed = unaccel_mix_step(block, vals, state.p_row, self_id=state.node)
        state.delta, state.d = mixed[: state.n_arms].copy(), mixed[state.n_arms:].copy()
    if config.variant_share_pulls:
        for msg in incoming.values():
            if msg.fresh_pull is not None:
                arm, u = msg.fresh_pull
                state.alpha[arm] += u / n
                state.a[arm] += 1.0 / n
                state.s += 1.0
    state.r += 1
    return state, k


def stage_commit(state: AgentState, config: PolicyConfig) -> AgentState:
    """Fold the mixed ``beta/b`` into ``alpha/a`` and start mixing ``gamma/c``."""
    if state.c.sum() == 0.0:
        warnings.warn("stage committed with no recorded pulls", StageCommitWarning, stacklevel=2)
    k = state.n_arms
    block = state._mixed_block()
    state.delta = state.delta + block[:k]
    state.d = state.d + block[k:]
    state.alpha = state.delta.copy()
    state.a = state.d.copy()
    state.s = float((state.t - state.plan.stage_length) * state.n_nodes)
    state.mixers = _start_mixers(np.concatenate([state.gamma, state.c]), state.plan)
    state.gamma = np.zeros(k)
    state.c = np.zeros(k)
    state.r = 0
    state.committed = True
    return state


@dataclass(frozen=True)
class StageAudit:
    """Count bookkeeping checked at one stage boundary.

    ``truth`` is the network pull count per arm up to ``t - stage_length``.
    """

    t: int
    sum_a: np.ndarray
    truth: np.ndarray
    max_node_rel_err: float
    s: float


def _check_counts(counts: np.ndarray) -> None:
    if not np.all(counts > 0.0):
        raise ZeroCountError("nonpositive mixed pull count; the |lambda_2| bound may be too small")


class _NetworkPolicy:
    """Shared plumbing: warm-up sweep, reward evaluation, ground-truth counts."""

    def __init__(self, instance: BanditInstance, n_nodes: int):
        self.instance = instance
        self.n = n_nodes
        self.k = instance.n_arms
        self.t = 0
        self.counts = np.zeros(self.k, dtype=np.int64)
        self._rows = np.arange(n_nodes)

    def _rewards(self, arms, draws):
        return rewards_from_draws(self.instance, arms, draws)

    def _tally(self, arms):
        self.counts += np.bincount(arms, minlength=self.k)


class DDUCBNetwork(_NetworkPolicy):
    """All agents of DDUCB (or its unaccelerated form) advanced in lockstep.

    Mixing one ``N x 2K`` block through :class:`NetworkMixer` per round is the
    same computation as every agent running :func:`mix_step` on its row.
    """

    def __init__(self, config: PolicyConfig, p: np.ndarray, instance: BanditInstance, audit: bool = False):
        super().__init__(instance, config.n_nodes)
        self.config = config
        self.p = np.asarray(p, dtype=np.float64)
        self.plan = config.schedule(self.k)
        self.stage_length = self.plan.stage_length
        self.mixer = NetworkMixer(self.p, config.lambda2_bound, config.C, accelerated=config.accelerated)
        self.audit = audit
        self.audits: list[StageAudit] = []
        if config.variant_share_pulls:
            self.adjacency = (self.p != 0.0).astype(np.float64)
            np.fill_diagonal(self.adjacency, 0.0)
            self.degree = self.adjacency.sum(axis=1)
        n, k = self.n, self.k
        self._warm = np.zeros((n, k))
        self.alpha = self.a = None
        self.gamma = np.zeros((n, k))
        self.c = np.zeros((n, k))
        self.delta = np.zeros((n, k))
        self.d = np.zeros((n, k))
        self.s = np.zeros(n)
        self.k_star = np.zeros(n, dtype=np.int64)
        self.r = 0
        self.committed = False
        self._counts_at_stage_start = None

    @property
    def message_size(self) -> int:
        size = 2 * self.k if self.plan.full else int(max(len(e) for e in self.plan.rounds))
        if self.config.variant_delta_mix:
            size += 2 * self.k
        if self.config.variant_share_pulls:
            size += 2
        return size

    def _initialize(self) -> None:
        n, k = self.n, self.k
        self.alpha = self._warm / n
        self.a = np.full((n, k), 1.0 / n)
        self.mixer.reset(np.concatenate([self._warm, np.ones((n, k))], axis=1))
        self.s[:] = k
        self._counts_at_stage_start = self.counts.copy()

    def round(self, draws: np.ndarray) -> np.ndarray:
        """Play one round given each agent's reward draw; returns the arms pulled."""
        self.t += 1
        if self.t <= self.k:
            arms = np.full(self.n, self.t - 1, dtype=np.int64)
            self._warm[:, self.t - 1] = self._rewards(arms, draws)
            self._tally(arms)
            if self.t == self.k:
                self._initialize()
            return arms

        cfg = self.config
        if self.r == 0 or cfg.reselect_each_round:
            if cfg.variant_delta_mix and self.committed:
                sums, cnts = self.delta, self.d
            else:
                sums, cnts = self.alpha, self.a
            _check_counts(cnts)
            self.k_star = _kernels.ucb_argmax(sums, cnts, self.s, cfg.ucb_coef)
        arms = self.k_star
        u = self._rewards(arms, draws)
        rows = self._rows
        self.gamma[rows, arms] += u
        self.c[rows, arms] += 1.0
        self._tally(arms)

        cols = self.plan.entries(self.r)
        self.mixer.step(cols)

        if cfg.variant_local_pulls:
            self.alpha[rows, arms] += u / self.n
            self.a[rows, arms] += 1.0 / self.n
            self.s += 1.0
        if cfg.variant_delta_mix:
            self.delta = self.p @ self.delta
            self.d = self.p @ self.d
        if cfg.variant_share_pulls:
            onehot = np.zeros((self.n, self.k))
            onehot[rows, arms] = 1.0
            self.alpha += (self.adjacency @ (onehot * u[:, None])) / self.n
            self.a += (self.adjacency @ onehot) / self.n
            self.s += self.degree
        self.r += 1
        if self.r == self.stage_length:
            self._commit()
        return arms

    def _commit(self) -> None:
        k = self.k
        y = self.mixer.values
        self.delta = self.delta + y[:, :k]
        self.d = self.d + y[:, k:]
        self.alpha = self.delta.copy()
        self.a = self.d.copy()
        self.s[:] = (self.t - self.stage_length) * self.n
        self.mixer.reset(np.concatenate([self.gamma, self.c], axis=1))
        self.gamma = np.zeros_like(self.gamma)
        self.c = np.zeros_like(self.c)
        self.r = 0
        self.committed = True
        if self.audit:
            truth = self._counts_at_stage_start.astype(np.float64)
            rel = np.abs(self.n * self.a - truth) / truth
            self.audits.append(
                StageAudit(t=self.t, sum_a=self.a.sum(axis=0), truth=truth, max_node_rel_err=float(rel.max()), s=float(self.s[0]))
            )
        self._counts_at_stage_start = self.counts.copy()


class IndependentUCB(_NetworkPolicy):
    """``N`` isolated UCB learners; no messages."""

    def __init__(self, instance: BanditInstance, n_nodes: int, eta: float = 2.0):
        super().__init__(instance, n_nodes)
        self.coef = 2.0 * eta * instance.sigma**2
        self.sums = np.zeros((n_nodes, self.k))
        self.cnts = np.zeros((n_nodes, self.k))
        self.message_size = 0

    def round(self, draws: np.ndarray) -> np.ndarray:
        self.t += 1
        if self.t <= self.k:
            arms = np.full(self.n, self.t - 1, dtype=np.int64)
        else:
            s = np.full(self.n, float(self.t - 1))
            arms = _kernels.ucb_argmax(self.sums, self.cnts, s, self.coef)
        u = self._rewards(arms, draws)
        self.sums[self._rows, arms] += u
        self.cnts[self._rows, arms] += 1.0
        self._tally(arms)
        return arms


class CentralizedUCB(_NetworkPolicy):
    """One UCB learner making the network's ``N`` pulls per round in sequence."""

    def __init__(self, instance: BanditInstance, n_nodes: int, eta: float = 2.0):
        super().__init__(instance, n_nodes)
        self.coef = 2.0 * eta * instance.sigma**2
        self.sums = np.zeros(self.k)
        self.cnts = np.zeros(self.k)
        self._pulls = np.zeros(1, dtype=np.int64)
        self.message_size = 0

    def run(self, draws: np.ndarray) -> np.ndarray:
        """Play ``draws.shape[0]`` rounds; returns cumulative counts per round."""
        hist = _kernels.centralized_counts(
            np.ascontiguousarray(draws, dtype=np.float64),
            np.ascontiguousarray(self.instance.means),
            float(self.instance.sigma),
            self.coef,
            self.instance.distribution == "bernoulli",
            self.sums,
            self.cnts,
            self._pulls,
        )
        self.t += draws.shape[0]
        self.counts = hist[-1].copy() if len(hist) else self.counts
        return hist

    def round(self, draws: np.ndarray) -> np.ndarray:
        before = self.counts.copy()
        hist = self.run(np.asarray(draws, dtype=np.float64)[None, :])
        return np.repeat(np.arange(self.k), hist[0] - before)


class RunningConsensusUCB(_NetworkPolicy):
    """``2K`` running consensus estimates ``x <- P x + new`` feeding a UCB index.

    The index is ``m/n + sqrt(2 gamma sigma^2 ln(tN) / (N n))`` with ``t``
    the number of completed rounds.
    """

    def __init__(self, instance: BanditInstance, p: np.ndarray, gamma: float = 2.0):
        n = p.shape[0]
        super().__init__(instance, n)
        if gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        self.p = np.asarray(p, dtype=np.float64)
        self.gamma_param = gamma
        self.coef = 2.0 * gamma * instance.sigma**2 / n
        self.m_hat = np.zeros((n, self.k))
        self.n_hat = np.zeros((n, self.k))
        self.message_size = 2 * self.k

    def round(self, draws: np.ndarray) -> np.ndarray:
        self.t += 1
        if self.t <= self.k:
            arms = np.full(self.n, self.t - 1, dtype=np.int64)
        else:
            _check_counts(self.n_hat)
            s = np.full(self.n, float((self.t - 1) * self.n))
            arms = _kernels.ucb_argmax(self.m_hat, self.n_hat, s, self.coef)
        u = self._rewards(arms, draws)
        pi = np.zeros((self.n, self.k))
        pi[self._rows, arms] = u
        pk = np.zeros((self.n, self.k))
        pk[self._rows, arms] = 1.0
        self.m_hat = self.p @ self.m_hat + pi
        self.n_hat = self.p @ self.n_hat + pk
        self._tally(arms)
        return arms


def independent_ucb_round(state: IndependentUCB, draws: np.ndarray) -> np.ndarray:
    return state.round(draws)


def centralized_ucb_round(state: CentralizedUCB, draws: np.ndarray) -> np.ndarray:
    return state.round(draws)


def running_consensus_ucb_round(state: RunningConsensusUCB, draws: np.ndarray) -> np.ndarray:
    return state.round(draws)
