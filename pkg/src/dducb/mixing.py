"""Gossip mixing: accelerated (Chebyshev) and plain consensus steps.

After ``C`` accelerated steps each node holds ``(q_C(P) v)_i`` where
``q_r(x) = T_r(x / lam) / T_r(1 / lam)``, ``T_r`` is the Chebyshev polynomial
of the first kind and ``lam`` is (an upper bound on) ``|lambda_2|``. The
normalizers ``w_r = T_r(1 / lam)`` obey ``w_0 = 1``, ``w_1 = 1 / lam``,
``w_{r+1} = 2 w_r / lam - w_{r-1}``. Only ratios of consecutive ``w`` enter
the iterate update, so growth of ``w_r`` does not cost precision in ``y``.

``lam == 0`` is special-cased to a single plain averaging step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .errors import MissingNeighborValueError
from .graph import GossipMatrix

__all__ = [
    "MixParams",
    "MixerState",
    "compute_delay",
    "epsilon_for_delay",
    "mixer_start",
    "mix_step",
    "unaccel_mix_step",
    "dense_mix_oracle",
    "chebyshev_weights",
    "NetworkMixer",
]


@dataclass(frozen=True)
class MixParams:
    lambda2_abs: float
    n_nodes: int
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.lambda2_abs < 1.0:
            raise ValueError(f"lambda2_abs must lie in [0, 1), got {self.lambda2_abs}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be >= 1, got {self.n_nodes}")


@dataclass(frozen=True)
class MixerState:
    """One node's Chebyshev iterate pair and normalizers.

    ``w_curr``/``w_prev`` hold ``w_r``/``w_{r-1}`` once ``r >= 1``; at ``r == 0``
    they are ignored and re-seeded by :func:`mix_step`.
    """

    y_curr: np.ndarray
    y_prev: np.ndarray
    w_curr: float = 1.0
    w_prev: float = 0.0
    r: int = 0


def mixer_start(y0) -> MixerState:
    y0 = np.array(y0, dtype=np.float64)
    return MixerState(y_curr=y0, y_prev=np.zeros_like(y0), w_curr=1.0, w_prev=0.0, r=0)


def compute_delay(params: MixParams, accelerated: bool = True) -> int:
    """Number of gossip steps ``C`` that mix to accuracy ``epsilon / N``.

    Accelerated: ``ceil(ln(2N/eps) / sqrt(2 ln(1/lam)))``.
    Unaccelerated: ``ceil(ln(N/eps) / ln(1/lam))``. Clamped to at least 1.
    """
    lam = params.lambda2_abs
    if lam == 0.0:
        return 1
    log_inv = -math.log(lam)
    if accelerated:
        c = math.log(2.0 * params.n_nodes / params.epsilon) / math.sqrt(2.0 * log_inv)
    else:
        c = math.log(params.n_nodes / params.epsilon) / log_inv
    return max(int(math.ceil(c)), 1)


def epsilon_for_delay(delay: int, n_nodes: int, lambda2_abs: float) -> float:
    """Epsilon for which the unaccelerated delay formula returns ``delay``.

    Used to match the unaccelerated stage length to the accelerated one.
    """
    if lambda2_abs == 0.0:
        return 1.0
    eps = n_nodes * lambda2_abs**delay
    # Nudge across ceil() boundaries caused by rounding.
    for _ in range(64):
        got = compute_delay(MixParams(lambda2_abs, n_nodes, eps), accelerated=False)
        if got == delay:
            return eps
        eps *= 1.0 + 1e-12 if got > delay else 1.0 - 1e-12
    raise ValueError(f"no epsilon reproduces delay {delay}")


def _weighted_sum(own, neighbor_values: Mapping[int, np.ndarray], p_row: Mapping[int, float], self_id):
    total = None
    for j in sorted(p_row):
        if j == self_id:
            val = own
        else:
            try:
                val = neighbor_values[j]
            except KeyError:
                raise MissingNeighborValueError(f"no value received from neighbor {j}") from None
        term = p_row[j] * np.asarray(val, dtype=np.float64)
        total = term if total is None else total + term
    extra = set(neighbor_values) - set(p_row)
    if extra:
        raise ValueError(f"values received from non-neighbors {sorted(extra)}")
    return total


def mix_step(
    state: MixerState,
    neighbor_iterates: Mapping[int, np.ndarray],
    p_row: Mapping[int, float],
    lambda2_abs: float,
    self_id: int | None = None,
) -> MixerState:
    """One accelerated communication step at a single node.

    ``p_row`` maps node ids to this node's row of ``P`` including the
    self-weight under ``self_id``. When ``self_id`` is omitted it is taken to
    be the single key of ``p_row`` that is absent from ``neighbor_iterates``.
    """
    if self_id is None:
        missing = [j for j in p_row if j not in neighbor_iterates]
        if len(missing) != 1:
            raise MissingNeighborValueError(
                f"cannot infer self id; unmatched row entries {sorted(missing)}"
            )
        self_id = missing[0]

    if lambda2_abs == 0.0:
        y_next = _weighted_sum(state.y_curr, neighbor_iterates, p_row, self_id)
        return replace(state, y_curr=y_next, y_prev=state.y_curr, r=state.r + 1)

    lam = lambda2_abs
    w_curr, w_prev, y_prev = state.w_curr, state.w_prev, state.y_prev
    if state.r == 0:
        # Half weight w_0 so the generic recursion yields w_1 = 1/lam and
        # y_1 = P y_0; w_{-1} = 0 and y_{-1} = 0 by convention.
        w_curr, w_prev = 0.5, 0.0
        y_prev = np.zeros_like(state.y_curr)

    y_prime = 2.0 * _weighted_sum(state.y_curr, neighbor_iterates, p_row, self_id) / lam
    w_next = 2.0 * w_curr / lam - w_prev
    y_next = (w_curr / w_next) * y_prime - (w_prev / w_next) * y_prev

    if state.r == 0:
        w_curr = 2.0 * w_curr
    return MixerState(y_curr=y_next, y_prev=state.y_curr, w_curr=w_next, w_prev=w_curr, r=state.r + 1)


def unaccel_mix_step(x_i, neighbor_values: Mapping[int, np.ndarray], p_row: Mapping[int, float], self_id=None):
    """Plain weighted average ``sum_j P_ij x_j`` over the closed neighborhood."""
    if self_id is None:
        missing = [j for j in p_row if j not in neighbor_values]
        if len(missing) != 1:
            raise MissingNeighborValueError(f"unmatched row entries {sorted(missing)}")
        self_id = missing[0]
    return _weighted_sum(np.asarray(x_i, dtype=np.float64), neighbor_values, p_row, self_id)


def chebyshev_weights(lambda2_abs: float, steps: int) -> np.ndarray:
    """``w_0 .. w_steps`` with ``w_r = T_r(1 / lambda2_abs)``."""
    w = np.empty(steps + 1)
    w[0] = 1.0
    if steps >= 1:
        w[1] = 1.0 / lambda2_abs
    for r in range(1, steps):
        w[r + 1] = 2.0 * w[r] / lambda2_abs - w[r - 1]
    return w


def dense_mix_oracle(matrix: GossipMatrix | np.ndarray, v, steps: int, accelerated: bool = True,
                     lambda2_abs: float | None = None) -> np.ndarray:
    """Full-vector reference for ``q_steps(P) v`` (or ``P^steps v``).

    Runs the polynomial recursion ``w_{r+1} y_{r+1} = (2/lam) w_r P y_r - w_{r-1} y_{r-1}``
    with ``y_0 = v`` and ``y_1 = P v``. ``v`` may be a vector or an ``N x m``
    block of column vectors.
    """
    p = matrix.entries if isinstance(matrix, GossipMatrix) else np.asarray(matrix, dtype=np.float64)
    y = np.array(v, dtype=np.float64)
    if steps == 0:
        return y
    if lambda2_abs is None:
        if isinstance(matrix, GossipMatrix):
            lambda2_abs = matrix.lambda2_abs
        else:
            lambda2_abs = float(np.sort(np.abs(np.linalg.eigvalsh(p)))[-2]) if p.shape[0] > 1 else 0.0
    if not accelerated or lambda2_abs == 0.0:
        for _ in range(steps):
            y = p @ y
        return y
    lam = lambda2_abs
    w_prev, w_curr = 1.0, 1.0 / lam
    y_prev, y_curr = y, p @ y
    for _ in range(1, steps):
        w_next = 2.0 * w_curr / lam - w_prev
        y_next = (2.0 / lam) * (w_curr / w_next) * (p @ y_curr) - (w_prev / w_next) * y_prev
        y_prev, y_curr = y_curr, y_next
        w_prev, w_curr = w_curr, w_next
    return y_curr


class NetworkMixer:
    """All nodes' Chebyshev iterates for an ``N x m`` block of values.

    Each column carries its own step counter so a subset of columns can be
    advanced per round (limited-bandwidth schedules). Mixing the full block
    once per round matches running :func:`mix_step` at every node.
    """

    def __init__(self, p: np.ndarray, lambda2_abs: float, steps: int, accelerated: bool = True):
        self.p = np.asarray(p, dtype=np.float64)
        self.lam = float(lambda2_abs)
        self.accelerated = accelerated and self.lam > 0.0
        self.steps = steps
        if self.accelerated:
            w = chebyshev_weights(self.lam, steps + 1)
            # y_{r+1} = a_r * P y_r - b_r * y_{r-1}
            self._a = np.empty(steps + 1)
            self._b = np.empty(steps + 1)
            self._a[0], self._b[0] = 1.0, 0.0
            for r in range(1, steps + 1):
                self._a[r] = (2.0 / self.lam) * (w[r] / w[r + 1])
                self._b[r] = w[r - 1] / w[r + 1]
        self.y_curr = None
        self.y_prev = None
        self.r = None

    def reset(self, y0: np.ndarray) -> None:
        self.y_curr = np.array(y0, dtype=np.float64)
        self.y_prev = np.zeros_like(self.y_curr)
        self.r = np.zeros(self.y_curr.shape[1], dtype=np.int64)

    def step(self, columns: np.ndarray | None = None) -> None:
        """Advance every column (or just ``columns``) by one gossip step."""
        if columns is None:
            y = self.y_curr
            py = self.p @ y
            if self.accelerated:
                r = int(self.r[0])
                y_next = self._a[r] * py - self._b[r] * self.y_prev
            else:
                y_next = py
            self.y_prev = y
            self.y_curr = y_next
            self.r += 1
            return
        cols = np.asarray(columns, dtype=np.int64)
        y = self.y_curr[:, cols]
        py = self.p @ y
        if self.accelerated:
            r = self.r[cols]
            y_next = self._a[r] * py - self._b[r] * self.y_prev[:, cols]
        else:
            y_next = py
        self.y_prev[:, cols] = y
        self.y_curr[:, cols] = y_next
        self.r[cols] += 1

    @property
    def values(self) -> np.ndarray:
        return self.y_curr
