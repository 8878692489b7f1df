"""Hot loops of the simulator, each with a numba and a pure-numpy version.

The numba versions are used when numba imports and ``DDUCB_DISABLE_NUMBA``
is unset (or ``0``). Set ``DDUCB_DISABLE_NUMBA=1`` to force the numpy path.
Both paths are importable explicitly for testing and benchmarking.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["BACKEND", "ucb_argmax", "centralized_counts", "numpy_kernels", "numba_kernels"]


def _numpy_ucb_argmax(sums, counts, s, coef):
    log_s = np.maximum(np.log(s), 0.0)
    index = sums / counts + np.sqrt(coef * log_s[:, None] / counts)
    return np.argmax(index, axis=1).astype(np.int64)


# Sequential centralized UCB: pulls within a round are chosen one at a time,
# counts updated in between. ``sums``, ``cnt`` and ``pulls_box`` (shape (1,))
# carry state across calls and are updated in place. Returns cumulative
# per-arm counts after each round.
def _numpy_centralized_counts(draws, means, sigma, coef, bernoulli, sums, cnt, pulls_box):
    rounds, n = draws.shape
    k = means.shape[0]
    hist = np.empty((rounds, k), dtype=np.int64)
    pulls = pulls_box[0]
    for t in range(rounds):
        for j in range(n):
            if pulls < k:
                arm = pulls
            else:
                log_p = max(math.log(pulls), 0.0)
                arm = int(np.argmax(sums / cnt + np.sqrt(coef * log_p / cnt)))
            x = draws[t, j]
            reward = (1.0 if x < means[arm] else 0.0) if bernoulli else means[arm] + sigma * x
            sums[arm] += reward
            cnt[arm] += 1.0
            pulls += 1
        hist[t] = cnt
    pulls_box[0] = pulls
    return hist


numpy_kernels = {
    "ucb_argmax": _numpy_ucb_argmax,
    "centralized_counts": _numpy_centralized_counts,
}


def _build_numba():
    import numba

    @numba.njit(cache=True)
    def ucb_argmax(sums, counts, s, coef):
        n, k = sums.shape
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            log_s = max(math.log(s[i]), 0.0)
            best = -np.inf
            arg = 0
            for j in range(k):
                v = sums[i, j] / counts[i, j] + math.sqrt(coef * log_s / counts[i, j])
                if v > best:
                    best = v
                    arg = j
            out[i] = arg
        return out

    @numba.njit(cache=True)
    def centralized_counts(draws, means, sigma, coef, bernoulli, sums, cnt, pulls_box):
        rounds, n = draws.shape
        k = means.shape[0]
        hist = np.empty((rounds, k), dtype=np.int64)
        pulls = pulls_box[0]
        for t in range(rounds):
            for j in range(n):
                if pulls < k:
                    arm = pulls
                else:
                    log_p = max(math.log(pulls), 0.0)
                    best = -np.inf
                    arm = 0
                    for a in range(k):
                        v = sums[a] / cnt[a] + math.sqrt(coef * log_p / cnt[a])
                        if v > best:
                            best = v
                            arm = a
                x = draws[t, j]
                if bernoulli:
                    reward = 1.0 if x < means[arm] else 0.0
                else:
                    reward = means[arm] + sigma * x
                sums[arm] += reward
                cnt[arm] += 1.0
                pulls += 1
            for a in range(k):
                hist[t, a] = int(cnt[a])
        pulls_box[0] = pulls
        return hist

    return {"ucb_argmax": ucb_argmax, "centralized_counts": centralized_counts}


def _numba_wanted() -> bool:
    flag = os.environ.get("DDUCB_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


numba_kernels = None
if _numba_wanted():
    try:
        numba_kernels = _build_numba()
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba_kernels = None

BACKEND = "numba" if numba_kernels is not None else "numpy"
_active = numba_kernels if numba_kernels is not None else numpy_kernels

ucb_argmax = _active["ucb_argmax"]
centralized_counts = _active["centralized_counts"]
