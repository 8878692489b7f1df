"""Closed-form regret bounds and the spectral comparison terms.

The finite-time bounds carry explicit constants. The lower bound, the
instance-independent bound and the asymptotic terms are order-level: they are
evaluated with hidden constant 1 and only meant as plotting context.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import UnitEigenvalueError

__all__ = [
    "BoundInputs",
    "CoopTerms",
    "dducb_finite_time_bound",
    "dducb_sharper_bound",
    "dducb_default_bound",
    "asymptotic_terms",
    "problem_lower_bound",
    "instance_independent_bound",
    "coop_ucb_bound_terms",
    "cycle_cot_check",
    "comparison_check",
]


@dataclass(frozen=True)
class BoundInputs:
    """Inputs shared by the bound evaluators.

    ``Lambda`` is an upper bound on the gaps; it defaults to the largest gap.
    """

    gaps: tuple[float, ...]
    N: int
    T: int
    C: int = 1
    sigma: float = 1.0
    eta: float = 2.0
    epsilon: float = 1.0 / 22.0
    lambda2_abs: float | None = None
    gamma: float = 2.0
    Lambda: float | None = None
    full_spectrum: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(float(g) for g in self.gaps))
        if self.eta <= 1.0:
            raise ValueError("eta must exceed 1")
        if any(g < 0.0 for g in self.gaps):
            raise ValueError("gaps must be nonnegative")

    @property
    def K(self) -> int:
        return len(self.gaps)

    @property
    def gap_sum(self) -> float:
        return math.fsum(self.gaps)

    def inverse_gap_sum(self) -> float:
        return math.fsum(1.0 / g for g in self.gaps if g > 0.0)


def _log_tn(T, N):
    # ln(TN) for scalar or array T; T = 0 contributes nothing.
    tn = np.asarray(T, dtype=np.float64) * N
    return np.log(np.where(tn > 0, tn, 1.0))


def _maybe_scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def dducb_finite_time_bound(inputs: BoundInputs, T=None):
    """General finite-time regret bound; ``T`` may be an array of horizons."""
    T = inputs.T if T is None else T
    first = 16.0 * inputs.eta * (1.0 + 2.0 * inputs.epsilon) * inputs.sigma**2 * _log_tn(T, inputs.N)
    second = inputs.N * (6 * inputs.C + 1) + 2.0 * inputs.eta / (inputs.eta - 1.0)
    return _maybe_scalar(first * inputs.inverse_gap_sum() + second * inputs.gap_sum)


def dducb_sharper_bound(inputs: BoundInputs, T=None):
    T = inputs.T if T is None else T
    eta, n, c = inputs.eta, inputs.N, inputs.C
    first = 16.0 * eta * (1.0 + 2.0 * inputs.epsilon) * inputs.sigma**2 * _log_tn(T, n)
    second = (
        n * (2 * c + 1)
        + 2.0 * n * c / inputs.K**eta * (1.0 + n ** (-eta))
        + 2.0 * eta / ((eta - 1.0) * (n * c) ** (eta - 1.0))
    )
    return _maybe_scalar(first * inputs.inverse_gap_sum() + second * inputs.gap_sum)


def dducb_default_bound(gaps, sigma: float, N: int, T, C: int):
    """The finite-time bound with ``eta = 2`` and ``epsilon = 1/22`` written out."""
    first = 32.0 * (1.0 + 1.0 / 11.0) * sigma**2 * _log_tn(T, N)
    inv = math.fsum(1.0 / g for g in gaps if g > 0.0)
    return _maybe_scalar(first * inv + (N * (6 * C + 1) + 4) * math.fsum(gaps))


def _log_inv(lam: float) -> float:
    if lam is None or not 0.0 < lam < 1.0:
        raise ValueError(f"need 0 < |lambda_2| < 1, got {lam}")
    return -math.log(lam)


def asymptotic_terms(inputs: BoundInputs) -> dict[str, float]:
    """Order-level asymptotic bounds (hidden constant 1).

    ``general`` keeps ``eta`` and ``epsilon``; ``default`` is the ``eta = 2``,
    ``epsilon = 1/22`` form; ``unaccelerated`` swaps the square root of
    ``ln(1/|lambda_2|)`` for ``ln(1/|lambda_2|)`` itself.
    """
    n, eta, eps = inputs.N, inputs.eta, inputs.epsilon
    log_inv = _log_inv(inputs.lambda2_abs)
    log_tn = float(_log_tn(inputs.T, n))
    inv, total = inputs.inverse_gap_sum(), inputs.gap_sum
    s2 = inputs.sigma**2
    return {
        "general": eta * (1 + eps) * s2 * log_tn * inv + (n * math.log(n / eps) / math.sqrt(log_inv) + eta / (eta - 1)) * total,
        "default": s2 * log_tn * inv + n * math.log(n) / math.sqrt(log_inv) * total,
        "unaccelerated": s2 * log_tn * inv + n * math.log(n) / log_inv * total,
    }


def problem_lower_bound(inputs: BoundInputs, T=None):
    """Order-level lower bound ``sum sigma^2 ln(TN)/gap + (N/K + 1) sum gap``."""
    T = inputs.T if T is None else T
    first = inputs.sigma**2 * _log_tn(T, inputs.N) * inputs.inverse_gap_sum()
    return _maybe_scalar(first + (inputs.N / inputs.K + 1.0) * inputs.gap_sum)


def instance_independent_bound(inputs: BoundInputs) -> float:
    """Order-level ``sqrt(K T N sigma^2 ln(TN)) + K N Lambda ln N / sqrt(ln(1/|lambda_2|))``."""
    n, t = inputs.N, inputs.T
    lam_cap = inputs.Lambda if inputs.Lambda is not None else max(inputs.gaps, default=0.0)
    if lam_cap < max(inputs.gaps, default=0.0):
        raise ValueError("Lambda must bound every gap")
    if t <= 0:
        warnings.warn("horizon 0: only the communication term remains", RuntimeWarning, stacklevel=2)
        first = 0.0
    else:
        first = math.sqrt(inputs.K * t * n * inputs.sigma**2 * math.log(t * n))
    return first + inputs.K * n * lam_cap * math.log(n) / math.sqrt(_log_inv(inputs.lambda2_abs))


@dataclass(frozen=True)
class CoopTerms:
    B_exact: float
    B_lower: float
    A_aggregate: float


def _nontrivial(full_spectrum) -> np.ndarray:
    ev = np.asarray(full_spectrum, dtype=np.float64)
    if ev.size < 1:
        raise ValueError("empty spectrum")
    top = int(np.argmin(np.abs(ev - 1.0)))
    rest = np.delete(ev, top)
    if np.any(np.abs(rest) >= 1.0 - 1e-12):
        raise UnitEigenvalueError("spectrum has an eigenvalue of magnitude 1 besides lambda_1")
    return rest


def coop_ucb_bound_terms(full_spectrum, gamma: float, N: int) -> CoopTerms:
    """The comparison quantity ``B``, its lower bound, and the symmetric ``A`` aggregate.

    ``B = N (gamma/(gamma-1) + sqrt(N) sum_{j>=2} |l_j| / (1 - |l_j|))`` and
    ``B_lower = N (1 + l' / ln(sqrt(N) / l'))`` with ``l' = sqrt(N) |lambda_2|``.
    ``A_aggregate = sum_{j>=2} l_j^2 / (1 - l_j^2)``.
    """
    if gamma <= 1.0:
        raise ValueError("gamma must exceed 1")
    rest = _nontrivial(full_spectrum)
    mags = np.abs(rest)
    b_exact = N * (gamma / (gamma - 1.0) + math.sqrt(N) * math.fsum(mags / (1.0 - mags)))
    lam2 = float(mags.max()) if mags.size else 0.0
    lp = math.sqrt(N) * lam2
    b_lower = N * (1.0 + lp / math.log(math.sqrt(N) / lp)) if lp > 0.0 else float(N)
    a_agg = math.fsum(rest**2 / (1.0 - rest**2))
    return CoopTerms(B_exact=b_exact, B_lower=b_lower, A_aggregate=a_agg)


def cycle_cot_check(N: int) -> tuple[float, float, bool]:
    """``cot^2(2 pi / N) >= N^2/(4 pi^2) - 2/3``; returns ``(lhs, rhs, holds)``."""
    lhs = 1.0 / math.tan(2.0 * math.pi / N) ** 2
    rhs = N**2 / (4.0 * math.pi**2) - 2.0 / 3.0
    return lhs, rhs, lhs >= rhs


def comparison_check(full_spectrum, N: int, gamma: float = 2.0) -> tuple[float, float, bool]:
    """``2B >= N ln N / ln(1/|lambda_2|)``; returns ``(2B, rhs, holds)``.

    Meaningful for ``|lambda_2| >= 1/e``; the lower bound ``B_lower`` is used
    for ``B`` so the check is the one the inequality chain actually needs.
    """
    terms = coop_ucb_bound_terms(full_spectrum, gamma, N)
    lam2 = float(np.abs(_nontrivial(full_spectrum)).max())
    rhs = N * math.log(N) / _log_inv(lam2)
    lhs = 2.0 * terms.B_lower
    return lhs, rhs, lhs >= rhs and 2.0 * terms.B_exact >= lhs
