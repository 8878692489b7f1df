import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import chebyshev

from dducb.errors import MissingNeighborValueError
from dducb.graph import build_gossip_matrix, build_topology, cycle_half_matrix
from dducb.mixing import (
    MixParams,
    NetworkMixer,
    chebyshev_weights,
    compute_delay,
    dense_mix_oracle,
    epsilon_for_delay,
    mix_step,
    mixer_start,
    unaccel_mix_step,
)

EPS = 1.0 / 22.0
# Frozen from a 50-digit mpmath evaluation of the two delay formulas.
CYCLE_HALF_100_LAMBDA = math.cos(2 * math.pi / 100)
FROZEN_DELAYS = [
    (CYCLE_HALF_100_LAMBDA, 100, True, 134),
    (CYCLE_HALF_100_LAMBDA, 100, False, 3897),
]


def _spectral_oracle(p, v, steps, lam):
    # q_C(P) v through the eigendecomposition and T_C evaluated by numpy.
    w, vecs = np.linalg.eigh(p)
    coef = np.zeros(steps + 1)
    coef[steps] = 1.0
    scale = chebyshev.chebval(w / lam, coef) / chebyshev.chebval(1.0 / lam, coef)
    return vecs @ (scale[:, None] * (vecs.T @ v)) if v.ndim == 2 else vecs @ (scale * (vecs.T @ v))


def _distributed(matrix, v, steps, lam):
    n = matrix.n
    states = [mixer_start(v[i:i + 1]) for i in range(n)]
    rows = [matrix.row(i) for i in range(n)]
    for _ in range(steps):
        vals = [s.y_curr for s in states]
        states = [
            mix_step(states[i], {j: vals[j] for j in rows[i] if j != i}, rows[i], lam, self_id=i)
            for i in range(n)
        ]
    return np.array([s.y_curr[0] for s in states])


@pytest.mark.parametrize("lam,n,accel,expected", FROZEN_DELAYS)
def test_frozen_delays(lam, n, accel, expected):
    assert compute_delay(MixParams(lam, n, EPS), accelerated=accel) == expected


def test_delays_match_mpmath():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    for kind, n in [("cycle", 100), ("cycle", 200), ("grid", 100), ("grid", 225)]:
        lam = build_gossip_matrix(build_topology(kind, n)).lambda2_abs
        lg = -mpmath.log(mpmath.mpf(lam))
        acc = int(mpmath.ceil(mpmath.log(2 * n / mpmath.mpf(EPS)) / mpmath.sqrt(2 * lg)))
        una = int(mpmath.ceil(mpmath.log(n / mpmath.mpf(EPS)) / lg))
        assert compute_delay(MixParams(lam, n, EPS), True) == acc
        assert compute_delay(MixParams(lam, n, EPS), False) == una


def test_laplacian_cycle_delays():
    lam = build_gossip_matrix(build_topology("cycle", 100)).lambda2_abs
    assert compute_delay(MixParams(lam, 100, EPS)) == 164
    assert compute_delay(MixParams(lam, 100, EPS), accelerated=False) == 5847
    lam200 = build_gossip_matrix(build_topology("cycle", 200)).lambda2_abs
    assert compute_delay(MixParams(lam200, 200, EPS)) == 355


def test_delay_edge_cases():
    assert compute_delay(MixParams(0.0, 10, EPS)) == 1
    assert compute_delay(MixParams(0.5, 1, 10.0)) == 1
    with pytest.raises(ValueError):
        MixParams(1.0, 10, EPS)
    with pytest.raises(ValueError):
        MixParams(0.5, 10, 0.0)


@pytest.mark.parametrize("delay", [1, 17, 164, 400])
def test_epsilon_for_delay_roundtrip(delay):
    lam = build_gossip_matrix(build_topology("cycle", 100)).lambda2_abs
    eps = epsilon_for_delay(delay, 100, lam)
    assert compute_delay(MixParams(lam, 100, eps), accelerated=False) == delay


def test_first_step_is_plain_gossip_and_conserves_mass():
    m = build_gossip_matrix(build_topology("cycle", 9))
    v = np.arange(9.0)
    y1 = _distributed(m, v, 1, m.lambda2_abs)
    assert np.allclose(y1, m.entries @ v, atol=1e-15)
    ones = _distributed(m, np.ones(9), 5, m.lambda2_abs)
    assert np.allclose(ones, 1.0, atol=1e-12)


def test_mixing_accuracy_cycle_100(rng):
    m = cycle_half_matrix(101)
    lam = m.lambda2_abs
    c = compute_delay(MixParams(lam, 101, EPS))
    v = rng.dirichlet(np.ones(101), size=20).T
    out = dense_mix_oracle(m, v, c)
    err = np.linalg.norm(out - 1 / 101, axis=0)
    assert np.all(err <= EPS / 101)


def test_three_oracles_agree(rng):
    m = build_gossip_matrix(build_topology("grid", 25))
    lam = m.lambda2_abs
    v = rng.normal(size=25)
    for steps in (1, 2, 7, 30):
        dense = dense_mix_oracle(m, v, steps)
        dist = _distributed(m, v, steps, lam)
        spec = _spectral_oracle(m.entries, v, steps, lam)
        assert np.allclose(dense, spec, atol=1e-10)
        assert np.allclose(dist, dense, atol=1e-12)


def test_chebyshev_weights_are_polynomial_values():
    lam = 0.9
    w = chebyshev_weights(lam, 6)
    for r in range(7):
        coef = np.zeros(r + 1)
        coef[r] = 1.0
        assert w[r] == pytest.approx(chebyshev.chebval(1 / lam, coef), rel=1e-13)


def test_zero_lambda_averages_exactly():
    m = build_gossip_matrix(build_topology("complete", 6))
    v = np.arange(6.0)
    out = _distributed(m, v, 1, 0.0)
    assert np.allclose(out, 2.5, atol=1e-14)


def test_missing_neighbor_and_self_inference():
    s = mixer_start([1.0])
    row = {0: 0.5, 1: 0.25, 2: 0.25}
    with pytest.raises(MissingNeighborValueError):
        mix_step(s, {1: np.array([1.0])}, row, 0.5, self_id=0)
    inferred = mix_step(s, {1: np.array([2.0]), 2: np.array([2.0])}, row, 0.5)
    explicit = mix_step(s, {1: np.array([2.0]), 2: np.array([2.0])}, row, 0.5, self_id=0)
    assert inferred.y_curr == pytest.approx(explicit.y_curr)
    with pytest.raises(ValueError):
        mix_step(s, {1: np.array([1.0]), 2: np.array([1.0]), 7: np.array([1.0])}, row, 0.5, self_id=0)


def test_unaccelerated_step():
    row = {0: 0.5, 1: 0.5}
    assert unaccel_mix_step(np.array([2.0]), {1: np.array([4.0])}, row)[0] == 3.0


def test_network_mixer_matches_dense_and_column_subsets(rng):
    m = build_gossip_matrix(build_topology("cycle", 12))
    lam = m.lambda2_abs
    block = rng.normal(size=(12, 4))
    mixer = NetworkMixer(m.entries, lam, 10)
    mixer.reset(block)
    for _ in range(10):
        mixer.step()
    assert np.allclose(mixer.values, dense_mix_oracle(m, block, 10), atol=1e-12)
    # Advancing columns separately reaches the same place.
    mixer.reset(block)
    for _ in range(10):
        mixer.step(np.array([0, 2]))
    for _ in range(10):
        mixer.step(np.array([1]))
        mixer.step(np.array([3]))
    assert np.allclose(mixer.values, dense_mix_oracle(m, block, 10), atol=1e-12)


@st.composite
def random_graph(draw):
    n = draw(st.integers(2, 50))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    return build_gossip_matrix(build_topology("custom", n, list(zip(range(1, n), parents)) + extra))


@given(random_graph(), st.integers(1, 25), st.integers(0, 2**32 - 1))
def test_distributed_equals_dense(matrix, steps, seed):
    v = np.random.default_rng(seed).normal(size=matrix.n)
    lam = matrix.lambda2_abs
    assert np.allclose(_distributed(matrix, v, steps, lam), dense_mix_oracle(matrix, v, steps), atol=1e-9)


@given(random_graph(), st.integers(1, 30))
def test_mixing_preserves_sum(matrix, steps):
    v = np.linspace(0.0, 1.0, matrix.n)
    out = dense_mix_oracle(matrix, v, steps)
    assert math.fsum(out) == pytest.approx(math.fsum(v), rel=1e-9, abs=1e-9)
