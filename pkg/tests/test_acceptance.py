"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict; the lines are printed at the
end of the pytest run (see ``conftest.py``) and when the file is run directly.
"""

import filecmp
import math
import sys
import time

import numpy as np
import pytest

from dducb.analysis import BoundInputs, comparison_check, cycle_cot_check, dducb_finite_time_bound
from dducb.bandit import BanditInstance, benchmark_arms, draw_matrix, gaps
from dducb.graph import build_gossip_matrix, build_topology, cycle_half_matrix, validate_gossip
from dducb.mixing import MixParams, NetworkMixer, compute_delay, dense_mix_oracle, mix_step, mixer_start
from dducb.presets import preset_configs, run_configs
from dducb.simulator import SimulationConfig, aggregate_traces, estimate_node_count, run_repetition, run_simulation

from oracles import delayed_ucb

VERDICTS: dict[int, str] = {}
EPS = 1.0 / 22.0


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="session")
def fig1_cycle_100(tmp_path_factory):
    """The cycle-100 preset run twice: 4 workers, then 1 worker."""
    out_a = tmp_path_factory.mktemp("fig1_a")
    out_b = tmp_path_factory.mktemp("fig1_b")
    t0 = time.perf_counter()
    res = run_configs(preset_configs("fig1-cycle-100"), out_a, workers=4)
    elapsed = time.perf_counter() - t0
    run_configs(preset_configs("fig1-cycle-100"), out_b, workers=1)
    return res, elapsed, out_a, out_b


def test_criterion_01_gossip_validity():
    t0 = time.perf_counter()
    failures = []
    for kind, n in [("cycle", 100), ("cycle", 200), ("grid", 100), ("grid", 225), ("complete", 100)]:
        report = validate_gossip(build_gossip_matrix(build_topology(kind, n)), tol=1e-12)
        if not report.ok:
            failures.append(f"{kind}{n}:{report.failed()}")
    worst = 0.0
    for n in (100, 101, 200):
        ev = np.sort(cycle_half_matrix(n).eigenvalues)
        worst = max(worst, float(np.max(np.abs(ev - np.sort(np.cos(2 * np.pi * np.arange(n) / n))))))
    elapsed = time.perf_counter() - t0
    ok = not failures and worst <= 1e-9 and elapsed < 5.0
    record(1, ok, f"invalid={failures or 'none'} max|eig-cos|={worst:.2e} time={elapsed:.2f}s")


def test_criterion_02_mixing_accuracy():
    t0 = time.perf_counter()
    m = build_gossip_matrix(build_topology("cycle", 100))
    c = compute_delay(MixParams(m.lambda2_abs, 100, EPS))
    rng = np.random.default_rng(2)
    v = rng.dirichlet(np.ones(100), size=100).T
    mixer = NetworkMixer(m.entries, m.lambda2_abs, c)
    mixer.reset(v)
    for _ in range(c):
        mixer.step()
    err = np.linalg.norm(mixer.values - 1 / 100, axis=0)
    dense_err = np.linalg.norm(dense_mix_oracle(m, v, c) - 1 / 100, axis=0)
    worst_diff = 0.0
    for g in range(20):
        grng = np.random.default_rng(100 + g)
        n = int(grng.integers(2, 51))
        edges = [(i, int(grng.integers(0, i))) for i in range(1, n)]
        edges += [tuple(int(x) for x in grng.integers(0, n, 2)) for _ in range(n // 2)]
        gm = build_gossip_matrix(build_topology("custom", n, edges))
        steps = int(grng.integers(1, 40))
        x = grng.normal(size=n)
        rows = [gm.row(i) for i in range(n)]
        states = [mixer_start(x[i:i + 1]) for i in range(n)]
        for _ in range(steps):
            vals = [s.y_curr for s in states]
            states = [mix_step(states[i], {j: vals[j] for j in rows[i] if j != i}, rows[i], gm.lambda2_abs, self_id=i)
                      for i in range(n)]
        dist = np.array([s.y_curr[0] for s in states])
        worst_diff = max(worst_diff, float(np.max(np.abs(dist - dense_mix_oracle(gm, x, steps)))))
    elapsed = time.perf_counter() - t0
    ok = err.max() <= EPS / 100 and dense_err.max() <= EPS / 100 and worst_diff <= 1e-9 and elapsed < 30
    record(2, ok, f"C={c} max err={err.max():.3e} (limit {EPS / 100:.3e}) distributed-vs-dense={worst_diff:.1e} "
                  f"time={elapsed:.1f}s")


def test_criterion_03_acceleration_factor():
    # Frozen from an mpmath evaluation of both delay formulas.
    lam_c = math.cos(2 * math.pi / 100)
    acc_c = compute_delay(MixParams(lam_c, 100, EPS), True)
    una_c = compute_delay(MixParams(lam_c, 100, EPS), False)
    lam = build_gossip_matrix(build_topology("cycle", 100)).lambda2_abs
    acc = compute_delay(MixParams(lam, 100, EPS), True)
    una = compute_delay(MixParams(lam, 100, EPS), False)
    ok = (acc_c, una_c) == (134, 3897) and (acc, una) == (164, 5847)
    ok = ok and acc_c < una_c and una_c / acc_c > 10 and acc < una and una / acc > 10
    record(3, ok, f"cos(2pi/N) cycle: {acc_c} vs {una_c} (x{una_c / acc_c:.1f}); "
                  f"preset cycle: {acc} vs {una} (x{una / acc:.1f})")


def test_criterion_04_count_consistency():
    inst = BanditInstance([1.0, 0.8, 0.8, 0.8, 0.8], sigma=1.0)
    cfg = SimulationConfig("cycle", 25, inst, "dducb", horizon=2000, audit=True)
    tr = run_repetition(cfg, 0)
    sum_err = max(float(np.max(np.abs(a.sum_a - a.truth) / a.truth)) for a in tr.audits)
    node_err = max(a.max_node_rel_err for a in tr.audits)
    ok = len(tr.audits) > 0 and sum_err <= 1e-9 and node_err <= cfg.epsilon
    record(4, ok, f"{len(tr.audits)} stage boundaries, sum rel err={sum_err:.1e}, "
                  f"max node rel err={node_err:.2e} (eps={cfg.epsilon:.4f})")


def _bound_curve(cfg, stage_length):
    inputs = BoundInputs(tuple(gaps(cfg.bandit).gaps), N=cfg.n_nodes, T=cfg.horizon, C=stage_length,
                         sigma=cfg.bandit.sigma, eta=cfg.eta, epsilon=cfg.epsilon)
    return dducb_finite_time_bound(inputs, T=np.arange(1, cfg.horizon + 1))


def test_criterion_05_bound_dominance(fig1_cycle_100):
    res, elapsed, _, _ = fig1_cycle_100
    cfg = preset_configs("fig1-cycle-100")[0]
    traces = res["dducb"]
    mean = aggregate_traces(traces).mean
    bound = _bound_curve(cfg, traces[0].stage_length)
    slack = float(np.min(bound - mean))
    ok = bool(np.all(mean <= bound)) and elapsed < 600
    record(5, ok, f"min(bound - mean regret)={slack:.1f}, final mean={mean[-1]:.1f} vs bound {bound[-1]:.1f}, "
                  f"preset time={elapsed:.0f}s")


def test_criterion_06_regret_ordering(fig1_cycle_100):
    res = fig1_cycle_100[0]
    base = preset_configs("fig1-cycle-100")[0]
    indep = SimulationConfig("cycle", 100, benchmark_arms(), "independent", horizon=base.horizon,
                             repetitions=base.repetitions, master_seed=base.master_seed)
    finals = {name: aggregate_traces(tr).mean[-1] for name, tr in res.items()}
    finals["independent"] = aggregate_traces(run_simulation(indep, workers=4)).mean[-1]
    mean = aggregate_traces(res["dducb"]).mean
    t = len(mean)
    first, last = mean[t // 5 - 1], mean[-1] - mean[t - t // 5 - 1]
    checks = {
        "< rc(g=2)": finals["dducb"] < finals["running_consensus_g2"],
        "< rc(g=1.001)": finals["dducb"] < finals["running_consensus_g1.001"],
        "< independent": finals["dducb"] < finals["independent"],
        "flattening": last < 0.25 * first,
    }
    detail = ", ".join(f"{k}:{'ok' if v else 'no'}" for k, v in checks.items())
    nums = " ".join(f"{k}={v:.0f}" for k, v in finals.items())
    record(6, all(checks.values()), f"{detail} | final means {nums} | last/first 20% = {last / first:.3f}")


def test_criterion_07_degenerate_equivalence():
    inst = BanditInstance([0.3, 0.6, 0.55, 0.1, 0.5], sigma=1.0)
    horizon = 3000
    cfg = SimulationConfig("cycle", 1, inst, "dducb", horizon=horizon, delay=1, master_seed=4, record_choices=True)
    ref = delayed_ucb(draw_matrix(4, 0, horizon, 1)[:, 0], inst.means)
    vec = run_repetition(cfg, 0, "vectorized")
    agt = run_repetition(cfg, 0, "agents")
    g = gaps(inst).gaps
    ref_trace = np.array([math.fsum(g[k] * n for k, n in enumerate(row))
                          for row in np.cumsum(np.eye(5, dtype=np.int64)[ref], axis=0)])
    ok = (vec.choices[:, 0].tolist() == ref and agt.choices[:, 0].tolist() == ref
          and np.array_equal(vec.cumulative, ref_trace) and np.array_equal(agt.cumulative, ref_trace))
    record(7, ok, f"{horizon} rounds, choices and regret trace identical to the delayed-UCB oracle: {ok}")


def test_criterion_08_node_count():
    eps = 0.1
    worst = {}
    collisions = 0
    ok = True
    for n in (10, 50):
        m = build_gossip_matrix(build_topology("cycle", n))
        rng = np.random.default_rng(n)
        lo, hi = math.inf, -math.inf
        for _ in range(100):
            est = estimate_node_count(m, eps, rng=rng)
            collisions += est.collision
            if not est.collision:
                lo, hi = min(lo, est.lower), max(hi, est.upper)
                ok &= n / (1 + 2 * eps) <= est.lower and est.upper <= n / (1 - 2 * eps)
        worst[n] = (lo, hi)
    ok = ok and collisions == 0
    detail = " ".join(f"N={n}: [{lo:.3f}, {hi:.3f}]" for n, (lo, hi) in worst.items())
    record(8, ok, f"{detail}, collisions={collisions}")


def test_criterion_09_comparison_terms():
    parts = []
    ok = True
    for kind, n in [("cycle", 100), ("cycle", 200), ("grid", 100), ("grid", 225)]:
        m = build_gossip_matrix(build_topology(kind, n))
        assert m.lambda2_abs >= 1 / math.e
        lhs, rhs, holds = comparison_check(m.eigenvalues, n, gamma=2.0)
        ok &= holds
        parts.append(f"{kind}{n}:{lhs / rhs:.2f}")
    for n in (5, 25, 101):
        ok &= cycle_cot_check(n)[2]
    record(9, ok, f"2B/(N lnN/ln(1/l2)) {' '.join(parts)}; cot^2 inequality for N=5,25,101 holds: {ok}")


def test_criterion_10_determinism(fig1_cycle_100):
    _, _, out_a, out_b = fig1_cycle_100
    names = sorted(p.name for p in out_a.iterdir())
    same = names == sorted(p.name for p in out_b.iterdir())
    _, mismatch, errors = filecmp.cmpfiles(out_a, out_b, names, shallow=False)
    ok = same and not mismatch and not errors and len(names) == 51
    record(10, ok, f"{len(names)} files compared across workers=4 and workers=1, mismatches={mismatch or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
