"""Named experiment setups and the runner that turns one into CSV files."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import BoundInputs, dducb_finite_time_bound, problem_lower_bound
from .bandit import benchmark_arms, gaps as arm_gaps
from .csvio import SummaryRow, write_summary, write_traces
from .errors import UnknownPresetError
from .mixing import epsilon_for_delay
from .simulator import SimulationConfig, aggregate_traces, build_matrix, policy_config, run_simulation

__all__ = ["ExperimentPreset", "PRESETS", "get_preset", "preset_configs", "run_configs", "run_preset"]

REPETITIONS = 10
HORIZON = 10_000
RC_GAMMAS = (2.0, 1.01, 1.001)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    topology: str
    n_nodes: int
    horizon: int = HORIZON
    repetitions: int = REPETITIONS
    description: str = ""


PRESETS = {
    p.name: p
    for p in (
        ExperimentPreset("fig1-cycle-100", "cycle", 100, description="cycle, 100 nodes"),
        ExperimentPreset("fig1-cycle-200", "cycle", 200, description="cycle, 200 nodes"),
        ExperimentPreset("fig1-grid-100", "grid", 100, description="10 x 10 grid"),
        ExperimentPreset("fig1-grid-225", "grid", 225, description="15 x 15 grid"),
    )
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def preset_configs(
    preset: ExperimentPreset | str,
    master_seed: int = 0,
    horizon: int | None = None,
    repetitions: int | None = None,
) -> list[SimulationConfig]:
    """The five curves: accelerated and unaccelerated DDUCB, running consensus at three gammas.

    Both DDUCB curves add local pulls during a stage. The unaccelerated one
    runs with the accelerated stage length, and its epsilon is the one that
    reproduces that length through the unaccelerated delay formula.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    common = SimulationConfig(
        topology=preset.topology,
        n_nodes=preset.n_nodes,
        bandit=benchmark_arms(),
        horizon=horizon or preset.horizon,
        master_seed=master_seed,
        repetitions=repetitions or preset.repetitions,
        eta=2.0,
        epsilon=1.0 / 22.0,
    )
    accel = replace(common, algorithm="dducb", variant="local_pulls", label="dducb")
    matrix = build_matrix(accel)
    c = policy_config(accel, matrix).C
    unaccel = replace(
        common,
        algorithm="dducb_unaccel",
        variant="local_pulls",
        delay=c,
        epsilon=epsilon_for_delay(c, preset.n_nodes, matrix.lambda2_abs),
        label="dducb_unaccel",
    )
    rc = [replace(common, algorithm="running_consensus", gamma=g) for g in RC_GAMMAS]
    return [accel, unaccel, *rc]


def _summary_rows(config: SimulationConfig, traces, stage_length: int | None) -> list[SummaryRow]:
    agg = aggregate_traces(traces, algo=config.name)
    t = np.arange(1, config.horizon + 1)
    g = tuple(arm_gaps(config.bandit).gaps)
    lower = problem_lower_bound(BoundInputs(g, N=config.n_nodes, T=config.horizon), T=t)
    bound = None
    if config.algorithm in ("dducb", "dducb_unaccel"):
        inputs = BoundInputs(g, N=config.n_nodes, T=config.horizon, C=stage_length, sigma=config.bandit.sigma,
                             eta=config.eta, epsilon=config.epsilon)
        bound = dducb_finite_time_bound(inputs, T=t)
    return [
        SummaryRow(config.name, int(t[i]), float(agg.mean[i]), float(agg.std[i]),
                   None if bound is None else float(bound[i]), float(lower[i]))
        for i in range(config.horizon)
    ]


def run_configs(configs: list[SimulationConfig], out_dir: str | Path | None = None, workers: int = 1,
                engine: str = "vectorized"):
    """Run every config; optionally write per-(algo, rep) traces and ``summary.csv``.

    Returns ``{algo: [RegretTrace, ...]}`` in config order.
    """
    results = {}
    summary: list[SummaryRow] = []
    for cfg in configs:
        traces = run_simulation(cfg, workers=workers, engine=engine)
        results[cfg.name] = traces
        summary.extend(_summary_rows(cfg, traces, traces[0].stage_length))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, traces in results.items():
            for tr in traces:
                write_traces([tr], out / f"{name}_rep{tr.rep:02d}.csv")
        write_summary(summary, out / "summary.csv")
    return results


def run_preset(name: str, out_dir: str | Path | None = None, workers: int = 1, master_seed: int = 0,
               horizon: int | None = None, repetitions: int | None = None):
    return run_configs(preset_configs(name, master_seed, horizon, repetitions), out_dir, workers)
