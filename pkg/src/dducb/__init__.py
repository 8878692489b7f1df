"""Decentralized delayed UCB for cooperative multi-agent bandits."""

from .bandit import BanditInstance, benchmark_arms
from .graph import build_gossip_matrix, build_topology, cycle_half_matrix
from .mixing import compute_delay, dense_mix_oracle, mix_step
from .policy import DDUCBNetwork, PolicyConfig, dducb_init, dducb_round, stage_commit
from .simulator import SimulationConfig, aggregate_traces, estimate_node_count, run_simulation

__version__ = "0.1.0"

__all__ = [
    "BanditInstance",
    "benchmark_arms",
    "build_gossip_matrix",
    "build_topology",
    "cycle_half_matrix",
    "compute_delay",
    "dense_mix_oracle",
    "mix_step",
    "DDUCBNetwork",
    "PolicyConfig",
    "dducb_init",
    "dducb_round",
    "stage_commit",
    "SimulationConfig",
    "aggregate_traces",
    "estimate_node_count",
    "run_simulation",
]
