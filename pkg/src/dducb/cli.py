"""Command-line entry point.

    dducb run --topology cycle --nodes 100 --algo dducb --horizon 10000 --out out/
    dducb preset fig1-cycle-100 --out out/ --workers 4
    dducb list-presets

``--config FILE`` reads flat ``key = value`` lines (keys are flag names
without the dashes, ``-`` or ``_`` both accepted); flags given on the command
line win over the file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bandit import benchmark_arms, load_means_csv
from .errors import ConfigError, DDUCBError
from .graph import load_edge_list
from .presets import PRESETS, run_configs, run_preset
from .simulator import ALGORITHMS, VARIANTS, SimulationConfig

__all__ = ["main", "build_parser", "parse_config", "read_config_file"]

DEFAULTS = {
    "topology": "cycle",
    "nodes": 100,
    "arms_file": None,
    "edges_file": None,
    "sigma": 1.0,
    "distribution": "gaussian",
    "horizon": 10_000,
    "algo": "dducb",
    "eta": 2.0,
    "epsilon": 1.0 / 22.0,
    "gamma": 2.0,
    "seed": 0,
    "reps": 1,
    "variant": "base",
    "bandwidth": None,
    "lambda2_override": None,
    "delay": None,
    "out": None,
    "workers": 1,
    "engine": "vectorized",
}


def _positive_int(key):
    def conv(text):
        v = int(text)
        if v < 1:
            raise ValueError("must be >= 1")
        return v
    return conv


def _variant(text: str) -> str:
    parts = [p.strip() for p in text.split("+") if p.strip()]
    bad = [p for p in parts if p not in VARIANTS]
    if bad or not parts:
        raise ValueError(f"expected one or more of {'/'.join(VARIANTS)} joined by '+'")
    return "+".join(parts)


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return conv


CONVERTERS = {
    "topology": _choice(("cycle", "grid", "complete", "custom")),
    "nodes": _positive_int("nodes"),
    "arms_file": str,
    "edges_file": str,
    "sigma": float,
    "distribution": _choice(("gaussian", "bernoulli")),
    "horizon": _positive_int("horizon"),
    "algo": _choice(ALGORITHMS),
    "eta": float,
    "epsilon": float,
    "gamma": float,
    "seed": int,
    "reps": _positive_int("reps"),
    "variant": _variant,
    "bandwidth": _positive_int("bandwidth"),
    "lambda2_override": float,
    "delay": _positive_int("delay"),
    "out": str,
    "workers": _positive_int("workers"),
    "engine": _choice(("vectorized", "agents")),
}


def _convert(key: str, text: str):
    try:
        return CONVERTERS[key](text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(key, f"invalid value {text!r}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def read_config_file(path: str | Path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}", f"expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONVERTERS:
            raise ConfigError(key, "unknown configuration key")
        values[key] = _convert(key, value)
    return values


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # Defaults stay None here so a config file can fill in what flags omit.
    for key in DEFAULTS:
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, default=None, type=lambda s, k=key: _convert(k, s))
    p.add_argument("--config", default=None, help="key=value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dducb", description="Decentralized delayed UCB simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run_flags(sub.add_parser("run", help="simulate one algorithm"))
    pre = sub.add_parser("preset", help="run a named experiment")
    pre.add_argument("name")
    pre.add_argument("--out", required=True)
    pre.add_argument("--workers", type=lambda s: _convert("workers", s), default=1)
    pre.add_argument("--seed", type=lambda s: _convert("seed", s), default=0)
    pre.add_argument("--reps", type=lambda s: _convert("reps", s), default=None)
    pre.add_argument("--horizon", type=lambda s: _convert("horizon", s), default=None)
    sub.add_parser("list-presets", help="show preset names")
    return parser


def parse_config(argv: list[str]) -> tuple[SimulationConfig, dict]:
    """Simulation config plus run options (``out``, ``workers``, ``engine``) for ``run``."""
    args = build_parser().parse_args(["run", *argv] if not argv or argv[0] != "run" else argv)
    values = dict(DEFAULTS)
    if args.config:
        values.update(read_config_file(args.config))
    values.update({k: v for k, v in vars(args).items() if k in DEFAULTS and v is not None})
    return _to_config(values), {k: values[k] for k in ("out", "workers", "engine")}


def _to_config(v: dict) -> SimulationConfig:
    if v["arms_file"]:
        bandit = load_means_csv(v["arms_file"], sigma=v["sigma"], distribution=v["distribution"])
    else:
        base = benchmark_arms()
        bandit = replace(base, sigma=v["sigma"], distribution=v["distribution"]) if (
            v["sigma"] != base.sigma or v["distribution"] != base.distribution) else base
    edges = None
    nodes = v["nodes"]
    if v["topology"] == "custom":
        if not v["edges_file"]:
            raise ConfigError("edges_file", "custom topology needs --edges-file")
        topo = load_edge_list(v["edges_file"], n=nodes if nodes != DEFAULTS["nodes"] else None)
        edges, nodes = tuple(sorted(topo.edges)), topo.node_count
    try:
        return SimulationConfig(
            topology=v["topology"],
            n_nodes=nodes,
            bandit=bandit,
            algorithm=v["algo"],
            horizon=v["horizon"],
            master_seed=v["seed"],
            repetitions=v["reps"],
            eta=v["eta"],
            epsilon=v["epsilon"],
            gamma=v["gamma"],
            variant=v["variant"],
            bandwidth=v["bandwidth"],
            lambda2_override=v["lambda2_override"],
            delay=v["delay"],
            edges=edges,
        )
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from None


def _run(argv: list[str]) -> int:
    config, opts = parse_config(argv)
    results = run_configs([config], opts["out"], workers=opts["workers"], engine=opts["engine"])
    traces = results[config.name]
    finals = [tr.cumulative[-1] for tr in traces]
    print(f"{config.name}: {len(traces)} rep(s), mean final regret {sum(finals) / len(finals):.6g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "run":
            return _run(argv[1:])
        args = build_parser().parse_args(argv)
        if args.command == "list-presets":
            for name, p in PRESETS.items():
                print(f"{name}\t{p.description}")
            return 0
        run_preset(args.name, args.out, workers=args.workers, master_seed=args.seed,
                   horizon=args.horizon, repetitions=args.reps)
        print(f"wrote {args.out}")
        return 0
    except (DDUCBError, ValueError, KeyError, OSError, ZeroDivisionError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"dducb: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
