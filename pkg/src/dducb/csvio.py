"""CSV emission and parsing for regret traces and summary curves.

Reals are written with 17 significant digits so a parse-back reproduces the
in-memory doubles exactly.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = ["TRACE_HEADER", "SUMMARY_HEADER", "SummaryRow", "write_traces", "read_traces", "write_summary", "read_summary"]

TRACE_HEADER = ("rep", "t", "algo", "cum_regret")
SUMMARY_HEADER = ("algo", "t", "mean", "std", "finite_time_bound", "lower_bound")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class SummaryRow:
    algo: str
    t: int
    mean: float
    std: float
    finite_time_bound: float | None
    lower_bound: float


def write_traces(traces, path: str | Path) -> None:
    """One row per ``(rep, t)``, sorted by repetition then round."""
    traces = sorted(traces, key=lambda tr: tr.rep)
    if not traces:
        raise ValueError("no traces to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for tr in traces:
            for t, v in enumerate(tr.cumulative.tolist(), 1):
                w.writerow((tr.rep, t, tr.algo, _fmt(v)))


def read_traces(path: str | Path) -> dict[tuple[str, int], np.ndarray]:
    """``{(algo, rep): cumulative regret}`` from a trace file."""
    rows = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for rep, t, algo, v in reader:
            rows[(algo, int(rep))].append((int(t), float(v)))
    out = {}
    for key, vals in rows.items():
        vals.sort()
        out[key] = np.array([v for _, v in vals])
    return out


def write_summary(rows: Iterable[SummaryRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            bound = "" if r.finite_time_bound is None else _fmt(r.finite_time_bound)
            w.writerow((r.algo, r.t, _fmt(r.mean), _fmt(r.std), bound, _fmt(r.lower_bound)))


def read_summary(path: str | Path) -> list[SummaryRow]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for r in reader:
            bound = r["finite_time_bound"]
            out.append(SummaryRow(r["algo"], int(r["t"]), float(r["mean"]), float(r["std"]),
                                  float(bound) if bound else None, float(r["lower_bound"])))
    return out
