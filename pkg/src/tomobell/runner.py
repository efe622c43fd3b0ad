"""Simulated runs and parameter sweeps.

Reproducibility contract
------------------------
Every block of every run owns an independent random stream, seeded by
``numpy.random.SeedSequence(entropy=seed, spawn_key=(point, block))`` and
driving a Philox counter-based generator. ``point`` is the sweep-point
index (0 for single runs); the remainder block has index ``n_blocks``.
Events inside a block are drawn in chunks of :data:`estimator.CHUNK`.
Blocks are the unit of parallel work and are reduced in index order, so
results do not depend on the number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import oracle
from .backend import BACKEND
from .estimator import CHUNK, EventAccumulator, chunk_sums, summarize_bell
from .model import (BlockedEstimate, DegenerateStateError, IllConditionedDenominatorError,
                    NopaParams, QuadBatch, RunConfig, TomoBellError, bell_combination)
from .sampler import sample_events, write_samples

WORKERS_ENV = "TOMOBELL_WORKERS"

CSV_COLUMNS = (
    "sweep_variable", "sweep_value", "status",
    "B", "sigma_B",
    "C_ab", "sigma_C_ab", "C_abp", "sigma_C_abp",
    "C_apbp", "sigma_C_apbp", "C_apb", "sigma_C_apb",
    "P11", "sigma_P11",
    "B_analytic", "P11_analytic",
    "eta", "crystal_phase", "n_samples", "n_blocks", "seed",
)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def block_rng(seed: int, point: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(point), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def block_layout(n_samples: int, n_blocks: int) -> list[int]:
    """Event count of blocks ``0..n_blocks`` (the last entry is the remainder)."""
    size, rem = divmod(n_samples, n_blocks)
    return [size] * n_blocks + [rem]


def iter_block_events(params: NopaParams, eta: float, n_events: int,
                      rng: np.random.Generator) -> Iterator[QuadBatch]:
    for start in range(0, n_events, CHUNK):
        yield sample_events(rng, params, eta, min(CHUNK, n_events - start))


def iter_run_events(config: RunConfig, point: int = 0) -> Iterator[tuple[int, QuadBatch]]:
    """The full event stream of a run, block by block, as ``(block, chunk)``."""
    for b, n in enumerate(block_layout(config.n_samples, config.n_blocks)):
        rng = block_rng(config.seed, point, b)
        for batch in iter_block_events(config.params, config.eta, n, rng):
            yield b, batch


def simulate(config: RunConfig, point: int = 0, workers: Optional[int] = None,
             backend: Optional[str] = None) -> EventAccumulator:
    """Sample and accumulate a whole run; blocks are spread over ``workers`` threads."""
    pairs = config.angles.pairs()
    layout = block_layout(config.n_samples, config.n_blocks)
    workers = config.workers if workers is None else workers

    def one_block(b: int) -> list[tuple[np.ndarray, int]]:
        rng = block_rng(config.seed, point, b)
        return [(chunk_sums(batch, config.eta, pairs, backend), len(batch))
                for batch in iter_block_events(config.params, config.eta, layout[b], rng)]

    jobs = [b for b, n in enumerate(layout) if n > 0]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_block, jobs))
    else:
        results = [one_block(b) for b in jobs]

    acc = EventAccumulator(pairs, config.n_blocks)
    for b, parts in zip(jobs, results):
        for sums, count in parts:
            acc.add_sums(b, sums, count)
    return acc


def dump_events(config: RunConfig, path, binary: bool = False, point: int = 0) -> None:
    """Write the exact event stream of a run (same seeds and order as :func:`simulate`)."""
    first = True
    for _, batch in iter_run_events(config, point):
        write_samples(batch, path, binary=binary, append=not first)
        first = False


@dataclass
class AnalyticValues:
    bell: float
    correlations: tuple[float, float, float, float]
    p11: float
    n_max: int
    deficit: float

    @classmethod
    def compute(cls, params: NopaParams, angles, n_max: int = oracle.DEFAULT_NMAX) -> "AnalyticValues":
        cs = tuple(oracle.correlation_exact(params, a, b, n_max) for a, b in angles.pairs())
        state = oracle.build_state(params, n_max)
        return cls(float(bell_combination(*cs)), cs, oracle.pair_probability_exact(params, n_max),
                   n_max, oracle.state_deficit(state))

    def to_dict(self) -> dict:
        return {"bell": self.bell, "correlations": list(self.correlations), "p11": self.p11,
                "n_max": self.n_max, "deficit": self.deficit}

    @classmethod
    def from_dict(cls, d: dict) -> "AnalyticValues":
        return cls(d["bell"], tuple(d["correlations"]), d["p11"], d["n_max"], d["deficit"])


@dataclass
class RunReport:
    config: RunConfig
    bell: BlockedEstimate
    correlations: tuple[BlockedEstimate, ...]
    p11: BlockedEstimate
    analytic: AnalyticValues
    wall_time: float = 0.0
    samples_per_second: float = 0.0
    backend: str = BACKEND
    point: int = 0

    @property
    def violation_sigmas(self) -> float:
        """Distance of B above the local bound 2, in standard errors."""
        if self.bell.std_error == 0:
            return math.inf
        return (self.bell.value - 2.0) / self.bell.std_error

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "point": self.point,
            "bell": self.bell.to_dict(),
            "correlations": [c.to_dict() for c in self.correlations],
            "p11": self.p11.to_dict(),
            "analytic": self.analytic.to_dict(),
            "violation_sigmas": self.violation_sigmas,
            "wall_time": self.wall_time,
            "samples_per_second": self.samples_per_second,
            "backend": self.backend,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            config=RunConfig.from_dict(d["config"]),
            bell=BlockedEstimate.from_dict(d["bell"]),
            correlations=tuple(BlockedEstimate.from_dict(c) for c in d["correlations"]),
            p11=BlockedEstimate.from_dict(d["p11"]),
            analytic=AnalyticValues.from_dict(d["analytic"]),
            wall_time=d["wall_time"], samples_per_second=d["samples_per_second"],
            backend=d["backend"], point=d.get("point", 0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_single(config: RunConfig, point: int = 0, backend: Optional[str] = None) -> RunReport:
    """Simulate one configuration and report estimates next to the exact values."""
    try:
        analytic = AnalyticValues.compute(config.params, config.angles)
    except DegenerateStateError as exc:
        raise IllConditionedDenominatorError(f"lambda = 0: {exc}") from exc
    t0 = time.perf_counter()
    acc = simulate(config, point=point, backend=backend)
    summary = summarize_bell(acc)
    wall = time.perf_counter() - t0
    return RunReport(config, summary.bell, summary.correlations, summary.p11, analytic,
                     wall_time=wall, samples_per_second=config.n_samples / wall if wall > 0 else math.inf,
                     backend=backend or BACKEND, point=point)


@dataclass
class SweepRow:
    variable: str
    value: float
    report: Optional[RunReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None


def run_sweep(config: RunConfig, on_row=None, backend: Optional[str] = None) -> list[SweepRow]:
    """One run per sweep point (point ``i`` uses sub-streams ``(seed, i, block)``).

    A failing point is recorded with its error and the sweep continues;
    ``on_row`` is called after every point so partial results can be flushed.
    """
    if config.sweep is None:
        raise ValueError("config has no sweep")
    rows = []
    for i, value in enumerate(config.sweep.values):
        try:
            report = run_single(config.with_point(config.sweep.variable, value), point=i, backend=backend)
            row = SweepRow(config.sweep.variable, value, report)
        except TomoBellError as exc:
            row = SweepRow(config.sweep.variable, value, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def csv_row(row: SweepRow, config: RunConfig) -> list[str]:
    r = row.report
    if r is None:
        vals = [row.variable, row.value, "error: " + (row.error or "")] + [None] * (len(CSV_COLUMNS) - 8)
        cfg = config.with_point(row.variable, row.value) if row.variable in ("phi", "eta") else config
        vals += [cfg.eta, cfg.params.phi, cfg.n_samples, cfg.n_blocks, cfg.seed]
        return [_fmt(v) for v in vals]
    vals = [row.variable, row.value, "ok", r.bell.value, r.bell.std_error]
    for c in r.correlations:
        vals += [c.value, c.std_error]
    vals += [r.p11.value, r.p11.std_error, r.analytic.bell, r.analytic.p11,
             r.config.eta, r.config.params.phi, r.config.n_samples, r.config.n_blocks, r.config.seed]
    return [_fmt(v) for v in vals]


def write_csv(rows: list[SweepRow], config: RunConfig, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(csv_row(row, config))


def csv_text(rows: list[SweepRow], config: RunConfig) -> str:
    buf = io.StringIO()
    write_csv(rows, config, buf)
    return buf.getvalue()
