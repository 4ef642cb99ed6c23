"""Monolithic versus hybrid on the synthetic slab suite."""

from __future__ import annotations

import csv
import dataclasses
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .generator import GeneratorSpec, benchmark_suite, generate_slab_instance
from .oracle import validate_schedule
from .pipeline import solve

logger = logging.getLogger(__name__)

FIELDS = ("instance", "n_tasks", "mode", "status", "solve_time_s", "objective", "assignment_fraction", "error")


@dataclass
class BenchmarkRow:
    instance: str
    n_tasks: int
    mode: str
    status: str
    solve_time_s: float
    objective: float | None = None
    assignment_fraction: float | None = None
    error: str = ""


def workers() -> int:
    try:
        return max(1, int(os.environ.get("LASER_WORKERS", "1")))
    except ValueError:
        return 1


def run_one(spec: GeneratorSpec, mode: str, time_limit_s: float, seed: int = 0, lam: float = 1.0) -> BenchmarkRow:
    """Never raises: failures come back as a row with status ``error``."""
    name = spec.name or "unnamed"
    t0 = time.monotonic()
    n = 0
    try:
        inst = generate_slab_instance(spec, seed)
        n = inst.n_tasks
        out = solve(inst, mode, lam=lam, time_limit_s=time_limit_s)
        obj = None
        if out.schedule is not None:
            if validate_schedule(inst, out.schedule):
                raise RuntimeError("returned schedule fails validation")
            obj = out.schedule.objective(lam)
        return BenchmarkRow(name, n, mode, out.status.value, round(out.wall_time_s, 3), obj,
                            out.details.get("assignment_fraction"))
    except Exception as exc:  # recorded, the run continues
        logger.warning("%s/%s failed: %s", name, mode, exc)
        return BenchmarkRow(name, n, mode, "error", round(time.monotonic() - t0, 3), error=f"{type(exc).__name__}: {exc}")


def _job(args):
    return run_one(*args)


def run_benchmark(specs: Sequence[GeneratorSpec] | None = None, modes: Iterable[str] = ("monolithic", "hybrid"),
                  time_limit_s: float = 1800.0, seed: int = 0, lam: float = 1.0, session: str = "top",
                  n_workers: int | None = None) -> list[BenchmarkRow]:
    """One row per (spec, mode), in suite order. ``session`` selects which part of each slab is solved."""
    specs = list(specs) if specs is not None else benchmark_suite()
    specs = [dataclasses.replace(s, session=session) for s in specs]
    jobs = [(s, m, time_limit_s, seed, lam) for s in specs for m in modes]
    n_workers = n_workers or workers()
    if n_workers <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(_job, jobs))


def write_rows(rows: Sequence[BenchmarkRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(dataclasses.asdict(r))
