"""Timing harness comparing the canonical and kernel-based routes.

Protocol, applied identically to both routes:

* BLAS/LAPACK thread pools are pinned (single-threaded by default) with
  threadpoolctl for the whole measured block.
* one untimed warm-up run, then `repetitions` timed runs; the median
  wall time is reported. Reported series use at least 3 repetitions.
* a timed run covers assembly through the finished result (factor
  matrices, factorizations, kernel extraction where applicable, and the
  requested redundancy output). Model generation, validation, the
  kinematic rank gate, and file output stay outside the clock.
* before timing a cell, the peak working-set size of the requested
  route is estimated; cells whose estimate exceeds the memory cap
  (default 8 GiB) are recorded as skipped, not run.
* both routes must agree on the result to within PARITY_TOL before a
  speedup is reported; disagreement aborts the series.

The summary CSV has one row per (family, n, alpha, task) cell with the
median time of the kernel-based route and its speedup over the
canonical route. `write_records_csv` dumps the per-route raw timings.
"""
from __future__ import annotations

import csv
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .assembly import assemble
from .generators import GeneratorSpec, generate
from .model import ModelCounts, StructuralModel, build_dof_map
from .redundancy import (
    DENSE_KERNEL_LIMIT,
    InvariantViolation,
    kernel_basis,
    rank_and_indeterminacy,
    redundancy_canonical,
    redundancy_diag_canonical,
    redundancy_diag_efficient,
    redundancy_efficient,
)

CSV_FORMAT_VERSION = "1.0"
CSV_COLUMNS = ("family", "n", "alpha", "task", "method", "time_s", "speedup", "status")
RECORD_COLUMNS = ("family", "n", "alpha", "task", "method", "repetitions", "threads",
                  "time_s", "times", "peak_bytes_est", "status")

DEFAULT_MEMORY_CAP_BYTES = 8 * 2**30
PARITY_TOL = 1e-8
TASKS = ("diag", "full")
METHODS = ("canonical", "efficient")

_FLOAT = 8  # bytes per float64
_CHUNK = 2048  # row block of the chunked canonical diagonal


@dataclass(frozen=True)
class TimingRecord:
    """Raw timing of one route on one model."""
    family: str
    n: int
    alpha: float | None
    task: str
    method: str
    times: tuple[float, ...]
    time_s: float
    repetitions: int
    threads: int
    peak_bytes_est: int
    status: str


@dataclass(frozen=True)
class BenchGrid:
    """A sweep over sizes (and, for the cylinder, redundancy ratios)."""
    family: str
    ns: tuple[int, ...]
    alphas: tuple[float, ...] | None = None
    task: str = "diag"
    repetitions: int = 3
    threads: int = 1
    memory_cap_bytes: int | None = DEFAULT_MEMORY_CAP_BYTES
    kernel_method: str = "auto"


def estimate_peak_bytes(task: str, method: str, n_q: int, n: int, n_s: int,
                        kernel_method: str = "auto") -> int:
    """Rough upper estimate of the dominant dense allocations of one run.

    Only order-of-magnitude fidelity is needed: the estimate gates the
    memory-cap skip, it is not a profiler. Sparse factor fill of the
    projected kernel route is folded into a generous per-row constant.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task '{task}'")
    if method == "canonical":
        if task == "full":
            return _FLOAT * (2 * n * n + 2 * n * n_q + n_q * n_q)
        chunk = min(_CHUNK, n_q)
        return _FLOAT * (2 * n * n + 2 * chunk * n + n_q)
    if method != "efficient":
        raise ValueError(f"unknown method '{method}'")
    km = kernel_method
    if km == "auto":
        km = "qr" if n_q * n <= DENSE_KERNEL_LIMIT else "projected"
    if km == "svd":
        kern = _FLOAT * (n_q * n_q + 2 * n_q * n + n_q * n_s)
    elif km == "qr":
        kern = _FLOAT * (2 * n_q * n + 2 * n_q * n_s)
    else:  # projected: dense blocks plus sparse-factor allowance
        kern = _FLOAT * (4 * n_q * n_s + n * n_s) + _FLOAT * 40 * 12 * n_q
    if task == "full":
        kern += _FLOAT * n_q * n_q
    return kern


def _prepare(model: StructuralModel):
    """Untimed pre-work shared by both routes: DOF map and rank gate."""
    dof_map = build_dof_map(model)
    system = assemble(model, dof_map)
    cts = rank_and_indeterminacy(system)
    return dof_map, cts


def _timed_task(model: StructuralModel, task: str, method: str, *, dof_map, cts: ModelCounts,
                repetitions: int, threads: int, memory_cap_bytes: int | None,
                kernel_method: str, family: str, alpha: float | None, size: int):
    if task not in TASKS:
        raise ValueError(f"unknown task '{task}'")
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}'")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    est = estimate_peak_bytes(task, method, cts.n_q, cts.n, cts.n_s, kernel_method)
    base = dict(family=family, n=size, alpha=alpha, task=task, method=method,
                repetitions=repetitions, threads=threads, peak_bytes_est=est)
    if memory_cap_bytes is not None and est > memory_cap_bytes:
        return TimingRecord(times=(), time_s=math.nan, status="skipped:memory", **base), None

    def run_once():
        system = assemble(model, dof_map)
        if method == "canonical":
            if task == "full":
                return redundancy_canonical(system)
            return redundancy_diag_canonical(system)
        basis = kernel_basis(system, method=kernel_method)
        if task == "full":
            return redundancy_efficient(system, basis=basis)
        return redundancy_diag_efficient(system, basis=basis)

    times = []
    result = None
    with threadpool_limits(limits=threads):
        run_once()  # warm-up, discarded
        for _ in range(repetitions):
            t0 = time.perf_counter()
            result = run_once()
            times.append(time.perf_counter() - t0)
    record = TimingRecord(times=tuple(times), time_s=statistics.median(times),
                          status="ok", **base)
    return record, result


def time_task(model: StructuralModel, task: str, method: str, repetitions: int = 3,
              threads: int = 1, memory_cap_bytes: int | None = DEFAULT_MEMORY_CAP_BYTES,
              kernel_method: str = "auto", family: str = "custom",
              alpha: float | None = None) -> TimingRecord:
    """Time one route on one model under the module's protocol."""
    dof_map, cts = _prepare(model)
    record, _ = _timed_task(model, task, method, dof_map=dof_map, cts=cts,
                            repetitions=repetitions, threads=threads,
                            memory_cap_bytes=memory_cap_bytes,
                            kernel_method=kernel_method, family=family, alpha=alpha,
                            size=cts.n_nodes)
    return record


def _parity(task: str, a, b) -> float:
    pa = a.payload if hasattr(a, "payload") else a
    pb = b.payload if hasattr(b, "payload") else b
    if task == "diag":
        return float(np.max(np.abs(np.asarray(pa) - np.asarray(pb)))) if len(pa) else 0.0
    return float(np.max(np.abs(pa - pb))) if pa.size else 0.0


def run_series(grid: BenchGrid, progress=None):
    """Run a grid, returning (summary_rows, raw_records).

    Every cell is measured with both routes; the summary row carries the
    kernel route's median time and its speedup (canonical median divided
    by kernel-route median). A cell whose estimate breaks the memory cap
    on either route yields a skipped row. `progress`, if given, is
    called with each finished summary row.
    """
    if grid.repetitions < 3:
        raise ValueError("reported series need repetitions >= 3")
    if grid.family == "cylinder":
        if not grid.alphas:
            raise ValueError("cylinder series needs at least one alpha")
        alphas: tuple[float | None, ...] = tuple(grid.alphas)
    else:
        alphas = (None,)
    rows = []
    records = []
    for alpha in alphas:
        for n in grid.ns:
            model = generate(GeneratorSpec(grid.family, n, alpha_target=alpha))
            dof_map, cts = _prepare(model)
            alpha_out = alpha if alpha is not None else cts.alpha
            kwargs = dict(dof_map=dof_map, cts=cts, repetitions=grid.repetitions,
                          threads=grid.threads, memory_cap_bytes=grid.memory_cap_bytes,
                          kernel_method=grid.kernel_method, family=grid.family,
                          alpha=alpha_out, size=n)
            est_c = estimate_peak_bytes(grid.task, "canonical", cts.n_q, cts.n, cts.n_s,
                                        grid.kernel_method)
            est_e = estimate_peak_bytes(grid.task, "efficient", cts.n_q, cts.n, cts.n_s,
                                        grid.kernel_method)
            row = {"family": grid.family, "n": n, "alpha": f"{alpha_out:.6f}",
                   "task": grid.task, "method": "efficient"}
            cap = grid.memory_cap_bytes
            if cap is not None and max(est_c, est_e) > cap:
                row.update(time_s="", speedup="", status="skipped:memory")
                rows.append(row)
                if progress is not None:
                    progress(row)
                continue
            rec_c, res_c = _timed_task(model, grid.task, "canonical", **kwargs)
            rec_e, res_e = _timed_task(model, grid.task, "efficient", **kwargs)
            records.extend([rec_c, rec_e])
            gap = _parity(grid.task, res_c, res_e)
            if gap > PARITY_TOL:
                raise InvariantViolation(
                    f"routes disagree by {gap:.3e} on {grid.family} n={n} "
                    f"alpha={alpha_out:.4f} task={grid.task}")
            row.update(time_s=f"{rec_e.time_s:.6f}",
                       speedup=f"{rec_c.time_s / rec_e.time_s:.4f}", status="ok")
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows, records


def write_csv(rows, path) -> None:
    """Write summary rows in the stable CSV_COLUMNS order (header always)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_records_csv(records, path) -> None:
    """Write raw per-route records (one line per measured route and cell)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow({
                "family": rec.family, "n": rec.n,
                "alpha": "" if rec.alpha is None else f"{rec.alpha:.6f}",
                "task": rec.task, "method": rec.method,
                "repetitions": rec.repetitions, "threads": rec.threads,
                "time_s": "" if math.isnan(rec.time_s) else f"{rec.time_s:.6f}",
                "times": ";".join(f"{t:.6f}" for t in rec.times),
                "peak_bytes_est": rec.peak_bytes_est, "status": rec.status,
            })
