"""Measurement harness for the minimal attention width across sequence lengths.

For a drawn target matrix and an ascending grid of candidate widths ``d``,
the harness redraws the shared orthogonal projection up to ``round(q * L)``
times per width and records the first width at which some redraw satisfies
both ratio conditions.  Sweeps over sequence lengths and over ``q`` stream
rows to a resumable CSV, and a least-squares fit of width against log L
summarizes the growth rate.

Seeding: each (L, trial) record gets ``derive_seed(master_seed, L, trial)``.
From that record seed, the target matrix uses ``derive_seed(record_seed, 0)``
and redraw ``t`` at width ``d`` uses ``derive_seed(record_seed, 1, d, t)``,
so every (L, trial, d, t) combination has its own stream and results do not
depend on scheduling.  A record can be replayed from its CSV row alone.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._seeds import derive_seed
from .construct import build_log_gap, sample_stiefel, svd_factor
from .matrices import ApproxParams, GenerationError, SparseStochasticMatrix, generate
from .verify import check_conditions

CSV_HEADER = "L,trial,q,d_min,theoretical_d,redraws_used,seed"
THREADS_ENV = "SPARSEATTN_THREADS"

# Cap on the total float64 count of a batch of logit matrices; keeps the
# batched redraw evaluation under ~256 MiB regardless of L.
_BATCH_BUDGET = 1 << 25


@dataclass
class SweepRecord:
    """One (L, trial) measurement; ``d_min`` is None when no grid width passed."""

    L: int
    trial: int
    q: float
    d_min: int | None
    theoretical_d: float
    redraws_used: int
    seed: int

    def to_csv_row(self) -> str:
        d = self.d_min if self.d_min is not None else -1
        return (
            f"{self.L},{self.trial},{self.q!r},{d},"
            f"{self.theoretical_d!r},{self.redraws_used},{self.seed}"
        )

    @classmethod
    def from_csv_row(cls, row: str) -> "SweepRecord":
        parts = row.strip().split(",")
        if len(parts) != 7:
            raise ValueError(f"expected 7 CSV fields, got {row!r}")
        d = int(parts[3])
        return cls(
            L=int(parts[0]),
            trial=int(parts[1]),
            q=float(parts[2]),
            d_min=None if d < 0 else d,
            theoretical_d=float(parts[4]),
            redraws_used=int(parts[5]),
            seed=int(parts[6]),
        )


@dataclass
class SweepConfig:
    """Sweep settings: problem parameters plus grids and seeding.

    ``params.L`` is a placeholder; each record overrides it with its grid
    value.  The width grid is ``d_points`` values evenly spaced over
    ``[d_lower, d_upper]``, each rounded to the nearest even integer
    (``2 * round(v / 2)``), deduplicated, ascending.
    """

    params: ApproxParams
    L_grid: list[int] = field(default_factory=list)
    d_lower: int = 200
    d_upper: int = 600
    d_points: int = 30
    q: float = 1.0
    trials_per_L: int = 5
    master_seed: int = 0

    def __post_init__(self):
        if not self.L_grid:
            raise ValueError("L_grid must not be empty")
        if any(L <= 1 for L in self.L_grid):
            raise ValueError("every L in L_grid must be > 1")
        if not 2 <= self.d_lower <= self.d_upper:
            raise ValueError(
                f"need 2 <= d_lower <= d_upper, got ({self.d_lower}, {self.d_upper})"
            )
        if self.d_points < 1:
            raise ValueError("d_points must be >= 1")
        if self.q <= 0:
            raise ValueError("q must be positive")
        if self.trials_per_L < 1:
            raise ValueError("trials_per_L must be >= 1")

    def d_grid(self) -> list[int]:
        values = np.linspace(self.d_lower, self.d_upper, self.d_points)
        evens = sorted({int(round(v / 2.0)) * 2 for v in values})
        return [d for d in evens if d >= 2]


def theoretical_d(params: ApproxParams, L: int) -> float:
    """Upper bound on the width sufficient for the two ratio conditions.

    32 * eps2^-2 * k^2 * max(log(gamma) - log(eps1) + eps2, 1)^2
    * (2 log L + log(L - 1) + log 2), natural logarithms.
    """
    if L <= 1:
        raise ValueError(f"L must be > 1, got {L}")
    margin = max(math.log(params.gamma) - math.log(params.eps1) + params.eps2, 1.0)
    return (
        32.0
        * params.eps2 ** -2
        * params.k ** 2
        * margin ** 2
        * (2.0 * math.log(L) + math.log(L - 1) + math.log(2.0))
    )


def _redraw_batches(total: int, L: int):
    """Split redraw indices into contiguous batches sized to the memory cap."""
    batch = max(1, min(total, _BATCH_BUDGET // max(1, L * L)))
    start = 0
    while start < total:
        yield range(start, min(start + batch, total))
        start += batch


def find_dmin(A: SparseStochasticMatrix, cfg: SweepConfig, seed: int) -> SweepRecord:
    """Smallest grid width at which some projection redraw passes the check.

    Walks the width grid in ascending order (skipping widths above 2L, which
    cannot be realized); at each width performs up to ``round(q * L)``
    redraws with per-redraw derived seeds and stops at the first pass.
    Redraws within a width are evaluated in blocks, selecting the passing
    redraw with the smallest index, so the outcome does not depend on block
    size.
    """
    L = A.L
    params = replace(cfg.params, L=L, causal=A.causal)
    gap = build_log_gap(A, params.eps1, params.eps2)
    factors = svd_factor(gap)
    n_redraws = int(round(cfg.q * L))
    bound = theoretical_d(params, L)

    redraws_used = 0
    for d in cfg.d_grid():
        if d > 2 * L:
            continue
        half = d // 2
        scale = math.sqrt(2.0 * L / d)
        for batch in _redraw_batches(n_redraws, L):
            ys = np.stack([sample_stiefel(L, half, derive_seed(seed, 1, d, t)) for t in batch])
            lefts = scale * (factors.left @ ys)
            rights = scale * (factors.right @ ys)
            for offset, t in enumerate(batch):
                z = lefts[offset] @ rights[offset].T
                redraws_used += 1
                report = check_conditions(z, A, params.eps1, params.eps2, causal=A.causal)
                if report.passed:
                    return SweepRecord(
                        L=L,
                        trial=-1,
                        q=cfg.q,
                        d_min=d,
                        theoretical_d=bound,
                        redraws_used=redraws_used,
                        seed=seed,
                    )
    return SweepRecord(
        L=L,
        trial=-1,
        q=cfg.q,
        d_min=None,
        theoretical_d=bound,
        redraws_used=redraws_used,
        seed=seed,
    )


def _matrix_seed(record_seed: int) -> int:
    return derive_seed(record_seed, 0)


def _run_record(cfg: SweepConfig, L: int, trial: int) -> SweepRecord:
    record_seed = derive_seed(cfg.master_seed, L, trial)
    params = replace(cfg.params, L=L)
    try:
        A = generate(params, _matrix_seed(record_seed))
    except GenerationError:
        return SweepRecord(
            L=L,
            trial=trial,
            q=cfg.q,
            d_min=None,
            theoretical_d=theoretical_d(params, L),
            redraws_used=0,
            seed=record_seed,
        )
    record = find_dmin(A, cfg, record_seed)
    record.trial = trial
    return record


def _read_existing(csv_path) -> list[SweepRecord]:
    if csv_path is None or not os.path.exists(csv_path):
        return []
    with open(csv_path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        return []
    if lines[0] != CSV_HEADER:
        raise ValueError(f"{csv_path}: unexpected CSV header {lines[0]!r}")
    return [SweepRecord.from_csv_row(ln) for ln in lines[1:]]


def _worker_count(n_tasks: int) -> int:
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_tasks))


def run_sweep(cfg: SweepConfig, csv_path=None) -> list[SweepRecord]:
    """Run every (L, trial) cell of the sweep, streaming rows to ``csv_path``.

    Completed (L, trial, q) cells already present in the CSV are skipped, so
    an interrupted sweep resumes where it stopped.  Records are computed in
    parallel (thread count from ``SPARSEATTN_THREADS``, default the machine
    parallelism) but written in deterministic grid order, so reruns produce
    byte-identical files.  Returns all records for this config, including
    previously completed ones.
    """
    existing = _read_existing(csv_path)
    done = {(r.L, r.trial, r.q): r for r in existing}
    cells = [
        (L, trial)
        for L in cfg.L_grid
        for trial in range(cfg.trials_per_L)
        if (L, trial, cfg.q) not in done
    ]

    new_records: list[SweepRecord] = []
    if cells:
        fh = None
        try:
            if csv_path is not None:
                fresh = not existing and (
                    not os.path.exists(csv_path) or os.path.getsize(csv_path) == 0
                )
                fh = open(csv_path, "a", encoding="utf-8", newline="\n")
                if fresh:
                    fh.write(CSV_HEADER + "\n")
                    fh.flush()
            with ThreadPoolExecutor(max_workers=_worker_count(len(cells))) as pool:
                futures = [pool.submit(_run_record, cfg, L, trial) for L, trial in cells]
                for fut in futures:
                    record = fut.result()
                    new_records.append(record)
                    if fh is not None:
                        fh.write(record.to_csv_row() + "\n")
                        fh.flush()
        finally:
            if fh is not None:
                fh.close()

    by_cell = {(r.L, r.trial): r for r in new_records}
    return [
        done.get((L, trial, cfg.q), None) or by_cell[(L, trial)]
        for L in cfg.L_grid
        for trial in range(cfg.trials_per_L)
    ]


def q_sweep(cfg: SweepConfig, q_values: list[float], csv_path=None) -> list[SweepRecord]:
    """Repeat the sweep for each redraw multiplier on the same matrix draws.

    The target matrix for an (L, trial) cell depends only on the master
    seed, so every q value measures the identical matrices; records are
    tagged with their q.
    """
    for q in q_values:
        if not 0.1 <= q <= 5.0:
            raise ValueError(f"q values must lie in [0.1, 5.0], got {q}")
    records: list[SweepRecord] = []
    for q in q_values:
        records.extend(run_sweep(replace(cfg, q=q), csv_path=csv_path))
    return records


def log_fit(records: list[SweepRecord]) -> tuple[float, float, float]:
    """Least-squares fit ``d_min = a + b * log(L)`` over found records.

    Returns (a, b, r2); r2 is defined as 1.0 when the found widths have zero
    variance.  Requires found widths at two or more distinct L values.
    """
    found = [r for r in records if r.d_min is not None]
    ls = sorted({r.L for r in found})
    if len(ls) < 2:
        raise ValueError(f"need found widths at >= 2 distinct L values, got {len(ls)}")
    x = np.log([r.L for r in found])
    y = np.array([float(r.d_min) for r in found])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    resid = y - design @ coef
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return a, b, r2
