"""Width-sweep harness tests: bound evaluation, search, CSV, fitting."""

import math
import os

import numpy as np
import pytest

from sparseattn._seeds import derive_seed
from sparseattn.construct import build_log_gap, sample_stiefel, svd_factor
from sparseattn.matrices import ApproxParams, generate
from sparseattn.sweep import (
    SweepConfig,
    SweepRecord,
    find_dmin,
    log_fit,
    q_sweep,
    run_sweep,
    theoretical_d,
)
from sparseattn.verify import check_conditions


def small_params(L=32):
    return ApproxParams(L=L, k=1, gamma=1.0, eps1=0.15, eps2=1.41)


def small_cfg(**overrides):
    defaults = dict(
        params=small_params(),
        L_grid=[16, 32],
        d_lower=4,
        d_upper=64,
        d_points=8,
        q=1.0,
        trials_per_L=2,
        master_seed=11,
    )
    defaults.update(overrides)
    return SweepConfig(**defaults)


# ------------------------------------------------------------- width bound


def test_theoretical_d_hand_computation():
    # Independent evaluation of the bound, term by term.
    p = ApproxParams(L=512, k=1, gamma=1.0, eps1=0.15, eps2=1.41)
    margin = max(math.log(1.0) - math.log(0.15) + 1.41, 1.0)
    by_hand = (
        32.0 / 1.41**2 * 1**2 * margin**2
        * (2.0 * math.log(512) + math.log(511) + math.log(2.0))
    )
    got = theoretical_d(p, 512)
    assert got == pytest.approx(by_hand, rel=1e-12)
    assert got == pytest.approx(3.42e3, rel=5e-3)


def test_theoretical_d_margin_clamp_boundary():
    # With eps1 = exp(eps2 - 1), the max(..., 1) factor is exactly 1.
    eps2 = 0.5
    eps1 = math.exp(eps2 - 1.0)
    p = ApproxParams(L=64, k=1, gamma=1.0, eps1=eps1, eps2=eps2)
    want = 32.0 / eps2**2 * (2.0 * math.log(64) + math.log(63) + math.log(2.0))
    assert theoretical_d(p, 64) == pytest.approx(want, rel=1e-12)


def test_theoretical_d_depends_on_L_only_through_log_factor():
    p = small_params()
    for L in (64, 128, 256):
        ratio = theoretical_d(p, 2 * L) / theoretical_d(p, L)
        want = (2 * math.log(2 * L) + math.log(2 * L - 1) + math.log(2)) / (
            2 * math.log(L) + math.log(L - 1) + math.log(2)
        )
        assert ratio == pytest.approx(want, rel=1e-12)


# ------------------------------------------------------------------- d grid


def test_d_grid_default_bounds():
    cfg = small_cfg(d_lower=200, d_upper=600, d_points=30)
    grid = cfg.d_grid()
    assert len(grid) == 30
    assert grid[0] == 200 and grid[-1] == 600
    assert all(d % 2 == 0 for d in grid)
    assert grid == sorted(set(grid))


def test_d_grid_rounds_to_even_and_dedups():
    cfg = small_cfg(d_lower=3, d_upper=9, d_points=7)
    grid = cfg.d_grid()
    assert all(d % 2 == 0 for d in grid)
    assert grid == sorted(set(grid))
    assert grid[0] >= 2


# ---------------------------------------------------------------- find_dmin


def test_find_dmin_full_dimension_always_found():
    params = small_params(L=8)
    A = generate(params, seed=1)
    cfg = small_cfg(params=params, L_grid=[8], d_lower=4, d_upper=16, d_points=4)
    rec = find_dmin(A, cfg, seed=7)
    assert rec.d_min is not None
    assert rec.d_min <= 16  # the grid contains 2L = 16, which is exact


def test_find_dmin_not_found_on_tiny_grid():
    # Observed: widths 2 and 4 never satisfy the conditions at L=32 within
    # the redraw budget; the sentinel comes back with all redraws consumed.
    params = small_params(L=32)
    A = generate(params, seed=0)
    cfg = small_cfg(params=params, L_grid=[32], d_lower=2, d_upper=4, d_points=2)
    rec = find_dmin(A, cfg, seed=99)
    assert rec.d_min is None
    assert rec.redraws_used == 2 * 32  # two grid widths, round(q L) redraws each


def test_find_dmin_skips_widths_beyond_two_L():
    params = small_params(L=8)
    A = generate(params, seed=2)
    cfg = small_cfg(params=params, L_grid=[8], d_lower=18, d_upper=40, d_points=4)
    rec = find_dmin(A, cfg, seed=3)
    assert rec.d_min is None
    assert rec.redraws_used == 0  # every grid width exceeds 2L = 16


def test_find_dmin_deterministic():
    params = small_params(L=16)
    A = generate(params, seed=4)
    cfg = small_cfg(params=params, L_grid=[16], d_lower=4, d_upper=32, d_points=6)
    r1 = find_dmin(A, cfg, seed=42)
    r2 = find_dmin(A, cfg, seed=42)
    assert (r1.d_min, r1.redraws_used) == (r2.d_min, r2.redraws_used)


def test_found_record_replays_to_a_passing_report():
    cfg = small_cfg(L_grid=[16], trials_per_L=2, d_lower=4, d_upper=32, d_points=6)
    records = run_sweep(cfg)
    found = [r for r in records if r.d_min is not None]
    assert found
    for rec in found:
        params = ApproxParams(
            L=rec.L, k=cfg.params.k, gamma=cfg.params.gamma,
            eps1=cfg.params.eps1, eps2=cfg.params.eps2,
        )
        A = generate(params, derive_seed(rec.seed, 0))
        gap = build_log_gap(A, params.eps1, params.eps2)
        factors = svd_factor(gap)
        scale = math.sqrt(2.0 * rec.L / rec.d_min)
        passed = False
        for t in range(int(round(rec.q * rec.L))):
            y = sample_stiefel(rec.L, rec.d_min // 2, derive_seed(rec.seed, 1, rec.d_min, t))
            z = (scale * (factors.left @ y)) @ (scale * (factors.right @ y)).T
            if check_conditions(z, A, params.eps1, params.eps2).passed:
                passed = True
                break
        assert passed


# ---------------------------------------------------------------- run_sweep


def test_run_sweep_record_cardinality():
    cfg = small_cfg(L_grid=[16, 32], trials_per_L=2)
    records = run_sweep(cfg)
    assert len(records) == 4
    assert [(r.L, r.trial) for r in records] == [(16, 0), (16, 1), (32, 0), (32, 1)]
    cfg_single = small_cfg(L_grid=[16], trials_per_L=1)
    assert len(run_sweep(cfg_single)) == 1


def test_run_sweep_theoretical_column_recomputes(tmp_path):
    cfg = small_cfg()
    for rec in run_sweep(cfg):
        params = ApproxParams(
            L=rec.L, k=cfg.params.k, gamma=cfg.params.gamma,
            eps1=cfg.params.eps1, eps2=cfg.params.eps2,
        )
        assert rec.theoretical_d == pytest.approx(theoretical_d(params, rec.L), rel=1e-9)


def test_run_sweep_csv_deterministic_across_thread_counts(tmp_path):
    cfg = small_cfg()
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    old = os.environ.get("SPARSEATTN_THREADS")
    try:
        os.environ["SPARSEATTN_THREADS"] = "1"
        run_sweep(cfg, csv_path=out1)
        os.environ["SPARSEATTN_THREADS"] = "3"
        run_sweep(cfg, csv_path=out2)
    finally:
        if old is None:
            os.environ.pop("SPARSEATTN_THREADS", None)
        else:
            os.environ["SPARSEATTN_THREADS"] = old
    assert out1.read_bytes() == out2.read_bytes()


def test_run_sweep_resume_skips_completed_cells(tmp_path):
    cfg = small_cfg()
    full = tmp_path / "full.csv"
    records = run_sweep(cfg, csv_path=full)
    lines = full.read_text().splitlines()
    assert len(lines) == 1 + len(records)

    partial = tmp_path / "partial.csv"
    partial.write_text("\n".join(lines[:3]) + "\n")
    resumed = run_sweep(cfg, csv_path=partial)
    assert partial.read_bytes() == full.read_bytes()
    assert [(r.L, r.trial, r.d_min) for r in resumed] == [
        (r.L, r.trial, r.d_min) for r in records
    ]

    # Rerunning on the complete file adds nothing.
    before = full.read_bytes()
    run_sweep(cfg, csv_path=full)
    assert full.read_bytes() == before


def test_csv_round_trip_not_found_sentinel():
    rec = SweepRecord(L=16, trial=1, q=0.5, d_min=None,
                      theoretical_d=123.456, redraws_used=8, seed=77)
    row = rec.to_csv_row()
    assert row.split(",")[3] == "-1"
    assert SweepRecord.from_csv_row(row) == rec


# ------------------------------------------------------------------ q sweep


def test_q_sweep_cardinality_and_tagging(tmp_path):
    cfg = small_cfg(L_grid=[16], trials_per_L=2, d_lower=4, d_upper=32, d_points=4)
    records = q_sweep(cfg, [0.5, 1.0, 2.0], csv_path=tmp_path / "q.csv")
    assert len(records) == 6
    assert sorted({r.q for r in records}) == [0.5, 1.0, 2.0]


def test_q_sweep_shares_matrix_draws_across_q():
    cfg = small_cfg(L_grid=[16], trials_per_L=1, d_lower=4, d_upper=32, d_points=4)
    records = q_sweep(cfg, [0.5, 2.0])
    assert records[0].seed == records[1].seed  # same (L, trial) record seed


def test_q_sweep_range_check():
    cfg = small_cfg()
    with pytest.raises(ValueError):
        q_sweep(cfg, [0.05])
    with pytest.raises(ValueError):
        q_sweep(cfg, [5.5])


def test_redraw_budget_rounding():
    assert int(round(0.1 * 512)) == 51


# ------------------------------------------------------------------ log fit


def test_log_fit_exact_synthetic():
    records = [
        SweepRecord(L=L, trial=0, q=1.0, d_min=None, theoretical_d=1.0,
                    redraws_used=0, seed=0)
        for L in (16, 32, 64, 128)
    ]
    for r in records:
        r.d_min = 10 + 3 * math.log(r.L)
    a, b, r2 = log_fit(records)
    assert a == pytest.approx(10.0, abs=1e-9)
    assert b == pytest.approx(3.0, abs=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_log_fit_constant_degenerate_convention():
    records = [
        SweepRecord(L=L, trial=0, q=1.0, d_min=40, theoretical_d=1.0,
                    redraws_used=0, seed=0)
        for L in (16, 32, 64)
    ]
    a, b, r2 = log_fit(records)
    assert b == pytest.approx(0.0, abs=1e-9)
    assert r2 == 1.0


def test_log_fit_requires_two_distinct_L():
    records = [
        SweepRecord(L=16, trial=t, q=1.0, d_min=12, theoretical_d=1.0,
                    redraws_used=0, seed=0)
        for t in range(3)
    ]
    with pytest.raises(ValueError):
        log_fit(records)
    records.append(
        SweepRecord(L=32, trial=0, q=1.0, d_min=None, theoretical_d=1.0,
                    redraws_used=0, seed=0)
    )
    with pytest.raises(ValueError):
        log_fit(records)  # the second L never produced a width


# ------------------------------------------------------------- config checks


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        small_cfg(L_grid=[])
    with pytest.raises(ValueError):
        small_cfg(L_grid=[1, 16])
    with pytest.raises(ValueError):
        small_cfg(d_lower=10, d_upper=4)
    with pytest.raises(ValueError):
        small_cfg(q=0.0)
    with pytest.raises(ValueError):
        small_cfg(trials_per_L=0)
