"""Generator, validator, and COO file format tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparseattn.matrices import (
    ApproxParams,
    CooFormatError,
    GenerationError,
    MatrixError,
    SparseStochasticMatrix,
    generate,
    min_nonzero_rows,
    read_coo,
    validate,
    write_coo,
)


def identity_matrix(L):
    return SparseStochasticMatrix(
        L, np.arange(L), np.arange(L), np.ones(L), k=1, gamma=1.0
    )


# ---------------------------------------------------------------- parameters


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(L=1, k=1, gamma=1.0, eps1=0.5, eps2=0.5),
        dict(L=4, k=0, gamma=1.0, eps1=0.5, eps2=0.5),
        dict(L=4, k=5, gamma=1.0, eps1=0.5, eps2=0.5),
        dict(L=4, k=1, gamma=0.5, eps1=0.5, eps2=0.5),
        dict(L=4, k=1, gamma=1.0, eps1=0.0, eps2=0.5),
        dict(L=4, k=1, gamma=1.0, eps1=1.0, eps2=0.5),
        dict(L=4, k=1, gamma=1.0, eps1=0.5, eps2=0.0),
        dict(L=4, k=1, gamma=1.0, eps1=0.5, eps2=1.4143),
    ],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        ApproxParams(**kwargs)


def test_eps2_boundary_is_sqrt_two():
    ApproxParams(L=4, k=1, gamma=1.0, eps1=0.5, eps2=1.41)
    with pytest.raises(ValueError):
        ApproxParams(L=4, k=1, gamma=1.0, eps1=0.5, eps2=math.sqrt(2.0))


# ----------------------------------------------------------------- generator


@pytest.mark.parametrize("seed", [0, 1, 17])
def test_generate_k1_rows_are_exactly_one(seed):
    # A single entry divided by itself is exactly 1.0.
    params = ApproxParams(L=4, k=1, gamma=3.0, eps1=0.5, eps2=0.5)
    A = generate(params, seed)
    assert A.nnz == 4
    counts = np.bincount(A.rows, minlength=4)
    assert np.all(counts == 1)
    assert np.all(A.vals == 1.0)
    assert np.all(np.bincount(A.cols, minlength=4) <= 1)


def test_generate_bounded_instance():
    params = ApproxParams(L=512, k=2, gamma=2.0, eps1=0.5, eps2=0.5)
    A = generate(params, seed=7)
    sums = np.zeros(512)
    np.add.at(sums, A.rows, A.vals)
    np.testing.assert_allclose(sums, 1.0, rtol=0, atol=1e-12)
    assert np.bincount(A.rows, minlength=512).max() <= 2
    assert np.bincount(A.cols, minlength=512).max() <= 2
    # Raw values are 1 or gamma, so within-row ratios land on {1/2, 1, 2}.
    for r in range(512):
        rv = A.vals[A.rows == r]
        if rv.size == 2:
            ratio = rv.max() / rv.min()
            assert math.isclose(ratio, 1.0, rel_tol=1e-12) or math.isclose(
                ratio, 2.0, rel_tol=1e-12
            )


def test_generate_causal_row_zero_pinned_to_diagonal():
    # Row 0 has a single admissible position, so every successful draw puts
    # its entry at (0, 0) with value exactly 1.
    params = ApproxParams(L=3, k=1, gamma=1.0, eps1=0.5, eps2=0.5, causal=True)
    successes = 0
    for seed in range(24):
        try:
            A = generate(params, seed)
        except GenerationError:
            continue
        successes += 1
        assert A.rows[0] == 0 and A.cols[0] == 0 and A.vals[0] == 1.0
        assert np.all(A.cols <= A.rows)
    assert successes >= 1


def test_generate_causal_dead_end_raises():
    # With k=1, some visit orders let another row claim column 0 before row
    # 0 is reached; those seeds must fail loudly rather than emit a matrix
    # with an empty row.  At L=3 both outcomes occur within a few seeds.
    params = ApproxParams(L=3, k=1, gamma=1.0, eps1=0.5, eps2=0.5, causal=True)
    outcomes = set()
    for seed in range(24):
        try:
            generate(params, seed)
            outcomes.add("ok")
        except GenerationError:
            outcomes.add("fail")
    assert outcomes == {"ok", "fail"}


def test_generate_deterministic():
    params = ApproxParams(L=32, k=2, gamma=2.0, eps1=0.5, eps2=0.5)
    A1 = generate(params, seed=5)
    A2 = generate(params, seed=5)
    assert np.array_equal(A1.rows, A2.rows)
    assert np.array_equal(A1.cols, A2.cols)
    assert np.array_equal(A1.vals, A2.vals)
    A3 = generate(params, seed=6)
    assert not (
        np.array_equal(A1.rows, A3.rows)
        and np.array_equal(A1.cols, A3.cols)
        and np.array_equal(A1.vals, A3.vals)
    )


@settings(max_examples=60, deadline=None)
@given(
    L=st.integers(2, 24),
    k=st.integers(1, 3),
    gamma=st.sampled_from([1.0, 1.5, 2.0, 5.0]),
    causal=st.booleans(),
    seed=st.integers(0, 2**32 - 1),
)
def test_generate_output_always_validates(L, k, gamma, causal, seed):
    k = min(k, L)
    params = ApproxParams(L=L, k=k, gamma=gamma, eps1=0.5, eps2=0.5, causal=causal)
    try:
        A = generate(params, seed)
    except GenerationError:
        assert causal  # non-causal generation cannot dead-end
        return
    report = validate(A, params)
    assert report.passed, [v.detail for v in report.violations]


# ----------------------------------------------------------------- validator


def test_validate_identity_passes():
    params = ApproxParams(L=4, k=1, gamma=1.0, eps1=0.5, eps2=0.5)
    assert validate(identity_matrix(4), params).passed


def test_validate_variation_violation():
    # 0.7 / 0.3 = 2.333... > gamma = 2.
    A = SparseStochasticMatrix(3, [0, 0, 1, 2], [0, 1, 1, 2], [0.7, 0.3, 1.0, 1.0])
    params = ApproxParams(L=3, k=2, gamma=2.0, eps1=0.5, eps2=0.5)
    report = validate(A, params)
    assert not report.passed
    assert any(v.kind == "variation" and v.row == 0 for v in report.violations)
    assert 0.7 / 0.3 > 2.0


def test_validate_stochasticity_violation():
    A = SparseStochasticMatrix(2, [0, 0, 1], [0, 1, 1], [0.6, 0.3, 1.0])
    params = ApproxParams(L=2, k=2, gamma=2.0, eps1=0.5, eps2=0.5)
    report = validate(A, params)
    assert not report.passed
    assert any(v.kind == "row_sum" and v.row == 0 for v in report.violations)


def test_validate_reports_empty_row_and_col_bound():
    A = SparseStochasticMatrix(3, [0, 1, 2], [0, 0, 0], [1.0, 1.0, 1.0])
    params = ApproxParams(L=3, k=1, gamma=1.0, eps1=0.5, eps2=0.5)
    report = validate(A, params)
    assert any(v.kind == "col_nnz" for v in report.violations)


def test_validate_never_mutates():
    A = SparseStochasticMatrix(2, [0, 1], [0, 1], [1.0, 1.0])
    before = (A.rows.copy(), A.cols.copy(), A.vals.copy())
    validate(A, ApproxParams(L=2, k=1, gamma=1.0, eps1=0.5, eps2=0.5))
    assert np.array_equal(A.rows, before[0])
    assert np.array_equal(A.cols, before[1])
    assert np.array_equal(A.vals, before[2])


# ------------------------------------------------------------- row minima


def test_min_nonzero_identity():
    np.testing.assert_array_equal(min_nonzero_rows(identity_matrix(5)), np.ones(5))


def test_min_nonzero_simple_row():
    A = SparseStochasticMatrix(2, [0, 0, 1], [0, 1, 1], [2 / 3, 1 / 3, 1.0])
    np.testing.assert_allclose(min_nonzero_rows(A), [1 / 3, 1.0], rtol=1e-15)


def test_min_nonzero_range_for_generated():
    # Normalized row patterns for k=2, gamma=2 are {1}, {1,1}, {1,2}, {2,2};
    # their minima are 1, 1/2, 1/3, 1/2, so every row minimum lies in
    # [1/(1+gamma), 1] = [1/3, 1].
    params = ApproxParams(L=512, k=2, gamma=2.0, eps1=0.5, eps2=0.5)
    A = generate(params, seed=3)
    mn = min_nonzero_rows(A)
    assert np.all(mn >= 1 / 3 - 1e-15)
    assert np.all(mn <= 1.0)


def test_min_nonzero_rejects_empty_row():
    A = SparseStochasticMatrix(3, [0, 2], [0, 2], [1.0, 1.0])
    with pytest.raises(MatrixError, match="row 1"):
        min_nonzero_rows(A)


# ------------------------------------------------------------------ file IO


def test_coo_round_trip_exact(tmp_path):
    params = ApproxParams(L=16, k=2, gamma=2.0, eps1=0.5, eps2=0.5)
    A = generate(params, seed=11)
    path = tmp_path / "a.coo"
    write_coo(A, path)
    B = read_coo(path)
    assert B.L == A.L and B.k == A.k and B.gamma == A.gamma and B.causal == A.causal
    assert np.array_equal(A.rows, B.rows)
    assert np.array_equal(A.cols, B.cols)
    assert np.array_equal(A.vals, B.vals)  # bitwise, via 17 significant digits


def test_coo_duplicate_coordinate_rejected(tmp_path):
    path = tmp_path / "dup.coo"
    path.write_text("2 1 1 0\n0 0 0.5\n0 0 0.5\n1 1 1.0\n")
    with pytest.raises(CooFormatError, match="duplicate"):
        read_coo(path)


def test_coo_causal_violation_rejected(tmp_path):
    path = tmp_path / "causal.coo"
    path.write_text("2 1 1 1\n0 1 1.0\n1 1 1.0\n")
    with pytest.raises(CooFormatError, match="diagonal"):
        read_coo(path)


@pytest.mark.parametrize(
    "content",
    ["", "2 1 1\n", "2 1 1 2\n0 0 1.0\n", "x 1 1 0\n", "2 1 1 0\n0 0\n", "2 1 1 0\n0 5 1.0\n"],
)
def test_coo_malformed_rejected(tmp_path, content):
    path = tmp_path / "bad.coo"
    path.write_text(content)
    with pytest.raises(CooFormatError):
        read_coo(path)


def test_coo_line_endings_are_lf(tmp_path):
    path = tmp_path / "a.coo"
    write_coo(identity_matrix(3), path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")
