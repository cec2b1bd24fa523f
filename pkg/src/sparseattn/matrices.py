"""Target matrices: sparse, right-stochastic, with bounded nonzero counts.

A target matrix has at most ``k`` nonzeros in every row and every column,
the ratio of any two nonzeros within a row confined to ``[1/gamma, gamma]``,
and rows summing to one.  This module provides the parameter bundle, the
matrix container, a seeded random generator (two greedy passes over permuted
positions), an invariant checker, and a plain-text COO file format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
# Relative slack on the within-row ratio check: normalizing a row divides
# every entry by the same float, which can perturb ratios by an ulp.
RATIO_RTOL = 1e-12


class MatrixError(ValueError):
    """Structurally invalid matrix data (bad indices, duplicates, ...)."""


class GenerationError(MatrixError):
    """The greedy sampler left a row without any nonzero entry."""


class CooFormatError(MatrixError):
    """A COO text file violates the documented format."""


@dataclass(frozen=True)
class ApproxParams:
    """Approximation problem parameters.

    L: sequence length (> 1); k: per-row/per-column nonzero bound;
    gamma: within-row variation bound (>= 1); eps1: zero-ratio threshold
    in (0, 1); eps2: nonzero-ratio log tolerance in (0, sqrt(2));
    causal: restrict the target to lower-triangular support.
    """

    L: int
    k: int
    gamma: float
    eps1: float
    eps2: float
    causal: bool = False

    def __post_init__(self):
        if self.L <= 1:
            raise ValueError(f"L must be > 1, got {self.L}")
        if not 1 <= self.k <= self.L:
            raise ValueError(f"k must satisfy 1 <= k <= L, got k={self.k}, L={self.L}")
        if self.gamma < 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not 0.0 < self.eps1 < 1.0:
            raise ValueError(f"eps1 must lie in (0, 1), got {self.eps1}")
        if not 0.0 < self.eps2 < math.sqrt(2.0):
            raise ValueError(f"eps2 must lie in (0, sqrt(2)), got {self.eps2}")


@dataclass
class SparseStochasticMatrix:
    """Sparse right-stochastic matrix in coordinate form.

    Entries are stored as parallel arrays sorted row-major.  ``k`` and
    ``gamma`` record the bounds the matrix is supposed to satisfy (written
    to the file header); whether it actually satisfies them is the business
    of :func:`validate`.
    """

    L: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    causal: bool = False
    k: int = 1
    gamma: float = 1.0

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if not (self.rows.shape == self.cols.shape == self.vals.shape):
            raise MatrixError("rows, cols, vals must have equal length")
        if self.L < 1:
            raise MatrixError(f"L must be >= 1, got {self.L}")
        if self.rows.size:
            if self.rows.min() < 0 or self.rows.max() >= self.L:
                raise MatrixError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.L:
                raise MatrixError("column index out of range")
            if np.any(self.vals <= 0.0):
                raise MatrixError("entries must be positive (zeros are implicit)")
            if not np.all(np.isfinite(self.vals)):
                raise MatrixError("entries must be finite")
        order = np.lexsort((self.cols, self.rows))
        self.rows = self.rows[order]
        self.cols = self.cols[order]
        self.vals = self.vals[order]
        flat = self.rows * self.L + self.cols
        if flat.size and np.any(np.diff(flat) == 0):
            dup = int(np.argmin(np.diff(flat)))
            raise MatrixError(
                f"duplicate coordinate ({int(self.rows[dup])}, {int(self.cols[dup])})"
            )
        if self.causal and np.any(self.cols > self.rows):
            bad = int(np.argmax(self.cols > self.rows))
            raise MatrixError(
                f"causal matrix has entry above the diagonal at "
                f"({int(self.rows[bad])}, {int(self.cols[bad])})"
            )

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.L, self.L))
        dense[self.rows, self.cols] = self.vals
        return dense

    @classmethod
    def from_dense(
        cls,
        dense: np.ndarray,
        causal: bool = False,
        k: int | None = None,
        gamma: float | None = None,
    ) -> "SparseStochasticMatrix":
        """Wrap a dense array, inferring tight k/gamma bounds when omitted."""
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise MatrixError(f"expected a square matrix, got shape {dense.shape}")
        rows, cols = np.nonzero(dense)
        vals = dense[rows, cols]
        if k is None:
            row_counts = np.bincount(rows, minlength=dense.shape[0])
            col_counts = np.bincount(cols, minlength=dense.shape[0])
            k = int(max(1, row_counts.max(initial=0), col_counts.max(initial=0)))
        if gamma is None:
            gamma = 1.0
            for r in range(dense.shape[0]):
                rv = vals[rows == r]
                if rv.size >= 2:
                    gamma = max(gamma, float(rv.max() / rv.min()))
        return cls(dense.shape[0], rows, cols, vals, causal=causal, k=k, gamma=gamma)


@dataclass(frozen=True)
class InvariantViolation:
    kind: str
    row: int | None
    col: int | None
    detail: str


@dataclass
class ValidationReport:
    passed: bool
    violations: list[InvariantViolation] = field(default_factory=list)


def generate(params: ApproxParams, seed: int) -> SparseStochasticMatrix:
    """Draw a random target matrix by two greedy passes over permuted positions.

    Pass 1 walks permuted rows in the outer loop and permuted columns in the
    inner loop; pass 2 walks permuted columns outer, permuted rows inner.  A
    visited position receives a raw value of 1 or ``gamma`` (fair coin flip)
    unless the insertion would push its row or column above ``k`` nonzeros.
    Rows are normalized to sum to one afterwards, which preserves within-row
    ratios.  In causal mode only positions with column <= row are visited.

    The generator stream is consumed in a fixed order: pass-1 row
    permutation, pass-1 column permutation, pass-1 insertion flips (in visit
    order), then pass-2 column permutation, pass-2 row permutation, pass-2
    insertion flips.  Output is therefore a deterministic function of
    ``(params, seed)``.

    Raises GenerationError if some row ends up with no nonzero entry, which
    can happen in causal mode when earlier-visited rows exhaust the few
    columns available to a low-index row.
    """
    L, k, gamma, causal = params.L, params.k, params.gamma, params.causal
    rng = np.random.default_rng(seed)
    row_counts = np.zeros(L, dtype=np.int64)
    col_counts = np.zeros(L, dtype=np.int64)
    raw: dict[tuple[int, int], float] = {}

    def flip_value() -> float:
        return gamma if rng.integers(0, 2) == 1 else 1.0

    # Pass 1: rows outer, columns inner.
    row_order = rng.permutation(L)
    col_order = rng.permutation(L)
    for i in row_order:
        if causal:
            candidates = col_order[col_order <= i]
        else:
            candidates = col_order
        for j in candidates:
            if row_counts[i] >= k:
                break
            if col_counts[j] >= k or (i, j) in raw:
                continue
            raw[(int(i), int(j))] = flip_value()
            row_counts[i] += 1
            col_counts[j] += 1

    # Pass 2: columns outer, rows inner.
    col_order2 = rng.permutation(L)
    row_order2 = rng.permutation(L)
    for j in col_order2:
        if causal:
            candidates = row_order2[row_order2 >= j]
        else:
            candidates = row_order2
        for i in candidates:
            if col_counts[j] >= k:
                break
            if row_counts[i] >= k or (i, j) in raw:
                continue
            raw[(int(i), int(j))] = flip_value()
            row_counts[i] += 1
            col_counts[j] += 1

    if np.any(row_counts == 0):
        empty = int(np.argmax(row_counts == 0))
        raise GenerationError(
            f"row {empty} received no nonzero entry (seed={seed}, causal={causal})"
        )

    rows = np.fromiter((ij[0] for ij in raw), dtype=np.int64, count=len(raw))
    cols = np.fromiter((ij[1] for ij in raw), dtype=np.int64, count=len(raw))
    vals = np.fromiter(raw.values(), dtype=np.float64, count=len(raw))
    row_sums = np.zeros(L)
    np.add.at(row_sums, rows, vals)
    vals = vals / row_sums[rows]
    return SparseStochasticMatrix(
        L, rows, cols, vals, causal=causal, k=k, gamma=gamma
    )


def validate(A: SparseStochasticMatrix, params: ApproxParams) -> ValidationReport:
    """Check every matrix invariant against ``params``; never raises.

    Checks: dimension match, row sums within 1e-12 of one, at most k
    nonzeros per row and per column, within-row ratios in [1/gamma, gamma]
    (with 1e-12 relative slack for normalization roundoff), no empty rows,
    and lower-triangular support when ``params.causal``.
    """
    violations: list[InvariantViolation] = []
    if A.L != params.L:
        violations.append(
            InvariantViolation("dimension", None, None, f"L={A.L} != params.L={params.L}")
        )
        return ValidationReport(False, violations)

    row_sums = np.zeros(A.L)
    np.add.at(row_sums, A.rows, A.vals)
    row_counts = np.bincount(A.rows, minlength=A.L)
    col_counts = np.bincount(A.cols, minlength=A.L)

    for i in np.nonzero(row_counts == 0)[0]:
        violations.append(InvariantViolation("empty_row", int(i), None, "row has no nonzero"))
    bad_sum = np.nonzero((np.abs(row_sums - 1.0) > ROW_SUM_TOL) & (row_counts > 0))[0]
    for i in bad_sum:
        violations.append(
            InvariantViolation("row_sum", int(i), None, f"row sums to {row_sums[i]!r}")
        )
    for i in np.nonzero(row_counts > params.k)[0]:
        violations.append(
            InvariantViolation("row_nnz", int(i), None, f"{row_counts[i]} nonzeros > k={params.k}")
        )
    for j in np.nonzero(col_counts > params.k)[0]:
        violations.append(
            InvariantViolation("col_nnz", None, int(j), f"{col_counts[j]} nonzeros > k={params.k}")
        )

    ratio_cap = params.gamma * (1.0 + RATIO_RTOL)
    boundaries = np.concatenate(([0], np.nonzero(np.diff(A.rows))[0] + 1, [A.nnz]))
    for s, e in zip(boundaries[:-1], boundaries[1:]):
        if e - s < 2:
            continue
        seg = A.vals[s:e]
        if seg.max() / seg.min() > ratio_cap:
            i = int(A.rows[s])
            violations.append(
                InvariantViolation(
                    "variation", i, None,
                    f"ratio {seg.max() / seg.min()!r} exceeds gamma={params.gamma}",
                )
            )

    if params.causal:
        above = np.nonzero(A.cols > A.rows)[0]
        for t in above:
            violations.append(
                InvariantViolation(
                    "causal", int(A.rows[t]), int(A.cols[t]), "entry above the diagonal"
                )
            )

    return ValidationReport(not violations, violations)


def min_nonzero_rows(A: SparseStochasticMatrix) -> np.ndarray:
    """Per-row minimum over the nonzero entries (length-L vector)."""
    out = np.full(A.L, np.inf)
    np.minimum.at(out, A.rows, A.vals)
    if np.any(np.isinf(out)):
        empty = int(np.argmax(np.isinf(out)))
        raise MatrixError(f"row {empty} has no nonzero entry")
    return out


def write_coo(A: SparseStochasticMatrix, path) -> None:
    """Write the COO text format: header ``L k gamma causal``, then
    ``i j value`` lines sorted row-major, 17 significant digits, LF endings."""
    lines = [f"{A.L} {A.k} {A.gamma:.17g} {1 if A.causal else 0}"]
    for i, j, v in zip(A.rows, A.cols, A.vals):
        lines.append(f"{int(i)} {int(j)} {v:.17g}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_coo(path) -> SparseStochasticMatrix:
    """Parse the COO text format written by :func:`write_coo`.

    Raises CooFormatError on a malformed header, out-of-range indices,
    duplicate coordinates, or an above-diagonal entry under a causal header.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = [ln.strip() for ln in fh]
    lines = [ln for ln in raw_lines if ln]
    if not lines:
        raise CooFormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4:
        raise CooFormatError(f"{path}: header must be 'L k gamma causal', got {lines[0]!r}")
    try:
        L, k = int(head[0]), int(head[1])
        gamma = float(head[2])
        causal_flag = int(head[3])
    except ValueError as exc:
        raise CooFormatError(f"{path}: unparsable header {lines[0]!r}") from exc
    if causal_flag not in (0, 1):
        raise CooFormatError(f"{path}: causal flag must be 0 or 1, got {head[3]}")
    if L < 1 or k < 1:
        raise CooFormatError(f"{path}: header requires L >= 1 and k >= 1")

    rows, cols, vals = [], [], []
    for n, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 3:
            raise CooFormatError(f"{path}:{n}: expected 'i j value', got {ln!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise CooFormatError(f"{path}:{n}: unparsable entry {ln!r}") from exc
        rows.append(i)
        cols.append(j)
        vals.append(v)
    try:
        return SparseStochasticMatrix(
            L, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
            np.array(vals), causal=bool(causal_flag), k=k, gamma=gamma,
        )
    except MatrixError as exc:
        raise CooFormatError(f"{path}: {exc}") from exc
