"""Constructive pipeline from a target matrix to self-attention inputs.

The route: shift the log of the target into a nonnegative "log-gap" matrix
whose elementwise exponential is a row-rescaled copy of the target; factor
it with a full SVD; compress both factors with a shared Haar-orthogonal
projection; and lay the compressed factors out as token embeddings together
with fixed query/key weight matrices whose product recovers the compressed
logits exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrices import SparseStochasticMatrix, min_nonzero_rows


class FactorizationError(RuntimeError):
    """SVD backend failed to converge."""


@dataclass
class LogGapMatrix:
    """Dense nonnegative matrix of log-domain gaps.

    ``values[i, j]`` is 0 where the target is 0, and otherwise
    ``log A[i, j] - log(row_min_nonzero[i]) - log(eps1) + eps2``, which is
    strictly positive and at most ``log(gamma / eps1) + eps2`` for a
    gamma-variation-bounded target.
    """

    L: int
    values: np.ndarray
    row_min_nonzero: np.ndarray
    eps1: float
    eps2: float


@dataclass
class Factorization:
    """SVD products: ``left @ right.T`` reconstructs the log-gap matrix.

    ``left`` is the left singular vectors scaled by the singular values,
    ``right`` the orthogonal right factor, ``singular_values`` descending.
    """

    left: np.ndarray
    right: np.ndarray
    singular_values: np.ndarray


@dataclass
class ProjectionPair:
    """Both factors compressed to L x (d/2) through one orthogonal sample."""

    left: np.ndarray
    right: np.ndarray
    d: int


@dataclass
class AttentionInputs:
    """Token embeddings plus fixed query/key weights.

    ``x`` is ``[left | right | 0]`` (L x d_hid), ``w_query`` selects the
    first d columns, and ``w_key`` routes the right block into the first
    d/2 output columns, so the logit product collapses to
    ``left @ right.T``.
    """

    x: np.ndarray
    w_query: np.ndarray
    w_key: np.ndarray
    d: int
    d_hid: int

    def write_text(self, path) -> None:
        """Debug dump: header ``L d d_hid``, then the three matrices row by
        row (17 significant digits, same float format as the COO files)."""
        blocks = [("x", self.x), ("w_query", self.w_query), ("w_key", self.w_key)]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{self.x.shape[0]} {self.d} {self.d_hid}\n")
            for name, matrix in blocks:
                fh.write(name + "\n")
                for row in matrix:
                    fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def read_text(cls, path) -> "AttentionInputs":
        with open(path, "r", encoding="utf-8") as fh:
            tokens = fh.read().split("\n")
        L, d, d_hid = (int(t) for t in tokens[0].split())
        pos = 1
        matrices = {}
        for name, rows in (("x", L), ("w_query", d_hid), ("w_key", d_hid)):
            if tokens[pos] != name:
                raise ValueError(f"{path}: expected section {name!r}, got {tokens[pos]!r}")
            pos += 1
            matrices[name] = np.array(
                [[float(v) for v in tokens[pos + r].split()] for r in range(rows)]
            )
            pos += rows
        return cls(
            x=matrices["x"],
            w_query=matrices["w_query"],
            w_key=matrices["w_key"],
            d=d,
            d_hid=d_hid,
        )


def build_log_gap(A: SparseStochasticMatrix, eps1: float, eps2: float) -> LogGapMatrix:
    """Shifted log transform of the target; zeros map to exact 0.0."""
    if not 0.0 < eps1 < 1.0:
        raise ValueError(f"eps1 must lie in (0, 1), got {eps1}")
    if eps2 <= 0.0:
        raise ValueError(f"eps2 must be positive, got {eps2}")
    row_min = min_nonzero_rows(A)
    values = np.zeros((A.L, A.L))
    values[A.rows, A.cols] = (
        np.log(A.vals) - np.log(row_min[A.rows]) - math.log(eps1) + eps2
    )
    return LogGapMatrix(A.L, values, row_min, eps1, eps2)


def reconstruct_target(gap: LogGapMatrix) -> np.ndarray:
    """Invert the log-gap transform into an approximation of the target.

    Equals the target (up to roundoff) at every nonzero position; at zero
    positions it leaves ``eps1 * exp(-eps2) * row_min_nonzero[i] <= eps1``.
    """
    scale = gap.eps1 * math.exp(-gap.eps2)
    return scale * gap.row_min_nonzero[:, None] * np.exp(gap.values)


def svd_factor(gap: LogGapMatrix) -> Factorization:
    """Full dense SVD of the log-gap matrix.

    Returns the scaled left factor (U * sigma), the right factor V, and the
    singular values.  ``left @ right.T`` reproduces the input to roundoff.
    """
    B = gap.values
    if not np.all(np.isfinite(B)):
        raise FactorizationError("log-gap matrix has non-finite entries")
    try:
        u, sigma, vt = np.linalg.svd(B, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"SVD did not converge on a {B.shape[0]}x{B.shape[1]} matrix "
            f"(max |entry| = {np.abs(B).max():.3e}): {exc}"
        ) from exc
    return Factorization(left=u * sigma, right=vt.T, singular_values=sigma)


def sample_stiefel(L: int, half_d: int, seed: int) -> np.ndarray:
    """Haar-distributed L x half_d matrix with orthonormal columns.

    QR of a standard Gaussian matrix, with each column of Q multiplied by
    the sign of the matching diagonal entry of R (sign 0 counts as +1);
    without the sign fix the QR output is not Haar-distributed.
    """
    if not 1 <= half_d <= L:
        raise ValueError(f"need 1 <= half_d <= L, got half_d={half_d}, L={L}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((L, half_d))
    q, r = np.linalg.qr(g, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def compress(factors: Factorization, y: np.ndarray, d: int) -> ProjectionPair:
    """Project both factors through the shared sample, scaled by sqrt(2L/d).

    The product ``left @ right.T`` of the result is an unbiased estimate of
    the factored matrix.
    """
    if d % 2 != 0 or d <= 0:
        raise ValueError(f"d must be a positive even integer, got {d}")
    L = factors.left.shape[0]
    if y.shape != (L, d // 2):
        raise ValueError(f"expected sample of shape {(L, d // 2)}, got {y.shape}")
    scale = math.sqrt(2.0 * L / d)
    return ProjectionPair(
        left=scale * (factors.left @ y),
        right=scale * (factors.right @ y),
        d=d,
    )


def assemble(pair: ProjectionPair, d_hid: int | None = None) -> AttentionInputs:
    """Lay out embeddings and fixed weights realizing the compressed logits.

    Requires d <= d_hid <= 2L; the default d_hid = d uses no zero padding.
    """
    d = pair.d
    L = pair.left.shape[0]
    if d_hid is None:
        d_hid = d
    if not d <= d_hid <= 2 * L:
        raise ValueError(f"need d <= d_hid <= 2L, got d={d}, d_hid={d_hid}, L={L}")
    half = d // 2
    x = np.zeros((L, d_hid))
    x[:, :half] = pair.left
    x[:, half:d] = pair.right

    w_query = np.zeros((d_hid, d))
    w_query[:d, :] = np.eye(d)

    # Block matrix with the identity in the upper-right quarter: the key
    # projection swaps the right block of x into the first d/2 columns.
    omega = np.zeros((d, d))
    omega[:half, half:] = np.eye(half)
    w_key = np.zeros((d_hid, d))
    w_key[:d, :] = omega.T
    return AttentionInputs(x=x, w_query=w_query, w_key=w_key, d=d, d_hid=d_hid)
