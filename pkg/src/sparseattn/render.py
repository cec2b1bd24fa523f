"""Attention-map rendering: max-pooled, clipped, ASCII PGM output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import SparseStochasticMatrix


@dataclass
class RenderSpec:
    """Pooling window (must divide L), clip level in (0, 1], output path."""

    pool: int = 8
    clip: float = 0.05
    out_path: str = "attention.pgm"

    def __post_init__(self):
        if self.pool < 1:
            raise ValueError(f"pool must be >= 1, got {self.pool}")
        if not 0.0 < self.clip <= 1.0:
            raise ValueError(f"clip must lie in (0, 1], got {self.clip}")


def pooled_pixels(matrix, pool: int, clip: float) -> np.ndarray:
    """Max-pool into (L/pool)^2 blocks, clip, and quantize to 0..255."""
    if isinstance(matrix, SparseStochasticMatrix):
        matrix = matrix.to_dense()
    matrix = np.asarray(matrix, dtype=np.float64)
    L = matrix.shape[0]
    if matrix.shape != (L, L):
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if L % pool != 0:
        raise ValueError(f"pool={pool} does not divide L={L}")
    side = L // pool
    blocks = matrix.reshape(side, pool, side, pool).max(axis=(1, 3))
    return np.rint(255.0 * np.minimum(blocks, clip) / clip).astype(np.int64)


def render_pgm(matrix, spec: RenderSpec) -> None:
    """Write the pooled map as plain-text PGM (P2, maxval 255)."""
    pixels = pooled_pixels(matrix, spec.pool, spec.clip)
    side = pixels.shape[0]
    lines = ["P2", f"{side} {side}", "255"]
    for row in pixels:
        # Keep lines within the 70-character limit of the plain format.
        line: list[str] = []
        width = 0
        for v in row:
            tok = str(int(v))
            if width and width + 1 + len(tok) > 70:
                lines.append(" ".join(line))
                line, width = [], 0
            line.append(tok)
            width += len(tok) + (1 if width else 0)
        if line:
            lines.append(" ".join(line))
    with open(spec.out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_pgm(path) -> np.ndarray:
    """Parse a plain-text PGM (P2) back into an integer array."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = []
        for ln in fh:
            ln = ln.split("#", 1)[0]
            tokens.extend(ln.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM (P2) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pixels = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if pixels.size != width * height:
        raise ValueError(f"{path}: expected {width * height} pixels, got {pixels.size}")
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    return pixels.reshape(height, width)
