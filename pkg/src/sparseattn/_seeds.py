"""Stable seed derivation for reproducible nested experiments.

Every stochastic stage (matrix draw, per-candidate-width projection redraw,
per-sample projection in the concentration benchmark) gets its own seed,
derived by hashing the parent seed together with the integers identifying
the stage.  blake2b keeps the derivation stable across platforms and Python
versions, unlike ``hash()``.
"""

from __future__ import annotations

import hashlib
import struct


def derive_seed(parent: int, *parts: int) -> int:
    """Derive a 64-bit child seed from a parent seed and integer labels.

    Distinct ``(parent, parts)`` tuples map to independent-looking seeds;
    the same tuple always maps to the same seed.
    """
    mask = (1 << 64) - 1
    payload = struct.pack(
        f"<{1 + len(parts)}Q", int(parent) & mask, *(int(p) & mask for p in parts)
    )
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")
