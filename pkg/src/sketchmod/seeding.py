"""Keyed RNG streams.

Every random stream is derived from a master seed plus string/int keys, so
adding or reordering work items never perturbs the streams of other items.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *keys: object) -> int:
    """Hash ``(seed, *keys)`` into a 128-bit integer seed."""
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for key in keys:
        h.update(b"\x1f")
        h.update(str(key).encode())
    return int.from_bytes(h.digest()[:16], "little")


def make_rng(seed, *keys: object) -> np.random.Generator:
    """Return a Generator for ``seed`` (optionally keyed).

    A ``Generator`` passed in is returned unchanged when no keys are given.
    """
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("keys cannot be applied to an existing Generator")
        return seed
    if keys:
        return np.random.default_rng(derive_seed(seed, *keys))
    return np.random.default_rng(seed)
