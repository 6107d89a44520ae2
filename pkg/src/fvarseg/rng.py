"""Deterministic random-stream derivation.

Every stochastic routine draws from a Philox4x64-10 counter-based
generator whose 128-bit key is derived by hashing a master seed together
with a slash-separated label path, e.g. ``master -> "chi/loadings"`` or
``master -> "calibrate/cell3/rep17"``.  The scheme is documented so that
streams can be reproduced outside this package: the key is the first 16
bytes (little endian) of ``SHA-256(f"{master_seed}/{label_path}")``.

Derived streams are independent of worker scheduling, so parallel runs
with any worker count reproduce serial results bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_key(master_seed: int, *path: object) -> int:
    """Return the 128-bit Philox key for a master seed and label path."""
    label = "/".join(str(part) for part in path)
    digest = hashlib.sha256(f"{int(master_seed)}/{label}".encode()).digest()
    return int.from_bytes(digest[:16], "little")


def derive_rng(master_seed: int, *path: object) -> np.random.Generator:
    """Return an independent Generator for the given seed and label path."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, *path)))
