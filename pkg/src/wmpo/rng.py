"""Deterministic random stream derivation.

A single master seed fans out into per-stage / per-rollout generators. Child
seeds are derived by hashing the path components with SHA-256 so the mapping
is stable across processes and Python versions (the builtin ``hash`` is
salted and must not be used here).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master_seed: int, *path: int | str) -> int:
    """Map (master_seed, path...) to a 64-bit child seed, collision-resistant."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


def make_rng(master_seed: int, *path: int | str) -> np.random.Generator:
    """Independent generator for a named sub-stream of the master seed."""
    return np.random.default_rng(derive_seed(master_seed, *path))
