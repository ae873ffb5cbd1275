"""Reproducible random substreams.

Every simulator takes an explicit seed; replication harnesses derive
independent child seeds from a master seed and a scenario key.  Keys are
mixed into a ``numpy.random.SeedSequence`` entropy pool, whose hashing
guarantees well-separated streams for distinct key tuples.  String keys are
made stable across processes by hashing their bytes with BLAKE2 (the builtin
``hash`` is salted per interpreter and would break reproducibility).
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    if isinstance(key, (float, np.floating)):
        # hash the IEEE bit pattern so e.g. 0.4 keys are exact
        return int(np.float64(key).view(np.uint64))
    if isinstance(key, str):
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"cannot derive a seed key from {type(key).__name__}")


def seed_sequence(master_seed: int, *keys) -> np.random.SeedSequence:
    entropy = [_key_to_int(master_seed)] + [_key_to_int(k) for k in keys]
    return np.random.SeedSequence(entropy)


def substream(master_seed: int, *keys) -> np.random.Generator:
    """Generator for the substream identified by ``(master_seed, *keys)``."""
    return np.random.default_rng(seed_sequence(master_seed, *keys))


def child_seed(master_seed: int, *keys) -> int:
    """A 64-bit seed derived from ``(master_seed, *keys)``, for config fields."""
    state = seed_sequence(master_seed, *keys).generate_state(1, np.uint64)
    return int(state[0])
