"""Counter-based seed derivation.

Every random draw in the library is keyed by (user seed, role tag, counter)
through a splitmix64-style mixing chain, so results are reproducible and
independent of thread scheduling: tree b of a forest always sees the same
stream no matter which worker fits it.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_K1 = 0xBF58476D1CE4E5B9
_K2 = 0x94D049BB133111EB

# Role tags keeping unrelated streams apart.
TAG_SAMPLE = 0x53414D50  # subsample / bootstrap index draws
TAG_GROW = 0x47524F57    # per-node feature and threshold choices
TAG_DATA = 0x44415441    # synthetic dataset draws (evaluation module)
TAG_FOLD = 0x464F4C44    # cross-validation fold shuffles


def _finalize(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _K1) & _MASK
    z = ((z ^ (z >> 27)) * _K2) & _MASK
    return z ^ (z >> 31)


def mix_key(*parts: int) -> int:
    """Fold integer parts into one well-mixed 64-bit key."""
    key = _GOLD
    for p in parts:
        key = _finalize((key + _GOLD) ^ (p & _MASK))
    return key


def stream_seeds(key: int, count: int) -> np.ndarray:
    """Derive `count` decorrelated uint64 seeds from one key."""
    ctr = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(key & _MASK) ^ (ctr * np.uint64(_K1))
    z = (z + np.uint64(_GOLD)) & np.uint64(_MASK)
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(_K1)) & np.uint64(_MASK)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(_K2)) & np.uint64(_MASK)
    return z ^ (z >> np.uint64(31))
