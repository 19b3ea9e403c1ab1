"""Counter-based uniforms keyed by (seed, replication, stream, lattice coordinate).

Every draw is a pure function of its key, so overlapping windows read the
same noise value and results do not depend on evaluation order or threads.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# stream ids
NOISE = 0
SELECTION = 1


def _mix(h):
    # splitmix64 finalizer, in-place on a uint64 array
    h ^= h >> np.uint64(30)
    h *= _M1
    h ^= h >> np.uint64(27)
    h *= _M2
    h ^= h >> np.uint64(31)
    return h


def _mix_int(x: int) -> int:
    x &= _MASK
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return x


def stream_key(seed: int, replication: int, stream: int = NOISE) -> int:
    """64-bit key for one (seed, replication, stream) triple."""
    k = _mix_int(int(seed) + 0x9E3779B97F4A7C15)
    k = _mix_int(k ^ (int(replication) * 0xD1B54A32D192ED03))
    k = _mix_int(k ^ (int(stream) * 0x8CB92BA72F3D8DD7 + 1))
    return k


def hash_coords(key: int, coords) -> np.ndarray:
    """Hash integer coordinates (n, d) under ``key`` to uint64 values."""
    c = np.ascontiguousarray(coords, dtype=np.int64)
    if c.ndim == 1:
        c = c[None, :]
    h = np.full(c.shape[0], key & _MASK, dtype=np.uint64)
    cu = c.view(np.uint64)
    for ell in range(c.shape[1]):
        h ^= cu[:, ell]
        h += _GOLDEN
        _mix(h)
    return _mix(h)


def uniforms(seed: int, replication: int, coords, stream: int = NOISE) -> np.ndarray:
    """Uniform(0, 1) variates, open at both ends, one per coordinate row."""
    h = hash_coords(stream_key(seed, replication, stream), coords)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
