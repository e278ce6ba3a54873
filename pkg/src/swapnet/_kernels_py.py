"""Pure numpy implementation of the sampling kernel.

Produces exactly the same counts as the compiled ``_kernels`` module.
The random stream is counter-based SplitMix64: draw ``i`` of stream ``key``
is ``mix64(key + (i + 1) * GOLDEN_GAMMA)``, and the uniform is its top 53
bits scaled by 2**-53.
"""
import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_CHUNK = 1 << 16


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (mod 2**64)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int) -> int:
    return mix64(seed)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, start: int, n: int) -> np.ndarray:
    """Draws ``start .. start+n-1`` of the stream for ``seed`` as floats in [0, 1)."""
    key = np.uint64(stream_key(seed))
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64_array(key + idx * np.uint64(GOLDEN_GAMMA))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def count_below(p: float, shots: int, seed: int) -> int:
    """Number of the first ``shots`` uniforms of stream ``seed`` that fall below ``p``."""
    total = 0
    for start in range(0, shots, _CHUNK):
        n = min(_CHUNK, shots - start)
        total += int(np.count_nonzero(uniforms(seed, start, n) < p))
    return total


def count_below_batch(p: float, shots: int, seeds) -> np.ndarray:
    return np.array([count_below(p, shots, int(s)) for s in seeds], dtype=np.int64)
