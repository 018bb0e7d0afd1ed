"""Counter-based random numbers: Philox4x64-10 evaluated on arrays of counters.

Each 256-bit counter ``(c0, c1, c2, c3)`` and 128-bit key map to four 64-bit
words.  The key comes from the master seed; the counter addresses a draw
directly, so particle ``i`` of replicate ``r`` reads the same numbers
whether it is generated alone, in a block, or on another worker.

The block function matches ``numpy.random.Philox`` bit for bit (see the
test suite).
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _LO32) + (p2 & _LO32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    return hi, a * b


def philox4x64(counter: np.ndarray, key) -> np.ndarray:
    """Philox4x64-10 block function.

    ``counter`` has shape ``(..., 4)`` (uint64), ``key`` two uint64 words.
    Returns an array of the same shape holding the output words.
    """
    ctr = np.asarray(counter, dtype=np.uint64)
    x0, x1, x2, x3 = (ctr[..., i].copy() for i in range(4))
    k0, k1 = np.uint64(key[0]), np.uint64(key[1])
    with np.errstate(over="ignore"):
        for r in range(10):
            if r:
                k0 = np.uint64(k0 + _W0)
                k1 = np.uint64(k1 + _W1)
            hi0, lo0 = _mulhilo(_M0, x0)
            hi1, lo1 = _mulhilo(_M1, x2)
            x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
    return np.stack([x0, x1, x2, x3], axis=-1)


def key_from_seed(seed: int) -> np.ndarray:
    """128-bit Philox key derived from a master seed."""
    return np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint64)


class CounterStream:
    """Addressable stream of uniforms keyed by ``(seed, tag)``.

    Word ``j`` of replicate ``r`` lives at counter ``(j // 4, 0, r, tag)``,
    lane ``j % 4``.  Callers lay out particle draws contiguously, so draw
    ``m`` of particle ``i`` with ``w`` draws per particle is word ``i*w + m``.
    """

    def __init__(self, seed: int, tag: int = 0):
        self.seed = int(seed)
        self.tag = int(tag)
        self.key = key_from_seed(self.seed)

    def words(self, replicates, n_words: int) -> np.ndarray:
        """uint64 array of shape ``(len(replicates), n_words)``."""
        reps = np.asarray(replicates, dtype=np.uint64).reshape(-1)
        n_blocks = -(-int(n_words) // 4)
        ctr = np.zeros((reps.size, n_blocks, 4), dtype=np.uint64)
        ctr[..., 0] = np.arange(n_blocks, dtype=np.uint64)[None, :]
        ctr[..., 2] = reps[:, None]
        ctr[..., 3] = np.uint64(self.tag)
        out = philox4x64(ctr, self.key).reshape(reps.size, n_blocks * 4)
        return out[:, :n_words]

    def uniforms(self, replicates, n_words: int) -> np.ndarray:
        """Uniforms in the open interval (0, 1), 53 bits each."""
        w = self.words(replicates, n_words)
        return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normals(self, replicates, n_words: int) -> np.ndarray:
        """Standard normals by exact inversion, one word per draw."""
        return ndtri(self.uniforms(replicates, n_words))
