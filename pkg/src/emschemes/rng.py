"""Counter-based random streams (Philox4x32-10).

Each stream is keyed by (seed, stream_id) and produces a sequence that is a
pure function of the key and the draw index, so per-path streams can be
created concurrently without shared state.  ``StreamBatch`` evaluates many
streams at once with vectorized numpy arithmetic; ``RngStream`` is the
single-stream view used by the scalar sampler API.

Uniform variates carry 32 bits of resolution mapped to (0, 1], so logs of
uniforms are always finite.  Normal variates use the Box-Muller transform.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_INV32 = 2.0**-32
_MASK64 = 0xFFFFFFFFFFFFFFFF


def philox4x32(c0, c1, c2, c3, k0, k1, rounds: int = 10):
    """One keyed block cipher evaluation; all arguments uint32 arrays."""
    # Key schedule in python ints to avoid uint32 scalar overflow warnings.
    key = [
        (
            np.uint32((int(k0) + r * 0x9E3779B9) & 0xFFFFFFFF),
            np.uint32((int(k1) + r * 0xBB67AE85) & 0xFFFFFFFF),
        )
        for r in range(rounds)
    ]
    for rk0, rk1 in key:
        p0 = _M0 * c0.astype(np.uint64)
        p1 = _M1 * c2.astype(np.uint64)
        hi0 = (p0 >> _SHIFT32).astype(np.uint32)
        lo0 = (p0 & _MASK32).astype(np.uint32)
        hi1 = (p1 >> _SHIFT32).astype(np.uint32)
        lo1 = (p1 & _MASK32).astype(np.uint32)
        c0 = hi1 ^ c1 ^ rk0
        c1 = lo1
        c2 = hi0 ^ c3 ^ rk1
        c3 = lo0
    return c0, c1, c2, c3


class StreamBatch:
    """A family of independent streams, one per entry of ``stream_ids``.

    Draw methods accept an optional ``idx`` (integer index array) selecting
    the subset of streams that consume randomness; counters of unselected
    streams do not advance.  Every draw of k uniforms consumes ceil(k/4)
    counter blocks on each participating stream.
    """

    def __init__(self, seed: int, stream_ids):
        seed = int(seed) & _MASK64
        ids = np.atleast_1d(np.asarray(stream_ids)).astype(np.uint64)
        self.seed = seed
        self.stream_ids = ids
        self._k0 = np.uint32(seed & 0xFFFFFFFF)
        self._k1 = np.uint32(seed >> 32)
        self._s_lo = (ids & _MASK32).astype(np.uint32)
        self._s_hi = (ids >> _SHIFT32).astype(np.uint32)
        self._counter = np.zeros(ids.shape[0], dtype=np.uint64)

    @property
    def size(self) -> int:
        return self._counter.shape[0]

    def uniforms(self, k: int, idx=None) -> np.ndarray:
        """(m, k) array of uniforms in (0, 1], one row per selected stream."""
        if k <= 0:
            raise ValueError("k must be positive")
        nblocks = (k + 3) // 4
        if idx is None:
            ctr = self._counter
            s_lo, s_hi = self._s_lo, self._s_hi
        else:
            ctr = self._counter[idx]
            s_lo, s_hi = self._s_lo[idx], self._s_hi[idx]
        m = ctr.shape[0]
        if m == 0:
            return np.empty((0, k))
        c = ctr[None, :] + np.arange(nblocks, dtype=np.uint64)[:, None]
        c0 = (c & _MASK32).astype(np.uint32)
        c1 = (c >> _SHIFT32).astype(np.uint32)
        c2 = np.broadcast_to(s_lo, (nblocks, m))
        c3 = np.broadcast_to(s_hi, (nblocks, m))
        o0, o1, o2, o3 = philox4x32(c0, c1, c2, c3, self._k0, self._k1)
        words = np.stack([o0, o1, o2, o3], axis=-1)  # (nblocks, m, 4)
        words = words.transpose(1, 0, 2).reshape(m, nblocks * 4)[:, :k]
        if idx is None:
            self._counter += np.uint64(nblocks)
        else:
            self._counter[idx] += np.uint64(nblocks)
        return (words.astype(np.float64) + 1.0) * _INV32

    def normals(self, k: int, idx=None) -> np.ndarray:
        """(m, k) standard normals via Box-Muller."""
        npairs = (k + 1) // 2
        u = self.uniforms(2 * npairs, idx)
        r = np.sqrt(-2.0 * np.log(u[:, :npairs]))
        theta = (2.0 * np.pi) * u[:, npairs:]
        out = np.empty((u.shape[0], 2 * npairs))
        out[:, 0::2] = r * np.cos(theta)
        out[:, 1::2] = r * np.sin(theta)
        return out[:, :k]

    def exponentials(self, idx=None) -> np.ndarray:
        """(m,) mean-1 exponentials via -log(U)."""
        return -np.log(self.uniforms(1, idx)[:, 0])


class RngStream:
    """Single stream; the scalar view of a one-entry :class:`StreamBatch`."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.batch = StreamBatch(self.seed, [self.stream_id])

    def uniforms(self, k: int) -> np.ndarray:
        return self.batch.uniforms(k)[0]

    def uniform(self) -> float:
        return float(self.batch.uniforms(1)[0, 0])

    def normals(self, k: int) -> np.ndarray:
        return self.batch.normals(k)[0]

    def exponential(self) -> float:
        return float(self.batch.exponentials()[0])

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
