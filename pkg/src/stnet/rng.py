"""Seeded pseudo-random draws for corruption, initialization, and shuffling.

The generator is a bank of xorshift64* streams (one per lane) seeded from a
single 64-bit value via splitmix64. Bulk draws step every lane at once and
interleave the outputs, so array-sized requests stay vectorized. Replays are
bit-identical for a given seed; matching another implementation's draws is
not a goal.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_SPLITMIX_INC = 0x9E3779B97F4A7C15
_XORSHIFT_MULT = 0x2545F4914F6CDD1D


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _SPLITMIX_INC) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Mix (seed, index) into a fresh 64-bit seed.

    Used wherever one master seed fans out into independent streams:
    per-image corruption, per-epoch shuffles, per-run training.
    """
    state = (seed & _MASK64) ^ ((index & _MASK64) * _SPLITMIX_INC & _MASK64)
    state, a = _splitmix64(state)
    _, b = _splitmix64(state ^ a)
    return b


class RandomState:
    """Deterministic generator producing uniforms, normals, and Poisson draws."""

    LANES = 64

    def __init__(self, seed: int):
        states = np.empty(self.LANES, dtype=np.uint64)
        s = seed & _MASK64
        for i in range(self.LANES):
            s, z = _splitmix64(s)
            states[i] = z if z != 0 else _SPLITMIX_INC  # xorshift state must stay nonzero
        self._state = states

    def _step_raw(self, steps: int) -> np.ndarray:
        out = np.empty((steps, self.LANES), dtype=np.uint64)
        s = self._state
        for i in range(steps):
            s = s ^ (s >> np.uint64(12))
            s = s ^ (s << np.uint64(25))
            s = s ^ (s >> np.uint64(27))
            out[i] = s
        self._state = s
        return np.multiply(out, np.uint64(_XORSHIFT_MULT)).ravel()

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        raw = self._step_raw(-(-n // self.LANES))[:n]
        return (raw >> np.uint64(11)) * 2.0**-53

    def uniforms_pos(self, n: int) -> np.ndarray:
        """n doubles uniform in (0, 1]; safe as log/division arguments."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        raw = self._step_raw(-(-n // self.LANES))[:n]
        return ((raw >> np.uint64(11)) + np.uint64(1)) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normal doubles (Box-Muller pairs)."""
        if n <= 0:
            return np.empty(0, dtype=np.float64)
        half = -(-n // 2)
        u1 = self.uniforms_pos(half)
        u2 = self.uniforms(half)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]

    def permutation(self, n: int) -> np.ndarray:
        """A permutation of range(n)."""
        return np.argsort(self.uniforms(n), kind="stable")

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices drawn uniformly from range(n)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} distinct values from range({n})")
        return self.permutation(n)[:k]

    def poissons(self, lam: np.ndarray) -> np.ndarray:
        """One Poisson draw per rate in `lam` (float64 counts).

        Uses Knuth's product-of-uniforms method; rates above 1e3 switch to a
        rounded normal approximation to bound the loop length.
        """
        lam = np.asarray(lam, dtype=np.float64)
        flat = lam.ravel()
        counts = np.zeros(flat.size, dtype=np.float64)
        big = flat > 1.0e3
        if big.any():
            z = self.normals(int(big.sum()))
            approx = np.rint(flat[big] + np.sqrt(flat[big]) * z)
            counts[big] = np.maximum(approx, 0.0)
        small = np.flatnonzero(~big)
        if small.size:
            limit = np.exp(-flat[small])
            prod = np.ones(small.size, dtype=np.float64)
            active = np.arange(small.size)
            while active.size:
                prod[active] *= self.uniforms_pos(active.size)
                still = prod[active] > limit[active]
                counts[small[active[still]]] += 1.0
                active = active[still]
        return counts.reshape(lam.shape)
