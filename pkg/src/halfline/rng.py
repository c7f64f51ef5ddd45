"""Counter-based random stream keyed by (seed, replicate, step).

Every random quantity a walk consumes is a pure function of its key, so a
replicate can be regenerated in isolation and ensembles come out identical
no matter how replicates are distributed over threads.

Layout of the stream for one replicate with key ``k``:

* bulk moves use one bit per step; step ``s`` reads bit ``s % 64`` of
  ``mix64(k + (s // 64) * GOLDEN)``, a set bit meaning "move up";
* moves from the origin use a 53-bit uniform,
  ``mix64((k ^ ORIGIN_SALT) + s * GOLDEN) >> 11`` scaled by ``2**-53``.

``mix64`` is the SplitMix64 finaliser. The numba scalar versions drive the
simulation kernels; the numpy versions exist so tests can regenerate the
same stream without going through the kernels.
"""

from __future__ import annotations

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
ORIGIN_SALT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S6 = np.uint64(6)
_ONE = np.uint64(1)
_LOW6 = np.uint64(63)


@nb.njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(inline="always", cache=True)
def replicate_key(seed, replicate):
    return mix64(np.uint64(seed) ^ mix64(np.uint64(replicate) * GOLDEN + _ONE))


@nb.njit(inline="always", cache=True)
def bulk_block(key, block):
    return mix64(key + np.uint64(block) * GOLDEN)


@nb.njit(inline="always", cache=True)
def origin_uniform(key, step):
    z = mix64((key ^ ORIGIN_SALT) + np.uint64(step) * GOLDEN)
    return np.float64(z >> _S11) * _INV53


@nb.njit(inline="always", cache=True)
def popcount64(x):
    x = x - ((x >> _ONE) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


# numpy mirrors -------------------------------------------------------------


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def key_for(seed: int, replicate: int) -> np.uint64:
    """Key of one replicate; equals the key used inside the kernels."""
    with np.errstate(over="ignore"):
        inner = _mix64_np(np.uint64(replicate) * GOLDEN + _ONE)
    return np.uint64(_mix64_np(np.uint64(seed % 2**64) ^ inner))


def bulk_bits(key: np.uint64, steps: int) -> np.ndarray:
    """Up/down bits (1 = up) for steps ``0..steps-1``."""
    nblocks = (steps + 63) // 64
    with np.errstate(over="ignore"):
        blocks = _mix64_np(key + np.arange(nblocks, dtype=np.uint64) * GOLDEN)
    shifts = np.arange(64, dtype=np.uint64)
    bits = (blocks[:, None] >> shifts[None, :]) & _ONE
    return bits.reshape(-1)[:steps].astype(np.int8)


def origin_uniforms(key: np.uint64, steps: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = _mix64_np((key ^ ORIGIN_SALT) + np.arange(steps, dtype=np.uint64) * GOLDEN)
    return (z >> _S11).astype(np.float64) * _INV53
