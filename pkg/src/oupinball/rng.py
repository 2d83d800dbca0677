"""Counter-based random numbers for reproducible parallel Monte Carlo.

Every Gaussian increment is a pure function of (seed, stream, path, block):
the Philox-4x64 block cipher with 10 rounds is evaluated at

    key     = (seed, stream)
    counter = (block, path, 0, 0)

and the four 64-bit output words are turned into two standard normals via
Box-Muller plus two auxiliary uniforms (used for barrier-crossing tests).
Paths can therefore be simulated in any order, in parallel, or resumed,
with bit-identical results.

Two interchangeable implementations are provided: a numpy-vectorized one
(batches over paths or blocks) and a scalar one compiled by numba for tight
simulation loops.  Both are tested against numpy's own Philox bit generator.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, uint64
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return deco


__all__ = ["philox4x64", "gauss_block", "normals", "uniforms"]

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# 53-bit mantissa mapping to (0, 1]; never returns 0 so log() is safe
_INV53 = 1.0 / 9007199254740992.0
_HALF53 = 0.5 / 9007199254740992.0
_SHIFT11 = np.uint64(11)
_TWO_PI = 6.283185307179586476925287


def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _SHIFT32
    b_lo = b & _MASK32
    b_hi = b >> _SHIFT32
    t = a_lo * b_lo
    t1 = a_hi * b_lo + (t >> _SHIFT32)
    t2 = a_lo * b_hi + (t1 & _MASK32)
    hi = a_hi * b_hi + (t1 >> _SHIFT32) + (t2 >> _SHIFT32)
    return hi, a * b


def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox-4x64-10 block function, vectorized over uint64 counter arrays."""
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.broadcast_to(np.asarray(c1, dtype=np.uint64), c0.shape).copy()
    c2 = np.broadcast_to(np.asarray(c2, dtype=np.uint64), c0.shape).copy()
    c3 = np.broadcast_to(np.asarray(c3, dtype=np.uint64), c0.shape).copy()
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(c0, _M0)
            hi1, lo1 = _mulhilo(c2, _M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def _to_unit(w):
    # top 53 bits -> (0, 1]
    return (w >> _SHIFT11) * _INV53 + _HALF53


def gauss_block(seed, stream, path, block):
    """Two standard normals plus two uniforms for each (path, block) pair.

    ``path`` and ``block`` broadcast against each other; returns
    (z1, z2, u3, u4) with the shape of the broadcast.
    """
    path = np.asarray(path, dtype=np.uint64)
    block = np.asarray(block, dtype=np.uint64)
    path, block = np.broadcast_arrays(path, block)
    w0, w1, w2, w3 = philox4x64(block, path, 0, 0, np.uint64(seed), np.uint64(stream))
    u1 = _to_unit(w0)
    u2 = _to_unit(w1)
    rad = np.sqrt(-2.0 * np.log(u1))
    z1 = rad * np.cos(_TWO_PI * u2)
    z2 = rad * np.sin(_TWO_PI * u2)
    return z1, z2, _to_unit(w2), _to_unit(w3)


def normals(seed, stream, path, n, offset=0):
    """First ``n`` normals of a path's stream (blocks 2 apart, pairs unrolled)."""
    nblocks = (offset + n + 1) // 2
    blocks = np.arange(nblocks, dtype=np.uint64)
    z1, z2, _, _ = gauss_block(seed, stream, np.uint64(path), blocks)
    out = np.empty(2 * nblocks)
    out[0::2] = z1
    out[1::2] = z2
    return out[offset:offset + n]


def uniforms(seed, stream, path, n, offset=0):
    """First ``n`` auxiliary uniforms of a path's stream."""
    nblocks = (offset + n + 1) // 2
    blocks = np.arange(nblocks, dtype=np.uint64)
    _, _, u3, u4 = gauss_block(seed, stream, np.uint64(path), blocks)
    out = np.empty(2 * nblocks)
    out[0::2] = u3
    out[1::2] = u4
    return out[offset:offset + n]


# --------------------------------------------------------------------------
# numba twins for hot scalar loops
# --------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(inline="always", cache=True)
    def _nb_mulhilo(a, b):
        mask = uint64(0xFFFFFFFF)
        a_lo = a & mask
        a_hi = a >> uint64(32)
        b_lo = b & mask
        b_hi = b >> uint64(32)
        t = a_lo * b_lo
        t1 = a_hi * b_lo + (t >> uint64(32))
        t2 = a_lo * b_hi + (t1 & mask)
        hi = a_hi * b_hi + (t1 >> uint64(32)) + (t2 >> uint64(32))
        return hi, a * b

    @njit(inline="always", cache=True)
    def nb_philox4x64(c0, c1, c2, c3, k0, k1):
        m0 = uint64(0xD2E7470EE14C6C93)
        m1 = uint64(0xCA5A826395121157)
        w0 = uint64(0x9E3779B97F4A7C15)
        w1 = uint64(0xBB67AE8584CAA73B)
        for _ in range(10):
            hi0, lo0 = _nb_mulhilo(c0, m0)
            hi1, lo1 = _nb_mulhilo(c2, m1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 += w0
            k1 += w1
        return c0, c1, c2, c3

    @njit(inline="always", cache=True)
    def nb_gauss_block(seed, stream, path, block):
        w0, w1, w2, w3 = nb_philox4x64(block, path, uint64(0), uint64(0), seed, stream)
        u1 = (w0 >> uint64(11)) * _INV53 + _HALF53
        u2 = (w1 >> uint64(11)) * _INV53 + _HALF53
        rad = np.sqrt(-2.0 * np.log(u1))
        z1 = rad * np.cos(_TWO_PI * u2)
        z2 = rad * np.sin(_TWO_PI * u2)
        u3 = (w2 >> uint64(11)) * _INV53 + _HALF53
        u4 = (w3 >> uint64(11)) * _INV53 + _HALF53
        return z1, z2, u3, u4
else:  # pragma: no cover
    nb_philox4x64 = None
    nb_gauss_block = None
