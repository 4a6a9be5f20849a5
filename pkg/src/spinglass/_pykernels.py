"""Pure-Python/numpy twins of the compiled kernels.

Every function keeps the floating-point accumulation order of its compiled
counterpart, so both backends return identical values.
"""

import math

import numpy as np

BACKEND = "python"

_ONE = np.uint64(1)


def _bits(words, n):
    return ((words[:, None] >> np.arange(n, dtype=np.uint64)) & _ONE).astype(bool)


def _word_energies(b, A, offset, words):
    n = b.shape[0]
    q = _bits(words, n)
    e = np.full(len(words), offset)
    for i in range(n):
        t = np.full(len(words), b[i])
        for j in range(i + 1, n):
            if A[i, j] != 0.0:
                t = np.where(q[:, j], t + A[i, j], t)
        e = np.where(q[:, i], e + t, e)
    return e


def chunk_energies(b, A, offset, start, count, stride_start, stride, out):
    idx = np.arange(stride_start, count, stride)
    words = np.uint64(start) + idx.astype(np.uint64)
    out[idx] = _word_energies(b, A, offset, words)


def word_energies(b, A, offset, words, out):
    out[:] = _word_energies(b, A, offset, np.asarray(words, dtype=np.uint64))


def gray_prefix_batch(A, lf, prefix, i0, count, pos, sign, pdelta, words):
    q = int(prefix[0])
    i0 = int(i0)
    for t in range(count):
        x = i0 + t + 1
        p = (x & -x).bit_length() - 1
        sg = -1.0 if (q >> p) & 1 else 1.0
        pos[t] = p
        sign[t] = sg
        pdelta[t] = sg * lf[p]
        q ^= 1 << p
        words[t] = q
        lf += sg * A[: lf.shape[0], p]
    prefix[0] = q


def gray_lanes(pdelta, sign, pos, words, count, cache, asuf, n_p, lane_lo, lane_hi,
               cur_e, cur_w, best_e, best_w):
    K = cache.shape[1]
    m = asuf.shape[1]
    lanes = np.arange(lane_lo, lane_hi, dtype=np.uint64)
    lane_bits = _bits(lanes, m)
    hi = lanes << np.uint64(n_p)
    e = cur_e[lane_lo:lane_hi].copy()
    be = best_e[lane_lo:lane_hi].copy()
    bw = best_w[lane_lo:lane_hi].copy()
    for t in range(count):
        p = int(pos[t])
        if p < K:
            sf = cache[lane_lo:lane_hi, p]
        else:
            sf = np.zeros(len(lanes))
            for j in range(m):
                sf = np.where(lane_bits[:, j], sf + asuf[p, j], sf)
        e = e + (pdelta[t] + sign[t] * sf)
        w = np.uint64(words[t]) | hi
        better = (e < be) | ((e == be) & (w < bw))
        be = np.where(better, e, be)
        bw = np.where(better, w, bw)
    cur_e[lane_lo:lane_hi] = e
    if count > 0:
        cur_w[lane_lo:lane_hi] = np.uint64(words[count - 1]) | hi
    best_e[lane_lo:lane_hi] = be
    best_w[lane_lo:lane_hi] = bw


def metropolis_batch(spins, h, J, betas, uniforms, energies, lo, hi):
    n = h.shape[0]
    accepted = 0
    block = spins[lo:hi]
    for i in range(n):
        loc = np.full(hi - lo, h[i])
        for j in range(n):
            loc = loc + J[i, j] * block[:, j]
        de = -2.0 * block[:, i] * loc
        for r in range(hi - lo):
            d = float(de[r])
            if d <= 0.0 or uniforms[lo + r, i] < math.exp(-betas[lo + r] * d):
                block[r, i] = -block[r, i]
                energies[lo + r] += d
                accepted += 1
    return accepted
