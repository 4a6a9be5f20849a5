# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Semantics mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t, int8_t

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

BACKEND = "compiled"


cdef inline double _word_energy(const double[::1] b, const double[:, ::1] A,
                                double offset, uint64_t w, int n) noexcept nogil:
    cdef double e = offset
    cdef double t
    cdef uint64_t rest, rj
    cdef int i, j
    rest = w
    while rest:
        i = __builtin_ctzll(rest)
        rest &= rest - 1
        t = b[i]
        rj = rest
        while rj:
            j = __builtin_ctzll(rj)
            rj &= rj - 1
            t += A[i, j]
        e += t
    return e


def chunk_energies(const double[::1] b, const double[:, ::1] A, double offset,
                   uint64_t start, Py_ssize_t count, Py_ssize_t stride_start,
                   Py_ssize_t stride, double[::1] out):
    """Energies of words ``start + idx`` for idx in ``range(stride_start, count, stride)``."""
    cdef int n = b.shape[0]
    cdef Py_ssize_t idx
    with nogil:
        idx = stride_start
        while idx < count:
            out[idx] = _word_energy(b, A, offset, start + <uint64_t>idx, n)
            idx += stride


def word_energies(const double[::1] b, const double[:, ::1] A, double offset,
                  const uint64_t[::1] words, double[::1] out):
    cdef int n = b.shape[0]
    cdef Py_ssize_t idx, m = words.shape[0]
    with nogil:
        for idx in range(m):
            out[idx] = _word_energy(b, A, offset, words[idx], n)


def gray_prefix_batch(const double[:, ::1] A, double[::1] lf, uint64_t[::1] prefix,
                      uint64_t i0, Py_ssize_t count, int64_t[::1] pos,
                      double[::1] sign, double[::1] pdelta, uint64_t[::1] words):
    """Advance the shared prefix through ``count`` Gray steps starting at index ``i0``.

    ``lf[p]`` holds ``b_p + sum_j a_pj q_j`` over prefix neighbours and is kept
    current. For each step records flipped bit, sign ``1 - 2 q_p`` and the prefix
    part of the energy change, and the prefix word after the flip.
    """
    cdef int n_p = lf.shape[0]
    cdef Py_ssize_t t
    cdef uint64_t i
    cdef int p, j
    cdef double sg
    cdef uint64_t q = prefix[0]
    with nogil:
        for t in range(count):
            i = i0 + <uint64_t>t
            p = __builtin_ctzll(i + 1)
            sg = -1.0 if (q >> p) & 1 else 1.0
            pos[t] = p
            sign[t] = sg
            pdelta[t] = sg * lf[p]
            q ^= (<uint64_t>1) << p
            words[t] = q
            for j in range(n_p):
                lf[j] += sg * A[j, p]
    prefix[0] = q


def gray_lanes(const double[::1] pdelta, const double[::1] sign, const int64_t[::1] pos,
               const uint64_t[::1] words, Py_ssize_t count,
               const double[:, ::1] cache, const double[:, ::1] asuf, int n_p,
               Py_ssize_t lane_lo, Py_ssize_t lane_hi,
               double[::1] cur_e, uint64_t[::1] cur_w,
               double[::1] best_e, uint64_t[::1] best_w):
    """Apply one batch of shared prefix steps to every lane in ``[lane_lo, lane_hi)``.

    Lane ``s`` fixes the high bits to ``s``. The suffix part of each change is
    read from ``cache[s, p]`` for ``p < K`` and summed from ``asuf`` otherwise.
    """
    cdef int K = cache.shape[1]
    cdef Py_ssize_t s, t
    cdef int p, j
    cdef double e, be, sf
    cdef uint64_t bw, w, hi, rest
    with nogil:
        for s in range(lane_lo, lane_hi):
            e = cur_e[s]
            be = best_e[s]
            bw = best_w[s]
            hi = (<uint64_t>s) << n_p
            for t in range(count):
                p = <int>pos[t]
                if p < K:
                    sf = cache[s, p]
                else:
                    sf = 0.0
                    rest = <uint64_t>s
                    while rest:
                        j = __builtin_ctzll(rest)
                        rest &= rest - 1
                        sf += asuf[p, j]
                e += pdelta[t] + sign[t] * sf
                w = words[t] | hi
                if e < be or (e == be and w < bw):
                    be = e
                    bw = w
            cur_e[s] = e
            if count > 0:
                cur_w[s] = words[count - 1] | hi
            best_e[s] = be
            best_w[s] = bw


def metropolis_batch(int8_t[:, ::1] spins, const double[::1] h, const double[:, ::1] J,
                     const double[::1] betas, const double[:, ::1] uniforms,
                     double[::1] energies, Py_ssize_t lo, Py_ssize_t hi):
    """One sequential Metropolis sweep for replicas ``lo..hi-1``; returns accepted flips."""
    cdef int n = h.shape[0]
    cdef Py_ssize_t r
    cdef int i, j
    cdef double loc, de, beta
    cdef long accepted = 0
    with nogil:
        for r in range(lo, hi):
            beta = betas[r]
            for i in range(n):
                loc = h[i]
                for j in range(n):
                    loc += J[i, j] * spins[r, j]
                de = -2.0 * spins[r, i] * loc
                if de <= 0.0 or uniforms[r, i] < exp(-beta * de):
                    spins[r, i] = -spins[r, i]
                    energies[r] += de
                    accepted += 1
    return accepted
