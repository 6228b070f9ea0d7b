# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampling kernel, bit-compatible with _sampler_np.

The counter-based generator (Philox 4x64, 10 rounds), the uniform
mapping, the inverse-normal transform, and the ordering of every
floating-point operation mirror the numpy fallback exactly; elementwise
exponentials are delegated to np.exp so both backends go through one
libm surface.  Must be compiled with -ffp-contract=off: a fused
multiply-add anywhere in the hot loop would break the bit-for-bit
equality that the fallback guarantees.  Keep the two files in sync.
"""

from libc.stdint cimport uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

from scipy.special.cython_special cimport ndtri


cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t seq_mulhi64(uint64_t a, uint64_t b) {
        return (uint64_t)(((__uint128_t)a * b) >> 64);
    }
    """
    uint64_t seq_mulhi64(uint64_t a, uint64_t b) nogil


cdef uint64_t PHILOX_M0 = 0xD2E7470EE14C6C93
cdef uint64_t PHILOX_M1 = 0xCA5A826395121157
cdef uint64_t PHILOX_W0 = 0x9E3779B97F4A7C15
cdef uint64_t PHILOX_W1 = 0xBB67AE8584CAA73B
cdef double TWO_NEG53 = 1.0 / 9007199254740992.0


cdef inline void _philox_block(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                               uint64_t k0, uint64_t k1, uint64_t* out) nogil:
    cdef int r
    cdef uint64_t hi0, lo0, hi1, lo1
    for r in range(10):
        if r > 0:
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
        hi0 = seq_mulhi64(PHILOX_M0, c0)
        lo0 = PHILOX_M0 * c0
        hi1 = seq_mulhi64(PHILOX_M1, c2)
        lo1 = PHILOX_M1 * c2
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


def generator_words(seed, start, count):
    """Raw 64-bit words for counter blocks start .. start+count-1 (debug aid)."""
    cdef uint64_t useed = seed
    cdef uint64_t ustart = start
    cdef Py_ssize_t n = count
    out_np = np.empty(4 * n, dtype=np.uint64)
    cdef uint64_t[::1] out = out_np
    cdef Py_ssize_t i
    cdef uint64_t c0, c1
    with nogil:
        for i in range(n):
            # the counter is stepped before each block is produced
            c0 = ustart + <uint64_t> i + 1
            c1 = 1 if c0 < ustart else 0
            _philox_block(c0, c1, 0, 0, useed, 0, &out[4 * i])
    return out_np


cdef Py_ssize_t CHUNK_TARGET = 4194304


def sample_block(double[::1] eigs_a, double[::1] psi_re, double[::1] psi_im,
                 double[::1] wa_cum, double[:, ::1] u_re, double[:, ::1] u_im,
                 double[::1] eigs_b, double neg_lam_a, double sigma_a, double sigma_b,
                 seed, start, Py_ssize_t count):
    """Samples ``start .. start + count - 1`` of the stream for ``seed``."""
    cdef uint64_t useed = seed
    cdef uint64_t ustart = start
    cdef Py_ssize_t d = eigs_a.shape[0]
    a_np = np.empty(count)
    b_np = np.empty(count)
    cdef double[::1] a_out = a_np
    cdef double[::1] b_out = b_np

    cdef Py_ssize_t step = CHUNK_TARGET // d
    if step < 256:
        step = 256
    if step > count:
        step = count if count > 0 else 1

    args_np = np.empty((step, d))
    cdef double[:, ::1] args = args_np
    u2_np = np.empty(step)
    u3_np = np.empty(step)
    cdef double[::1] u2v = u2_np
    cdef double[::1] u3v = u3_np
    cdef double[:, ::1] ev

    cdef double* tre = <double*> malloc(3 * d * sizeof(double))
    if tre == NULL:
        raise MemoryError()
    cdef double* tim = tre + d
    cdef double* qbuf = tre + 2 * d

    cdef Py_ssize_t pos = 0, m, i, n, mm, j, sel
    cdef uint64_t c0, c1
    cdef uint64_t w[4]
    cdef double u0, u1, t, ai, diff, en, cre, cim
    cdef double p1, p2, prod_re, prod_im, q, tot, s

    try:
        while pos < count:
            m = count - pos
            if m > step:
                m = step
            with nogil:
                for i in range(m):
                    c0 = ustart + <uint64_t> (pos + i) + 1
                    c1 = 1 if c0 < ustart else 0
                    _philox_block(c0, c1, 0, 0, useed, 0, w)
                    u0 = (<double> (w[0] >> 11) + 0.5) * TWO_NEG53
                    u1 = (<double> (w[1] >> 11) + 0.5) * TWO_NEG53
                    u2v[i] = (<double> (w[2] >> 11) + 0.5) * TWO_NEG53
                    u3v[i] = (<double> (w[3] >> 11) + 0.5) * TWO_NEG53
                    t = u0 * wa_cum[d - 1]
                    j = d - 1
                    for n in range(d):
                        if wa_cum[n] > t:
                            j = n
                            break
                    ai = eigs_a[j] + sigma_a * ndtri(u1)
                    a_out[pos + i] = ai
                    for n in range(d):
                        diff = ai - eigs_a[n]
                        args[i, n] = (diff * diff) * neg_lam_a
            e_np = np.exp(args_np[:m])
            ev = e_np
            with nogil:
                for i in range(m):
                    for mm in range(d):
                        tre[mm] = 0.0
                        tim[mm] = 0.0
                    for n in range(d):
                        en = ev[i, n]
                        cre = en * psi_re[n]
                        cim = en * psi_im[n]
                        for mm in range(d):
                            p1 = cre * u_re[mm, n]
                            p2 = cim * u_im[mm, n]
                            prod_re = p1 - p2
                            p1 = cre * u_im[mm, n]
                            p2 = cim * u_re[mm, n]
                            prod_im = p1 + p2
                            tre[mm] = tre[mm] + prod_re
                            tim[mm] = tim[mm] + prod_im
                    tot = 0.0
                    for mm in range(d):
                        q = tre[mm] * tre[mm] + tim[mm] * tim[mm]
                        qbuf[mm] = q
                        tot = tot + q
                    t = u2v[i] * tot
                    sel = d - 1
                    s = 0.0
                    for mm in range(d):
                        s = s + qbuf[mm]
                        if s > t:
                            sel = mm
                            break
                    b_out[pos + i] = eigs_b[sel] + sigma_b * ndtri(u3v[i])
            pos += m
    finally:
        free(tre)
    return a_np, b_np
