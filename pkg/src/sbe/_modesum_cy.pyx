# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Horner evaluation of torus Fourier mode sums over many points.

Computes out[j] = w[0].re + 2 * Re( sum_{k=1}^{K} w[k] * exp(i 2 pi k x[j] / L) ),
the real field synthesised from a Hermitian half-spectrum.  Points are
processed in blocks of 16 lanes so the per-mode recurrence pipelines and
vectorises across paths instead of being latency-bound along k.
"""

from cython.parallel cimport prange, threadid
from libc.math cimport cos, fmod, sin

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF LANES = 16


def mode_sum_1d(double[::1] x, double complex[::1] w, double length,
                double[::1] out, int num_threads):
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t kmax = w.shape[0] - 1
    cdef double two_pi_over_l = 2.0 * np.pi / length
    cdef double w0re = w[0].real
    cdef double[::1] wr = np.ascontiguousarray(np.real(np.asarray(w)))
    cdef double[::1] wi = np.ascontiguousarray(np.imag(np.asarray(w)))
    if kmax < 0:
        raise ValueError("empty weight vector")
    if num_threads < 1:
        num_threads = 1
    cdef Py_ssize_t nblocks = (m + LANES - 1) // LANES
    # per-thread lane scratch: rows are (zr, zi, ar, ai)
    scratch_arr = np.empty((num_threads, 4, LANES))
    cdef double[:, :, ::1] scratch = scratch_arr
    cdef Py_ssize_t jb, base, cnt, t
    cdef long k
    cdef int tid
    cdef double rem, theta, tr, wrk, wik
    cdef double *zr
    cdef double *zi
    cdef double *ar
    cdef double *ai
    for jb in prange(nblocks, nogil=True, schedule="static",
                     num_threads=num_threads):
        tid = threadid()
        zr = &scratch[tid, 0, 0]
        zi = &scratch[tid, 1, 0]
        ar = &scratch[tid, 2, 0]
        ai = &scratch[tid, 3, 0]
        base = jb * LANES
        cnt = m - base
        if cnt > LANES:
            cnt = LANES
        for t in range(cnt):
            rem = fmod(x[base + t], length)
            if rem < 0.0:
                rem = rem + length
            theta = rem * two_pi_over_l
            zr[t] = cos(theta)
            zi[t] = sin(theta)
            ar[t] = wr[kmax]
            ai[t] = wi[kmax]
        for k in range(kmax - 1, -1, -1):
            wrk = wr[k]
            wik = wi[k]
            for t in range(cnt):
                tr = ar[t] * zr[t] - ai[t] * zi[t] + wrk
                ai[t] = ar[t] * zi[t] + ai[t] * zr[t] + wik
                ar[t] = tr
        for t in range(cnt):
            out[base + t] = 2.0 * ar[t] - w0re
