# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: counter-based uniforms, Markov state paths, split sums."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.math cimport fabs

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def uniforms(uint64_t key, int64_t start, int64_t count, int64_t ndraws):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((count, ndraws), dtype=np.float64)
    cdef double[:, ::1] view = out
    cdef int64_t i, d
    cdef uint64_t c = <uint64_t>(start * ndraws)
    with nogil:
        for i in range(count):
            for d in range(ndraws):
                c += 1
                view[i, d] = (<double>(_mix64(key + c * GOLDEN) >> 11) + 0.5) * 1.1102230246251565e-16
    return out


def chain_states(const double[::1] u, const double[:, ::1] cum_transition,
                 const double[::1] cum_stationary):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t S = cum_stationary.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] view = out
    cdef Py_ssize_t k, s, cur
    if n == 0:
        return out
    with nogil:
        cur = S - 1
        for s in range(S):
            if u[0] < cum_stationary[s]:
                cur = s
                break
        view[0] = cur
        for k in range(1, n):
            s = 0
            while s < S - 1 and u[k] >= cum_transition[cur, s]:
                s += 1
            cur = s
            view[k] = cur
    return out


def split_sums(const double[::1] x, double b):
    """Neumaier-compensated sums of x, of x where |x| <= b, and of x where |x| > b."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k
    cdef double v, t
    cdef double s_all = 0.0, c_all = 0.0
    cdef double s_in = 0.0, c_in = 0.0
    cdef double s_out = 0.0, c_out = 0.0
    with nogil:
        for k in range(n):
            v = x[k]
            t = s_all + v
            if fabs(s_all) >= fabs(v):
                c_all += (s_all - t) + v
            else:
                c_all += (v - t) + s_all
            s_all = t
            if fabs(v) <= b:
                t = s_in + v
                if fabs(s_in) >= fabs(v):
                    c_in += (s_in - t) + v
                else:
                    c_in += (v - t) + s_in
                s_in = t
            else:
                t = s_out + v
                if fabs(s_out) >= fabs(v):
                    c_out += (s_out - t) + v
                else:
                    c_out += (v - t) + s_out
                s_out = t
    return s_all + c_all, s_in + c_in, s_out + c_out
