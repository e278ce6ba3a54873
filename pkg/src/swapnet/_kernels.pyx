# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernel; same stream and counts as ``_kernels_py``."""
from libc.stdint cimport uint64_t

cdef uint64_t GOLDEN_GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef long long _count(double p, long long shots, uint64_t seed) nogil:
    cdef uint64_t key = _mix64(seed)
    cdef uint64_t ctr = key
    cdef long long i, hits = 0
    cdef double scale = 1.0 / 9007199254740992.0
    for i in range(shots):
        ctr += GOLDEN_GAMMA
        if <double>(_mix64(ctr) >> 11) * scale < p:
            hits += 1
    return hits


def count_below(double p, long long shots, unsigned long long seed):
    cdef long long out
    with nogil:
        out = _count(p, shots, seed)
    return out


def count_below_batch(double p, long long shots, seeds):
    import numpy as np
    cdef Py_ssize_t i, n = len(seeds)
    out = np.empty(n, dtype=np.int64)
    cdef long long[:] view = out
    cdef unsigned long long[:] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    with nogil:
        for i in range(n):
            view[i] = _count(p, shots, s[i])
    return out
