# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
# distutils: language = c++
"""Compiled convolution kernels: hash-map accumulation over packed keys and
a direct dense 1-d loop.  Mirrors _convpy's interface."""

from cython.operator cimport dereference, preincrement
from libcpp.unordered_map cimport unordered_map

import numpy as np

cimport numpy as cnp

cnp.import_array()


def accumulate_packed(ka, wa, kb, wb):
    cdef const cnp.int64_t[::1] ka_v = np.ascontiguousarray(ka, dtype=np.int64)
    cdef const double[::1] wa_v = np.ascontiguousarray(wa, dtype=np.float64)
    cdef const cnp.int64_t[::1] kb_v = np.ascontiguousarray(kb, dtype=np.int64)
    cdef const double[::1] wb_v = np.ascontiguousarray(wb, dtype=np.float64)
    cdef Py_ssize_t ma = ka_v.shape[0], mb = kb_v.shape[0]
    if ma == 0 or mb == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)

    cdef unordered_map[cnp.int64_t, double] acc
    acc.reserve(<size_t> (ma + mb) * 4)
    cdef Py_ssize_t i, j
    cdef cnp.int64_t base
    cdef double wi
    for i in range(ma):
        base = ka_v[i]
        wi = wa_v[i]
        for j in range(mb):
            acc[base + kb_v[j]] += wi * wb_v[j]

    out_k = np.empty(acc.size(), dtype=np.int64)
    out_w = np.empty(acc.size(), dtype=np.float64)
    cdef cnp.int64_t[::1] ok = out_k
    cdef double[::1] ow = out_w
    cdef unordered_map[cnp.int64_t, double].iterator it = acc.begin()
    cdef Py_ssize_t n = 0
    while it != acc.end():
        ok[n] = dereference(it).first
        ow[n] = dereference(it).second
        n += 1
        preincrement(it)
    order = np.argsort(out_k, kind="stable")
    return out_k[order], out_w[order]


def dense_convolve_1d(a, b):
    cdef const double[::1] a_v = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] b_v = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t na = a_v.shape[0], nb = b_v.shape[0]
    out = np.zeros(na + nb - 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double ai
    for i in range(na):
        ai = a_v[i]
        if ai == 0.0:
            continue
        for j in range(nb):
            o[i + j] += ai * b_v[j]
    return out
