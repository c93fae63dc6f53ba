# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot numeric kernels.

Semantics mirror ``zicp._kernels_py`` (the pure-numpy fallback); callers
pass pre-drawn uniforms so both backends consume identical RNG streams.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, lgamma, log

cnp.import_array()

cdef double _SHIFT = 8.0

cdef double _digamma(double x) nogil:
    cdef double acc = 0.0
    cdef double r, tail
    while x < _SHIFT:
        acc -= 1.0 / x
        x += 1.0
    r = 1.0 / (x * x)
    tail = r * (1.0 / 12.0 - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r * (
        1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r * (1.0 / 12.0)))))))
    return acc + log(x) - 0.5 / x - tail

cdef double _trigamma(double x) nogil:
    cdef double acc = 0.0
    cdef double u, r, tail
    while x < _SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    u = 1.0 / x
    r = u * u
    tail = r * (1.0 / 6.0 - r * (1.0 / 30.0 - r * (1.0 / 42.0 - r * (
        1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0))))))
    return acc + u + 0.5 * r + u * tail


def lgamma_vec(x):
    """Elementwise log-gamma of a positive float array."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(flat.size, dtype=np.float64)
    cdef Py_ssize_t i, n = flat.size
    with nogil:
        for i in range(n):
            out[i] = lgamma(flat[i])
    return out.reshape(shape)


def digamma_vec(x):
    """Elementwise digamma; recurrence to x >= 8 plus asymptotic series."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(flat.size, dtype=np.float64)
    cdef Py_ssize_t i, n = flat.size
    with nogil:
        for i in range(n):
            out[i] = _digamma(flat[i])
    return out.reshape(shape)


def trigamma_vec(x):
    """Elementwise trigamma; recurrence to x >= 8 plus asymptotic series."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    shape = arr.shape
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(flat.size, dtype=np.float64)
    cdef Py_ssize_t i, n = flat.size
    with nogil:
        for i in range(n):
            out[i] = _trigamma(flat[i])
    return out.reshape(shape)


def continuous_rowterms(support, q):
    """rowterm[j] = sum_i lgamma(q_i * support[j] + 1) for the clump-share split."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sup = np.ascontiguousarray(support, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(sup.size, dtype=np.float64)
    cdef Py_ssize_t j, i, nj = sup.size, ni = qq.size
    cdef double n, acc
    with nogil:
        for j in range(nj):
            n = <double> sup[j]
            acc = 0.0
            for i in range(ni):
                acc += lgamma(qq[i] * n + 1.0)
            out[j] = acc
    return out


def continuous_logweights(idx, counts, rowterm, lfact):
    """Log importance weights of allocated particles (see fallback docstring)."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ix = np.ascontiguousarray(idx, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] cnts = np.ascontiguousarray(counts, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rt = np.ascontiguousarray(rowterm, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lf = np.ascontiguousarray(lfact, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(ix.size, dtype=np.float64)
    cdef Py_ssize_t g, i, ng = ix.size, ni = cnts.shape[1]
    cdef double acc
    with nogil:
        for g in range(ng):
            acc = rt[ix[g]]
            for i in range(ni):
                acc -= lf[cnts[g, i]]
            out[g] = acc
    return out


def discrete_sample_record(y_i, log_rate, u, lfact, log_effort):
    """Sample one record's clump count for every particle (discrete model).

    Matches the fallback: inclusive-cumsum inverse-cdf on u * Z after
    row-max stabilization.  Returns (counts, proposal log-density, target
    log-term).
    """
    cdef int yi = int(y_i)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lr = np.ascontiguousarray(log_rate, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lf = np.ascontiguousarray(lfact, dtype=np.float64)
    cdef double le = float(log_effort)
    cdef Py_ssize_t g, k, ng = lr.size
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.empty(ng, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logq = np.empty(ng, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logt = np.empty(ng, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] const = np.empty(yi, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] row = np.empty(yi, dtype=np.float64)
    cdef double rate, m, z, target, csum
    cdef Py_ssize_t pick
    cdef long cnt
    for k in range(yi):
        const[k] = lf[k] + lf[yi - 1 - k] + lf[k + 1]
    with nogil:
        for g in range(ng):
            rate = lr[g] + le
            m = -1e308
            for k in range(yi):
                row[k] = (k + 1) * rate - const[k]
                if row[k] > m:
                    m = row[k]
            z = 0.0
            for k in range(yi):
                row[k] = exp(row[k] - m)
                z += row[k]
            target = uu[g] * z
            csum = 0.0
            pick = yi - 1
            for k in range(yi):
                csum += row[k]
                if csum >= target:
                    pick = k
                    break
            cnt = pick + 1
            counts[g] = cnt
            logq[g] = cnt * rate - const[pick] - m - log(z)
            logt[g] = (lf[yi - 1] - lf[cnt - 1] - lf[yi - cnt]
                       + cnt * le - lf[cnt])
    return counts, logq, logt
