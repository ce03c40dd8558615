# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled compute kernels for the sampler's hot loops.

Mirrors the pure-Python kernels exactly: same sweep order, same
cumulative-sum sampling rule from the supplied uniforms.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, log1p

BACKEND = "compiled"


cdef inline double _logsig(double x) noexcept nogil:
    if x >= 0.0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline double _signed_level(int label, double[::1] theta) noexcept nogil:
    if label > 0:
        return theta[label - 1]
    if label < 0:
        return -theta[-label - 1]
    return 0.0


def dataset_loglik(int[::1] cp_slot, int[::1] cp_i, int[::1] cp_j,
                   double[::1] cp_w, double[::1] cp_m,
                   int[::1] z, double[::1] theta, double[::1] r):
    cdef Py_ssize_t c, nc = cp_slot.shape[0]
    cdef double total = 0.0
    cdef double th, eta
    for c in range(nc):
        th = 0.0
        if cp_slot[c] >= 0:
            th = _signed_level(z[cp_slot[c]], theta)
        eta = th + r[cp_i[c]] - r[cp_j[c]]
        total += cp_w[c] * _logsig(eta) + (cp_m[c] - cp_w[c]) * _logsig(-eta)
    return total


def gibbs_pair_sweep(int[::1] fp_i, int[::1] fp_j, double[::1] fp_w, double[::1] fp_m,
                     int[::1] z, int[::1] occ, double[::1] theta, double gamma,
                     double[::1] r, double[::1] u):
    cdef int k = theta.shape[0]
    cdef Py_ssize_t n_free = z.shape[0]
    if k == 0 or n_free == 0:
        return 0
    cdef int nlab = 2 * k + 1
    buf = np.empty(nlab, dtype=np.float64)
    cdef double[::1] wts = buf
    cdef Py_ssize_t f
    cdef int s, cur, new, idx
    cdef double d, th, eta, w, m, mx, total, target, acc
    cdef int changed = 0
    for f in range(n_free):
        cur = z[f]
        d = r[fp_i[f]] - r[fp_j[f]]
        w = fp_w[f]
        m = fp_m[f]
        mx = -1e308
        for s in range(-k, k + 1):
            idx = s + k
            th = log(gamma + occ[idx] - (1.0 if s == cur else 0.0))
            if m > 0.0:
                eta = _signed_level(s, theta) + d
                th += w * _logsig(eta) + (m - w) * _logsig(-eta)
            wts[idx] = th
            if th > mx:
                mx = th
        total = 0.0
        for idx in range(nlab):
            total += exp(wts[idx] - mx)
            wts[idx] = total
        target = u[f] * total
        new = nlab - 1
        for idx in range(nlab):
            if wts[idx] > target:
                new = idx
                break
        new -= k
        if new != cur:
            occ[cur + k] -= 1
            occ[new + k] += 1
            z[f] = new
            changed += 1
    return changed


def gibbs_object_sweep(int[::1] adj_ptr, int[::1] adj_opp, double[::1] adj_w, double[::1] adj_m,
                       int[::1] adj_slot, int[::1] adj_sign, int[::1] z, double[::1] theta,
                       double[::1] phi, int[::1] y, double[::1] r, int[::1] occ,
                       double gamma, double[::1] u, Py_ssize_t start, Py_ssize_t stop):
    cdef int n_levels = phi.shape[0]
    cdef Py_ssize_t n = y.shape[0]
    if n_levels <= 1 or n <= 1:
        return 0
    buf = np.empty(n_levels, dtype=np.float64)
    cdef double[::1] wts = buf
    cdef Py_ssize_t i, e
    cdef int a, cur, new, lo, hi
    cdef double th, eta, w, m, mx, total, target
    cdef int changed = 0
    for i in range(start, stop):
        lo = adj_ptr[i]
        hi = adj_ptr[i + 1]
        cur = y[i]
        mx = -1e308
        for a in range(n_levels):
            total = log(gamma + occ[a] - (1.0 if a == cur else 0.0))
            for e in range(lo, hi):
                th = 0.0
                if adj_slot[e] >= 0:
                    th = _signed_level(z[adj_slot[e]], theta)
                eta = th * adj_sign[e] + phi[a] - r[adj_opp[e]]
                w = adj_w[e]
                m = adj_m[e]
                total += w * _logsig(eta) + (m - w) * _logsig(-eta)
            wts[a] = total
            if total > mx:
                mx = total
        total = 0.0
        for a in range(n_levels):
            total += exp(wts[a] - mx)
            wts[a] = total
        target = u[i - start] * total
        new = n_levels - 1
        for a in range(n_levels):
            if wts[a] > target:
                new = a
                break
        if new != cur:
            occ[cur] -= 1
            occ[new] += 1
            y[i] = new
            r[i] = phi[new]
            changed += 1
    return changed
