# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: OSA clustering and the flooding decoders."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, atanh, fabs, isinf, INFINITY

cnp.import_array()

NAME = "cython"

cdef double TANH_CLIP = 19.07


def osa_starts(const double[::1] llr, double l_s):
    cdef Py_ssize_t n = llr.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] starts = out
    cdef Py_ssize_t i, count = 0
    cdef double anchor
    if n == 0:
        return out[:0]
    with nogil:
        starts[0] = 0
        count = 1
        anchor = llr[0]
        for i in range(1, n):
            if isinf(anchor):
                if llr[i] == anchor:
                    continue
            elif llr[i] >= anchor - l_s:
                continue
            starts[count] = i
            count += 1
            anchor = llr[i]
    return out[:count]


cdef inline bint _syndrome(const long long[::1] chk_ptr, const long long[::1] chk_edges,
                           const long long[::1] edge_var, const unsigned char[::1] hard,
                           Py_ssize_t n_checks, int *unsat) noexcept nogil:
    cdef Py_ssize_t c, k
    cdef unsigned char p
    cdef int bad = 0
    for c in range(n_checks):
        p = 0
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            p ^= hard[edge_var[chk_edges[k]]]
        bad += p
    unsat[0] = bad
    return bad == 0


cdef inline void _boxplus_check(double *t, double *out, Py_ssize_t d, double *pre) noexcept nogil:
    # out[j] = prod_{k != j} t[k]; prefix products left to right, suffix right to left.
    cdef Py_ssize_t j
    cdef double acc
    if d == 1:
        out[0] = 0.0
        return
    acc = 1.0
    for j in range(d):
        acc = acc * t[j] if j else t[0]
        pre[j] = acc
    acc = 1.0
    for j in range(d - 1, -1, -1):
        if j == d - 1:
            out[j] = pre[j - 1]
        elif j == 0:
            out[j] = acc
        else:
            out[j] = pre[j - 1] * acc
        acc = acc * t[j] if j != d - 1 else t[j]


def decode_float(layout, const double[::1] llr, int max_iters, bint minsum):
    cdef const long long[::1] var_ptr = layout.var_ptr
    cdef const long long[::1] chk_ptr = layout.chk_ptr
    cdef const long long[::1] chk_edges = layout.chk_edges
    cdef const long long[::1] edge_var = layout.edge_var
    cdef Py_ssize_t n = layout.n_vars, m = layout.n_checks, E = edge_var.shape[0]
    cdef Py_ssize_t dmax = layout.max_check_degree
    v2c_a = np.empty(E)
    c2v_a = np.empty(E)
    hard_a = np.zeros(n, dtype=np.uint8)
    buf_a = np.empty(3 * dmax)
    cdef double[::1] v2c = v2c_a, c2v = c2v_a, buf = buf_a
    cdef unsigned char[::1] hard = hard_a
    cdef Py_ssize_t v, c, k, e, d, j, idx
    cdef double s, x, a, m1, m2
    cdef int par, it, unsat = 0, used = max_iters
    cdef bint ok = False
    with nogil:
        for v in range(n):
            for e in range(var_ptr[v], var_ptr[v + 1]):
                v2c[e] = llr[v]
        for it in range(1, max_iters + 1):
            for c in range(m):
                d = chk_ptr[c + 1] - chk_ptr[c]
                if minsum:
                    m1 = INFINITY
                    m2 = INFINITY
                    idx = -1
                    par = 0
                    for j in range(d):
                        x = v2c[chk_edges[chk_ptr[c] + j]]
                        a = fabs(x)
                        if x < 0:
                            par ^= 1
                        if a < m1:
                            m2 = m1
                            m1 = a
                            idx = j
                        elif a < m2:
                            m2 = a
                    for j in range(d):
                        e = chk_edges[chk_ptr[c] + j]
                        a = m2 if j == idx else m1
                        if (v2c[e] < 0) ^ par:
                            c2v[e] = -a
                        else:
                            c2v[e] = a
                else:
                    for j in range(d):
                        x = v2c[chk_edges[chk_ptr[c] + j]]
                        if x > TANH_CLIP:
                            x = TANH_CLIP
                        elif x < -TANH_CLIP:
                            x = -TANH_CLIP
                        buf[j] = tanh(x * 0.5)
                    _boxplus_check(&buf[0], &buf[dmax], d, &buf[2 * dmax])
                    for j in range(d):
                        c2v[chk_edges[chk_ptr[c] + j]] = 2.0 * atanh(buf[dmax + j])
            for v in range(n):
                s = llr[v]
                for e in range(var_ptr[v], var_ptr[v + 1]):
                    s = s + c2v[e]
                hard[v] = 1 if (s < 0 or (s == 0 and llr[v] < 0)) else 0
                for e in range(var_ptr[v], var_ptr[v + 1]):
                    v2c[e] = s - c2v[e]
            if _syndrome(chk_ptr, chk_edges, edge_var, hard, m, &unsat):
                ok = True
                used = it
                break
    return hard_a, used, ok, (0 if ok else unsat)


cdef inline long long _quantize(const double[:] thr, double x) noexcept nogil:
    # Number of thresholds strictly above x; thresholds are non-increasing.
    cdef Py_ssize_t lo = 0, hi = thr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if thr[mid] > x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline long long _quantize_ge(const double[:] thr, double x) noexcept nogil:
    # Number of thresholds at or above x: ties go to the higher index.
    cdef Py_ssize_t lo = 0, hi = thr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if thr[mid] >= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def decode_rcq(layout, const long long[::1] ch_sym, const double[::1] ch_recon,
               const double[:, ::1] check_tanh, const double[:, ::1] check_cut,
               const double[:, ::1] var_recon, const double[:, ::1] var_thr,
               bint ms, double nv_lo, double nv_hi):
    cdef const long long[::1] var_ptr = layout.var_ptr
    cdef const long long[::1] chk_ptr = layout.chk_ptr
    cdef const long long[::1] chk_edges = layout.chk_edges
    cdef const long long[::1] edge_var = layout.edge_var
    cdef Py_ssize_t n = layout.n_vars, m = layout.n_checks, E = edge_var.shape[0]
    cdef Py_ssize_t dmax = layout.max_check_degree
    cdef Py_ssize_t n_iter = var_recon.shape[0], K = var_recon.shape[1], half = K // 2
    v2c_a = np.empty(E, dtype=np.int64)
    c2v_a = np.empty(E, dtype=np.int64)
    rv_a = np.empty(E)
    hard_a = np.zeros(n, dtype=np.uint8)
    buf_a = np.empty(3 * dmax)
    cdef long long[::1] v2c = v2c_a, c2v = c2v_a
    cdef double[::1] rv = rv_a, buf = buf_a
    cdef unsigned char[::1] hard = hard_a
    cdef Py_ssize_t v, c, e, d, j, idx, i
    cdef long long sym, mag, m1, m2, omag
    cdef double s, x, ext
    cdef int par, neg, chneg, unsat = 0, used = <int>n_iter
    cdef bint ok = False
    with nogil:
        for v in range(n):
            for e in range(var_ptr[v], var_ptr[v + 1]):
                v2c[e] = ch_sym[v]
        for i in range(n_iter):
            for c in range(m):
                d = chk_ptr[c + 1] - chk_ptr[c]
                if ms:
                    m1 = K
                    m2 = K
                    idx = -1
                    par = 0
                    for j in range(d):
                        sym = v2c[chk_edges[chk_ptr[c] + j]]
                        if sym >= half:
                            par ^= 1
                            mag = sym - half + 1
                        else:
                            mag = half - sym
                        if mag < m1:
                            m2 = m1
                            m1 = mag
                            idx = j
                        elif mag < m2:
                            m2 = mag
                    for j in range(d):
                        e = chk_edges[chk_ptr[c] + j]
                        omag = m2 if j == idx else m1
                        neg = (v2c[e] >= half) ^ par
                        c2v[e] = half - 1 + omag if neg else half - omag
                else:
                    for j in range(d):
                        buf[j] = check_tanh[i, v2c[chk_edges[chk_ptr[c] + j]]]
                    _boxplus_check(&buf[0], &buf[dmax], d, &buf[2 * dmax])
                    for j in range(d):
                        c2v[chk_edges[chk_ptr[c] + j]] = _quantize(check_cut[i], buf[dmax + j])
            for e in range(E):
                rv[e] = var_recon[i, c2v[e]]
            for v in range(n):
                # Ties follow the channel decision, which keeps the decoder odd-symmetric.
                chneg = ch_sym[v] >= half
                s = ch_recon[ch_sym[v]]
                for e in range(var_ptr[v], var_ptr[v + 1]):
                    s = s + rv[e]
                x = s
                if x < nv_lo:
                    x = nv_lo
                elif x > nv_hi:
                    x = nv_hi
                hard[v] = 1 if (x < 0 or (x == 0 and chneg)) else 0
                for e in range(var_ptr[v], var_ptr[v + 1]):
                    ext = s - rv[e]
                    if ext < nv_lo:
                        ext = nv_lo
                    elif ext > nv_hi:
                        ext = nv_hi
                    if chneg:
                        v2c[e] = _quantize_ge(var_thr[i], ext)
                    else:
                        v2c[e] = _quantize(var_thr[i], ext)
            if _syndrome(chk_ptr, chk_edges, edge_var, hard, m, &unsat):
                ok = True
                used = <int>(i + 1)
                break
    return hard_a, used, ok, (0 if ok else unsat)
