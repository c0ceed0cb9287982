# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels: ring-level edge aggregation and Gini split search.

Must stay result-identical to ``_fallback.py``.
"""
import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort

cnp.import_array()

cdef enum:
    EGO_WIDTH = 8
    CAT_WIDTH = 16


def level_features(const cnp.int64_t[::1] inc_ptr,
                   const cnp.int64_t[::1] inc_edge,
                   const cnp.int64_t[::1] inc_other,
                   const cnp.int8_t[::1] inc_out,
                   const cnp.int64_t[::1] calls,
                   const cnp.int64_t[::1] time,
                   const cnp.int64_t[::1] sms,
                   const cnp.int8_t[::1] node_cat,
                   const cnp.int64_t[::1] targets,
                   int max_level,
                   bint with_cat):
    cdef Py_ssize_t n_nodes = inc_ptr.shape[0] - 1
    cdef Py_ssize_t n_targets = targets.shape[0]
    cdef int block = EGO_WIDTH + (CAT_WIDTH if with_cat else 0)
    result_arr = np.zeros((n_targets, block * max_level), dtype=np.float64)
    cdef double[:, ::1] result = result_arr

    cdef vector[int] dist = vector[int](n_nodes, -1)
    cdef vector[cnp.int64_t] stamp_in = vector[cnp.int64_t](n_nodes, -1)
    cdef vector[cnp.int64_t] stamp_out = vector[cnp.int64_t](n_nodes, -1)
    cdef vector[cnp.int64_t] touched, ring, nxt
    cdef Py_ssize_t t, j, r, base, d, k
    cdef cnp.int64_t v, u, w, e, token
    cdef int n, c
    cdef bint new_contact
    cdef double dc, dt, ds

    with nogil:
        for t in range(n_targets):
            v = targets[t]
            dist[v] = 0
            touched.clear()
            touched.push_back(v)
            ring.clear()
            ring.push_back(v)
            for n in range(1, max_level + 1):
                base = (n - 1) * block
                token = t * max_level + (n - 1)
                nxt.clear()
                for r in range(<Py_ssize_t>ring.size()):
                    u = ring[r]
                    for j in range(inc_ptr[u], inc_ptr[u + 1]):
                        w = inc_other[j]
                        if dist[w] == -1:
                            dist[w] = n
                            nxt.push_back(w)
                            touched.push_back(w)
                        if dist[w] != n:
                            continue
                        e = inc_edge[j]
                        dc = <double>calls[e]
                        dt = <double>time[e]
                        ds = <double>sms[e]
                        if inc_out[j]:
                            d = 4
                            new_contact = stamp_out[w] != token
                            stamp_out[w] = token
                        else:
                            d = 0
                            new_contact = stamp_in[w] != token
                            stamp_in[w] = token
                        result[t, base + d] += dc
                        result[t, base + d + 1] += dt
                        result[t, base + d + 2] += ds
                        if new_contact:
                            result[t, base + d + 3] += 1
                        c = node_cat[w]
                        if with_cat and c >= 0:
                            k = base + EGO_WIDTH + 2 * d + c
                            result[t, k] += dc
                            result[t, k + 2] += dt
                            result[t, k + 4] += ds
                            if new_contact:
                                result[t, k + 6] += 1
                ring.swap(nxt)
            for r in range(<Py_ssize_t>touched.size()):
                dist[touched[r]] = -1
    return result_arr


def best_split(const double[:, ::1] X,
               const cnp.int8_t[::1] y,
               const cnp.int64_t[::1] idx,
               const cnp.int64_t[::1] feat_order,
               int k):
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t i, fi
    cdef cnp.int64_t f
    cdef vector[pair[double, int]] buf = vector[pair[double, int]](n)
    cdef double total_pos = 0
    cdef double pl, ql, pr, qr, nl, nr, score, a, b, thr
    cdef double best_score = -1.0, best_thr = 0.0
    cdef cnp.int64_t best_f = -1
    cdef int evaluated = 0

    if n < 2:
        return -1, 0.0, -1.0
    with nogil:
        for i in range(n):
            total_pos += y[idx[i]]
        for fi in range(feat_order.shape[0]):
            if evaluated >= k:
                break
            f = feat_order[fi]
            for i in range(n):
                buf[i].first = X[idx[i], f]
                buf[i].second = y[idx[i]]
            sort(buf.begin(), buf.end())
            if buf[0].first == buf[n - 1].first:
                continue
            evaluated += 1
            pl = 0
            for i in range(n - 1):
                pl += buf[i].second
                if not (buf[i].first < buf[i + 1].first):
                    continue
                nl = <double>(i + 1)
                nr = <double>n - nl
                ql = nl - pl
                pr = total_pos - pl
                qr = nr - pr
                score = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr
                if score > best_score:
                    a = buf[i].first
                    b = buf[i + 1].first
                    thr = (a + b) / 2.0
                    if thr >= b:
                        thr = a
                    best_f = f
                    best_thr = thr
                    best_score = score
    return best_f, best_thr, best_score
