"""Interpreted versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the compiled module bit for bit; the test
suite checks this on random inputs. Used when the extension is not built or
when ``CDRINCOME_PURE=1`` is set.
"""
from __future__ import annotations

import numpy as np

EGO_WIDTH = 8
CAT_WIDTH = 16


def level_features(inc_ptr, inc_edge, inc_other, inc_out, calls, time, sms,
                   node_cat, targets, max_level, with_cat):
    ptr = inc_ptr.tolist()
    e_of = inc_edge.tolist()
    w_of = inc_other.tolist()
    out_of = inc_out.tolist()
    calls = calls.tolist()
    time = time.tolist()
    sms = sms.tolist()
    cat = node_cat.tolist()
    n_nodes = len(ptr) - 1
    block = EGO_WIDTH + (CAT_WIDTH if with_cat else 0)
    result = np.zeros((len(targets), block * max_level), dtype=np.float64)

    dist = [-1] * n_nodes
    for t, v in enumerate(targets.tolist()):
        row = [0.0] * (block * max_level)
        dist[v] = 0
        touched = [v]
        ring = [v]
        for n in range(1, max_level + 1):
            base = (n - 1) * block
            nxt = []
            seen_in: set[int] = set()
            seen_out: set[int] = set()
            for u in ring:
                for j in range(ptr[u], ptr[u + 1]):
                    w = w_of[j]
                    if dist[w] == -1:
                        dist[w] = n
                        nxt.append(w)
                        touched.append(w)
                    if dist[w] != n:
                        continue
                    e = e_of[j]
                    d = 4 if out_of[j] else 0
                    row[base + d] += calls[e]
                    row[base + d + 1] += time[e]
                    row[base + d + 2] += sms[e]
                    seen = seen_out if d else seen_in
                    new_contact = w not in seen
                    if new_contact:
                        seen.add(w)
                        row[base + d + 3] += 1
                    c = cat[w]
                    if with_cat and c >= 0:
                        k = base + EGO_WIDTH + 2 * d + c
                        row[k] += calls[e]
                        row[k + 2] += time[e]
                        row[k + 4] += sms[e]
                        if new_contact:
                            row[k + 6] += 1
            ring = nxt
        for w in touched:
            dist[w] = -1
        result[t] = row
    return result


def best_split(X, y, idx, feat_order, k):
    """Best Gini split of rows ``idx`` over the first ``k`` non-constant features.

    Returns ``(feature, threshold, score)`` with ``feature == -1`` when every
    candidate is constant. ``score`` is the sum over children of
    ``(pos**2 + neg**2) / size``; larger is purer.
    """
    n = len(idx)
    if n < 2:
        return -1, 0.0, -1.0
    yy = y[idx].astype(np.float64)
    total_pos = yy.sum()
    best_f, best_thr, best_score = -1, 0.0, -1.0
    evaluated = 0
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    for f in feat_order.tolist():
        if evaluated >= k:
            break
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        if v[0] == v[-1]:
            continue
        evaluated += 1
        pl = np.cumsum(yy[order])[:-1]
        ql = nl - pl
        pr = total_pos - pl
        qr = nr - pr
        score = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr
        valid = v[:-1] < v[1:]
        score = np.where(valid, score, -1.0)
        i = int(np.argmax(score))
        if score[i] > best_score:
            a, b = v[i], v[i + 1]
            thr = (a + b) / 2.0
            if thr >= b:
                thr = a
            best_f, best_thr, best_score = f, float(thr), float(score[i])
    return best_f, best_thr, best_score
