# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels for the per-round reputation pass.

Same contract as ``repdpos._ref`` (the NumPy fallback); plain C loops over
float64 arrays of shape (raters, candidates).
"""

import numpy as np

BACKEND_NAME = "cython"


def weighted_counts_batch(rec_pos, past_pos, rec_neg, past_neg,
                          double recent_w, double past_w,
                          double positive_w, double negative_w):
    cdef double[:, :] rp = np.ascontiguousarray(rec_pos, dtype=np.float64)
    cdef double[:, :] pp = np.ascontiguousarray(past_pos, dtype=np.float64)
    cdef double[:, :] rn = np.ascontiguousarray(rec_neg, dtype=np.float64)
    cdef double[:, :] pn = np.ascontiguousarray(past_neg, dtype=np.float64)
    cdef Py_ssize_t n = rp.shape[0], m = rp.shape[1], i, j
    alpha_arr = np.empty((n, m), dtype=np.float64)
    beta_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, :] alpha = alpha_arr
    cdef double[:, :] beta = beta_arr
    for i in range(n):
        for j in range(m):
            alpha[i, j] = recent_w * positive_w * rp[i, j] + past_w * positive_w * pp[i, j]
            beta[i, j] = recent_w * negative_w * rn[i, j] + past_w * negative_w * pn[i, j]
    return alpha_arr, beta_arr


def local_opinions_batch(alpha, beta, link_quality):
    cdef double[:, :] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[:, :] b_in = np.ascontiguousarray(beta, dtype=np.float64)
    cdef double[:, :] lq = np.ascontiguousarray(link_quality, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], i, j
    cdef double total, u, certain
    b_arr = np.empty((n, m), dtype=np.float64)
    d_arr = np.empty((n, m), dtype=np.float64)
    u_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, :] b = b_arr
    cdef double[:, :] d = d_arr
    cdef double[:, :] uu = u_arr
    for i in range(n):
        for j in range(m):
            total = a[i, j] + b_in[i, j]
            if total > 0.0:
                u = 1.0 - lq[i, j]
                certain = 1.0 - u
                b[i, j] = certain * (a[i, j] / total)
                d[i, j] = certain * (b_in[i, j] / total)
                uu[i, j] = u
            else:
                b[i, j] = 0.0
                d[i, j] = 0.0
                uu[i, j] = 1.0
    return b_arr, d_arr, u_arr


def recommendation_weights_batch(alpha, beta, double scale):
    cdef double[:, :] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[:, :] b = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], i, j, count
    cdef double total, mean
    delta_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, :] delta = delta_arr
    for i in range(n):
        total = 0.0
        count = 0
        for j in range(m):
            if a[i, j] + b[i, j] > 0.0:
                total += a[i, j] + b[i, j]
                count += 1
        if count == 0:
            continue
        mean = total / count
        for j in range(m):
            delta[i, j] = scale * (a[i, j] + b[i, j]) / mean
    return delta_arr


def aggregate_excluding_self_batch(delta, stored_b, stored_d, stored_u, valid):
    cdef double[:, :] dl = np.ascontiguousarray(delta, dtype=np.float64)
    cdef double[:, :] sb = np.ascontiguousarray(stored_b, dtype=np.float64)
    cdef double[:, :] sd = np.ascontiguousarray(stored_d, dtype=np.float64)
    cdef double[:, :] su = np.ascontiguousarray(stored_u, dtype=np.float64)
    cdef double[:, :] va = np.ascontiguousarray(valid, dtype=np.float64)
    cdef Py_ssize_t n = dl.shape[0], m = dl.shape[1], i, j
    cdef double w, sw, sb_tot, sd_tot, su_tot, denom
    rb_arr = np.zeros((n, m), dtype=np.float64)
    rd_arr = np.zeros((n, m), dtype=np.float64)
    ru_arr = np.zeros((n, m), dtype=np.float64)
    have_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, :] rb = rb_arr
    cdef double[:, :] rd = rd_arr
    cdef double[:, :] ru = ru_arr
    cdef double[:, :] have = have_arr
    for j in range(m):
        sw = 0.0
        sb_tot = 0.0
        sd_tot = 0.0
        su_tot = 0.0
        for i in range(n):
            w = dl[i, j] * va[i, j]
            sw += w
            sb_tot += w * sb[i, j]
            sd_tot += w * sd[i, j]
            su_tot += w * su[i, j]
        for i in range(n):
            w = dl[i, j] * va[i, j]
            denom = sw - w
            if denom > 0.0:
                rb[i, j] = (sb_tot - w * sb[i, j]) / denom
                rd[i, j] = (sd_tot - w * sd[i, j]) / denom
                ru[i, j] = (su_tot - w * su[i, j]) / denom
                have[i, j] = 1.0
    return rb_arr, rd_arr, ru_arr, have_arr


def fuse_batch(local_b, local_d, local_u, rec_b, rec_d, rec_u, have):
    cdef double[:, :] lb = np.ascontiguousarray(local_b, dtype=np.float64)
    cdef double[:, :] ld = np.ascontiguousarray(local_d, dtype=np.float64)
    cdef double[:, :] lu = np.ascontiguousarray(local_u, dtype=np.float64)
    cdef double[:, :] rb = np.ascontiguousarray(rec_b, dtype=np.float64)
    cdef double[:, :] rd = np.ascontiguousarray(rec_d, dtype=np.float64)
    cdef double[:, :] ru = np.ascontiguousarray(rec_u, dtype=np.float64)
    cdef double[:, :] hv = np.ascontiguousarray(have, dtype=np.float64)
    cdef Py_ssize_t n = lb.shape[0], m = lb.shape[1], i, j
    cdef double denom
    fb_arr = np.empty((n, m), dtype=np.float64)
    fd_arr = np.empty((n, m), dtype=np.float64)
    fu_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, :] fb = fb_arr
    cdef double[:, :] fd = fd_arr
    cdef double[:, :] fu = fu_arr
    for i in range(n):
        for j in range(m):
            if (hv[i, j] == 0.0 or lu[i, j] == 0.0
                    or (ru[i, j] == 1.0 and rb[i, j] == 0.0 and rd[i, j] == 0.0)):
                fb[i, j] = lb[i, j]
                fd[i, j] = ld[i, j]
                fu[i, j] = lu[i, j]
            else:
                denom = lu[i, j] + ru[i, j] - ru[i, j] * lu[i, j]
                fb[i, j] = (lb[i, j] * ru[i, j] + rb[i, j] * lu[i, j]) / denom
                fd[i, j] = (ld[i, j] * ru[i, j] + rd[i, j] * lu[i, j]) / denom
                fu[i, j] = (ru[i, j] * lu[i, j]) / denom
    return fb_arr, fd_arr, fu_arr


def tsl_average_batch(stored_b, stored_u, valid):
    cdef double[:, :] sb = np.ascontiguousarray(stored_b, dtype=np.float64)
    cdef double[:, :] su = np.ascontiguousarray(stored_u, dtype=np.float64)
    cdef double[:, :] va = np.ascontiguousarray(valid, dtype=np.float64)
    cdef Py_ssize_t n = sb.shape[0], m = sb.shape[1], i, j
    cdef double t, sum_t, cnt, denom
    ave_arr = np.empty((n, m), dtype=np.float64)
    have_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, :] ave = ave_arr
    cdef double[:, :] have = have_arr
    for j in range(m):
        sum_t = 0.0
        cnt = 0.0
        for i in range(n):
            sum_t += va[i, j] * (sb[i, j] + 0.5 * su[i, j])
            cnt += va[i, j]
        for i in range(n):
            t = va[i, j] * (sb[i, j] + 0.5 * su[i, j])
            denom = cnt - va[i, j]
            if denom > 0.0:
                ave[i, j] = (sum_t - t) / denom
                have[i, j] = 1.0
            else:
                ave[i, j] = 0.5
    return ave_arr, have_arr
