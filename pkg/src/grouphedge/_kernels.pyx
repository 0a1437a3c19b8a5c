# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Semantics mirror ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, expm1, INFINITY

cnp.import_array()

cdef double LOG_HALF = log(0.5)


def run_groupwise_vaw(double[:, ::1] X, double[:, ::1] act, double[::1] y,
                      double[:, :, ::1] a_inv, double[:, ::1] b,
                      double[::1] R, double[::1] C, double[::1] log_prior,
                      bint mix, double[::1] uniforms, bint fold=True):
    cdef Py_ssize_t T = X.shape[0], d = X.shape[1], K = act.shape[1]
    cdef Py_ssize_t t, k, i, j, k_star, k_last
    cdef double yt, w, s, num, z, up, down, a, bb, denom, m, total, cum, u
    cdef double pred, loss, r, coef, ui

    played_arr = np.empty(T)
    played_loss_arr = np.empty(T)
    expert_loss_arr = np.empty((T, K))
    chosen_arr = np.full(T, -1, dtype=np.int64)
    cdef double[::1] played = played_arr
    cdef double[::1] played_loss = played_loss_arr
    cdef double[:, ::1] expert_loss = expert_loss_arr
    cdef long long[::1] chosen = chosen_arr

    cdef double[:, ::1] U = np.empty((K, d))
    cdef double[::1] S = np.empty(K)
    cdef double[::1] zc = np.empty(K)
    cdef double[::1] lw = np.empty(K)
    cdef double[::1] p = np.empty(K)
    cdef bint any_live

    with nogil:
        for t in range(T):
            yt = y[t]
            # proposals
            for k in range(K):
                num = 0.0
                s = 0.0
                for i in range(d):
                    ui = 0.0
                    for j in range(d):
                        ui = ui + a_inv[k, i, j] * X[t, j]
                    U[k, i] = ui
                    s = s + ui * X[t, i]
                    num = num + b[k, i] * ui
                S[k] = s
                z = num / (1.0 + s) if fold else num
                if z < 0.0:
                    z = 0.0
                elif z > 1.0:
                    z = 1.0
                zc[k] = z
                expert_loss[t, k] = (z - yt) * (z - yt)

            # hedge distribution (log domain)
            any_live = False
            m = -INFINITY
            for k in range(K):
                lw[k] = -INFINITY
                w = act[t, k]
                if w > 0.0:
                    denom = 3.0 * (C[k] + 1.0)
                    up = R[k] + 1.0
                    if up < 0.0:
                        up = 0.0
                    down = R[k] - 1.0
                    if down < 0.0:
                        down = 0.0
                    a = up * up / denom
                    bb = down * down / denom
                    if a > 0.0:
                        lw[k] = a + log(-expm1(bb - a)) + LOG_HALF + log_prior[k] + log(w)
                        any_live = True
            if not any_live:
                for k in range(K):
                    w = act[t, k]
                    if w > 0.0:
                        lw[k] = log_prior[k] + log(w)
            for k in range(K):
                if lw[k] > m:
                    m = lw[k]
            total = 0.0
            for k in range(K):
                p[k] = exp(lw[k] - m)
                total = total + p[k]
            for k in range(K):
                p[k] = p[k] / total

            # play
            if mix:
                pred = 0.0
                for k in range(K):
                    pred = pred + p[k] * zc[k]
                if pred < 0.0:
                    pred = 0.0
                elif pred > 1.0:
                    pred = 1.0
            else:
                u = uniforms[t]
                cum = 0.0
                k_star = -1
                k_last = -1
                for k in range(K):
                    if p[k] > 0.0:
                        k_last = k
                    cum = cum + p[k]
                    if u < cum:
                        k_star = k
                        break
                if k_star < 0:
                    k_star = k_last
                chosen[t] = k_star
                pred = zc[k_star]
            loss = (pred - yt) * (pred - yt)
            played[t] = pred
            played_loss[t] = loss

            # hedge + learner updates
            for k in range(K):
                w = act[t, k]
                r = w * (loss - expert_loss[t, k])
                R[k] = R[k] + r
                if r < 0.0:
                    C[k] = C[k] - r
                else:
                    C[k] = C[k] + r
                if w > 0.0:
                    coef = w / (1.0 + w * S[k])
                    # coef * (u_i u_j) keeps a_inv exactly symmetric
                    for i in range(d):
                        ui = U[k, i]
                        for j in range(d):
                            a_inv[k, i, j] = a_inv[k, i, j] - coef * (ui * U[k, j])
                        b[k, i] = b[k, i] + (w * yt) * X[t, i]
    return played_arr, played_loss_arr, expert_loss_arr, chosen_arr


def run_baseline_vaw(double[:, ::1] X, double[::1] y, double lam):
    cdef Py_ssize_t T = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t t, i, j
    cdef double s, num, ui, coef
    a_inv_arr = np.eye(d) / lam
    cdef double[:, ::1] a_inv = a_inv_arr
    cdef double[::1] bvec = np.zeros(d)
    cdef double[::1] u = np.empty(d)
    out_arr = np.empty(T)
    cdef double[::1] out = out_arr
    with nogil:
        for t in range(T):
            s = 0.0
            num = 0.0
            for i in range(d):
                ui = 0.0
                for j in range(d):
                    ui = ui + a_inv[i, j] * X[t, j]
                u[i] = ui
                s = s + ui * X[t, i]
                num = num + bvec[i] * ui
            out[t] = num
            coef = 1.0 + s
            for i in range(d):
                ui = u[i]
                for j in range(d):
                    a_inv[i, j] = a_inv[i, j] - (ui * u[j]) / coef
                bvec[i] = bvec[i] + y[t] * X[t, i]
    return out_arr
