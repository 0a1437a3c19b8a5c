"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same functions with the same in-place semantics.
"""

import math

import numpy as np

LOG_HALF = math.log(0.5)


def run_groupwise_vaw(X, act, y, a_inv, b, R, C, log_prior, mix, uniforms, fold=True):
    """Fused groupwise loop with one VAW learner per subsequence.

    ``a_inv`` (K, d, d), ``b`` (K, d), ``R`` and ``C`` (K,) are updated in
    place.  ``uniforms`` supplies one draw per round in sample mode.  Returns
    ``(played, played_loss, expert_loss, chosen)``; ``chosen`` is -1 in mix
    mode.  ``fold=False`` predicts ``b^T A^{-1} x`` instead of the VAW
    ``b^T (A + x x^T)^{-1} x``.  Every round must have at least one active
    subsequence.
    """
    T, d = X.shape
    K = act.shape[1]
    played = np.empty(T)
    played_loss = np.empty(T)
    expert_loss = np.empty((T, K))
    chosen = np.full(T, -1, dtype=np.int64)
    lw = np.empty(K)
    for t in range(T):
        x = X[t]
        w = act[t]
        yt = y[t]
        U = a_inv @ x
        s = U @ x
        z = np.einsum("kd,kd->k", b, U)
        if fold:
            z = z / (1.0 + s)
        zc = np.minimum(1.0, np.maximum(0.0, z))
        el = (zc - yt) ** 2
        expert_loss[t] = el

        denom = 3.0 * (C + 1.0)
        up = np.maximum(R + 1.0, 0.0)
        down = np.maximum(R - 1.0, 0.0)
        a = up * up / denom
        bb = down * down / denom
        lw.fill(-np.inf)
        live = (w > 0) & (a > 0)
        if live.any():
            lw[live] = (
                a[live] + np.log(-np.expm1(bb[live] - a[live])) + LOG_HALF
                + log_prior[live] + np.log(w[live])
            )
        else:
            on = w > 0
            lw[on] = log_prior[on] + np.log(w[on])
        p = np.exp(lw - lw.max())
        p /= p.sum()

        if mix:
            pred = min(1.0, max(0.0, float(p @ zc)))
        else:
            u = uniforms[t]
            cum = 0.0
            k_star = -1
            k_star_last = -1
            for k in range(K):
                if p[k] > 0:
                    k_star_last = k
                cum += p[k]
                if u < cum:
                    k_star = k
                    break
            if k_star < 0:
                k_star = k_star_last
            chosen[t] = k_star
            pred = zc[k_star]
        loss = (pred - yt) ** 2
        played[t] = pred
        played_loss[t] = loss

        r = w * (loss - el)
        R += r
        C += np.abs(r)

        coef = w / (1.0 + w * s)
        a_inv -= coef[:, None, None] * (U[:, :, None] * U[:, None, :])
        b += (w * yt)[:, None] * x[None, :]
    return played, played_loss, expert_loss, chosen


def run_baseline_vaw(X, y, lam):
    """Raw one-step-ahead ridge predictions ``b^T A_{t-1}^{-1} x_t``."""
    T, d = X.shape
    a_inv = np.eye(d) / lam
    b = np.zeros(d)
    out = np.empty(T)
    for t in range(T):
        x = X[t]
        u = a_inv @ x
        out[t] = b @ u
        a_inv -= np.outer(u, u) / (1.0 + x @ u)
        b += y[t] * x
    return out
