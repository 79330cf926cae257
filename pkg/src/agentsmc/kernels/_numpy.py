"""Pure-numpy implementations of the hot kernels.

Loops run over agents and vectorise over particles, so these are usable
(if slower) when numba is unavailable or disabled.
"""
import numpy as np


def poibin_pmf_rows(alpha):
    alpha = np.asarray(alpha, dtype=float)
    P, N = alpha.shape
    q = np.zeros((P, N + 1))
    q[:, 0] = 1.0
    for n in range(N - 1, -1, -1):
        a = alpha[:, n:n + 1]
        b = 1.0 - a
        top = N - n
        q[:, 1:top + 1] = a * q[:, 0:top] + b * q[:, 1:top + 1]
        q[:, 0] = b[:, 0] * q[:, 0]
    return q


def condber_sample_rows(alpha, counts, u):
    alpha = np.asarray(alpha, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    P, N = alpha.shape
    x = np.zeros((P, N), np.uint8)
    if N == 0 or P == 0:
        return x
    cmax = int(counts.max())
    q = np.zeros((N + 1, P, cmax + 1))
    q[N, :, 0] = 1.0
    for n in range(N - 1, -1, -1):
        a = alpha[:, n:n + 1]
        b = 1.0 - a
        q[n, :, 0] = b[:, 0] * q[n + 1, :, 0]
        q[n, :, 1:] = a * q[n + 1, :, :-1] + b * q[n + 1, :, 1:]
        m = q[n].max(axis=1, keepdims=True)
        np.divide(q[n], m, out=q[n], where=m > 0.0)
    # columns above counts[p] are never read for row p
    rows = np.arange(P)
    r = counts.copy()
    for n in range(N - 1):
        a = alpha[:, n]
        live = r > 0
        rm1 = np.maximum(r - 1, 0)
        num = a * q[n + 1, rows, rm1]
        den = num + (1.0 - a) * q[n + 1, rows, r]
        take = live & (den > 0.0) & (u[:, n] * den < num)
        x[take, n] = 1
        r = r - take
    x[r > 0, N - 1] = 1
    return x


def sir_bif_step(log_psi_next, log_bin_s, log_bin_r, log_obs, N):
    out = np.full((N + 1, N + 1), -np.inf)
    r_idx = np.arange(N + 1)
    for s in range(N + 1):
        s2 = np.arange(s + 1)
        for i in range(N + 1 - s):
            if log_obs[i] == -np.inf:
                continue
            r = r_idx[:i + 1]
            inext = i - r[None, :] + s - s2[:, None]
            v = (log_bin_s[s, i, :s + 1][:, None] + log_bin_r[i, :i + 1][None, :]
                 + log_psi_next[s2[:, None], inext])
            m = v.max()
            if m == -np.inf:
                continue
            out[s, i] = log_obs[i] + m + np.log(np.exp(v - m).sum())
    return out


def categorical_log_rows(logw, u):
    """Inverse-CDF draw of one index per row from unnormalised log weights."""
    logw = np.asarray(logw, dtype=float)
    m = logw.max(axis=1, keepdims=True)
    w = np.exp(logw - m)
    c = np.cumsum(w, axis=1)
    target = np.asarray(u) * c[:, -1]
    idx = (c <= target[:, None]).sum(axis=1)
    return np.minimum(idx, logw.shape[1] - 1)
