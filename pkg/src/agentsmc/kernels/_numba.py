"""numba implementations of the hot kernels.

Loops mirror the numpy versions in ``_numpy.py`` operation for operation so
that both backends agree to the last bit on the sampling kernels.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def poibin_pmf_rows(alpha):
    """Poisson-Binomial pmf of each row of ``alpha``, shape (P, N+1).

    Agents are absorbed from the last to the first, which is the suffix
    recursion q(i, n) = a_n q(i-1, n+1) + (1 - a_n) q(i, n+1).
    """
    P, N = alpha.shape
    out = np.zeros((P, N + 1))
    for p in range(P):
        q = out[p]
        q[0] = 1.0
        for n in range(N - 1, -1, -1):
            a = alpha[p, n]
            b = 1.0 - a
            top = N - n
            for i in range(top, 0, -1):
                q[i] = a * q[i - 1] + b * q[i]
            q[0] = b * q[0]
    return out


@njit(cache=True)
def condber_sample_rows(alpha, counts, u):
    """Draw one conditional Bernoulli vector per row.

    Row p is a draw of x in {0,1}^N with independent Ber(alpha[p]) marginals
    conditioned on sum(x) == counts[p]. ``u`` holds one uniform per agent;
    agent n of row p consumes ``u[p, n]``.
    """
    P, N = alpha.shape
    x = np.zeros((P, N), np.uint8)
    if N == 0:
        return x
    cmax = 0
    for p in range(P):
        if counts[p] > cmax:
            cmax = counts[p]
    q = np.zeros((N + 1, cmax + 1))
    for p in range(P):
        c = counts[p]
        # suffix tables, each column rescaled to max 1 to avoid underflow;
        # all cmax + 1 columns are kept so scaling matches the numpy path
        for r in range(cmax + 1):
            q[N, r] = 0.0
        q[N, 0] = 1.0
        for n in range(N - 1, -1, -1):
            a = alpha[p, n]
            b = 1.0 - a
            q[n, 0] = b * q[n + 1, 0]
            for r in range(1, cmax + 1):
                q[n, r] = a * q[n + 1, r - 1] + b * q[n + 1, r]
            m = 0.0
            for r in range(cmax + 1):
                if q[n, r] > m:
                    m = q[n, r]
            if m > 0.0:
                for r in range(cmax + 1):
                    q[n, r] = q[n, r] / m
        r = c
        for n in range(N - 1):
            if r > 0:
                a = alpha[p, n]
                num = a * q[n + 1, r - 1]
                den = num + (1.0 - a) * q[n + 1, r]
                if den > 0.0 and u[p, n] * den < num:
                    x[p, n] = 1
                    r -= 1
        if r > 0:
            x[p, N - 1] = 1
    return x


@njit(cache=True)
def sir_bif_step(log_psi_next, log_bin_s, log_bin_r, log_obs, N):
    """One backward step of the coarse SIR filter for t < T-1.

    ``log_bin_s[s, i, s2]`` is log Bin(s2; s, 1 - lam*i/N) and
    ``log_bin_r[i, r]`` is log Bin(r; i, gam). Entries with s + i > N are -inf.
    """
    out = np.full((N + 1, N + 1), -np.inf)
    for s in range(N + 1):
        for i in range(N + 1 - s):
            if log_obs[i] == -np.inf:
                continue
            m = -np.inf
            for s2 in range(s + 1):
                ls = log_bin_s[s, i, s2]
                if ls == -np.inf:
                    continue
                for r in range(i + 1):
                    v = ls + log_bin_r[i, r] + log_psi_next[s2, i - r + s - s2]
                    if v > m:
                        m = v
            if m == -np.inf:
                continue
            tot = 0.0
            for s2 in range(s + 1):
                ls = log_bin_s[s, i, s2]
                if ls == -np.inf:
                    continue
                for r in range(i + 1):
                    tot += np.exp(ls + log_bin_r[i, r] + log_psi_next[s2, i - r + s - s2] - m)
            out[s, i] = log_obs[i] + m + np.log(tot)
    return out
