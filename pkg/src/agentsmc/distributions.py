"""Count distributions used throughout the package.

Poisson-Binomial (PoiBin) laws of sums of independent Bernoullis, their
translated Poisson approximation, sums of two binomials, and the
conditional Bernoulli (CondBer) law of a Bernoulli vector given its sum.
"""
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from scipy.special import expit, logit

from . import kernels


@dataclass(frozen=True)
class DiscretePmf:
    """Masses on the integers ``offset, offset+1, ...``."""

    offset: int
    masses: np.ndarray

    def __call__(self, i):
        i = np.asarray(i) - self.offset
        ok = (i >= 0) & (i < self.masses.size)
        return np.where(ok, self.masses[np.clip(i, 0, self.masses.size - 1)], 0.0)

    @property
    def support(self):
        return np.arange(self.offset, self.offset + self.masses.size)


@dataclass(frozen=True)
class PmfTable:
    """Suffix Poisson-Binomial tables.

    ``q[i, n]`` is the probability that agents ``n, ..., N-1`` contain exactly
    ``i`` successes. Column ``N`` is the empty suffix (point mass at zero),
    so ``q`` has shape (N+1, N+1) and ``q[:, 0]`` is the full pmf.
    """

    alpha: np.ndarray
    q: np.ndarray

    @property
    def N(self):
        return self.alpha.size

    @property
    def pmf(self):
        return self.q[:, 0]


def _as_probs(alpha):
    alpha = np.asarray(alpha, dtype=float).ravel()
    if np.any(~np.isfinite(alpha)) or np.any(alpha < 0.0) or np.any(alpha > 1.0):
        raise ValueError("success probabilities must lie in [0, 1]")
    return alpha


def poibin_table(alpha):
    """Build every suffix PoiBin pmf by the backward recursion.

    q(i, n) = a_n q(i-1, n+1) + (1 - a_n) q(i, n+1), with q(0, N) = 1.
    Cost is O(N^2) time and memory.
    """
    alpha = _as_probs(alpha)
    N = alpha.size
    q = np.zeros((N + 1, N + 1))
    q[0, N] = 1.0
    for n in range(N - 1, -1, -1):
        a = alpha[n]
        b = 1.0 - a
        top = N - n
        q[1:top + 1, n] = a * q[0:top, n + 1] + b * q[1:top + 1, n + 1]
        q[0, n] = b * q[0, n + 1]
    return PmfTable(alpha=alpha, q=q)


def poibin_pmf(alpha):
    """PoiBin pmf on ``0..N``; ``N = 0`` gives a point mass at zero."""
    alpha = _as_probs(alpha)
    return kernels.poibin_pmf_rows(alpha[None, :])[0]


def poibin_pmf_rows(alpha):
    """Row-wise PoiBin pmfs for a (P, N) array of probabilities."""
    return kernels.poibin_pmf_rows(np.ascontiguousarray(alpha, dtype=float))


def _translated_poisson(mu, var, size):
    out = np.zeros(size + 1)
    if var <= 0.0:
        k = int(round(mu))
        if 0 <= k <= size:
            out[k] = 1.0
        return out
    shift = mu - var
    k = int(np.floor(shift))
    rate = var + (shift - k)
    lo = max(k, 0)
    if lo > size:
        out[size] = 1.0
        return out
    i = np.arange(lo, size + 1)
    out[lo:] = stats.poisson.pmf(i - k, rate)
    tot = out.sum()
    if tot <= 0.0:
        # all mass fell off the end of [0:size]; keep the nearest point
        out[min(max(int(round(mu)), 0), size)] = 1.0
        return out
    return out / tot


def transpoi_pmf(alpha, N=None):
    """Translated Poisson approximation of PoiBin(alpha) on ``0..N``.

    Matches mean and variance: a Poisson with rate
    ``var + frac(mu - var)`` shifted by ``floor(mu - var)``, truncated to
    ``[0:N]`` and renormalised.
    """
    alpha = _as_probs(alpha)
    if N is None:
        N = alpha.size
    mu = float(alpha.sum())
    var = float(np.sum(alpha * (1.0 - alpha)))
    return _translated_poisson(mu, var, N)


def sumbin_pmf(n1, p1, n2, p2):
    """Pmf of Bin(n1, p1) + Bin(n2, p2) on ``0..n1+n2``."""
    a = stats.binom.pmf(np.arange(n1 + 1), n1, p1)
    b = stats.binom.pmf(np.arange(n2 + 1), n2, p2)
    return np.convolve(a, b)


def transpoi_sumbin_pmf(n1, p1, n2, p2):
    """Translated Poisson approximation of ``sumbin_pmf``."""
    mu = n1 * p1 + n2 * p2
    var = n1 * p1 * (1.0 - p1) + n2 * p2 * (1.0 - p2)
    return _translated_poisson(mu, var, n1 + n2)


def condber_tilt(alpha, i):
    """Equivalent success probabilities with the same CondBer(., i) law.

    Shifting every log-odds by a common constant leaves the conditional
    law unchanged. The shift is chosen so the tilted probabilities sum to
    ``i``, which keeps the target count near the centre of the PoiBin and
    away from underflow. Entries equal to 0 or 1 are left alone.
    """
    alpha = _as_probs(alpha)
    free = (alpha > 0.0) & (alpha < 1.0)
    need = i - int((alpha == 1.0).sum())
    if need <= 0 or need >= int(free.sum()):
        return alpha
    lo = logit(alpha[free])
    shift = optimize.brentq(lambda c: expit(lo + c).sum() - need, -800.0 - lo.max(),
                            800.0 - lo.min(), xtol=1e-12)
    out = alpha.copy()
    out[free] = expit(lo + shift)
    return out


def condber_sample(rng, alpha, i, table=None):
    """Exact draw from CondBer(alpha, i) by sequential conditioning.

    Agent n is switched on with probability
    a_n q(r - 1, n + 1) / q(r, n), where r is the number of successes still
    to place; the last agent is forced. The kernel rebuilds ``q`` with
    per-column rescaling, so ``table`` is accepted but not needed.
    """
    alpha = _as_probs(alpha)
    i = int(i)
    # feasibility from the support, not the pmf, which may underflow
    if i < int((alpha == 1.0).sum()) or i > int((alpha > 0.0).sum()):
        raise ValueError(f"sum {i} has zero probability under PoiBin(alpha)")
    u = rng.random((1, alpha.size))
    return kernels.condber_sample_rows(condber_tilt(alpha, i)[None, :], np.array([i]), u)[0]


def condber_sample_rows(alpha, counts, u):
    """Row-wise CondBer draws driven by caller-supplied uniforms."""
    return kernels.condber_sample_rows(
        np.ascontiguousarray(alpha, dtype=float),
        np.ascontiguousarray(counts, dtype=np.int64),
        np.ascontiguousarray(u, dtype=float),
    )


def condber_logpmf(x, alpha, table=None):
    """log CondBer(x; alpha, sum(x)) through the sequential decomposition."""
    alpha = _as_probs(alpha)
    x = np.asarray(x).astype(np.int64).ravel()
    if table is None:
        table = poibin_table(alpha)
    q = table.q
    N = alpha.size
    r = int(x.sum())
    if q[r, 0] <= 0.0:
        return -np.inf
    out = 0.0
    for n in range(N):
        if r == 0:
            if x[n:].any():
                return -np.inf
            break
        num1 = alpha[n] * q[r - 1, n + 1]
        p1 = num1 / q[r, n]
        if x[n]:
            out += np.log(p1) if p1 > 0 else -np.inf
            r -= 1
        else:
            out += np.log1p(-p1) if p1 < 1 else -np.inf
    return out


def condber_swap_step(rng, x, alpha):
    """One Metropolis swap move leaving CondBer(alpha, sum(x)) invariant.

    Picks a zero n0 and a one n1 uniformly and exchanges them with
    probability min(1, a_n0 (1 - a_n1) / (a_n1 (1 - a_n0))).
    """
    x = np.array(x, dtype=np.uint8)
    ones = np.flatnonzero(x == 1)
    zeros = np.flatnonzero(x == 0)
    if ones.size == 0 or zeros.size == 0:
        return x
    n0 = zeros[rng.integers(zeros.size)]
    n1 = ones[rng.integers(ones.size)]
    a0, a1 = alpha[n0], alpha[n1]
    num = a0 * (1.0 - a1)
    den = a1 * (1.0 - a0)
    u = rng.random()
    if num >= den or u * den < num:
        x[n0], x[n1] = 1, 0
    return x


def transpoi_pmf_rows(alpha):
    """Row-wise ``transpoi_pmf`` for a (P, N) array, vectorised over rows."""
    alpha = np.asarray(alpha, dtype=float)
    P, N = alpha.shape
    mu = alpha.sum(axis=1)
    var = (alpha * (1.0 - alpha)).sum(axis=1)
    out = np.zeros((P, N + 1))
    degenerate = var <= 0.0
    if degenerate.any():
        k = np.clip(np.rint(mu[degenerate]).astype(np.int64), 0, N)
        out[np.flatnonzero(degenerate), k] = 1.0
    live = ~degenerate
    if live.any():
        shift = mu[live] - var[live]
        k = np.floor(shift)
        rate = var[live] + (shift - k)
        i = np.arange(N + 1)[None, :] - k[:, None]
        pm = np.where(i >= 0, stats.poisson.pmf(np.maximum(i, 0), rate[:, None]), 0.0)
        out[live] = pm / pm.sum(axis=1, keepdims=True)
    return out
