"""Backward information filters on the homogenised count chains.

The coarse chain replaces every agent's rates with (cluster) means, so the
infected count (SIS) or the (susceptible, infected) pair (SIR) is itself
Markov. Its backward filter psi_t approximates p(y_{t:T} | x_t) as a
function of counts and serves as the twisting function for controlled SMC.
All tables are held as natural logs.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from ..distributions import sumbin_pmf, transpoi_sumbin_pmf
from ..sis_model import obs_log_table


@dataclass
class BifTable:
    """log psi_t for t = 0..T.

    SIS: arrays indexed by infected count, or by per-cluster counts when
    ``labels`` is given. SIR: (N+1, N+1) arrays over [s, i] for t < T and
    a vector over i at t = T.
    """

    log_psi: list
    kind: str
    approx: str
    labels: np.ndarray | None = None

    @property
    def T(self):
        return len(self.log_psi) - 1

    @property
    def cluster_sizes(self):
        if self.labels is None:
            return None
        return np.bincount(self.labels)

    def log_psi_at(self, t, counts):
        """Evaluate log psi_t at integer counts (tuple of arrays for clusters)."""
        if self.labels is None or self.kind != "sis":
            return self.log_psi[t][counts]
        return self.log_psi[t][tuple(counts)]


def _sumbin(approx):
    if approx == "exact":
        return sumbin_pmf
    if approx == "transpoi":
        return transpoi_sumbin_pmf
    raise ValueError(f"unknown approximation {approx!r}")


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def sis_coarse_transition(N, lam_bar, gam_bar, approx="exact"):
    """(N+1, N+1) matrix M[i, i'] = SumBin(i'; N-i, lam i/N, i, 1-gam)."""
    sb = _sumbin(approx)
    M = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        M[i] = sb(N - i, lam_bar * i / N, i, 1.0 - gam_bar)
    return M


def bif_sis(y, rates, rho, approx="exact"):
    """Backward filter over infected counts, or over per-cluster counts when
    ``rates`` carries more than one cluster."""
    y = np.asarray(y)
    N = rates.N
    T = y.size - 1
    if rates.K > 1:
        return _bif_sis_clustered(y, rates, rho, approx)
    logg = obs_log_table(y, N, rho)
    logM = _log(sis_coarse_transition(N, rates.lam_bar[0], rates.gam_bar[0], approx))
    out = [None] * (T + 1)
    out[T] = logg[T]
    for t in range(T - 1, -1, -1):
        out[t] = logg[t] + logsumexp(logM + out[t + 1][None, :], axis=1)
    return BifTable(out, "sis", approx)


def _bif_sis_clustered(y, rates, rho, approx):
    N = rates.N
    T = y.size - 1
    labels = rates.labels
    sizes = np.bincount(labels)
    K = sizes.size
    sb = _sumbin(approx)
    shape = tuple(int(n) + 1 for n in sizes)
    grids = np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")
    total = sum(grids)
    logg = obs_log_table(y, N, rho)
    # per-cluster coarse transitions for every global infected count I
    mats = [np.zeros((N + 1, shape[k], shape[k])) for k in range(K)]
    for I in range(N + 1):
        for k in range(K):
            nk = int(sizes[k])
            for ik in range(min(nk, I) + 1):
                mats[k][I, ik] = sb(nk - ik, rates.lam_bar[k] * I / N, ik, 1.0 - rates.gam_bar[k])
    out = [None] * (T + 1)
    out[T] = logg[T][total]
    for t in range(T - 1, -1, -1):
        nxt = out[t + 1]
        m = nxt.max()
        lin = np.exp(nxt - m) if m > -np.inf else np.zeros(shape)
        expect = np.zeros(shape)
        for I in range(N + 1):
            sel = total == I
            if not sel.any():
                continue
            R = lin
            for k in range(K):
                R = np.moveaxis(np.tensordot(mats[k][I], R, axes=([1], [k])), 0, k)
            expect[sel] = R[sel]
        out[t] = logg[t][total] + _log(expect) + m
    return BifTable(out, "sis", approx, labels=labels)


def bif_sir(y, rates, rho, approx="exact"):
    """Backward filter over (s, i) for the homogenised SIR chain."""
    from .. import kernels

    y = np.asarray(y)
    N = rates.N
    T = y.size - 1
    lam, gam = rates.lam_bar[0], rates.gam_bar[0]
    sb = _sumbin(approx)
    logg = obs_log_table(y, N, rho)
    out = [None] * (T + 1)
    out[T] = logg[T]
    if T == 0:
        return BifTable(out, "sir", approx)
    t = T - 1
    tab = np.full((N + 1, N + 1), -np.inf)
    for s in range(N + 1):
        for i in range(N + 1 - s):
            if logg[t][i] == -np.inf:
                continue
            p = sb(s, lam * i / N, i, 1.0 - gam)
            tab[s, i] = logg[t][i] + logsumexp(_log(p) + out[T][:s + i + 1])
    out[t] = tab
    if T >= 2:
        log_bin_s = np.full((N + 1, N + 1, N + 1), -np.inf)
        for s, i in product(range(N + 1), range(N + 1)):
            if s + i <= N:
                log_bin_s[s, i, :s + 1] = stats.binom.logpmf(np.arange(s + 1), s, 1.0 - lam * i / N)
        log_bin_r = np.full((N + 1, N + 1), -np.inf)
        for i in range(N + 1):
            log_bin_r[i, :i + 1] = stats.binom.logpmf(np.arange(i + 1), i, gam)
        for t in range(T - 2, -1, -1):
            out[t] = kernels.sir_bif_step(np.ascontiguousarray(out[t + 1]), log_bin_s, log_bin_r,
                                          np.ascontiguousarray(logg[t]), N)
    return BifTable(out, "sir", approx)
