"""Particle filters for the SIS model.

Bootstrap (prior proposals), fully adapted auxiliary (locally optimal
proposals through PoiBin count marginals and CondBer configurations) and
controlled SMC twisted by the backward information filter.
"""
import numpy as np
from scipy.special import logsumexp

from .. import kernels
from ..distributions import condber_sample_rows, poibin_pmf_rows, transpoi_pmf_rows
from ..sis_model import obs_log_table, sis_probs
from .bif import bif_sis
from .core import ess, log_mean_exp, mark_collapse, multinomial_resample, new_system, \
    normalise_log_weights


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _count_pmf_rows(approx):
    if approx == "exact":
        return poibin_pmf_rows
    if approx == "transpoi":
        return transpoi_pmf_rows
    raise ValueError(f"unknown approximation {approx!r}")


def _support_mask(alpha):
    """0 on counts an exact PoiBin can reach, -inf elsewhere."""
    i = np.arange(alpha.shape[1] + 1)[None, :]
    lo = (alpha >= 1.0).sum(axis=1)[:, None]
    hi = (alpha > 0.0).sum(axis=1)[:, None]
    return np.where((i >= lo) & (i <= hi), 0.0, -np.inf)


def _setup(model, y, theta, clusters=None):
    theta = model.theta if theta is None else theta
    rates = model.rates(theta, clusters)
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("observations must be a non-empty 1-d sequence")
    if np.any(y < 0):
        raise ValueError("observations must be non-negative")
    return theta, rates, y, y.size - 1, obs_log_table(y, model.N, theta.rho)


def run_bpf_sis(model, y, P, rng, theta=None):
    """Bootstrap particle filter: propagate, weight by g(y_t | x_t), resample."""
    theta, rates, y, T, logg = _setup(model, y, theta)
    N = model.N
    out = new_system(T, P, N)
    X = (rng.random((P, N)) < rates.alpha0).astype(np.uint8)
    for t in range(T + 1):
        if t > 0:
            A = multinomial_resample(rng, normalise_log_weights(out.log_weights[t - 1]))
            out.ancestors[t - 1] = A
            alpha = sis_probs(X, rates, model.network)[A]
            X = (rng.random((P, N)) < alpha).astype(np.uint8)
        out.states[t] = X
        lw = logg[t][X.sum(axis=1)]
        out.log_weights[t] = lw
        inc = log_mean_exp(lw)
        if inc == -np.inf:
            return mark_collapse(out, t)
        out.log_increments[t] = inc
        out.ess[t] = ess(lw)
    out.final_log_weights = out.log_weights[T].copy()
    return out


def run_apf_sis(model, y, P, rng, theta=None, approx="exact"):
    """Fully adapted auxiliary particle filter.

    Each particle's weight is p(y_t | x_{t-1}) = sum_i PoiBin(i) Bin(y_t; i, rho);
    after resampling, the infected count is drawn from its posterior and the
    configuration from CondBer. With ``approx="transpoi"`` the PoiBin
    factors are replaced by translated Poisson, which makes the estimator
    approximate.
    """
    theta, rates, y, T, logg = _setup(model, y, theta)
    pmf_rows = _count_pmf_rows(approx)
    N = model.N
    out = new_system(T, P, N)
    a0 = np.broadcast_to(rates.alpha0, (P, N))
    logv0 = _log(pmf_rows(rates.alpha0[None, :])[0]) + logg[0]
    if approx != "exact":
        logv0 = logv0 + _support_mask(rates.alpha0[None, :])[0]
    lw0 = logsumexp(logv0)
    if lw0 == -np.inf:
        return mark_collapse(out, 0)
    counts = kernels.categorical_log_rows(np.broadcast_to(logv0, (P, N + 1)), rng.random(P))
    X = condber_sample_rows(a0, counts, rng.random((P, N)))
    out.states[0] = X
    out.log_weights[0] = lw0
    out.log_increments[0] = lw0
    out.ess[0] = P
    for t in range(1, T + 1):
        alpha = sis_probs(X, rates, model.network)
        logv = _log(pmf_rows(alpha)) + logg[t][None, :]
        if approx != "exact":
            logv = logv + _support_mask(alpha)
        lw = logsumexp(logv, axis=1)
        out.log_weights[t] = lw
        inc = log_mean_exp(lw)
        if inc == -np.inf:
            return mark_collapse(out, t)
        out.log_increments[t] = inc
        out.ess[t] = ess(lw)
        A = multinomial_resample(rng, normalise_log_weights(lw))
        out.ancestors[t - 1] = A
        counts = kernels.categorical_log_rows(logv[A], rng.random(P))
        X = condber_sample_rows(alpha[A], counts, rng.random((P, N)))
        out.states[t] = X
    out.final_log_weights = np.zeros(P)
    return out


class _ClusterCounts:
    """Joint count pmfs over clusters, flattened for sampling."""

    def __init__(self, labels, N):
        self.labels = labels
        if labels is None:
            self.groups = [np.arange(N)]
        else:
            self.groups = [np.flatnonzero(labels == k) for k in range(int(labels.max()) + 1)]
        self.shape = tuple(g.size + 1 for g in self.groups)

    def log_pmf_rows(self, alpha):
        P = alpha.shape[0]
        out = np.zeros((P,) + self.shape)
        K = len(self.groups)
        for k, g in enumerate(self.groups):
            lp = _log(poibin_pmf_rows(np.ascontiguousarray(alpha[:, g])))
            view = [P] + [1] * K
            view[k + 1] = g.size + 1
            out = out + lp.reshape(view)
        return out

    def counts(self, X):
        return tuple(X[:, g].sum(axis=1) for g in self.groups)

    def sample(self, rng, logv, alpha):
        P = logv.shape[0]
        flat = kernels.categorical_log_rows(logv.reshape(P, -1), rng.random(P))
        cnt = np.unravel_index(flat, self.shape)
        u = rng.random(alpha.shape)
        X = np.zeros(alpha.shape, np.uint8)
        for k, g in enumerate(self.groups):
            X[:, g] = condber_sample_rows(alpha[:, g], cnt[k], u[:, g])
        return X


def run_csmc_sis(model, y, P, rng, theta=None, psi=None, approx="exact", clusters=None):
    """Controlled SMC twisted by the backward information filter ``psi``.

    Proposals are q_t(x_t | x_{t-1}) proportional to f(x_t | x_{t-1}) psi_t,
    sampled by drawing (cluster) counts then CondBer configurations. Weights
    are w_t = g(y_t | x_t) f(psi_{t+1} | x_t) / psi_t(x_t), with the
    normaliser of the initial twisted law folded into w_0 and w_T = 1.
    ``psi`` is built from ``approx`` and ``clusters`` when not supplied.
    """
    theta, rates, y, T, logg = _setup(model, y, theta, clusters)
    if psi is None:
        psi = bif_sis(y, rates, theta.rho, approx)
    if psi.T != T:
        raise ValueError("psi horizon does not match the observations")
    N = model.N
    cc = _ClusterCounts(psi.labels, N)
    axes = tuple(range(1, len(cc.shape) + 1))
    out = new_system(T, P, N)

    a0 = np.ascontiguousarray(np.broadcast_to(rates.alpha0, (P, N)))
    logp0 = cc.log_pmf_rows(rates.alpha0[None, :])[0]
    logv0 = logp0 + psi.log_psi[0]
    log_mu = logsumexp(logv0)
    if log_mu == -np.inf:
        return mark_collapse(out, 0)
    X = cc.sample(rng, np.broadcast_to(logv0, (P,) + cc.shape), a0)
    logp = alpha = None
    for t in range(T + 1):
        if t > 0:
            A = multinomial_resample(rng, normalise_log_weights(out.log_weights[t - 1]))
            out.ancestors[t - 1] = A
            X = cc.sample(rng, logp[A] + psi.log_psi[t][None], alpha[A])
        out.states[t] = X
        if t < T:
            alpha = sis_probs(X, rates, model.network)
            logp = cc.log_pmf_rows(alpha)
            log_e = logsumexp(logp + psi.log_psi[t + 1][None], axis=axes)
            lw = logg[t][X.sum(axis=1)] + log_e - psi.log_psi[t][cc.counts(X)]
        else:
            lw = np.zeros(P)
        if t == 0:
            lw = lw + log_mu
        out.log_weights[t] = lw
        inc = log_mean_exp(lw)
        if inc == -np.inf:
            return mark_collapse(out, t)
        out.log_increments[t] = inc
        out.ess[t] = ess(lw)
    out.final_log_weights = np.zeros(P)
    return out
