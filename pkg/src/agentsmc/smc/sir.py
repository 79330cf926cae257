"""Particle filters for the SIR model.

Counts drive the proposals as in the SIS filters; per-agent infection
indicators are drawn from CondBer and mapped to states with ``nu``.
"""
import numpy as np
from scipy.special import logsumexp

from .. import kernels
from ..distributions import condber_sample_rows, poibin_pmf_rows
from ..sir_model import S, I, R, nu, nu0, sir_counts, sir_infection_probs, sir_probs, \
    sir_recovery_probs
from .bif import bif_sir
from .core import ess, log_mean_exp, mark_collapse, multinomial_resample, new_system, \
    normalise_log_weights
from .sis import _log, _setup


def run_bpf_sir(model, y, P, rng, theta=None):
    theta, rates, y, T, logg = _setup(model, y, theta)
    N = model.N
    out = new_system(T, P, N, np.int8)
    X = (rng.random((P, N)) < rates.alpha0).astype(np.int8)
    for t in range(T + 1):
        if t > 0:
            A = multinomial_resample(rng, normalise_log_weights(out.log_weights[t - 1]))
            out.ancestors[t - 1] = A
            p = sir_probs(X, rates, model.network)[A]
            u = rng.random((P, N))
            X = ((u >= p[..., S]).astype(np.int8) + (u >= p[..., S] + p[..., I])).astype(np.int8)
        out.states[t] = X
        lw = logg[t][(X == I).sum(axis=1)]
        out.log_weights[t] = lw
        inc = log_mean_exp(lw)
        if inc == -np.inf:
            return mark_collapse(out, t)
        out.log_increments[t] = inc
        out.ess[t] = ess(lw)
    out.final_log_weights = out.log_weights[T].copy()
    return out


def run_apf_sir(model, y, P, rng, theta=None):
    """Fully adapted auxiliary filter on infection indicators."""
    theta, rates, y, T, logg = _setup(model, y, theta)
    N = model.N
    out = new_system(T, P, N, np.int8)
    logv0 = _log(poibin_pmf_rows(rates.alpha0[None, :])[0]) + logg[0]
    lw0 = logsumexp(logv0)
    if lw0 == -np.inf:
        return mark_collapse(out, 0)
    counts = kernels.categorical_log_rows(np.broadcast_to(logv0, (P, N + 1)), rng.random(P))
    ind = condber_sample_rows(np.broadcast_to(rates.alpha0, (P, N)), counts, rng.random((P, N)))
    X = nu0(ind)
    out.states[0] = X
    out.log_weights[0] = lw0
    out.log_increments[0] = lw0
    out.ess[0] = P
    for t in range(1, T + 1):
        alpha = sir_infection_probs(X, rates, model.network)
        logv = _log(poibin_pmf_rows(alpha)) + logg[t][None, :]
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
        ind = condber_sample_rows(alpha[A], counts, rng.random((P, N)))
        X = nu(X[A], ind)
        out.states[t] = X
    out.final_log_weights = np.zeros(P)
    return out


class _Twisted:
    """Per-particle twisted count laws for one step ahead."""

    def __init__(self, X, rates, network, log_psi_next, terminal):
        self.X = X
        self.terminal = terminal
        P, N = X.shape
        if terminal:
            self.alpha = sir_infection_probs(X, rates, network)
            self.logv = _log(poibin_pmf_rows(self.alpha)) + log_psi_next[None, :]
            self.log_e = logsumexp(self.logv, axis=1)
            return
        self.alpha = sir_infection_probs(X, rates, network)
        stay = sir_probs(X, rates, network)[..., S]
        self.rec = sir_recovery_probs(X, rates)
        log_ps = _log(poibin_pmf_rows(stay))
        log_pr = _log(poibin_pmf_rows(self.rec))
        self.s, self.i = sir_counts(X)
        s2 = np.arange(N + 1)[None, :, None]
        i2 = np.arange(N + 1)[None, None, :]
        r = self.s[:, None, None] - s2 + self.i[:, None, None] - i2
        ok = (r >= 0) & (r <= N)
        lpr = np.where(ok, log_pr[np.arange(P)[:, None, None], np.clip(r, 0, N)], -np.inf)
        # logk[p, s', i'] = log f(s', i' | x_p) + log psi(s', i')
        self.logk = log_ps[:, :, None] + lpr + log_psi_next[None]
        self.log_e = logsumexp(self.logk, axis=(1, 2))

    def sample(self, rng, A):
        X = self.X[A]
        P, N = X.shape
        if self.terminal:
            counts = kernels.categorical_log_rows(self.logv[A], rng.random(P))
            ind = condber_sample_rows(self.alpha[A], counts, rng.random((P, N)))
            return nu(X, ind)
        logk = self.logk[A]
        new_i = kernels.categorical_log_rows(logsumexp(logk, axis=1), rng.random(P))
        new_s = kernels.categorical_log_rows(logk[np.arange(P), :, new_i], rng.random(P))
        s, i = self.s[A], self.i[A]
        n_inf = s - new_s
        n_rec = s - new_s + i - new_i
        u = rng.random((2, P, N))
        inf_p = np.where(X == S, self.alpha[A], 0.0)
        inf = condber_sample_rows(inf_p, n_inf, u[0])
        rec = condber_sample_rows(self.rec[A], n_rec, u[1])
        out = X.copy()
        out[(X == S) & (inf == 1)] = I
        out[(X == I) & (rec == 1)] = R
        return out


def run_csmc_sir(model, y, P, rng, theta=None, psi=None, approx="exact"):
    """Controlled SMC for SIR twisted by the (s, i) backward filter.

    For t < T the proposal is f(x_t | x_{t-1}) psi_t(s_t, i_t) normalised:
    the infected count is drawn from its twisted marginal, then the
    susceptible count given it, then new infections among susceptibles and
    recoveries among infecteds as two CondBer draws.
    """
    theta, rates, y, T, logg = _setup(model, y, theta)
    if psi is None:
        psi = bif_sir(y, rates, theta.rho, approx)
    if psi.T != T:
        raise ValueError("psi horizon does not match the observations")
    N = model.N
    out = new_system(T, P, N, np.int8)
    lp = psi.log_psi

    def log_psi_x(t, X):
        s, i = sir_counts(X)
        return lp[t][i] if t == T else lp[t][s, i]

    ii = np.arange(N + 1)
    psi0 = lp[0] if T == 0 else lp[0][N - ii, ii]
    logv0 = _log(poibin_pmf_rows(rates.alpha0[None, :])[0]) + psi0
    log_mu = logsumexp(logv0)
    if log_mu == -np.inf:
        return mark_collapse(out, 0)
    counts = kernels.categorical_log_rows(np.broadcast_to(logv0, (P, N + 1)), rng.random(P))
    X = nu0(condber_sample_rows(np.broadcast_to(rates.alpha0, (P, N)), counts, rng.random((P, N))))
    tw = None
    for t in range(T + 1):
        if t > 0:
            A = multinomial_resample(rng, normalise_log_weights(out.log_weights[t - 1]))
            out.ancestors[t - 1] = A
            X = tw.sample(rng, A)
        out.states[t] = X
        if t < T:
            tw = _Twisted(X, rates, model.network, lp[t + 1], terminal=(t + 1 == T))
            lw = logg[t][(X == I).sum(axis=1)] + tw.log_e - log_psi_x(t, X)
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
