"""Susceptible-infected-recovered agent-based model.

States are int8 arrays with 0 = S, 1 = I, 2 = R. Recovered agents never
leave R.
"""
import numpy as np

from .distributions import poibin_pmf, sumbin_pmf
from .sis_model import obs_logpmf
from scipy import stats

S, I, R = 0, 1, 2


def sir_probs(x, rates, network):
    """Next-state category probabilities, shape (..., N, 3)."""
    x = np.asarray(x)
    frac = network.infected_fraction(x == I)
    s = (x == S).astype(float)
    i = (x == I).astype(float)
    r = (x == R).astype(float)
    inf = rates.lam * frac
    return np.stack([s * (1.0 - inf), s * inf + i * (1.0 - rates.gam),
                     i * rates.gam + r], axis=-1)


def sir_infection_probs(x, rates, network):
    """P(agent is infected next step), i.e. the middle column of ``sir_probs``."""
    x = np.asarray(x)
    frac = network.infected_fraction(x == I)
    return np.where(x == S, rates.lam * frac, np.where(x == I, 1.0 - rates.gam, 0.0))


def sir_recovery_probs(x, rates):
    """Per-agent recovery probability; zero for agents not currently infected."""
    return np.where(np.asarray(x) == I, rates.gam, 0.0)


def sir_coarse_probs(x, rates):
    """Homogenised category probabilities using mean rates and I/N."""
    x = np.asarray(x)
    N = x.shape[-1]
    c = rates.labels
    frac = (x == I).sum(axis=-1, keepdims=True) / N
    s = (x == S).astype(float)
    i = (x == I).astype(float)
    r = (x == R).astype(float)
    inf = rates.lam_bar[c] * frac
    gam = rates.gam_bar[c]
    return np.stack([s * (1.0 - inf), s * inf + i * (1.0 - gam), i * gam + r], axis=-1)


def sir_init_probs(rates):
    a0 = rates.alpha0
    return np.stack([1.0 - a0, a0, np.zeros_like(a0)], axis=-1)


def nu0(ind):
    """Initial state from infection indicators: infected or susceptible."""
    return np.asarray(ind).astype(np.int8)


def nu(x_prev, ind):
    """State from previous state and infection indicators.

    Infected-next agents are I; otherwise susceptibles stay S and
    everyone else (recovering I or already R) is R.
    """
    x_prev = np.asarray(x_prev)
    return np.where(ind == 1, I, np.where(x_prev == S, S, R)).astype(np.int8)


def sir_counts(x):
    x = np.asarray(x)
    return (x == S).sum(axis=-1), (x == I).sum(axis=-1)


def sir_simulate(rng, model, T, theta=None):
    theta = model.theta if theta is None else theta
    rates = model.rates(theta)
    N = model.N
    X = np.zeros((T + 1, N), np.int8)
    X[0] = (rng.random(N) < rates.alpha0).astype(np.int8)
    for t in range(1, T + 1):
        p = sir_probs(X[t - 1], rates, model.network)
        u = rng.random(N)
        X[t] = (u >= p[:, 0]).astype(np.int8) + (u >= p[:, 0] + p[:, 1])
    y = rng.binomial((X == I).sum(axis=1), theta.rho)
    return X, y


def sir_transition_logpdf(x_new, x_prev, rates, network):
    p = sir_probs(x_prev, rates, network)
    pick = np.take_along_axis(p, np.asarray(x_new)[..., None].astype(np.int64), axis=-1)[..., 0]
    with np.errstate(divide="ignore"):
        return np.log(pick).sum(axis=-1)


def sir_init_logpdf(x0, rates):
    p = sir_init_probs(rates)
    pick = np.take_along_axis(p, np.asarray(x0)[..., None].astype(np.int64), axis=-1)[..., 0]
    with np.errstate(divide="ignore"):
        return np.log(pick).sum(axis=-1)


def sir_complete_loglik(X, y, rates, network, rho):
    X = np.asarray(X)
    out = sir_init_logpdf(X[0], rates)
    if X.shape[0] > 1:
        out += sir_transition_logpdf(X[1:], X[:-1], rates, network).sum()
    out += obs_logpmf(np.asarray(y), (X == I).sum(axis=1), rho).sum()
    return float(out)


def sir_summary_transition_coarse(s, i, lam_bar, gam_bar, N):
    """Coarse law of next (S, I) counts as an (N+1, N+1) array over [s', i'].

    s' ~ Bin(s, 1 - lam i / N) stay susceptible and r ~ Bin(i, gam) recover,
    so i' = i - r + s - s'.
    """
    out = np.zeros((N + 1, N + 1))
    ps = stats.binom.pmf(np.arange(s + 1), s, 1.0 - lam_bar * i / N)
    pr = stats.binom.pmf(np.arange(i + 1), i, gam_bar)
    for s2 in range(s + 1):
        for r in range(i + 1):
            out[s2, i - r + s - s2] += ps[s2] * pr[r]
    return out


def sir_summary_transition_exact(x, rates, network):
    """Exact law of next (S, I) counts from configuration ``x``, over [s', i'].

    Staying susceptible is PoiBin over susceptibles with probabilities
    1 - lam_n frac_n; recoveries are PoiBin over infecteds with gam_n.
    """
    x = np.asarray(x)
    N = x.size
    s, i = sir_counts(x)
    p = sir_probs(x, rates, network)
    ps = poibin_pmf(p[:, S])
    pr = poibin_pmf(sir_recovery_probs(x, rates))
    out = np.zeros((N + 1, N + 1))
    for s2 in range(s + 1):
        for r in range(i + 1):
            out[s2, i - r + s - s2] += ps[s2] * pr[r]
    return out


def sir_infected_marginal_coarse(s, i, lam_bar, gam_bar, N):
    """Coarse law of next infected count: SumBin(s, lam i / N, i, 1 - gam)."""
    return sumbin_pmf(s, lam_bar * i / N, i, 1.0 - gam_bar)
