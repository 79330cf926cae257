"""Susceptible-infected-susceptible agent-based model.

States are uint8 arrays with 0 = susceptible and 1 = infected. Functions
accept a single state of shape (N,) or a batch of shape (P, N).
"""
import numpy as np
from scipy import stats

from .model import AgentRates, Network


def sis_probs(x, rates: AgentRates, network: Network):
    """Probability that each agent is infected at the next step.

    Susceptible agents are infected with probability lam_n times their
    infected-neighbour fraction; infected agents stay infected with
    probability 1 - gam_n.
    """
    x = np.asarray(x)
    frac = network.infected_fraction(x)
    return np.where(x == 1, 1.0 - rates.gam, rates.lam * frac)


def sis_coarse_probs(x, rates: AgentRates):
    """Homogenised probabilities using (cluster) mean rates and I/N."""
    x = np.asarray(x)
    N = x.shape[-1]
    c = rates.labels
    frac = x.sum(axis=-1, keepdims=True) / N
    return np.where(x == 1, 1.0 - rates.gam_bar[c], rates.lam_bar[c] * frac)


def obs_logpmf(y, infected, rho):
    """log Bin(y; I, rho); -inf whenever I < y."""
    return stats.binom.logpmf(y, infected, rho)


def obs_log_table(y, N, rho):
    """(T+1, N+1) table of log Bin(y_t; i, rho) for i = 0..N."""
    y = np.asarray(y)
    return stats.binom.logpmf(y[:, None], np.arange(N + 1)[None, :], rho)


def bernoulli_logpmf(x, p):
    """Elementwise log Ber(x; p) with exact zeros for degenerate p."""
    x = np.asarray(x)
    with np.errstate(divide="ignore"):
        return np.where(x == 1, np.log(p), np.log1p(-p))


def sis_transition_logpdf(x_new, x_prev, rates, network):
    return bernoulli_logpmf(x_new, sis_probs(x_prev, rates, network)).sum(axis=-1)


def sis_init_logpdf(x0, rates):
    return bernoulli_logpmf(x0, rates.alpha0).sum(axis=-1)


def sis_complete_loglik(X, y, rates, network, rho):
    """log p(x_{0:T}, y_{0:T}) for a single trajectory ``X`` of shape (T+1, N)."""
    X = np.asarray(X)
    out = sis_init_logpdf(X[0], rates)
    if X.shape[0] > 1:
        out += sis_transition_logpdf(X[1:], X[:-1], rates, network).sum()
    out += obs_logpmf(np.asarray(y), X.sum(axis=1), rho).sum()
    return float(out)


def sis_simulate(rng, model, T, theta=None):
    """Simulate states (T+1, N) and binomially reported counts (T+1,)."""
    theta = model.theta if theta is None else theta
    rates = model.rates(theta)
    N = model.N
    X = np.zeros((T + 1, N), np.uint8)
    X[0] = rng.random(N) < rates.alpha0
    for t in range(1, T + 1):
        X[t] = rng.random(N) < sis_probs(X[t - 1], rates, model.network)
    y = rng.binomial(X.sum(axis=1).astype(np.int64), theta.rho)
    return X, y


def homogeneous_count_step(rng, s, i, lam_bar, gam_bar, N, h=1.0):
    """Advance (susceptible, infected) counts of the homogeneous chain.

    Recoveries are Bin(i, h gam) and new infections Bin(s, h lam i / N).
    """
    rec = rng.binomial(i, h * gam_bar)
    inf = rng.binomial(s, h * lam_bar * i / N)
    return s + rec - inf, i - rec + inf
