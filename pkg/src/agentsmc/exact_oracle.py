"""Exact inference by enumerating every configuration.

Configurations are indexed little-endian: state index k has agent n in
category (k // B**n) % B with B = 2 (SIS) or 3 (SIR). Transition rows are
built in blocks, so memory stays at O(block * B**N) even when the full
matrix would not fit.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.special import logsumexp

from .distributions import poibin_pmf
from .sir_model import sir_init_probs, sir_probs
from .sis_model import obs_log_table, sis_probs

MAX_N = {"sis": 14, "sir": 9}
_BLOCK_ENTRIES = 1 << 22


def _check(model):
    if model.N > MAX_N[model.kind]:
        raise ValueError(f"exact enumeration limited to N <= {MAX_N[model.kind]} "
                         f"for {model.kind}; got N = {model.N}")


def enumerate_states(N, base=2):
    """All configurations as an (base**N, N) int8 array, little-endian."""
    k = np.arange(base ** N)
    return ((k[:, None] // base ** np.arange(N)[None, :]) % base).astype(np.int8)


def _product_law(p):
    """Joint pmf of independent categoricals; ``p`` is (B, N, C) -> (B, C**N)."""
    out = np.ones((p.shape[0], 1))
    for n in range(p.shape[1]):
        out = np.concatenate([out * p[:, n, c][:, None] for c in range(p.shape[2])], axis=1)
    return out


def _category_probs(model, X, rates):
    if model.kind == "sis":
        a = sis_probs(X, rates, model.network)
        return np.stack([1.0 - a, a], axis=-1)
    return sir_probs(X, rates, model.network)


def _init_law(model, rates):
    if model.kind == "sis":
        p = np.stack([1.0 - rates.alpha0, rates.alpha0], axis=-1)
    else:
        p = sir_init_probs(rates)
    return _product_law(p[None])[0]


def _base(model):
    return 2 if model.kind == "sis" else 3


def _blocks(model, rates, states):
    M = states.shape[0]
    rows = max(1, _BLOCK_ENTRIES // M)
    for lo in range(0, M, rows):
        hi = min(M, lo + rows)
        yield lo, hi, _product_law(_category_probs(model, states[lo:hi], rates))


def transition_matrix(model, theta=None):
    """Dense transition matrix; only sensible for small N."""
    theta = model.theta if theta is None else theta
    _check(model)
    rates = model.rates(theta)
    states = enumerate_states(model.N, _base(model))
    return np.vstack([K for _, _, K in _blocks(model, rates, states)])


def _infected(model, states):
    return (states == 1).sum(axis=1)


@dataclass
class ForwardResult:
    loglik: float
    log_increments: np.ndarray
    filtering: np.ndarray
    predictive: np.ndarray


def forward_pass(model, y, theta=None):
    """Normalised forward recursion returning filters and one-step predictions."""
    theta = model.theta if theta is None else theta
    _check(model)
    y = np.asarray(y)
    T = y.size - 1
    rates = model.rates(theta)
    states = enumerate_states(model.N, _base(model))
    g = np.exp(obs_log_table(y, model.N, theta.rho))[:, _infected(model, states)]
    M = states.shape[0]
    pred = np.zeros((T + 1, M))
    filt = np.zeros((T + 1, M))
    inc = np.zeros(T + 1)
    pred[0] = _init_law(model, rates)
    for t in range(T + 1):
        if t > 0:
            nxt = np.zeros(M)
            for lo, hi, K in _blocks(model, rates, states):
                nxt += filt[t - 1, lo:hi] @ K
            pred[t] = nxt
        a = pred[t] * g[t]
        z = a.sum()
        if z <= 0.0:
            inc[t:] = -np.inf
            return ForwardResult(-np.inf, inc, filt, pred)
        inc[t] = np.log(z)
        filt[t] = a / z
    return ForwardResult(float(inc.sum()), inc, filt, pred)


def forward_algorithm(model, y, theta=None):
    """Exact log p(y_{0:T} | theta)."""
    return forward_pass(model, y, theta).loglik


def exact_bif(model, y, theta=None):
    """log psi*_t(x) = log p(y_{t:T} | x_t = x) for every configuration."""
    theta = model.theta if theta is None else theta
    _check(model)
    y = np.asarray(y)
    T = y.size - 1
    rates = model.rates(theta)
    states = enumerate_states(model.N, _base(model))
    logg = obs_log_table(y, model.N, theta.rho)[:, _infected(model, states)]
    out = np.zeros((T + 1, states.shape[0]))
    out[T] = logg[T]
    for t in range(T - 1, -1, -1):
        m = out[t + 1].max()
        v = np.exp(out[t + 1] - m)
        e = np.concatenate([K @ v for _, _, K in _blocks(model, rates, states)])
        with np.errstate(divide="ignore"):
            out[t] = logg[t] + np.log(e) + m
    return out


def exact_smoothing_marginals(model, y, theta=None):
    """p(x_t | y_{0:T}) for every t, shape (T+1, B**N)."""
    fw = forward_pass(model, y, theta)
    lb = exact_bif(model, y, theta)
    with np.errstate(divide="ignore"):
        lp = np.log(fw.predictive) + lb
    return np.exp(lp - logsumexp(lp, axis=1, keepdims=True))


def exact_trajectory_posterior(model, y, theta=None, max_paths=1 << 16):
    """Posterior over whole SIS trajectories; returns (paths, probabilities).

    ``paths`` has shape (2**(N(T+1)), T+1, N).
    """
    from .sis_model import sis_complete_loglik

    theta = model.theta if theta is None else theta
    if model.kind != "sis":
        raise ValueError("trajectory enumeration is implemented for SIS only")
    y = np.asarray(y)
    T, N = y.size - 1, model.N
    n_bits = N * (T + 1)
    if 2 ** n_bits > max_paths:
        raise ValueError("too many trajectories to enumerate")
    rates = model.rates(theta)
    paths = enumerate_states(n_bits, 2).reshape(-1, T + 1, N).astype(np.uint8)
    lp = np.array([sis_complete_loglik(p, y, rates, model.network, theta.rho) for p in paths])
    return paths, np.exp(lp - logsumexp(lp))


def brute_poibin(alpha):
    """PoiBin pmf by summing over all 2**N outcomes."""
    alpha = np.asarray(alpha, dtype=float)
    N = alpha.size
    out = np.zeros(N + 1)
    for x in product((0, 1), repeat=N):
        x = np.array(x, dtype=np.int64)
        out[x.sum()] += np.prod(np.where(x == 1, alpha, 1.0 - alpha))
    return out


def brute_condber(alpha, i):
    """CondBer(alpha, i) as an array over little-endian configurations."""
    alpha = np.asarray(alpha, dtype=float)
    X = enumerate_states(alpha.size, 2)
    p = np.prod(np.where(X == 1, alpha, 1.0 - alpha), axis=1)
    p = np.where(X.sum(axis=1) == i, p, 0.0)
    return p / p.sum()


@dataclass
class LemmaReport:
    """Distances between PoiBin(alpha_bar) and PoiBin(alpha).

    ``l2_bound`` is (sum |alpha_bar - alpha|)^2. Parseval gives the sharper
    ``2 * l2_bound`` as a guaranteed bound, since the average of
    |exp(iw) - 1|^2 over the circle is 2.
    """

    l1_alpha: float
    l2_lhs: float
    l2_bound: float
    kl_lhs: float
    kl_bound: float

    @property
    def l2_holds(self):
        return self.l2_lhs <= self.l2_bound * (1 + 1e-12) + 1e-300

    @property
    def l2_holds_factor2(self):
        return self.l2_lhs <= 2.0 * self.l2_bound * (1 + 1e-12) + 1e-300

    @property
    def kl_holds(self):
        return self.kl_lhs <= self.kl_bound * (1 + 1e-12) + 1e-300


def lemma_bounds_check(alpha, alpha_bar):
    alpha = np.asarray(alpha, dtype=float)
    alpha_bar = np.asarray(alpha_bar, dtype=float)
    p = poibin_pmf(alpha)
    pb = poibin_pmf(alpha_bar)
    l1 = float(np.abs(alpha_bar - alpha).sum())
    l2 = float(np.sum((pb - p) ** 2))
    live = pb > 0
    if np.any(p[live] == 0.0):
        kl = ratio = np.inf
    else:
        kl = float(np.sum(pb[live] * np.log(pb[live] / p[live])))
        ratio = float(np.sqrt(np.sum((pb[live] / p[live]) ** 2)))
    return LemmaReport(l1, l2, l1 * l1, kl, ratio * l1)


def transition_row(model, x, theta=None):
    """Law of the next configuration given ``x``, over enumerated states."""
    theta = model.theta if theta is None else theta
    _check(model)
    rates = model.rates(theta)
    return _product_law(_category_probs(model, np.asarray(x)[None], rates))[0]


def initial_law(model, theta=None):
    theta = model.theta if theta is None else theta
    return _init_law(model, model.rates(theta))


def state_index(x, base=2):
    """Little-endian index of a configuration, inverse of ``enumerate_states``."""
    x = np.asarray(x).astype(np.int64)
    return int((x * base ** np.arange(x.size)).sum())
