"""Shared particle-filter machinery: weights, resampling, ancestry."""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp


def normalise_log_weights(logw):
    logw = np.asarray(logw, dtype=float)
    m = logw.max()
    if m == -np.inf:
        return np.full(logw.size, np.nan)
    w = np.exp(logw - m)
    return w / w.sum()


def log_mean_exp(logw):
    logw = np.asarray(logw, dtype=float)
    if logw.max() == -np.inf:
        return -np.inf
    return float(logsumexp(logw) - np.log(logw.size))


def ess(logw):
    """Effective sample size 1 / sum(W^2) from unnormalised log weights."""
    W = normalise_log_weights(logw)
    if np.isnan(W[0]):
        return 0.0
    return float(1.0 / np.sum(W * W))


def multinomial_resample(rng, W, size=None):
    """Ancestor indices drawn i.i.d. from the normalised weights ``W``."""
    W = np.asarray(W, dtype=float)
    size = W.size if size is None else size
    c = np.cumsum(W)
    idx = np.searchsorted(c, rng.random(size) * c[-1], side="right")
    return np.minimum(idx, W.size - 1)


@dataclass
class ParticleSystem:
    """Output of one filter run.

    ``log_weights[t]`` are the unnormalised incremental weights whose mean
    is the step-t likelihood factor; ``ancestors[t-1][p]`` is the time t-1
    parent of particle p at time t. ``final_log_weights`` define the
    smoothing approximation over terminal particles.
    """

    states: np.ndarray
    log_weights: np.ndarray
    ancestors: np.ndarray
    log_increments: np.ndarray
    ess: np.ndarray
    final_log_weights: np.ndarray
    collapsed: bool = False
    collapse_step: int = -1
    extras: dict = field(default_factory=dict)

    @property
    def loglik(self):
        if self.collapsed:
            return -np.inf
        return float(np.sum(self.log_increments))

    @property
    def T(self):
        return self.states.shape[0] - 1

    @property
    def P(self):
        return self.states.shape[1]

    def diagnostics(self):
        """Rows (t, ess, log_incremental_likelihood, collapse_flag)."""
        rows = []
        for t in range(self.T + 1):
            flag = int(self.collapsed and t >= self.collapse_step)
            rows.append((t, float(self.ess[t]), float(self.log_increments[t]), flag))
        return rows


def new_system(T, P, N, dtype=np.uint8):
    return ParticleSystem(
        states=np.zeros((T + 1, P, N), dtype),
        log_weights=np.full((T + 1, P), -np.inf),
        ancestors=np.zeros((T, P), np.int64),
        log_increments=np.full(T + 1, np.nan),
        ess=np.full(T + 1, np.nan),
        final_log_weights=np.zeros(P),
    )


def mark_collapse(system, t):
    system.collapsed = True
    system.collapse_step = t
    system.log_increments[t] = -np.inf
    system.ess[t] = 0.0
    return system


def trace_ancestry(system, p):
    """Indices B_0..B_T of the ancestral line ending at terminal particle p."""
    T = system.T
    B = np.empty(T + 1, np.int64)
    B[T] = p
    for t in range(T - 1, -1, -1):
        B[t] = system.ancestors[t][B[t + 1]]
    return B


def ancestral_path(system, p):
    B = trace_ancestry(system, p)
    return system.states[np.arange(system.T + 1), B]


def sample_path(rng, system):
    """One trajectory drawn from the terminal smoothing approximation."""
    W = normalise_log_weights(system.final_log_weights)
    p = int(multinomial_resample(rng, W, 1)[0])
    return ancestral_path(system, p)
