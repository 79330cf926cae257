"""Posterior prediction of future reported counts."""
from dataclasses import dataclass

import numpy as np

from ..sir_model import I as INFECTED, sir_probs
from ..sis_model import sis_probs


@dataclass
class Prediction:
    times: np.ndarray
    draws: np.ndarray
    quantiles: np.ndarray
    levels: tuple

    def rows(self):
        for k, t in enumerate(self.times):
            yield (int(t), *self.quantiles[k])


def simulate_forward(rng, model, theta, x, horizon):
    """Simulate ``horizon`` further steps from state ``x``; returns (states, y)."""
    rates = model.rates(theta)
    x = np.array(x)
    ys = np.zeros(horizon, np.int64)
    xs = np.zeros((horizon, x.size), x.dtype)
    for h in range(horizon):
        if model.kind == "sis":
            x = (rng.random(x.size) < sis_probs(x, rates, model.network)).astype(x.dtype)
            n_inf = int(x.sum())
        else:
            p = sir_probs(x, rates, model.network)
            u = rng.random(x.size)
            x = ((u >= p[:, 0]).astype(np.int8) + (u >= p[:, 0] + p[:, 1])).astype(x.dtype)
            n_inf = int((x == INFECTED).sum())
        xs[h] = x
        ys[h] = rng.binomial(n_inf, theta.rho)
    return xs, ys


def posterior_predictive(rng, thetas, states, model, t_obs, T, levels=(0.025, 0.5, 0.975)):
    """Forward-simulate y_{t_obs+1:T} from posterior draws of (theta, x_{t_obs}).

    ``thetas`` is a sequence of Theta and ``states`` the matching terminal
    configurations. Returns per-time quantiles of the simulated counts.
    """
    horizon = T - t_obs
    times = np.arange(t_obs + 1, T + 1)
    if horizon <= 0:
        return Prediction(times, np.zeros((len(thetas), 0), np.int64),
                          np.zeros((0, len(levels))), tuple(levels))
    draws = np.zeros((len(thetas), horizon), np.int64)
    for s, (theta, x) in enumerate(zip(thetas, states)):
        draws[s] = simulate_forward(rng, model, theta, x, horizon)[1]
    q = np.quantile(draws, levels, axis=0).T
    return Prediction(times, draws, q, tuple(levels))
