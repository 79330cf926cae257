"""Random-walk Metropolis-Hastings and particle marginal MH."""
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit

from ..exact_oracle import forward_algorithm
from ..model import Theta
from ..smc import normalise_log_weights, run_filter
from ..smc.core import multinomial_resample


@dataclass
class Prior:
    """Independent Normal(mean, sd) on regression coefficients and
    Uniform(0, 1) on rho.

    ``logpdf`` acts on unconstrained vectors whose last entry is logit(rho),
    so it includes the logistic Jacobian rho (1 - rho).
    """

    beta_mean: float = 0.0
    beta_sd: float = 3.0

    def __post_init__(self):
        if self.beta_sd <= 0:
            raise ValueError("prior sd must be positive")

    def logpdf(self, v):
        v = np.asarray(v, dtype=float)
        lp = stats.norm.logpdf(v[:-1], self.beta_mean, self.beta_sd).sum()
        return float(lp + log_expit(v[-1]) + log_expit(-v[-1]))


def rw_propose(rng, v, step_sd, free=None):
    """Gaussian random-walk step on the unconstrained coordinates in ``free``."""
    v = np.asarray(v, dtype=float)
    step = step_sd * rng.standard_normal(v.size)
    if free is not None:
        mask = np.zeros(v.size, bool)
        mask[np.asarray(free, dtype=np.int64)] = True
        step = np.where(mask, step, 0.0)
    return v + step


@dataclass
class Chain:
    """Chain output on both scales, with the likelihood estimate carried by
    each state and whether the move into it was accepted. ``last`` is the
    latent state the chain ended in, when the sampler tracks one."""

    names: list
    unconstrained: np.ndarray
    natural: np.ndarray
    loglik: np.ndarray
    accept: np.ndarray
    states: list = field(default_factory=list)
    last: object = None

    @property
    def acceptance_rate(self):
        return float(self.accept.mean()) if self.accept.size else float("nan")

    def rows(self, burn_in=0, thin=1):
        for k in range(burn_in, self.loglik.size, thin):
            yield (k + 1, *self.natural[k], self.loglik[k], int(self.accept[k]))

    def mean(self, burn_in=0):
        return self.natural[burn_in:].mean(axis=0)


def run_mh(rng, loglik_fn, logprior, v0, iters, step_sd, free=None, to_natural=None,
           names=None, keep_states=False):
    """Pseudo-marginal random-walk MH.

    ``loglik_fn(v, rng)`` returns (log-likelihood or log of an unbiased
    estimate, optional state sample). The stored estimate is only replaced
    on acceptance; -inf proposals are always rejected.
    """
    v = np.asarray(v0, dtype=float)
    to_natural = to_natural or (lambda u: u)
    ll, st = loglik_fn(v, rng)
    lp = logprior(v)
    D = v.size
    U = np.zeros((iters, D))
    Nat = np.zeros((iters, D))
    L = np.zeros(iters)
    acc = np.zeros(iters, bool)
    states = []
    for k in range(iters):
        prop = rw_propose(rng, v, step_sd, free)
        lp_prop = logprior(prop)
        if np.isfinite(lp_prop):
            ll_prop, st_prop = loglik_fn(prop, rng)
            if ll_prop > -np.inf:
                cur = ll + lp
                ratio = (ll_prop + lp_prop) - cur if cur > -np.inf else np.inf
                if np.log(rng.random()) < ratio:
                    v, ll, lp, st = prop, ll_prop, lp_prop, st_prop
                    acc[k] = True
        U[k] = v
        Nat[k] = to_natural(v)
        L[k] = ll
        if keep_states:
            states.append(st)
    names = names or [f"theta[{j}]" for j in range(D)]
    return Chain(list(names), U, Nat, L, acc, states)


def _natural(d):
    def f(v):
        return Theta.from_unconstrained(v, d).to_natural()
    return f


def filter_loglik_fn(model, y, method="csmc", P=128, keep_states=False, **kw):
    """Log-likelihood function over unconstrained theta for PMMH.

    ``method="exact"`` uses the forward algorithm (small N only). With
    ``keep_states`` a terminal state is drawn from the filter's final
    particle approximation and returned alongside the estimate.
    """
    d = model.d

    def fn(v, rng):
        theta = Theta.from_unconstrained(v, d)
        if method == "exact":
            return forward_algorithm(model, y, theta), None
        system = run_filter(method, model, y, P, rng, theta=theta, **kw)
        if not keep_states or system.collapsed:
            return system.loglik, None
        p = int(multinomial_resample(rng, normalise_log_weights(system.final_log_weights), 1)[0])
        return system.loglik, system.states[-1][p].copy()

    return fn


def run_pmmh(rng, model, y, prior=None, filter="csmc", P=128, iters=1000, step_sd=0.2,
             theta0=None, free=None, keep_states=False, **kw):
    """Particle marginal Metropolis-Hastings over all of theta (or ``free``)."""
    prior = prior or Prior()
    theta0 = model.theta if theta0 is None else theta0
    fn = filter_loglik_fn(model, y, filter, P, keep_states, **kw)
    return run_mh(rng, fn, prior.logpdf, theta0.to_unconstrained(), iters, step_sd, free,
                  _natural(model.d), theta0.names(), keep_states)


def run_static_mh(rng, y, W, prior=None, method="exact", P=20, iters=1000, step_sd=0.2,
                  v0=None):
    """MH (exact or translated Poisson) or PMMH (naive / alive) on the static
    model, over (beta, logit rho)."""
    from .static import static_loglik_fn

    prior = prior or Prior(beta_sd=1.0)
    d = np.asarray(W).shape[1]
    v0 = np.zeros(d + 1) if v0 is None else np.asarray(v0, dtype=float)
    names = [f"beta[{k}]" for k in range(d)] + ["rho"]

    def nat(v):
        return np.concatenate([v[:-1], [expit(v[-1])]])

    return run_mh(rng, static_loglik_fn(y, W, method, P), prior.logpdf, v0, iters, step_sd,
                  None, nat, names)
