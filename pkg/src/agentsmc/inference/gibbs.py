"""Gibbs samplers over SIS agent trajectories.

A trajectory is a (T+1, N) uint8 array. The kernels are single-site
updates, count-preserving swap moves, and forward-backward block updates
of a subset of agents over all times.
"""
import numpy as np
from scipy.special import logsumexp

from ..exact_oracle import enumerate_states
from ..model import Theta
from ..sis_model import bernoulli_logpmf, obs_log_table, sis_complete_loglik, sis_probs
from .mcmc import Chain, Prior, rw_propose

MAX_BLOCK = 10


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _probs_of(x, agents, rates, network):
    """Infection probabilities of ``agents`` given configuration ``x``."""
    if network.full:
        tot = float(x.sum())
        infn = np.full(agents.size, tot) if network.include_self else tot - x[agents]
    else:
        infn = network.adjacency[agents] @ x.astype(float)
    frac = infn / network.degree[agents]
    return np.where(x[agents] == 1, 1.0 - rates.gam[agents], rates.lam[agents] * frac)


class GibbsContext:
    """Quantities reused across updates for fixed (model, theta, y)."""

    def __init__(self, model, theta, y):
        self.model = model
        self.theta = theta
        self.rates = model.rates(theta)
        self.y = np.asarray(y)
        self.logg = obs_log_table(self.y, model.N, theta.rho)
        net = model.network
        # agents whose next-step probability depends on agent n's state
        self.affected = [np.union1d(net.neighbours(n), [n]) for n in range(model.N)]


def _ctx(ctx, model, theta, y):
    if ctx is not None and ctx.theta is theta and ctx.model is model:
        return ctx
    return GibbsContext(model, theta, y)


def single_site_log_conditional(X, ctx, t, n):
    """Unnormalised log p(x_t^n = v | rest) for v = 0, 1.

    Combines the agent's own transition (alpha0 at t = 0), the observation
    at t, and for t < T the next-step transitions of every agent whose
    probability involves x_t^n, namely its neighbours and itself.
    """
    T = X.shape[0] - 1
    rates, net = ctx.rates, ctx.model.network
    a = rates.alpha0[n] if t == 0 else _probs_of(X[t - 1], np.array([n]), rates, net)[0]
    aff = ctx.affected[n] if t < T else None
    out = np.zeros(2)
    x = X[t].copy()
    rest = int(x.sum()) - int(x[n])
    for v in (0, 1):
        x[n] = v
        lp = _log(a) if v else _log(1.0 - a)
        lp = lp + ctx.logg[t, rest + v]
        if aff is not None:
            lp = lp + bernoulli_logpmf(X[t + 1][aff], _probs_of(x, aff, rates, net)).sum()
        out[v] = lp
    return out


def gibbs_single_site(rng, X, model, theta, y, t, n, ctx=None):
    """Resample x_t^n from its exact full conditional (in place)."""
    ctx = _ctx(ctx, model, theta, y)
    lc = single_site_log_conditional(X, ctx, t, n)
    m = lc.max()
    p1 = np.exp(lc[1] - m) / np.exp(lc - m).sum()
    X[t, n] = rng.random() < p1
    return X


def swap_log_ratio(X, ctx, t, n0, n1):
    """log MH ratio for turning n0 on and n1 off at time t."""
    T = X.shape[0] - 1
    rates, net = ctx.rates, ctx.model.network
    pair = np.array([n0, n1])
    a = rates.alpha0[pair] if t == 0 else _probs_of(X[t - 1], pair, rates, net)
    with np.errstate(divide="ignore"):
        out = np.log(a[0]) + np.log1p(-a[1]) - np.log(a[1]) - np.log1p(-a[0])
    if t < T:
        xs = X[t].copy()
        xs[n0], xs[n1] = 1, 0
        aff = np.union1d(ctx.affected[n0], ctx.affected[n1])
        nxt = X[t + 1][aff]
        out += (bernoulli_logpmf(nxt, _probs_of(xs, aff, rates, net)).sum()
                - bernoulli_logpmf(nxt, _probs_of(X[t], aff, rates, net)).sum())
    return out


def gibbs_swap(rng, X, model, theta, y, t, ctx=None):
    """Count-preserving swap of one infected and one susceptible agent at t.

    No-op when everyone or no one is infected at t.
    """
    ctx = _ctx(ctx, model, theta, y)
    ones = np.flatnonzero(X[t] == 1)
    zeros = np.flatnonzero(X[t] == 0)
    if ones.size == 0 or zeros.size == 0:
        return X
    n0 = zeros[rng.integers(zeros.size)]
    n1 = ones[rng.integers(ones.size)]
    lr = swap_log_ratio(X, ctx, t, n0, n1)
    if np.log(rng.random()) < lr:
        X[t, n0], X[t, n1] = 1, 0
    return X


def _block_log_potentials(X, ctx, block, t, Z):
    """log phi_t(z', z) for block configurations at t-1 (rows) and t (cols)."""
    rates, net = ctx.rates, ctx.model.network
    others = np.setdiff1d(np.arange(ctx.model.N), block)
    xt = np.repeat(X[t][None], Z.shape[0], axis=0)
    xt[:, block] = Z
    obs = ctx.logg[t, xt.sum(axis=1)]
    if t == 0:
        a = rates.alpha0
        lb = bernoulli_logpmf(Z, a[block]).sum(axis=1)
        lo = bernoulli_logpmf(X[0][others], a[others]).sum()
        return (lb + lo + obs)[None, :]
    xp = np.repeat(X[t - 1][None], Z.shape[0], axis=0)
    xp[:, block] = Z
    a = sis_probs(xp, rates, net)
    l1, l0 = _log(a[:, block]), _log(1.0 - a[:, block])
    lb = np.where(Z[None, :, :] == 1, l1[:, None, :], l0[:, None, :]).sum(axis=2)
    lo = bernoulli_logpmf(X[t][others][None, :], a[:, others]).sum(axis=1)
    return lb + lo[:, None] + obs[None, :]


def gibbs_block(rng, X, model, theta, y, block, ctx=None):
    """Draw x_{0:T}^b exactly given the other agents and y by forward
    filtering, backward sampling over the 2^|b| block configurations."""
    block = np.asarray(block, dtype=np.int64)
    if block.size == 0:
        return X
    if block.size > MAX_BLOCK:
        raise ValueError(f"block size limited to {MAX_BLOCK}")
    ctx = _ctx(ctx, model, theta, y)
    T = X.shape[0] - 1
    Z = enumerate_states(block.size, 2).astype(np.uint8)
    F = np.zeros((T + 1, Z.shape[0]))
    F[0] = _block_log_potentials(X, ctx, block, 0, Z)[0]
    for t in range(1, T + 1):
        phi = _block_log_potentials(X, ctx, block, t, Z)
        F[t] = logsumexp(F[t - 1][:, None] + phi, axis=0)

    def draw(lw):
        w = np.exp(lw - lw.max())
        c = np.cumsum(w)
        return min(int(np.searchsorted(c, rng.random() * c[-1], side="right")), w.size - 1)

    z = draw(F[T])
    X[T, block] = Z[z]
    for t in range(T, 0, -1):
        phi = _block_log_potentials(X, ctx, block, t, Z)
        z = draw(F[t - 1] + phi[:, z])
        X[t - 1, block] = Z[z]
    return X


def swap_sweep(rng, X, model, theta, y, ctx=None):
    """N random swap updates at every time step."""
    ctx = _ctx(ctx, model, theta, y)
    for t in range(X.shape[0]):
        for _ in range(model.N):
            gibbs_swap(rng, X, model, theta, y, t, ctx)
    return X


def scan_sweep(rng, X, model, theta, y, block_size=1, ctx=None):
    """Systematic scan: single sites over (t, n), or blocks of agents."""
    ctx = _ctx(ctx, model, theta, y)
    if block_size <= 1:
        for t in range(X.shape[0]):
            for n in range(model.N):
                gibbs_single_site(rng, X, model, theta, y, t, n, ctx)
        return X
    for lo in range(0, model.N, block_size):
        gibbs_block(rng, X, model, theta, y, np.arange(lo, min(lo + block_size, model.N)), ctx)
    return X


def initial_trajectory(rng, y, N):
    """A trajectory consistent with y: each step infects exactly y_t agents."""
    y = np.asarray(y)
    X = np.zeros((y.size, N), np.uint8)
    for t, v in enumerate(y):
        X[t, rng.permutation(N)[:v]] = 1
    return X


def run_gibbs(rng, model, y, prior=None, iters=1000, mixture=(0.5, 0.5), step_sd=0.08,
              block_size=1, theta0=None, X0=None, free=None, keep_trajectories=False):
    """Alternate a random-walk MH step on theta given the trajectory with a
    trajectory update: N swaps per time step with probability mixture[0],
    otherwise a systematic scan (single-site or blocks of ``block_size``).

    ``free=[]`` keeps theta fixed and yields a pure trajectory sampler.
    """
    prior = prior or Prior()
    y = np.asarray(y)
    theta = model.theta if theta0 is None else theta0
    d = model.d
    v = theta.to_unconstrained()
    X = initial_trajectory(rng, y, model.N) if X0 is None else np.array(X0, np.uint8)
    ctx = GibbsContext(model, theta, y)
    ll = sis_complete_loglik(X, y, ctx.rates, model.network, theta.rho)
    w_swap = mixture[0] / float(sum(mixture))
    D = v.size
    U, Nat = np.zeros((iters, D)), np.zeros((iters, D))
    L, acc = np.zeros(iters), np.zeros(iters, bool)
    trajs = []
    update_theta = free is None or len(free) > 0
    for k in range(iters):
        if update_theta:
            prop = rw_propose(rng, v, step_sd, free)
            lp_prop = prior.logpdf(prop)
            th_prop = Theta.from_unconstrained(prop, d)
            r_prop = model.rates(th_prop)
            ll_prop = sis_complete_loglik(X, y, r_prop, model.network, th_prop.rho)
            if np.log(rng.random()) < (ll_prop + lp_prop) - (ll + prior.logpdf(v)):
                v, theta, ll = prop, th_prop, ll_prop
                ctx = GibbsContext(model, theta, y)
                acc[k] = True
        if rng.random() < w_swap:
            swap_sweep(rng, X, model, theta, y, ctx)
        else:
            scan_sweep(rng, X, model, theta, y, block_size, ctx)
        ll = sis_complete_loglik(X, y, ctx.rates, model.network, theta.rho)
        U[k] = v
        Nat[k] = theta.to_natural()
        L[k] = ll
        if keep_trajectories:
            trajs.append(X.copy())
    return Chain(theta.names(), U, Nat, L, acc, trajs, X)
