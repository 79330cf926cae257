"""Brute-force helpers shared by the test modules."""
import numpy as np
from scipy.special import logsumexp

from agentsmc.exact_oracle import exact_trajectory_posterior, forward_algorithm
from agentsmc.model import Theta


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def path_code(X):
    """Little-endian code of a (T+1, N) binary trajectory."""
    bits = np.asarray(X, dtype=np.int64).ravel()
    return int((bits << np.arange(bits.size)).sum())


def trajectory_law(model, y):
    """Exact posterior over SIS trajectories indexed by ``path_code``."""
    paths, probs = exact_trajectory_posterior(model, y)
    law = np.zeros(probs.size)
    for p, w in zip(paths, probs):
        law[path_code(p)] += w
    return paths, probs, law


def kernel_invariance_tv(rng, model, y, kernel, n):
    """Draw n trajectories from the exact posterior, apply ``kernel`` once to
    each, and return the TV distance between the output histogram and the
    exact law, together with the TV of the input draws (the noise floor)."""
    paths, probs, law = trajectory_law(model, y)
    pick = rng.choice(probs.size, size=n, p=probs)
    before = np.bincount([path_code(paths[k]) for k in pick], minlength=law.size) / n
    after = np.zeros(law.size)
    for k in pick:
        X = paths[k].copy()
        kernel(rng, X)
        after[path_code(X)] += 1
    return tv(after / n, law), tv(before, law)


def chain_tv(rng, model, y, kernel, sweeps, X0):
    """Run ``kernel`` repeatedly from X0 and compare visit frequencies to the law."""
    _, _, law = trajectory_law(model, y)
    X = X0.copy()
    counts = np.zeros(law.size)
    for _ in range(sweeps):
        kernel(rng, X)
        counts[path_code(X)] += 1
    return tv(counts / sweeps, law)


def grid_posterior_mean(model, y, prior, free, grids):
    """Posterior means of the free unconstrained coordinates by quadrature on
    a tensor grid, other coordinates fixed at the model's values. Returns
    means on the natural scale (rho through the logistic)."""
    v0 = model.theta.to_unconstrained()
    mesh = np.meshgrid(*grids, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    lp = np.empty(len(pts))
    nat = np.empty((len(pts), len(free)))
    d = model.d
    for k, p in enumerate(pts):
        v = v0.copy()
        v[free] = p
        lp[k] = forward_algorithm(model, y, Theta.from_unconstrained(v, d)) + prior.logpdf(v)
        nat[k] = Theta.from_unconstrained(v, d).to_natural()[free]
    w = np.exp(lp - logsumexp(lp))
    return w @ nat, w


def batch_means_se(x, batches=50):
    x = np.asarray(x, dtype=float)
    m = x.size // batches
    b = x[:m * batches].reshape(batches, m).mean(axis=1)
    return float(b.std(ddof=1) / np.sqrt(batches))
