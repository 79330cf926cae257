"""Single-time-step model: X^n ~ Ber(alpha^n), Y | X ~ Bin(I(X), rho)."""
import numpy as np
from scipy import stats
from scipy.special import expit, logsumexp

from .. import kernels
from ..distributions import condber_sample, condber_swap_step, poibin_pmf, transpoi_pmf


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def static_marginal_likelihood(y, alpha, rho, method="exact"):
    """log p(y) = log sum_i PoiBin(i; alpha) Bin(y; i, rho).

    ``thinning`` uses the identity Y ~ PoiBin(rho * alpha); ``transpoi``
    swaps the PoiBin for its translated Poisson approximation.
    """
    alpha = np.asarray(alpha, dtype=float)
    N = alpha.size
    if y < 0 or y > N:
        return -np.inf
    if method == "thinning":
        return float(_log(poibin_pmf(rho * alpha)[y]))
    if method == "exact":
        pmf = poibin_pmf(alpha)
    elif method == "transpoi":
        pmf = transpoi_pmf(alpha)
    else:
        raise ValueError(f"unknown method {method!r}")
    i = np.arange(y, N + 1)
    return float(logsumexp(_log(pmf[y:]) + stats.binom.logpmf(y, i, rho)))


def static_naive_mc(rng, y, alpha, rho, P):
    """P^-1 sum_p Bin(y; I(X_p), rho) with X_p drawn from the prior; may be 0."""
    alpha = np.asarray(alpha, dtype=float)
    counts = (rng.random((P, alpha.size)) < alpha).sum(axis=1)
    return float(np.mean(stats.binom.pmf(y, counts, rho)))


def static_alive_estimator(rng, y, alpha, rho, P, batch=None, max_draws=10 ** 8):
    """Alive estimator: draw until P configurations have I(X) >= y.

    With R the total number of draws, returns
    ((R-1)^-1 sum_{p<R} Bin(y; I(X_p), rho), R). The last draw is excluded,
    which is what makes the estimator unbiased.
    """
    if P < 2:
        raise ValueError("the alive estimator needs P >= 2")
    alpha = np.asarray(alpha, dtype=float)
    if y > int((alpha > 0).sum()):
        raise ValueError("observation is unattainable: P(I >= y) = 0")
    batch = batch or max(4 * P, 64)
    got, total, draws = 0, 0.0, 0
    while True:
        counts = (rng.random((batch, alpha.size)) < alpha).sum(axis=1)
        hit = np.flatnonzero(counts >= y)
        if got + hit.size >= P:
            last = hit[P - got - 1]
            used = counts[:last]
            total += stats.binom.pmf(y, used, rho).sum()
            draws += last + 1
            return float(total / (draws - 1)), draws
        got += hit.size
        total += stats.binom.pmf(y, counts, rho).sum()
        draws += batch
        if draws > max_draws:
            raise RuntimeError("alive estimator exceeded the draw budget")


def static_count_posterior(y, alpha, rho, method="exact"):
    """p(i | y) on 0..N, proportional to PoiBin(i) Bin(y; i, rho)."""
    alpha = np.asarray(alpha, dtype=float)
    N = alpha.size
    pmf = poibin_pmf(alpha) if method == "exact" else transpoi_pmf(alpha)
    lp = _log(pmf) + stats.binom.logpmf(y, np.arange(N + 1), rho)
    if lp.max() == -np.inf:
        raise ValueError("observation has zero probability")
    return np.exp(lp - logsumexp(lp))


def static_posterior_sample(rng, y, alpha, rho, method="exact"):
    """Draw x ~ p(x | y): i from p(i | y), then x from CondBer(alpha, i)."""
    alpha = np.asarray(alpha, dtype=float)
    post = static_count_posterior(y, alpha, rho, method)
    i = int(kernels.categorical_log_rows(_log(post)[None, :], rng.random(1))[0])
    return condber_sample(rng, alpha, i)


def static_simulate(rng, W, beta, rho):
    alpha = expit(np.asarray(W) @ np.atleast_1d(beta))
    x = (rng.random(alpha.size) < alpha).astype(np.uint8)
    return x, int(rng.binomial(int(x.sum()), rho)), alpha


def static_reference_setup(rng, N=1000, beta=0.3, rho=0.8):
    """Covariates w ~ N(4, 1), alpha = logistic(beta w) and one observation."""
    W = rng.normal(4.0, 1.0, size=(N, 1))
    x, y, alpha = static_simulate(rng, W, [beta], rho)
    return W, x, y


def static_loglik_fn(y, W, method="exact", P=20):
    """Log-likelihood (or log of an unbiased estimate) as a function of
    the unconstrained vector (beta..., logit rho)."""
    W = np.asarray(W, dtype=float)

    def fn(v, rng):
        alpha = expit(W @ v[:-1])
        rho = float(expit(v[-1]))
        if method in ("exact", "transpoi", "thinning"):
            return static_marginal_likelihood(y, alpha, rho, method), None
        if method == "naive":
            est = static_naive_mc(rng, y, alpha, rho, P)
        elif method == "alive":
            est, _ = static_alive_estimator(rng, y, alpha, rho, P)
        else:
            raise ValueError(f"unknown method {method!r}")
        return (float(np.log(est)) if est > 0 else -np.inf), None

    return fn


def static_single_site(rng, x, n, alpha, y, rho):
    """Exact full-conditional update of agent n given the others and y."""
    rest = int(x.sum()) - int(x[n])
    l1 = _log(alpha[n]) + stats.binom.logpmf(y, rest + 1, rho)
    l0 = _log(1.0 - alpha[n]) + stats.binom.logpmf(y, rest, rho)
    m = max(l0, l1)
    p1 = 0.0 if m == -np.inf else np.exp(l1 - m) / (np.exp(l0 - m) + np.exp(l1 - m))
    x[n] = rng.random() < p1
    return x


def static_gibbs_sweep(rng, x, alpha, y, rho):
    """Equal mixture of N random swaps or one systematic single-site scan."""
    N = alpha.size
    if rng.random() < 0.5:
        for _ in range(N):
            x = condber_swap_step(rng, x, alpha)
    else:
        for n in range(N):
            x = static_single_site(rng, x, n, alpha, y, rho)
    return x
