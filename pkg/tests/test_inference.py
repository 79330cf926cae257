import numpy as np
import pytest
from scipy import stats
from scipy.special import expit, logit

from agentsmc.distributions import poibin_pmf
from agentsmc.exact_oracle import enumerate_states, state_index
from agentsmc.inference import (Prior, gibbs_block, gibbs_single_site, gibbs_swap,
                                posterior_predictive, run_gibbs, run_mh, rw_propose,
                                scan_sweep, single_site_log_conditional, static_alive_estimator,
                                static_count_posterior, static_marginal_likelihood,
                                static_naive_mc, static_posterior_sample, static_reference_setup)
from agentsmc.inference.gibbs import GibbsContext
from agentsmc.inference.static import static_loglik_fn
from agentsmc.model import Network, Theta
from agentsmc.oracle_check import simulate, small_model
from agentsmc.sis_model import sis_complete_loglik
from agentsmc.smc import bif_sis, run_filter
from agentsmc.smc.core import sample_path

from oracles import kernel_invariance_tv, trajectory_law, tv, path_code


def brute_static(y, alpha, rho):
    """sum over all configurations of prod Ber * Bin(y; I, rho)."""
    X = enumerate_states(alpha.size, 2)
    p = np.prod(np.where(X == 1, alpha, 1 - alpha), axis=1)
    return float(np.sum(p * stats.binom.pmf(y, X.sum(axis=1), rho)))


def test_static_frozen_value():
    alpha = np.array([0.1, 0.2, 0.3])
    assert brute_static(1, alpha, 0.5) == pytest.approx(0.24725, abs=1e-15)
    for m in ("exact", "thinning"):
        assert np.exp(static_marginal_likelihood(1, alpha, 0.5, m)) == pytest.approx(0.24725,
                                                                                   abs=1e-14)


def test_static_rho_one_and_out_of_range():
    alpha = np.array([0.2, 0.7, 0.4, 0.9])
    for y in range(5):
        assert static_marginal_likelihood(y, alpha, 1.0) == pytest.approx(
            np.log(poibin_pmf(alpha)[y]))
    assert static_marginal_likelihood(5, alpha, 0.3) == -np.inf


def test_transpoi_likelihood_close_for_large_n():
    rng = np.random.default_rng(0)
    W, x, y = static_reference_setup(rng, N=1000)
    a = expit(0.3 * W[:, 0])
    ex = static_marginal_likelihood(y, a, 0.8, "exact")
    tp = static_marginal_likelihood(y, a, 0.8, "transpoi")
    assert abs(ex - tp) < 0.05


def test_naive_mc_unbiased_and_zero():
    rng = np.random.default_rng(1)
    alpha = np.array([0.3, 0.5, 0.2, 0.6])
    exact = np.exp(static_marginal_likelihood(3, alpha, 0.7))
    v = np.array([static_naive_mc(rng, 3, alpha, 0.7, 5) for _ in range(20000)])
    assert abs(v.mean() - exact) < 3 * v.std(ddof=1) / np.sqrt(v.size)
    assert static_naive_mc(rng, 5, alpha, 0.7, 10) == 0.0
    frac = static_naive_mc(np.random.default_rng(2), 0, alpha, 1.0, 1000)
    assert 0 < frac < 1


def test_alive_estimator():
    rng = np.random.default_rng(3)
    alpha = np.array([0.1, 0.3, 0.2, 0.4, 0.15])
    exact = np.exp(static_marginal_likelihood(3, alpha, 0.6))
    v = np.array([static_alive_estimator(rng, 3, alpha, 0.6, 4)[0] for _ in range(20000)])
    assert np.all(v > 0)
    assert abs(v.mean() - exact) < 3 * v.std(ddof=1) / np.sqrt(v.size)
    est, R = static_alive_estimator(rng, 0, alpha, 0.6, 7)
    assert R == 7
    with pytest.raises(ValueError):
        static_alive_estimator(rng, 5, np.array([0.5, 0.5, 0.5, 0.5, 0.0]), 0.6, 4)


def test_static_loglik_variance_delta_method():
    rng = np.random.default_rng(4)
    W, x, y = static_reference_setup(np.random.default_rng(0))
    a = expit(0.3 * W[:, 0])
    g = stats.binom.pmf(y, np.arange(a.size + 1), 0.8)
    pb = poibin_pmf(a)
    want = ((pb * g * g).sum() / (pb * g).sum() ** 2 - 1) / 20
    fn = static_loglik_fn(y, W, "naive", 20)
    v = np.array([fn(np.array([0.3, logit(0.8)]), rng)[0] for _ in range(4000)])
    assert np.var(v) == pytest.approx(want, rel=0.15)


def test_static_loglik_variance_near_0_3_at_dgp():
    rng = np.random.default_rng(5)
    W, x, y = static_reference_setup(np.random.default_rng(0))
    fn = static_loglik_fn(y, W, "naive", 20)
    v = np.array([fn(np.array([0.3, logit(0.8)]), rng)[0] for _ in range(4000)])
    assert 0.15 <= np.var(v) <= 0.6


def test_static_posterior_sample_tv():
    rng = np.random.default_rng(6)
    alpha = np.array([0.2, 0.5, 0.7, 0.4])
    y, rho = 2, 0.6
    X = enumerate_states(4, 2)
    p = np.prod(np.where(X == 1, alpha, 1 - alpha), axis=1) * stats.binom.pmf(y, X.sum(1), rho)
    p /= p.sum()
    n = 100_000
    counts = np.zeros(16)
    for _ in range(n):
        counts[state_index(static_posterior_sample(rng, y, alpha, rho))] += 1
    assert tv(counts / n, p) < 0.02


def test_static_posterior_extremes():
    rng = np.random.default_rng(7)
    alpha = np.array([0.2, 0.5, 0.7])
    assert static_posterior_sample(rng, 2, alpha, 1.0).sum() == 2
    assert static_posterior_sample(rng, 3, alpha, 0.4).tolist() == [1, 1, 1]
    with pytest.raises(ValueError):
        static_count_posterior(3, np.array([0.2, 0.0, 0.7]), 0.5)


def test_prior_logpdf():
    pr = Prior()
    v = np.array([0.5, -1.0, 0.3])
    want = stats.norm.logpdf(v[:2], 0, 3).sum() + np.log(expit(0.3) * (1 - expit(0.3)))
    assert pr.logpdf(v) == pytest.approx(want)
    with pytest.raises(ValueError):
        Prior(beta_sd=0)


def test_rw_propose():
    rng = np.random.default_rng(8)
    v = np.array([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(rw_propose(rng, v, 0.0), v)
    np.testing.assert_array_equal(rw_propose(rng, v, 1.0, free=[1])[[0, 2]], v[[0, 2]])
    n = 100_000
    draws = np.array([rw_propose(rng, v, 0.2) for _ in range(n)]) - v
    s2 = draws.var(axis=0, ddof=1)
    se = 0.04 * np.sqrt(2 / (n - 1))
    assert np.all(np.abs(s2 - 0.04) < 3 * se)


def test_mh_rejects_minus_infinity():
    rng = np.random.default_rng(9)
    calls = {"n": 0}

    def ll(v, rng):
        calls["n"] += 1
        return (0.0 if calls["n"] == 1 else -np.inf), None

    ch = run_mh(rng, ll, lambda v: 0.0, np.zeros(2), 200, 0.5)
    assert not ch.accept.any()
    assert np.all(ch.unconstrained == 0.0)


def _tiny(seed, N=3, T=2):
    rng = np.random.default_rng(seed)
    m = small_model(rng, N, "sis")
    _, y = simulate(rng, m, T)
    return m, y


def test_single_site_conditional_matches_enumeration():
    m, y = _tiny(10)
    ctx = GibbsContext(m, m.theta, y)
    rates = m.rates()
    rng = np.random.default_rng(0)
    paths, probs, _ = trajectory_law(m, y)
    for _ in range(10):
        X = paths[rng.choice(probs.size, p=probs)].copy()
        for t in range(3):
            for n in range(3):
                lc = single_site_log_conditional(X, ctx, t, n)
                full = []
                for v in (0, 1):
                    Z = X.copy()
                    Z[t, n] = v
                    full.append(sis_complete_loglik(Z, y, rates, m.network, m.theta.rho))
                full = np.array(full)
                if np.all(np.isfinite(full)):
                    assert lc[1] - lc[0] == pytest.approx(full[1] - full[0], abs=1e-10)
                else:
                    np.testing.assert_array_equal(np.isfinite(lc), np.isfinite(full))


def test_single_site_forces_full_infection():
    m = small_model(np.random.default_rng(11), 3, "sis")
    y = np.array([1, 3, 1])
    X = np.array([[1, 0, 0], [1, 1, 0], [1, 0, 0]], np.uint8)
    gibbs_single_site(np.random.default_rng(0), X, m, m.theta, y, 1, 2)
    assert X[1, 2] == 1


def test_swap_exchangeable_always_accepts():
    N = 4
    W = np.ones((N, 1))
    from agentsmc.model import ModelSpec
    m = ModelSpec(W, Network.complete(N), Theta([-0.5], [0.3], [-0.2], 0.7), "sis")
    # a single time step, so no neighbouring transitions break the symmetry
    y = np.array([2])
    rng = np.random.default_rng(0)
    X = np.array([[1, 1, 0, 0]], np.uint8)
    for _ in range(20):
        before = X[0].copy()
        gibbs_swap(rng, X, m, m.theta, y, 0)
        assert (X[0] != before).sum() == 2


def test_swap_all_ones_noop():
    m, _ = _tiny(12)
    y = np.array([0, 3, 0])
    X = np.array([[0, 0, 0], [1, 1, 1], [0, 0, 0]], np.uint8)
    gibbs_swap(np.random.default_rng(0), X, m, m.theta, y, 1)
    assert X[1].tolist() == [1, 1, 1]


def test_block_guard_and_empty():
    m, y = _tiny(13)
    X = np.zeros((3, 3), np.uint8)
    X[:, 0] = 1
    before = X.copy()
    gibbs_block(np.random.default_rng(0), X, m, m.theta, y, [])
    np.testing.assert_array_equal(X, before)
    big = small_model(np.random.default_rng(0), 11, "sis")
    with pytest.raises(ValueError):
        gibbs_block(np.random.default_rng(0), np.ones((2, 11), np.uint8), big, big.theta,
                    np.array([1, 1]), np.arange(11))


@pytest.mark.parametrize("name", ["single", "swap", "block1", "block_all"])
def test_kernel_invariance_quick(name):
    m, y = _tiny(14)
    th = m.theta
    ctx = GibbsContext(m, th, y)
    kernels = {
        "single": lambda r, X: scan_sweep(r, X, m, th, y, 1, ctx),
        "swap": lambda r, X: [gibbs_swap(r, X, m, th, y, t, ctx) for t in range(3)],
        "block1": lambda r, X: [gibbs_block(r, X, m, th, y, [n], ctx) for n in range(3)],
        "block_all": lambda r, X: gibbs_block(r, X, m, th, y, [0, 1, 2], ctx),
    }
    after, floor = kernel_invariance_tv(np.random.default_rng(1), m, y, kernels[name], 20000)
    assert after < max(0.06, 1.5 * floor)


def test_run_gibbs_zero_iterations_returns_initial():
    m, y = _tiny(15)
    X0 = np.array([[1, 0, 0], [1, 1, 0], [0, 1, 1]], np.uint8)
    ch = run_gibbs(np.random.default_rng(0), m, y, iters=0, X0=X0, free=[])
    np.testing.assert_array_equal(ch.last, X0)
    assert ch.loglik.size == 0


def test_run_gibbs_fixed_theta_and_moves():
    m, y = _tiny(16)
    ch = run_gibbs(np.random.default_rng(0), m, y, iters=50, free=[], keep_trajectories=True)
    assert not ch.accept.any()
    np.testing.assert_allclose(ch.natural, np.tile(m.theta.to_natural(), (50, 1)))
    ch2 = run_gibbs(np.random.default_rng(0), m, y, iters=200, free=[6])
    assert 0 < ch2.acceptance_rate < 1
    assert np.ptp(ch2.natural[:, 6]) > 0 and np.ptp(ch2.natural[:, 0]) == 0


def test_predictive_shapes_and_empty():
    m, y = _tiny(17, N=6, T=8)
    th = [m.theta] * 20
    st = [np.zeros(6, np.uint8)] * 20
    pred = posterior_predictive(np.random.default_rng(0), th, st, m, 8, 8)
    assert pred.times.size == 0 and list(pred.rows()) == []
    st = [np.ones(6, np.uint8)] * 20
    pred = posterior_predictive(np.random.default_rng(0), th, st, m, 3, 8)
    assert pred.quantiles.shape == (5, 3)
    assert np.all(np.diff(pred.quantiles, axis=1) >= 0)


def test_predictive_deterministic_recovery():
    from agentsmc.model import ModelSpec
    N = 5
    m = ModelSpec(np.ones((N, 1)), Network.complete(N), Theta([0.0], [-40.0], [40.0], 1.0), "sis")
    st = [np.array([1, 1, 0, 1, 0], np.uint8)] * 10
    pred = posterior_predictive(np.random.default_rng(0), [m.theta] * 10, st, m, 0, 3)
    np.testing.assert_array_equal(pred.draws, 0)


def test_predictive_coverage():
    rng = np.random.default_rng(18)
    inside = total = 0
    for rep in range(50):
        m = small_model(rng, 20, "sis")
        X, y = simulate(rng, m, 30)
        t_obs = 15
        psi = bif_sis(y[:t_obs + 1], m.rates(), m.theta.rho, "exact")
        s = run_filter("csmc", m, y[:t_obs + 1], 128, rng, psi=psi)
        if s.collapsed:
            continue
        states = [sample_path(rng, s)[-1] for _ in range(200)]
        pred = posterior_predictive(rng, [m.theta] * 200, states, m, t_obs, 30)
        lo, hi = pred.quantiles[:, 0], pred.quantiles[:, 2]
        fut = y[t_obs + 1:]
        inside += int(np.sum((fut >= lo) & (fut <= hi)))
        total += fut.size
    assert inside / total >= 0.8
