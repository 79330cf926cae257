import json

import numpy as np
import pytest
from scipy.special import expit

from agentsmc.exact_oracle import enumerate_states, transition_row
from agentsmc.model import (AgentRates, ModelSpec, Network, Theta, agent_rates, cluster_by_rates,
                            load_model, reference_setup, save_model)
from agentsmc.oracle_check import small_model
from agentsmc.sir_model import (I, R, S, nu, sir_coarse_probs, sir_probs, sir_simulate,
                                sir_summary_transition_coarse, sir_summary_transition_exact,
                                sir_infected_marginal_coarse)
from agentsmc.sis_model import (homogeneous_count_step, obs_logpmf, sis_coarse_probs, sis_probs,
                                sis_simulate)


def const_rates(N, lam, gam, a0=0.1):
    return AgentRates(np.full(N, a0), np.full(N, lam), np.full(N, gam))


def test_logistic_frozen():
    r = agent_rates(Theta([0.3], [0.3], [0.3], 0.5), np.array([[4.0]]))
    assert r.alpha0[0] == pytest.approx(0.7685247834990175, abs=1e-12)
    r0 = agent_rates(Theta([0.0], [0.0], [0.0], 0.5), np.ones((3, 1)))
    np.testing.assert_array_equal(r0.lam, 0.5)


def test_reference_initial_probability():
    m = reference_setup(np.random.default_rng(0), 50)
    W = m.W.copy()
    W[:, 1] = 0.0
    r = agent_rates(m.theta, W)
    np.testing.assert_allclose(r.alpha0, 1.0 / 50)


def test_sis_probs_hand_value():
    rates = AgentRates(np.zeros(3), np.array([0.1, 0.4, 0.3]), np.array([0.2, 0.2, 0.2]))
    a = sis_probs(np.array([1, 0, 0]), rates, Network.complete(3))
    assert a[1] == pytest.approx(0.2)
    assert a[0] == pytest.approx(0.8)
    assert np.all(sis_probs(np.zeros(3, np.uint8), rates, Network.complete(3)) == 0)


def test_sis_coarse_probs():
    rates = AgentRates(np.zeros(4), np.array([0.1, 0.2, 0.3, 0.4]), np.array([0.5, 0.1, 0.1, 0.1]))
    assert np.all(sis_coarse_probs(np.zeros(4), rates) == 0.0)
    x = np.array([1, 0, 1, 0])
    a = sis_coarse_probs(x, rates)
    np.testing.assert_allclose(a, [1 - 0.2, 0.25 * 0.5, 1 - 0.2, 0.25 * 0.5])
    single = rates.with_clusters(np.arange(4))
    np.testing.assert_allclose(sis_coarse_probs(x, single),
                               [0.5, 0.2 * 0.5, 0.9, 0.4 * 0.5])


def test_network_from_edges_and_guards():
    net = Network.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    np.testing.assert_array_equal(net.degree, [1, 2, 2, 1])
    np.testing.assert_allclose(net.infected_fraction(np.array([0, 1, 0, 0])), [1, 0, 0.5, 0])
    with pytest.raises(ValueError):
        Network.from_edges(3, [(0, 0)])
    with pytest.raises(ValueError):
        Network.from_edges(3, [(0, 1)])
    with pytest.raises(ValueError):
        Network.complete(1)
    assert Network.complete(4, include_self=True).degree[0] == 4


def test_obs_logpmf():
    assert obs_logpmf(2, 3, 0.5) == pytest.approx(np.log(0.375))
    assert obs_logpmf(0, 0, 0.3) == 0.0
    assert obs_logpmf(3, 2, 0.9) == -np.inf


def test_theta_round_trip():
    th = Theta([-1.0, 0.3], [0.2, 1.0], [-0.5, 0.1], 0.7)
    back = Theta.from_unconstrained(th.to_unconstrained(), 2)
    np.testing.assert_allclose(back.to_natural(), th.to_natural())
    assert len(th.names()) == 7


def test_model_json_round_trip(tmp_path):
    m = small_model(np.random.default_rng(1), 5, "sir")
    save_model(m, tmp_path / "m.json")
    m2 = load_model(tmp_path / "m.json")
    assert m2.kind == "sir" and m2.N == 5
    np.testing.assert_allclose(m2.W, m.W)
    np.testing.assert_allclose(m2.theta.to_natural(), m.theta.to_natural())
    json.loads((tmp_path / "m.json").read_text())


def test_cluster_by_rates_single_and_mean():
    rates = agent_rates(Theta([0.0, 1.0], [0.0, 1.0], [0.0, -1.0], 0.5),
                        np.column_stack([np.ones(10), np.linspace(-2, 2, 10)]))
    one = rates.with_clusters(cluster_by_rates(rates, 1))
    assert one.K == 1
    assert one.lam_bar[0] == pytest.approx(rates.lam.mean())
    two = rates.with_clusters(cluster_by_rates(rates, 2))
    assert two.K == 2
    for k in range(2):
        assert two.lam_bar[k] == pytest.approx(rates.lam[two.labels == k].mean())


def test_sis_simulate_full_observation():
    m = small_model(np.random.default_rng(2), 6, "sis")
    m = m.with_theta(Theta(m.theta.beta0, m.theta.beta_lambda, m.theta.beta_gamma, 1.0))
    X, y = sis_simulate(np.random.default_rng(3), m, 20)
    np.testing.assert_array_equal(y, X.sum(axis=1))


def test_reference_regression_lock():
    from agentsmc.cli import derive_rng

    rng = derive_rng(1, "simulate")
    m = reference_setup(rng, 100)
    X, y = sis_simulate(rng, m, 90)
    assert y.size == 91
    assert y[-1] > 0
    np.testing.assert_array_equal(y[::10], [1, 2, 5, 14, 23, 18, 22, 27, 22, 21])


def test_homogeneous_count_step_law():
    rng = np.random.default_rng(0)
    N, s, i, lam, gam = 10, 6, 4, 0.6, 0.3
    draws = np.array([homogeneous_count_step(rng, s, i, lam, gam, N)[1] for _ in range(20000)])
    from agentsmc.distributions import sumbin_pmf
    want = sumbin_pmf(s, lam * i / N, i, 1 - gam)
    got = np.bincount(draws, minlength=N + 1)[:want.size] / draws.size
    assert 0.5 * np.abs(got - want).sum() < 0.02


def test_sir_probs_cases():
    rates = AgentRates(np.zeros(3), np.array([0.3, 0.9, 0.4]), np.array([0.25, 0.5, 0.1]))
    net = Network.complete(3)
    p = sir_probs(np.array([1, 0, 2]), rates, net)
    np.testing.assert_allclose(p[0], [0, 0.75, 0.25])
    np.testing.assert_allclose(p[2], [0, 0, 1])
    np.testing.assert_allclose(p[1], [1 - 0.45, 0.45, 0])
    p2 = sir_probs(np.array([1, 2, 0]), AgentRates(np.zeros(3), np.full(3, 0.4), np.full(3, 0.1)),
                   net)
    np.testing.assert_allclose(p2[2], [0.8, 0.2, 0.0])
    np.testing.assert_allclose(sir_probs(np.zeros(3, np.int8), rates, net)[:, 0], 1.0)
    np.testing.assert_allclose(sir_coarse_probs(np.array([2, 2, 1]), rates)[0], [0, 0, 1])


def test_sir_coarse_deviation_bound():
    N = 7
    rates = const_rates(N, 0.7, 0.2)
    net = Network.complete(N)
    for x in enumerate_states(N, 3)[::37]:
        d = np.abs(sir_probs(x, rates, net) - sir_coarse_probs(x, rates)).max()
        assert d <= 0.7 * (1 / (N - 1) + 1 / N) + 1e-15


def test_sir_recovered_never_leave():
    m = small_model(np.random.default_rng(4), 8, "sir")
    X, _ = sir_simulate(np.random.default_rng(5), m, 30)
    assert np.all(X[0] != R)
    prev, nxt = X[:-1], X[1:]
    assert not np.any((prev == R) & (nxt != R))
    assert not np.any((prev == I) & (nxt == S))
    np.testing.assert_array_equal(nu(np.array([0, 1, 2, 0]), np.array([1, 0, 0, 0])), [1, 2, 2, 0])


def test_sir_summary_coarse_limits():
    out = sir_summary_transition_coarse(4, 0, 0.5, 0.3, 6)
    assert out[4, 0] == 1.0 and out.sum() == pytest.approx(1.0)
    out = sir_summary_transition_coarse(0, 3, 0.5, 0.3, 6)
    from scipy import stats
    np.testing.assert_allclose(out[0, 3::-1], stats.binom.pmf(range(4), 3, 0.3))
    m = sir_summary_transition_coarse(3, 2, 0.6, 0.2, 6).sum(axis=0)
    np.testing.assert_allclose(m[:6], sir_infected_marginal_coarse(3, 2, 0.6, 0.2, 6))


def _coarse_kernel_by_enumeration(x, lam, gam):
    N = x.size
    states = enumerate_states(N, 3)
    frac = (x == I).sum() / N
    s = (x == S).astype(float)
    i = (x == I).astype(float)
    r = (x == R).astype(float)
    p = np.stack([s * (1 - lam * frac), s * lam * frac + i * (1 - gam), i * gam + r], axis=-1)
    law = np.prod(p[np.arange(N)[None, :], states], axis=1)
    out = np.zeros((N + 1, N + 1))
    for st, w in zip(states, law):
        out[(st == S).sum(), (st == I).sum()] += w
    return out


def test_sir_summary_coarse_matches_agent_enumeration():
    x = np.array([0, 0, 1, 2], np.int8)
    np.testing.assert_allclose(sir_summary_transition_coarse(2, 1, 0.7, 0.35, 4),
                               _coarse_kernel_by_enumeration(x, 0.7, 0.35), atol=1e-15)


def test_sir_summary_exact_matches_enumeration():
    m = small_model(np.random.default_rng(7), 4, "sir")
    states = enumerate_states(4, 3)
    x = np.array([0, 1, 0, 2], np.int8)
    law = transition_row(m, x)
    want = np.zeros((5, 5))
    for st, w in zip(states, law):
        want[(st == S).sum(), (st == I).sum()] += w
    np.testing.assert_allclose(sir_summary_transition_exact(x, m.rates(), m.network), want,
                               atol=1e-15)
    dead = np.array([0, 2, 0, 2], np.int8)
    assert sir_summary_transition_exact(dead, m.rates(), m.network)[2, 0] == 1.0


def test_sir_summary_exact_homogeneous_equals_coarse():
    N = 5
    net = Network.complete(N, include_self=True)
    rates = const_rates(N, 0.6, 0.3)
    x = np.array([0, 1, 1, 0, 2], np.int8)
    np.testing.assert_allclose(sir_summary_transition_exact(x, rates, net),
                               sir_summary_transition_coarse(2, 2, 0.6, 0.3, N), atol=1e-15)
