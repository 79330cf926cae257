"""Self-checks of the filters against exact enumeration on small models.

Each suite returns a ``CheckResult``; the CLI prints one line per suite and
exits non-zero if any fails.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exact_oracle import (enumerate_states, exact_bif, forward_algorithm, initial_law,
                           lemma_bounds_check, transition_row)
from .model import ModelSpec, Network, Theta
from .sis_model import obs_log_table
from .smc import bif_sir, bif_sis, run_filter


@dataclass
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: str = ""


def small_model(rng, N, kind="sis", include_self=False, homogeneous=False):
    """A random small model with intercept plus one covariate."""
    if homogeneous:
        W = np.ones((N, 1))
        theta = Theta([rng.normal(-1.0, 0.5)], [rng.normal(0.5, 0.5)], [rng.normal(-0.5, 0.5)],
                      float(rng.uniform(0.5, 0.95)))
    else:
        W = np.column_stack([np.ones(N), rng.standard_normal(N)])
        theta = Theta(rng.normal([-1.0, 0.0], 0.5), rng.normal([0.5, 1.0], 0.5),
                      rng.normal([-0.5, -0.5], 0.5), float(rng.uniform(0.5, 0.95)))
    return ModelSpec(W, Network.complete(N, include_self=include_self), theta, kind)


def simulate(rng, model, T):
    if model.kind == "sis":
        from .sis_model import sis_simulate as sim
    else:
        from .sir_model import sir_simulate as sim
    return sim(rng, model, T)


def _infected(model, X):
    return (np.asarray(X) == 1).sum(axis=-1)


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def path_log_target_over_proposal(model, y, method, path, psi=None):
    """log p(x_{0:T}, y_{0:T}) - log q(x_{0:T}) computed by enumeration.

    The proposal of each filter is written down directly: prior dynamics
    (bpf), locally optimal p(x_t | x_{t-1}, y_t) (apf), or
    f(x_t | x_{t-1}) psi_t normalised over all next configurations (csmc).
    """
    y = np.asarray(y)
    T = y.size - 1
    base = 2 if model.kind == "sis" else 3
    states = enumerate_states(model.N, base)
    logg = obs_log_table(y, model.N, model.theta.rho)
    g_all = logg[:, _infected(model, states)]
    g_path = logg[np.arange(T + 1), _infected(model, path)]
    if method == "bpf":
        return float(g_path.sum())
    if method == "apf":
        out = logsumexp(_log(initial_law(model)) + g_all[0])
        for t in range(1, T + 1):
            out += logsumexp(_log(transition_row(model, path[t - 1])) + g_all[t])
        return float(out)
    if method != "csmc":
        raise ValueError(method)
    if model.kind == "sis":
        summ = _infected(model, states)
        psi_all = [psi.log_psi[t][summ] for t in range(T + 1)]
        psi_path = [psi.log_psi[t][_infected(model, path[t])] for t in range(T + 1)]
    else:
        s_all, i_all = (states == 0).sum(axis=1), (states == 1).sum(axis=1)
        psi_all, psi_path = [], []
        for t in range(T + 1):
            s, i = int((path[t] == 0).sum()), int((path[t] == 1).sum())
            if t == T:
                psi_all.append(psi.log_psi[t][i_all])
                psi_path.append(psi.log_psi[t][i])
            else:
                psi_all.append(psi.log_psi[t][s_all, i_all])
                psi_path.append(psi.log_psi[t][s, i])
    out = logsumexp(_log(initial_law(model)) + psi_all[0])
    for t in range(1, T + 1):
        out += logsumexp(_log(transition_row(model, path[t - 1])) + psi_all[t])
    return float(out + g_path.sum() - np.sum(psi_path))


def _psi(model, y, approx="exact"):
    build = bif_sis if model.kind == "sis" else bif_sir
    return build(y, model.rates(), model.theta.rho, approx)


def check_unbiased(rng, model, y, method, reps, P):
    exact = forward_algorithm(model, y)
    kw = {"psi": _psi(model, y)} if method == "csmc" else {}
    ll = np.array([run_filter(method, model, y, P, rng, **kw).loglik for _ in range(reps)])
    z = np.exp(ll - exact)
    se = z.std(ddof=1) / np.sqrt(reps)
    dev = abs(z.mean() - 1.0) / se if se > 0 else abs(z.mean() - 1.0) * np.inf
    name = f"unbiased_{model.kind}_{method}"
    return CheckResult(name, bool(dev <= 3.0), float(dev), 3.0,
                       f"mean ratio {z.mean():.5f} +/- {se:.5f} over {reps} runs")


def check_telescoping(rng, model, y, method):
    kw = {"psi": _psi(model, y)} if method == "csmc" else {}
    s = run_filter(method, model, y, 1, rng, **kw)
    path = s.states[:, 0]
    got = float(s.log_weights[:, 0].sum())
    want = path_log_target_over_proposal(model, y, method, path, kw.get("psi"))
    err = 0.0 if got == want else abs(got - want)
    return CheckResult(f"telescoping_{model.kind}_{method}", bool(err <= 1e-8), err, 1e-8,
                       f"weights {got:.12f} vs enumeration {want:.12f}")


def check_bif_sis(rng, N, T):
    model = small_model(rng, N, "sis", include_self=True, homogeneous=True)
    _, y = simulate(rng, model, T)
    psi = _psi(model, y)
    ex = exact_bif(model, y)
    I = _infected(model, enumerate_states(N, 2))
    approx = np.array([psi.log_psi[t][I] for t in range(T + 1)])
    live = np.isfinite(ex)
    same_support = np.array_equal(live, np.isfinite(approx))
    rel = float(np.max(np.abs(np.expm1(approx[live] - ex[live])))) if live.any() else 0.0
    ok = same_support and rel <= 1e-10
    return CheckResult("bif_sis", bool(ok), rel, 1e-10, f"max relative error {rel:.3e}")


def check_bif_sir(rng, N, T):
    model = small_model(rng, N, "sir", include_self=True, homogeneous=True)
    _, y = simulate(rng, model, T)
    psi = _psi(model, y)
    ex = exact_bif(model, y)
    st = enumerate_states(N, 3)
    s, i = (st == 0).sum(axis=1), (st == 1).sum(axis=1)
    approx = np.array([psi.log_psi[t][i] if t == T else psi.log_psi[t][s, i]
                       for t in range(T + 1)])
    live = np.isfinite(ex)
    same_support = np.array_equal(live, np.isfinite(approx))
    rel = float(np.max(np.abs(np.expm1(approx[live] - ex[live])))) if live.any() else 0.0
    ok = same_support and rel <= 1e-10
    return CheckResult("bif_sir", bool(ok), rel, 1e-10, f"max relative error {rel:.3e}")


def check_lemma(rng, pairs=1000):
    worst = 0.0
    fails = 0
    for _ in range(pairs):
        N = int(rng.integers(2, 9))
        a, b = rng.random(N), rng.random(N)
        rep = lemma_bounds_check(a, b)
        if not rep.kl_holds:
            fails += 1
        if rep.kl_bound > 0:
            worst = max(worst, rep.kl_lhs / rep.kl_bound)
    return CheckResult("lemma_kl", fails == 0, worst, 1.0,
                       f"{fails} violations in {pairs} pairs; max lhs/rhs {worst:.4f}")


def _unbiased_suite(kind):
    def run(rng, N, T, reps, P):
        model = small_model(rng, N, kind)
        _, y = simulate(rng, model, T)
        return [check_unbiased(rng, model, y, m, reps, P) for m in ("bpf", "apf", "csmc")]
    return run


def _telescoping_suite(rng, N, T, reps, P):
    out = []
    for kind in ("sis", "sir"):
        model = small_model(rng, N, kind)
        _, y = simulate(rng, model, T)
        out += [check_telescoping(rng, model, y, m) for m in ("bpf", "apf", "csmc")]
    return out


SUITES = {
    "unbiased_sis": _unbiased_suite("sis"),
    "unbiased_sir": _unbiased_suite("sir"),
    "telescoping": _telescoping_suite,
    "bif_sis": lambda rng, N, T, reps, P: [check_bif_sis(rng, N, T)],
    "bif_sir": lambda rng, N, T, reps, P: [check_bif_sir(rng, N, T)],
    "lemma": lambda rng, N, T, reps, P: [check_lemma(rng)],
}


def run_suites(names, rng, N=5, T=4, reps=2000, P=8):
    results = []
    for name in names:
        results.extend(SUITES[name](rng, N, T, reps, P))
    return results
