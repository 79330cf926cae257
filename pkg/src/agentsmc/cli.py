"""Command line interface.

Every subcommand reads a JSON config (``--config``) and writes CSV or JSON
to ``--out``. Random streams are derived from ``--seed`` plus a purpose tag
and a replicate index, so outputs do not depend on ``--threads``.
"""
import argparse
import csv
import json
import os
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .exact_oracle import MAX_N
from .model import ModelSpec, Theta, load_data, reference_setup, save_data, save_model


class ConfigError(Exception):
    pass


def derive_rng(seed, tag, index=0):
    """Generator for (seed, tag, index); stable across runs and platforms."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(tag.encode()), int(index)))
    return np.random.default_rng(ss)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _sidecar(out, suffix):
    if out in (None, "-"):
        return None
    stem, _ = os.path.splitext(out)
    return stem + suffix


class Config(dict):
    """JSON config whose relative paths resolve against the config's folder."""

    def __init__(self, doc, base):
        super().__init__(doc)
        self.base = base

    def path(self, key):
        p = self[key]
        return p if os.path.isabs(p) else os.path.join(self.base, p)

    def need(self, key):
        if key not in self:
            raise ConfigError(f"config is missing {key!r}")
        return self[key]


def load_config(path):
    if path is None:
        return Config({}, os.getcwd())
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return Config(doc, os.path.dirname(os.path.abspath(path)))


def _model(cfg):
    m = cfg.need("model")
    try:
        if isinstance(m, dict):
            return ModelSpec.from_json(m)
        with open(cfg.path("model")) as fh:
            return ModelSpec.from_json(json.load(fh))
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"bad model: {exc}") from exc


def _data(cfg, model):
    d = cfg.need("data")
    if isinstance(d, dict):
        y = np.asarray(d["y"], dtype=np.int64)
    else:
        y, _ = load_data(cfg.path("data"))
    if np.any(y < 0) or np.any(y > model.N):
        raise ConfigError("observations must lie in [0, N]")
    return y


def _perturb(y, spec):
    if not spec:
        return y
    y = y.copy()
    factor = float(spec.get("factor", 0.5))
    for t in spec.get("times", []):
        y[t] = int(np.floor(y[t] * factor))
    return y


def _filter_kwargs(cfg, model):
    kw = {}
    method = cfg.get("method", "csmc")
    approx = cfg.get("approx", "exact")
    if method in ("apf", "csmc") and model.kind == "sis":
        kw["approx"] = approx
    if cfg.get("clusters") and method == "csmc" and model.kind == "sis":
        from .model import cluster_by_rates

        kw["clusters"] = cluster_by_rates(model.rates(), int(cfg["clusters"]))
    return kw


def _map(fn, tasks, threads):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks))


def _filter_task(args):
    from .smc import run_filter

    model, y, method, P, kw, seed, rep = args
    rng = derive_rng(seed, "filter", rep)
    t0 = time.perf_counter()
    s = run_filter(method, model, y, P, rng, **kw)
    return s.loglik, s.collapsed, s.diagnostics(), time.perf_counter() - t0


def cmd_simulate(cfg, seed, threads, out):
    rng = derive_rng(seed, "simulate")
    T = int(cfg.need("T"))
    if cfg.get("model", "reference") == "reference":
        model = reference_setup(rng, int(cfg.get("N", 100)))
        model_out = _sidecar(out, ".model.json")
        if model_out:
            save_model(model, model_out)
    else:
        model = _model(cfg)
    if model.kind == "sis":
        from .sis_model import sis_simulate as sim
    else:
        from .sir_model import sir_simulate as sim
    X, y = sim(rng, model, T)
    if out in (None, "-"):
        json.dump({"y": y.tolist()}, sys.stdout)
        print()
    else:
        save_data(out, y, X)
    return 0


def cmd_filter(cfg, seed, threads, out):
    model = _model(cfg)
    y = _perturb(_data(cfg, model), cfg.get("perturb"))
    method = cfg.get("method", "csmc")
    P = int(cfg.get("P", 512))
    reps = int(cfg.get("reps", 1))
    kw = _filter_kwargs(cfg, model)
    if method == "csmc":
        from .smc import bif_sir, bif_sis

        rates = model.rates(clusters=kw.pop("clusters", None))
        approx = kw.pop("approx", "exact")
        build = bif_sis if model.kind == "sis" else bif_sir
        kw["psi"] = build(y, rates, model.theta.rho, approx)
    res = _map(_filter_task, [(model, y, method, P, kw, seed, r) for r in range(reps)], threads)
    rows = [(r, *d) for r, (_, _, diag, _) in enumerate(res) for d in diag]
    write_csv(out, ["rep", "t", "ess", "log_incremental_likelihood", "collapse_flag"], rows)
    side = _sidecar(out, ".loglik.csv")
    ll = np.array([r[0] for r in res])
    if side:
        write_csv(side, ["rep", "loglik", "collapse_flag"],
                  [(r, v[0], v[1]) for r, v in enumerate(res)])
    finite = ll[np.isfinite(ll)]
    summary = {"method": method, "P": P, "reps": reps,
               "mean_loglik": float(finite.mean()) if finite.size else None,
               "var_loglik": float(finite.var(ddof=1)) if finite.size > 1 else None,
               "collapsed": int((~np.isfinite(ll)).sum()),
               "mean_seconds": float(np.mean([r[3] for r in res]))}
    print(json.dumps(summary), file=sys.stderr)
    return 0


def _coord_index(theta, name):
    names = theta.names()
    if name not in names:
        raise ConfigError(f"unknown parameter {name!r}; choose from {names}")
    return names.index(name)


def _grid(spec):
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    lo, hi, n = spec["range"]
    return np.linspace(lo, hi, int(n))


def _surface_task(args):
    from .smc import run_filter

    model, y, method, P, kw, seed, k, theta = args
    rng = derive_rng(seed, "surface", k)
    return run_filter(method, model, y, P, rng, theta=theta, **kw).loglik


def cmd_surface(cfg, seed, threads, out):
    model = _model(cfg)
    y = _data(cfg, model)
    method = cfg.get("method", "csmc")
    P = int(cfg.get("P", 512))
    kw = _filter_kwargs(cfg, model)
    kw.pop("clusters", None)
    xs, ys = cfg.need("x"), cfg.need("y")
    ix, iy = _coord_index(model.theta, xs["name"]), _coord_index(model.theta, ys["name"])
    gx, gy = _grid(xs), _grid(ys)
    base = model.theta.to_natural()
    tasks = []
    for a in gx:
        for b in gy:
            v = base.copy()
            v[ix], v[iy] = a, b
            d = model.d
            th = Theta(v[:d], v[d:2 * d], v[2 * d:3 * d], float(v[3 * d]))
            tasks.append((model, y, method, P, kw, seed, len(tasks), th))
    ll = np.array(_map(_surface_task, tasks, threads))
    top = ll[np.isfinite(ll)].max() if np.isfinite(ll).any() else 0.0
    rows = [(t[7].to_natural()[ix], t[7].to_natural()[iy], v, v - top) for t, v in zip(tasks, ll)]
    write_csv(out, [xs["name"], ys["name"], "loglik", "shifted"], rows)
    return 0


def _free(cfg, theta):
    names = cfg.get("free")
    if names is None:
        return None
    return [_coord_index(theta, n) for n in names]


def _prior(cfg):
    from .inference import Prior

    p = cfg.get("prior", {})
    return Prior(float(p.get("beta_mean", 0.0)), float(p.get("beta_sd", 3.0)))


def _write_chain(chain, cfg, out):
    burn, thin = int(cfg.get("burn_in", 0)), int(cfg.get("thin", 1))
    write_csv(out, ["iteration", *chain.names, "loglik", "accept"], chain.rows(burn, thin))
    print(json.dumps({"acceptance_rate": chain.acceptance_rate,
                      "posterior_mean": dict(zip(chain.names, chain.mean(burn).tolist()))}),
          file=sys.stderr)


def _static_chain(cfg, seed):
    from .inference import Prior, run_static_mh

    st = cfg["static"]
    W = np.asarray(st["covariates"], dtype=float)
    W = W.reshape(W.shape[0], -1)
    p = cfg.get("prior", {})
    return run_static_mh(derive_rng(seed, "pmmh", int(cfg.get("chain", 0))), int(st["y"]), W,
                         Prior(float(p.get("beta_mean", 0.0)), float(p.get("beta_sd", 1.0))),
                         cfg.get("method", "exact"), int(cfg.get("P", 20)),
                         int(cfg.get("iters", 1000)), float(cfg.get("step_sd", 0.2)))


def cmd_pmmh(cfg, seed, threads, out):
    from .inference import run_pmmh

    if "static" in cfg:
        _write_chain(_static_chain(cfg, seed), cfg, out)
        return 0
    model = _model(cfg)
    y = _data(cfg, model)
    method = cfg.get("filter", "csmc")
    if method == "exact" and model.N > MAX_N[model.kind]:
        raise ConfigError(f"exact likelihood needs N <= {MAX_N[model.kind]}")
    kw = _filter_kwargs(dict(cfg, method=method), model) if method != "exact" else {}
    kw.pop("clusters", None)
    chain = run_pmmh(derive_rng(seed, "pmmh", int(cfg.get("chain", 0))), model, y, _prior(cfg),
                     method, int(cfg.get("P", 128)), int(cfg.get("iters", 1000)),
                     float(cfg.get("step_sd", 0.2)), free=_free(cfg, model.theta), **kw)
    _write_chain(chain, cfg, out)
    return 0


def cmd_gibbs(cfg, seed, threads, out):
    from .inference import run_gibbs

    model = _model(cfg)
    if model.kind != "sis":
        raise ConfigError("Gibbs samplers are available for the SIS model only")
    y = _data(cfg, model)
    chain = run_gibbs(derive_rng(seed, "gibbs", int(cfg.get("chain", 0))), model, y, _prior(cfg),
                      int(cfg.get("iters", 1000)), tuple(cfg.get("mixture", (0.5, 0.5))),
                      float(cfg.get("step_sd", 0.08)), int(cfg.get("block_size", 1)),
                      free=_free(cfg, model.theta))
    _write_chain(chain, cfg, out)
    return 0


def cmd_predict(cfg, seed, threads, out):
    from .inference import posterior_predictive, run_pmmh

    model = _model(cfg)
    y = _data(cfg, model)
    T = y.size - 1
    t_obs = int(cfg.need("t_obs"))
    if not 0 <= t_obs < T:
        raise ConfigError("t_obs must lie in [0, T)")
    method = cfg.get("filter", "csmc")
    kw = _filter_kwargs(dict(cfg, method=method), model)
    kw.pop("clusters", None)
    chain = run_pmmh(derive_rng(seed, "pmmh"), model, y[:t_obs + 1], _prior(cfg), method,
                     int(cfg.get("P", 128)), int(cfg.get("iters", 1000)),
                     float(cfg.get("step_sd", 0.2)), free=_free(cfg, model.theta),
                     keep_states=True, **kw)
    burn, thin = int(cfg.get("burn_in", 0)), int(cfg.get("thin", 1))
    keep = [k for k in range(burn, len(chain.states), thin) if chain.states[k] is not None]
    thetas = [Theta.from_unconstrained(chain.unconstrained[k], model.d) for k in keep]
    pred = posterior_predictive(derive_rng(seed, "predict"), thetas,
                                [chain.states[k] for k in keep], model, t_obs, T)
    rows = [(t, *q, y[t]) for t, *q in pred.rows()]
    write_csv(out, ["t", "q025", "q50", "q975", "y"], rows)
    return 0


def cmd_oracle_check(cfg, seed, threads, out):
    from .oracle_check import SUITES, run_suites

    suites = cfg.get("suites", list(SUITES))
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown suites {bad}; choose from {list(SUITES)}")
    N = int(cfg.get("N", 5))
    if N > MAX_N["sir"] and any(s.endswith("sir") for s in suites):
        raise ConfigError(f"oracle checks on SIR need N <= {MAX_N['sir']}")
    if N > MAX_N["sis"]:
        raise ConfigError(f"oracle checks need N <= {MAX_N['sis']}")
    results = run_suites(suites, derive_rng(seed, "oracle"), N=N, T=int(cfg.get("T", 4)),
                         reps=int(cfg.get("reps", 2000)), P=int(cfg.get("P", 8)))
    write_csv(out, ["suite", "passed", "statistic", "threshold"],
              [(r.name, r.passed, r.statistic, r.threshold) for r in results])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}", file=sys.stderr)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "filter": cmd_filter,
    "surface": cmd_surface,
    "pmmh": cmd_pmmh,
    "gibbs": cmd_gibbs,
    "predict": cmd_predict,
    "oracle-check": cmd_oracle_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for replicates")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    parser = argparse.ArgumentParser(prog="agentsmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args.seed, max(1, args.threads), args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
