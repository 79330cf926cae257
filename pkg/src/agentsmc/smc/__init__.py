"""Sequential Monte Carlo for agent-based SIS and SIR models."""
from .bif import BifTable, bif_sir, bif_sis, sis_coarse_transition
from .core import (ParticleSystem, ancestral_path, ess, log_mean_exp, multinomial_resample,
                   normalise_log_weights, sample_path, trace_ancestry)
from .sir import run_apf_sir, run_bpf_sir, run_csmc_sir
from .sis import run_apf_sis, run_bpf_sis, run_csmc_sis

FILTERS = {
    ("sis", "bpf"): run_bpf_sis,
    ("sis", "apf"): run_apf_sis,
    ("sis", "csmc"): run_csmc_sis,
    ("sir", "bpf"): run_bpf_sir,
    ("sir", "apf"): run_apf_sir,
    ("sir", "csmc"): run_csmc_sir,
}


def run_filter(method, model, y, P, rng, theta=None, **kw):
    """Dispatch on the model kind and the method name (bpf, apf, csmc)."""
    try:
        fn = FILTERS[(model.kind, method)]
    except KeyError:
        raise ValueError(f"no filter {method!r} for model {model.kind!r}") from None
    return fn(model, y, P, rng, theta=theta, **kw)


__all__ = [
    "BifTable", "FILTERS", "ParticleSystem", "ancestral_path", "bif_sir", "bif_sis", "ess",
    "log_mean_exp", "multinomial_resample", "normalise_log_weights", "run_apf_sir",
    "run_apf_sis", "run_bpf_sir", "run_bpf_sis", "run_csmc_sir", "run_csmc_sis",
    "run_filter", "sample_path", "sis_coarse_transition", "trace_ancestry",
]
