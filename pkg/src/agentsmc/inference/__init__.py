"""Parameter and state inference."""
from .gibbs import (gibbs_block, gibbs_single_site, gibbs_swap, run_gibbs, scan_sweep,
                    single_site_log_conditional, swap_sweep)
from .mcmc import Chain, Prior, filter_loglik_fn, run_mh, run_pmmh, run_static_mh, rw_propose
from .predictive import Prediction, posterior_predictive, simulate_forward
from .static import (static_alive_estimator, static_count_posterior, static_marginal_likelihood,
                     static_naive_mc, static_posterior_sample, static_reference_setup,
                     static_simulate)

__all__ = [
    "Chain", "Prediction", "Prior", "filter_loglik_fn", "gibbs_block", "gibbs_single_site",
    "gibbs_swap", "posterior_predictive", "run_gibbs", "run_mh", "run_pmmh", "run_static_mh",
    "rw_propose", "scan_sweep", "simulate_forward", "single_site_log_conditional",
    "static_alive_estimator", "static_count_posterior", "static_marginal_likelihood",
    "static_naive_mc", "static_posterior_sample", "static_reference_setup", "static_simulate",
    "swap_sweep",
]
