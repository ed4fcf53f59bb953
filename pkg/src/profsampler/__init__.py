"""Profile likelihoods for semiparametric survival models and the profile sampler."""

__version__ = "0.1.0"

from .data import Dataset, Observation, DataError, load_csv, save_csv, sort_by_time, event_count
from .simulate import CoxSimConfig, simulate_cox, tune_censor_horizon, mix_seed
from .cox import CoxProfile, StepFunction, IdentifiabilityError, MonotoneLikelihoodError
from .propodds import PoProfile, DegenerateNPMLEError
from .sampler import (Prior, ChainConfig, Chain, ChainSummary, run_chain, summarize,
                      chain_quantile, chain_kappa, log_posterior)
from .inference import (FitResult, discretized_information, wald_interval,
                        credible_interval, fit, NegativeCurvatureError)
from .harness import SimSummary, run_study, emit_tables

__all__ = [
    "Dataset", "Observation", "DataError", "load_csv", "save_csv", "sort_by_time",
    "event_count", "CoxSimConfig", "simulate_cox", "tune_censor_horizon", "mix_seed",
    "CoxProfile", "StepFunction", "IdentifiabilityError", "MonotoneLikelihoodError",
    "PoProfile", "DegenerateNPMLEError", "Prior", "ChainConfig", "Chain", "ChainSummary",
    "run_chain", "summarize", "chain_quantile", "chain_kappa", "log_posterior", "FitResult",
    "discretized_information", "wald_interval", "credible_interval", "fit",
    "NegativeCurvatureError", "SimSummary", "run_study", "emit_tables",
]
