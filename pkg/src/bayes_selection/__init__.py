"""Bayesian sample-selection models fitted by data augmentation.

Four samplers are provided: selection (normal errors), selection-t, and the
binary-outcome selection-Probit and selection-Robit.
"""

from .chain import ChainConfig, ChainDraws
from .diagnostics import acceptance_rate, figure_data, gelman_rubin, summarize
from .gibbs_binary import run_chain_binary
from .gibbs_continuous import run_chain_continuous
from .model import ModelVariant, PriorSpec, SelectionData
from .simgen import Scenario, dichotomize, gen_scenario

__version__ = "0.1.0"


def run_chain(data, priors, config, rng):
    """Dispatch to the continuous or binary sampler by ``config.variant``."""
    runner = run_chain_binary if config.variant.binary else run_chain_continuous
    return runner(data, priors, config, rng)


__all__ = [
    "ChainConfig", "ChainDraws", "ModelVariant", "PriorSpec", "Scenario", "SelectionData",
    "acceptance_rate", "dichotomize", "figure_data", "gelman_rubin", "gen_scenario",
    "run_chain", "run_chain_binary", "run_chain_continuous", "summarize",
]
