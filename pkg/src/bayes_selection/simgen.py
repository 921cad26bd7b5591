"""Synthetic data for the three simulation designs.

Covariates x, w ~ N(0, 2^2) independently;
y* = 0.5 + x + eps, u* = 2 + x + 1.5 w + eta, with (eps, eta) centred on
Omega0 = [[1, 0.3], [0.3, 1]] and drawn as

* NORMAL:  bivariate normal,
* T3:      bivariate t with 3 degrees of freedom,
* MIXTURE: scale mixture of normals with variance multipliers 1, 2, 4, 8, 16.
"""

import enum
import math

import numpy as np

from .distributions import make_rng, sample_chisq, sample_mvn2_many
from .model import SelectionData, Spd2

TRUE_BETA = (0.5, 1.0)
TRUE_GAMMA = (2.0, 1.0, 1.5)
TRUE_RHO = 0.3
TRUE_SIGMA1 = 1.0
COVARIATE_SD = 2.0
T_DF = 3.0
MIXTURE_SCALES = (1.0, 2.0, 4.0, 8.0, 16.0)
# listed weights add to 1.1; they are renormalized before sampling
MIXTURE_WEIGHTS = (0.4, 0.3, 0.2, 0.1, 0.1)

OMEGA0 = Spd2(TRUE_SIGMA1 ** 2, TRUE_RHO * TRUE_SIGMA1, 1.0)


class Scenario(enum.Enum):
    NORMAL = "normal"
    T3 = "t3"
    MIXTURE = "mixture"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown scenario {name!r}; expected normal, t3 or mixture") from None


def true_parameters(scenario):
    truth = {"beta": list(TRUE_BETA), "gamma": list(TRUE_GAMMA),
             "sigma1": TRUE_SIGMA1, "rho": TRUE_RHO}
    scenario = Scenario(scenario)
    if scenario is Scenario.T3:
        truth["nu"] = T_DF
    elif scenario is Scenario.NORMAL:
        truth["nu"] = math.inf
    else:
        weights = np.asarray(MIXTURE_WEIGHTS) / sum(MIXTURE_WEIGHTS)
        truth["mixture_weights"] = weights.tolist()
        truth["mixture_scales"] = list(MIXTURE_SCALES)
    return truth


def generate_errors(scenario, n, rng):
    """(n, 2) array of (eps, eta) for ``scenario``."""
    scenario = Scenario(scenario)
    errors = sample_mvn2_many(OMEGA0, n, rng)
    if scenario is Scenario.T3:
        errors *= np.sqrt(T_DF / sample_chisq(T_DF, rng, size=n))[:, None]
    elif scenario is Scenario.MIXTURE:
        weights = np.asarray(MIXTURE_WEIGHTS) / sum(MIXTURE_WEIGHTS)
        component = rng.choice(len(MIXTURE_SCALES), size=n, p=weights)
        errors *= np.sqrt(np.asarray(MIXTURE_SCALES)[component])[:, None]
    return errors


def gen_scenario(scenario, n, seed):
    """Simulate ``n`` records; returns ``(data, truth)``.

    The design matrices carry an intercept: X = (1, x), W = (1, x, w).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    scenario = Scenario(scenario)
    rng = make_rng(seed)
    x = COVARIATE_SD * rng.standard_normal(n)
    w = COVARIATE_SD * rng.standard_normal(n)
    errors = generate_errors(scenario, n, rng)
    X = np.column_stack([np.ones(n), x])
    W = np.column_stack([np.ones(n), x, w])
    ystar = X @ np.asarray(TRUE_BETA) + errors[:, 0]
    ustar = W @ np.asarray(TRUE_GAMMA) + errors[:, 1]
    u = (ustar > 0).astype(np.int8)
    y = np.where(u == 1, ystar, np.nan)
    data = SelectionData(u, y, X, W, x_names=["x"], w_names=["x", "w"])
    return data, true_parameters(scenario)


def dichotomize(data):
    """Replace observed outcomes by I(y > 0); missing outcomes stay missing."""
    y = np.where(np.isnan(data.y), np.nan, (data.y > 0).astype(float))
    return SelectionData(data.u.copy(), y, data.X.copy(), data.W.copy(), binary=True,
                         x_names=data.x_names, w_names=data.w_names)
