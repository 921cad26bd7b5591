"""Gibbs sampler for the selection-Probit and selection-Robit models.

Only the sign of y* is observed, so both error variances are pinned at one
and the error covariance is a correlation matrix.  The imputation of (y*, u*)
for selected records becomes a Gibbs pass through a truncated bivariate
normal, and the correlation is drawn by expanding with two free scales.
"""

import math
import warnings

import numpy as np

from .distributions import sample_chisq, sample_inverse_wishart2, sample_truncated_normal
from .gibbs_continuous import _scatter, run_sweeps
from .model import CorrMatrix, Spd2, clamp_rho


def impute_latent_binary(data, params, ystar, q, alpha, rng):
    """Impute (y*, u*) given the current y*.

    Selected records: u* | y* truncated to (0, inf), then y* | u* truncated to
    the half line given by the observed sign.  Unselected records: u*
    truncated to (-inf, 0), then y* | u* untruncated.
    """
    q = np.broadcast_to(np.asarray(q, dtype=float), (data.n,))
    rho = params.cov.rho
    var = alpha * (1.0 - rho * rho) / q
    xb = data.X @ params.beta
    wg = data.W @ params.gamma
    sel = data.selected
    uns = ~sel
    new_y = np.array(ystar, dtype=float)
    new_u = np.empty(data.n)

    mu_u = wg[sel] + rho * (new_y[sel] - xb[sel])
    new_u[sel] = sample_truncated_normal(mu_u, var[sel], 0.0, np.inf, rng)
    mu_y = xb[sel] + rho * (new_u[sel] - wg[sel])
    positive = data.y[sel] == 1
    lower = np.where(positive, 0.0, -np.inf)
    upper = np.where(positive, np.inf, 0.0)
    new_y[sel] = sample_truncated_normal(mu_y, var[sel], lower, upper, rng)

    new_u[uns] = sample_truncated_normal(wg[uns], alpha / q[uns], -np.inf, 0.0, rng)
    mu_y = xb[uns] + rho * (new_u[uns] - wg[uns])
    new_y[uns] = mu_y + np.sqrt(var[uns]) * rng.standard_normal(int(uns.sum()))
    return new_y, new_u


def post_corr_px(latent, data, params, priors, rng, return_scales=False):
    """Parameter-expanded draw of the correlation matrix.

    Both scales are drawn independently from their priors given rho, the
    residuals are rescaled, Sigma is drawn from its inverse-Wishart
    conditional and normalized to unit diagonal.  ``return_scales`` as in
    :func:`~bayes_selection.gibbs_continuous.post_cov_px`.
    """
    rho = params.cov.rho
    one_minus = 1.0 - rho * rho
    chi = sample_chisq(priors.nu0, rng, size=2)
    sigma1_sq, sigma2_sq = 1.0 / (one_minus * chi)
    s11, s12, s22 = _scatter(data, latent, params, math.sqrt(sigma1_sq), math.sqrt(sigma2_sq))
    sigma = sample_inverse_wishart2(data.n + priors.nu0, Spd2(s11 + 1.0, s12, s22 + 1.0), rng)
    corr = CorrMatrix(clamp_rho(sigma.a12 / math.sqrt(sigma.a11 * sigma.a22)))
    if return_scales:
        return corr, (math.sqrt(sigma1_sq / sigma.a11), math.sqrt(sigma2_sq / sigma.a22))
    return corr


def _impute_binary_step(data, params, latent, rng):
    return impute_latent_binary(data, params, latent.ystar, latent.q, latent.alpha, rng)


def run_chain_binary(data, priors, config, rng, monitor=None):
    """Run the selection-Probit or selection-Robit sampler."""
    if not config.variant.binary:
        raise ValueError(f"{config.variant.value} is a continuous-outcome model")
    if not data.binary:
        raise ValueError("binary models need 0/1 outcomes (mark the data set binary)")
    if data.n > 0 and np.all(data.u == data.u[0]):
        warnings.warn("every record has the same selection indicator; "
                      "the selection equation is not identified", RuntimeWarning)
    observed = data.y[data.selected]
    if observed.size and np.all(observed == observed[0]):
        warnings.warn("all observed outcomes are equal; the outcome equation is "
                      "weakly identified", RuntimeWarning)
    return run_sweeps(data, priors, config, rng, _impute_binary_step, post_corr_px, monitor)
