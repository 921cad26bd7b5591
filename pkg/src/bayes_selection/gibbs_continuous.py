"""Data-augmentation Gibbs sampler for the selection and selection-t models.

One sweep runs the imputation step (alpha from its prior, latent (y*, u*),
mixing weights q) and then the posterior step (alpha, delta, the restricted
covariance via parameter expansion, nu by independence Metropolis-Hastings).
The normal-error model is the restriction alpha = 1, q = 1, nu = inf, which
skips every step touching those quantities.

The step functions here are shared with :mod:`bayes_selection.gibbs_binary`.
"""

import math
import warnings

import numpy as np
from scipy import linalg

from .chain import ChainDraws
from .distributions import (sample_chisq, sample_gamma, sample_inverse_wishart2,
                            sample_scaled_inv_chisq, sample_truncated_normal)
from .model import (INFINITE, CorrMatrix, LatentState, ModelVariant, ParamState,
                    RestrictedCov, Spd2, clamp_rho, residuals)
from .nu_sampler import gamma_approx, mis_update, xi_stat


def impute_alpha_prior(priors, rng, variant=ModelVariant.SELECTION_T):
    """Draw the expansion parameter from its prior b / chi2_c (1 under normal errors)."""
    if not variant.heavy_tailed:
        return 1.0
    return float(sample_scaled_inv_chisq(priors.b, priors.c, rng))


def impute_latent_continuous(data, params, q, alpha, rng):
    """Impute (y*, u*) for every record.

    Selected records keep y* = y and draw u* from its conditional truncated
    to (0, inf); unselected records draw u* truncated to (-inf, 0) and then
    y* from its conditional normal.
    """
    q = np.broadcast_to(np.asarray(q, dtype=float), (data.n,))
    cov = params.cov
    sigma1, rho = cov.sigma1, cov.rho
    one_minus = 1.0 - rho * rho
    xb = data.X @ params.beta
    wg = data.W @ params.gamma
    sel = data.selected
    uns = ~sel
    ystar = np.empty(data.n)
    ustar = np.empty(data.n)

    ystar[sel] = data.y[sel]
    mu_u = wg[sel] + rho * (ystar[sel] - xb[sel]) / sigma1
    ustar[sel] = sample_truncated_normal(mu_u, alpha * one_minus / q[sel], 0.0, np.inf, rng)

    ustar[uns] = sample_truncated_normal(wg[uns], alpha / q[uns], -np.inf, 0.0, rng)
    mu_y = xb[uns] + rho * sigma1 * (ustar[uns] - wg[uns])
    sd_y = np.sqrt(alpha * sigma1 * sigma1 * one_minus / q[uns])
    ystar[uns] = mu_y + sd_y * rng.standard_normal(int(uns.sum()))
    return ystar, ustar


def impute_q(data, ystar, ustar, params, alpha, rng):
    """Mixing weights q_i ~ alpha chi2_{nu+2} / (Q_i + nu); ones under normal errors."""
    if math.isinf(params.nu):
        return np.ones(data.n)
    r1 = ystar - data.X @ params.beta
    r2 = ustar - data.W @ params.gamma
    quad = params.omega.quad(r1, r2)
    return alpha * sample_chisq(params.nu + 2.0, rng, size=data.n) / (quad + params.nu)


def post_alpha(data, latent, params, priors, rng):
    """Complete-data draw of the expansion parameter (1 under normal errors)."""
    if math.isinf(params.nu):
        return 1.0
    q = np.asarray(latent.q, dtype=float)
    if np.any(~(q > 0)):
        raise ValueError("mixing weights must be positive")
    n = data.n
    r1, r2 = residuals(data, latent, params)
    quad = params.omega.quad(r1, r2)
    scale = priors.b + float(np.sum(q * (quad + params.nu)))
    df = priors.c + 2.0 * n + n * params.nu
    return float(scale / sample_chisq(df, rng))


def delta_posterior(data, latent, params, priors, precision0=None):
    """Mean and precision of the normal full conditional of delta."""
    if precision0 is None:
        precision0 = priors.precision0
    k = data.k
    inv = params.omega.inverse()
    q = np.asarray(latent.q, dtype=float)
    w = np.broadcast_to(q, (data.n,)) / latent.alpha
    X, W = data.X, data.W
    Xw = X * w[:, None]
    Ww = W * w[:, None]
    prec = precision0.copy()
    prec[:k, :k] += inv.a11 * (Xw.T @ X)
    cross = inv.a12 * (Xw.T @ W)
    prec[:k, k:] += cross
    prec[k:, :k] += cross.T
    prec[k:, k:] += inv.a22 * (Ww.T @ W)
    rhs = precision0 @ priors.mu0
    ys, us = latent.ystar, latent.ustar
    rhs[:k] += Xw.T @ (inv.a11 * ys + inv.a12 * us)
    rhs[k:] += Ww.T @ (inv.a12 * ys + inv.a22 * us)
    try:
        chol = linalg.cho_factor(prec, lower=True)
    except linalg.LinAlgError:
        raise linalg.LinAlgError("posterior precision of delta is not positive definite") from None
    mean = linalg.cho_solve(chol, rhs)
    return mean, prec, chol


def post_delta(latent, data, params, priors, rng, precision0=None):
    """Draw delta = (beta, gamma) from its normal full conditional."""
    mean, _, (chol, lower) = delta_posterior(data, latent, params, priors, precision0)
    z = rng.standard_normal(mean.size)
    # prec = L L^T, so L^{-T} z has covariance prec^{-1}
    return mean + linalg.solve_triangular(chol, z, lower=lower, trans="T")


def _scatter(data, latent, params, scale1, scale2):
    r1, r2 = residuals(data, latent, params)
    e1 = scale1 * r1
    e2 = scale2 * r2
    w = np.broadcast_to(np.asarray(latent.q, dtype=float), (data.n,)) / latent.alpha
    return (float(np.sum(w * e1 * e1)), float(np.sum(w * e1 * e2)),
            float(np.sum(w * e2 * e2)))


def post_cov_px(latent, data, params, priors, rng, return_scales=False):
    """Parameter-expanded draw of the restricted covariance.

    sigma2^2 is drawn from its prior given Omega, the residuals of the
    selection equation are rescaled by sigma2, an unrestricted Sigma is drawn
    from its inverse-Wishart conditional and mapped back to Omega with unit
    (2, 2) entry.

    With ``return_scales`` the ratios (old scale / new scale) of the two
    equations are returned as well; the chain driver uses them to carry
    gamma and u* back to the identified scale.
    """
    rho = params.cov.rho
    sigma2_sq = float(1.0 / ((1.0 - rho * rho) * sample_chisq(priors.nu0, rng)))
    s11, s12, s22 = _scatter(data, latent, params, 1.0, math.sqrt(sigma2_sq))
    sigma = sample_inverse_wishart2(data.n + priors.nu0, Spd2(s11 + 1.0, s12, s22 + 1.0), rng)
    new_rho = clamp_rho(sigma.a12 / math.sqrt(sigma.a11 * sigma.a22))
    cov = RestrictedCov(sigma.a11, new_rho)
    if return_scales:
        return cov, (1.0, math.sqrt(sigma2_sq / sigma.a22))
    return cov


def rescale_coefficients(delta, scales, k):
    """delta with beta multiplied by scales[0] and gamma by scales[1]."""
    out = np.array(delta, dtype=float)
    out[:k] *= scales[0]
    out[k:] *= scales[1]
    return out


def px_accept(delta, scales, k, priors, precision0, rng):
    """Metropolis correction for the expanded covariance draw.

    The inverse-Wishart draw moves the equation scales; carrying delta and
    the latent data back to unit scale is exact under a flat prior on delta.
    Accepting with the ratio of the normal prior densities of the rescaled
    and current delta, times the Jacobian f1^K f2^L of the rescale, makes
    the move exact for the proper prior as well.  With a diffuse prior the
    ratio is close to one.
    """
    log_u = math.log1p(-rng.random())
    new = rescale_coefficients(delta, scales, k)
    d_old = delta - priors.mu0
    d_new = new - priors.mu0
    log_ratio = (-0.5 * float(d_new @ precision0 @ d_new) + 0.5 * float(d_old @ precision0 @ d_old)
                 + k * math.log(scales[0]) + (delta.size - k) * math.log(scales[1]))
    return log_u <= log_ratio


# ---------------------------------------------------------------------------
# chain driver (shared with the binary sampler)
# ---------------------------------------------------------------------------

def initial_state(data, variant):
    n, k, l = data.n, data.k, data.l
    delta = np.zeros(k + l)
    nu = 10.0 if variant.heavy_tailed else INFINITE
    ustar = np.where(data.selected, 0.5, -0.5)
    if variant.binary:
        cov = CorrMatrix(0.0)
        ystar = np.where(data.selected, np.where(data.y == 1, 0.5, -0.5), 0.0)
    else:
        observed = data.y[data.selected]
        var = float(np.var(observed, ddof=1)) if observed.size >= 2 else 1.0
        cov = RestrictedCov(var if var > 0 else 1.0, 0.0)
        ystar = np.where(data.selected, data.y, 0.0)
    params = ParamState(delta, cov, nu, k)
    latent = LatentState(ystar.astype(float), ustar.astype(float), np.ones(n), 1.0)
    return params, latent


def _nu_step(n, latent, params, priors, rng):
    xi = xi_stat(latent.alpha, latent.q, priors.beta0)
    if n == 0:
        # exact Gamma(alpha0, beta0) conditional; nothing to approximate
        return float(sample_gamma(priors.alpha0, xi, rng)), True
    proposal = gamma_approx(n, xi, priors.alpha0, nu_init=params.nu)
    return mis_update(params.nu, proposal, n, xi, priors.alpha0, rng)


def run_sweeps(data, priors, config, rng, impute_latent, post_cov, monitor=None):
    """Generic sweep loop; ``impute_latent`` and ``post_cov`` carry the
    outcome-type specific steps."""
    variant = config.variant
    heavy = variant.heavy_tailed
    params, latent = initial_state(data, variant)
    precision0 = priors.precision0
    n, k, l = data.n, data.k, data.l

    keep = config.retained_sweeps()
    m = keep.size
    beta = np.empty((m, k))
    gamma = np.empty((m, l))
    sigma1 = None if variant.binary else np.empty(m)
    rho = np.empty(m)
    nu = np.empty(m)
    proposed = accepted = px_accepted = 0
    slot = 0
    next_keep = keep[0] if m else -1

    for sweep in range(1, config.iterations + 1):
        # I-1: fresh expansion parameter; q is carried on the identified scale q / alpha
        if heavy:
            alpha = impute_alpha_prior(priors, rng, variant)
            latent.q = latent.q * (alpha / latent.alpha)
            latent.alpha = alpha
        # I-2
        latent.ystar, latent.ustar = impute_latent(data, params, latent, rng)
        if heavy:
            # I-3, P-1
            latent.q = impute_q(data, latent.ystar, latent.ustar, params, latent.alpha, rng)
            latent.alpha = post_alpha(data, latent, params, priors, rng)
        # P-2
        delta = post_delta(latent, data, params, priors, rng, precision0)
        params = ParamState(delta, params.cov, params.nu, k)
        # P-3
        cov, scales = post_cov(latent, data, params, priors, rng, return_scales=True)
        if px_accept(delta, scales, k, priors, precision0, rng):
            delta = rescale_coefficients(delta, scales, k)
            latent.ystar, latent.ustar = latent.ystar * scales[0], latent.ustar * scales[1]
            params = ParamState(delta, cov, params.nu, k)
            if sweep > config.burnin:
                px_accepted += 1
        # P-4
        if heavy:
            new_nu, ok = _nu_step(n, latent, params, priors, rng)
            params = ParamState(delta, params.cov, new_nu, k)
            if sweep > config.burnin:
                proposed += 1
                accepted += int(ok)

        if monitor is not None:
            monitor(sweep, params, latent)
        if sweep == next_keep:
            beta[slot] = params.beta
            gamma[slot] = params.gamma
            if sigma1 is not None:
                sigma1[slot] = params.cov.sigma1
            rho[slot] = params.cov.rho
            nu[slot] = params.nu
            slot += 1
            next_keep = keep[slot] if slot < m else -1

    return ChainDraws(variant, keep, beta, gamma, sigma1, rho, nu, proposed, accepted,
                      meta={"seed": config.seed, "iterations": config.iterations,
                            "burnin": config.burnin, "thin": config.thin,
                            "px_acceptance_rate": px_accepted / max(config.iterations - config.burnin, 1)})


def _impute_continuous_step(data, params, latent, rng):
    return impute_latent_continuous(data, params, latent.q, latent.alpha, rng)


def run_chain_continuous(data, priors, config, rng, monitor=None):
    """Run the selection (normal errors) or selection-t sampler.

    ``monitor(sweep, params, latent)``, if given, is called after every sweep.
    """
    if config.variant.binary:
        raise ValueError(f"{config.variant.value} is a binary-outcome model")
    if data.binary:
        raise ValueError("continuous models need a continuous outcome")
    if data.n > 0 and np.all(data.u == data.u[0]):
        warnings.warn("every record has the same selection indicator; "
                      "the selection equation is not identified", RuntimeWarning)
    return run_sweeps(data, priors, config, rng, _impute_continuous_step, post_cov_px, monitor)
