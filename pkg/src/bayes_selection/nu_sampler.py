"""Degrees-of-freedom update.

The full conditional of nu is not a standard density.  It is approximated by
a Gamma density whose mode and curvature match the target's, and that Gamma
serves as the proposal of an independence Metropolis-Hastings step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import gamma_logpdf, log_minus_digamma, trigamma

NU_MIN = 1e-3
NU_MAX = 1e6


class ModeNotFoundError(RuntimeError):
    """The conditional density of nu has no interior mode inside the bracket."""

    def __init__(self, lower, upper):
        super().__init__(f"no interior mode of the nu conditional in ({lower:g}, {upper:g})")
        self.lower = lower
        self.upper = upper


@dataclass(frozen=True)
class NuProposal:
    alpha_star: float
    beta_star: float
    nu_star: float
    curvature: float


def xi_stat(alpha, q, beta0):
    """beta0 + N log(alpha)/2 + sum(q)/(2 alpha) - sum(log q)/2."""
    q = np.asarray(q, dtype=float)
    if not alpha > 0 or np.any(~(q > 0)):
        raise ValueError("alpha and q must be positive")
    n = q.size
    return float(beta0 + 0.5 * n * math.log(alpha) + q.sum() / (2.0 * alpha)
                 - 0.5 * np.log(q).sum())


def log_cond_nu(nu, n, xi, alpha0):
    """Unnormalized log conditional density of nu."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    return (0.5 * n * nu * math.log(nu / 2.0) - n * math.lgamma(nu / 2.0)
            + (alpha0 - 1.0) * math.log(nu) - xi * nu)


def dlog_cond_nu(nu, n, xi, alpha0):
    """First derivative of :func:`log_cond_nu`."""
    return 0.5 * n * log_minus_digamma(nu / 2.0) + (0.5 * n - xi) + (alpha0 - 1.0) / nu


def d2log_cond_nu(nu, n, xi, alpha0):
    """Second derivative of :func:`log_cond_nu`."""
    return 0.5 * n / nu - 0.25 * n * trigamma(nu / 2.0) - (alpha0 - 1.0) / (nu * nu)


def find_mode(n, xi, alpha0, nu_init=None, lower=NU_MIN, upper=NU_MAX, tol=1e-13, max_iter=200):
    """Root of the score in (lower, upper) by Newton's method on log(nu).

    The score is decreasing in nu for alpha0 >= 1, so a bracket with a sign
    change pins the root; Newton steps leaving the bracket are replaced by
    bisection in log(nu).
    """
    lo, hi = math.log(lower), math.log(upper)
    if dlog_cond_nu(lower, n, xi, alpha0) <= 0 or dlog_cond_nu(upper, n, xi, alpha0) >= 0:
        raise ModeNotFoundError(lower, upper)
    if nu_init is None or not lower < nu_init < upper:
        t = 0.5 * (lo + hi)
    else:
        t = math.log(nu_init)
    for _ in range(max_iter):
        nu = math.exp(t)
        g = dlog_cond_nu(nu, n, xi, alpha0)
        if g == 0.0:
            return nu
        if g > 0:
            lo = t
        else:
            hi = t
        slope = nu * d2log_cond_nu(nu, n, xi, alpha0)
        step = -g / slope if slope < 0 else math.inf
        t_new = t + step
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= tol * max(1.0, abs(t)):
            return math.exp(t_new)
        t = t_new
    return math.exp(t)


def gamma_approx(n, xi, alpha0, nu_init=None):
    """Gamma(alpha*, beta*) proposal matched to the mode and curvature of the
    conditional density of nu."""
    nu_star = find_mode(n, xi, alpha0, nu_init)
    curvature = d2log_cond_nu(nu_star, n, xi, alpha0)
    alpha_star = 1.0 - nu_star * nu_star * curvature
    beta_star = -nu_star * curvature
    return NuProposal(alpha_star, beta_star, nu_star, curvature)


def mis_update(nu_old, proposal, n, xi, alpha0, rng):
    """One independence Metropolis-Hastings step for nu.

    Returns ``(nu_new, accepted)``.  Proposals outside [NU_MIN, NU_MAX] are
    rejected.
    """
    if not nu_old > 0:
        raise ValueError("nu_old must be positive")
    a, b = proposal.alpha_star, proposal.beta_star
    nu_new = rng.gamma(a, 1.0 / b)
    # uniform drawn unconditionally so the stream does not depend on the branch
    log_u = math.log1p(-rng.random())
    if not NU_MIN <= nu_new <= NU_MAX:
        return nu_old, False
    log_ratio = ((log_cond_nu(nu_new, n, xi, alpha0) - gamma_logpdf(nu_new, a, b))
                 - (log_cond_nu(nu_old, n, xi, alpha0) - gamma_logpdf(nu_old, a, b)))
    if log_u <= log_ratio:
        return nu_new, True
    return nu_old, False
