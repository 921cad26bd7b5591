"""Primitive samplers and densities used by the Gibbs steps.

Every sampler takes an explicit ``rng`` (a :class:`numpy.random.Generator`);
one generator per chain, never shared across threads.
"""

import math

import numpy as np
from scipy import special

from .model import Spd2

RandomSource = np.random.Generator

# standardized truncation point beyond which the tail sampler takes over
TAIL_THRESHOLD = 4.0

_TINY = np.finfo(float).tiny


def make_rng(seed):
    """Deterministic random source for ``seed``."""
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# truncated normal
# ---------------------------------------------------------------------------

def _tail_exponential(a, rng):
    """Draws from N(0, 1) restricted to [a, inf), a > 0, by exponential rejection.

    Uses the optimal exponential rate for the truncation point; acceptance
    probability exceeds 0.9 once a > 2.
    """
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    lam = 0.5 * (a + np.sqrt(a * a + 4.0))
    todo = np.arange(a.size)
    while todo.size:
        z = a.flat[todo] + rng.standard_exponential(todo.size) / lam.flat[todo]
        log_accept = -0.5 * (z - lam.flat[todo]) ** 2
        ok = np.log(rng.random(todo.size)) <= log_accept
        out.flat[todo[ok]] = z[ok]
        todo = todo[~ok]
    return out


def _tail_uniform(a, b, rng):
    """Draws from N(0, 1) restricted to [a, b] with 0 < a < b, uniform proposal."""
    out = np.empty_like(a)
    todo = np.arange(a.size)
    while todo.size:
        aa, bb = a.flat[todo], b.flat[todo]
        z = aa + (bb - aa) * rng.random(todo.size)
        ok = np.log(rng.random(todo.size)) <= 0.5 * (aa * aa - z * z)
        out.flat[todo[ok]] = z[ok]
        todo = todo[~ok]
    return out


def _upper_tail(a, b, rng):
    # exponential proposal rejected above b unless [a, b] is narrow
    lam = 0.5 * (a + np.sqrt(a * a + 4.0))
    narrow = (b - a) < 2.0 / lam
    out = np.empty_like(a)
    if np.any(narrow):
        out[narrow] = _tail_uniform(a[narrow], b[narrow], rng)
    wide = ~narrow
    if np.any(wide):
        aw, bw = a[wide], b[wide]
        res = np.empty_like(aw)
        todo = np.arange(aw.size)
        while todo.size:
            z = _tail_exponential(aw[todo], rng)
            ok = z <= bw[todo]
            res[todo[ok]] = z[ok]
            todo = todo[~ok]
        out[wide] = res
    return out


def _standard_truncated(a, b, rng):
    """Draws from N(0, 1) restricted to [a, b] (elementwise, a < b)."""
    z = np.empty_like(a)
    upper = a > TAIL_THRESHOLD
    lower = b < -TAIL_THRESHOLD
    central = ~(upper | lower)
    if np.any(upper):
        z[upper] = _upper_tail(a[upper], b[upper], rng)
    if np.any(lower):
        z[lower] = -_upper_tail(-b[lower], -a[lower], rng)
    if np.any(central):
        ac, bc = a[central], b[central]
        u = rng.random(ac.size)
        # work on whichever side of zero keeps the cdf values away from 1
        flip = ac > 0
        lo = np.where(flip, -bc, ac)
        hi = np.where(flip, -ac, bc)
        plo = special.ndtr(lo)
        phi = special.ndtr(hi)
        p = plo + u * (phi - plo)
        x = special.ndtri(np.clip(p, _TINY, 1.0))
        x = np.clip(x, lo, hi)
        z[central] = np.where(flip, -x, x)
    return z


def sample_truncated_normal(mu, sigma_sq, lower, upper, rng):
    """Sample N(mu, sigma_sq) truncated to [lower, upper].

    All arguments broadcast; bounds may be infinite.  Returns a float for
    scalar input and an array otherwise.  Truncation regions far in a tail
    are handled by exponential rejection, so this stays fast and exact even
    ten or more standard deviations out.
    """
    mu, sigma_sq, lower, upper = np.broadcast_arrays(
        np.asarray(mu, dtype=float), np.asarray(sigma_sq, dtype=float),
        np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    if np.any(~(sigma_sq > 0)):
        raise ValueError("sigma_sq must be positive")
    if np.any(~(lower < upper)):
        raise ValueError("truncation interval must satisfy lower < upper")
    sd = np.sqrt(sigma_sq)
    a = ((lower - mu) / sd).ravel()
    b = ((upper - mu) / sd).ravel()
    z = _standard_truncated(a, b, rng).reshape(mu.shape)
    x = mu + sd * z
    # guard the bound against rounding in mu + sd * z
    x = np.clip(x, lower, upper)
    if x.ndim == 0:
        return float(x)
    return x


# ---------------------------------------------------------------------------
# gamma family
# ---------------------------------------------------------------------------

def sample_gamma(shape, rate, rng, size=None):
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise ValueError("gamma shape and rate must be positive")
    return rng.gamma(shape, 1.0 / rate, size=size)


def sample_chisq(df, rng, size=None):
    df = np.asarray(df, dtype=float)
    if np.any(df <= 0):
        raise ValueError("chi-square degrees of freedom must be positive")
    # a draw that underflows to zero would turn into an infinite variance
    return np.maximum(2.0 * rng.standard_gamma(0.5 * df, size=size), _TINY)


def sample_scaled_inv_chisq(scale, df, rng, size=None):
    """Draw ``scale / chi2_df``."""
    if np.any(np.asarray(scale) <= 0):
        raise ValueError("scale must be positive")
    return scale / sample_chisq(df, rng, size=size)


def gamma_logpdf(x, shape, rate):
    """Log density of Gamma(shape, rate) at ``x``."""
    if x <= 0 or shape <= 0 or rate <= 0:
        raise ValueError("gamma_logpdf needs x, shape, rate > 0")
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(x) - rate * x


# ---------------------------------------------------------------------------
# normal family
# ---------------------------------------------------------------------------

def sample_mvn2(mu, cov, rng):
    """One draw from the bivariate normal with covariance ``cov`` (Spd2)."""
    l11 = math.sqrt(cov.a11)
    l21 = cov.a12 / l11
    l22 = math.sqrt(cov.a22 - l21 * l21)
    z1, z2 = rng.standard_normal(2)
    return np.array([mu[0] + l11 * z1, mu[1] + l21 * z1 + l22 * z2])


def sample_mvn2_many(cov, n, rng):
    """``n`` zero-mean bivariate normal draws as an (n, 2) array."""
    l11 = math.sqrt(cov.a11)
    l21 = cov.a12 / l11
    l22 = math.sqrt(cov.a22 - l21 * l21)
    z = rng.standard_normal((n, 2))
    return np.column_stack([l11 * z[:, 0], l21 * z[:, 0] + l22 * z[:, 1]])


def sample_mvn(mu, cov, rng):
    mu = np.asarray(mu, dtype=float)
    chol = np.linalg.cholesky(np.asarray(cov, dtype=float))
    return mu + chol @ rng.standard_normal(mu.shape[0])


# ---------------------------------------------------------------------------
# inverse Wishart, 2 x 2
# ---------------------------------------------------------------------------

def _iw2_arrays(df, scale, rng, n):
    # Sigma^{-1} ~ Wishart(df, scale^{-1}); Bartlett factor A = [[c1, 0], [z, c2]]
    inv = scale.inverse()
    l11 = math.sqrt(inv.a11)
    l21 = inv.a12 / l11
    l22 = math.sqrt(inv.a22 - l21 * l21)
    c1 = np.sqrt(sample_chisq(df, rng, size=n))
    c2 = np.sqrt(sample_chisq(df - 1.0, rng, size=n))
    z = rng.standard_normal(n)
    # B = L A with L the Cholesky factor of scale^{-1}
    b11 = l11 * c1
    b21 = l21 * c1 + l22 * z
    b22 = l22 * c2
    # W = B B^T, Sigma = W^{-1} = B^{-T} B^{-1}; B lower triangular
    w11 = b11 * b11
    w12 = b11 * b21
    w22 = b21 * b21 + b22 * b22
    det = w11 * w22 - w12 * w12
    return w22 / det, -w12 / det, w11 / det


def sample_inverse_wishart2(df, scale, rng):
    """One draw from the 2 x 2 inverse Wishart W^{-1}(df, scale)."""
    if df <= 1:
        raise ValueError("inverse Wishart needs df > 1")
    s11, s12, s22 = _iw2_arrays(df, scale, rng, None)
    return Spd2(float(s11), float(s12), float(s22))


def sample_inverse_wishart2_many(df, scale, n, rng):
    """``n`` inverse Wishart draws as arrays ``(a11, a12, a22)``."""
    if df <= 1:
        raise ValueError("inverse Wishart needs df > 1")
    return _iw2_arrays(df, scale, rng, n)


# ---------------------------------------------------------------------------
# polygamma
# ---------------------------------------------------------------------------

_RECURRENCE_FLOOR = 10.0

# Bernoulli-number coefficients B_2k / (2k) of the digamma series
_DIGAMMA_SERIES = (1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132,
                   -691.0 / 32760, 1.0 / 12)
# B_2k coefficients of the trigamma series
_TRIGAMMA_SERIES = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66,
                    -691.0 / 2730, 7.0 / 6)


def _check_positive(x):
    if not x > 0:
        raise ValueError("polygamma functions are evaluated only for x > 0")


def _poly_inv_sq(coefs, z):
    # sum_k coefs[k] * z**(k + 1), Horner in z = 1/x^2
    acc = 0.0
    for c in reversed(coefs):
        acc = (acc + c) * z
    return acc


def log_minus_digamma(x):
    """``log(x) - digamma(x)`` without cancellation for large ``x``."""
    _check_positive(x)
    shift = 0.0
    while x < _RECURRENCE_FLOOR:
        shift += 1.0 / x
        # log(x) - psi(x) = log(x+1) - psi(x+1) - log1p(1/x) + 1/x
        shift -= math.log1p(1.0 / x)
        x += 1.0
    return shift + 0.5 / x + _poly_inv_sq(_DIGAMMA_SERIES, 1.0 / (x * x))


def digamma(x):
    """Digamma function for x > 0 (absolute error below 1e-12)."""
    _check_positive(x)
    acc = 0.0
    while x < _RECURRENCE_FLOOR:
        acc -= 1.0 / x
        x += 1.0
    return acc + math.log(x) - 0.5 / x - _poly_inv_sq(_DIGAMMA_SERIES, 1.0 / (x * x))


def trigamma(x):
    """Trigamma function for x > 0 (relative error below 1e-12)."""
    _check_positive(x)
    acc = 0.0
    while x < _RECURRENCE_FLOOR:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    return acc + inv + 0.5 * inv * inv + inv * _poly_inv_sq(_TRIGAMMA_SERIES, inv * inv)
