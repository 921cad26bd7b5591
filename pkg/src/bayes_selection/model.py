"""Domain types, design matrices and the shared likelihood algebra.

The two error equations are handled in closed form: every covariance is a
2 x 2 matrix (:class:`Spd2`).  Data are held column-wise in
:class:`SelectionData` so the Gibbs steps can run over all records at once;
:class:`ObservedRecord` is the per-unit view.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

# in-memory marker for an unobserved outcome
MISSING = None

INFINITE = math.inf

RHO_LIMIT = 1.0 - 1e-9


class DegenerateCorrelationError(ValueError):
    """Raised when |rho| = 1 makes a conditional variance vanish."""


class ModelVariant(enum.Enum):
    SELECTION_NORMAL = "selection"
    SELECTION_T = "selection-t"
    SELECTION_PROBIT = "selection-probit"
    SELECTION_ROBIT = "selection-robit"

    @property
    def binary(self):
        return self in (ModelVariant.SELECTION_PROBIT, ModelVariant.SELECTION_ROBIT)

    @property
    def heavy_tailed(self):
        """True for the t-error variants, which carry q, alpha and nu."""
        return self in (ModelVariant.SELECTION_T, ModelVariant.SELECTION_ROBIT)

    @classmethod
    def from_name(cls, name):
        for variant in cls:
            if variant.value == name.lower():
                return variant
        raise ValueError(f"unknown model {name!r}; expected one of "
                         + ", ".join(v.value for v in cls))


@dataclass(frozen=True)
class Spd2:
    """Symmetric positive-definite 2 x 2 matrix [[a11, a12], [a12, a22]]."""

    a11: float
    a12: float
    a22: float

    def __post_init__(self):
        if not (self.a11 > 0 and self.a22 > 0 and self.det > 0):
            raise ValueError(f"matrix is not positive definite: {self}")

    @property
    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a12

    def inverse(self):
        d = self.det
        return Spd2(self.a22 / d, -self.a12 / d, self.a11 / d)

    def as_array(self):
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @classmethod
    def from_array(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    def quad(self, r1, r2):
        """Quadratic form r^T A^{-1} r for residual columns r1, r2."""
        d = self.det
        return (self.a22 * r1 * r1 - 2.0 * self.a12 * r1 * r2 + self.a11 * r2 * r2) / d


def clamp_rho(rho):
    return min(max(rho, -RHO_LIMIT), RHO_LIMIT)


def _check_rho(rho):
    if not -1.0 < rho < 1.0:
        raise DegenerateCorrelationError(f"correlation {rho} is not inside (-1, 1)")


@dataclass(frozen=True)
class RestrictedCov:
    """Error covariance [[s1^2, rho s1], [rho s1, 1]] of the continuous models."""

    sigma1_sq: float
    rho: float

    def __post_init__(self):
        if not self.sigma1_sq > 0:
            raise ValueError("sigma1_sq must be positive")
        _check_rho(self.rho)

    @property
    def sigma1(self):
        return math.sqrt(self.sigma1_sq)

    def matrix(self):
        return Spd2(self.sigma1_sq, self.rho * self.sigma1, 1.0)


@dataclass(frozen=True)
class CorrMatrix:
    """Error correlation [[1, rho], [rho, 1]] of the binary models."""

    rho: float

    def __post_init__(self):
        _check_rho(self.rho)

    sigma1_sq = 1.0
    sigma1 = 1.0

    def matrix(self):
        return Spd2(1.0, self.rho, 1.0)


@dataclass(frozen=True)
class PriorSpec:
    mu0: np.ndarray
    Sigma0: np.ndarray
    nu0: float = 3.0
    alpha0: float = 1.0
    beta0: float = 0.1
    b: float = 0.1
    c: float = 0.1

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float)
        Sigma0 = np.asarray(self.Sigma0, dtype=float)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "Sigma0", Sigma0)
        if Sigma0.shape != (mu0.size, mu0.size):
            raise ValueError("Sigma0 must be square with the length of mu0")
        if not np.allclose(Sigma0, Sigma0.T):
            raise ValueError("Sigma0 must be symmetric")
        try:
            np.linalg.cholesky(Sigma0)
        except np.linalg.LinAlgError:
            raise ValueError("Sigma0 must be positive definite") from None
        if self.nu0 < 3:
            raise ValueError("nu0 must be at least 3")
        for name in ("alpha0", "beta0", "b", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def default(cls, k, l, sigma0_scale=100.0, **kwargs):
        """Weakly informative defaults: mu0 = 0, Sigma0 = sigma0_scale * I."""
        p = k + l
        return cls(np.zeros(p), sigma0_scale * np.eye(p), **kwargs)

    @property
    def precision0(self):
        return np.linalg.inv(self.Sigma0)


@dataclass(frozen=True)
class ParamState:
    delta: np.ndarray
    cov: object  # RestrictedCov or CorrMatrix
    nu: float
    k: int

    def __post_init__(self):
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        if not 0 <= self.k <= self.delta.size:
            raise ValueError("k must lie between 0 and len(delta)")
        if not self.nu > 0:
            raise ValueError("nu must be positive or INFINITE")

    @property
    def beta(self):
        return self.delta[: self.k]

    @property
    def gamma(self):
        return self.delta[self.k:]

    @property
    def omega(self):
        return self.cov.matrix()


@dataclass
class LatentState:
    ystar: np.ndarray
    ustar: np.ndarray
    q: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        if np.any(~(np.asarray(self.q) > 0)):
            raise ValueError("mixing weights q must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class ObservedRecord:
    u: int
    y: Optional[float]
    x: Sequence[float]
    w: Sequence[float]

    def __post_init__(self):
        if self.u not in (0, 1):
            raise ValueError("selection indicator must be 0 or 1")
        if self.u == 0 and self.y is not MISSING:
            raise ValueError("outcome must be missing for an unselected record")
        if self.u == 1 and self.y is MISSING:
            raise ValueError("outcome must be present for a selected record")


def _as_design(m, n, name):
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m.reshape(n, -1) if n else m.reshape(0, max(m.size, 1))
    if m.ndim != 2 or m.shape[0] != n:
        raise ValueError(f"{name} must have one row per record")
    return m


@dataclass
class SelectionData:
    """Column-wise data set: selection ``u``, outcome ``y`` (NaN where
    missing), outcome covariates ``X`` (N x K) and selection covariates
    ``W`` (N x L)."""

    u: np.ndarray
    y: np.ndarray
    X: np.ndarray
    W: np.ndarray
    binary: bool = False
    x_names: list = field(default=None)
    w_names: list = field(default=None)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.int8).reshape(-1)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        n = self.u.size
        self.X = _as_design(self.X, n, "X")
        self.W = _as_design(self.W, n, "W")
        if self.y.size != n:
            raise ValueError("y and u must have the same length")
        if np.any((self.u != 0) & (self.u != 1)):
            raise ValueError("selection indicator must be 0 or 1")
        present = ~np.isnan(self.y)
        if np.any(present & (self.u == 0)):
            raise ValueError("outcome present for an unselected record")
        if np.any(~present & (self.u == 1)):
            raise ValueError("outcome missing for a selected record")
        if self.binary and np.any((self.y[present] != 0) & (self.y[present] != 1)):
            raise ValueError("binary outcomes must be 0 or 1")
        self.selected = self.u == 1

    @property
    def n(self):
        return self.u.size

    @property
    def k(self):
        return self.X.shape[1]

    @property
    def l(self):
        return self.W.shape[1]

    def record(self, i):
        y = MISSING if self.u[i] == 0 else float(self.y[i])
        return ObservedRecord(int(self.u[i]), y, self.X[i].copy(), self.W[i].copy())

    def records(self):
        return [self.record(i) for i in range(self.n)]

    @classmethod
    def from_records(cls, records, binary=False, k=None, l=None):
        records = list(records)
        if not records:
            if k is None or l is None:
                raise ValueError("k and l are needed to build an empty data set")
            return cls(np.zeros(0), np.zeros(0), np.zeros((0, k)), np.zeros((0, l)), binary)
        y = [np.nan if r.y is MISSING else r.y for r in records]
        return cls([r.u for r in records], y, [r.x for r in records],
                   [r.w for r in records], binary)


def design_row(record, k, l):
    """Block design matrix V = [[x^T, 0], [0, w^T]] of one record."""
    x = np.asarray(record.x, dtype=float)
    w = np.asarray(record.w, dtype=float)
    if x.shape != (k,) or w.shape != (l,):
        raise ValueError(f"record has dimensions ({x.size}, {w.size}); expected ({k}, {l})")
    v = np.zeros((2, k + l))
    v[0, :k] = x
    v[1, k:] = w
    return v


def residuals(data, latent, params):
    """Columns of Z_i - V_i delta."""
    return latent.ystar - data.X @ params.beta, latent.ustar - data.W @ params.gamma


def complete_data_loglik(data, latent, params, priors=None):
    """Log complete-data likelihood of (y*, u*, q) up to a constant.

    With ``params.nu`` infinite (normal errors) the mixing weights are fixed
    at one and only the bivariate normal part remains.
    """
    q = np.asarray(latent.q, dtype=float)
    alpha = latent.alpha
    if np.any(~(q > 0)) or not alpha > 0:
        raise ValueError("q and alpha must be positive")
    omega = params.omega
    n = data.n
    if n == 0:
        return 0.0
    r1, r2 = residuals(data, latent, params)
    quad = omega.quad(r1, r2)
    value = -0.5 * n * math.log(omega.det) - np.sum(q * quad) / (2.0 * alpha)
    nu = params.nu
    if math.isinf(nu):
        return float(value - n * math.log(alpha))
    value += (-(n + n * nu / 2.0) * math.log(alpha) + (n * nu / 2.0) * math.log(nu / 2.0)
              - n * gammaln(nu / 2.0))
    value += np.sum((nu / 2.0) * np.log(q) - nu * q / (2.0 * alpha))
    return float(value)


def _moments(xb, wg, ystar, ustar, sigma1, rho, q, alpha):
    _check_rho(rho)
    q = np.asarray(q, dtype=float)
    one_minus = 1.0 - rho * rho
    mu_u_y = wg + rho * (ystar - xb) / sigma1
    var_u_y = alpha * one_minus / q
    mu_y_u = xb + rho * sigma1 * (ustar - wg)
    var_y_u = alpha * sigma1 * sigma1 * one_minus / q
    return mu_u_y, var_u_y, mu_y_u, var_y_u


def conditional_moments_continuous(params, ystar, ustar, x, w, q, alpha):
    """Conditional means and variances of u*|y* and y*|u* for the continuous
    models.

    ``x`` and ``w`` may be single covariate rows or N x K / N x L blocks;
    returns ``(mu_u_y, var_u_y, mu_y_u, var_y_u)``.
    """
    xb = np.asarray(x, dtype=float) @ params.beta
    wg = np.asarray(w, dtype=float) @ params.gamma
    return _moments(xb, wg, ystar, ustar, params.cov.sigma1, params.cov.rho, q, alpha)


def conditional_moments_binary(params, ystar, ustar, x, w, q, alpha):
    """Same as :func:`conditional_moments_continuous` with sigma1 = 1."""
    xb = np.asarray(x, dtype=float) @ params.beta
    wg = np.asarray(w, dtype=float) @ params.gamma
    return _moments(xb, wg, ystar, ustar, 1.0, params.cov.rho, q, alpha)


def t2_logpdf(t, mu, omega, nu):
    """Log density of the bivariate t with location ``mu``, scale ``omega``
    and ``nu`` degrees of freedom."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    r = np.asarray(t, dtype=float) - np.asarray(mu, dtype=float)
    quad = omega.quad(r[..., 0], r[..., 1])
    return (-math.log(2.0 * math.pi) - 0.5 * math.log(omega.det)
            - 0.5 * (nu + 2.0) * np.log1p(quad / nu))
