"""Chain configuration and the container for retained draws."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import ModelVariant


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 50000
    burnin: Optional[int] = None
    thin: int = 1
    seed: int = 0
    variant: ModelVariant = ModelVariant.SELECTION_T

    def __post_init__(self):
        if self.burnin is None:
            object.__setattr__(self, "burnin", self.iterations // 5)
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burnin < self.iterations:
            raise ValueError("burnin must satisfy 0 <= burnin < iterations")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")

    def retained_sweeps(self):
        """1-based sweep numbers kept after burn-in and thinning."""
        return np.arange(self.burnin + 1, self.iterations + 1, self.thin)


@dataclass
class ChainDraws:
    """Retained draws of one chain.

    ``sigma1`` is None for the binary models.  ``nu`` holds ``inf`` for the
    normal-error variants.  The acceptance counts cover post-burn-in sweeps.
    """

    variant: ModelVariant
    iters: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    sigma1: Optional[np.ndarray]
    rho: np.ndarray
    nu: np.ndarray
    nu_proposed: int = 0
    nu_accepted: int = 0
    chain: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_draws(self):
        return self.iters.size

    @property
    def k(self):
        return self.beta.shape[1]

    @property
    def l(self):
        return self.gamma.shape[1]

    def param_names(self):
        names = [f"beta_{j}" for j in range(self.k)] + [f"gamma_{j}" for j in range(self.l)]
        if self.sigma1 is not None:
            names.append("sigma1")
        return names + ["rho", "nu"]

    def as_matrix(self):
        cols = [self.beta, self.gamma]
        if self.sigma1 is not None:
            cols.append(self.sigma1[:, None])
        cols += [self.rho[:, None], self.nu[:, None]]
        return np.hstack(cols)

    def as_dict(self):
        return dict(zip(self.param_names(), self.as_matrix().T))

    def parameter(self, name):
        return self.as_dict()[name]

    @classmethod
    def from_matrix(cls, variant, names, matrix, iters, chain=0):
        """Rebuild draws from a (draws x parameters) table with named columns."""
        matrix = np.asarray(matrix, dtype=float).reshape(len(iters), len(names))
        col = {name: matrix[:, j] for j, name in enumerate(names)}
        beta = np.column_stack([col[n] for n in names if n.startswith("beta_")]
                               or [np.empty((len(iters), 0))])
        gamma = np.column_stack([col[n] for n in names if n.startswith("gamma_")]
                                or [np.empty((len(iters), 0))])
        return cls(variant, np.asarray(iters), beta, gamma, col.get("sigma1"),
                   col["rho"], col["nu"], chain=chain)
