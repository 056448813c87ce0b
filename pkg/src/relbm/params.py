"""Model and simulation parameter records."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


def _positive_finite(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """Relativistic diffusion parameters.

    sigma is the diffusion coefficient (year**-1/2, x dimensionless) and c the
    characteristic diffusion speed (year**-1).  ``r0 = c**2 / sigma**2`` is the
    rest-energy rate; large ``c / sigma**2`` means the Gaussian regime.
    """

    sigma: float
    c: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive_finite("sigma", self.sigma))
        object.__setattr__(self, "c", _positive_finite("c", self.c))

    @property
    def r0(self) -> float:
        return self.c**2 / self.sigma**2

    @property
    def alpha(self) -> float:
        """Exponential tail rate c / sigma**2 (also the bound on |zeta|)."""
        return self.c / self.sigma**2

    def as_dict(self) -> dict:
        return {"sigma": self.sigma, "c": self.c, "r0": self.r0}


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo controls.

    Paths are generated in fixed blocks of ``block_size``; block ``j`` draws
    from its own Philox stream keyed by ``(seed, j)``, so output does not
    depend on how blocks are distributed over workers.
    """

    n_paths: int = 100_000
    n_steps: int = 1
    horizon: float = 1.0
    seed: int = 42
    block_size: int = 65_536

    def __post_init__(self):
        if int(self.n_paths) < 1 or int(self.n_steps) < 1 or int(self.block_size) < 1:
            raise DomainError("n_paths, n_steps and block_size must be >= 1")
        _positive_finite("horizon", self.horizon)
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
