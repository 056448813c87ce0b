"""Exponential martingales under the relativistic measure.

``S(x, t) = S0 exp(zeta x - beta t)`` is a martingale when

    beta = (c^2 / sigma^2) (1 - sqrt(1 - zeta^2 sigma^4 / c^2)),

which only exists for ``|zeta| <= c / sigma^2``: the density's tail decays
like ``exp(-c|x| / sigma^2)``.  Past the bound only the oscillatory
("tachyonic") martingales survive, and those change sign.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryWarning, BoundViolationError, DomainError
from .params import ModelParams

__all__ = [
    "MartingaleSpec",
    "max_zeta",
    "drift_beta",
    "martingale_value",
    "tachyonic_growth",
    "tachyonic_martingale_value",
]


def max_zeta(params: ModelParams) -> float:
    """Largest admissible |zeta|, ``c / sigma**2``."""
    return params.c / params.sigma**2


def drift_beta(zeta: float, params: ModelParams) -> float:
    """Drift that makes ``exp(zeta x - beta t)`` a martingale.

    Raises BoundViolationError when ``|zeta| > c / sigma**2``.  At the bound
    itself beta is ``c**2 / sigma**2`` and a BoundaryWarning is issued.
    """
    zeta = float(zeta)
    if not math.isfinite(zeta):
        raise DomainError("zeta must be finite")
    u = (zeta * params.sigma**2 / params.c) ** 2
    if u > 1.0:
        raise BoundViolationError(
            f"|zeta| = {abs(zeta):.6g} exceeds the log-volatility bound "
            f"c/sigma^2 = {max_zeta(params):.6g} (zeta^2 sigma^4 <= c^2)"
        )
    if u == 1.0:
        warnings.warn("zeta is on the log-volatility bound", BoundaryWarning, stacklevel=2)
    # r0 (1 - sqrt(1-u)) == zeta^2 sigma^2 / (1 + sqrt(1-u))
    return zeta * zeta * params.sigma**2 / (1.0 + math.sqrt(1.0 - u))


@dataclass(frozen=True)
class MartingaleSpec:
    """The martingale ``s0 * exp(zeta x - beta t)``; beta is derived."""

    s0: float
    zeta: float
    params: ModelParams
    beta: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.s0) and self.s0 > 0):
            raise DomainError("s0 must be finite and > 0")
        object.__setattr__(self, "beta", drift_beta(self.zeta, self.params))

    @property
    def log_volatility(self) -> float:
        """sigma_S = zeta * sigma."""
        return self.zeta * self.params.sigma

    @property
    def at_boundary(self) -> bool:
        return abs(self.zeta) * self.params.sigma**2 == self.params.c


def martingale_value(x, t, spec: MartingaleSpec):
    """``S0 exp(zeta x - beta t)``; vectorized in x and t."""
    val = spec.s0 * np.exp(spec.zeta * np.asarray(x, dtype=float) - spec.beta * np.asarray(t, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def tachyonic_growth(zeta: float, params: ModelParams) -> float:
    """Growth rate ``(c^2/sigma^2)(sqrt(1 + zeta^2 sigma^4/c^2) - 1)``; equals psi(zeta)."""
    u = (zeta * params.sigma**2 / params.c) ** 2
    return zeta * zeta * params.sigma**2 / (math.sqrt(1.0 + u) + 1.0)


def tachyonic_martingale_value(x, t, zeta: float, a: float, b: float, params: ModelParams, s0: float = 1.0):
    """``S0 (a cos(zeta x) + b sin(zeta x)) exp(psi(zeta) t)``.

    A martingale for every real zeta, but not positive; it is here for
    verification only.
    """
    x = np.asarray(x, dtype=float)
    growth = tachyonic_growth(zeta, params)
    val = s0 * (a * np.cos(zeta * x) + b * np.sin(zeta * x)) * np.exp(growth * np.asarray(t, dtype=float))
    return float(val) if np.ndim(val) == 0 else val
