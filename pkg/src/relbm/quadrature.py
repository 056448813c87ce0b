"""Vectorized globally adaptive Gauss-Legendre quadrature.

Every panel is integrated with a 15-point and a 7-point Gauss-Legendre rule.
The 15-point value is kept and the difference between the two serves as a
(conservative) error estimate.  The worst panels are bisected until the
summed estimate meets the tolerance.  Integrands must accept and return
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError

_HI_X, _HI_W = np.polynomial.legendre.leggauss(15)
_LO_X, _LO_W = np.polynomial.legendre.leggauss(7)


@dataclass(frozen=True)
class QuadratureConfig:
    """Numerical controls for every quadrature in the library.

    ``tail_tol`` bounds the integrand mass dropped when an infinite range is
    truncated.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-12
    max_intervals: int = 200_000
    tail_tol: float = 1e-14

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol >= 0 and self.tail_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_intervals < 1:
            raise DomainError("max_intervals must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    intervals: int


def _panel_rules(f, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)[:, None]
    mid = 0.5 * (a + b)[:, None]
    nodes = np.concatenate([mid + half * _HI_X, mid + half * _LO_X], axis=1)
    vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    hi = (vals[:, :15] @ _HI_W) * half[:, 0]
    lo = (vals[:, 15:] @ _LO_W) * half[:, 0]
    return hi, np.abs(hi - lo)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-12,
    max_intervals: int = 200_000,
) -> QuadResult:
    """Integrate ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    The initial mesh is the given breakpoints.  Raises ConvergenceError when
    ``max_intervals`` panels do not reach ``max(abs_tol, rel_tol*|I|)``.
    """
    edges = np.unique(np.asarray(breakpoints, dtype=float))
    if edges.size < 2:
        return QuadResult(0.0, 0.0, 0)
    if not np.all(np.isfinite(edges)):
        raise DomainError("integration limits must be finite")
    a, b = edges[:-1], edges[1:]
    vals, errs = _panel_rules(f, a, b)
    while True:
        total = float(np.sum(vals))
        err = float(np.sum(errs))
        target = max(abs_tol, rel_tol * abs(total))
        if not math.isfinite(total):
            raise ConvergenceError("integrand produced non-finite values")
        if err <= target:
            return QuadResult(total, err, a.size)
        if a.size >= max_intervals:
            raise ConvergenceError(
                f"quadrature did not converge: error {err:.3g} > {target:.3g} "
                f"with {a.size} panels"
            )
        # Bisect every panel carrying more than its share of the allowed error.
        share = target / a.size
        split = errs > share
        order = np.argsort(errs[split])[::-1]
        idx = np.flatnonzero(split)[order][: max(1, max_intervals - a.size)]
        sel = np.zeros(a.size, dtype=bool)
        sel[idx] = True
        sa, sb = a[sel], b[sel]
        sm = 0.5 * (sa + sb)
        if np.any((sm <= sa) | (sm >= sb)):
            raise ConvergenceError("quadrature panels collapsed to machine precision")
        na = np.concatenate([sa, sm])
        nb = np.concatenate([sm, sb])
        nv, ne = _panel_rules(f, na, nb)
        a = np.concatenate([a[~sel], na])
        b = np.concatenate([b[~sel], nb])
        vals = np.concatenate([vals[~sel], nv])
        errs = np.concatenate([errs[~sel], ne])


def tail_cutoff(
    log_f: Callable[[float], float],
    start: float,
    step: float,
    log_tol: float,
    max_doublings: int = 200,
) -> float:
    """First point ``x >= start`` beyond which a decaying integrand is negligible.

    ``log_f`` is the log of a positive integrand (or envelope) that decays
    monotonically past ``start``.  Starting at ``start + step`` the distance
    from ``start`` is doubled until ``f(x) * L(x) < exp(log_tol)``, with
    ``L = 1/|d log f / dx|`` the local decay length; for log-concave tails
    ``f(x) * L(x)`` bounds the mass beyond ``x``.
    """
    if step <= 0:
        raise DomainError("tail_cutoff step must be positive")
    dist = step
    for _ in range(max_doublings):
        x = start + dist
        h = 1e-6 * max(abs(x), step)
        slope = (log_f(x + h) - log_f(x - h)) / (2.0 * h)
        lf = log_f(x)
        if lf == -math.inf:
            return x
        if slope < 0 and lf - math.log(-slope) < log_tol:
            return x
        dist *= 2.0
    raise ConvergenceError("could not locate a tail cutoff")
