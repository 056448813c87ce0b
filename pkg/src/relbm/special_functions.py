r"""Modified Bessel functions of the second kind.

``K0`` and ``K1`` are evaluated from the ascending series for ``x <= 2`` and
from Steed's continued fraction (Thompson & Barnett) for ``x > 2``.  Both
routes give close to full double precision.  The exponentially scaled
variants ``e**x * K_nu(x)`` never overflow or underflow for finite positive
``x``, which is what the transition density needs.

``bessel_k_oracle`` integrates

.. math::
    K_\alpha(x) = \int_0^\infty e^{-x\cosh\xi}\cosh(\alpha\xi)\,d\xi

by adaptive Simpson quadrature.  It is slow and only meant for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "BesselResult",
    "bessel_k0",
    "bessel_k1",
    "bessel_k0e",
    "bessel_k1e",
    "bessel_k",
    "bessel_k_oracle",
]

EULER_GAMMA = 0.57721566490153286061
_SERIES_TERMS = 30
_SERIES_CUTOFF = 2.0
_CF_MAXIT = 10_000
_CF_EPS = 1e-17


@dataclass(frozen=True)
class BesselResult:
    """Value of K_nu at ``argument`` together with ``e**argument * K_nu``."""

    value: float
    scaled_value: float
    argument: float


def _check_domain(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("Bessel K requires finite x > 0")
    return arr


def _series_k0_k1(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = 0.25 * x * x
    log_half = np.log(0.5 * x)
    i0 = np.zeros_like(x)
    i1 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    term = np.ones_like(x)  # y**k / (k!)**2
    harmonic = 0.0
    for k in range(_SERIES_TERMS):
        if k > 0:
            term = term * y / (k * k)
            harmonic += 1.0 / k
        term1 = term / (k + 1)  # y**k / (k! (k+1)!)
        i0 += term
        i1 += term1
        s0 += harmonic * term
        # psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
        s1 += (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (k + 1)) * term1
    k0 = -(log_half + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + 0.5 * x * i1 * log_half - 0.25 * x * s1
    return k0, k1


def _steed_k0e_k1e(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Steed's CF2 at order 0; returns scaled K0, K1.  Converged entries are
    # dropped from the working set so their recurrences cannot overflow.
    idx = np.arange(x.size)
    xw = x.copy()
    b = 2.0 * (1.0 + xw)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(xw)
    q2 = np.ones_like(xw)
    a1 = 0.25
    q = np.full_like(xw, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    h_out = np.empty_like(x)
    s_out = np.empty_like(x)
    for i in range(2, _CF_MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        done = np.abs(dels / s) < _CF_EPS
        if done.any():
            h_out[idx[done]] = h[done]
            s_out[idx[done]] = s[done]
            keep = ~done
            if not keep.any():
                break
            idx, b, d, h, delh, q1, q2, q, s = (
                v[keep] for v in (idx, b, d, h, delh, q1, q2, q, s)
            )
    else:
        raise ConvergenceError("continued fraction for K0/K1 did not converge")
    h_out *= a1
    k0e = np.sqrt(math.pi / (2.0 * x)) / s_out
    k1e = k0e * (x + 0.5 - h_out) / x
    return k0e, k1e


def _k0e_k1e(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k0e = np.empty_like(x)
    k1e = np.empty_like(x)
    small = x <= _SERIES_CUTOFF
    if small.any():
        xs = x[small]
        k0, k1 = _series_k0_k1(xs)
        ex = np.exp(xs)
        k0e[small] = k0 * ex
        k1e[small] = k1 * ex
    if (~small).any():
        k0e[~small], k1e[~small] = _steed_k0e_k1e(x[~small])
    return k0e, k1e


def _unwrap(x_in, out: np.ndarray):
    return float(out) if np.ndim(x_in) == 0 else out


def bessel_k0e(x):
    """Exponentially scaled K0: ``exp(x) * K0(x)``."""
    arr = np.atleast_1d(_check_domain(x))
    return _unwrap(x, _k0e_k1e(arr)[0].reshape(np.shape(x)))


def bessel_k1e(x):
    """Exponentially scaled K1: ``exp(x) * K1(x)``."""
    arr = np.atleast_1d(_check_domain(x))
    return _unwrap(x, _k0e_k1e(arr)[1].reshape(np.shape(x)))


def bessel_k0(x):
    """Modified Bessel function K0.

    Underflows to 0.0 for ``x`` beyond about 705; use :func:`bessel_k0e`
    there.
    """
    arr = _check_domain(x)
    return _unwrap(x, bessel_k0e(arr) * np.exp(-arr))


def bessel_k1(x):
    """Modified Bessel function K1 (equal to ``-K0'``)."""
    arr = _check_domain(x)
    return _unwrap(x, bessel_k1e(arr) * np.exp(-arr))


def bessel_k(order: int, x: float) -> BesselResult:
    """Return K0 or K1 at a scalar point as a :class:`BesselResult`."""
    if order not in (0, 1):
        raise DomainError("only orders 0 and 1 are implemented")
    x = float(x)
    scaled = bessel_k0e(x) if order == 0 else bessel_k1e(x)
    return BesselResult(value=scaled * math.exp(-x), scaled_value=scaled, argument=x)


def _adaptive_simpson(f, a, b, tol, max_evals):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    evals = 3
    while stack:
        a, b, fa, fm, fb, whole, tol = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        evals += 2
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or b - a < 1e-12:
            total += left + right + delta / 15.0
            continue
        if evals > max_evals:
            raise ConvergenceError("Bessel oracle exceeded its evaluation budget")
        stack.append((a, m, fa, flm, fm, left, 0.5 * tol))
        stack.append((m, b, fm, frm, fb, right, 0.5 * tol))
    return total


def bessel_k_oracle(alpha: float, x: float, tol: float = 1e-12, max_evals: int = 4_000_000) -> float:
    r"""K_alpha(x) from its integral representation, by adaptive Simpson.

    ``tol`` is the absolute tolerance on the scaled integral
    ``\int exp(-x (cosh xi - 1)) cosh(alpha xi) dxi``, which is O(1) for
    moderate and large ``x``; the result is multiplied by ``exp(-x)``.
    The upper limit is the first doubling of ``xi`` at which the log of the
    integrand falls below -60.
    """
    if not (x > 0 and math.isfinite(x)):
        raise DomainError("oracle requires finite x > 0")
    if alpha < 0 or tol <= 0:
        raise DomainError("oracle requires alpha >= 0 and tol > 0")

    def log_integrand(xi):
        # log(cosh(alpha xi)) computed without overflow
        lc = alpha * xi + math.log1p(math.exp(-2.0 * alpha * xi)) - math.log(2.0)
        return -2.0 * x * math.sinh(0.5 * xi) ** 2 + lc if xi < 700 else -math.inf

    def f(xi):
        return math.exp(log_integrand(xi))

    upper = 1.0
    while log_integrand(upper) > -60.0:
        upper *= 2.0
    # Uniform pre-split keeps the recursion shallow.
    edges = np.linspace(0.0, upper, 65)
    piece_tol = tol / (len(edges) - 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _adaptive_simpson(f, float(lo), float(hi), piece_tol, max_evals)
    return total * math.exp(-x)
