"""Transition densities of relativistic Brownian motion.

The main object is the normal-inverse-Gaussian density

    P(x, t) = (c / pi sigma^2) * ct / sqrt(x^2 + c^2 t^2)
              * K1((c / sigma^2) sqrt(x^2 + c^2 t^2)) * exp(c^2 t / sigma^2)

whose Fourier transform is ``exp(-t psi(k))`` with
``psi(k) = (c^2/sigma^2) (sqrt(1 + k^2 sigma^4 / c^2) - 1)``.  Alongside it
live the Gaussian limit, the rotation-invariant K0 kernel (which leaks mass
at rate ``r0`` and breaks the semigroup law), the large-|x| approximation
and the Levy measure.

All density functions are vectorized in ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConvergenceError, DomainError, TailMassError
from .params import ModelParams
from .quadrature import DEFAULT_QUAD, QuadratureConfig, integrate, tail_cutoff
from .special_functions import bessel_k0e, bessel_k1e

__all__ = [
    "DensityGrid",
    "log_transition_density",
    "transition_density",
    "gaussian_density",
    "so2_density",
    "characteristic_exponent",
    "fourier_density",
    "tail_approximation",
    "levy_measure_density",
    "levy_second_moment",
    "levy_tail_mass",
    "expectation",
    "density_moment",
    "tabulate_density",
    "convolve_densities",
    "cdf_table",
]

_LOG_PI = math.log(math.pi)


def _check_t(t: float) -> float:
    t = float(t)
    if not (math.isfinite(t) and t > 0.0):
        raise DomainError(f"t must be finite and > 0, got {t!r}")
    return t


def _out(x, arr):
    return float(arr) if np.ndim(x) == 0 else arr


def core_scale(t: float, params: ModelParams) -> float:
    """Width of the central peak: ct in the relativistic regime, sigma sqrt(t) otherwise."""
    return min(params.c * t, params.sigma * math.sqrt(t))


def log_transition_density(x, t: float, params: ModelParams):
    """Natural log of :func:`transition_density`, finite for every real x."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    sigma2 = params.sigma**2
    ct = params.c * t
    radius = np.hypot(x, ct)
    z = params.c * radius / sigma2
    # z - c^2 t / sigma^2 without cancellation
    excess = params.c / sigma2 * x * x / (radius + ct)
    logp = (
        math.log(params.c / sigma2)
        - _LOG_PI
        + math.log(ct)
        - np.log(radius)
        + np.log(bessel_k1e(np.atleast_1d(z))).reshape(z.shape)
        - excess
    )
    return _out(x, logp)


def transition_density(x, t: float, params: ModelParams):
    """Relativistic transition density P(x, t); symmetric, positive, unit mass."""
    return _out(x, np.exp(log_transition_density(x, t, params)))


def gaussian_density(x, t: float, sigma: float):
    """Brownian transition density with variance ``sigma**2 * t``."""
    t = _check_t(t)
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma > 0):
        raise DomainError("sigma must be finite and > 0")
    x = np.asarray(x, dtype=float)
    var = sigma * sigma * t
    return _out(x, np.exp(-0.5 * x * x / var) / math.sqrt(2.0 * math.pi * var))


def so2_density(x, t: float, params: ModelParams):
    """Rotation-invariant kernel ``(c/pi sigma^2) K0((c/sigma^2) sqrt(x^2+c^2t^2))``.

    Its total mass is ``exp(-r0 t)``, not 1.
    """
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    alpha = params.alpha
    z = np.atleast_1d(alpha * np.hypot(x, params.c * t))
    logp = math.log(alpha / math.pi) + np.log(bessel_k0e(z)) - z
    return _out(x, np.exp(logp).reshape(x.shape))


def characteristic_exponent(k, params: ModelParams):
    """psi(k) with ``E[exp(i k X_t)] = exp(-t psi(k))``; even, psi(0) = 0."""
    k = np.asarray(k, dtype=float)
    u = (k * params.sigma**2 / params.c) ** 2
    # r0 (sqrt(1+u) - 1) == k^2 sigma^2 / (sqrt(1+u) + 1)
    return _out(k, k * k * params.sigma**2 / (np.sqrt(1.0 + u) + 1.0))


def _inverse_exponent(level: float, params: ModelParams) -> float:
    # k >= 0 with psi(k) == level
    ratio = 1.0 + level / params.r0
    return params.alpha * math.sqrt(ratio * ratio - 1.0)


def fourier_density(x, t: float, params: ModelParams, quad: QuadratureConfig = DEFAULT_QUAD):
    """Density from the inverse Fourier transform ``(1/pi) int_0^inf cos(kx) exp(-t psi(k)) dk``.

    The k-range stops where ``exp(-t psi)`` and its tail are below
    ``quad.tail_tol``; panels are no wider than ``pi / (8|x|)``.
    """
    t = _check_t(t)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    level = 40.0
    while True:
        k_max = _inverse_exponent(level / t, params)
        slope = t * params.c * (k_max * params.sigma**2 / params.c) / math.sqrt(
            1.0 + (k_max * params.sigma**2 / params.c) ** 2
        )
        if math.exp(-level) / slope < quad.tail_tol:
            break
        level += 5.0
    out = np.empty_like(xs)
    for i, xv in enumerate(xs):
        step = k_max / 64.0
        if xv != 0.0:
            step = min(step, math.pi / (8.0 * abs(xv)))
        n_panels = int(math.ceil(k_max / step))
        edges = np.linspace(0.0, k_max, n_panels + 1)

        def integrand(k, xv=xv):
            return np.cos(k * xv) * np.exp(-t * characteristic_exponent(k, params))

        res = integrate(
            integrand,
            edges,
            abs_tol=quad.abs_tol * math.pi,
            rel_tol=quad.rel_tol,
            max_intervals=max(quad.max_intervals, 4 * n_panels),
        )
        out[i] = res.value / math.pi
    return _out(x, out.reshape(np.shape(x)))


def tail_approximation(x, t: float, params: ModelParams):
    """Large-|x| approximation to P(x, t); equals the Gaussian peak at x = 0."""
    t = _check_t(t)
    x = np.asarray(x, dtype=float)
    sigma2 = params.sigma**2
    u = (x / (params.c * t)) ** 2
    expo = params.c**2 * t / sigma2 * u / (np.sqrt(1.0 + u) + 1.0)
    logp = -0.5 * math.log(2.0 * math.pi * sigma2 * t) - 0.75 * np.log1p(u) - expo
    return _out(x, np.exp(logp))


def levy_measure_density(x, params: ModelParams):
    """Jump intensity ``(c^2 / pi sigma^2 |x|) K1(c|x| / sigma^2)`` for x != 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0) or not np.all(np.isfinite(x)):
        raise DomainError("Levy measure density is undefined at x = 0")
    ax = np.abs(x)
    z = np.atleast_1d(params.alpha * ax)
    logp = (
        2.0 * math.log(params.c)
        - math.log(math.pi * params.sigma**2)
        - np.log(ax)
        + np.log(bessel_k1e(z)).reshape(ax.shape)
        - z.reshape(ax.shape)
    )
    return _out(x, np.exp(logp))


def _geometric_edges(scale: float, upper: float) -> np.ndarray:
    edges = [0.0]
    e = scale / 8.0
    while e < upper:
        edges.append(e)
        e *= 2.0
    edges.append(upper)
    return np.asarray(edges)


def _cutoff(t: float, params: ModelParams, rate: float, power: int, tail_tol: float) -> float:
    # Integrand envelope: P(x, t) * |x|**power * exp(rate |x|), rate < c/sigma^2.
    def log_env(xv):
        lp = log_transition_density(xv, t, params) + rate * xv
        return lp + (power * math.log(xv) if power else 0.0)

    return tail_cutoff(log_env, 0.0, core_scale(t, params), math.log(tail_tol))


def expectation(
    g: Callable[[np.ndarray], np.ndarray],
    t: float,
    params: ModelParams,
    quad: QuadratureConfig = DEFAULT_QUAD,
    x0: float = 0.0,
    envelope_rate: float = 0.0,
    envelope_power: int = 0,
) -> float:
    """``int P(x' - x0, t) g(x') dx'`` by adaptive quadrature.

    ``|g(x0 + u)|`` must be bounded by ``C |u|**envelope_power *
    exp(envelope_rate |u|)`` with ``envelope_rate < c / sigma**2``; the
    envelope fixes where the infinite range is cut.
    """
    t = _check_t(t)
    if envelope_rate >= params.alpha:
        raise DomainError("envelope_rate must be below c / sigma**2 for integrability")
    upper = _cutoff(t, params, envelope_rate, envelope_power, quad.tail_tol)
    half = _geometric_edges(core_scale(t, params), upper)
    edges = np.concatenate([-half[::-1], half[1:]])

    def integrand(u):
        return transition_density(u, t, params) * g(x0 + u)

    return integrate(integrand, edges, quad.abs_tol, quad.rel_tol, quad.max_intervals).value


def density_moment(order: int, t: float, params: ModelParams, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``int x**order P(x, t) dx``; odd orders vanish by symmetry."""
    if order < 0:
        raise DomainError("moment order must be >= 0")
    if order % 2:
        return 0.0
    t = _check_t(t)
    upper = _cutoff(t, params, 0.0, order, quad.tail_tol)
    edges = _geometric_edges(core_scale(t, params), upper)
    res = integrate(
        lambda x: x**order * transition_density(x, t, params),
        edges,
        0.5 * quad.abs_tol,
        quad.rel_tol,
        quad.max_intervals,
    )
    return 2.0 * res.value


def _levy_integral(power: int, lower: float, params: ModelParams, quad: QuadratureConfig) -> float:
    # 2 * int_lower^inf x**power * levy(x) dx
    alpha = params.alpha

    def log_env(xv):
        return power * math.log(xv) + math.log(levy_measure_density(xv, params))

    upper = tail_cutoff(log_env, max(lower, 0.0), 1.0 / alpha, math.log(quad.tail_tol))
    if lower > 0:
        edges = np.concatenate([[lower], lower + _geometric_edges(1.0 / alpha, upper - lower)[1:]])
    else:
        edges = _geometric_edges(1.0 / alpha, upper)
        edges[0] = 0.0

    def integrand(x):
        out = np.zeros_like(x)
        nz = x > 0
        out[nz] = x[nz] ** power * levy_measure_density(x[nz], params)
        return out

    res = integrate(integrand, edges, 0.5 * quad.abs_tol, quad.rel_tol, quad.max_intervals)
    return 2.0 * res.value


def levy_second_moment(params: ModelParams, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``int x^2 Levy(x) dx``, which equals sigma**2."""
    return _levy_integral(2, 0.0, params, quad)


def levy_tail_mass(threshold: float, params: ModelParams, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Expected number of jumps per unit time with ``|jump| > threshold``."""
    if not threshold > 0:
        raise DomainError("threshold must be > 0")
    return _levy_integral(0, float(threshold), params, quad)


@dataclass(frozen=True)
class DensityGrid:
    """A density tabulated on an increasing grid of x values."""

    x_values: np.ndarray
    p_values: np.ndarray
    t: float
    params: ModelParams
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        xv = np.asarray(self.x_values, dtype=float)
        pv = np.asarray(self.p_values, dtype=float)
        if xv.shape != pv.shape or xv.ndim != 1:
            raise DomainError("x_values and p_values must be 1-d of equal length")
        if xv.size > 1 and np.any(np.diff(xv) <= 0):
            raise DomainError("x_values must be strictly increasing")
        if np.any(pv < 0) or not np.all(np.isfinite(pv)):
            raise DomainError("p_values must be finite and non-negative")
        object.__setattr__(self, "x_values", xv)
        object.__setattr__(self, "p_values", pv)


def tabulate_density(x_values, t: float, params: ModelParams) -> DensityGrid:
    xv = np.asarray(x_values, dtype=float)
    return DensityGrid(xv, transition_density(xv, t, params), float(t), params)


KERNELS: dict[str, Callable] = {
    "relativistic": transition_density,
    "so2": so2_density,
    "gaussian": lambda x, t, params: gaussian_density(x, t, params.sigma),
}


def _kernel_tail_mass(kernel: Callable, t: float, params: ModelParams, half_width: float) -> float:
    # mass of the kernel beyond +-half_width
    def log_k(xv):
        v = float(kernel(xv, t, params))
        return math.log(v) if v > 0 else -math.inf

    far = tail_cutoff(log_k, half_width, max(half_width, core_scale(t, params)), math.log(1e-30))
    edges = half_width + _geometric_edges(core_scale(t, params), far - half_width)
    res = integrate(lambda x: kernel(x, t, params), edges, 1e-16, 1e-8)
    return 2.0 * res.value


def convolve_densities(
    t1: float,
    t2: float,
    params: ModelParams,
    output_half_width: float,
    spacing: float | None = None,
    half_width: float | None = None,
    kernel: str = "relativistic",
    tail_mass_tol: float = 1e-10,
    refinement_tol: float | None = None,
) -> DensityGrid:
    """Trapezoidal convolution ``int P(x - y, t1) P(y, t2) dy`` on a uniform grid.

    The kernels are sampled on ``k * spacing`` for ``|k * spacing| <=
    half_width`` and convolved by FFT; the result is returned for
    ``|x| <= output_half_width``.  The default spacing is a sixth of the
    narrower kernel's core width, which makes the trapezoid rule accurate
    to roughly machine precision for these analytic kernels.  A truncated
    tail heavier than ``tail_mass_tol`` raises TailMassError.  With
    ``refinement_tol`` set, the convolution is repeated at half the spacing
    and ConvergenceError is raised if any shared node moves by more.
    """
    t1, t2 = _check_t(t1), _check_t(t2)
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}")
    fn = KERNELS[kernel]
    if spacing is None:
        spacing = min(core_scale(t1, params), core_scale(t2, params)) / 6.0
    if half_width is None:
        log_tol = math.log(tail_mass_tol * 1e-3)
        reach = max(
            tail_cutoff(lambda v, tt=tt: math.log(max(float(fn(v, tt, params)), 1e-300)), 0.0,
                        core_scale(tt, params), log_tol)
            for tt in (t1, t2)
        )
        half_width = reach + output_half_width
    for tt in (t1, t2):
        lost = _kernel_tail_mass(fn, tt, params, half_width - output_half_width)
        if lost > tail_mass_tol:
            raise TailMassError(f"grid truncation drops mass {lost:.3g} > {tail_mass_tol:.3g}")

    def run(h: float, m: int):
        n = int(math.ceil(half_width / h))
        grid = h * np.arange(-n, n + 1)
        conv = fftconvolve(fn(grid, t1, params), fn(grid, t2, params), mode="same") * h
        sl = slice(n - m, n + m + 1)
        return grid[sl], np.clip(conv[sl], 0.0, None)

    m_out = int(math.floor(output_half_width / spacing + 1e-9))
    x_out, p_out = run(spacing, m_out)
    meta = {"spacing": spacing, "half_width": half_width, "kernel": kernel, "t1": t1, "t2": t2}
    if refinement_tol is not None:
        _, p_fine = run(0.5 * spacing, 2 * m_out)
        delta = float(np.max(np.abs(p_fine[::2] - p_out)))
        meta["refinement_delta"] = delta
        if delta > refinement_tol:
            raise ConvergenceError(f"grid refinement moved the result by {delta:.3g}")
    return DensityGrid(x_out, p_out, t1 + t2, params, meta)


def cdf_table(t: float, params: ModelParams, cells: int = 20_000, quad: QuadratureConfig = DEFAULT_QUAD):
    """Nodes and CDF values of P(., t) for interpolation.

    Each cell is integrated with a fixed 15-point Gauss rule.  Nodes are
    denser near the origin (sinh spacing) and reach the point where the
    tail mass drops below ``quad.tail_tol``.
    """
    t = _check_t(t)
    upper = _cutoff(t, params, 0.0, 0, quad.tail_tol)
    s = core_scale(t, params)
    u = np.linspace(0.0, math.asinh(upper / s), cells + 1)
    nodes = s * np.sinh(u)
    gx, gw = np.polynomial.legendre.leggauss(15)
    a, b = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * gx
    masses = (transition_density(pts.ravel(), t, params).reshape(pts.shape) @ gw) * half
    right = 0.5 + np.concatenate([[0.0], np.cumsum(masses)])
    x = np.concatenate([-nodes[::-1], nodes[1:]])
    cdf = np.concatenate([1.0 - right[::-1], right[1:]])
    return x, cdf
