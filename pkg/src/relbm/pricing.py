"""European option pricing under the relativistic measure.

The underlying is ``S_T = S_t exp(zeta x' - (beta - r) tau)`` with ``x'`` an
increment of the relativistic process over ``tau = T - t``.  The call price is

    V = exp(-r tau) S* int_{x*}^inf P(x', tau) (exp(zeta (x' - x*)) - 1) dx'
    x* = (ln(S*/S_t) + (beta - r) tau) / zeta

and the hedge ratio is ``dV/dS_t = exp(-r tau) (S*/S_t) int_{x*}^inf
P(x', tau) exp(zeta (x' - x*)) dx'``.  Puts follow from parity.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .density import _cutoff, _geometric_edges, core_scale, log_transition_density
from .errors import BoundViolationError, ConvergenceError, DomainError, RelBMError
from .martingale import drift_beta, max_zeta
from .params import ModelParams
from .quadrature import DEFAULT_QUAD, QuadratureConfig, integrate

__all__ = [
    "OptionContract",
    "PriceReport",
    "SmilePoint",
    "SmileCurve",
    "critical_log_strike",
    "price_call",
    "price_put",
    "price_option",
    "delta_phi",
    "hedge_portfolio",
    "bsm_price",
    "implied_vol",
    "smile_curve",
]


@dataclass(frozen=True)
class OptionContract:
    strike: float
    maturity: float
    valuation_time: float = 0.0
    rate: float = 0.0
    kind: str = "call"

    def __post_init__(self):
        if not (math.isfinite(self.strike) and self.strike > 0):
            raise DomainError("strike must be finite and > 0")
        if not (math.isfinite(self.maturity) and math.isfinite(self.valuation_time)):
            raise DomainError("maturity and valuation_time must be finite")
        if self.maturity < self.valuation_time:
            raise DomainError("maturity must not precede valuation_time")
        if not math.isfinite(self.rate):
            raise DomainError("rate must be finite")
        if self.kind not in ("call", "put"):
            raise DomainError("kind must be 'call' or 'put'")

    @property
    def tau(self) -> float:
        return self.maturity - self.valuation_time

    @property
    def discount(self) -> float:
        return math.exp(-self.rate * self.tau)


@dataclass(frozen=True)
class PriceReport:
    price: float
    x_star: float
    quad_error_estimate: float
    delta: float
    bond_units: float
    kind: str = "call"

    def to_dict(self) -> dict:
        return asdict(self)


def _check_spot(s_t: float) -> float:
    s_t = float(s_t)
    if not (math.isfinite(s_t) and s_t > 0):
        raise DomainError("spot must be finite and > 0")
    return s_t


def _check_pricing_zeta(zeta: float, params: ModelParams) -> float:
    zeta = float(zeta)
    if not (math.isfinite(zeta) and zeta > 0):
        raise DomainError("pricing requires zeta > 0")
    if zeta >= max_zeta(params):
        raise BoundViolationError(
            f"pricing requires zeta < c/sigma^2 = {max_zeta(params):.6g} "
            f"(log-volatility bound), got zeta = {zeta:.6g}"
        )
    return zeta


def critical_log_strike(s_t: float, contract: OptionContract, zeta: float, params: ModelParams) -> float:
    """Increment x* at which ``S_T`` reaches the strike."""
    s_t = _check_spot(s_t)
    if not zeta > 0:
        raise DomainError("x* requires zeta > 0")
    beta = drift_beta(zeta, params)
    return (math.log(contract.strike / s_t) + (beta - contract.rate) * contract.tau) / zeta


def _call_core(s_t, contract, zeta, params, quad):
    # Returns (price, delta, x_star, error) for tau > 0.
    tau = contract.tau
    beta = drift_beta(zeta, params)
    x_star = critical_log_strike(s_t, contract, zeta, params)
    log_scale = math.log(s_t) - (beta - contract.rate) * tau
    log_tol = math.log(quad.tail_tol)
    # Cutoffs where the S_T-weighted density is negligible in price units.
    right = _cutoff(tau, params, zeta, 0, math.exp(log_tol - max(log_scale, 0.0)))
    left = _cutoff(tau, params, 0.0, 0, math.exp(log_tol - max(log_scale, math.log(contract.strike))))
    disc = contract.discount
    if x_star >= right:
        return 0.0, 0.0, x_star, quad.tail_tol
    lower = max(x_star, -left)
    half = _geometric_edges(core_scale(tau, params), max(left, right))
    sym = np.concatenate([-half[::-1], half[1:]])
    edges = np.concatenate([[lower], sym[(sym > lower) & (sym < right)], [right]])
    strike = contract.strike

    def payoff_integrand(x):
        logp = log_transition_density(x, tau, params)
        tilt = zeta * (x - x_star)
        near = tilt < 1.0
        return strike * np.where(
            near,
            np.exp(logp) * np.expm1(np.where(near, tilt, 0.0)),
            np.exp(logp + tilt) - np.exp(logp),
        )

    def stock_integrand(x):
        return np.exp(log_transition_density(x, tau, params) + zeta * x - beta * tau)

    pay = integrate(payoff_integrand, edges, quad.abs_tol, quad.rel_tol, quad.max_intervals)
    stock = integrate(stock_integrand, edges, quad.abs_tol / s_t, quad.rel_tol, quad.max_intervals)
    price = disc * pay.value
    # exp(-r tau) (S*/S_t) int P exp(zeta (x - x*)) == int P exp(zeta x - beta tau)
    delta = stock.value
    return price, delta, x_star, disc * pay.error + quad.tail_tol


def price_call(
    s_t: float,
    contract: OptionContract,
    zeta: float,
    params: ModelParams,
    quad: QuadratureConfig = DEFAULT_QUAD,
) -> PriceReport:
    """European call under the relativistic measure, with hedge ratios.

    ``0 < zeta < c/sigma**2`` is required; the ``kind`` of ``contract`` is
    ignored.  The cash bond is ``B_t = exp(r t)``.
    """
    s_t = _check_spot(s_t)
    zeta = _check_pricing_zeta(zeta, params)
    bond = math.exp(contract.rate * contract.valuation_time)
    if contract.tau == 0.0:
        x_star = critical_log_strike(s_t, contract, zeta, params)
        price = max(s_t - contract.strike, 0.0)
        delta = 1.0 if s_t > contract.strike else 0.0
        return PriceReport(price, x_star, 0.0, delta, (price - delta * s_t) / bond, "call")
    price, delta, x_star, err = _call_core(s_t, contract, zeta, params, quad)
    return PriceReport(price, x_star, err, delta, (price - delta * s_t) / bond, "call")


def price_put(
    s_t: float,
    contract: OptionContract,
    zeta: float,
    params: ModelParams,
    quad: QuadratureConfig = DEFAULT_QUAD,
) -> PriceReport:
    """European put from parity: ``P = C - S_t + exp(-r tau) S*``."""
    call = price_call(s_t, contract, zeta, params, quad)
    price = call.price - s_t + contract.discount * contract.strike
    price = max(price, 0.0)
    delta = call.delta - 1.0
    bond = math.exp(contract.rate * contract.valuation_time)
    return PriceReport(price, call.x_star, call.quad_error_estimate, delta, (price - delta * s_t) / bond, "put")


def price_option(s_t, contract, zeta, params, quad=DEFAULT_QUAD) -> PriceReport:
    """Dispatch on ``contract.kind``."""
    fn = price_call if contract.kind == "call" else price_put
    return fn(s_t, contract, zeta, params, quad)


def delta_phi(s_t, contract, zeta, params, quad=DEFAULT_QUAD) -> float:
    """Stock holding phi = dV/dS_t of the replicating portfolio."""
    return price_option(s_t, contract, zeta, params, quad).delta


def hedge_portfolio(s_t, contract, zeta, params, quad=DEFAULT_QUAD) -> tuple[float, float]:
    """Units ``(phi, psi)`` of stock and cash bond with ``phi S_t + psi B_t = V_t``."""
    rep = price_option(s_t, contract, zeta, params, quad)
    return rep.delta, rep.bond_units


def bsm_price(s_t: float, contract: OptionContract, sigma_bsm: float) -> float:
    """Black-Scholes-Merton price of ``contract`` with volatility ``sigma_bsm``."""
    s_t = _check_spot(s_t)
    if not (math.isfinite(sigma_bsm) and sigma_bsm >= 0):
        raise DomainError("sigma_bsm must be finite and >= 0")
    tau, k = contract.tau, contract.strike
    df = contract.discount
    sd = sigma_bsm * math.sqrt(tau)
    if sd == 0.0:
        call = max(s_t - k * df, 0.0)
    else:
        d1 = (math.log(s_t / (k * df)) + 0.5 * sd * sd) / sd
        call = s_t * float(ndtr(d1)) - k * df * float(ndtr(d1 - sd))
    if contract.kind == "call":
        return call
    return call - s_t + k * df


def _price_bounds(s_t: float, contract: OptionContract) -> tuple[float, float]:
    fwd_strike = contract.strike * contract.discount
    if contract.kind == "call":
        return max(s_t - fwd_strike, 0.0), s_t
    return max(fwd_strike - s_t, 0.0), fwd_strike


def implied_vol(target_price: float, s_t: float, contract: OptionContract, max_iter: int = 200) -> float:
    """Black-Scholes-Merton volatility reproducing ``target_price``.

    Returns 0.0 when the target equals intrinsic value.  Brent's method
    (bisection with secant/inverse-quadratic steps) on a bracket grown by
    doubling; the residual is at most ``1e-10 * s_t``.
    """
    s_t = _check_spot(s_t)
    lo_p, hi_p = _price_bounds(s_t, contract)
    slack = 1e-12 * s_t
    if not (lo_p - slack <= target_price <= hi_p + slack) or contract.tau <= 0:
        raise DomainError(
            f"target price {target_price!r} outside the no-arbitrage band [{lo_p!r}, {hi_p!r}]"
        )
    if target_price - lo_p <= slack:
        return 0.0
    if target_price >= hi_p:
        raise DomainError("target price at the upper no-arbitrage bound has no finite implied vol")

    def f(sig):
        return bsm_price(s_t, contract, sig) - target_price

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e4:
            raise ConvergenceError("could not bracket implied volatility")
    vol = brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=max_iter)
    if abs(f(vol)) > 1e-10 * s_t:
        raise ConvergenceError("implied volatility residual above 1e-10 * spot")
    return vol


@dataclass(frozen=True)
class SmilePoint:
    strike: float
    model_price: float
    implied_vol: float | None
    delta: float
    status: str = "ok"


@dataclass(frozen=True)
class SmileCurve:
    maturity: float
    forward: float
    points: tuple[SmilePoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ks = [p.strike for p in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise DomainError("smile strikes must be strictly increasing")

    @property
    def strikes(self) -> np.ndarray:
        return np.array([p.strike for p in self.points])

    @property
    def implied_vols(self) -> np.ndarray:
        return np.array([np.nan if p.implied_vol is None else p.implied_vol for p in self.points])


def smile_curve(
    s_t: float,
    maturity: float,
    rate: float,
    strikes,
    zeta: float,
    params: ModelParams,
    quad: QuadratureConfig = DEFAULT_QUAD,
    max_workers: int | None = None,
) -> SmileCurve:
    """Relativistic call prices and their implied volatilities across strikes.

    Inversion failures are recorded per point (``status``) instead of
    raised.  ``max_workers > 1`` prices strikes on a thread pool; results
    do not depend on the pool size.
    """
    s_t = _check_spot(s_t)
    zeta = _check_pricing_zeta(zeta, params)
    strikes = [float(k) for k in strikes]
    if any(k <= 0 for k in strikes) or any(b <= a for a, b in zip(strikes, strikes[1:])):
        raise DomainError("strikes must be positive and strictly increasing")

    def one(k: float) -> SmilePoint:
        contract = OptionContract(k, maturity, 0.0, rate, "call")
        rep = price_call(s_t, contract, zeta, params, quad)
        try:
            vol = implied_vol(rep.price, s_t, contract)
            status = "intrinsic" if vol == 0.0 else "ok"
        except RelBMError as exc:
            vol, status = None, f"failed: {exc}"
        return SmilePoint(k, rep.price, vol, rep.delta, status)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            points = tuple(pool.map(one, strikes))
    else:
        points = tuple(one(k) for k in strikes)
    return SmileCurve(float(maturity), s_t * math.exp(rate * maturity), points)
