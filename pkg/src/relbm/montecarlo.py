"""Exact simulation of the relativistic (normal inverse Gaussian) process.

An increment over ``dt`` is ``Z * sqrt(I)`` with ``Z`` standard normal and
``I`` inverse Gaussian with mean ``sigma**2 dt`` and shape ``c**2 dt**2``.
Then ``E[exp(ikX)] = E[exp(-k^2 I / 2)] = exp(-dt psi(k))``, so there is no
discretization bias and the number of steps only matters for path output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .martingale import drift_beta
from .params import MCConfig, ModelParams
from .pricing import OptionContract, _check_pricing_zeta, _check_spot

__all__ = [
    "PathSet",
    "inverse_gaussian",
    "sample_increment",
    "sample_increments",
    "block_generator",
    "simulate_paths",
    "terminal_values",
    "mc_price_call",
]


def inverse_gaussian(mean: float, shape: float, rng: np.random.Generator, size=None):
    """Inverse Gaussian draws by the Michael-Schucany-Haas transform.

    The smaller root of the chi-square quadratic is computed as
    ``mean**2 / larger_root`` so it stays accurate when ``mean >> shape``.
    """
    if not (mean > 0 and shape > 0):
        raise DomainError("inverse Gaussian needs mean > 0 and shape > 0")
    y = rng.standard_normal(size) ** 2
    u = rng.random(size)
    my = mean * y
    big = mean + mean / (2.0 * shape) * (my + np.sqrt(my * (4.0 * shape + my)))
    small = mean * mean / big
    return np.where(u * (mean + small) <= mean, small, big)


def sample_increments(dt: float, params: ModelParams, rng: np.random.Generator, size=None):
    """Increments of the process over ``dt``; density is ``transition_density(., dt)``."""
    if not (math.isfinite(dt) and dt > 0):
        raise DomainError("dt must be finite and > 0")
    clock = inverse_gaussian(params.sigma**2 * dt, (params.c * dt) ** 2, rng, size)
    return rng.standard_normal(size) * np.sqrt(clock)


def sample_increment(dt: float, params: ModelParams, rng: np.random.Generator) -> float:
    """One increment over ``dt``."""
    return float(sample_increments(dt, params, rng))


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Philox stream for path block ``block``; depends only on ``(seed, block)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


@dataclass(frozen=True)
class PathSet:
    """Increments of ``n_paths`` paths on a uniform grid of ``n_steps`` steps."""

    increments: np.ndarray
    times: np.ndarray

    @property
    def terminal(self) -> np.ndarray:
        return self.increments.sum(axis=1)

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]


def _block_counts(config: MCConfig) -> list[int]:
    full, rest = divmod(int(config.n_paths), int(config.block_size))
    return [int(config.block_size)] * full + ([rest] if rest else [])


def simulate_paths(config: MCConfig, params: ModelParams, max_workers: int | None = None) -> PathSet:
    """Simulate independent-increment paths over ``config.horizon``.

    Output is bitwise reproducible for a given config, whatever
    ``max_workers`` is.
    """
    dt = config.horizon / config.n_steps
    counts = _block_counts(config)

    def run(j: int) -> np.ndarray:
        rng = block_generator(config.seed, j)
        return sample_increments(dt, params, rng, size=(counts[j], config.n_steps))

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            blocks = list(pool.map(run, range(len(counts))))
    else:
        blocks = [run(j) for j in range(len(counts))]
    times = np.linspace(0.0, config.horizon, config.n_steps + 1)
    return PathSet(np.concatenate(blocks, axis=0), times)


def terminal_values(config: MCConfig, params: ModelParams) -> np.ndarray:
    """Row sums of :func:`simulate_paths`, without keeping every increment."""
    dt = config.horizon / config.n_steps
    out = []
    for j, n in enumerate(_block_counts(config)):
        rng = block_generator(config.seed, j)
        out.append(sample_increments(dt, params, rng, size=(n, config.n_steps)).sum(axis=1))
    return np.concatenate(out)


def mc_price_call(
    s_t: float,
    contract: OptionContract,
    zeta: float,
    params: ModelParams,
    config: MCConfig,
) -> tuple[float, float]:
    """Monte Carlo call price and its standard error.

    Uses ``S_T = S_t exp(zeta X - (beta - r) tau)`` with ``X`` simulated over
    ``tau = contract.tau``; ``config.horizon`` is ignored.
    """
    s_t = _check_spot(s_t)
    zeta = _check_pricing_zeta(zeta, params)
    tau = contract.tau
    if tau == 0.0:
        return max(s_t - contract.strike, 0.0), 0.0
    beta = drift_beta(zeta, params)
    cfg = MCConfig(config.n_paths, config.n_steps, tau, config.seed, config.block_size)
    x = terminal_values(cfg, params)
    payoff = contract.discount * np.maximum(s_t * np.exp(zeta * x - (beta - contract.rate) * tau) - contract.strike, 0.0)
    return float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(payoff.size))
