"""Command-line front end.

Exit codes: 0 success, 1 failed selfcheck, 2 invalid input (including the
log-volatility bound), 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from . import io as rio
from .density import _cutoff, tabulate_density, transition_density
from .errors import ConvergenceError, DomainError
from .montecarlo import mc_price_call, simulate_paths
from .params import MCConfig, ModelParams
from .pricing import (
    OptionContract,
    bsm_price,
    implied_vol,
    price_option,
    smile_curve,
)
from .quadrature import QuadratureConfig
from .selfcheck import lattice_hash, run_all

OUTPUT_DIR_ENV = "RELBM_OUTPUT_DIR"

UNITS = (
    "Units: x is dimensionless log-space, t in years, sigma in year^-1/2, "
    "c in year^-1; r0 = c^2/sigma^2 (large c/sigma^2 is the Gaussian regime)."
)


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, required=True, help="diffusion coefficient (year^-1/2)")
    p.add_argument("--c", type=float, required=True, help="characteristic diffusion speed (year^-1)")


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help=f"output file (default: ${OUTPUT_DIR_ENV}/<command>.<format> or stdout)")


def _quad_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--abs-tol", type=float, default=1e-10, help="quadrature absolute tolerance")
    p.add_argument("--rel-tol", type=float, default=1e-12, help="quadrature relative tolerance")


def _contract_args(p: argparse.ArgumentParser, strike_required: bool = True) -> None:
    p.add_argument("--spot", type=float, required=True, help="current underlying level S_t")
    p.add_argument("--strike", type=float, required=strike_required, help="strike S*")
    p.add_argument("--tau", type=float, required=True, help="time to maturity T - t (years)")
    p.add_argument("--t", dest="valuation_time", type=float, default=0.0, help="valuation time t (years)")
    p.add_argument("--rate", type=float, default=0.0, help="continuously compounded risk-free rate")
    p.add_argument("--zeta", type=float, required=True, help="log-volatility exponent (sigma_S = zeta*sigma)")
    p.add_argument("--kind", choices=("call", "put"), default="call")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relbm", description="Relativistic Brownian motion pricing tools. " + UNITS)
    parser.add_argument("--version", action="store_true", help="print version and regression-lattice hash")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("density", help="tabulate the transition density", description=UNITS)
    _model_args(p)
    p.add_argument("--t", type=float, required=True, help="elapsed time (years)")
    p.add_argument("--x-min", type=float, required=True)
    p.add_argument("--x-max", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="number of grid points")
    _output_args(p)

    for name, helptext in (("price", "price a European option"), ("hedge", "replicating portfolio (phi, psi)")):
        p = sub.add_parser(name, help=helptext, description=UNITS)
        _model_args(p)
        _contract_args(p)
        _quad_args(p)
        _output_args(p)

    p = sub.add_parser("smile", help="implied volatility smile", description=UNITS)
    _model_args(p)
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--strikes", type=float, nargs="+", help="explicit strike list")
    p.add_argument("--k-min", type=float, help="lowest strike (with --k-max, --n-strikes)")
    p.add_argument("--k-max", type=float)
    p.add_argument("--n-strikes", type=int, default=21)
    p.add_argument("--workers", type=int, default=1)
    _quad_args(p)
    _output_args(p)

    p = sub.add_parser("mc", help="Monte Carlo paths or call price", description=UNITS)
    _model_args(p)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--full-increments", action="store_true", help="write every increment, not just terminal values")
    p.add_argument("--spot", type=float, help="price a call when given with --strike, --zeta")
    p.add_argument("--strike", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--rate", type=float, default=0.0)
    _output_args(p)

    sub.add_parser("selfcheck", help="run the invariant suite")
    return parser


@contextlib.contextmanager
def _sink(args, command: str):
    path = args.output
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{command}.{args.format}")
    if path is None:
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        yield fh


def _model(args) -> ModelParams:
    return ModelParams(args.sigma, args.c)


def _quad(args) -> QuadratureConfig:
    return QuadratureConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol)


def _header(params: ModelParams) -> dict:
    return {"sigma": params.sigma, "c": params.c, "r0": params.r0}


def extended_trapezoid_mass(x_min: float, x_max: float, n: int, t: float, params: ModelParams) -> float:
    """Trapezoid mass on the output lattice extended until the tails vanish."""
    h = (x_max - x_min) / (n - 1)
    reach = _cutoff(t, params, 0.0, 0, 1e-14)
    lo = min(x_min, -reach)
    hi = max(x_max, reach)
    k_lo = math.floor((lo - x_min) / h)
    k_hi = math.ceil((hi - x_min) / h)
    x = x_min + h * np.arange(k_lo, k_hi + 1)
    return float(trapezoid(transition_density(x, t, params), x))


def cmd_density(args) -> int:
    params = _model(args)
    if args.n < 2 or not args.x_max > args.x_min:
        raise DomainError("density grid needs n >= 2 and x-max > x-min")
    x = np.linspace(args.x_min, args.x_max, args.n)
    grid = tabulate_density(x, args.t, params)
    mass = extended_trapezoid_mass(args.x_min, args.x_max, args.n, args.t, params)
    with _sink(args, "density") as fh:
        if args.format == "csv":
            rio.write_density_csv(fh, grid, {"extended_trapezoid_mass": mass})
        else:
            payload = rio.density_grid_payload(grid)
            payload["extended_trapezoid_mass"] = mass
            rio.write_json(fh, payload)
    return 0


def _contract(args) -> OptionContract:
    return OptionContract(args.strike, args.valuation_time + args.tau, args.valuation_time, args.rate, args.kind)


def cmd_price(args) -> int:
    params = _model(args)
    contract = _contract(args)
    rep = price_option(args.spot, contract, args.zeta, params, _quad(args))
    iv = None
    if contract.tau > 0:
        with contextlib.suppress(DomainError, ConvergenceError):
            iv = implied_vol(rep.price, args.spot, contract)
    ref = bsm_price(args.spot, contract, args.zeta * args.sigma)
    meta = {**_header(params), "tau": contract.tau, "rate": contract.rate, "bsm_price_sigma_s": ref}
    with _sink(args, "price") as fh:
        if args.format == "csv":
            rio.write_report_csv(fh, contract.strike, rep, iv, meta)
        else:
            rio.write_json(fh, {**meta, "strike": contract.strike, "report": rep.to_dict(), "implied_vol": iv})
    return 0


def cmd_hedge(args) -> int:
    params = _model(args)
    contract = _contract(args)
    rep = price_option(args.spot, contract, args.zeta, params, _quad(args))
    bond = math.exp(contract.rate * contract.valuation_time)
    row = {"phi": rep.delta, "psi": rep.bond_units, "value": rep.price, "bond": bond, "spot": args.spot}
    with _sink(args, "hedge") as fh:
        if args.format == "csv":
            rio.write_csv(fh, list(row), [list(row.values())], {**_header(params), "kind": rep.kind})
        else:
            rio.write_json(fh, {**_header(params), "kind": rep.kind, **row})
    return 0


def cmd_smile(args) -> int:
    params = _model(args)
    if args.strikes:
        strikes = args.strikes
    elif args.k_min is not None and args.k_max is not None:
        strikes = list(np.linspace(args.k_min, args.k_max, args.n_strikes))
    else:
        raise DomainError("smile needs --strikes or --k-min/--k-max")
    smile = smile_curve(args.spot, args.tau, args.rate, strikes, args.zeta, params, _quad(args), args.workers)
    with _sink(args, "smile") as fh:
        if args.format == "csv":
            rio.write_smile_csv(fh, smile, _header(params))
        else:
            rio.write_json(fh, {**_header(params), "smile": rio.smile_payload(smile)})
    return 0


def cmd_mc(args) -> int:
    params = _model(args)
    config = MCConfig(args.paths, args.steps, args.horizon, args.seed)
    if args.strike is not None:
        if args.spot is None or args.zeta is None:
            raise DomainError("Monte Carlo pricing needs --spot, --strike and --zeta")
        contract = OptionContract(args.strike, args.horizon, 0.0, args.rate)
        price, se = mc_price_call(args.spot, contract, args.zeta, params, config)
        row = {"strike": args.strike, "price": price, "std_error": se}
        with _sink(args, "mc") as fh:
            if args.format == "csv":
                rio.write_csv(fh, list(row), [list(row.values())], {**_header(params), "paths": args.paths, "seed": args.seed})
            else:
                rio.write_json(fh, {**_header(params), "paths": args.paths, "seed": args.seed, **row})
        return 0
    paths = simulate_paths(config, params)
    meta = {**_header(params), "horizon": args.horizon, "steps": args.steps, "seed": args.seed}
    with _sink(args, "mc") as fh:
        if args.format == "csv":
            rio.write_paths_csv(fh, paths.increments, args.full_increments, meta)
        else:
            rio.write_json(fh, {**meta, "summary": rio.path_summary(paths.terminal),
                                "theory_variance": params.sigma**2 * args.horizon})
    return 0


def cmd_selfcheck(args) -> int:
    results = run_all()
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "density": cmd_density,
    "price": cmd_price,
    "hedge": cmd_hedge,
    "smile": cmd_smile,
    "mc": cmd_mc,
    "selfcheck": cmd_selfcheck,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(f"relbm {__version__} lattice {lattice_hash()}")
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
