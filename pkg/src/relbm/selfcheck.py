"""Quick invariant suite behind ``relbm selfcheck``."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .density import convolve_densities, density_moment, expectation, so2_density, transition_density
from .martingale import MartingaleSpec, martingale_value, max_zeta
from .params import ModelParams
from .pricing import OptionContract, bsm_price, price_call

# Regression lattice: the parameter points the test-suite pins.
REFERENCE_LATTICE = {
    "normalization": {"sigma": [0.2, 1.0, 3.0], "c": [0.1, 1.0, 10.0], "t": [0.1, 1.0, 5.0]},
    "semigroup": {"params": [[1.0, 1.0], [1.0, 0.2]], "t": [0.5, 1.0, 2.0]},
    "pricing": {"spot": 100.0, "strike": 100.0, "sigma": 0.2, "zeta": 1.0, "tau": 1.0, "rate": 0.0,
                "c": [0.04, 0.08, 16.0]},
    "smile": {"sigma": 0.4, "zeta": 0.5, "c_over_sigma2": [1.0, 400.0], "moneyness": [0.8, 1.0, 1.2]},
}


def lattice_hash() -> str:
    blob = json.dumps(REFERENCE_LATTICE, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_normalization() -> CheckResult:
    lat = REFERENCE_LATTICE["normalization"]
    worst = 0.0
    for s in lat["sigma"]:
        for c in lat["c"]:
            for t in lat["t"]:
                worst = max(worst, abs(density_moment(0, t, ModelParams(s, c)) - 1.0))
    return CheckResult("normalization", worst <= 1e-8, f"max |mass - 1| = {worst:.3g} (tol 1e-8)")


def check_semigroup() -> CheckResult:
    worst = 0.0
    weakest_k0 = math.inf
    for s, c in REFERENCE_LATTICE["semigroup"]["params"]:
        p = ModelParams(s, c)
        for t in REFERENCE_LATTICE["semigroup"]["t"]:
            width = 8.0 * s * math.sqrt(t)
            g = convolve_densities(t / 2, t / 2, p, width)
            worst = max(worst, float(np.max(np.abs(g.p_values - transition_density(g.x_values, t, p)))))
            g0 = convolve_densities(t / 2, t / 2, p, width, kernel="so2")
            weakest_k0 = min(weakest_k0, float(np.max(np.abs(g0.p_values - so2_density(g0.x_values, t, p)))))
    ok = worst <= 1e-6 and weakest_k0 >= 1e-3
    return CheckResult("semigroup", ok, f"max tower error {worst:.3g} (tol 1e-6); min K0 violation {weakest_k0:.3g} (need >= 1e-3)")


def check_martingale() -> CheckResult:
    p = ModelParams(1.0, 1.0)
    worst = 0.0
    for frac in (0.3, 0.6, 0.9):
        z = frac * max_zeta(p)
        spec = MartingaleSpec(1.0, z, p)
        val = expectation(lambda x: martingale_value(x, 1.0, spec), 1.0, p, envelope_rate=z)
        worst = max(worst, abs(val - 1.0))
    return CheckResult("martingale", worst <= 1e-6, f"max relative error {worst:.3g} (tol 1e-6)")


def check_gaussian_limit() -> CheckResult:
    ref = REFERENCE_LATTICE["pricing"]
    s = ref["sigma"]
    contract = OptionContract(ref["strike"], ref["tau"], 0.0, ref["rate"])
    target = bsm_price(ref["spot"], contract, ref["zeta"] * s)
    errs = []
    for m in (10.0, 100.0, 1000.0, 400.0):
        v = price_call(ref["spot"], contract, ref["zeta"], ModelParams(s, m * s * s)).price
        errs.append(abs(v / target - 1.0))
    ok = errs[0] > errs[1] > errs[2] and errs[3] <= 1e-3
    return CheckResult("gaussian_limit", ok, "relative BSM errors at c/sigma^2 = 10, 100, 1000: "
                       + ", ".join(f"{e:.3g}" for e in errs[:3]) + f"; at 400: {errs[3]:.3g} (tol 1e-3)")


SUITES = (check_normalization, check_semigroup, check_martingale, check_gaussian_limit)


def run_all() -> list[CheckResult]:
    return [suite() for suite in SUITES]
