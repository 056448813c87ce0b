import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from relbm.density import (
    DensityGrid,
    cdf_table,
    characteristic_exponent,
    convolve_densities,
    density_moment,
    expectation,
    fourier_density,
    gaussian_density,
    levy_measure_density,
    levy_second_moment,
    levy_tail_mass,
    log_transition_density,
    so2_density,
    tabulate_density,
    tail_approximation,
    transition_density,
)
from relbm.errors import ConvergenceError, DomainError, TailMassError
from relbm.params import ModelParams
from relbm.quadrature import integrate

mpmath.mp.dps = 30
UNIT = ModelParams(1.0, 1.0)


def mp_density(x, t, sigma, c):
    x, t, sigma, c = map(mpmath.mpf, (x, t, sigma, c))
    r = mpmath.sqrt(x * x + c * c * t * t)
    val = c / (mpmath.pi * sigma**2) * c * t / r * mpmath.besselk(1, c / sigma**2 * r) * mpmath.exp(c * c * t / sigma**2)
    return float(val)


def test_origin_value_matches_closed_form_oracle():
    expected = float(mpmath.e * mpmath.besselk(1, 1) / mpmath.pi)
    assert transition_density(0.0, 1.0, UNIT) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.5208038, abs=1e-7)


@pytest.mark.parametrize("sigma,c,t", [(1.0, 1.0, 1.0), (0.2, 0.04, 2.0), (3.0, 10.0, 0.1), (0.2, 16.0, 1.0)])
def test_matches_mpmath(sigma, c, t):
    p = ModelParams(sigma, c)
    for x in (-2.0, 0.0, 0.05, 1.0, 7.5):
        assert transition_density(x, t, p) == pytest.approx(mp_density(x, t, sigma, c), rel=1e-12)


def test_matches_scipy_nig():
    # NIG(alpha, beta=0, delta, mu=0) with alpha = c/sigma^2, delta = ct
    p = ModelParams(0.7, 1.3)
    t = 0.8
    a, delta = p.alpha, p.c * t
    xs = np.linspace(-4, 4, 17)
    ref = stats.norminvgauss(a * delta, 0.0, scale=delta).pdf(xs)
    assert np.allclose(transition_density(xs, t, p), ref, rtol=1e-10, atol=0)


def test_symmetry_and_positivity():
    pos = np.linspace(0.0, 50, 501)
    xs = np.concatenate([-pos[::-1], pos])
    for p in (UNIT, ModelParams(0.2, 0.04), ModelParams(3.0, 10.0)):
        v = transition_density(xs, 1.0, p)
        assert np.array_equal(v, v[::-1])
        assert np.all(v > 0)


def test_log_density_deep_non_relativistic():
    # c^2 t / sigma^2 = 1e8: naive evaluation overflows
    p = ModelParams(0.1, 100.0)
    lp = log_transition_density(np.array([0.0, 0.1, 0.5]), 1.0, p)
    ref = np.log(gaussian_density(np.array([0.0, 0.1, 0.5]), 1.0, 0.1))
    assert np.all(np.isfinite(lp))
    assert np.allclose(lp, ref, atol=1e-3)


def test_gaussian_regime_point():
    assert transition_density(3.0, 1.0, ModelParams(1.0, 100.0)) == pytest.approx(gaussian_density(3.0, 1.0, 1.0), rel=1e-3)


def test_gaussian_limit_error_decreases():
    xs = np.linspace(-3, 3, 121)
    errs = [np.max(np.abs(transition_density(xs, 1.0, ModelParams(1.0, c)) - gaussian_density(xs, 1.0, 1.0)))
            for c in (10.0, 100.0, 1000.0)]
    assert errs[0] > errs[1] > errs[2]


def test_t_nonpositive_rejected():
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(DomainError):
            transition_density(0.0, bad, UNIT)


def test_gaussian_density_properties():
    assert gaussian_density(0.0, 1.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    s, t = 0.3, 2.0
    peak = gaussian_density(0.0, t, s)
    assert gaussian_density(s * math.sqrt(t), t, s) == pytest.approx(peak * math.exp(-0.5), rel=1e-14)
    res = integrate(lambda x: gaussian_density(x, 1.0, 1.0), np.linspace(-40, 40, 81), abs_tol=1e-13)
    assert res.value == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        gaussian_density(0.0, 1.0, 0.0)


def test_so2_density():
    assert so2_density(0.0, 1.0, UNIT) == pytest.approx(float(mpmath.besselk(0, 1) / mpmath.pi), rel=1e-14)
    res = integrate(lambda x: so2_density(x, 1.0, UNIT), np.linspace(-60, 60, 241), abs_tol=1e-13)
    assert res.value == pytest.approx(math.exp(-1.0), abs=1e-8)


def test_characteristic_exponent():
    assert characteristic_exponent(0.0, UNIT) == 0.0
    assert characteristic_exponent(1.0, UNIT) == pytest.approx(math.sqrt(2) - 1, rel=1e-15)
    assert characteristic_exponent(1.0, ModelParams(1.0, 1000.0)) == pytest.approx(0.5, rel=1e-6)
    ks = np.linspace(-5, 5, 11)
    assert np.array_equal(characteristic_exponent(ks, UNIT), characteristic_exponent(-ks, UNIT))


def test_characteristic_exponent_is_fourier_transform():
    p = ModelParams(0.8, 0.5)
    t = 1.3
    for k in (0.5, 1.0, 3.0):
        val = expectation(lambda x: np.cos(k * x), t, p)
        assert val == pytest.approx(math.exp(-t * characteristic_exponent(k, p)), abs=1e-10)


def test_fourier_density_points():
    assert fourier_density(0.0, 1.0, UNIT) == pytest.approx(transition_density(0.0, 1.0, UNIT), abs=1e-10)
    assert fourier_density(0.0, 1.0, ModelParams(1.0, 1000.0)) == pytest.approx(0.3989, abs=1e-3)
    xs = np.array([-3.0, 0.7, 12.0])
    assert np.allclose(fourier_density(xs, 0.5, UNIT), transition_density(xs, 0.5, UNIT), atol=1e-10, rtol=0)


def test_tail_approximation():
    assert tail_approximation(0.0, 1.3, UNIT) == pytest.approx(gaussian_density(0.0, 1.3, 1.0), rel=1e-15)
    expected = (2 * math.pi) ** -0.5 * 2 ** -0.75 * math.exp(-(math.sqrt(2) - 1))
    assert tail_approximation(1.0, 1.0, UNIT) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.1567, abs=1e-4)


def test_levy_measure_value_and_moment():
    assert levy_measure_density(1.0, UNIT) == pytest.approx(float(mpmath.besselk(1, 1) / mpmath.pi), rel=1e-14)
    assert levy_second_moment(ModelParams(0.5, 2.0)) == pytest.approx(0.25, rel=1e-8)
    with pytest.raises(DomainError):
        levy_measure_density(0.0, UNIT)


def test_levy_tail_mass_matches_mpmath():
    ref = 2 * mpmath.quad(lambda x: mpmath.besselk(1, x) / (mpmath.pi * x), [0.5, 5, mpmath.inf])
    assert levy_tail_mass(0.5, UNIT) == pytest.approx(float(ref), rel=1e-9)


def test_moments():
    p = ModelParams(0.2, 0.08)
    assert density_moment(0, 2.0, p) == pytest.approx(1.0, abs=1e-12)
    assert density_moment(1, 2.0, p) == 0.0
    assert density_moment(2, 2.0, p) == pytest.approx(0.08, rel=1e-10)
    # NIG fourth cumulant: 3 sigma^6 t / c^2, so m4 = 3 (sigma^2 t)^2 + 3 sigma^6 t / c^2
    m4 = 3 * (0.04 * 2) ** 2 + 3 * 0.2**6 * 2 / 0.08**2
    assert density_moment(4, 2.0, p) == pytest.approx(m4, rel=1e-8)
    with pytest.raises(DomainError):
        density_moment(-1, 1.0, p)


def test_delta_limit():
    vals = [expectation(np.cos, t, UNIT) for t in (1.0, 0.1, 0.01)]
    errs = [abs(v - 1.0) for v in vals]
    assert errs[0] > errs[1] > errs[2]


def test_expectation_envelope_guard():
    with pytest.raises(DomainError):
        expectation(np.exp, 1.0, UNIT, envelope_rate=1.0)


@pytest.mark.parametrize("t1,t2", [(0.5, 0.5), (0.25, 0.75), (0.9, 0.1)])
def test_semigroup_splits(t1, t2):
    g = convolve_densities(t1, t2, UNIT, 8.0, refinement_tol=1e-7)
    assert np.max(np.abs(g.p_values - transition_density(g.x_values, t1 + t2, UNIT))) < 1e-6
    assert g.meta["refinement_delta"] < 1e-7


def test_so2_breaks_semigroup():
    g = convolve_densities(0.5, 0.5, UNIT, 8.0, kernel="so2")
    assert np.max(np.abs(g.p_values - so2_density(g.x_values, 1.0, UNIT))) > 1e-3


def test_gaussian_semigroup():
    g = convolve_densities(0.5, 0.5, UNIT, 8.0, kernel="gaussian")
    assert np.max(np.abs(g.p_values - gaussian_density(g.x_values, 1.0, 1.0))) < 1e-8


def test_convolution_errors():
    with pytest.raises(DomainError):
        convolve_densities(0.5, 0.5, UNIT, 8.0, kernel="cauchy")
    with pytest.raises(TailMassError):
        convolve_densities(0.5, 0.5, UNIT, 8.0, half_width=9.0)
    with pytest.raises(ConvergenceError):
        convolve_densities(0.5, 0.5, UNIT, 4.0, spacing=0.5, refinement_tol=1e-12)


def test_density_grid_validation():
    with pytest.raises(DomainError):
        DensityGrid(np.array([0.0, 0.0]), np.array([1.0, 1.0]), 1.0, UNIT)
    with pytest.raises(DomainError):
        DensityGrid(np.array([0.0, 1.0]), np.array([1.0, -1.0]), 1.0, UNIT)
    g = tabulate_density(np.linspace(-1, 1, 5), 1.0, UNIT)
    assert g.p_values.shape == (5,) and g.t == 1.0


def test_cdf_table_against_scipy():
    p = ModelParams(0.2, 0.08)
    x, cdf = cdf_table(1.0, p, cells=4000)
    assert np.all(np.diff(cdf) >= 0)
    # scipy's NIG cdf loses the far tails, so compare on the bulk only
    bulk = np.abs(x) < 2.0
    ref = stats.norminvgauss(p.alpha * p.c, 0.0, scale=p.c).cdf(x[bulk][::50])
    assert np.max(np.abs(cdf[bulk][::50] - ref)) < 1e-9
    assert cdf[0] < 1e-13 and cdf[-1] > 1 - 1e-13
