import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from normrmt.densities import (
    BoundTrace,
    EnsembleSpec,
    FixedTrace,
    GaussMonomial,
    GaussQuartic,
    Gaussian,
    GridDensity,
    NonExtensive,
    RadialSampler,
    angular_integral_constant,
    eval_P,
    fourier_transform_P,
    moment,
    nonextensive_lambda,
    normalize,
    sample_trace_norm,
)
from normrmt.errors import DomainError, NonNormalizableError, PointMassError
from normrmt.matrixcore import degrees_of_freedom

FAMILIES = [
    Gaussian(0.7),
    BoundTrace(2.0),
    GaussMonomial(1.5, 2),
    GaussQuartic(0.5, 0.3),
    NonExtensive(1.05, 2.0),
    GridDensity(np.linspace(0, 6, 31), np.exp(-np.linspace(0, 6, 31))),
]


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.name)
@pytest.mark.parametrize("beta, N", [(1, 2), (2, 3), (4, 2)])
def test_closed_and_quadrature_normalization_agree(family, beta, N):
    closed = normalize(family, beta, N, "closed")
    quad = normalize(family, beta, N, "quadrature")
    assert closed == pytest.approx(quad, rel=1e-9)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.name)
def test_zeroth_moment_is_one(family):
    assert moment(family, 2, 2, 0).value == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("beta, N, nu", [(1, 3, 1), (2, 2, 2), (4, 2, 3)])
def test_gaussian_moments(beta, N, nu):
    v = 0.8
    p = degrees_of_freedom(beta, N) / 2
    exact = math.gamma(p + nu) / math.gamma(p) * (4 * v**2 / beta) ** nu
    assert moment(Gaussian(v), beta, N, nu).value == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("nu", [1, 2, 3])
def test_nonextensive_moments_are_beta_prime(nu):
    # kappa u / Lambda is beta-prime(p, Lambda) under the radial law
    beta, N, kappa = 2, 2, 1.5
    p = degrees_of_freedom(beta, N) / 2
    fam = NonExtensive.from_lambda(6.0, 2 * p, kappa)
    lam = nonextensive_lambda(fam, p)
    assert lam == pytest.approx(6.0, rel=1e-12)
    exact = (lam / kappa) ** nu * math.gamma(p + nu) * math.gamma(lam - nu) / (math.gamma(p) * math.gamma(lam))
    assert moment(fam, beta, N, nu).value == pytest.approx(exact, rel=1e-9)


@given(st.floats(0.2, 5.0), st.integers(1, 4))
def test_bound_trace_moments(a1, nu):
    p = degrees_of_freedom(2, 2) / 2
    assert moment(BoundTrace(a1), 2, 2, nu).value == pytest.approx(p / (p + nu) * a1**nu, rel=1e-9)


def test_fixed_trace():
    assert moment(FixedTrace(1.7), 1, 3, 3).value == pytest.approx(1.7**3, rel=1e-15)
    with pytest.raises(PointMassError):
        eval_P(FixedTrace(1.0), 2, 2, 0.5)


def test_nonextensive_admissibility():
    mu = degrees_of_freedom(2, 3)
    # 1/(q - 1) must exceed mu / 2
    with pytest.raises(NonNormalizableError):
        normalize(NonExtensive(1.0 + 2.0 / mu), 2, 3)
    normalize(NonExtensive(1.0 + 1.9 / mu), 2, 3)


@pytest.mark.parametrize("bad", [
    lambda: Gaussian(-1.0),
    lambda: BoundTrace(0.0),
    lambda: GaussMonomial(1.0, 1.5),
    lambda: NonExtensive(0.9),
    lambda: GridDensity([0.0, 1.0], [1.0]),
    lambda: GridDensity([1.0, 0.5], [1.0, 1.0]),
    lambda: EnsembleSpec(3, 2, Gaussian()),
    lambda: EnsembleSpec(2, 2, Gaussian(), field=(1.0, 2.0, 3.0)),
])
def test_invalid_parameters(bad):
    with pytest.raises(DomainError):
        bad()


def test_gaussian_density_values():
    beta, N, v = 2, 2, 1.0
    u = np.array([0.0, 0.5, 3.0])
    vals = eval_P(Gaussian(v), beta, N, u)
    np.testing.assert_allclose(vals[1:] / vals[0], np.exp(-beta * u[1:] / (4 * v**2)), rtol=1e-14)
    assert vals[0] == pytest.approx(normalize(Gaussian(v), beta, N), rel=1e-14)


def test_angular_constant_small_cases():
    # N = 2: the integrand on the unit circle is |cos t - sin t|^beta
    assert angular_integral_constant(2, 2) == pytest.approx(2 * math.pi, rel=1e-14)
    assert angular_integral_constant(1, 2) == pytest.approx(4 * math.sqrt(2), rel=1e-14)
    assert angular_integral_constant(4, 2) == pytest.approx(3 * math.pi, rel=1e-14)
    # N = 1: the sphere is two points
    assert angular_integral_constant(2, 1) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("y", [-2.0, 0.0, 0.7, 3.0])
def test_gaussian_fourier_transform(y):
    beta, N, v = 2, 2, 0.9
    a0 = normalize(Gaussian(v), beta, N)
    b = beta / (4 * v**2)
    exact = a0 / math.sqrt(2 * math.pi) / complex(b, -y)
    got = fourier_transform_P(Gaussian(v), beta, N, y)
    assert abs(got - exact) < 1e-9 * abs(exact)


def test_bound_trace_fourier_transform():
    a1, y = 1.5, 2.0
    a0 = normalize(BoundTrace(a1), 2, 2)
    exact = a0 / math.sqrt(2 * math.pi) * (np.exp(1j * y * a1) - 1) / (1j * y)
    assert abs(fourier_transform_P(BoundTrace(a1), 2, 2, y) - exact) < 1e-12


def test_fixed_trace_fourier_transform_exact():
    got = fourier_transform_P(FixedTrace(2.0), 2, 2, 1.0)
    assert abs(got) == pytest.approx(normalize(FixedTrace(2.0), 2, 2) / math.sqrt(2 * math.pi))


@pytest.mark.parametrize("beta, N", [(1, 3), (2, 2), (4, 2)])
def test_sampler_matches_gamma_law(beta, N):
    v = 1.2
    p = degrees_of_freedom(beta, N) / 2
    s = RadialSampler(Gaussian(v), beta, N)
    assert s.max_interp_error <= 1e-8
    u = s.sample(np.random.default_rng(11), 20000)
    res = stats.kstest(u, stats.gamma(p, scale=4 * v**2 / beta).cdf)
    assert res.pvalue > 1e-3
    # quantiles against the exact inverse CDF
    probs = np.array([0.01, 0.3, 0.5, 0.9, 0.999])
    np.testing.assert_allclose(s.quantile(probs), stats.gamma(p, scale=4 * v**2 / beta).ppf(probs), rtol=1e-6)


def test_sampler_bound_trace_support():
    u = sample_trace_norm(BoundTrace(0.5), 2, 3, np.random.default_rng(12), 5000)
    assert np.all((u > 0) & (u <= 0.5 + 1e-12))
    p = degrees_of_freedom(2, 3) / 2
    # u / a1 is Beta(p, 1)
    assert stats.kstest(u / 0.5, stats.beta(p, 1).cdf).pvalue > 1e-3
