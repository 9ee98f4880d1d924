import math

import numpy as np
import pytest

from normrmt.densities import (
    BoundTrace,
    FixedTrace,
    GaussMonomial,
    GaussQuartic,
    Gaussian,
    GridDensity,
    NonExtensive,
    eval_P,
)
from normrmt.errors import DomainError, NonNormalizableError, UnsupportedError
from normrmt.matrixcore import degrees_of_freedom
from normrmt.supertransform import (
    SuperDensity,
    eigen_superspace_density,
    invert_transform,
    normalization_constant_c,
    superspace_density_analytic,
    superspace_density_numeric,
)

ANALYTIC = [
    Gaussian(0.8),
    BoundTrace(3.0),
    FixedTrace(2.5),
    GaussMonomial(1.2, 2),
    GaussQuartic(0.5, 0.3),
    NonExtensive.from_lambda(2.0, 4),
]


@pytest.mark.parametrize("beta, k, c", [(2, 1, 1.0), (2, 2, 4.0), (2, 3, 64.0), (1, 1, 2 ** 0.5), (4, 2, 32.0)])
def test_normalization_constant(beta, k, c):
    assert normalization_constant_c(beta, k) == pytest.approx(c, rel=1e-15)


@pytest.mark.parametrize("family", ANALYTIC, ids=lambda f: f.name)
@pytest.mark.parametrize("beta, N", [(2, 2), (1, 3), (4, 2)])
def test_numeric_matches_closed_form(family, beta, N):
    if isinstance(family, NonExtensive):
        family = NonExtensive.from_lambda(2.0, degrees_of_freedom(beta, N))
    w = np.array([0.0, 0.4, 1.1, 2.2])
    num = superspace_density_numeric(family, beta, N, 1, w)
    ana = superspace_density_analytic(family, beta, N, 1, w)
    np.testing.assert_allclose(num, ana, rtol=1e-8, atol=1e-14)


@pytest.mark.parametrize("family", ANALYTIC, ids=lambda f: f.name)
def test_value_at_origin_is_c(family):
    assert superspace_density_analytic(family, 2, 2, 2, 0.0) == pytest.approx(4.0, rel=1e-12)


def test_quartic_against_frozen_reference():
    # high-precision quadrature ratio of the transform integrals (mpmath, 30 digits)
    got = superspace_density_analytic(GaussQuartic(0.5, 0.3), 2, 2, 1, np.array([0.3, 1.7]))
    np.testing.assert_allclose(got, [0.66801459775750672423, 0.059969593493522004024], rtol=1e-12)


def test_gaussian_closed_form_and_support():
    w = np.linspace(0, 5, 7)
    np.testing.assert_allclose(superspace_density_analytic(Gaussian(1.0), 2, 3, 1, w), np.exp(-w / 2), rtol=1e-15)
    assert superspace_density_analytic(BoundTrace(1.0), 2, 2, 1, 1.5) == 0.0
    assert superspace_density_analytic(FixedTrace(1.0), 2, 2, 1, 1.5) == 0.0


def test_grid_density_numeric_only():
    u = np.linspace(0, 10, 201)
    grid = GridDensity(u, np.exp(-u))
    with pytest.raises(UnsupportedError):
        superspace_density_analytic(grid, 2, 2, 1, 0.5)
    assert superspace_density_numeric(grid, 2, 2, 1, 0.0) == pytest.approx(1.0, rel=1e-6)


def test_numeric_rejects_negative_w():
    with pytest.raises(DomainError):
        superspace_density_numeric(Gaussian(), 2, 2, 1, -0.1)


def test_nonextensive_dof_override_diverges():
    fam = NonExtensive.from_lambda(0.5, 4)
    with pytest.raises(NonNormalizableError):
        superspace_density_numeric(fam, 2, 2, 1, 0.5, dof=6)


@pytest.mark.parametrize("family", [Gaussian(0.8), GaussMonomial(1.2, 2), NonExtensive.from_lambda(3.0, 16)],
                         ids=lambda f: f.name)
@pytest.mark.parametrize("beta, N", [(2, 2), (1, 3), (2, 4)])
def test_inversion_recovers_density(family, beta, N):
    if isinstance(family, NonExtensive):
        family = NonExtensive.from_lambda(3.0, degrees_of_freedom(beta, N))
    Q = SuperDensity(family, beta, N)
    for u in (0.5, 1.0, 2.0):
        got, err = invert_transform(Q, beta, N, u, return_error=True)
        exact = eval_P(family, beta, N, u)
        assert got == pytest.approx(exact, rel=1e-7)
        assert err < 1e-6 * exact


def test_finite_difference_route_low_order():
    Q = SuperDensity(Gaussian(1.0), 2, 2)
    got = invert_transform(Q, 2, 2, 1.0, method="finite-difference")
    assert got == pytest.approx(eval_P(Gaussian(1.0), 2, 2, 1.0), rel=1e-8)


def test_inversion_from_numeric_transform():
    fam = BoundTrace(4.0)
    Q = SuperDensity(fam, 2, 2, mode="numeric")
    got = invert_transform(Q, 2, 2, 1.0, h0=0.2)
    assert got == pytest.approx(eval_P(fam, 2, 2, 1.0), rel=1e-6)


def test_odd_mu_unsupported():
    # beta = 1, N = 2 gives mu = 3
    with pytest.raises(UnsupportedError):
        invert_transform(SuperDensity(Gaussian(), 1, 2), 1, 2, 1.0)


def test_eigen_superspace_density():
    with pytest.raises(UnsupportedError):
        eigen_superspace_density(Gaussian(), 3, 1, 0.5, beta=1)
    with pytest.raises(DomainError):
        eigen_superspace_density(Gaussian(), 1, 1, 0.5)
    # Gaussian: the integral is elementary
    N, k, w = 3, 1, 0.7
    d = N * N - 2 * k
    got = eigen_superspace_density(Gaussian(1.0), N, k, w)
    a = 0.5
    # P(0) (pi/a)^(d/2) 2^(N/2) exp(-a w)
    expected = eval_P(Gaussian(1.0), 2, N, 0.0) * 2 ** (N / 2) * (math.pi / a) ** (d / 2) * math.exp(-a * w)
    assert got == pytest.approx(expected, rel=1e-9)


def test_superdensity_modes_agree():
    fam = GaussMonomial(0.9, 1)
    w = np.array([0.2, 0.9])
    np.testing.assert_allclose(SuperDensity(fam, 4, 2, mode="numeric")(w), SuperDensity(fam, 4, 2)(w), rtol=1e-8)
    with pytest.raises(DomainError):
        SuperDensity(fam, 2, 2, mode="other")


@pytest.mark.parametrize("family, shape", [
    (Gaussian(0.8), lambda w: np.exp(-2 * w / (4 * 0.64))),
    (BoundTrace(3.0), lambda w: np.where(w <= 3.0, 1.0, 0.0)),
    (NonExtensive(1.2, 0.7), lambda w: (1 + 0.2 * 0.7 * w) ** (1 / (1 - 1.2))),
], ids=lambda f: getattr(f, "name", ""))
def test_formal_zero_mu_gives_the_ordinary_shape(family, shape):
    w = np.array([0.0, 0.5, 2.0, 3.5])
    got = superspace_density_analytic(family, 2, 2, 2, w, formal_mu=0)
    np.testing.assert_allclose(got, 4.0 * shape(w), rtol=1e-13)
