import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from normrmt.densities import BoundTrace, GaussMonomial, GaussQuartic, Gaussian, NonExtensive
from normrmt.errors import BoundaryTermError, DomainError, UnsupportedError
from normrmt.superalgebra import (
    GrassmannElement,
    berezin_integrate,
    compose_scalar_function,
    ewps_check,
    grassmann_mul,
)
from normrmt.supertransform import SuperDensity

G = GrassmannElement


def test_generators_anticommute_and_square_to_zero():
    a, b = G.generator(4, 0), G.generator(4, 1)
    assert (a * b + b * a).is_zero()
    assert (a * a).is_zero()
    assert (a * b).coefficients == {(0, 1): 1.0}
    assert (b * a).coefficients == {(0, 1): -1.0}


coeff = st.floats(-3, 3, allow_nan=False)


def element(n):
    monos = [(), (0,), (1,), (2,), (3,), (0, 1), (0, 2), (1, 3), (2, 3), (0, 1, 2), (0, 1, 2, 3)]
    return st.builds(lambda cs: G(n, dict(zip(monos, cs))), st.lists(coeff, min_size=len(monos), max_size=len(monos)))


@given(element(4), element(4), element(4))
def test_product_is_associative_and_distributive(a, b, c):
    assert ((a * b) * c).allclose(a * (b * c), atol=1e-9)
    assert (a * (b + c)).allclose(a * b + a * c, atol=1e-9)


@given(element(4), element(4))
def test_even_elements_commute(a, b):
    ea = G(4, {m: v for m, v in a.coefficients.items() if len(m) % 2 == 0})
    assert ea.is_even()
    assert (ea * b).allclose(b * ea, atol=1e-9)


def test_berezin_convention():
    chi, chis = G.chi(2, 0), G.chi_star(2, 0)
    assert berezin_integrate(chi * chis, (0, 1)).scalar_part == 1.0
    assert berezin_integrate(chis * chi, (0, 1)).scalar_part == -1.0
    assert berezin_integrate(G.scalar(2, 5.0) + chi, (0, 1)).is_zero()


def test_berezin_over_two_pairs():
    c0, s0, c1, s1 = (G.chi(4, 0), G.chi_star(4, 0), G.chi(4, 1), G.chi_star(4, 1))
    x = c0 * s0 * c1 * s1
    inner = berezin_integrate(x, (2, 3))
    assert inner.allclose(c0 * s0)
    assert berezin_integrate(inner, (0, 1)).scalar_part == 1.0


def test_gaussian_grassmann_integral():
    # int dchi* dchi exp(-a chi* chi) = a
    a = 2.5
    chi, chis = G.chi(2, 0), G.chi_star(2, 0)
    body = chis * chi * (-a)
    e = compose_scalar_function(math.exp, body, derivatives=lambda j, s: math.exp(s))
    assert berezin_integrate(e, (0, 1)).scalar_part == pytest.approx(a)


def test_compose_with_numeric_derivatives():
    chi, chis = G.chi(4, 0), G.chi_star(4, 0)
    c1, s1 = G.chi(4, 1), G.chi_star(4, 1)
    body = chis * chi + c1 * s1 + 0.7
    got = compose_scalar_function(math.sin, body)
    exact = compose_scalar_function(math.sin, body, derivatives=lambda j, s: math.sin(s + j * math.pi / 2))
    assert got.allclose(exact, atol=1e-8)


def test_compose_caps_derivative_order():
    gens = [G.generator(20, i) for i in range(20)]
    body = G.scalar(20, 0.1)
    for i in range(0, 20, 2):
        body = body + gens[i] * gens[i + 1]
    with pytest.raises(UnsupportedError):
        compose_scalar_function(math.exp, body, derivatives=lambda j, s: math.exp(s))


def test_invalid_elements():
    with pytest.raises(DomainError):
        G(3)
    with pytest.raises(DomainError):
        G(2, {(1, 0): 1.0})
    with pytest.raises(DomainError):
        G(2, {(2,): 1.0})
    with pytest.raises(DomainError):
        grassmann_mul(G.scalar(2, 1.0), G.scalar(4, 1.0))
    with pytest.raises(DomainError):
        berezin_integrate(G.scalar(2, 1.0), (0, 0))


@pytest.mark.parametrize("family, kinks", [
    (Gaussian(0.8), ()),
    (NonExtensive.from_lambda(2.0, 4), ()),
    (BoundTrace(2.0), (2.0,)),
    (GaussMonomial(1.5, 2), ()),
    (GaussQuartic(0.5, 0.3), ()),
], ids=lambda f: getattr(f, "name", ""))
def test_superspace_normalization(family, kinks):
    Q = SuperDensity(family, 2, 2)
    res = ewps_check(Q, kinks=kinks)
    assert res.expected == pytest.approx(1.0)
    assert res.residual < 1e-10


def test_gaussian_with_exact_derivative():
    Q = lambda w: math.exp(-w / 2)
    res = ewps_check(Q, dQ=lambda w: -0.5 * math.exp(-w / 2))
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_non_decaying_density_rejected():
    with pytest.raises(BoundaryTermError):
        ewps_check(lambda w: 1.0 / (1.0 + math.log1p(w)))
    with pytest.raises(BoundaryTermError):
        ewps_check(lambda w: math.exp(-w), decays=False)
