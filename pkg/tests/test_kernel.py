import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from normrmt.errors import DegenerateFieldError, DomainError
from normrmt.kernel import (
    KernelContext,
    kernel_closed_form,
    kernel_gue_limit,
    kernel_matrix,
    kernel_oracle_eps,
    kernel_oracle_semi,
)
from normrmt.matrixcore import ExternalField


def ctx(h, T=0.8):
    return KernelContext(len(h), T, ExternalField(tuple(h)))


def test_single_level_is_gaussian():
    c = ctx([0.3], 0.5)
    x = 1.1
    expected = math.exp(-(x - 0.3) ** 2 / 1.0) / math.sqrt(math.pi)
    assert kernel_closed_form(c, x, 2.0) == pytest.approx(expected, rel=1e-14)


fields = st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=4).filter(
    lambda h: len(h) == 1 or min(np.diff(np.sort(h))) > 0.2)


@given(fields, st.floats(0.2, 2.0), st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
def test_closed_form_matches_semi_oracle(h, T, xp, xq):
    c = ctx(h, T)
    assert kernel_closed_form(c, xp, xq) == pytest.approx(kernel_oracle_semi(c, xp, xq), rel=1e-9, abs=1e-12)


def test_closed_form_matches_eps_oracle():
    c = ctx([-0.8, 0.1, 1.0], 0.7)
    for xp, xq in [(0.0, 0.5), (1.2, -0.4)]:
        assert kernel_oracle_eps(c, xp, xq) == pytest.approx(kernel_closed_form(c, xp, xq), rel=1e-4, abs=1e-6)


@pytest.mark.parametrize("h", [[0.0, 1.0], [-1.0, 0.2, 0.9], [-1.5, -0.3, 0.4, 2.0]])
def test_trace_equals_N(h):
    c = ctx(h, 0.6)
    val = integrate.quad(lambda x: kernel_closed_form(c, x, x), -np.inf, np.inf)[0]
    assert val == pytest.approx(len(h), rel=1e-10)


def test_reproducing_property():
    c = ctx([-0.7, 0.5, 1.3], 0.9)
    x, y = 0.2, -0.6
    val = integrate.quad(lambda z: kernel_closed_form(c, x, z) * kernel_closed_form(c, z, y), -np.inf, np.inf)[0]
    assert val == pytest.approx(kernel_closed_form(c, x, y), rel=1e-9)


def test_approaches_gue_kernel_for_small_field():
    h = [-0.003, 0.0, 0.004]
    c = ctx(h, 1.0)
    for xp, xq in [(0.3, 0.3), (-1.0, 0.8)]:
        # the field shifts the kernel by O(|h|)
        assert kernel_closed_form(c, xp, xq) == pytest.approx(kernel_gue_limit(3, 1.0, xp, xq), abs=1e-2)


def test_kernel_matrix_matches_pointwise():
    c = ctx([-0.5, 0.7], 1.2)
    pts = np.array([-1.0, 0.0, 0.8])
    mat = kernel_matrix(c.field, c.variance, pts)
    expected = kernel_closed_form(c, pts[:, None], pts[None, :])
    np.testing.assert_allclose(mat, expected, rtol=1e-13)


def test_degenerate_field_rejected():
    with pytest.raises(DegenerateFieldError):
        kernel_closed_form(ctx([0.5, 0.5]), 0.0, 0.0)


def test_invalid_context():
    with pytest.raises(DomainError):
        KernelContext(2, -1.0, ExternalField((0.0, 1.0)))
    with pytest.raises(DomainError):
        KernelContext(3, 1.0, ExternalField((0.0, 1.0)))


def test_gue_limit_density_integrates_to_N():
    val = integrate.quad(lambda x: kernel_gue_limit(4, 0.5, x, x), -np.inf, np.inf)[0]
    assert val == pytest.approx(4.0, rel=1e-10)
