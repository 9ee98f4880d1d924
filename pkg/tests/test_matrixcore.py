import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from normrmt.densities import BoundTrace, FixedTrace
from normrmt.errors import DomainError
from normrmt.matrixcore import (
    ExternalField,
    RandomMatrix,
    SymmetryClass,
    batch_eigenvalues,
    degrees_of_freedom,
    eigenvalues,
    householder_tridiagonalize,
    jacobi_eigenvalues,
    sample_gaussian,
    sample_norm_dependent,
    standard_normal_matrices,
    trace_norm_sq,
)


@pytest.mark.parametrize("beta, N, mu", [(1, 3, 6), (2, 3, 9), (4, 3, 15), (1, 1, 1), (2, 4, 16), (4, 2, 6)])
def test_degrees_of_freedom(beta, N, mu):
    assert degrees_of_freedom(beta, N) == mu


def test_symmetry_class_rejects_other_beta():
    with pytest.raises(DomainError):
        SymmetryClass.of(3)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_sampled_matrices_are_self_adjoint(beta):
    H = sample_gaussian(beta, 3, 1.0, np.random.default_rng(0), size=5)
    np.testing.assert_allclose(H.data, np.conj(np.swapaxes(H.data, -1, -2)), atol=0)
    if beta == 1:
        assert not np.iscomplexobj(H.data)


def test_quaternion_structure():
    # self-dual: J H^T J^T = H with J the symplectic unit
    H = sample_gaussian(4, 2, 1.0, np.random.default_rng(1)).data
    n = 2
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    np.testing.assert_allclose(J @ H.T @ J.T, H, atol=1e-14)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_gaussian_trace_norm_mean(beta):
    # E[Tr H^2] = 2 mu v^2 / beta for exp(-beta Tr H^2 / (4 v^2))
    N, v = 3, 0.8
    H = sample_gaussian(beta, N, v, np.random.default_rng(2), size=40000)
    u = trace_norm_sq(H)
    mu = degrees_of_freedom(beta, N)
    expected = 2 * mu * v**2 / beta
    assert abs(u.mean() - expected) < 4 * u.std() / np.sqrt(u.size)


def test_standard_normal_normalization():
    H = standard_normal_matrices(2, 4, np.random.default_rng(3), size=20000)
    # exp(-Tr H^2 / 2): Tr H^2 is chi-square with mu degrees of freedom
    assert trace_norm_sq(H).mean() == pytest.approx(16.0, rel=0.01)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_fixed_trace_sampling_is_exact(beta):
    H = sample_norm_dependent(FixedTrace(2.5), beta, 3, np.random.default_rng(4), size=100)
    np.testing.assert_allclose(trace_norm_sq(H), 2.5, rtol=1e-14)


def test_bound_trace_sampling_inside_ball():
    H = sample_norm_dependent(BoundTrace(1.0), 2, 3, np.random.default_rng(5), size=2000)
    assert np.all(trace_norm_sq(H) <= 1.0 + 1e-12)


def test_random_matrix_shape_check():
    with pytest.raises(DomainError):
        RandomMatrix(4, 2, np.zeros((2, 2)))


def test_external_field():
    f = ExternalField((0.5, -1.0, 2.0))
    assert f.N == 3
    assert f.min_gap == pytest.approx(1.5)
    assert f.is_distinct()
    assert not ExternalField.zeros(3).is_distinct()
    np.testing.assert_allclose(np.diag(f.matrix(1)), [0.5, -1.0, 2.0])
    assert f.matrix(4).shape == (6, 6)
    with pytest.raises(DomainError):
        ExternalField((float("nan"),))


def test_shift_by_field():
    H = sample_gaussian(2, 3, 1.0, np.random.default_rng(6))
    f = ExternalField((1.0, 2.0, 3.0))
    np.testing.assert_allclose(H.shifted(f, 0.0).data, np.diag([1.0, 2.0, 3.0]))


@given(st.integers(0, 10_000), st.sampled_from([1, 2, 4]), st.integers(1, 5))
def test_eigen_methods_agree(seed, beta, N):
    H = sample_gaussian(beta, N, 1.0, np.random.default_rng(seed))
    ref = eigenvalues(H, "lapack")
    np.testing.assert_allclose(eigenvalues(H, "householder-ql"), ref, atol=1e-11)
    np.testing.assert_allclose(eigenvalues(H, "jacobi"), ref, atol=1e-11)
    # trace and Frobenius norm are preserved
    assert np.sum(ref) == pytest.approx(np.real(np.trace(H.data)) / (2 if beta == 4 else 1), abs=1e-10)
    assert np.sum(ref**2) == pytest.approx(trace_norm_sq(H), rel=1e-10, abs=1e-12)


def test_householder_preserves_spectrum():
    a = np.array([[4.0, 1.0, -2.0], [1.0, 2.0, 0.0], [-2.0, 0.0, 3.0]])
    d, e = householder_tridiagonalize(a)
    t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    np.testing.assert_allclose(np.linalg.eigvalsh(t), np.linalg.eigvalsh(a), atol=1e-13)
    np.testing.assert_allclose(np.sort(jacobi_eigenvalues(a)), np.linalg.eigvalsh(a), atol=1e-13)


def test_batch_eigenvalues_shape():
    H = sample_gaussian(4, 3, 1.0, np.random.default_rng(7), size=10)
    assert batch_eigenvalues(H).shape == (10, 3)


def test_eigenvalues_rejects_batch():
    H = sample_gaussian(2, 3, 1.0, np.random.default_rng(8), size=2)
    with pytest.raises(DomainError):
        eigenvalues(H)
