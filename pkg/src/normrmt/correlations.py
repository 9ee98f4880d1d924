"""k-point correlation functions of ``H0 + alpha H``.

Gaussian unitary case: ``R_k = det[C_N(x_p, x_q)]`` with the kernel at
variance ``t alpha^2``. Norm-dependent unitary case: the same determinant
mixed over the spread function,

    R_k(x) = int_0^inf f(t) det[C_N(x_p, x_q; t alpha^2)] dt.

Here ``det[C_N]`` is already the Gaussian ``R_k``, so no extra ``t``
dependent factor enters; the one-level case and the trace ``int R_1 = N``
pin this. Any symmetry class: rescale a reference Gaussian correlation
function with ``v^2 = 1/2``,

    R_k(x) = int_0^inf f(t) (2t)^(-k/2) R_k^ref(x / sqrt(2t), alpha, H0 / sqrt(2t)) dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import EnsembleSpec
from .errors import DomainError, UnavailableError, UnsupportedError
from .kernel import KernelContext, kernel_matrix
from .matrixcore import ExternalField
from .quad import QuadratureSpec, derivative_cauchy, integrate_vector
from .spread import AnalyticPositive, DerivativeAtoms, GridFunction, PointMass, mix, spread_for_family

__all__ = [
    "CorrelationRequest",
    "corr_gue",
    "corr_tue",
    "corr_rescaled_generic",
    "level_density_tue",
    "unitary_reference_oracle",
    "evaluate",
]


@dataclass(frozen=True)
class CorrelationRequest:
    """Points, ensemble and method of a correlation-function evaluation."""

    points: tuple
    spec: EnsembleSpec
    method: str = "analytic-unitary"

    def __post_init__(self):
        pts = tuple(float(x) for x in np.ravel(self.points))
        object.__setattr__(self, "points", pts)
        if not 1 <= len(pts) <= self.spec.N:
            raise DomainError(f"need 1 <= k <= N, got k={len(pts)} for N={self.spec.N}")
        if not self.spec.alpha > 0:
            raise DomainError("correlation functions are defined here for alpha > 0")
        if self.method not in ("analytic-unitary", "rescaling-with-oracle"):
            raise DomainError(f"unknown method {self.method!r}")

    @property
    def k(self) -> int:
        return len(self.points)


def _canonical(points):
    # sorting first makes the result bitwise symmetric under permutations
    return np.sort(np.asarray(points, dtype=float).ravel())


def _det_kernel(field, variance, pts):
    mat = kernel_matrix(field, variance, pts)
    if mat.shape[0] == 1:
        return mat[0, 0]
    return np.linalg.det(mat)


def corr_gue(points, variance: float, field) -> float:
    """``det[C_N(x_p, x_q)]`` for the Gaussian unitary ensemble in a field."""
    field = field if isinstance(field, ExternalField) else ExternalField(tuple(field))
    ctx = KernelContext(field.N, variance, field)
    ctx.check_distinct()
    return float(np.real(_det_kernel(field, variance, _canonical(points))))


def _spread_hint(spread, alpha):
    if isinstance(spread, AnalyticPositive):
        return spread.mode()
    return None


def corr_tue(points, spec: EnsembleSpec, spread=None) -> float:
    """Correlation function of a norm-dependent unitary ensemble via its spread function."""
    if spec.beta != 2:
        raise UnsupportedError("the kernel route needs beta = 2; use corr_rescaled_generic")
    if not spec.alpha > 0:
        raise DomainError("alpha must be positive")
    if spread is None:
        try:
            spread = spread_for_family(spec.family, spec.beta, spec.N)
        except UnavailableError as exc:
            raise UnavailableError(f"{exc}; validate this family with montecarlo.empirical_density") from exc
    field = spec.field
    KernelContext(spec.N, 1.0, field).check_distinct()
    pts = _canonical(points)
    if np.any(np.diff(pts) == 0.0):
        # two equal rows in the kernel matrix
        return 0.0
    a2 = spec.alpha**2

    def g(t):
        return _det_kernel(field, t * a2, pts)

    qs = None
    if pts.size > 1 and isinstance(spread, AnalyticPositive):
        # nearly coincident points cancel to rounding level; measure the
        # tolerance against the product of one-point values
        size = float(np.prod(np.real(np.diagonal(kernel_matrix(field, spread.mode() * a2, pts)))))
        qs = QuadratureSpec(abs_tol=max(1e-15 * abs(size), 1e-300), rel_tol=1e-12, max_evals=200_000)
    res = mix(spread, lambda t: float(np.real(g(t))) if not np.iscomplexobj(t) else g(t),
              scale_hint=_spread_hint(spread, spec.alpha), quad_spec=qs)
    return float(res.value)


_LEVEL_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, max_evals=200_000)


def level_density_tue(xs, spec: EnsembleSpec, spread=None):
    """``R_1`` at many points at once (vector-valued quadrature over ``ln t``)."""
    if spec.beta != 2:
        raise UnsupportedError("the kernel route needs beta = 2")
    if spread is None:
        spread = spread_for_family(spec.family, spec.beta, spec.N)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    field = spec.field
    KernelContext(spec.N, 1.0, field).check_distinct()
    a2 = spec.alpha**2

    def diag(T):
        return np.real(np.diagonal(kernel_matrix(field, T, xs)))

    if isinstance(spread, PointMass):
        return spread.weight * diag(spread.t0 * a2)
    if isinstance(spread, DerivativeAtoms):
        def diag_of_a(a):
            return np.array([np.diagonal(kernel_matrix(field, spread.beta / (4.0 * ai) * a2, xs)) for ai in a])

        total = np.zeros(xs.size)
        for j, w in enumerate(spread.coefficients):
            # (-d/da)^j on a contour in the precision, as in spread.mix
            d = derivative_cauchy(diag_of_a, spread.a1, j, 0.5 * spread.a1, points=64)
            total += w * (-1) ** j * np.real(d)
        return total
    if isinstance(spread, AnalyticPositive):
        # window in ln t carrying all but ~1e-20 of the spread mass
        xgrid = np.linspace(math.log(spread.mode()) - 40.0, math.log(spread.mode()) + 60.0, 4001)
        logm = spread.log_pdf(np.exp(xgrid)) + xgrid
        keep = np.where(logm > np.max(logm) - 46.0)[0]
        lo, hi = xgrid[max(keep[0] - 1, 0)], xgrid[min(keep[-1] + 1, xgrid.size - 1)]

        def integrand(x):
            t = math.exp(x)
            return spread.pdf(t) * t * diag(t * a2)

        val, _ = integrate_vector(integrand, lo, hi, _LEVEL_SPEC)
        return np.asarray(val)
    if isinstance(spread, GridFunction):
        def integrand(t):
            return spread.pdf(t) * diag(max(t, 1e-300) * a2)

        val, _ = integrate_vector(integrand, spread.t[0], spread.t[-1], _LEVEL_SPEC)
        return np.asarray(val)
    raise DomainError(f"unknown spread kind {spread!r}")


def unitary_reference_oracle(alpha: float):
    """Reference Gaussian ``R_k`` (``v^2 = 1/2``, beta = 2) from the kernel determinant.

    Returns ``oracle(points, field)``; the reference variance is ``alpha^2 / 2``.
    """
    def oracle(points, field):
        return corr_gue(points, 0.5 * alpha**2, field)

    return oracle


_SAMPLED_SPEC = QuadratureSpec(rule="gauss-legendre", abs_tol=1e-10, rel_tol=1e-6, max_evals=200_000)


def corr_rescaled_generic(points, spec: EnsembleSpec, spread, gaussian_oracle,
                          quad_spec: QuadratureSpec | None = None) -> float:
    """Correlation function of any symmetry class by rescaling a Gaussian reference.

    ``gaussian_oracle(points, field)`` must return the reference Gaussian
    ``R_k`` (``v^2 = 1/2``, coupling ``spec.alpha``) at the given points and
    field. Derivative atoms are not supported because the reference is not
    analytic in ``t`` when it comes from sampling. ``quad_spec`` defaults to
    a tolerance suited to a piecewise-linear sampled reference. An oracle
    with a ``knots`` attribute (its kinks in the reference variable) is
    integrated panel by panel between the images of those kinks.
    """
    pts = _canonical(points)
    k = pts.size
    h = spec.field.array

    def g(t):
        r = math.sqrt(2.0 * t)
        return (2.0 * t) ** (-0.5 * k) * gaussian_oracle(pts / r, ExternalField(tuple(h / r)))

    if isinstance(spread, DerivativeAtoms):
        raise UnsupportedError("rescaling with a sampled reference cannot act on derivative atoms")
    breaks = None
    knots = getattr(gaussian_oracle, "knots", None)
    if knots is not None and k == 1 and not np.any(h) and pts[0] != 0.0:
        # reference kink at y maps to t = x^2 / (2 y^2)
        y = np.asarray(knots, dtype=float)
        y = y[(y != 0.0) & (np.sign(y) == np.sign(pts[0]))]
        breaks = pts[0] ** 2 / (2.0 * y**2)
    return float(mix(spread, g, scale_hint=_spread_hint(spread, spec.alpha),
                     quad_spec=quad_spec or _SAMPLED_SPEC, breakpoints=breaks).value)


def evaluate(request: CorrelationRequest, spread=None, gaussian_oracle=None) -> float:
    """Dispatch a :class:`CorrelationRequest` to the matching route."""
    spec = request.spec
    if request.method == "analytic-unitary":
        return corr_tue(request.points, spec, spread)
    spread = spread or spread_for_family(spec.family, spec.beta, spec.N)
    if gaussian_oracle is None:
        if spec.beta != 2:
            raise DomainError("a Gaussian reference oracle is required for beta = 1, 4")
        gaussian_oracle = unitary_reference_oracle(spec.alpha)
    return corr_rescaled_generic(request.points, spec, spread, gaussian_oracle)
