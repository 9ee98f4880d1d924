"""Spread functions: norm-dependent densities as mixtures of Gaussian ensembles.

A spread function ``f(t)`` over the variance parameter ``t`` represents

    P(u) = int_0^inf f(t) 2^(-N/2) (beta / (2 pi t))^(mu/2) exp(-beta u / (4 t)) dt,
    Q(w) = int_0^inf f(t) c exp(-beta w / (4 t)) dt.

Four kinds exist. ``PointMass`` is a single Gaussian. ``DerivativeAtoms``
is a signed combination of derivatives of a point mass, written in the
precision ``a = beta / (4 t)`` as ``sum_j w_j (-d/da)^j`` at ``a1``.
``AnalyticPositive`` is a closed-form density; the non-extensive family
gives an inverse-gamma law. ``GridFunction`` is a tabulated density.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .densities import (
    DensityFamily,
    Gaussian,
    GaussMonomial,
    NonExtensive,
    half_dof,
    nonextensive_lambda,
)
from .errors import DomainError, UnavailableError
from .matrixcore import SymmetryClass
from .quad import QuadratureSpec, derivative_cauchy, gauss_legendre_panels, integrate_finite
from .specfun import ln_gamma

__all__ = [
    "PointMass",
    "DerivativeAtoms",
    "AnalyticPositive",
    "GridFunction",
    "MixResult",
    "spread_for_family",
    "mix",
    "mix_reproduce",
    "mix_superspace",
    "gaussian_density_in_precision",
]

_MIX_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-12, max_evals=200_000)


@dataclass(frozen=True)
class PointMass:
    """All weight at ``t0``."""

    t0: float
    weight: float = 1.0
    signed = False

    def total_mass(self) -> float:
        return self.weight


@dataclass(frozen=True)
class DerivativeAtoms:
    """``sum_j coefficients[j] (-d/da)^j delta`` in the precision ``a = beta/(4t)`` at ``a1 = beta/(4 t0)``.

    The functional acts on ``g`` as ``sum_j w_j (-d/da)^j g(beta/(4a))`` at ``a = a1``.
    Only the order-0 coefficient carries mass.
    """

    t0: float
    coefficients: tuple
    beta: int
    signed = True

    @property
    def a1(self) -> float:
        return self.beta / (4.0 * self.t0)

    def total_mass(self) -> float:
        return float(self.coefficients[0])


@dataclass(frozen=True)
class AnalyticPositive:
    """Inverse-gamma density ``b^s / Gamma(s) t^(-s-1) exp(-b/t)``."""

    name: str
    shape: float
    scale: float
    signed = False

    def __post_init__(self):
        if self.name != "inverse-gamma":
            raise DomainError(f"unknown analytic spread {self.name!r}")
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("inverse-gamma parameters must be positive")

    def log_pdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.shape * math.log(self.scale) - ln_gamma(self.shape)
                   - (self.shape + 1.0) * np.log(t) - self.scale / t)
        return np.where(t > 0, out, -np.inf)

    def pdf(self, t):
        out = np.exp(self.log_pdf(t))
        return out if np.ndim(out) else float(out)

    def mode(self) -> float:
        return self.scale / (self.shape + 1.0)

    def total_mass(self) -> float:
        return 1.0


@dataclass(frozen=True)
class GridFunction:
    """Tabulated spread density, monotone cubic between nodes and zero outside.

    Integrals over the grid are 16-point Gauss-Legendre sums on each
    interval between nodes, where the interpolant is a smooth cubic.
    """

    t: tuple
    values: tuple
    signed = False

    def __post_init__(self):
        t = tuple(float(x) for x in np.ravel(self.t))
        v = tuple(float(x) for x in np.ravel(self.values))
        if len(t) != len(v) or len(t) < 2 or np.any(np.diff(t) <= 0) or t[0] < 0:
            raise DomainError("grid spread needs a strictly increasing nonnegative t grid with matching values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def pdf(self, t):
        out = _pchip(self.t, self.values)(np.asarray(t, dtype=float))
        out = np.nan_to_num(out, nan=0.0)
        return out if np.ndim(out) else float(out)

    def total_mass(self) -> float:
        nodes, weights = gauss_legendre_panels(self.t)
        return float(np.dot(weights, self.pdf(nodes)))


@functools.lru_cache(maxsize=32)
def _pchip(t, values):
    return PchipInterpolator(t, values, extrapolate=False)


@dataclass(frozen=True)
class MixResult:
    value: float
    truncated: bool = False


def spread_for_family(family: DensityFamily, beta, N: int):
    """Spread function of a family, or :class:`UnavailableError`.

    Gaussian: point mass at ``t0 = v^2``. Non-extensive: inverse-gamma with
    shape ``Lambda`` and scale ``beta Lambda / (4 kappa)``. Gauss-monomial:
    derivative atoms at ``t0 = beta / (4 a1)``.
    """
    beta = SymmetryClass.of(beta).beta
    p = half_dof(beta, N)
    if isinstance(family, Gaussian):
        return PointMass(t0=family.v**2)
    if isinstance(family, NonExtensive):
        lam = nonextensive_lambda(family, p)
        return AnalyticPositive("inverse-gamma", shape=lam, scale=beta * lam / (4.0 * family.kappa))
    if isinstance(family, GaussMonomial):
        t0 = beta / (4.0 * family.a1)
        if family.m == 0:
            return PointMass(t0=t0)
        m = family.m
        coef = tuple(
            math.comb(m, j) * math.exp(ln_gamma(m - j + p) - ln_gamma(m + p)) * family.a1**j
            for j in range(m + 1)
        )
        return DerivativeAtoms(t0=t0, coefficients=coef, beta=beta)
    raise UnavailableError(f"no closed-form spread function for the {family.name} family")


def mix(spread, g, atom_derivative=None, scale_hint: float | None = None,
        quad_spec: QuadratureSpec | None = None, breakpoints=None) -> MixResult:
    """``int f(t) g(t) dt`` for any spread kind.

    ``g`` maps ``t`` to a real number. For derivative atoms either supply
    ``atom_derivative(j, a)`` returning ``(-d/da)^j g(beta/(4a))`` exactly,
    or let ``g`` accept complex ``t`` so the derivatives come from a Cauchy
    contour in ``a``. ``scale_hint`` is a typical ``t`` of the integrand.
    ``quad_spec`` loosens the tolerance for noisy or kinked ``g``. For an
    inverse-gamma spread, ``breakpoints`` lists the ``t`` where ``g`` has
    kinks; the integral is then a 16-point Gauss-Legendre sum on panels that
    never straddle a kink.
    """
    qs = quad_spec or _MIX_SPEC
    if isinstance(spread, PointMass):
        return MixResult(spread.weight * float(np.real(g(spread.t0))))
    if isinstance(spread, DerivativeAtoms):
        a1 = spread.a1
        total = 0.0
        for j, w in enumerate(spread.coefficients):
            if atom_derivative is not None:
                d = atom_derivative(j, a1)
            else:
                def g_of_a(a, _beta=spread.beta):
                    return np.asarray([g(_beta / (4.0 * ai)) for ai in np.ravel(a)])

                # (-d/da)^j; the contour stays inside Re a > 0 where g is analytic
                d = (-1) ** j * float(np.real(derivative_cauchy(g_of_a, a1, j, 0.5 * a1, points=64)))
            total += w * d
        return MixResult(total)
    if isinstance(spread, AnalyticPositive):
        def log_abs_h(x):
            t = np.exp(x)
            log_w = spread.log_pdf(t) + x
            # g is only probed where the spread carries weight
            live = log_w > np.max(log_w) - 120.0
            gv = np.zeros(np.shape(t))
            gv[live] = np.abs([float(g(ti)) for ti in t[live]])
            with np.errstate(divide="ignore"):
                return log_w + np.log(gv)

        centre = math.log(scale_hint or spread.mode())
        window = _window_coarse(log_abs_h, centre)
        if window is None:
            # g is exactly zero wherever the spread carries weight
            return MixResult(0.0)
        lo, hi, xpk = window

        def h_one(x):
            t = math.exp(x)
            return math.exp(float(spread.log_pdf(t)) + x) * float(g(t))

        def h(x):
            # scalar for the adaptive rule, arrays for the panel rule
            if np.ndim(x) == 0:
                return h_one(float(x))
            return np.array([h_one(float(v)) for v in np.ravel(x)])

        if breakpoints is not None:
            bx = np.log(np.asarray([b for b in np.ravel(breakpoints) if b > 0], dtype=float))
            edges = np.unique(np.concatenate([np.linspace(lo, hi, 129), bx[(bx > lo) & (bx < hi)]]))
            nodes, weights = gauss_legendre_panels(edges)
            return MixResult(float(np.dot(weights, h(nodes))))
        val, _ = integrate_finite(h, lo, hi, qs, points=[xpk] if lo < xpk < hi else None)
        return MixResult(val)
    if isinstance(spread, GridFunction):
        nodes, weights = gauss_legendre_panels(spread.t)
        gv = np.array([float(g(t)) for t in nodes])
        val = float(np.dot(weights * spread.pdf(nodes), gv))
        truncated = spread.values[-1] > 0 or (spread.values[0] > 0 and spread.t[0] > 0)
        return MixResult(val, truncated=truncated)
    raise DomainError(f"unknown spread kind {spread!r}")


def _window_coarse(log_h, centre):
    xs = np.linspace(centre - 40.0, centre + 40.0, 161)
    with np.errstate(all="ignore"):
        vals = log_h(xs)
    finite = np.isfinite(vals)
    if not np.any(finite):
        return None
    peak = float(np.max(vals[finite]))
    keep = np.where(finite & (vals > peak - 46.0))[0]
    lo = xs[max(keep[0] - 1, 0)]
    hi = xs[min(keep[-1] + 1, xs.size - 1)]
    return float(lo), float(hi), float(xs[np.argmax(np.where(finite, vals, -np.inf))])


def gaussian_density_in_precision(beta, N, u, a):
    """``2^(-N/2) (2a/pi)^(mu/2) exp(-a u)``: the Gaussian ensemble density with ``a = beta/(4 v^2)``."""
    p = half_dof(beta, N)
    return 2.0 ** (-0.5 * N) * (2.0 * a / math.pi) ** p * np.exp(-a * u)


def _gaussian_atom_derivative(beta, N, u):
    """``(-d/da)^j`` of the Gaussian density in precision, expanded by Leibniz' rule."""
    p = half_dof(beta, N)

    def deriv(j, a):
        total = 0.0
        falling = 1.0
        for i in range(j + 1):
            # d^i a^p = p (p-1) ... (p-i+1) a^(p-i); d^(j-i) exp(-a u) = (-u)^(j-i) exp(-a u)
            total += math.comb(j, i) * (-1) ** i * falling * a ** (p - i) * u ** (j - i)
            falling *= p - i
        return 2.0 ** (-0.5 * N) * (2.0 / math.pi) ** p * math.exp(-a * u) * total

    return deriv


def mix_reproduce(spread, family, beta, N: int, u) -> float:
    """``int f(t) P_Gauss(u; t) dt``, which must equal ``eval_P(family, beta, N, u)``."""
    beta = SymmetryClass.of(beta).beta
    p = half_dof(beta, N)

    def one(x):
        def g(t):
            return 2.0 ** (-0.5 * N) * (beta / (2.0 * math.pi * t)) ** p * np.exp(-beta * x / (4.0 * t))

        hint = None
        if isinstance(spread, AnalyticPositive):
            # maximum of t^(-shape-1-p) exp(-(b + beta x/4)/t)
            hint = (spread.scale + 0.25 * beta * x) / (spread.shape + 1.0 + p)
        return mix(spread, g, atom_derivative=_gaussian_atom_derivative(beta, N, x), scale_hint=hint).value

    return _vectorize(one, u)


def mix_superspace(spread, beta, k: int, w) -> float:
    """``int f(t) c exp(-beta w / (4 t)) dt``."""
    from .supertransform import normalization_constant_c

    beta = SymmetryClass.of(beta).beta
    c = normalization_constant_c(beta, k)

    def one(x):
        def g(t):
            return c * np.exp(-beta * x / (4.0 * t))

        def atom(j, a):
            # (-d/da)^j exp(-a w) = w^j exp(-a w)
            return c * x**j * math.exp(-a * x)

        hint = None
        if isinstance(spread, AnalyticPositive):
            hint = (spread.scale + 0.25 * beta * x) / (spread.shape + 1.0)
        return mix(spread, g, atom_derivative=atom, scale_hint=hint).value

    return _vectorize(one, w)


def _vectorize(fn, x):
    if np.ndim(x) == 0:
        return fn(float(x))
    arr = np.asarray(x, dtype=float)
    return np.array([fn(float(v)) for v in arr.ravel()]).reshape(arr.shape)
