"""Norm-dependent density families ``P(u)`` with ``u = Tr H^2``.

A density is ``P(u) = a0 * shape(u)``. ``a0`` is never chosen by the user:
it follows from requiring the zeroth moment to be one,

    M_nu = (pi/2)^(mu/2) 2^(N/2) / Gamma(mu/2) * int_0^inf u^(nu + mu/2 - 1) P(u) du.

Families are immutable and hashable, so normalizations are memoized per
``(family, beta, N)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _si
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import (
    DivergenceError,
    DomainError,
    NonNormalizableError,
    PointMassError,
)
from .matrixcore import ExternalField, SymmetryClass, degrees_of_freedom
from .quad import QuadratureSpec, integrate_finite, integrate_semi_infinite
from .specfun import ln_gamma, log_parabolic_cylinder_D

__all__ = [
    "DensityFamily",
    "Gaussian",
    "BoundTrace",
    "FixedTrace",
    "GaussMonomial",
    "GaussQuartic",
    "NonExtensive",
    "GridDensity",
    "EnsembleSpec",
    "MomentReport",
    "half_dof",
    "nonextensive_lambda",
    "shape",
    "eval_P",
    "normalize",
    "moment",
    "angular_integral_constant",
    "fourier_transform_P",
    "sample_trace_norm",
    "RadialSampler",
]


class DensityFamily:
    """Base class of the density families; subclasses are frozen dataclasses."""

    name = "abstract"

    def params(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite real, got {value!r}")


@dataclass(frozen=True)
class Gaussian(DensityFamily):
    """``exp(-beta u / (4 v^2))``; the eigenvalue variance is ``2 v^2 / beta``."""

    v: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        _positive("v", self.v)


@dataclass(frozen=True)
class BoundTrace(DensityFamily):
    """Uniform on the ball ``u <= a1``."""

    a1: float = 1.0
    name = "bound-trace"

    def __post_init__(self):
        _positive("a1", self.a1)


@dataclass(frozen=True)
class FixedTrace(DensityFamily):
    """Point mass on the sphere ``u = a1`` (a measure, not a function)."""

    a1: float = 1.0
    name = "fixed-trace"

    def __post_init__(self):
        _positive("a1", self.a1)


@dataclass(frozen=True)
class GaussMonomial(DensityFamily):
    """``u^m exp(-a1 u)`` with integer ``m >= 0``."""

    a1: float = 1.0
    m: int = 1
    name = "gauss-monomial"

    def __post_init__(self):
        _positive("a1", self.a1)
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"m must be a nonnegative integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class GaussQuartic(DensityFamily):
    """``exp(-a1 u - a2 u^2)``."""

    a1: float = 1.0
    a2: float = 1.0
    name = "gauss-quartic"

    def __post_init__(self):
        _positive("a1", self.a1)
        _positive("a2", self.a2)


@dataclass(frozen=True)
class NonExtensive(DensityFamily):
    """``(1 + kappa u / Lambda)^(1/(1-q))`` with ``Lambda = 1/(q-1) - mu/2``.

    ``Lambda`` depends on ``mu``, so admissibility (``Lambda > 0``, i.e.
    ``q < 1 + 2/mu``) is checked once ``beta`` and ``N`` are known.
    """

    q: float = 1.1
    kappa: float = 1.0
    name = "non-extensive"

    def __post_init__(self):
        _positive("kappa", self.kappa)
        if not (self.q > 1 and math.isfinite(self.q)):
            raise DomainError(f"q must exceed 1, got {self.q!r}")

    @classmethod
    def from_lambda(cls, lam: float, mu: int, kappa: float = 1.0) -> "NonExtensive":
        """Family with the requested ``Lambda`` for ``mu`` degrees of freedom."""
        _positive("Lambda", lam)
        return cls(q=1.0 + 1.0 / (lam + 0.5 * mu), kappa=kappa)


@dataclass(frozen=True)
class GridDensity(DensityFamily):
    """Tabulated shape on a ``u`` grid; monotone cubic inside, zero outside."""

    u: tuple = ()
    values: tuple = ()
    name = "grid"

    def __post_init__(self):
        u = tuple(float(x) for x in np.ravel(self.u))
        vals = tuple(float(x) for x in np.ravel(self.values))
        if len(u) != len(vals) or len(u) < 2:
            raise DomainError("grid density needs matching u and value arrays of length >= 2")
        if np.any(np.diff(u) <= 0) or u[0] < 0:
            raise DomainError("grid u values must be nonnegative and strictly increasing")
        if min(vals) < 0:
            raise DomainError("grid density values must be nonnegative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "values", vals)

    @functools.cached_property
    def interpolant(self):
        return PchipInterpolator(np.asarray(self.u), np.asarray(self.values), extrapolate=False)


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything that defines ``H0 + alpha H`` with ``H`` drawn from a family."""

    beta: int
    N: int
    family: DensityFamily
    alpha: float = 1.0
    field: ExternalField | None = None

    def __post_init__(self):
        SymmetryClass.of(self.beta)
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if self.alpha < 0:
            raise DomainError("alpha must be nonnegative")
        fld = self.field if self.field is not None else ExternalField.zeros(self.N)
        if not isinstance(fld, ExternalField):
            fld = ExternalField(tuple(fld))
        if fld.N != self.N:
            raise DomainError(f"external field has {fld.N} entries, expected N={self.N}")
        object.__setattr__(self, "field", fld)

    @property
    def sym(self) -> SymmetryClass:
        return SymmetryClass.of(self.beta)

    @property
    def mu(self) -> int:
        return degrees_of_freedom(self.beta, self.N)


@dataclass(frozen=True)
class MomentReport:
    nu: int
    value: float
    method: str
    err_est: float


def half_dof(beta, N) -> float:
    """``p = mu / 2``."""
    return 0.5 * degrees_of_freedom(beta, N)


def nonextensive_lambda(family: NonExtensive, p: float) -> float:
    """``Lambda = 1/(q-1) - p``; raises when the family is not normalizable."""
    lam = 1.0 / (family.q - 1.0) - p
    if not lam > 0:
        raise NonNormalizableError(
            f"non-extensive family needs 1/(q-1) > mu/2 = {p:g}; got q={family.q} (Lambda={lam:.6g})"
        )
    return lam


# -- shapes -----------------------------------------------------------------


def log_shape(family: DensityFamily, beta, N, u, formal_mu=None):
    """Natural log of the unnormalized shape; ``-inf`` where it vanishes.

    ``formal_mu`` replaces ``mu`` in the only family whose shape depends on
    it (``NonExtensive`` through ``Lambda``).
    """
    beta = SymmetryClass.of(beta).beta
    p = 0.5 * (degrees_of_freedom(beta, N) if formal_mu is None else formal_mu)
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(family, Gaussian):
            out = -beta * u / (4.0 * family.v**2)
        elif isinstance(family, BoundTrace):
            out = np.where(u <= family.a1, 0.0, -np.inf)
        elif isinstance(family, FixedTrace):
            raise PointMassError("fixed-trace density is a point mass; use measure-aware operations")
        elif isinstance(family, GaussMonomial):
            out = family.m * np.log(u) - family.a1 * u if family.m else -family.a1 * u
        elif isinstance(family, GaussQuartic):
            out = -family.a1 * u - family.a2 * u * u
        elif isinstance(family, NonExtensive):
            lam = nonextensive_lambda(family, p)
            out = -(1.0 / (family.q - 1.0)) * np.log1p(family.kappa * u / lam)
        elif isinstance(family, GridDensity):
            vals = family.interpolant(u)
            out = np.log(np.where(np.isnan(vals), 0.0, np.maximum(vals, 0.0)))
        else:
            raise DomainError(f"unknown density family {family!r}")
    out = np.where(u < 0, -np.inf, out)
    return out if out.ndim else float(out)


def shape(family: DensityFamily, beta, N, u, formal_mu=None):
    """Unnormalized shape, i.e. ``P(u) / a0``."""
    out = np.exp(log_shape(family, beta, N, u, formal_mu))
    return out if np.ndim(out) else float(out)


# -- normalization ----------------------------------------------------------


def _typical_scale(family, beta, p):
    """Rough location of the radial mass ``u^(p-1) shape(u)``; sets quadrature maps."""
    if isinstance(family, Gaussian):
        return 4.0 * family.v**2 / beta * max(p, 0.5)
    if isinstance(family, (BoundTrace, FixedTrace)):
        return family.a1
    if isinstance(family, GaussMonomial):
        return max(family.m + p, 0.5) / family.a1
    if isinstance(family, GaussQuartic):
        # stationary point of (p-1) ln u - a1 u - a2 u^2
        c = max(p - 1.0, 0.5)
        return (-family.a1 + math.sqrt(family.a1**2 + 8.0 * family.a2 * c)) / (4.0 * family.a2)
    if isinstance(family, NonExtensive):
        lam = nonextensive_lambda(family, p)
        return lam / family.kappa * max(p, 0.5) / max(lam, 1.0)
    if isinstance(family, GridDensity):
        return max(0.5 * family.u[-1], 1e-300)
    raise DomainError(f"unknown density family {family!r}")


def _log_norm_integral_closed(family, beta, p):
    """``log int_0^inf u^(p-1) shape(u) du`` in closed form."""
    if isinstance(family, Gaussian):
        return ln_gamma(p) + p * math.log(4.0 * family.v**2 / beta)
    if isinstance(family, BoundTrace):
        return p * math.log(family.a1) - math.log(p)
    if isinstance(family, FixedTrace):
        return (p - 1.0) * math.log(family.a1)
    if isinstance(family, GaussMonomial):
        return ln_gamma(family.m + p) - (family.m + p) * math.log(family.a1)
    if isinstance(family, GaussQuartic):
        z0 = family.a1 / math.sqrt(2.0 * family.a2)
        return (-0.5 * p * math.log(2.0 * family.a2) + ln_gamma(p) + 0.25 * z0 * z0
                + log_parabolic_cylinder_D(-p, z0))
    if isinstance(family, NonExtensive):
        lam = nonextensive_lambda(family, p)
        s = 1.0 / (family.q - 1.0)
        return p * math.log(lam / family.kappa) + ln_gamma(p) + ln_gamma(lam) - ln_gamma(s)
    raise DomainError(f"no closed-form normalization for {family!r}")


_RADIAL_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-12, max_evals=100_000)


def radial_integral(family, beta, N, power, weight=None, spec=None):
    """``int_0^inf u^(power-1) shape(u) [weight(u)] du`` by quadrature.

    Returns ``(value, error_estimate)``. Non-decaying integrands raise
    :class:`DivergenceError`.
    """
    beta = SymmetryClass.of(beta).beta
    spec = spec or _RADIAL_SPEC
    p = half_dof(beta, N)
    if isinstance(family, FixedTrace):
        val = family.a1 ** (power - 1.0) * (weight(family.a1) if weight else 1.0)
        return val, 0.0
    if isinstance(family, NonExtensive):
        lam = nonextensive_lambda(family, p)
        if power - p >= lam:
            raise DivergenceError(
                f"u^{power - 1:g} times the non-extensive shape is not integrable (Lambda={lam:.6g})"
            )

    def f(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.exp((power - 1.0) * np.log(u) + log_shape(family, beta, N, u))
        val = np.where(u > 0, val, 0.0 if power >= 1 else np.inf)
        if weight is not None:
            val = val * weight(u)
        return val if np.ndim(val) else float(val)

    ep = power if power < 1.0 else None
    if isinstance(family, BoundTrace):
        return integrate_finite(f, 0.0, family.a1, spec, endpoint_power=ep)
    if isinstance(family, GridDensity):
        total, err = 0.0, 0.0
        knots = np.asarray(family.u)
        for lo, hi in zip(knots[:-1], knots[1:]):
            v, e = integrate_finite(f, lo, hi, spec, endpoint_power=ep if lo == 0 else None)
            total += v
            err += e
        return total, err
    scale = _typical_scale(family, beta, p)
    return integrate_semi_infinite(f, 0.0, spec, scale=scale, endpoint_power=ep)


@functools.lru_cache(maxsize=512)
def _log_a0(family, beta, N, method):
    p = half_dof(beta, N)
    if method == "closed" and not isinstance(family, GridDensity):
        log_int = _log_norm_integral_closed(family, beta, p)
    else:
        try:
            val, _ = radial_integral(family, beta, N, p)
        except DivergenceError as exc:
            raise NonNormalizableError(str(exc)) from exc
        if not (val > 0 and math.isfinite(val)):
            raise NonNormalizableError(f"normalization integral is {val!r}")
        log_int = math.log(val)
    return ln_gamma(p) - p * math.log(0.5 * math.pi) - 0.5 * N * math.log(2.0) - log_int


def normalize(family: DensityFamily, beta, N: int, method: str = "closed") -> float:
    """The constant ``a0`` that makes the zeroth moment one.

    ``method`` is ``"closed"`` (closed-form integrals; grid densities fall
    back to quadrature) or ``"quadrature"``.
    """
    if method not in ("closed", "quadrature"):
        raise DomainError(f"unknown normalization method {method!r}")
    beta = SymmetryClass.of(beta).beta
    return math.exp(_log_a0(family, beta, int(N), method))


def log_normalize(family, beta, N, method="closed") -> float:
    beta = SymmetryClass.of(beta).beta
    return _log_a0(family, beta, int(N), method)


def eval_P(family: DensityFamily, beta, N: int, u):
    """Normalized density ``P(u) = a0 * shape(u)``.

    Raises :class:`PointMassError` for the fixed-trace family.
    """
    if isinstance(family, FixedTrace):
        raise PointMassError("fixed-trace density is a point mass at u = a1; it has no pointwise value")
    out = np.exp(log_normalize(family, beta, N) + np.asarray(log_shape(family, beta, N, u)))
    return out if np.ndim(out) else float(out)


def moment(family: DensityFamily, beta, N: int, nu: int) -> MomentReport:
    """``M_nu``, the ``nu``-th moment of ``Tr H^2``, by quadrature of the radial integral."""
    if nu < 0:
        raise DomainError("moment order must be nonnegative")
    beta = SymmetryClass.of(beta).beta
    p = half_dof(beta, N)
    if isinstance(family, FixedTrace):
        return MomentReport(nu, float(family.a1) ** nu, "analytic-quadrature", 0.0)
    val, err = radial_integral(family, beta, N, p + nu)
    log_pref = p * math.log(0.5 * math.pi) + 0.5 * N * math.log(2.0) - ln_gamma(p) + log_normalize(family, beta, N)
    scale = math.exp(log_pref)
    return MomentReport(nu, val * scale, "analytic-quadrature", err * scale)


def angular_integral_constant(beta, N: int) -> float:
    """Integral of ``|Vandermonde(e)|^beta`` over the unit sphere in ``R^N``."""
    beta = SymmetryClass.of(beta).beta
    if N < 1:
        raise DomainError("N must be >= 1")
    mu = degrees_of_freedom(beta, N)
    log_val = (0.5 * N * math.log(math.pi)
               + sum(ln_gamma(1.0 + n * beta / 2.0) for n in range(1, N + 1))
               - (beta * N * (N - 1) / 4.0 - 1.0) * math.log(2.0)
               - N * ln_gamma(1.0 + beta / 2.0)
               - ln_gamma(mu / 2.0))
    return math.exp(log_val)


def fourier_transform_P(family: DensityFamily, beta, N: int, y: float) -> complex:
    """``(2 pi)^(-1/2) int_0^inf P(u) exp(i y u) du``.

    Uses QUADPACK's Fourier-weighted rules (cosine and sine parts
    separately); a point mass is transformed exactly.
    """
    beta = SymmetryClass.of(beta).beta
    y = float(y)
    inv = 1.0 / math.sqrt(2.0 * math.pi)
    a0 = normalize(family, beta, N)
    if isinstance(family, FixedTrace):
        return complex(inv * a0 * np.exp(1j * y * family.a1))

    def f(u):
        return math.exp(log_shape(family, beta, N, u))

    if isinstance(family, BoundTrace):
        upper = family.a1
    elif isinstance(family, GridDensity):
        upper = family.u[-1]
    else:
        upper = math.inf
    if y == 0.0:
        if math.isinf(upper):
            re, _ = integrate_semi_infinite(f, 0.0, _RADIAL_SPEC, scale=_typical_scale(family, beta, 1.0))
        else:
            re, _ = integrate_finite(f, 0.0, upper, _RADIAL_SPEC)
        return complex(inv * a0 * re, 0.0)
    if math.isinf(upper):
        # QAWF works on |y| and needs the sign of the sine part fixed by hand
        re = _si.quad(f, 0.0, np.inf, weight="cos", wvar=abs(y), limlst=200)[0]
        im = math.copysign(1.0, y) * _si.quad(f, 0.0, np.inf, weight="sin", wvar=abs(y), limlst=200)[0]
    else:
        re = _si.quad(f, 0.0, upper, weight="cos", wvar=y, limit=400)[0]
        im = _si.quad(f, 0.0, upper, weight="sin", wvar=y, limit=400)[0]
    return complex(inv * a0 * re, inv * a0 * im)


# -- radial sampling ----------------------------------------------------------


class RadialSampler:
    """Inverse-CDF sampler for ``u`` with density proportional to ``u^(p-1) shape(u)``.

    The CDF is tabulated in ``x = ln u`` from Gauss-Legendre cell masses and
    interpolated by cubic Hermite segments that use the exact density as
    slope. Cells are bisected until the interpolant is accurate to ``tol``
    at every cell midpoint. Sampling inverts the interpolant by bisection
    inside the bracketing cell.
    """

    def __init__(self, family, beta, N, tol: float = 1e-8, max_cells: int = 50000):
        self.family = family
        self.beta = SymmetryClass.of(beta).beta
        self.N = N
        p = half_dof(self.beta, N)
        self.p = p
        self._log_peak = 0.0

        def log_g(x):
            x = np.asarray(x, dtype=float)
            return p * x + np.asarray(log_shape(family, self.beta, N, np.exp(x)))

        self._log_g = log_g
        lo, hi = self._support(log_g)
        self._log_peak = float(np.max(log_g(np.linspace(lo, hi, 4001))))
        edges = np.linspace(lo, hi, 65)
        for it in range(41):
            masses = self._cell_masses(edges)
            total = float(np.sum(masses))
            cdf = np.concatenate([[0.0], np.cumsum(masses)]) / total
            slopes = self._density(edges) / total
            spline = CubicHermiteSpline(edges, cdf, slopes)
            mids = 0.5 * (edges[:-1] + edges[1:])
            half = self._cell_masses(np.column_stack([edges[:-1], mids]).ravel(), pairs=True) / total
            err = np.abs(spline(mids) - (cdf[:-1] + half))
            bad = err > tol
            if not np.any(bad) or edges.size > max_cells or it == 40:
                break
            edges = np.sort(np.concatenate([edges, mids[bad]]))
        self.max_interp_error = float(np.max(err))
        self.edges = edges
        self.cdf = cdf
        self._spline = spline

    def _density(self, x):
        with np.errstate(under="ignore"):
            return np.exp(self._log_g(x) - self._log_peak)

    def _support(self, log_g):
        fam = self.family
        centre = math.log(_typical_scale(fam, self.beta, self.p))
        if isinstance(fam, BoundTrace):
            hi = math.log(fam.a1)
        elif isinstance(fam, GridDensity):
            hi = math.log(fam.u[-1])
        else:
            hi = None
        lo_x, hi_x = centre - 5.0, (hi if hi is not None else centre + 5.0)
        for _ in range(200):
            xs = np.linspace(lo_x, hi_x, 2001)
            vals = log_g(xs)
            peak = np.max(vals[np.isfinite(vals)])
            grow = False
            if vals[0] > peak - 40.0:
                lo_x -= 5.0
                grow = True
            if hi is None and vals[-1] > peak - 40.0:
                hi_x += 5.0
                grow = True
            if not grow:
                break
        else:
            raise NonNormalizableError("radial density does not decay; cannot tabulate its CDF")
        if isinstance(fam, GridDensity) and fam.u[0] > 0:
            lo_x = max(lo_x, math.log(fam.u[0]))
        return lo_x, hi_x

    def _cell_masses(self, edges, pairs=False):
        if pairs:
            e = np.asarray(edges).reshape(-1, 2)
            lo, hi = e[:, 0], e[:, 1]
        else:
            lo, hi = edges[:-1], edges[1:]
        x, w = np.polynomial.legendre.leggauss(16)
        half = 0.5 * (hi - lo)[:, None]
        nodes = 0.5 * (hi + lo)[:, None] + half * x[None, :]
        return np.sum(half * w[None, :] * self._density(nodes), axis=1)

    def quantile(self, prob):
        """``u`` at cumulative probability ``prob`` (array-like)."""
        prob = np.asarray(prob, dtype=float)
        idx = np.clip(np.searchsorted(self.cdf, prob, side="right") - 1, 0, self.edges.size - 2)
        lo = self.edges[idx].copy()
        hi = self.edges[idx + 1].copy()
        # 60 halvings shrink any cell below double resolution
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._spline(mid) < prob
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = np.exp(0.5 * (lo + hi))
        return out if np.ndim(out) else float(out)

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(rng.random(size))


@functools.lru_cache(maxsize=128)
def _radial_sampler(family, beta, N):
    return RadialSampler(family, beta, N)


def sample_trace_norm(family: DensityFamily, beta, N: int, rng: np.random.Generator, size=None):
    """Draw ``u = Tr H^2`` from the radial law ``u^(mu/2 - 1) P(u)``."""
    beta = SymmetryClass.of(beta).beta
    if isinstance(family, FixedTrace):
        return np.full(size, float(family.a1)) if size is not None else float(family.a1)
    return _radial_sampler(family, beta, int(N)).sample(rng, size)
