"""Ordinary space to superspace density transforms.

For a density ``P(u)`` of ``u = Tr H^2`` the superspace density is

    Q(w) = c 2^(N/2) / Gamma(mu/2) (pi/2)^(mu/2) int_0^inf P(u + w) u^(mu/2 - 1) du,

with ``c`` depending on ``beta`` and the superspace size ``k`` only. The
inverse is an ordinary derivative of order ``mu/2`` when ``mu`` is even.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .densities import (
    BoundTrace,
    DensityFamily,
    FixedTrace,
    Gaussian,
    GaussMonomial,
    GaussQuartic,
    GridDensity,
    NonExtensive,
    log_normalize,
    log_shape,
    nonextensive_lambda,
)
from .errors import DivergenceError, DomainError, NonNormalizableError, UnsupportedError
from .matrixcore import SymmetryClass, degrees_of_freedom
from .quad import (
    MAX_DERIVATIVE_ORDER,
    QuadratureSpec,
    derivative_cauchy,
    differentiate_n,
    integrate_finite,
    integrate_semi_infinite,
)
from .specfun import ln_gamma, log_parabolic_cylinder_D

__all__ = [
    "SuperDensity",
    "normalization_constant_c",
    "superspace_density_numeric",
    "superspace_density_analytic",
    "invert_transform",
    "eigen_superspace_density",
    "mix_check_superspace",
]

_Q_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-11, max_evals=100_000)


def normalization_constant_c(beta, k: int) -> float:
    """``2^(k(k-1))`` for beta = 2 and ``2^(k(4k-3)/2)`` for beta = 1, 4."""
    beta = SymmetryClass.of(beta).beta
    if k < 1:
        raise DomainError("k must be >= 1")
    exponent = k * (k - 1) if beta == 2 else k * (4 * k - 3) / 2.0
    return 2.0**exponent


def _support_end(family):
    if isinstance(family, (BoundTrace, FixedTrace)):
        return float(family.a1)
    if isinstance(family, GridDensity):
        return float(family.u[-1])
    return math.inf


def _log_shifted_integral(phi, upper, kinks=()):
    """``log int_0^upper exp(phi(u)) du`` with the integrand rescaled by its peak.

    ``phi`` is vectorized. The peak and an e-fold width are located on a
    logarithmic grid; they set the map for the semi-infinite case. ``kinks``
    are extra breakpoints of a finite range.
    """
    if upper <= 0:
        return -math.inf
    hi = upper if math.isfinite(upper) else 1e12
    xs = np.linspace(math.log(hi) - 60.0, math.log(hi), 3001)
    with np.errstate(all="ignore"):
        vals = phi(np.exp(xs))
    finite = np.isfinite(vals)
    if not np.any(finite):
        return -math.inf
    vmax = float(np.max(vals[finite]))
    ok = np.where(finite & (vals >= vmax - 1.0))[0]
    scale = float(np.exp(xs[ok[-1]]))

    def f(u):
        with np.errstate(all="ignore"):
            v = np.exp(phi(u) - vmax)
        return float(np.nan_to_num(v, nan=0.0))

    if math.isfinite(upper):
        # peaked integrands need a breakpoint near the maximum
        pts = [p for p in (float(np.exp(xs[np.argmax(np.where(finite, vals, -np.inf))])), scale, *kinks)
               if 0 < p < upper]
        val, _ = integrate_finite(f, 0.0, upper, _Q_SPEC, points=sorted(set(pts)) or None)
    else:
        val, _ = integrate_semi_infinite(f, 0.0, _Q_SPEC, scale=scale)
    return vmax + math.log(val) if val > 0 else -math.inf


def _transform_prefactor_log(beta, N, k, dof):
    c = normalization_constant_c(beta, k)
    p = 0.5 * dof
    return math.log(c) + 0.5 * N * math.log(2.0) - ln_gamma(p) + p * math.log(0.5 * math.pi)


@functools.lru_cache(maxsize=100_000)
def _log_transform_integral(family, beta, N, w, dof):
    """``log int_0^inf P(u + w) u^(dof/2 - 1) du`` (``-inf`` when it vanishes)."""
    p = 0.5 * dof
    log_a0 = log_normalize(family, beta, N)
    end = _support_end(family)
    if isinstance(family, FixedTrace):
        if w >= end:
            return -math.inf
        return log_a0 + (p - 1.0) * math.log(end - w)
    if isinstance(family, NonExtensive):
        lam = nonextensive_lambda(family, half_mu := 0.5 * degrees_of_freedom(beta, N))
        if p - half_mu >= lam:
            raise NonNormalizableError("transform integral diverges: dof too large for this non-extensive family")
    upper = end - w

    def phi(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (p - 1.0) * np.log(u) + np.asarray(log_shape(family, beta, N, u + w))
        return np.where(u > 0, out, -np.inf) if out.ndim else (out if u > 0 else -math.inf)

    try:
        # interpolated grids are only C^1 at their nodes
        kinks = tuple(x - w for x in family.u) if isinstance(family, GridDensity) else ()
        return log_a0 + _log_shifted_integral(phi, upper, kinks)
    except DivergenceError as exc:
        raise NonNormalizableError(str(exc)) from exc


def _vectorize(fn, w):
    if np.iscomplexobj(w):
        raise UnsupportedError("the numeric transform is defined for real w only")
    if np.ndim(w) == 0:
        return fn(float(w))
    arr = np.asarray(w, dtype=float)
    return np.array([fn(float(x)) for x in arr.ravel()]).reshape(arr.shape)


def superspace_density_numeric(family: DensityFamily, beta, N: int, k: int, w, dof: int | None = None):
    """Superspace density ``Q(w)`` by quadrature of the transform integral.

    ``dof`` overrides ``mu`` in the transform (power and prefactor) while
    ``P`` keeps its own normalization; the default is the true ``mu``.
    Fixed-trace densities are transformed exactly.
    """
    beta = SymmetryClass.of(beta).beta
    mu = degrees_of_freedom(beta, N)
    dof = mu if dof is None else int(dof)
    if dof < 1:
        raise DomainError("dof must be positive")
    log_pref = _transform_prefactor_log(beta, N, k, dof)

    def one(x):
        if x < 0:
            raise DomainError("the numeric transform is evaluated for w >= 0 only")
        li = _log_transform_integral(family, beta, int(N), x, dof)
        return math.exp(log_pref + li) if math.isfinite(li) else 0.0

    return _vectorize(one, w)


def superspace_density_analytic(family: DensityFamily, beta, N: int, k: int, w, formal_mu=None):
    """Closed-form superspace density for the six analytic families.

    ``formal_mu`` substitutes ``mu`` everywhere in the closed form
    (including ``Lambda`` of the non-extensive family), which is how the
    formal ``mu -> 0`` limit is taken.
    """
    beta = SymmetryClass.of(beta).beta
    c = normalization_constant_c(beta, k)
    p = 0.5 * (degrees_of_freedom(beta, N) if formal_mu is None else formal_mu)
    if np.iscomplexobj(w):
        return _analytic_complex(family, beta, c, p, np.asarray(w, dtype=complex))
    w_arr = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(family, Gaussian):
            out = c * np.exp(-beta * w_arr / (4.0 * family.v**2))
        elif isinstance(family, BoundTrace):
            r = np.clip((family.a1 - w_arr) / family.a1, 0.0, None)
            out = np.where(w_arr <= family.a1, c * r**p, 0.0)
        elif isinstance(family, FixedTrace):
            r = (family.a1 - w_arr) / family.a1
            inside = (w_arr < family.a1) | ((w_arr == family.a1) & (p > 1))
            out = np.where(inside, c * np.abs(r) ** (p - 1.0), 0.0)
        elif isinstance(family, GaussMonomial):
            if p <= 0:
                raise DomainError("Gauss-monomial closed form needs mu > 0")
            m = family.m
            x = family.a1 * w_arr
            total = np.zeros_like(x)
            for j in range(m + 1):
                coef = math.comb(m, j) * math.exp(ln_gamma(m - j + p) - ln_gamma(m + p))
                total = total + coef * x**j
            out = c * np.exp(-x) * total
        elif isinstance(family, GaussQuartic):
            if p <= 0:
                raise DomainError("Gauss-quartic closed form needs mu > 0")
            r2 = math.sqrt(2.0 * family.a2)
            z0 = family.a1 / r2
            log_d0 = log_parabolic_cylinder_D(-p, z0)
            log_d = _vectorize(lambda x: log_parabolic_cylinder_D(-p, z0 + r2 * x), w_arr)
            out = c * np.exp(-0.5 * family.a1 * w_arr - 0.5 * family.a2 * w_arr**2 + log_d - log_d0)
        elif isinstance(family, NonExtensive):
            lam = nonextensive_lambda(family, p)
            out = c * (1.0 + family.kappa * w_arr / lam) ** (-lam)
        elif isinstance(family, GridDensity):
            raise UnsupportedError("grid densities have no closed-form transform; use superspace_density_numeric")
        else:
            raise DomainError(f"unknown density family {family!r}")
    return out if out.ndim else float(out)


def _analytic_complex(family, beta, c, p, w):
    # continuation to complex w, for the families whose Q is analytic on Re w > -const
    if isinstance(family, Gaussian):
        out = c * np.exp(-beta * w / (4.0 * family.v**2))
    elif isinstance(family, GaussMonomial):
        x = family.a1 * w
        total = np.zeros_like(x)
        for j in range(family.m + 1):
            total = total + math.comb(family.m, j) * math.exp(ln_gamma(family.m - j + p) - ln_gamma(family.m + p)) * x**j
        out = c * np.exp(-x) * total
    elif isinstance(family, NonExtensive):
        lam = nonextensive_lambda(family, p)
        out = c * np.exp(-lam * np.log1p(family.kappa * w / lam))
    else:
        raise UnsupportedError(f"no complex continuation for the {family.name} family")
    return out if out.ndim else complex(out)


def invert_transform(Q, beta, N: int, u: float, k: int = 1, h0: float = 0.1, dof: int | None = None,
                     return_error: bool = False, method: str = "auto", radius: float = 1.0):
    """Recover ``P(u)`` from a superspace density ``Q`` by ``mu/2``-fold differentiation.

    ``P(u) = (-1)^(mu/2) / (c 2^(N/2)) (2/pi)^(mu/2) Q^(mu/2)(u)``. Only even
    ``mu`` with ``mu/2 <= 8`` is supported.

    ``method="contour"`` takes the derivative from Cauchy's formula on the
    circle ``|w - u| = radius``; ``Q`` must accept complex arrays and be
    analytic in a larger disc. ``method="finite-difference"`` uses
    Richardson-extrapolated central differences starting at step ``h0``; it
    loses about ``n`` digits per unit of ``log10(1/h)`` and is only
    reliable for low orders. ``"auto"`` picks the contour when ``Q``
    evaluates at a complex point. The error estimate of the contour route is
    the change when the radius shrinks by 20%.
    """
    beta = SymmetryClass.of(beta).beta
    mu = degrees_of_freedom(beta, N) if dof is None else int(dof)
    if mu % 2:
        raise UnsupportedError("inversion for odd mu would need a fractional derivative")
    n = mu // 2
    if n > MAX_DERIVATIVE_ORDER:
        raise UnsupportedError(f"derivative order {n} exceeds cap {MAX_DERIVATIVE_ORDER}")
    if method == "auto":
        try:
            method = "contour" if np.iscomplexobj(Q(np.array([complex(u, 0.5 * radius)]))) else "finite-difference"
        except (TypeError, ValueError, UnsupportedError):
            method = "finite-difference"
    c = normalization_constant_c(beta, k)
    if method == "contour":
        d = float(np.real(derivative_cauchy(Q, float(u), n, radius, points=64)))
        err = abs(d - float(np.real(derivative_cauchy(Q, float(u), n, 0.8 * radius, points=64))))
    elif method == "finite-difference":
        d, err = differentiate_n(Q, float(u), n, h0, return_error=True)
    else:
        raise DomainError(f"unknown differentiation method {method!r}")
    pref = (-1) ** n / (c * 2.0 ** (0.5 * N)) * (2.0 / math.pi) ** n
    return (pref * d, abs(pref) * err) if return_error else pref * d


def eigen_superspace_density(family: DensityFamily, N: int, k: int, w, beta=2):
    """Density in the unitary eigenvalue superspace.

    ``Q_E(w) = 2^(N/2) pi^(d/2) / Gamma(d/2) int_0^inf P(u + w) u^(d/2 - 1) du``
    with ``d = N^2 - 2k``; ``P`` is the beta = 2 density of dimension ``N``.
    """
    if SymmetryClass.of(beta).beta != 2:
        raise UnsupportedError(f"the eigenvalue superspace density exists for beta = 2 only, not {beta}")
    d = N * N - 2 * k
    if k < 1:
        raise DomainError("k must be >= 1")
    if d <= 0:
        raise DomainError(f"N^2 - 2k must be positive, got {d}")
    log_pref = 0.5 * N * math.log(2.0) + 0.5 * d * math.log(math.pi) - ln_gamma(0.5 * d)

    def one(x):
        if x < 0:
            raise DomainError("the numeric transform is evaluated for w >= 0 only")
        li = _log_transform_integral(family, 2, int(N), x, d)
        return math.exp(log_pref + li) if math.isfinite(li) else 0.0

    return _vectorize(one, w)


def mix_check_superspace(spread, beta, k: int, w):
    """``int_0^inf f(t) c exp(-beta w / (4 t)) dt`` for a spread function ``f``."""
    from .spread import mix_superspace

    return mix_superspace(spread, beta, k, w)


class SuperDensity:
    """A superspace density bound to ``(family, beta, N, k)``.

    Calling it evaluates ``Q(w)``; ``mode`` selects the closed form or the
    quadrature route.
    """

    def __init__(self, family: DensityFamily, beta, N: int, k: int = 1, mode: str = "analytic"):
        if mode not in ("analytic", "numeric"):
            raise DomainError(f"unknown mode {mode!r}")
        self.family = family
        self.beta = SymmetryClass.of(beta).beta
        self.N = int(N)
        self.k = int(k)
        self.mode = mode
        self.c_const = normalization_constant_c(self.beta, self.k)

    def __call__(self, w):
        if self.mode == "analytic":
            return superspace_density_analytic(self.family, self.beta, self.N, self.k, w)
        return superspace_density_numeric(self.family, self.beta, self.N, self.k, w)

    def __repr__(self):
        return f"SuperDensity({self.family!r}, beta={self.beta}, N={self.N}, k={self.k}, mode={self.mode!r})"
