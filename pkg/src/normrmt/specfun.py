"""Special functions used by the analytic formulae.

Everything here is real-valued and self-contained: a Lanczos log-gamma,
physicists' Hermite polynomials by recurrence, elementary symmetric
polynomials by the one-pass recurrence, and parabolic cylinder functions of
negative order through their Laplace-type integral representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedError
from .quad import QuadratureSpec, integrate_semi_infinite

__all__ = [
    "SymmetricPolyTable",
    "ln_gamma",
    "gamma",
    "hermite_phys",
    "hermite_table",
    "parabolic_cylinder_D",
    "log_parabolic_cylinder_D",
    "elementary_symmetric",
    "elementary_symmetric_all",
]

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _ln_gamma_scalar(x: float) -> float:
    if not x > 0.0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    shift = 0.0
    # push small arguments into the Lanczos sweet spot
    while x < 0.5:
        shift -= math.log(x)
        x += 1.0
    x -= 1.0
    a = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        a += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (x + 0.5) * math.log(t) - t + math.log(a) + shift


def ln_gamma(x):
    """Natural logarithm of the gamma function for positive real arguments.

    Accepts scalars or array-likes; arrays are evaluated elementwise.

    >>> round(ln_gamma(5.0) - math.log(24.0), 12)
    0.0
    """
    if np.ndim(x) == 0:
        return _ln_gamma_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_ln_gamma_scalar, otypes=[float])(arr)


def gamma(x):
    """Gamma function as ``exp(ln_gamma(x))`` (positive arguments only)."""
    return np.exp(ln_gamma(x)) if np.ndim(x) else math.exp(ln_gamma(x))


def hermite_table(mmax: int, z):
    """Physicists' Hermite polynomials ``H_0 .. H_mmax`` evaluated at ``z``.

    Returns an array of shape ``(mmax + 1,) + shape(z)``. Complex ``z`` is
    allowed; the recurrence is the same.
    """
    if mmax < 0:
        raise DomainError("mmax must be nonnegative")
    z = np.asarray(z)
    dtype = np.result_type(z.dtype, float)
    out = np.empty((mmax + 1,) + z.shape, dtype=dtype)
    out[0] = 1.0
    if mmax >= 1:
        out[1] = 2.0 * z
    for m in range(1, mmax):
        out[m + 1] = 2.0 * z * out[m] - 2.0 * m * out[m - 1]
    return out


def hermite_phys(m: int, z):
    """Physicists' Hermite polynomial ``H_m(z)`` via the three-term recurrence."""
    if m < 0:
        raise DomainError("Hermite degree must be nonnegative")
    h = hermite_table(m, z)[m]
    return h if np.ndim(h) else h.item()


def elementary_symmetric_all(values):
    """All elementary symmetric polynomials ``e_0 .. e_n`` of ``values``.

    One pass of ``e_m <- e_m + x e_{m-1}`` per value; works on the leading
    axis so a batch of value sets can be processed at once (shape
    ``(n,) + batch``).
    """
    v = np.asarray(values)
    n = v.shape[0] if v.ndim else 0
    e = np.zeros((n + 1,) + v.shape[1:], dtype=np.result_type(v.dtype, float))
    e[0] = 1.0
    for i in range(n):
        # descending update keeps e_{m-1} from the previous pass
        e[1 : i + 2] = e[1 : i + 2] + v[i] * e[0 : i + 1]
    return e


def elementary_symmetric(values, m: int) -> float:
    """Sum over all ``m``-element subsets of ``values`` of the product."""
    v = np.asarray(values, dtype=float).ravel()
    if not 0 <= m <= v.size:
        raise DomainError(f"m={m} out of range for {v.size} values")
    return float(elementary_symmetric_all(v)[m])


@dataclass
class SymmetricPolyTable:
    """Elementary symmetric polynomials of a growing set of reals."""

    values: list = field(default_factory=list)
    table: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        self.values = [float(v) for v in self.values]
        self.table = elementary_symmetric_all(np.asarray(self.values, dtype=float))

    def extend(self, x: float) -> "SymmetricPolyTable":
        """Add one value in place using ``e_m(v + {x}) = e_m(v) + x e_{m-1}(v)``."""
        new = np.zeros(self.table.size + 1)
        new[: self.table.size] = self.table
        new[1:] += x * self.table
        self.values.append(float(x))
        self.table = new
        return self

    def __getitem__(self, m: int) -> float:
        if m < 0:
            raise DomainError("negative order")
        return float(self.table[m]) if m < self.table.size else 0.0


_PCF_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-13, max_evals=40000)


def log_parabolic_cylinder_D(order: float, z: float) -> float:
    """``log D_order(z)`` for negative order, computed without overflow.

    Uses ``D_{-a}(z) = exp(-z^2/4) / Gamma(a) * int_0^inf t^(a-1) exp(-z t - t^2/2) dt``.
    The integrand is rescaled by its maximum before quadrature.
    """
    if not order < 0:
        raise UnsupportedError(f"only negative orders are supported, got {order!r}")
    a = -float(order)
    z = float(z)
    # peak of (a-1) ln t - z t - t^2/2
    if a > 1.0:
        tpk = 0.5 * (-z + math.sqrt(z * z + 4.0 * (a - 1.0)))
        lpk = (a - 1.0) * math.log(tpk) - z * tpk - 0.5 * tpk * tpk
        width = 1.0 / math.sqrt(z + tpk + (a - 1.0) / tpk**2) if tpk > 0 else 1.0
        scale = max(tpk, width)

        def integrand(t):
            with np.errstate(divide="ignore"):
                e = (a - 1.0) * np.log(t) - z * t - 0.5 * t * t - lpk
            return np.exp(e)

        val, _ = integrate_semi_infinite(integrand, 0.0, _PCF_SPEC, scale=scale)
        log_int = lpk + math.log(val)
    else:
        # t = s^(1/a) removes the t^(a-1) endpoint singularity
        tpk = max(-z, 0.0)
        lpk = -z * tpk - 0.5 * tpk * tpk
        scale = max(tpk, 1.0) ** a

        def integrand(s):
            t = s ** (1.0 / a)
            return np.exp(-z * t - 0.5 * t * t - lpk) / a

        val, _ = integrate_semi_infinite(integrand, 0.0, _PCF_SPEC, scale=scale)
        log_int = lpk + math.log(val)
    return -0.25 * z * z - ln_gamma(a) + log_int


def parabolic_cylinder_D(order: float, z: float) -> float:
    """Parabolic cylinder function ``D_order(z)`` for ``order < 0`` and real ``z``."""
    return math.exp(log_parabolic_cylinder_D(order, z))
