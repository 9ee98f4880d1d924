"""Correlation kernel of the unitary ensemble in an external field.

With ``T = t alpha^2`` (the variance) and distinct field entries ``h_n``,

    C_N(x_p, x_q) = sum_n exp(-(h_n - x_p)^2 / 2T) / sqrt(2 pi T)
                    * sum_{m<N} (T/2)^(m/2) H_m((x_q - h_n) / sqrt(2T)) e_m(r_n),

where ``e_m(r_n)`` are elementary symmetric polynomials of the reciprocals
``1 / (h_n - h_m')``, ``m' != n``. Two numerical oracles check it: one
integrates the Lagrange-product form over ``s_2`` numerically. The other
is a literal two-dimensional quadrature of the double integral with a
finite imaginary increment, extrapolated to zero increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, DomainError
from .matrixcore import ExternalField
from .quad import QuadratureSpec, gauss_legendre_panels, integrate_finite
from .specfun import elementary_symmetric_all, hermite_table

__all__ = [
    "KernelContext",
    "kernel_closed_form",
    "kernel_matrix",
    "kernel_oracle_semi",
    "kernel_oracle_eps",
    "kernel_gue_limit",
    "scaled_hermite_table",
]

DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True)
class KernelContext:
    """Dimension, variance ``t alpha^2`` and a diagonal field with distinct entries."""

    N: int
    variance: float
    field: ExternalField
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self):
        fld = self.field if isinstance(self.field, ExternalField) else ExternalField(tuple(self.field))
        object.__setattr__(self, "field", fld)
        if fld.N != self.N:
            raise DomainError(f"field has {fld.N} entries, expected N={self.N}")
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise DomainError("kernel variance must be positive")

    @property
    def min_gap(self) -> float:
        return self.field.min_gap

    @property
    def scale(self) -> float:
        return max(float(np.max(np.abs(self.field.array))), math.sqrt(self.variance))

    def check_distinct(self):
        if self.N > 1 and not self.min_gap > self.gap_tol * self.scale:
            raise DegenerateFieldError(
                f"field entries closer than {self.gap_tol:g} x scale (min gap {self.min_gap:.3g}); "
                "use kernel_gue_limit or separate the entries"
            )


def scaled_hermite_table(mmax: int, y, T):
    """``(T/2)^(m/2) H_m(y / sqrt(2T))`` for ``m = 0..mmax``.

    Evaluated through ``K_{m+1} = y K_m - m T K_{m-1}``, which is the
    physicists' recurrence after scaling. It is polynomial in ``T`` so a
    complex variance needs no branch choice.
    """
    y = np.asarray(y)
    out = np.empty((mmax + 1,) + y.shape, dtype=np.result_type(y.dtype, np.asarray(T).dtype, float))
    out[0] = 1.0
    if mmax >= 1:
        out[1] = y
    for m in range(1, mmax):
        out[m + 1] = y * out[m] - m * T * out[m - 1]
    return out


def _reciprocal_symmetric(h):
    """``e_m({1/(h_n - h_m')}_{m' != n})`` for all ``n`` and ``m``; shape ``(N, N)``."""
    N = h.size
    out = np.empty((N, N))
    for n in range(N):
        recip = 1.0 / (h[n] - np.delete(h, n))
        out[n] = elementary_symmetric_all(recip)
    return out


def kernel_matrix(field, variance, xp, xq=None):
    """Matrix ``C_N(xp[i], xq[j])`` for arrays of points.

    ``variance`` may be complex with positive real part (used for
    derivatives with respect to the variance along a contour).
    Degeneracy is not checked here.
    """
    h = field.array if isinstance(field, ExternalField) else np.asarray(field, dtype=float)
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    xq = xp if xq is None else np.atleast_1d(np.asarray(xq, dtype=float))
    T = variance
    N = h.size
    esym = _reciprocal_symmetric(h)
    norm = 1.0 / np.sqrt(2.0 * np.pi * T + 0j) if np.iscomplexobj(T) else 1.0 / math.sqrt(2.0 * math.pi * T)
    out = 0.0
    for n in range(N):
        weight = np.exp(-((h[n] - xp) ** 2) / (2.0 * T)) * norm
        poly = np.tensordot(esym[n], scaled_hermite_table(N - 1, xq - h[n], T), axes=1)
        out = out + weight[:, None] * poly[None, :]
    return out


def kernel_closed_form(ctx: KernelContext, x_p, x_q):
    """Closed-form kernel ``C_N(x_p, x_q)``; scalar or broadcast arrays."""
    ctx.check_distinct()
    xp_a, xq_a = np.broadcast_arrays(np.asarray(x_p, dtype=float), np.asarray(x_q, dtype=float))
    h = ctx.field.array
    T = ctx.variance
    esym = _reciprocal_symmetric(h)
    out = np.zeros(xp_a.shape)
    for n in range(ctx.N):
        weight = np.exp(-((h[n] - xp_a) ** 2) / (2.0 * T)) / math.sqrt(2.0 * math.pi * T)
        table = scaled_hermite_table(ctx.N - 1, xq_a - h[n], T)
        out = out + weight * np.tensordot(esym[n], table, axes=1)
    return out if out.ndim else float(out)


_SEMI_SPEC = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-12, max_evals=50_000)


def kernel_oracle_semi(ctx: KernelContext, x_p: float, x_q: float) -> float:
    """Kernel from the delta-reduced ``s_1`` integral and a numeric ``s_2`` integral.

    After the ``s_1`` integration the kernel is
    ``1/(2 pi T) sum_n exp(-(h_n - x_p)^2/2T) int l_n(i s_2) exp((i s_2 - x_q)^2/2T) ds_2``
    with the Lagrange basis polynomial ``l_n``. The ``s_2`` line is moved
    to ``Re = x_q`` (the integrand is entire with Gaussian decay), which
    turns the oscillating factor into ``exp(-s^2/2T)``. The remaining real
    integral is done by adaptive quadrature without Hermite polynomials.
    """
    h = ctx.field.array
    T = ctx.variance
    x_p, x_q = float(x_p), float(x_q)
    L = math.sqrt(2.0 * T * 60.0)
    total = 0.0
    for n in range(ctx.N):
        others = np.delete(h, n)
        denom = np.prod(h[n] - others)

        def integrand(s, _others=others, _denom=denom):
            zeta = x_q + 1j * s
            return float(np.real(np.prod(zeta - _others) / _denom)) * math.exp(-s * s / (2.0 * T))

        val, _ = integrate_finite(integrand, -L, L, _SEMI_SPEC, points=[0.0])
        total += math.exp(-((h[n] - x_p) ** 2) / (2.0 * T)) * val
    return total / (2.0 * math.pi * T)


def _graded_edges(lo, hi, centres, finest, ratio=1.6, base=None):
    """Panel edges on ``[lo, hi]`` refined geometrically towards each centre."""
    base = base or (hi - lo) / 24.0
    pts = {lo, hi}
    for c in centres:
        if not lo < c < hi:
            continue
        pts.add(c)
        d = finest
        while d < base:
            for s in (c - d, c + d):
                if lo < s < hi:
                    pts.add(s)
            d *= ratio
    pts.update(np.linspace(lo, hi, int(math.ceil((hi - lo) / base)) + 1).tolist())
    return np.array(sorted(pts))


def _kernel_eps_single(h, T, x_p, x_q, eps):
    sq = math.sqrt(T)
    L1 = 7.0 * sq
    lo1 = min(x_p - L1, float(np.min(h)) - 10 * eps)
    hi1 = max(x_p + L1, float(np.max(h)) + 10 * eps)
    # Lorentzians sit at the field entries; 1/(s1 - i s2) is singular at the origin
    e1 = _graded_edges(lo1, hi1, list(h) + [0.0], finest=eps / 2.0, ratio=3.0)
    L2 = math.sqrt(2.0 * T * 40.0 + x_q * x_q) + 2.0 * sq
    e2 = _graded_edges(-L2, L2, [0.0], finest=eps / 2.0, base=sq / 1.5, ratio=3.0)
    s1, w1 = gauss_legendre_panels(e1)
    s2, w2 = gauss_legendre_panels(e2)
    S1 = s1[:, None]
    S2 = s2[None, :]
    num = np.ones((1, s2.size), dtype=complex)
    den_m = np.ones((s1.size, 1), dtype=complex)
    den_p = np.ones((s1.size, 1), dtype=complex)
    for hn in h:
        num = num * (1j * S2 - hn)
        den_m = den_m * (S1 - 1j * eps - hn)
        den_p = den_p * (S1 + 1j * eps - hn)
    im_part = (num / den_m - num / den_p) / 2j
    expo = np.exp(((1j * S2 - x_q) ** 2 - (S1 - x_p) ** 2) / (2.0 * T))
    integrand = expo * im_part / (S1 - 1j * S2)
    val = -(w1 @ integrand @ w2) / (2.0 * math.pi**2 * T)
    return float(np.real(val))


def kernel_oracle_eps(ctx: KernelContext, x_p: float, x_q: float, eps: float | None = None,
                      return_sequence: bool = False):
    """Kernel by literal 2D quadrature of the double integral with imaginary increment.

    With ``eps`` given, returns the value at that increment. Otherwise the
    values at ``eps in {1e-2, 5e-3, 2.5e-3} sqrt(T)`` are Richardson
    extrapolated to zero (error model ``a + b eps + c eps^2``).

    The regularized ``s_2`` integral picks up a pole of ``1/(s_1 - i s_2)``,
    which makes the finite-eps error grow like ``eps exp(x_q^2 / 2T)``
    measured from the origin. The origin is therefore moved to ``x_q`` (or
    next to it, clear of the field entries) before integrating.
    """
    h = ctx.field.array
    T = ctx.variance
    sq = math.sqrt(T)
    # The kernel depends on coordinate differences only, so the origin of the
    # literal integral is free. The finite-eps error grows like
    # exp(x_q^2 / 2T) measured from that origin and is not analytic in eps when
    # a field entry sits on it. Put it at x_q unless that is too close to a
    # field entry.
    gap = 0.3 * sq
    candidates = [float(x_q)] + [float(v) + d for v in h for d in (-gap, gap)]
    admissible = [c for c in candidates if np.min(np.abs(h - c)) >= gap - 1e-12]
    origin = min(admissible, key=lambda c: abs(c - float(x_q)))
    h = h - origin
    x_p, x_q = float(x_p) - origin, float(x_q) - origin
    if eps is not None:
        if not eps > 0:
            raise DomainError("eps must be positive")
        return _kernel_eps_single(h, T, float(x_p), float(x_q), eps)
    seq = [_kernel_eps_single(h, T, float(x_p), float(x_q), f * sq) for f in (1e-2, 5e-3, 2.5e-3)]
    r1 = 2.0 * seq[1] - seq[0]
    r2 = 2.0 * seq[2] - seq[1]
    value = (4.0 * r2 - r1) / 3.0
    return (value, seq) if return_sequence else value


def kernel_gue_limit(N: int, variance: float, x_p, x_q):
    """Hermite kernel of the GUE without field, with the Gaussian weight on ``x_p``.

    ``exp(-x_p^2/2T)/sqrt(2 pi T) sum_{m<N} H_m(x_p/sqrt(2T)) H_m(x_q/sqrt(2T)) / (2^m m!)``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    T = float(variance)
    if not T > 0:
        raise DomainError("variance must be positive")
    xp_a, xq_a = np.broadcast_arrays(np.asarray(x_p, dtype=float), np.asarray(x_q, dtype=float))
    r = math.sqrt(2.0 * T)
    hp = hermite_table(N - 1, xp_a / r)
    hq = hermite_table(N - 1, xq_a / r)
    norms = np.array([1.0 / (2.0**m * math.factorial(m)) for m in range(N)])
    s = np.tensordot(norms, hp * hq, axes=1)
    out = np.exp(-(xp_a**2) / (2.0 * T)) / math.sqrt(2.0 * math.pi * T) * s
    return out if out.ndim else float(out)
