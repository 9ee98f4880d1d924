"""A finite Grassmann algebra with Berezin integration.

Generators come in pairs ``(chi_i, chi_i*)`` stored at indices ``2i`` and
``2i + 1``. An element maps canonically ordered (increasing) index tuples to
real coefficients.

Berezin convention: ``int dchi* dchi  chi chi* = 1``, so
``int dchi* dchi  chi* chi = -1``. The boson measure of the ``k = 1``,
beta = 2 supermatrix ``sigma`` with diagonal ``(a, i b)`` is ``da db / (2 pi)``,
and ``trg sigma^2 = a^2 + b^2 + 2 eta* eta``. With these choices the
normalization integral of the Gaussian superspace density equals ``+1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


from .errors import BoundaryTermError, DomainError, UnsupportedError
from .quad import MAX_DERIVATIVE_ORDER, QuadratureSpec, differentiate_n, integrate_finite, integrate_semi_infinite

__all__ = [
    "GrassmannElement",
    "grassmann_mul",
    "compose_scalar_function",
    "berezin_integrate",
    "ewps_check",
    "EwpsResult",
]


@dataclass(frozen=True)
class GrassmannElement:
    """Element of the Grassmann algebra on ``n_generators`` generators."""

    n_generators: int
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_generators
        if n < 0 or n % 2:
            raise DomainError("the number of generators must be even (pairs chi, chi*)")
        clean = {}
        for mono, c in self.coefficients.items():
            mono = tuple(mono)
            if list(mono) != sorted(set(mono)):
                raise DomainError(f"monomial {mono} is not canonically ordered")
            if mono and (mono[0] < 0 or mono[-1] >= n):
                raise DomainError(f"monomial {mono} uses an unknown generator")
            if c != 0:
                clean[mono] = float(c)
        object.__setattr__(self, "coefficients", clean)

    @classmethod
    def scalar(cls, n_generators: int, value: float) -> "GrassmannElement":
        return cls(n_generators, {(): value})

    @classmethod
    def generator(cls, n_generators: int, index: int) -> "GrassmannElement":
        return cls(n_generators, {(index,): 1.0})

    @classmethod
    def chi(cls, n_generators: int, i: int) -> "GrassmannElement":
        return cls.generator(n_generators, 2 * i)

    @classmethod
    def chi_star(cls, n_generators: int, i: int) -> "GrassmannElement":
        return cls.generator(n_generators, 2 * i + 1)

    @property
    def scalar_part(self) -> float:
        return self.coefficients.get((), 0.0)

    def nilpotent_part(self) -> "GrassmannElement":
        return GrassmannElement(self.n_generators, {m: c for m, c in self.coefficients.items() if m})

    def is_zero(self) -> bool:
        return not self.coefficients

    def is_even(self) -> bool:
        return all(len(m) % 2 == 0 for m in self.coefficients)

    def _check(self, other):
        if other.n_generators != self.n_generators:
            raise DomainError("elements live on different generator sets")

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            other = GrassmannElement.scalar(self.n_generators, float(other))
        self._check(other)
        out = dict(self.coefficients)
        for m, c in other.coefficients.items():
            out[m] = out.get(m, 0.0) + c
        return GrassmannElement(self.n_generators, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement(self.n_generators, {m: -c for m, c in self.coefficients.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            return grassmann_mul(self, other)
        return GrassmannElement(self.n_generators, {m: c * float(other) for m, c in self.coefficients.items()})

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        return self.n_generators == other.n_generators and self.coefficients == other.coefficients

    def allclose(self, other, atol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self.coefficients) | set(other.coefficients)
        return all(abs(self.coefficients.get(m, 0.0) - other.coefficients.get(m, 0.0)) <= atol for m in keys)

    def __repr__(self):
        if not self.coefficients:
            return "0"
        parts = []
        for m in sorted(self.coefficients, key=lambda t: (len(t), t)):
            label = "*".join(f"g{i}" for i in m)
            parts.append(f"{self.coefficients[m]:+g}" + (f"*{label}" if label else ""))
        return " ".join(parts)


def _merge_sign(a: tuple, b: tuple) -> int:
    # sign of the permutation sorting a + b: one transposition per inverted pair
    inversions = sum(1 for x in a for y in b if x > y)
    return -1 if inversions % 2 else 1


def grassmann_mul(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    """Product of two elements with the anticommutation sign rule."""
    a._check(b)
    out: dict = {}
    for ma, ca in a.coefficients.items():
        sa = set(ma)
        for mb, cb in b.coefficients.items():
            if sa.intersection(mb):
                continue
            mono = tuple(sorted(ma + mb))
            out[mono] = out.get(mono, 0.0) + _merge_sign(ma, mb) * ca * cb
    return GrassmannElement(a.n_generators, out)


def compose_scalar_function(f, body: GrassmannElement, derivatives=None, h0: float | None = None) -> GrassmannElement:
    """``f(s + nu) = sum_j f^(j)(s) nu^j / j!`` for ``body = s + nu`` with ``nu`` nilpotent.

    ``derivatives(j, s)`` supplies ``f^(j)(s)``; without it the derivatives
    come from :func:`normrmt.quad.differentiate_n` with step ``h0``.
    """
    n = body.n_generators
    s = body.scalar_part
    nu = body.nilpotent_part()
    power = GrassmannElement.scalar(n, 1.0)
    out = GrassmannElement(n, {})
    j = 0
    while not power.is_zero():
        if j > MAX_DERIVATIVE_ORDER:
            raise UnsupportedError(f"derivative order {j} exceeds cap {MAX_DERIVATIVE_ORDER}")
        if derivatives is not None:
            dj = float(derivatives(j, s))
        elif j == 0:
            dj = float(f(s))
        else:
            dj = differentiate_n(f, s, j, h0 or 1e-2 * max(1.0, abs(s)))
        out = out + power * (dj / math.factorial(j))
        power = grassmann_mul(power, nu)
        j += 1
    return out


def berezin_integrate(a: GrassmannElement, pair: tuple) -> GrassmannElement:
    """``int dchi* dchi`` over one generator pair with ``int dchi* dchi chi chi* = 1``.

    ``pair`` is ``(index of chi, index of chi*)``. Only monomials containing
    both generators survive; each is reordered to ``chi chi* rest`` (with the
    sign of that permutation) and the pair is removed.
    """
    i, j = pair
    if not (0 <= i < a.n_generators and 0 <= j < a.n_generators) or i == j:
        raise DomainError(f"invalid generator pair {pair}")
    out: dict = {}
    for mono, c in a.coefficients.items():
        if i not in mono or j not in mono:
            continue
        rest = tuple(g for g in mono if g not in (i, j))
        pos = [mono.index(g) for g in (i, j) + rest]
        inversions = sum(1 for x in range(len(pos)) for y in range(x + 1, len(pos)) if pos[x] > pos[y])
        out[rest] = out.get(rest, 0.0) + (-1) ** inversions * c
    return GrassmannElement(a.n_generators, out)


@dataclass(frozen=True)
class EwpsResult:
    value: float
    expected: float
    residual: float


_EWPS_SPEC = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-10, max_evals=50_000)


def ewps_check(Q, decays: bool = True, dQ=None, kinks=(), scale: float = 1.0, c: float = 1.0) -> EwpsResult:
    """Normalization integral of a ``k = 1``, beta = 2 superspace density.

    Expands ``Q(trg sigma^2)`` in the Grassmann pair, Berezin-integrates it
    and integrates the remaining boson function over the ``(a, b)`` plane in
    polar coordinates. The result must equal ``Q(0) / c``, which for the
    superspace densities of this package is 1.

    ``dQ`` is the derivative of ``Q`` (numeric by default), ``kinks`` lists
    the ``w`` where ``Q`` is not smooth and ``scale`` is a typical ``w``.
    """
    if not decays:
        raise BoundaryTermError("Q does not vanish at infinity; the radial integral keeps a boundary term")
    q0 = float(Q(0.0))
    far = [abs(float(Q(scale * 10.0**e))) for e in (4, 6, 8)]
    if not (far[-1] <= 1e-8 * abs(q0) or (far[0] > far[1] > far[2] and far[2] <= 1e-3 * abs(q0))):
        raise BoundaryTermError(f"Q does not decay: |Q| at large w = {far}")

    kinks = sorted(float(k) for k in kinks if k > 0)
    eta, eta_s = GrassmannElement.chi(2, 0), GrassmannElement.chi_star(2, 0)
    nil = grassmann_mul(eta_s, eta) * 2.0

    def derivs(j, w):
        if j == 0:
            return Q(w)
        if dQ is not None and j == 1:
            return dQ(w)
        gap = min((abs(w - k) for k in kinks), default=math.inf)
        return differentiate_n(Q, w, j, min(0.05 * scale, 0.5 * gap) if gap > 0 else 1e-8)

    def radial(r):
        body = nil + r * r
        fermion = berezin_integrate(compose_scalar_function(Q, body, derivatives=derivs), (0, 1))
        # da db / (2 pi) = r dr dphi / (2 pi); the phi integral cancels the 2 pi
        return fermion.scalar_part * r

    edges = [0.0] + [math.sqrt(k) for k in kinks]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate_finite(radial, lo, hi, _EWPS_SPEC)[0]
    total += integrate_semi_infinite(radial, edges[-1], _EWPS_SPEC, scale=math.sqrt(scale))[0]
    expected = q0 / c
    return EwpsResult(total, expected, abs(total - expected))
