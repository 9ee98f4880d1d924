"""Matrix representations for beta = 1, 2, 4, sampling and eigenvalues.

Storage conventions
-------------------
* beta = 1: real symmetric ``N x N``.
* beta = 2: complex Hermitian ``N x N``.
* beta = 4: complex ``2N x 2N`` with the quaternion embedding
  ``[[A, B], [-conj(B), conj(A)]]``, ``A`` Hermitian and ``B`` antisymmetric.
  Its eigenvalues come in exactly degenerate (Kramers) pairs.

Sampling works in "normal form" coordinates where the density is
``exp(-Tr H^2 / 2)``: every one of the ``mu`` independent real coordinates
then enters ``Tr H^2`` as a standard normal square, so a matrix with a given
norm is a radius times a uniformly distributed direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "SymmetryClass",
    "RandomMatrix",
    "ExternalField",
    "degrees_of_freedom",
    "trace_norm_sq",
    "standard_normal_matrices",
    "sample_gaussian",
    "sample_norm_dependent",
    "eigenvalues",
    "batch_eigenvalues",
    "householder_tridiagonalize",
    "tridiagonal_eigenvalues",
    "jacobi_eigenvalues",
]


@dataclass(frozen=True)
class SymmetryClass:
    """Dyson index together with the derived ``gamma`` and ``zeta``."""

    beta: int

    def __post_init__(self):
        if self.beta not in (1, 2, 4):
            raise DomainError(f"Dyson index must be 1, 2 or 4, got {self.beta!r}")

    @property
    def gamma(self) -> int:
        return 2 if self.beta == 4 else 1

    @property
    def zeta(self) -> int:
        return 2 if self.beta == 2 else 4

    @classmethod
    def of(cls, beta) -> "SymmetryClass":
        return beta if isinstance(beta, cls) else cls(int(beta))

    def storage_dim(self, N: int) -> int:
        return 2 * N if self.beta == 4 else N


def degrees_of_freedom(sym, N: int) -> int:
    """Number of independent real matrix elements ``mu = N + beta N (N-1) / 2``."""
    sym = SymmetryClass.of(sym)
    if N < 1:
        raise DomainError("N must be >= 1")
    return N + sym.beta * N * (N - 1) // 2


@dataclass
class RandomMatrix:
    """One matrix or a batch of matrices of a given symmetry class.

    ``data`` has shape ``(..., d, d)`` with ``d = N`` (``2N`` for beta = 4).
    """

    sym: SymmetryClass
    N: int
    data: np.ndarray

    def __post_init__(self):
        self.sym = SymmetryClass.of(self.sym)
        d = self.sym.storage_dim(self.N)
        if self.data.shape[-2:] != (d, d):
            raise DomainError(f"storage shape {self.data.shape} does not match N={self.N}")

    @property
    def batch_shape(self):
        return self.data.shape[:-2]

    def __len__(self):
        return self.data.shape[0] if self.data.ndim > 2 else 1

    def shifted(self, field: "ExternalField", alpha: float) -> "RandomMatrix":
        """``H0 + alpha * H``."""
        return RandomMatrix(self.sym, self.N, field.matrix(self.sym) + alpha * self.data)


@dataclass(frozen=True)
class ExternalField:
    """Diagonal external field ``H0`` given by its ``N`` entries."""

    entries: tuple = field(default_factory=tuple)

    def __post_init__(self):
        vals = tuple(float(v) for v in np.ravel(self.entries))
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("external field entries must be finite")
        object.__setattr__(self, "entries", vals)

    @classmethod
    def zeros(cls, N: int) -> "ExternalField":
        return cls((0.0,) * N)

    @property
    def N(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    @property
    def min_gap(self) -> float:
        h = np.sort(self.array)
        return float(np.min(np.diff(h))) if h.size > 1 else math.inf

    def is_distinct(self, tol: float = 0.0) -> bool:
        return self.min_gap > tol

    def matrix(self, sym) -> np.ndarray:
        """Storage-level diagonal matrix (``2N x 2N`` with pairing for beta = 4)."""
        sym = SymmetryClass.of(sym)
        h = self.array
        if sym.beta == 4:
            h = np.concatenate([h, h])
        return np.diag(h).astype(complex if sym.beta != 1 else float)

    def scaled(self, factor: float) -> "ExternalField":
        return ExternalField(tuple(factor * v for v in self.entries))


def trace_norm_sq(H: RandomMatrix):
    """``Tr H^2`` with ``Tr = tr`` for beta = 1, 2 and ``Tr = tr / 2`` for beta = 4."""
    u = np.sum(np.abs(H.data) ** 2, axis=(-2, -1))
    if H.sym.beta == 4:
        u = 0.5 * u
    return u if np.ndim(u) else float(u)


def standard_normal_matrices(sym, N: int, rng: np.random.Generator, size=None) -> RandomMatrix:
    """Matrices with density proportional to ``exp(-Tr H^2 / 2)``.

    In this normalization ``Tr H^2`` is chi-squared with ``mu`` degrees of
    freedom.
    """
    sym = SymmetryClass.of(sym)
    shape = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    if sym.beta == 1:
        g = rng.standard_normal(shape + (N, N))
        data = (g + np.swapaxes(g, -1, -2)) / 2.0
    elif sym.beta == 2:
        g = rng.standard_normal(shape + (N, N)) + 1j * rng.standard_normal(shape + (N, N))
        data = (g + np.conj(np.swapaxes(g, -1, -2))) / 2.0
    else:
        ga = rng.standard_normal(shape + (N, N)) + 1j * rng.standard_normal(shape + (N, N))
        a = (ga + np.conj(np.swapaxes(ga, -1, -2))) / 2.0
        gb = rng.standard_normal(shape + (N, N)) + 1j * rng.standard_normal(shape + (N, N))
        b = (gb - np.swapaxes(gb, -1, -2)) / 2.0
        top = np.concatenate([a, b], axis=-1)
        bottom = np.concatenate([-np.conj(b), np.conj(a)], axis=-1)
        data = np.concatenate([top, bottom], axis=-2)
    # off-diagonal coordinates get half the diagonal variance, as the weight requires
    return RandomMatrix(sym, N, data)


def sample_gaussian(sym, N: int, v: float, rng: np.random.Generator, size=None) -> RandomMatrix:
    """Gaussian ensemble with density proportional to ``exp(-beta Tr H^2 / (4 v^2))``."""
    sym = SymmetryClass.of(sym)
    if not v > 0:
        raise DomainError("variance parameter v must be positive")
    g = standard_normal_matrices(sym, N, rng, size)
    g.data *= math.sqrt(2.0 / sym.beta) * v
    return g


def sample_norm_dependent(family, sym, N: int, rng: np.random.Generator, size=None) -> RandomMatrix:
    """Norm-dependent ensemble ``P(Tr H^2)``: uniform direction times a sampled radius.

    The direction is a normal-form Gaussian matrix scaled to unit norm; the
    squared radius ``u`` is drawn from the density proportional to
    ``u^(mu/2 - 1) P(u)`` (see :func:`normrmt.densities.sample_trace_norm`).
    """
    from .densities import sample_trace_norm

    sym = SymmetryClass.of(sym)
    g = standard_normal_matrices(sym, N, rng, size)
    norm = np.sqrt(trace_norm_sq(g))
    u = sample_trace_norm(family, sym, N, rng, size)
    factor = np.sqrt(u) / norm
    g.data = g.data * (np.asarray(factor)[..., None, None] if np.ndim(factor) else factor)
    return g


# -- eigenvalues ------------------------------------------------------------


def householder_tridiagonalize(a: np.ndarray):
    """Reduce a Hermitian matrix to real symmetric tridiagonal form.

    Returns ``(diag, offdiag)``. Complex off-diagonal entries are made real
    by a diagonal unitary similarity, which only changes their phases.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # two-sided application of P = I - 2 v v^H
        sub = a[k + 1 :, :]
        sub -= 2.0 * np.outer(v, np.conj(v) @ sub)
        sub = a[:, k + 1 :]
        sub -= 2.0 * np.outer(sub @ v, np.conj(v))
    diag = np.real(np.diag(a)).copy()
    off = np.abs(np.diag(a, -1)).copy()
    return diag, off


def tridiagonal_eigenvalues(diag, off, max_iter: int = 60):
    """Eigenvalues of a real symmetric tridiagonal matrix by implicit-shift QL."""
    d = np.array(diag, dtype=float)
    n = d.size
    e = np.zeros(n)
    e[: n - 1] = off
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ConvergenceError("implicit QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi eigenvalues of a Hermitian matrix (via its real embedding).

    The real ``2n x 2n`` embedding ``[[Re, -Im], [Im, Re]]`` doubles every
    eigenvalue; one copy of each pair is returned.
    """
    a = np.asarray(a)
    if np.iscomplexobj(a):
        m = np.block([[a.real, -a.imag], [a.imag, a.real]])
    else:
        m = np.array(a, dtype=float)
    k = m.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(m, -1) ** 2))
        if off <= tol * np.linalg.norm(m):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                if m[p, q] == 0.0:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * m[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rot = m[:, p].copy()
                m[:, p] = c * rot - s * m[:, q]
                m[:, q] = s * rot + c * m[:, q]
                rot = m[p, :].copy()
                m[p, :] = c * rot - s * m[q, :]
                m[q, :] = s * rot + c * m[q, :]
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    ev = np.sort(np.diag(m))
    return ev[::2] if np.iscomplexobj(a) else ev


def _collapse_pairs(ev: np.ndarray, axis: int = -1) -> np.ndarray:
    ev = np.sort(ev, axis=axis)
    return 0.5 * (ev[..., 0::2] + ev[..., 1::2])


def eigenvalues(H: RandomMatrix, method: str = "householder-ql") -> np.ndarray:
    """Ascending eigenvalues of a single matrix (``N`` values; beta = 4 pairs collapsed).

    ``method`` is ``"householder-ql"`` (default; falls back to Jacobi when
    QL stalls), ``"jacobi"``, or ``"lapack"``.
    """
    a = H.data
    if a.ndim != 2:
        raise DomainError("eigenvalues() takes a single matrix; use batch_eigenvalues for batches")
    if method == "lapack":
        ev = np.linalg.eigvalsh(a)
    elif method == "jacobi":
        ev = jacobi_eigenvalues(a)
    elif method == "householder-ql":
        try:
            ev = tridiagonal_eigenvalues(*householder_tridiagonalize(a))
        except ConvergenceError:
            ev = jacobi_eigenvalues(a)
    else:
        raise DomainError(f"unknown eigenvalue method {method!r}")
    ev = np.sort(ev)
    return _collapse_pairs(ev) if H.sym.beta == 4 else ev


def batch_eigenvalues(H: RandomMatrix) -> np.ndarray:
    """Eigenvalues of a batch of matrices with batched LAPACK, shape ``batch + (N,)``."""
    ev = np.linalg.eigvalsh(H.data)
    return _collapse_pairs(ev) if H.sym.beta == 4 else ev
