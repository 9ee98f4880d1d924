"""Monte Carlo sampling of ``H0 + alpha H`` and comparison against analytic curves.

Samples are drawn in fixed-size batches. Batch ``i`` uses the ``i``-th child
of ``SeedSequence(seed)``, and per-batch results are merged as integer counts
(or in batch order for floating sums), so a given seed gives bitwise-identical
output for any number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .densities import EnsembleSpec, Gaussian
from .errors import DomainError, PointMassError
from .matrixcore import (
    SymmetryClass,
    batch_eigenvalues,
    sample_gaussian,
    sample_norm_dependent,
    trace_norm_sq,
)
from .quad import gauss_legendre_panels

__all__ = [
    "Histogram",
    "MomentEstimate",
    "default_workers",
    "sample_ensemble",
    "empirical_density",
    "empirical_moment",
    "empirical_angular_constant",
    "compare_density",
    "gaussian_reference_oracle",
    "BATCH_SIZE",
]

BATCH_SIZE = 2000


def default_workers() -> int:
    """Worker threads, from ``NORMRMT_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("NORMRMT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Histogram:
    """Eigenvalue histogram normalised to ``R_1``.

    ``counts[i]`` is the number of eigenvalues in bin ``i`` over all matrices
    and ``sumsq[i]`` the sum over matrices of the squared per-matrix count,
    which gives a standard error that respects the correlation of eigenvalues
    within one matrix.
    """

    edges: np.ndarray
    counts: np.ndarray
    sumsq: np.ndarray
    n_samples: int
    N: int
    below: int = 0
    above: int = 0
    point_mass: bool = False

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n_samples * self.widths)

    @property
    def std_error(self) -> np.ndarray:
        n = self.n_samples
        mean = self.counts / n
        var = np.maximum(self.sumsq / n - mean**2, 0.0) * n / max(n - 1, 1)
        return np.sqrt(var / n) / self.widths

    def total_mass(self) -> float:
        """``sum density * width`` plus the out-of-range share; equals ``N``."""
        return float((np.sum(self.counts) + self.below + self.above) / self.n_samples)


@dataclass(frozen=True)
class MomentEstimate:
    nu: int
    mean: float
    std_error: float
    n_samples: int


def _batches(n_samples: int, batch_size: int):
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    n_full, rest = divmod(n_samples, batch_size)
    sizes = [batch_size] * n_full + ([rest] if rest else [])
    return sizes


def _run(fn, sizes, seed, workers):
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(range(len(sizes)), sizes, children))
    workers = workers or default_workers()
    if workers == 1:
        return [fn(i, s, c) for i, s, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves batch order, so merging stays deterministic
        return list(pool.map(lambda job: fn(*job), jobs))


def sample_ensemble(spec: EnsembleSpec, rng: np.random.Generator, size: int):
    """A batch of matrices ``H`` (without field and coupling) from ``spec.family``."""
    if isinstance(spec.family, Gaussian):
        return sample_gaussian(spec.sym, spec.N, spec.family.v, rng, size)
    return sample_norm_dependent(spec.family, spec.sym, spec.N, rng, size)


def _eigs(spec: EnsembleSpec, rng, size):
    if spec.alpha == 0:
        return np.broadcast_to(np.sort(spec.field.array), (size, spec.N))
    H = sample_ensemble(spec, rng, size).shifted(spec.field, spec.alpha)
    return batch_eigenvalues(H)


def empirical_density(spec: EnsembleSpec, n_samples: int, edges, seed: int = 0,
                      workers: int | None = None, batch_size: int = BATCH_SIZE) -> Histogram:
    """Histogram of the eigenvalues of ``H0 + alpha H``.

    ``edges`` is an increasing array of bin edges. Eigenvalues outside the
    range are counted in ``below``/``above``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("edges must be a strictly increasing 1-d array")
    nb = edges.size - 1

    def one(i, size, child):
        ev = _eigs(spec, np.random.default_rng(child), size)
        idx = np.searchsorted(edges, ev, side="right") - 1
        below = int(np.sum(ev < edges[0]))
        above = int(np.sum(ev >= edges[-1]))
        inside = (idx >= 0) & (idx < nb)
        # per-matrix counts: offsets keep the bincount rows apart
        rows = np.repeat(np.arange(size), spec.N).reshape(size, spec.N)
        flat = (rows * nb + idx)[inside]
        per = np.bincount(flat, minlength=size * nb).reshape(size, nb).astype(np.int64)
        return per.sum(axis=0), (per**2).sum(axis=0), below, above

    parts = _run(one, _batches(n_samples, batch_size), seed, workers)
    counts = np.sum([p[0] for p in parts], axis=0)
    sumsq = np.sum([p[1] for p in parts], axis=0)
    return Histogram(edges, counts, sumsq, n_samples, spec.N,
                     below=sum(p[2] for p in parts), above=sum(p[3] for p in parts),
                     point_mass=spec.alpha == 0)


def empirical_moment(spec: EnsembleSpec, nu: int, n_samples: int, seed: int = 0,
                     workers: int | None = None, batch_size: int = BATCH_SIZE) -> MomentEstimate:
    """Sample mean of ``(Tr H^2)^nu`` with a jackknife standard error.

    For the sample mean the delete-one jackknife variance reduces to
    ``s^2 / n``; it is evaluated in that closed form.
    """
    if nu < 0:
        raise DomainError("nu must be nonnegative")

    def one(i, size, child):
        rng = np.random.default_rng(child)
        u = np.asarray(trace_norm_sq(sample_ensemble(spec, rng, size)))
        x = u**nu
        return float(np.sum(x)), x

    parts = _run(one, _batches(n_samples, batch_size), seed, workers)
    x = np.concatenate([p[1] for p in parts])
    n = x.size
    mean = math.fsum(p[0] for p in parts) / n
    if n > 1:
        # leave-one-out means and the jackknife variance
        loo = (mean * n - x) / (n - 1)
        se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    else:
        se = math.inf
    return MomentEstimate(nu, mean, se, n)


def empirical_angular_constant(beta, N: int, n_samples: int, seed: int = 0,
                               workers: int | None = None, batch_size: int = BATCH_SIZE):
    """``int |Delta(e)|^beta d Omega`` over the unit sphere, as ``(value, std_error)``."""
    beta = SymmetryClass.of(beta).beta
    area = 2.0 * math.pi ** (0.5 * N) / math.gamma(0.5 * N)

    def one(i, size, child):
        g = np.random.default_rng(child).standard_normal((size, N))
        e = g / np.linalg.norm(g, axis=1, keepdims=True)
        iu, ju = np.triu_indices(N, 1)
        vand = np.prod(np.abs(e[:, iu] - e[:, ju]), axis=1) if N > 1 else np.ones(size)
        return vand**beta

    x = np.concatenate(_run(one, _batches(n_samples, batch_size), seed, workers))
    return area * float(np.mean(x)), area * float(np.std(x, ddof=1)) / math.sqrt(x.size)


def compare_density(hist: Histogram, analytic, order: int = 16) -> dict:
    """Compare a histogram with an analytic ``R_1``.

    The analytic bin average is computed with Gauss-Legendre quadrature of
    ``order`` nodes per bin; ``analytic`` must accept an array. Bins with no
    counts are excluded. Returns ``chi2_per_dof``, ``max_abs_z`` and the
    per-bin arrays.
    """
    if hist.point_mass:
        raise PointMassError("alpha = 0: the level density is a sum of point masses; compare counts per field entry")
    x, w = gauss_legendre_panels(hist.edges, order)
    vals = np.asarray(analytic(x), dtype=float) * w
    per_bin = vals.reshape(hist.counts.size, order).sum(axis=1) / hist.widths
    se = hist.std_error
    used = (hist.counts > 0) & (se > 0)
    z = np.zeros_like(per_bin)
    z[used] = (hist.density[used] - per_bin[used]) / se[used]
    dof = int(np.sum(used))
    return {
        "chi2_per_dof": float(np.sum(z[used] ** 2) / dof) if dof else math.nan,
        "max_abs_z": float(np.max(np.abs(z[used]))) if dof else math.nan,
        "n_bins": dof,
        "n_excluded": int(hist.counts.size - dof),
        "expected": per_bin,
        "z": z,
    }


def gaussian_reference_oracle(beta, N: int, alpha: float, n_samples: int, edges, seed: int = 0,
                              workers: int | None = None):
    """Sampled one-level density of the reference Gaussian ensemble (``v^2 = 1/2``, no field).

    Returns ``(oracle, se_oracle)``, both piecewise linear through the bin
    centres of a histogram and zero outside. ``oracle(points, field)`` fits
    the interface of :func:`normrmt.correlations.corr_rescaled_generic`.
    """
    spec = EnsembleSpec(beta, N, Gaussian(math.sqrt(0.5)), alpha=alpha)
    hist = empirical_density(spec, n_samples, edges, seed=seed, workers=workers)
    xc, dens, se = hist.centres, hist.density, hist.std_error

    def oracle(points, field):
        if np.any(field.array != 0.0):
            raise DomainError("the sampled reference was drawn without an external field")
        pts = np.atleast_1d(points)
        if pts.size != 1:
            raise DomainError("the sampled reference only provides the one-level density")
        return float(np.interp(pts[0], xc, dens, left=0.0, right=0.0))

    def se_oracle(points, field):
        return float(np.interp(np.atleast_1d(points)[0], xc, se, left=0.0, right=0.0))

    oracle.knots = se_oracle.knots = xc
    return oracle, se_oracle
