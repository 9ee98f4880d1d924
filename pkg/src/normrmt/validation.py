"""Validation suites, one per acceptance criterion.

Each ``criterion_*`` function returns a :class:`CheckResult` with a pass
flag, the worst observed metric and the threshold. Monte Carlo suites draw
from ``SeedSequence(seed)`` children that are fixed per criterion, so a
report depends only on the master seed. Timings are kept apart from the
report so that repeated runs serialize to identical bytes.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .correlations import corr_gue, corr_rescaled_generic, corr_tue, level_density_tue
from .densities import (
    BoundTrace,
    EnsembleSpec,
    FixedTrace,
    Gaussian,
    GaussMonomial,
    GaussQuartic,
    NonExtensive,
    angular_integral_constant,
    eval_P,
    moment,
)
from .kernel import (
    KernelContext,
    kernel_closed_form,
    kernel_gue_limit,
    kernel_oracle_eps,
    kernel_oracle_semi,
)
from .matrixcore import ExternalField, degrees_of_freedom
from .montecarlo import (
    compare_density,
    empirical_angular_constant,
    empirical_density,
    empirical_moment,
    gaussian_reference_oracle,
)
from .quad import QuadratureSpec, gauss_legendre_panels, integrate_finite
from .spread import mix_reproduce, mix_superspace, spread_for_family
from .superalgebra import ewps_check
from .supertransform import (
    invert_transform,
    normalization_constant_c,
    superspace_density_analytic,
    superspace_density_numeric,
)

__all__ = ["CheckResult", "CRITERIA", "run_selftest"]

DEFAULT_SEED = 20261016


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    metric: float
    threshold: float
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] criterion {self.criterion:2d} {self.name}: "
                f"metric={self.metric:.3e} threshold={self.threshold:.3e} ({self.elapsed:.1f}s)")

    def report(self) -> dict:
        out = asdict(self)
        out.pop("elapsed")
        return out


def _child_seed(seed: int, criterion: int) -> int:
    # one independent stream per criterion, stable under adding criteria
    return int(np.random.SeedSequence([seed, criterion]).generate_state(1)[0])


def transform_families(beta, N):
    """The six closed-form families with the parameters used by the suites."""
    mu = degrees_of_freedom(beta, N)
    return [
        Gaussian(1.0),
        BoundTrace(1.0),
        FixedTrace(1.0),
        GaussMonomial(1.0, 2),
        GaussQuartic(1.0, 0.5),
        NonExtensive.from_lambda(2.0, mu, 1.0),
    ]


def _support_grid(family, n=50):
    if isinstance(family, (BoundTrace, FixedTrace)):
        return np.linspace(0.0, 0.98 * family.a1, n)
    return np.linspace(0.0, 20.0, n)


def criterion_1(seed=DEFAULT_SEED) -> CheckResult:
    worst, where = 0.0, None
    count = 0
    for beta in (1, 2, 4):
        for N in (2, 3, 4):
            for fam in transform_families(beta, N):
                w = _support_grid(fam)
                for k in (1, 2):
                    qa = superspace_density_analytic(fam, beta, N, k, w)
                    qn = superspace_density_numeric(fam, beta, N, k, w)
                    rel = np.abs(qn - qa) / np.maximum(np.abs(qa), 1e-300)
                    count += rel.size
                    if rel.max() > worst:
                        worst, where = float(rel.max()), f"{fam.name} beta={beta} N={N} k={k}"
    return CheckResult(1, "transformation formula vs closed forms", worst < 1e-6, worst, 1e-6,
                       {"points": count, "worst_case": where})


def criterion_2(seed=DEFAULT_SEED) -> CheckResult:
    worst_q0 = 0.0
    for beta in (1, 2, 4):
        for N in (2, 3, 4):
            for fam in transform_families(beta, N):
                for k in (1, 2):
                    c = normalization_constant_c(beta, k)
                    q0 = superspace_density_numeric(fam, beta, N, k, 0.0)
                    worst_q0 = max(worst_q0, abs(q0 - c) / c)
    ewps = {}
    cases = [
        (Gaussian(1.0), (), 1.0),
        (NonExtensive.from_lambda(2.0, degrees_of_freedom(2, 2), 1.0), (), 1.0),
        (BoundTrace(1.0), (1.0,), 1.0),
    ]
    for fam, kinks, scale in cases:
        res = ewps_check(lambda w, f=fam: superspace_density_analytic(f, 2, 2, 1, w), kinks=kinks, scale=scale)
        ewps[fam.name] = res.residual
    worst_ewps = max(ewps.values())
    passed = worst_q0 < 1e-8 and worst_ewps < 1e-6
    return CheckResult(2, "EWPS normalization", passed, max(worst_q0 / 1e-8, worst_ewps / 1e-6), 1.0,
                       {"worst_Q0_rel": worst_q0, "ewps_residuals": ewps,
                        "note": "metric is the larger of the two errors in units of their thresholds"})


def criterion_3(seed=DEFAULT_SEED) -> CheckResult:
    worst, where = 0.0, None
    cases = [(2, 2), (1, 3), (4, 2), (1, 4), (2, 4)]
    for beta, N in cases:
        mu = degrees_of_freedom(beta, N)
        for fam in (Gaussian(1.0), GaussMonomial(1.0, 2), NonExtensive.from_lambda(3.0, mu, 1.0)):
            for u in (0.5, 1.0, 2.0):
                q = (lambda w, f=fam, b=beta, n=N: superspace_density_analytic(f, b, n, 1, w))
                p_rec = invert_transform(q, beta, N, u)
                p_ref = eval_P(fam, beta, N, u)
                rel = abs(p_rec - p_ref) / abs(p_ref)
                if rel > worst:
                    worst, where = rel, f"{fam.name} mu={mu} u={u}"
    return CheckResult(3, "inversion round trip", worst < 1e-4, worst, 1e-4, {"worst_case": where})


def moment_families(beta, N):
    mu = degrees_of_freedom(beta, N)
    return [
        Gaussian(1.0),
        BoundTrace(1.0),
        FixedTrace(1.0),
        GaussMonomial(1.0, 2),
        GaussQuartic(1.0, 0.5),
        NonExtensive.from_lambda(10.0, mu, 1.0),
    ]


def criterion_4(seed=DEFAULT_SEED, n_samples=100_000) -> CheckResult:
    ss = np.random.SeedSequence(_child_seed(seed, 4))
    worst_z, worst_fixed, where = 0.0, 0.0, None
    zs = []
    idx = 0
    for beta in (1, 2, 4):
        for N in (2, 3, 4):
            for fam in moment_families(beta, N):
                spec = EnsembleSpec(beta, N, fam)
                for nu in (1, 2):
                    child = int(ss.spawn(1)[0].generate_state(1)[0])
                    idx += 1
                    est = empirical_moment(spec, nu, n_samples, seed=child)
                    exact = moment(fam, beta, N, nu).value
                    if isinstance(fam, FixedTrace):
                        worst_fixed = max(worst_fixed, abs(est.mean - exact) / exact)
                        continue
                    z = abs(est.mean - exact) / est.std_error
                    zs.append(z)
                    if z > worst_z:
                        worst_z, where = z, f"{fam.name} beta={beta} N={N} nu={nu}"
    passed = worst_z < 3.0 and worst_fixed < 1e-12
    return CheckResult(4, "moments vs Monte Carlo", passed, worst_z, 3.0,
                       {"worst_case": where, "fixed_trace_rel": worst_fixed, "comparisons": len(zs),
                        "n_over_2sigma": int(sum(z > 2 for z in zs))})


def criterion_5(seed=DEFAULT_SEED, n_samples=1_000_000) -> CheckResult:
    closed = abs(angular_integral_constant(2, 2) - 2.0 * math.pi) / (2.0 * math.pi)
    zs = {}
    for i, (beta, N) in enumerate([(1, 2), (2, 2), (4, 2), (2, 3)]):
        val, se = empirical_angular_constant(beta, N, n_samples, seed=_child_seed(seed, 50 + i))
        zs[f"beta={beta},N={N}"] = abs(val - angular_integral_constant(beta, N)) / se
    worst = max(zs.values())
    return CheckResult(5, "angular constant", closed < 1e-10 and worst < 3.0, worst, 3.0,
                       {"closed_form_rel_2pi": closed, "z": zs})


KERNEL_CONFIGS = [
    (ExternalField((-0.4, 0.6)), 0.5),
    (ExternalField((-0.5, 0.2, 0.9)), 0.5),
    (ExternalField((-1.0, -0.3, 0.4, 1.2)), 0.7),
]
EPS_CONFIGS = [
    (ExternalField((0.3,)), 0.5),
    (ExternalField((0.0, 1.0)), 0.5),
    (ExternalField((-0.4, 0.6)), 0.5),
]


def _point_grid(field, T, n=5):
    h = field.array
    return np.linspace(h.min() - 1.5 * math.sqrt(T), h.max() + 1.5 * math.sqrt(T), n)


def criterion_6(seed=DEFAULT_SEED) -> CheckResult:
    worst_semi = 0.0
    for fld, T in KERNEL_CONFIGS:
        ctx = KernelContext(fld.N, T, fld)
        xs = _point_grid(fld, T)
        for xp in xs:
            for xq in xs:
                a = kernel_closed_form(ctx, xp, xq)
                b = kernel_oracle_semi(ctx, xp, xq)
                worst_semi = max(worst_semi, abs(a - b) / max(abs(a), 1e-12))
    worst_eps = 0.0
    for fld, T in EPS_CONFIGS:
        ctx = KernelContext(fld.N, T, fld)
        xs = _point_grid(fld, T)
        for xp in xs:
            for xq in xs:
                a = kernel_closed_form(ctx, xp, xq)
                b = kernel_oracle_eps(ctx, xp, xq)
                worst_eps = max(worst_eps, abs(a - b) / max(abs(a), 1e-12))
    passed = worst_semi < 1e-6 and worst_eps < 1e-3
    return CheckResult(6, "kernel three-way agreement", passed, max(worst_semi / 1e-6, worst_eps / 1e-3), 1.0,
                       {"semi_rel": worst_semi, "eps_rel": worst_eps,
                        "note": "metric is the larger of the two errors in units of their thresholds"})


def criterion_7(seed=DEFAULT_SEED) -> CheckResult:
    N, T = 5, 0.5
    xs = np.linspace(-2.0, 2.0, 7)
    devs = []
    for eps in (1e-1, 1e-2, 1e-3):
        fld = ExternalField(tuple(eps * n for n in range(N)))
        ctx = KernelContext(N, T, fld)
        d = 0.0
        for xp in xs:
            for xq in xs:
                d = max(d, abs(kernel_closed_form(ctx, xp, xq) - kernel_gue_limit(N, T, xp, xq)))
        devs.append(d)
    orders = [math.log10(devs[i] / devs[i + 1]) for i in range(2)]
    worst = min(orders)
    return CheckResult(7, "confluent limit", worst >= 0.9, worst, 0.9,
                       {"deviations": devs, "observed_orders": orders,
                        "note": "metric is the smallest observed convergence order in eps"})


def criterion_8(seed=DEFAULT_SEED) -> CheckResult:
    spec = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10, max_evals=200_000)
    worst = 0.0
    for N in range(1, 7):
        fields = [
            np.linspace(-1.0, 1.0, N) if N > 1 else np.array([0.0]),
            np.linspace(-0.3, 2.0, N) ** 2 * 0.5 + 0.1 * np.arange(N),
            np.sort(np.sin(1.7 * np.arange(1, N + 1)) * 2.0),
        ]
        for h in fields:
            fld = ExternalField(tuple(h))
            for T in (0.3, 1.5):
                lo = fld.array.min() - 12.0 * math.sqrt(T) - 2.0 * math.sqrt(N * T)
                hi = fld.array.max() + 12.0 * math.sqrt(T) + 2.0 * math.sqrt(N * T)
                pts = list(fld.array)
                val, _ = integrate_finite(lambda x: corr_gue([x], T, fld), lo, hi, spec, points=pts)
                worst = max(worst, abs(val - N))
    return CheckResult(8, "level density normalization", worst < 1e-3, worst, 1e-3, {})


TUE_FIELD = ExternalField((-1.0, -0.5, 0.0, 0.4, 0.9, 1.5))


def tue_spec():
    fam = NonExtensive.from_lambda(4.0, degrees_of_freedom(2, 6), 1.0)
    return EnsembleSpec(2, 6, fam, alpha=1.0, field=TUE_FIELD)


def criterion_9(seed=DEFAULT_SEED, n_samples=200_000) -> CheckResult:
    spec = tue_spec()
    edges = np.linspace(-3.5, 4.0, 41)
    hist = empirical_density(spec, n_samples, edges, seed=_child_seed(seed, 9))
    cmp = compare_density(hist, lambda x: level_density_tue(x, spec))
    gspec = EnsembleSpec(2, 3, Gaussian(0.8), alpha=1.3, field=ExternalField((-0.5, 0.2, 0.9)))
    worst_g = 0.0
    for pts in ([0.1], [0.1, 0.5], [-0.3, 0.4, 1.2], [2.0, -1.1]):
        a = corr_tue(pts, gspec)
        b = corr_gue(pts, 0.64 * 1.69, gspec.field)
        worst_g = max(worst_g, abs(a - b) / abs(b))
    passed = cmp["chi2_per_dof"] < 2.0 and cmp["max_abs_z"] < 4.0 and worst_g < 1e-10
    return CheckResult(9, "TUE end to end", passed, cmp["chi2_per_dof"], 2.0,
                       {"chi2_per_dof": cmp["chi2_per_dof"], "max_abs_z": cmp["max_abs_z"],
                        "bins": cmp["n_bins"], "gaussian_identity_rel": worst_g,
                        "outside_range": hist.below + hist.above})


def criterion_10(seed=DEFAULT_SEED) -> CheckResult:
    spec = tue_spec()
    sym_ok = True
    rng = np.random.default_rng(_child_seed(seed, 10))
    for _ in range(5):
        x, y = rng.uniform(-2.0, 2.5, 2)
        sym_ok &= corr_tue([x, y], spec) == corr_tue([y, x], spec)
        sym_ok &= corr_gue([x, y], 0.5, spec.field) == corr_gue([y, x], 0.5, spec.field)
    N, T = 30, 1.0
    fld = ExternalField(tuple(np.arange(N) - 0.5 * (N - 1)))
    worst = 0.0
    for x in (-5.0, -2.3, 0.4):
        r1x = corr_gue([x], T, fld)
        y = x + 10.0 / r1x
        r1y = corr_gue([y], T, fld)
        r2 = corr_gue([x, y], T, fld)
        worst = max(worst, abs(r2 - r1x * r1y) / (r1x * r1y))
    return CheckResult(10, "determinant structure", bool(sym_ok) and worst < 0.01, worst, 0.01,
                       {"permutation_symmetry_exact": bool(sym_ok)})


def criterion_11(seed=DEFAULT_SEED, n_samples=100_000, n_reference=2_000_000) -> CheckResult:
    fam = NonExtensive.from_lambda(3.0, degrees_of_freedom(1, 4), 1.0)
    spec = EnsembleSpec(1, 4, fam, alpha=1.0)
    spread = spread_for_family(fam, 1, 4)
    oracle, se_oracle = gaussian_reference_oracle(1, 4, 1.0, n_reference, np.linspace(-7.0, 7.0, 281),
                                                  seed=_child_seed(seed, 110))
    hist = empirical_density(spec, n_samples, np.linspace(-5.0, 5.0, 31), seed=_child_seed(seed, 111))
    x, w = gauss_legendre_panels(hist.edges, 4)
    nb = hist.counts.size
    pred = np.array([corr_rescaled_generic([xi], spec, spread, oracle) for xi in x])
    pred_se = np.array([corr_rescaled_generic([xi], spec, spread, se_oracle) for xi in x])
    pred = (pred * w).reshape(nb, 4).sum(axis=1) / hist.widths
    # the oracle error is propagated as if fully correlated across the mixture
    pred_se = (pred_se * w).reshape(nb, 4).sum(axis=1) / hist.widths
    z = (hist.density - pred) / np.sqrt(hist.std_error**2 + pred_se**2)
    worst = float(np.max(np.abs(z)))
    return CheckResult(11, "generic-beta rescaling", worst < 3.0, worst, 3.0,
                       {"bins": int(nb), "median_oracle_to_direct_se": float(np.median(pred_se / hist.std_error))})


def criterion_12(seed=DEFAULT_SEED) -> CheckResult:
    worst_p, worst_q = 0.0, 0.0
    N = 3
    for beta in (1, 2, 4):
        mu = degrees_of_freedom(beta, N)
        for fam in (Gaussian(1.0), NonExtensive.from_lambda(2.0, mu, 1.0), GaussMonomial(1.0, 2)):
            sp = spread_for_family(fam, beta, N)
            u = np.linspace(0.05, 6.0, 20)
            pm = mix_reproduce(sp, fam, beta, N, u)
            pe = eval_P(fam, beta, N, u)
            worst_p = max(worst_p, float(np.max(np.abs(pm - pe) / np.abs(pe))))
            w = np.linspace(0.0, 6.0, 20)
            for k in (1, 2):
                qm = mix_superspace(sp, beta, k, w)
                qa = superspace_density_analytic(fam, beta, N, k, w)
                worst_q = max(worst_q, float(np.max(np.abs(qm - qa) / np.abs(qa))))
    worst = max(worst_p, worst_q)
    return CheckResult(12, "spread reproduction", worst < 1e-6, worst, 1e-6, {"P_rel": worst_p, "Q_rel": worst_q})


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
}


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CheckResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](seed)
    res.elapsed = time.perf_counter() - t0
    return res


def run_selftest(seed: int = DEFAULT_SEED, criteria=None, log=None):
    """Run the suites and return ``(report, results)``.

    The report is a plain dict without timings; ``results`` keeps the
    :class:`CheckResult` objects including elapsed times.
    """
    numbers = sorted(criteria) if criteria else sorted(CRITERIA)
    results = []
    for n in numbers:
        res = run_criterion(n, seed)
        if log is not None:
            log(res.line())
        results.append(res)
    report = {
        "seed": seed,
        "criteria": [r.report() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    return report, results
