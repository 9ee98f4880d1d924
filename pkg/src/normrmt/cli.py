"""Command-line front end.

Every subcommand takes its settings from flags, from a ``key = value``
config file given with ``--config``, or both (flags win). Results go to
``--output`` or standard output as CSV or JSON, each with a metadata block
holding the tool version, a hash of the resolved config and the seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import NormRMTError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FAMILIES = ("gaussian", "bound-trace", "fixed-trace", "gauss-monomial", "gauss-quartic", "non-extensive")

# name -> (parser, default, help)
OPTIONS = {
    "family": (str, None, "density family: " + ", ".join(FAMILIES)),
    "v": (float, None, "Gaussian variance parameter v"),
    "a1": (float, None, "a1 parameter"),
    "a2": (float, None, "a2 parameter (gauss-quartic)"),
    "m": (int, None, "monomial power m (gauss-monomial)"),
    "q": (float, None, "non-extensive q"),
    "lambda": (float, None, "non-extensive Lambda, alternative to q"),
    "kappa": (float, 1.0, "non-extensive kappa"),
    "beta": (int, 2, "Dyson index 1, 2 or 4"),
    "N": (int, 2, "matrix dimension"),
    "k": (int, 1, "superspace size k"),
    "alpha": (float, 1.0, "coupling alpha in H0 + alpha H"),
    "field": (str, None, "external field entries, comma separated"),
    "variance": (float, None, "kernel variance T"),
    "grid": (str, None, "grid as min:max:points"),
    "nu": (str, "0,1,2", "moment orders, comma separated"),
    "points": (str, None, "correlation points, comma separated"),
    "samples": (int, 100_000, "Monte Carlo sample budget"),
    "seed": (int, 20261016, "master seed"),
    "threads": (int, None, "worker threads (default: NORMRMT_THREADS or 1)"),
    "criteria": (str, None, "selftest criteria, comma separated (default all)"),
    "format": (str, None, "output format csv or json"),
    "output": (str, None, "output path (default standard output)"),
}

FAMILY_KEYS = ("family", "v", "a1", "a2", "m", "q", "lambda", "kappa")
ENSEMBLE_KEYS = FAMILY_KEYS + ("beta", "N")

COMMANDS = {
    "moments": (ENSEMBLE_KEYS + ("nu",), "json", "analytic moments of Tr H^2"),
    "density": (ENSEMBLE_KEYS + ("grid",), "csv", "P(u) on a grid"),
    "transform": (ENSEMBLE_KEYS + ("k", "grid"), "csv", "superspace density, quadrature vs closed form"),
    "invert": (ENSEMBLE_KEYS + ("k", "grid"), "csv", "P recovered from Q by differentiation"),
    "spread-check": (ENSEMBLE_KEYS + ("k", "grid"), "csv", "spread mixture vs P and Q"),
    "kernel": (("N", "field", "variance", "grid"), "csv", "kernel closed form vs semi-analytic oracle"),
    "corr": (ENSEMBLE_KEYS + ("alpha", "field", "points", "grid"), "json", "correlation functions (beta = 2)"),
    "mc-validate": (ENSEMBLE_KEYS + ("alpha", "field", "grid", "samples", "seed", "threads"), "json",
                    "Monte Carlo comparison report"),
    "ewps": (FAMILY_KEYS + ("N",), "json", "superspace normalization check (k = 1, beta = 2)"),
    "selftest": (("seed", "criteria", "threads"), "json", "run the validation suites"),
}
COMMON = ("format", "output")


class UsageError(Exception):
    """Invalid configuration; reported with exit code 2."""


# -- config ------------------------------------------------------------------


def read_config_file(path: str) -> dict:
    """Parse a ``key = value`` file. ``#`` starts a comment; ``-`` and ``_`` in keys are equivalent."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "n":
            key = "N"
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _convert(key, value):
    conv = OPTIONS[key][0]
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid value for {key}: {value!r}") from exc


def resolve_config(command: str, flags: dict, file_values: dict) -> dict:
    allowed = set(COMMANDS[command][0]) | set(COMMON)
    for key in list(file_values) + [k for k, v in flags.items() if v is not None]:
        if key not in allowed:
            raise UsageError(f"option {key!r} does not apply to {command}")
    cfg = {}
    for key in sorted(allowed):
        if flags.get(key) is not None:
            cfg[key] = _convert(key, flags[key])
        elif key in file_values:
            cfg[key] = _convert(key, file_values[key])
        else:
            cfg[key] = OPTIONS[key][1]
    if cfg.get("format") is None:
        cfg["format"] = COMMANDS[command][1]
    if cfg["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if "beta" in cfg and cfg["beta"] not in (1, 2, 4):
        raise UsageError("beta must be 1, 2 or 4")
    for key in ("N", "k", "samples"):
        if key in cfg and cfg[key] is not None and cfg[key] < 1:
            raise UsageError(f"{key} must be >= 1")
    return cfg


def _floats(text, name):
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"{name} must be a comma separated list of numbers") from exc


def _grid(cfg, default=None):
    text = cfg.get("grid") or default
    if text is None:
        raise UsageError("a grid min:max:points is required")
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError("grid must be min:max:points")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError("grid must be min:max:points") from exc
    if n < 1 or hi < lo:
        raise UsageError("grid needs points >= 1 and max >= min")
    return np.linspace(lo, hi, n)


def build_family(cfg):
    from .errors import DomainError

    try:
        return _build_family(cfg)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _build_family(cfg):
    from .densities import BoundTrace, FixedTrace, Gaussian, GaussMonomial, GaussQuartic, NonExtensive
    from .matrixcore import degrees_of_freedom

    name = cfg.get("family")
    if name is None:
        raise UsageError("--family is required")

    def need(key):
        if cfg.get(key) is None:
            raise UsageError(f"family {name} needs --{key}")
        return cfg[key]

    for key in FAMILY_KEYS[1:]:
        if key == "kappa":
            continue
        if cfg.get(key) is not None and key not in _FAMILY_PARAMS.get(name, ()):
            raise UsageError(f"parameter {key} does not apply to family {name}")
    if name == "gaussian":
        return Gaussian(need("v"))
    if name == "bound-trace":
        return BoundTrace(need("a1"))
    if name == "fixed-trace":
        return FixedTrace(need("a1"))
    if name == "gauss-monomial":
        return GaussMonomial(need("a1"), need("m"))
    if name == "gauss-quartic":
        return GaussQuartic(need("a1"), need("a2"))
    if name == "non-extensive":
        kappa = cfg["kappa"] if cfg.get("kappa") is not None else 1.0
        if cfg.get("q") is not None and cfg.get("lambda") is not None:
            raise UsageError("give either --q or --lambda, not both")
        if cfg.get("lambda") is not None:
            return NonExtensive.from_lambda(cfg["lambda"], degrees_of_freedom(cfg.get("beta", 2), cfg["N"]), kappa)
        return NonExtensive(need("q"), kappa)
    raise UsageError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")


_FAMILY_PARAMS = {
    "gaussian": ("v",),
    "bound-trace": ("a1",),
    "fixed-trace": ("a1",),
    "gauss-monomial": ("a1", "m"),
    "gauss-quartic": ("a1", "a2"),
    "non-extensive": ("q", "lambda"),
}


def _field(cfg, N):
    from .matrixcore import ExternalField

    if cfg.get("field") is None:
        return ExternalField.zeros(N)
    vals = _floats(cfg["field"], "field")
    if len(vals) != N:
        raise UsageError(f"field has {len(vals)} entries, expected N={N}")
    return ExternalField(tuple(vals))


# -- output ------------------------------------------------------------------


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _clean(obj):
    # JSON has no inf/nan: encode them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    return obj


def metadata(command, cfg):
    canon = json.dumps({k: v for k, v in cfg.items() if k not in ("output", "threads")}, sort_keys=True)
    return {
        "tool": "normrmt",
        "version": __version__,
        "command": command,
        "config": json.loads(canon),
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": cfg.get("seed"),
    }


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def render(command, cfg, table=None, payload=None) -> str:
    """CSV (``table = (columns, rows)``) or JSON (``payload`` dict) with metadata."""
    meta = metadata(command, cfg)
    if cfg["format"] == "csv":
        if table is None:
            payload = payload or {}
            table = (["key", "value"], [(k, v) for k, v in sorted(_flatten(payload).items())])
        buf = io.StringIO()
        for key in ("tool", "version", "command", "config_sha256", "seed"):
            buf.write(f"# {key}: {meta[key]}\n")
        buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table[0])
        for row in table[1]:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if payload is None:
        cols, rows = table
        payload = {"columns": list(cols), "rows": [[_json_default(v) if isinstance(v, np.generic) else v
                                                    for v in row] for row in rows]}
    doc = {"schema": f"normrmt/{command}/{SCHEMA_VERSION}", "meta": meta, "result": _clean(payload)}
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


# -- commands ----------------------------------------------------------------


def cmd_moments(cfg):
    from .densities import moment

    fam = build_family(cfg)
    nus = [int(x) for x in _floats(cfg["nu"], "nu")]
    reports = [moment(fam, cfg["beta"], cfg["N"], nu) for nu in nus]
    rows = [(r.nu, r.value, r.method, r.err_est) for r in reports]
    return (("nu", "value", "method", "err_est"), rows), {
        "moments": {str(r.nu): r.value for r in reports},
        "details": [{"nu": r.nu, "value": r.value, "method": r.method, "err_est": r.err_est} for r in reports],
    }


def cmd_density(cfg):
    from .densities import eval_P

    fam = build_family(cfg)
    u = _grid(cfg)
    p = eval_P(fam, cfg["beta"], cfg["N"], u)
    return (("u", "P"), list(zip(u, np.atleast_1d(p)))), None


def cmd_transform(cfg):
    from .supertransform import superspace_density_analytic, superspace_density_numeric

    fam = build_family(cfg)
    w = _grid(cfg)
    qn = np.atleast_1d(superspace_density_numeric(fam, cfg["beta"], cfg["N"], cfg["k"], w))
    qa = np.atleast_1d(superspace_density_analytic(fam, cfg["beta"], cfg["N"], cfg["k"], w))
    res = np.abs(qn - qa) / np.maximum(np.abs(qa), 1e-300)
    return (("w", "Q_numeric", "Q_analytic", "residual"), list(zip(w, qn, qa, res))), None


def cmd_invert(cfg):
    from .densities import eval_P
    from .supertransform import invert_transform, superspace_density_analytic

    fam = build_family(cfg)
    beta, N, k = cfg["beta"], cfg["N"], cfg["k"]
    rows = []
    for u in _grid(cfg):
        p, err = invert_transform(lambda w: superspace_density_analytic(fam, beta, N, k, w), beta, N, u, k=k,
                                  return_error=True)
        exact = eval_P(fam, beta, N, u)
        rows.append((u, p, exact, abs(p - exact) / max(abs(exact), 1e-300), err))
    return (("u", "P_recovered", "P_exact", "rel_error", "err_est"), rows), None


def cmd_spread_check(cfg):
    from .densities import eval_P
    from .spread import mix_reproduce, mix_superspace, spread_for_family
    from .supertransform import superspace_density_analytic

    fam = build_family(cfg)
    beta, N, k = cfg["beta"], cfg["N"], cfg["k"]
    sp = spread_for_family(fam, beta, N)
    u = _grid(cfg)
    pm = np.atleast_1d(mix_reproduce(sp, fam, beta, N, u))
    pe = np.atleast_1d(eval_P(fam, beta, N, u))
    qm = np.atleast_1d(mix_superspace(sp, beta, k, u))
    qa = np.atleast_1d(superspace_density_analytic(fam, beta, N, k, u))
    rp = np.abs(pm - pe) / np.maximum(np.abs(pe), 1e-300)
    rq = np.abs(qm - qa) / np.maximum(np.abs(qa), 1e-300)
    cols = ("u", "P_mixed", "P_exact", "P_residual", "Q_mixed", "Q_analytic", "Q_residual")
    return (cols, list(zip(u, pm, pe, rp, qm, qa, rq))), None


def cmd_kernel(cfg):
    from .kernel import KernelContext, kernel_closed_form, kernel_oracle_semi

    N = cfg["N"]
    field = _field(cfg, N)
    if cfg.get("variance") is None:
        raise UsageError("--variance is required")
    ctx = KernelContext(N, cfg["variance"], field)
    ctx.check_distinct()
    xs = _grid(cfg)
    rows = []
    for xp in xs:
        for xq in xs:
            a = kernel_closed_form(ctx, xp, xq)
            b = kernel_oracle_semi(ctx, xp, xq)
            rows.append((xp, xq, a, b, abs(a - b) / max(abs(a), 1e-300)))
    return (("x_p", "x_q", "closed_form", "semi_oracle", "rel_diff"), rows), None


def cmd_corr(cfg):
    from .correlations import corr_tue, level_density_tue
    from .densities import EnsembleSpec

    fam = build_family(cfg)
    spec = EnsembleSpec(cfg["beta"], cfg["N"], fam, alpha=cfg["alpha"], field=_field(cfg, cfg["N"]))
    if cfg.get("points"):
        pts = _floats(cfg["points"], "points")
        if not 1 <= len(pts) <= spec.N:
            raise UsageError("need between 1 and N points")
        val = corr_tue(pts, spec)
        return (("k", "points", "R_k"), [(len(pts), " ".join(_fmt(p) for p in pts), val)]), {
            "k": len(pts), "points": pts, "R_k": val}
    xs = _grid(cfg)
    r1 = level_density_tue(xs, spec)
    return (("x", "R_1"), list(zip(xs, r1))), None


def cmd_mc_validate(cfg):
    from .correlations import level_density_tue
    from .densities import EnsembleSpec, FixedTrace, angular_integral_constant, moment
    from .errors import UnavailableError
    from .montecarlo import compare_density, empirical_angular_constant, empirical_density, empirical_moment
    from .spread import spread_for_family

    fam = build_family(cfg)
    beta, N, n = cfg["beta"], cfg["N"], cfg["samples"]
    spec = EnsembleSpec(beta, N, fam, alpha=cfg["alpha"], field=_field(cfg, N))
    ss = np.random.SeedSequence(cfg["seed"])
    seeds = [int(c.generate_state(1)[0]) for c in ss.spawn(4)]
    workers = cfg.get("threads")
    out = {"moments": [], "angular_constant": None, "level_density": None}
    for i, nu in enumerate((1, 2)):
        exact = moment(fam, beta, N, nu).value
        est = empirical_moment(spec, nu, n, seed=seeds[i], workers=workers)
        z = abs(est.mean - exact) / est.std_error if est.std_error > 0 else (0.0 if est.mean == exact else math.inf)
        out["moments"].append({"nu": nu, "analytic": exact, "mc_mean": est.mean, "std_error": est.std_error,
                               "z": z, "pass": bool(z < 3.0 or (isinstance(fam, FixedTrace)
                                                                 and abs(est.mean - exact) <= 1e-12 * exact))})
    val, se = empirical_angular_constant(beta, N, n, seed=seeds[2], workers=workers)
    exact = angular_integral_constant(beta, N)
    out["angular_constant"] = {"analytic": exact, "mc_mean": val, "std_error": se,
                               "z": abs(val - exact) / se if se > 0 else 0.0}
    if beta == 2 and spec.alpha > 0 and spec.field.is_distinct():
        try:
            sp = spread_for_family(fam, beta, N)
        except UnavailableError as exc:
            out["level_density"] = {"skipped": str(exc)}
        else:
            h = spec.field.array
            edges = _grid(cfg, default=f"{h.min() - 3.0}:{h.max() + 3.0}:41")
            hist = empirical_density(spec, n, edges, seed=seeds[3], workers=workers)
            cmp = compare_density(hist, lambda x: level_density_tue(x, spec, sp))
            out["level_density"] = {"chi2_per_dof": cmp["chi2_per_dof"], "max_abs_z": cmp["max_abs_z"],
                                    "bins": cmp["n_bins"], "outside_range": hist.below + hist.above}
    else:
        out["level_density"] = {"skipped": "needs beta = 2, alpha > 0 and a distinct field"}
    return None, out


def cmd_ewps(cfg):
    from .densities import BoundTrace, FixedTrace
    from .superalgebra import ewps_check
    from .supertransform import superspace_density_analytic

    cfg = dict(cfg, beta=2)
    fam = build_family(cfg)
    kinks = (fam.a1,) if isinstance(fam, (BoundTrace, FixedTrace)) else ()
    res = ewps_check(lambda w: superspace_density_analytic(fam, 2, cfg["N"], 1, w), kinks=kinks)
    return None, {"value": res.value, "expected": res.expected, "residual": res.residual,
                  "pass": res.residual < 1e-6}


def cmd_selftest(cfg, log=None):
    from .validation import run_selftest

    crit = [int(x) for x in _floats(cfg["criteria"], "criteria")] if cfg.get("criteria") else None
    if cfg.get("threads"):
        os.environ["NORMRMT_THREADS"] = str(cfg["threads"])
    report, _ = run_selftest(cfg["seed"], crit, log=log)
    return None, report


HANDLERS = {
    "moments": cmd_moments,
    "density": cmd_density,
    "transform": cmd_transform,
    "invert": cmd_invert,
    "spread-check": cmd_spread_check,
    "kernel": cmd_kernel,
    "corr": cmd_corr,
    "mc-validate": cmd_mc_validate,
    "ewps": cmd_ewps,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="normrmt", description="Norm-dependent random matrix ensembles.")
    parser.add_argument("--version", action="version", version=f"normrmt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (keys, _fmt_default, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value config file (flags override)")
        for key in tuple(keys) + COMMON:
            p.add_argument(f"--{key}", dest=key, default=None, help=OPTIONS[key][2])
    return parser


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, flags, file_values)
        if args.command == "selftest":
            table, payload = cmd_selftest(cfg, log=lambda line: sys.stderr.write(line + "\n"))
        else:
            table, payload = HANDLERS[args.command](cfg)
        text = render(args.command, cfg, table=table, payload=payload)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except NormRMTError as exc:
        return _error(type(exc).__name__, str(exc), EXIT_FAIL)
    except (ArithmeticError, ValueError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_FAIL)
    if cfg.get("output"):
        with open(cfg["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "selftest" and not payload["all_passed"]:
        return EXIT_FAIL
    if args.command == "ewps" and not payload["pass"]:
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
