"""Command-line front end: ``python -m polya_lab <command> ...``.

Exit codes: 0 success, 1 numeric failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

from . import __version__

SCHEMA_VERSION = 1
CACHE_ENV = "POLYA_LAB_CACHE"


class UsageError(Exception):
    pass


def tag(value: float, provenance: str) -> dict:
    return {"value": float(value), "provenance": provenance}


def manifest(command: str, params: dict, results, seeds=(), outputs=()) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "polya_lab",
        "version": __version__,
        "command": command,
        "params": params,
        "seeds": list(seeds),
        "outputs": list(outputs),
        "results": results,
    }


def _params(args) -> dict:
    skip = {"func", "json", "csv", "out"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict) -> None:
    _emit(args, json.dumps(payload, indent=2, sort_keys=False) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _threads(args) -> int:
    return args.threads if args.threads else (os.cpu_count() or 1)


# -- coeffs -----------------------------------------------------------------


def cmd_coeffs(args) -> int:
    from .modecoeffs import (Functional, classify, fq_bracket, fq_mode, g_bracket, g_mode,
                             gq_bracket, gq_mode, kohler_jobin_q, qprime_closed_form,
                             qstar_closed_form, threshold_qprime, threshold_qstar)
    from .specfun import ck_value

    m, q, kmax = args.m, args.q, args.k_max
    if not 2 <= m <= 10:
        raise UsageError("--m must lie in [2, 10]")
    if q <= 0:
        raise UsageError("--q must be positive")
    if not 2 <= kmax <= 64:
        raise UsageError("--k-max must lie in [2, 64]")
    rows = []
    for k in range(2, kmax + 1):
        rows.append({
            "k": k, "c_k": ck_value(m, k),
            "G_bracket": g_bracket(m, k), "G_k": g_mode(m, k),
            "Fq_bracket": fq_bracket(m, q, k), "F_k^q": fq_mode(m, q, k),
            "Gq_bracket": gq_bracket(m, q, k), "G_k^q": gq_mode(m, q, k),
        })
    verdicts = {f.value: classify(f, m, q) for f in Functional}
    primary = verdicts[args.functional]
    if args.csv:
        header = list(rows[0])
        _emit(args, _csv_text(header, [[r[h] for h in header] for r in rows]))
        print(f"# classification {args.functional} q={q}: {primary.verdict.value}", file=sys.stderr)
        return 0
    thresholds = {
        "q_star": tag(threshold_qstar(m), "formula"), "q_star_closed_form": tag(qstar_closed_form(m), "formula"),
        "q_prime": tag(threshold_qprime(m), "formula"), "q_prime_closed_form": tag(qprime_closed_form(m), "formula"),
        "kohler_jobin": tag(kohler_jobin_q(m), "exact"),
    }
    results = {
        "modes": [{k: (v if k == "k" else tag(v, "formula")) for k, v in r.items()} for r in rows],
        "thresholds": thresholds,
        "classification": {
            name: {"verdict": c.verdict.value, "coercivity_order": c.coercivity_order,
                   "witness_modes": list(c.witness_modes) if c.witness_modes else None}
            for name, c in verdicts.items()
        },
        "verdict": primary.verdict.value,
    }
    _emit_json(args, manifest("coeffs", _params(args), results))
    return 0


# -- metrics -------------------------------------------------------------------


def _cache_path(record: dict, ell: float) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    key = hashlib.sha256(json.dumps({"domain": record, "ell": ell}, sort_keys=True).encode()).hexdigest()
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path / f"metrics-{key[:24]}.json"


def cmd_metrics(args) -> int:
    from . import fem
    from .functionals import (Name, ShapeMetrics, evaluate, inequality_suite, metrics_from_fem)
    from .geometry import DomainError, load_domain

    try:
        domain = load_domain(args.domain)
    except (OSError, DomainError) as exc:
        raise UsageError(str(exc)) from exc
    if not 0 < args.ell <= fem.MAX_ELL:
        raise UsageError(f"--ell must lie in (0, {fem.MAX_ELL}]")
    record = domain.to_record()
    cache = _cache_path(record, args.ell)
    if args.dump_mesh:
        fem.mesh(domain, args.ell).dump_csv(args.dump_mesh)
    if cache is not None and cache.exists():
        d = json.loads(cache.read_text())
        mt = ShapeMetrics(**d)
    else:
        mt = metrics_from_fem(domain, args.ell, label=Path(args.domain).stem)
        if cache is not None:
            cache.write_text(json.dumps({**mt.as_dict(), "convex": mt.convex, "label": mt.label}))
    prov = mt.provenance
    funcs = {"F": evaluate(Name.F, mt), "G": evaluate(Name.G, mt)}
    for q in args.q:
        funcs[f"F_q(q={q:g})"] = evaluate(Name.F_q, mt, q)
        funcs[f"G_q(q={q:g})"] = evaluate(Name.G_q, mt, q)
    report = inequality_suite([mt])
    results = {
        "metrics": {
            "T": tag(mt.T, prov), "Lam": tag(mt.Lam, prov), "P": tag(mt.P, "exact"), "V": tag(mt.V, "exact"),
            "tol_T": tag(mt.tol_T, prov), "tol_Lam": tag(mt.tol_Lam, prov), "convex": mt.convex,
        },
        "functionals": {k: {**tag(v.value, prov), "rel_tol": v.rel_tol} for k, v in funcs.items()},
        "inequalities": [{"check": c.check, "passed": c.passed, "margin": c.margin, **tag(c.value, prov)}
                         for c in report.checks],
    }
    outputs = [f"{args.dump_mesh}_nodes.csv", f"{args.dump_mesh}_triangles.csv"] if args.dump_mesh else []
    _emit_json(args, manifest("metrics", _params(args), results, outputs=outputs))
    return 0


# -- perturb -----------------------------------------------------------------------


def cmd_perturb(args) -> int:
    from .perturbation import PATH_QUANTITIES, fd_second, path

    if args.functional not in PATH_QUANTITIES:
        raise UsageError(f"--functional must be one of {PATH_QUANTITIES}")
    if args.k < 2:
        raise UsageError("--k must be >= 2")
    if args.q <= 0:
        raise UsageError("--q must be positive")
    if not 0 < 5 * args.t0 < 0.5:
        raise UsageError("--t0 must satisfy 0 < 5 t0 < 1/2")
    p = path(args.functional, args.q, args.k, args.t0, args.ell, args.phase, _threads(args))
    r = fd_second(p, strict=args.strict)
    if args.csv:
        _emit(args, _csv_text(["functional", "q", "k", "fd", "analytic", "rel_err", "sign_match"],
                              [[r.functional, r.q, r.k, r.fd, r.analytic, r.rel_err, r.sign_match]]))
        return 0
    fem_prov = f"fem({args.ell:g})"
    results = {
        "path": {"t": list(p.ts), "g": [tag(v, fem_prov) for v in p.values]},
        "fd": tag(r.fd, "fd"), "fd_t0": tag(r.fd_t0, "fd"), "fd_2t0": tag(r.fd_2t0, "fd"),
        "analytic": tag(r.analytic, "formula"), "noise": tag(r.noise, "fd"),
        "rel_err": r.rel_err, "sign_match": r.sign_match, "resolved": r.resolved,
    }
    _emit_json(args, manifest("perturb", _params(args), results))
    return 0


# -- homog ---------------------------------------------------------------------------


DEFAULT_C_GRID = (1e2, 1e4, 1e6, 1e8, 1e10, 1e12)
DEFAULT_DELTA_GRID = (1e-1, 1e-2, 1e-3, 1e-4)


def cmd_homog(args) -> int:
    from .fem import ball_exact
    from .homogenization import sup_curve

    if not 2 <= args.m <= 10:
        raise UsageError("--m must lie in [2, 10]")
    if any(c <= 0 for c in args.c_grid) or any(not 0 < d < 1 for d in args.delta_grid):
        raise UsageError("c must be positive and delta in (0, 1)")
    base = ball_exact(args.m)
    pts = sup_curve(base, list(args.c_grid), list(args.delta_grid), shape="ball")
    rows = [[p.c, p.delta, p.lower_bound, p.target, p.gap] for p in pts]
    if args.json:
        results = {"curve": [{"c": p.c, "delta": p.delta, "lower_bound": tag(p.lower_bound, "formula"),
                              "target": tag(p.target, "exact"), "gap": p.gap} for p in pts],
                   "final_gap": pts[-1].gap}
        _emit_json(args, manifest("homog", _params(args), results))
    else:
        _emit(args, _csv_text(["c", "delta", "lower_bound", "target", "gap"], rows))
    return 0


# -- search -----------------------------------------------------------------------------


def cmd_search(args) -> int:
    from .search import SearchConfig, maximize_G

    if args.config == "default":
        cfg = SearchConfig()
    else:
        try:
            cfg = SearchConfig.from_dict(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UsageError(f"bad search config: {exc}") from exc
    if args.threads:
        from dataclasses import replace
        cfg = replace(cfg, threads=args.threads)
    res = maximize_G(cfg)
    best = res.best
    outputs = []
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in res.runs:
            p = out / f"trajectory_seed{r.seed}.csv"
            r.write_trajectory(p)
            outputs.append(str(p))
        if best.best_domain is not None:
            p = out / "best_domain.json"
            p.write_text(json.dumps(best.best_domain.to_record(), indent=2))
            outputs.append(str(p))
    prov = f"fem({cfg.polish_ell:g})"
    results = {
        "runs": [{"seed": r.seed, "best_G": tag(r.best_G, prov), "tol": r.best_tol,
                  "disk_distance": r.disk_distance, "evaluations": r.evaluations,
                  "converged": r.converged, "message": r.message} for r in res.runs],
        "best": {"seed": best.seed, "best_G": tag(best.best_G, prov), "disk_distance": best.disk_distance,
                 "domain": best.best_domain.to_record() if best.best_domain is not None else None},
        "note": "numerical evidence for the conjectured maximiser, not a proof",
    }
    _emit_json(args, manifest("search", {**_params(args), "config_resolved": cfg.__dict__ | {"seeds": list(cfg.seeds)}},
                              results, seeds=cfg.seeds, outputs=outputs))
    return 0


# -- parser ------------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polya_lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, csv_ok=True):
        fmt = p.add_mutually_exclusive_group()
        fmt.add_argument("--json", action="store_true", help="JSON output (default where applicable)")
        if csv_ok:
            fmt.add_argument("--csv", action="store_true", help="CSV table output")
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.add_argument("--threads", type=int, default=0, help="worker cap (0: all cores)")

    p = sub.add_parser("coeffs", help="mode coefficients, thresholds and classification")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--k-max", type=int, default=16)
    p.add_argument("--functional", choices=["F_q", "G_q", "G"], default="F_q")
    common(p)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("metrics", help="fem metrics and functionals of a domain file")
    p.add_argument("--domain", required=True)
    p.add_argument("--ell", type=float, default=0.03)
    p.add_argument("--q", type=_float_list, default=[0.5, 0.8])
    p.add_argument("--dump-mesh", metavar="PREFIX", help="write PREFIX_nodes.csv and PREFIX_triangles.csv")
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_metrics, csv=False)

    p = sub.add_parser("perturb", help="finite-difference check of a second shape derivative")
    p.add_argument("--functional", default="G")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--t0", type=float, default=0.02)
    p.add_argument("--ell", type=float, default=0.02)
    p.add_argument("--phase", choices=["cos", "sin"], default="cos")
    p.add_argument("--strict", action="store_true", help="fail when the fem noise floor exceeds the signal")
    common(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("homog", help="homogenization lower-bound curve for sup G")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--c-grid", type=_float_list, default=list(DEFAULT_C_GRID))
    p.add_argument("--delta-grid", type=_float_list, default=list(DEFAULT_DELTA_GRID))
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_homog, csv=True)

    p = sub.add_parser("search", help="multi-seed maximisation of G")
    p.add_argument("--config", default="default", help="JSON SearchConfig file or 'default'")
    p.add_argument("--out-dir", help="directory for trajectories and the best domain file")
    common(p, csv_ok=False)
    p.set_defaults(func=cmd_search, csv=False)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 0) < 0:
        parser.error("--threads must be >= 0")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"polya_lab {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numeric failure of any delegated solver
        print(f"polya_lab {args.command}: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
