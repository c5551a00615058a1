"""Command-line interface: fit, lrt, diagnose, simulate, coverage.

Exit codes: 0 success, 1 input error, 2 fit did not converge (the report is
still written). Reports are JSON with sorted keys and full-precision
numbers; table rendering on stdout rounds for display only.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .data_io import ContrastSpec, read_csv, parse_formula, make_model_spec
from .diagnostics import ks_statistic, qq_data, residuals
from .estimation import FitResult, fit_mle, lrt, norm_sf
from .model import CoefVector
from .simulation import (
    SimConfig,
    coverage_study,
    reference_config,
    reference_grid,
    simulate_dataset,
)

SCHEMA_VERSION = 1

# Table-style significance codes and their p-value thresholds.
_SIG_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"), (0.1, "."))


def sig_code(p: float) -> str:
    for threshold, code in _SIG_LEVELS:
        if p < threshold:
            return code
    return ""


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _add_fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="input CSV path")
    parser.add_argument("--response", required=True, help="response column name")
    parser.add_argument("--trunc", type=float, required=True, help="truncation threshold")
    parser.add_argument("--pi-formula", default="", help="terms for the probability part")
    parser.add_argument("--mu-formula", default="", help="terms for the mean part")
    parser.add_argument(
        "--factor",
        action="append",
        default=[],
        metavar="NAME[:base=LEVEL][:coding=treatment|sum]",
        help="declare a categorical variable (repeatable)",
    )
    parser.add_argument("--init", help="JSON file with starting beta1/beta2/xi")
    parser.add_argument("--fix-xi", type=float, default=None, help="freeze the shape")
    parser.add_argument("--trace", action="store_true", help="record the optimizer trace")


def _parse_factor(arg: str) -> ContrastSpec:
    parts = arg.split(":")
    name = parts[0]
    base = None
    kind = "treatment"
    for extra in parts[1:]:
        if extra.startswith("base="):
            base = extra[len("base="):]
        elif extra.startswith("coding="):
            kind = extra[len("coding="):]
        else:
            raise ValueError(f"cannot parse factor option {extra!r} in {arg!r}")
    return ContrastSpec(variable=name, kind=kind, base=base)


def _load_init(path: str) -> CoefVector:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return CoefVector(
        beta1=np.asarray(raw["beta1"], dtype=float),
        beta2=np.asarray(raw["beta2"], dtype=float),
        xi=float(raw.get("xi", 0.1)),
    )


def _prepare(args):
    factors = tuple(_parse_factor(f) for f in args.factor)
    ds = read_csv(args.data, args.response, args.trunc, factors)
    pi_formula = parse_formula(args.pi_formula)
    mu_formula = parse_formula(args.mu_formula)
    spec, levels = make_model_spec(ds, pi_formula, mu_formula)
    return ds, pi_formula, mu_formula, spec, levels


def _coef_rows(names, est, se, converged):
    rows = []
    for j, name in enumerate(names):
        row = {"name": name, "estimate": _num(est[j])}
        if converged and np.isfinite(se[j]) and se[j] > 0.0:
            z = est[j] / se[j]
            p = 2.0 * norm_sf(abs(z))
            row.update({"se": _num(se[j]), "z": _num(z), "p": _num(p), "sig": sig_code(p)})
        else:
            row.update({"se": None, "z": None, "p": None, "sig": ""})
        rows.append(row)
    return rows


def run_report(args, ds, fit: FitResult, levels) -> dict:
    p1 = fit.coef.beta1.size
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "zitpo", "version": __version__},
        "model": {
            "response": args.response,
            "pi_formula": args.pi_formula,
            "mu_formula": args.mu_formula,
            "y_trunc": _num(ds.y_trunc),
            "factors": [
                {"variable": c.variable, "kind": c.kind, "base": c.base}
                for c in ds.factors
            ],
            "levels": {k: list(v) for k, v in levels.items()},
        },
        "data": {
            "path": args.data,
            "n": ds.n,
            "n_zero": fit.n_zero,
            "n_pos": fit.n_pos,
            "recode_count": ds.recode_count,
        },
        "fit": {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "loglik": _num(fit.loglik),
            "pi_part": _coef_rows(
                fit.names1, fit.coef.beta1, fit.se[:p1], fit.converged
            ),
            "mu_part": _coef_rows(
                fit.names2, fit.coef.beta2, fit.se[p1:-1], fit.converged
            ),
            "xi": {
                "estimate": _num(fit.coef.xi),
                "se": _num(fit.se[-1]),
                "fixed": fit.xi_fixed,
            },
        },
        "seed": None,
    }
    if fit.trace is not None:
        report["fit"]["trace"] = [
            {"iteration": i, "loglik": _num(l), "grad_norm": _num(g)}
            for i, l, g in fit.trace
        ]
    return report


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _print_coef_table(title: str, rows) -> None:
    print(title)
    print(f"  {'':24s} {'Estimate':>9s} {'SE':>7s} {'z':>7s} {'p':>7s}")
    for r in rows:
        se = f"{r['se']:.3f}" if r["se"] is not None else "-"
        z = f"{r['z']:.2f}" if r["z"] is not None else "-"
        p = f"{r['p']:.3f}" if r["p"] is not None else "-"
        print(
            f"  {r['name'][:24]:24s} {r['estimate']:>9.3f} {se:>7s} {z:>7s} "
            f"{p:>7s} {r['sig']}"
        )


def cmd_fit(args) -> int:
    ds, _, _, spec, levels = _prepare(args)
    init = _load_init(args.init) if args.init else None
    fit = fit_mle(
        ds.y, ds.y_trunc, spec, init=init, fix_xi=args.fix_xi, keep_trace=args.trace
    )
    report = run_report(args, ds, fit, levels)
    _write_json(report, args.out)
    _print_coef_table("Probability part (logit link):", report["fit"]["pi_part"])
    _print_coef_table("Mean part (log link):", report["fit"]["mu_part"])
    xi = report["fit"]["xi"]
    se = f" (se {xi['se']:.3f})" if xi["se"] else ""
    ll = report["fit"]["loglik"]
    print(f"xi: {xi['estimate']:.4f}{se}   loglik: {ll if ll is None else format(ll, '.3f')}")
    if not fit.converged:
        print("warning: fit did not converge", file=sys.stderr)
        return 2
    return 0


def _drop_term(formula_text: str, term: str) -> tuple[str, bool]:
    """Remove a term (and, for a bare variable, its interactions)."""
    spec = parse_formula(formula_text)
    if ":" in term:
        a, b = [p.strip() for p in term.split(":")]
        doomed = {frozenset((a, b))}
    else:
        doomed = {
            frozenset(t.split(":")) for t in spec.terms if term in t.split(":")
        }
    kept = [t for t in spec.terms if frozenset(t.split(":")) not in doomed]
    return ", ".join(kept), len(kept) < len(spec.terms)


def cmd_lrt(args) -> int:
    ds, _, _, spec, _ = _prepare(args)
    fix = args.fix_xi
    full = fit_mle(ds.y, ds.y_trunc, spec, fix_xi=fix)
    if not full.converged:
        print("error: full model did not converge", file=sys.stderr)
        return 2
    drops = [t.strip() for t in (args.drop or "").split(",") if t.strip()]
    rows = []
    for term in drops:
        part_formulas = {"pi": args.pi_formula, "mu": args.mu_formula}
        found = False
        for part in ("pi", "mu"):
            reduced_text, removed = _drop_term(part_formulas[part], term)
            if not removed:
                continue
            found = True
            formulas = dict(part_formulas)
            formulas[part] = reduced_text
            red_spec, _ = make_model_spec(
                ds, parse_formula(formulas["pi"]), parse_formula(formulas["mu"])
            )
            reduced = fit_mle(ds.y, ds.y_trunc, red_spec, fix_xi=fix)
            if not reduced.converged:
                print(f"error: reduced model without {term!r} ({part} part) "
                      "did not converge", file=sys.stderr)
                return 2
            test = lrt(full, reduced)
            rows.append(
                {
                    "term": term,
                    "part": part,
                    "statistic": _num(test.statistic),
                    "df": test.df,
                    "p_value": _num(test.p_value),
                    "sig": sig_code(test.p_value),
                }
            )
        if not found:
            raise ValueError(f"term {term!r} is not part of the model")
    result = {"schema_version": SCHEMA_VERSION, "lrt": rows}
    _write_json(result, args.out)
    print(f"  {'term':20s} {'part':4s} {'T':>8s} {'df':>3s} {'p':>7s}")
    for r in rows:
        print(
            f"  {r['term'][:20]:20s} {r['part']:4s} {r['statistic']:>8.2f} "
            f"{r['df']:>3d} {r['p_value']:>7.3f} {r['sig']}"
        )
    return 0


def _fit_from_report(report: dict, spec) -> FitResult:
    fit_part = report["fit"]
    p1 = len(fit_part["pi_part"])
    p2 = len(fit_part["mu_part"])
    se = np.array(
        [r["se"] if r["se"] is not None else np.nan for r in fit_part["pi_part"]]
        + [r["se"] if r["se"] is not None else np.nan for r in fit_part["mu_part"]]
        + [fit_part["xi"]["se"] if fit_part["xi"]["se"] is not None else np.nan]
    )
    coef = CoefVector(
        beta1=np.array([r["estimate"] for r in fit_part["pi_part"]]),
        beta2=np.array([r["estimate"] for r in fit_part["mu_part"]]),
        xi=fit_part["xi"]["estimate"],
    )
    return FitResult(
        coef=coef,
        se=se,
        cov=np.full((p1 + p2 + 1, p1 + p2 + 1), np.nan),
        loglik=fit_part["loglik"],
        n_zero=report["data"]["n_zero"],
        n_pos=report["data"]["n_pos"],
        converged=fit_part["converged"],
        iterations=fit_part["iterations"],
        names1=tuple(r["name"] for r in fit_part["pi_part"]),
        names2=tuple(r["name"] for r in fit_part["mu_part"]),
        y_trunc=report["model"]["y_trunc"],
        xi_fixed=fit_part["xi"]["fixed"],
    )


def cmd_diagnose(args) -> int:
    if args.report:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
        factors = tuple(
            ContrastSpec(variable=f["variable"], kind=f["kind"], base=f["base"])
            for f in report["model"]["factors"]
        )
        ds = read_csv(
            args.data, report["model"]["response"], report["model"]["y_trunc"], factors
        )
        spec, _ = make_model_spec(
            ds,
            parse_formula(report["model"]["pi_formula"]),
            parse_formula(report["model"]["mu_formula"]),
            declared_levels=report["model"]["levels"],
        )
        fit = _fit_from_report(report, spec)
        if not fit.converged:
            print("error: stored fit did not converge", file=sys.stderr)
            return 2
    else:
        if args.response is None or args.trunc is None:
            raise ValueError("either --report or --response/--trunc must be given")
        ds, _, _, spec, levels = _prepare(args)
        fit = fit_mle(ds.y, ds.y_trunc, spec, fix_xi=args.fix_xi)
        if not fit.converged:
            print("error: fit did not converge", file=sys.stderr)
            return 2

    rs = residuals(ds.y, ds.y_trunc, fit, spec)
    if rs.n_pos == 0:
        raise ValueError("no positive observations; nothing to diagnose")
    table = qq_data(rs)
    with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        cols = [
            "row_id",
            "residual",
            "empirical_q",
            "theoretical_q",
            "log_empirical_q",
            "log_theoretical_q",
        ]
        writer.writerow(cols)
        for i in range(rs.n_pos):
            writer.writerow(
                [int(table[c][i]) if c == "row_id" else repr(float(table[c][i])) for c in cols]
            )
    corr = float(np.corrcoef(table["empirical_q"], table["theoretical_q"])[0, 1])
    print(f"n_pos: {rs.n_pos}  xi_hat: {rs.xi_hat:.4f}")
    print(f"KS statistic: {ks_statistic(rs):.4f}")
    print(f"QQ correlation: {corr:.4f}")
    return 0


def cmd_simulate(args) -> int:
    cfg = reference_config(
        n=args.n, reps=1, xi=args.xi, seed=args.seed, y_trunc=args.trunc
    )
    y, spec = simulate_dataset(cfg, args.rep)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", *spec.names1[1:]])
        for i in range(cfg.n):
            writer.writerow([repr(float(y[i]))] + [repr(float(v)) for v in spec.x1[i, 1:]])
    print(f"wrote {cfg.n} rows to {args.out} ({int(np.sum(y > 0))} positive)")
    return 0


def cmd_coverage(args) -> int:
    if args.preset == "reference-grid":
        reports = [
            coverage_study(cfg, workers=args.workers) for cfg in reference_grid(args.seed)
        ]
        payload = {"cells": [r.to_dict() for r in reports]}
        text = json.dumps(payload, sort_keys=True, indent=2)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0
    if args.preset == "reference":
        cfg = reference_config(
            n=args.n or 2000,
            reps=args.reps or 2500,
            xi=args.xi if args.xi is not None else 0.25,
            seed=args.seed,
            y_trunc=args.trunc if args.trunc is not None else 0.125,
        )
    elif args.preset is None:
        if args.n is None or args.reps is None or args.xi is None:
            raise ValueError("without --preset, --n, --reps and --xi are required")
        cfg = SimConfig(
            n=args.n,
            reps=args.reps,
            beta1=tuple(np.asarray(json.loads(args.beta1))) if args.beta1 else
            reference_config().beta1,
            beta2=tuple(np.asarray(json.loads(args.beta2))) if args.beta2 else
            reference_config().beta2,
            xi=args.xi,
            y_trunc=args.trunc if args.trunc is not None else 0.125,
            seed=args.seed,
        )
    else:
        raise ValueError(f"unknown preset {args.preset!r}")
    report = coverage_study(
        cfg, workers=args.workers, collect_estimates=args.estimates_csv is not None
    )
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.estimates_csv:
        with open(args.estimates_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "parameter", "estimate", "se", "covered"])
            for row in report.estimates:
                writer.writerow([row[0], row[1], repr(row[2]), repr(row[3]), int(row[4])])
    for p in report.params:
        print(f"  {p.name:22s} mean {p.mean:>8.4f}  bias {p.bias:>8.4f}  "
              f"coverage {p.coverage:.3f}")
    print(f"converged {report.n_converged}/{report.reps}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zitpo",
        description="Zero-inflated truncated generalized Pareto modeling",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit the model to a CSV dataset")
    _add_fit_flags(p_fit)
    p_fit.add_argument("--out", help="write the JSON report here")
    p_fit.set_defaults(func=cmd_fit)

    p_lrt = sub.add_parser("lrt", help="likelihood-ratio tests for dropped terms")
    _add_fit_flags(p_lrt)
    p_lrt.add_argument("--drop", default="", help="comma-separated terms to drop")
    p_lrt.add_argument("--out", help="write the JSON table here")
    p_lrt.set_defaults(func=cmd_lrt)

    p_diag = sub.add_parser("diagnose", help="residual QQ data and fit summary")
    p_diag.add_argument("--report", help="reuse a stored fit report")
    p_diag.add_argument("--data", required=True, help="input CSV path")
    p_diag.add_argument("--response")
    p_diag.add_argument("--trunc", type=float)
    p_diag.add_argument("--pi-formula", default="")
    p_diag.add_argument("--mu-formula", default="")
    p_diag.add_argument("--factor", action="append", default=[])
    p_diag.add_argument("--fix-xi", type=float, default=None)
    p_diag.add_argument("--out-csv", required=True, help="write QQ pairs here")
    p_diag.set_defaults(func=cmd_diagnose)

    p_sim = sub.add_parser("simulate", help="write one simulated dataset as CSV")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--xi", type=float, required=True)
    p_sim.add_argument("--trunc", type=float, default=0.125)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--rep", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_cov = sub.add_parser("coverage", help="Monte-Carlo CI coverage study")
    p_cov.add_argument("--preset", choices=None, default=None,
                       help="'reference' or 'reference-grid'")
    p_cov.add_argument("--n", type=int)
    p_cov.add_argument("--reps", type=int)
    p_cov.add_argument("--xi", type=float)
    p_cov.add_argument("--trunc", type=float)
    p_cov.add_argument("--seed", type=int, default=0)
    p_cov.add_argument("--beta1", help="JSON list overriding the pi coefficients")
    p_cov.add_argument("--beta2", help="JSON list overriding the mu coefficients")
    p_cov.add_argument("--workers", type=int, default=1)
    p_cov.add_argument("--out", help="write the JSON report here")
    p_cov.add_argument("--estimates-csv", help="stream per-replicate estimates here")
    p_cov.set_defaults(func=cmd_coverage)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the input-error code
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
