"""``momentflow`` command line.

Exit codes: 0 success, 1 tolerance breach, 2 numeric failure, 3 config error.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import math
import sys

import numpy as np

from .config import ProblemConfig, dumps, load_config, parse_points
from .errors import (
    CancellationFailure,
    ConfigError,
    FamilyViolation,
    FitFailure,
    KernelError,
    SingularFundamentalMatrix,
    SpectralError,
)
from .growth import growth_report, indicator_sample, solution_indicator_bound
from .kernel import check_delta_recursion
from .moments import check_strongly_regular
from .solver import eval_solution, fundamental_system, oracle_eval, residual_check, solve_cauchy
from .spectral import decompose

EXIT_OK, EXIT_BREACH, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2, 3


def _solution(cfg: ProblemConfig, tol: float):
    if not cfg.has_cauchy:
        raise ConfigError("this command needs a cauchy block in the config")
    dec = decompose(cfg.matrix, hints=list(cfg.hints) or None)
    fund = fundamental_system(dec, cfg.moment)
    return solve_cauchy(fund, cfg.z0, cfg.y0, tol)


def _ring(z0: complex, radius: float = 1.0, count: int = 8) -> list[complex]:
    return [z0 + radius * cmath.exp(2j * math.pi * k / count) for k in range(count)]


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_solve(cfg: ProblemConfig, args) -> int:
    tol = args.tol or cfg.tol
    N = args.n_terms or cfg.N
    sol = _solution(cfg, tol)
    dec = sol.fundamental.decomposition
    residual = residual_check(sol, _ring(sol.z0), N)
    report = {
        "jordan": {
            "eigenvalues": [
                {"lambda": e.value, "algebraic": e.algebraic, "geometric": e.geometric,
                 "blocks": dec.chain_lengths(e.value)}
                for e in dec.eigen
            ],
            "notes": list(dec.notes),
        },
        "terms": [
            {"lambda": t.lam, "depth": t.depth, "vectors": list(t.chain_vectors[: t.depth])}
            for t in sol.fundamental.terms
        ],
        "z0": sol.z0,
        "constants": sol.constants,
        "cauchyResidual": sol.residual,
        "residualCheck": {"N": N, "samples": len(_ring(sol.z0)), "maxRelative": residual},
    }
    if all(v == 0 for v in dec.spectrum):
        longest = max(c.length for c in dec.chains)
        report["polynomial"] = {"degree": longest - 1, "bound": f"C|z|^{longest - 1}"}
    _emit(args, dumps(report))
    return EXIT_OK


def _eval_rows(sol, points, tol):
    n = sol.n
    rows = []
    for z in points:
        try:
            ev = eval_solution(sol, z)
            cells = []
            for j in range(n):
                cells += [repr(float(ev.value[j].real)), repr(float(ev.value[j].imag)), repr(float(ev.error_bound[j]))]
            rows.append([repr(float(z.real)), repr(float(z.imag)), *cells, "ok"])
        except KernelError as exc:
            status = f"cancellation (term {exc.term_index})" if isinstance(exc, CancellationFailure) else type(exc).__name__
            rows.append([repr(float(z.real)), repr(float(z.imag)), *(["nan"] * (3 * n)), status])
    return rows


def cmd_eval(cfg: ProblemConfig, args) -> int:
    if not args.points:
        raise ConfigError("eval needs --points")
    tol = args.tol or cfg.tol
    sol = _solution(cfg, tol)
    points = parse_points(args.points)
    rows = _eval_rows(sol, points, tol)
    header = ["re_z", "im_z"]
    for j in range(sol.n):
        header += [f"re_y{j + 1}", f"im_y{j + 1}", f"err_y{j + 1}"]
    header.append("status")
    if args.format == "json":
        out = []
        for row in rows:
            item = {"z": [float(row[0]), float(row[1])], "status": row[-1]}
            if row[-1] == "ok":
                vals = [float(v) for v in row[2:-1]]
                item["y"] = [[vals[3 * j], vals[3 * j + 1]] for j in range(sol.n)]
                item["errorBound"] = [vals[3 * j + 2] for j in range(sol.n)]
            out.append(item)
        _emit(args, dumps({"points": out}))
    else:
        _emit(args, _table(header, rows))
    return EXIT_OK


def cmd_oracle_compare(cfg: ProblemConfig, args) -> int:
    tol = args.tol or cfg.tol
    N = cfg.N if args.n_terms is None else args.n_terms
    sol = _solution(cfg, tol)
    points = parse_points(args.points) if args.points else _ring(sol.z0, 1.0)
    worst_abs = worst_rel = 0.0
    for z in points:
        closed = eval_solution(sol, z).value
        # the oracle works in the local variable z - z0
        oracle = oracle_eval(cfg.matrix, cfg.moment, cfg.y0, z - sol.z0, N)
        d = float(np.linalg.norm(closed - oracle))
        worst_abs = max(worst_abs, d)
        worst_rel = max(worst_rel, d / (1.0 + float(np.linalg.norm(oracle))))
    ok = worst_rel <= tol
    _emit(args, dumps({"N": N, "points": len(points), "maxDeviation": worst_abs,
                       "maxScaledDeviation": worst_rel, "tol": tol, "pass": ok}))
    return EXIT_OK if ok else EXIT_BREACH


def cmd_growth(cfg: ProblemConfig, args) -> int:
    sol = _solution(cfg, args.tol or cfg.tol)
    report = growth_report(sol, n_coeffs=args.n_terms or 2000, window=args.window)
    data = report.to_dict()
    data["status"] = "partial" if report.notes else "complete"
    _emit(args, dumps(data))
    return EXIT_OK


def cmd_indicator(cfg: ProblemConfig, args) -> int:
    sol = _solution(cfg, args.tol or cfg.tol)
    dec = sol.fundamental.decomposition
    rho = cfg.moment.rho
    thetas = [float(t.real) for t in parse_points(args.thetas)] if args.thetas else [
        2 * math.pi * k / 16 - math.pi for k in range(16)
    ]
    radii = [float(r.real) for r in parse_points(args.radii)] if args.radii else list(np.linspace(2.0, 20.0, 10))
    samples, fan = [], []
    for t in thetas:
        entry = {"theta": t, "hTheory": solution_indicator_bound(dec, rho, t)}
        try:
            s = indicator_sample(lambda z: eval_solution(sol, sol.z0 + z).value, t, radii, rho, shrink=True)
            entry.update(hHat=s.h_hat, rUsed=s.r_used, status="shrunk" if s.shrunk else "ok")
            fan += [(t, r, l) for r, l in s.log_values]
        except KernelError as exc:
            entry.update(hHat=math.nan, rUsed=math.nan, status=f"failed: {exc}")
        samples.append(entry)
    if args.format == "csv":
        _emit(args, _table(["theta", "r", "ln_abs_y"], [[repr(float(t)), repr(float(r)), repr(float(l))] for t, r, l in fan]))
    else:
        _emit(args, dumps({"rho": rho, "indicator": samples,
                           "fan": [{"theta": t, "r": r, "lnAbsY": l} for t, r, l in fan]}))
    return EXIT_OK


def cmd_verify(cfg: ProblemConfig, args) -> int:
    tol = args.tol or cfg.tol
    N = args.n_terms or 80
    family = cfg.moment
    out: dict = {"family": str(family)}
    breach = False
    try:
        reg = check_strongly_regular(family, 200)
        out["regularity"] = {"logConvex": reg.log_convex, "mgConstant": reg.mg_constant,
                             "snqRatio": reg.snq_ratio, "notes": reg.notes}
    except FamilyViolation as exc:
        out["regularity"] = {"logConvex": False, "error": str(exc)}
        breach = True
    dec = decompose(cfg.matrix, hints=list(cfg.hints) or None)
    lams = sorted({complex(v) for v in dec.spectrum} | {1.0 + 0j}, key=lambda v: (abs(v), cmath.phase(v)))
    worst = 0.0
    for lam in lams:
        for h in range(1, 6):
            worst = max(worst, check_delta_recursion(family, lam, h, N))
    out["deltaRecursion"] = {"N": N, "hMax": 5, "lambdas": lams, "maxResidual": worst, "pass": worst <= 1e-12}
    breach |= worst > 1e-12
    if cfg.has_cauchy:
        sol = solve_cauchy(fundamental_system(dec, family), cfg.z0, cfg.y0, tol)
        res = residual_check(sol, _ring(sol.z0), cfg.N)
        out["residualCheck"] = {"N": cfg.N, "maxRelative": res, "pass": res <= tol}
        breach |= res > tol
    out["pass"] = not breach
    _emit(args, dumps(out))
    return EXIT_BREACH if breach else EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "eval": cmd_eval,
    "oracle-compare": cmd_oracle_compare,
    "growth": cmd_growth,
    "indicator": cmd_indicator,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="problem config JSON")
        p.add_argument("--points", help="file or inline list of complex points")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="csv" if name == "eval" else "json")
        p.add_argument("--n-terms", type=int, default=None, help="truncation order override")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
        p.add_argument("--window", type=float, default=0.25, help="limsup tail fraction")
        if name == "indicator":
            p.add_argument("--thetas", help="inline list of angles in radians")
            p.add_argument("--radii", help="inline list of ascending radii")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        if not 0 < args.window <= 1:
            raise ConfigError("--window must lie in (0, 1]")
        if args.n_terms is not None and args.n_terms < 0:
            raise ConfigError("--n-terms must be nonnegative")
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpectralError, KernelError, SingularFundamentalMatrix, FitFailure, FamilyViolation) as exc:
        print(f"numeric failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
