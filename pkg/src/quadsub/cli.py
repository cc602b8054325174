"""Command-line front end: ``quadsub {analyze,flow,weight,galerkin,all}``."""

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, catalog as cat
from .errors import NotConvergedError, SingularSpaceNonTrivial, SymbolError
from .fitting import fit_power_law, log_grid, steepest_window_fit
from .flow import averaged_form
from .galerkin import (calibrate_c0, coefficient_decay, flat_state, quantize,
                       smoothing_norms, subelliptic_constant, weighted_operator_norm)
from .singular import k0_index, singular_report
from .symbols import QuadraticSymbol, hamilton_map
from .weight import (WeightForm, backward_gammas, hamilton_jacobi_residual,
                     phi_from_weight, riccati_matrices, route_agreement,
                     weight_closed_form_real)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SINGULAR = 3
EXIT_NOT_CONVERGED = 4

GALERKIN_CHECKS = ("smoothing", "subelliptic", "decay", "c0", "seminorm")

# Per-command default grids, used when --tmin/--tmax/--points are omitted.
DEFAULT_GRIDS = {
    "flow": (1e-3, 1e-2, 25),
    "weight": (1e-3, 1e-1, 20),
    "smoothing": (0.1, 1.0, 49),
    # with k0 = 0 the blow-up regime sits at smaller t for the same cutoff
    "smoothing_elliptic": (0.02, 0.2, 49),
    "decay": (0.03, 0.3, 15),
    "c0": (0.01, 0.5, 12),
    "seminorm": (0.1, 1.0, 49),
}

MONOMIALS = {"x1d0": ((1,), (0,)), "x0d1": ((0,), (1,)), "x1d1": ((1,), (1,))}


class ParseFailure(Exception):
    pass


class PartialRun(Exception):
    """Wraps a convergence failure together with the rows computed so far."""

    def __init__(self, cause, rows):
        super().__init__(str(cause))
        self.cause = cause
        self.rows = rows


def _threads():
    try:
        return max(1, int(os.environ.get("QUADSUB_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(func, items):
    """Ordered map, parallel up to QUADSUB_THREADS."""
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def check(name, measured, expected, tolerance, kind="two-sided"):
    """One report entry.

    ``two-sided``: pass iff |measured - expected| <= tolerance.
    ``upper-bound``: pass iff measured <= expected + tolerance.
    ``lower-bound``: pass iff measured >= expected - tolerance.
    """
    if kind == "two-sided":
        ok = abs(measured - expected) <= tolerance
    elif kind == "upper-bound":
        ok = measured <= expected + tolerance
    elif kind == "lower-bound":
        ok = measured >= expected - tolerance
    else:
        raise ValueError(kind)
    return {"name": name, "measured": float(measured), "expected": float(expected),
            "tolerance": float(tolerance), "kind": kind, "pass": bool(ok)}


def _grid(args, key):
    tmin, tmax, points = DEFAULT_GRIDS[key]
    tmin = args.tmin if args.tmin is not None else tmin
    tmax = args.tmax if args.tmax is not None else tmax
    points = args.points if args.points is not None else points
    try:
        return log_grid(tmin, tmax, points)
    except ValueError as exc:
        raise ParseFailure(str(exc)) from exc


def load_symbol(args):
    """Return (label, symbol) from --catalog or a JSON symbol file."""
    if args.catalog and args.symbol:
        raise ParseFailure("give either --catalog or a symbol file, not both")
    if args.catalog:
        try:
            return args.catalog, cat.get(args.catalog).symbol
        except KeyError as exc:
            raise ParseFailure(str(exc)) from exc
    if not args.symbol:
        raise ParseFailure("a symbol file or --catalog NAME is required")
    try:
        with open(args.symbol, encoding="utf-8") as fh:
            obj = json.load(fh)
        return os.path.basename(args.symbol), QuadraticSymbol.from_json(obj)
    except (OSError, json.JSONDecodeError, SymbolError) as exc:
        raise ParseFailure(f"cannot read symbol from {args.symbol}: {exc}") from exc


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseFailure(f"bad number list {text!r}") from exc


# -- pipelines ---------------------------------------------------------------

def run_analyze(q, args):
    rep = singular_report(q)
    eig = np.linalg.eigvals(hamilton_map(q).F)
    eig = sorted(eig, key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    results = dict(rep.to_json())
    results["eig_F"] = [[round(float(z.real), 12) + 0.0, round(float(z.imag), 12) + 0.0]
                        for z in eig]
    checks = []
    if rep.dim_S > 0:
        raise SingularSpaceNonTrivial(rep.dim_S, json.dumps(results))
    return results, checks, []


def run_flow(q, args):
    k0 = k0_index(q)
    ts = _grid(args, "flow")
    rows = []
    try:
        for t in ts:
            rows.append({"t": t,
                         "lambda_min": averaged_form(q, t).lambda_min,
                         "lambda_min_reversed": averaged_form(q, t, reverse=True).lambda_min})
    except NotConvergedError as exc:
        raise PartialRun(exc, rows) from exc
    fwd = fit_power_law(ts, [r["lambda_min"] for r in rows])
    rev = fit_power_law(ts, [r["lambda_min_reversed"] for r in rows])
    expected = 2 * k0 + 1
    checks = [check("averaged-form-min-eig-slope", fwd.slope, expected, 0.15),
              check("averaged-form-min-eig-slope-reversed", rev.slope, expected, 0.15)]
    return {"k0": k0, "forward": fwd.to_json(), "reversed": rev.to_json()}, checks, rows


def run_weight(q, args):
    k0 = k0_index(q)
    ts = _grid(args, "weight")
    F_im = hamilton_map(q).F_im
    rows = []
    try:
        fwd = riccati_matrices(q.Q_re, F_im, ts)
        back = backward_gammas(q, ts)
        for t, G, B in zip(ts, fwd, back):
            gap = phi_from_weight(WeightForm(t, G)).gap()
            bgap = phi_from_weight(WeightForm(t, B)).gap()
            rows.append({"t": t,
                         "gamma_lambda_min": float(np.linalg.eigvalsh(G)[0]),
                         "phi_gap_lambda_min": float(np.linalg.eigvalsh(gap)[0]),
                         "backward_gap_lambda_min": float(-np.linalg.eigvalsh(bgap)[-1])})
        routes = route_agreement(q, np.linspace(0.0, min(0.1, ts[-1]), 11))
        rng = np.random.default_rng(args.seed)
        xs = rng.standard_normal((5, q.n)) + 1j * rng.standard_normal((5, q.n))
        hj = float(np.max(np.abs(hamilton_jacobi_residual(q, float(np.median(ts)), xs))))
    except NotConvergedError as exc:
        raise PartialRun(exc, rows) from exc
    expected = 2 * k0 + 1
    fits = {key: fit_power_law(ts, [r[key] for r in rows])
            for key in ("gamma_lambda_min", "phi_gap_lambda_min", "backward_gap_lambda_min")}
    min_gap = min(r["phi_gap_lambda_min"] for r in rows)
    checks = [
        check("weight-min-eig-slope", fits["gamma_lambda_min"].slope, expected, 0.1),
        check("phi-gap-nonnegative", min_gap, 0.0, 0.0, kind="lower-bound"),
        check("phi-gap-min-eig-slope", fits["phi_gap_lambda_min"].slope, expected, 0.1),
        check("backward-phi-gap-slope", fits["backward_gap_lambda_min"].slope, expected, 0.1),
        check("weight-route-agreement", routes["lagrangian"], 0.0, 1e-8, kind="upper-bound"),
        check("hamilton-jacobi-residual", hj, 0.0, 1e-6, kind="upper-bound"),
    ]
    if args.closed_form:
        if "closed_form" not in routes:
            raise ParseFailure("--closed-form needs a real symbol (Q_im = 0)")
        checks.append(check("weight-closed-form-agreement", routes["closed_form"], 0.0, 1e-8,
                            kind="upper-bound"))
    results = {"k0": k0, "fits": {k: v.to_json() for k, v in fits.items()}, "routes": routes}
    return results, checks, rows


def _galerkin_smoothing(q, k0, args):
    ts = _grid(args, "smoothing" if k0 else "smoothing_elliptic")
    ks = list(range(1, args.kmax + 1))
    vals = smoothing_norms(q, args.nbuild, args.nobs, ks, ts)
    vals2 = smoothing_norms(q, 2 * args.nbuild, args.nobs, ks, ts)
    checks, results = [], {}
    rows = [dict({"t": t}, **{f"norm_k{k}": float(vals[i, j]) for i, k in enumerate(ks)})
            for j, t in enumerate(ts)]
    for i, k in enumerate(ks):
        expected = (2 * k0 + 1) * k
        fit = _window_fit(ts, vals[i])
        fit2 = _window_fit(ts, vals2[i])
        change = abs(fit2.slope - fit.slope) / abs(fit.slope)
        checks.append(check(f"smoothing-blowup-exponent-k{k}", -fit.slope, expected,
                            0.15 * expected))
        checks.append(check(f"smoothing-exponent-stability-k{k}", change, 0.0, 0.1,
                            kind="upper-bound"))
        results[f"k{k}"] = {"fit": fit.to_json(), "window": [float(fit.t_grid[0]),
                                                              float(fit.t_grid[-1])]}
    return results, checks, rows


def _galerkin_subelliptic(q, k0, args):
    lams = args.lambdas
    half = max(args.nobs // 2, 1)

    def one(lam):
        return (subelliptic_constant(q, args.nobs + 2, args.nobs, lam, k0),
                subelliptic_constant(q, half + 2, half, lam, k0))

    vals = _pmap(one, lams)
    rows = [{"lambda": lam, "c_nobs": a, "c_half_nobs": b} for lam, (a, b) in zip(lams, vals)]
    full = [a for a, _ in vals]
    change = max(abs(a - b) / a for a, b in vals)
    checks = [check("subelliptic-constant-cutoff-stability", change, 0.0, 0.1, kind="upper-bound"),
              check("subelliptic-constant-spread", max(full) / min(full), 0.0, 3.0,
                    kind="upper-bound")]
    return {"constants": dict(zip([str(x) for x in lams], full))}, checks, rows


def _galerkin_decay(q, k0, args):
    ts = _grid(args, "decay")
    op = quantize(q, args.nbuild)
    u = flat_state(op.basis, args.nbuild)
    layers = min(args.nobs, 60)
    rates, fit = coefficient_decay(q, u, ts, args.nbuild, fit_layers=layers)
    rows = [{"t": t, "decay_rate": float(r)} for t, r in zip(ts, rates)]
    checks = [check("coefficient-decay-rate-slope", fit.slope, 2 * k0 + 1, 0.45)]
    return {"fit": fit.to_json(), "fit_layers": layers}, checks, rows


def _galerkin_c0(q, k0, args):
    ts = _grid(args, "c0")
    c0 = calibrate_c0(q, args.nbuild, args.nobs, ts)
    checks = [{"name": "c0-calibration", "measured": c0, "expected": None, "tolerance": None,
               "kind": "exists", "pass": bool(np.isfinite(c0))}]
    return {"c0": c0}, checks, []


def _galerkin_seminorm(q, k0, args):
    if q.n != 1:
        raise ParseFailure("the seminorm check is defined for n = 1")
    ts = _grid(args, "seminorm")
    checks, results, cols = [], {}, {}
    for label, (mu, nu) in MONOMIALS.items():
        vals = [weighted_operator_norm(q, args.nbuild, args.nobs, mu, nu, t) for t in ts]
        cols[label] = vals
        fit = _window_fit(ts, vals)
        bound = (2 * k0 + 1) / 2 * (sum(mu) + sum(nu) + 2 * q.n)
        checks.append(check(f"weighted-seminorm-exponent-{label}", -fit.slope, bound, 0.2,
                            kind="upper-bound"))
        results[label] = fit.to_json()
    rows = [dict({"t": t}, **{f"norm_{k}": float(v[j]) for k, v in cols.items()})
            for j, t in enumerate(ts)]
    return results, checks, rows


GALERKIN_RUNNERS = {
    "smoothing": _galerkin_smoothing,
    "subelliptic": _galerkin_subelliptic,
    "decay": _galerkin_decay,
    "c0": _galerkin_c0,
    "seminorm": _galerkin_seminorm,
}


def _window_fit(ts, values):
    try:
        return steepest_window_fit(ts, values)
    except ValueError as exc:
        raise ParseFailure(f"{exc}; use more --points") from exc


def run_galerkin(q, args):
    k0 = k0_index(q)
    if args.nobs > args.nbuild // 2:
        raise ParseFailure("--nobs must not exceed --nbuild / 2")
    names = GALERKIN_CHECKS if args.check == "all" else (args.check,)
    results, checks, rows = {"k0": k0}, [], []
    for name in names:
        try:
            res, chk, rws = GALERKIN_RUNNERS[name](q, k0, args)
        except NotConvergedError as exc:
            raise PartialRun(exc, rows) from exc
        results[name] = res
        checks += chk
        rows += [dict({"check": name}, **r) for r in rws]
    return results, checks, rows


def run_all(q, args):
    results, checks, rows = {}, [], []
    for name, runner in (("analyze", run_analyze), ("flow", run_flow),
                         ("weight", run_weight), ("galerkin", run_galerkin)):
        if name == "galerkin" and q.n != 1:
            continue
        try:
            res, chk, rws = runner(q, args)
        except PartialRun as exc:
            raise PartialRun(exc.cause, rows + [dict({"command": name}, **r) for r in exc.rows])
        results[name] = res
        checks += chk
        rows += [dict({"command": name}, **r) for r in rws]
    return results, checks, rows


RUNNERS = {"analyze": run_analyze, "flow": run_flow, "weight": run_weight,
           "galerkin": run_galerkin, "all": run_all}


# -- output ------------------------------------------------------------------

def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".quadsub-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def rows_to_csv(rows):
    if not rows:
        return ""
    header = []
    for r in rows:
        for key in r:
            if key not in header:
                header.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                         for k, v in r.items()})
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def emit(args, report, rows):
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.json:
        _atomic_write(args.json, text)
    else:
        sys.stdout.write(text)
    if args.csv:
        _atomic_write(args.csv, rows_to_csv(rows))


# -- entry point -------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("symbol", nargs="?", help="JSON symbol file {n, Q_re, Q_im}")
    common.add_argument("--catalog", metavar="NAME", help="use a catalog entry instead of a file")
    common.add_argument("--tmin", type=float)
    common.add_argument("--tmax", type=float)
    common.add_argument("--points", type=int)
    common.add_argument("--nbuild", type=int, default=160)
    common.add_argument("--nobs", type=int, default=80)
    common.add_argument("--kmax", type=int, default=3)
    common.add_argument("--lambda", dest="lambda_text", default="0,1,10",
                        help="comma-separated shifts; write --lambda=-1,1 for a leading minus")
    common.add_argument("--check", choices=GALERKIN_CHECKS + ("all",), default="all")
    common.add_argument("--closed-form", action="store_true",
                        help="also compare with the closed-form weight (real symbols)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--no-timing", action="store_true")
    common.add_argument("--json", metavar="PATH", help="write the JSON report here, not stdout")
    common.add_argument("--csv", metavar="PATH", help="write per-grid-point rows here")

    parser = argparse.ArgumentParser(prog="quadsub",
                                     description="Flow bounds and Galerkin checks for quadratic symbols.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("analyze", "singular space, k0 and Kalman ranks"),
                       ("flow", "small-time exponent of the averaged form"),
                       ("weight", "weight evolution, routes and Hamilton-Jacobi residual"),
                       ("galerkin", "Hermite-Galerkin checks"),
                       ("all", "every pipeline in sequence")):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE
    report = {"schema_version": SCHEMA_VERSION, "command": args.command,
              "inputs": {}, "checks": [], "results": {}}
    start = time.perf_counter()
    code = EXIT_OK
    rows = []
    try:
        args.lambdas = _parse_floats(args.lambda_text)
        for flag in ("nbuild", "nobs", "kmax"):
            if getattr(args, flag) < 1:
                raise ParseFailure(f"--{flag} must be positive")
        label, q = load_symbol(args)
        report["inputs"] = {"symbol": label, "n": q.n,
                            "flags": {k: v for k, v in sorted(vars(args).items())
                                      if k not in ("json", "csv", "no_timing", "symbol", "catalog",
                                                   "command", "lambda_text")}}
        results, checks, rows = RUNNERS[args.command](q, args)
        report["results"] = results
        report["checks"] = checks
    except ParseFailure as exc:
        sys.stderr.write(f"quadsub: {exc}\n")
        return EXIT_PARSE
    except SingularSpaceNonTrivial as exc:
        report["results"] = {"error": "SingularSpaceNonTrivial", "dim_S": exc.dim}
        try:
            report["results"].update(json.loads(str(exc)))
        except ValueError:
            pass
        code = EXIT_SINGULAR
    except PartialRun as exc:
        report["results"] = {"error": type(exc.cause).__name__, "message": str(exc.cause)}
        rows = exc.rows
        code = EXIT_NOT_CONVERGED
    except NotConvergedError as exc:
        report["results"] = {"error": type(exc).__name__, "message": str(exc)}
        code = EXIT_NOT_CONVERGED
    report["all_pass"] = code == EXIT_OK and all(c["pass"] for c in report["checks"])
    if not args.no_timing:
        report["timings"] = {"total_seconds": time.perf_counter() - start}
    emit(args, report, rows)
    return code


if __name__ == "__main__":
    sys.exit(main())
