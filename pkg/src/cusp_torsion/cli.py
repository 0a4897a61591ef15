"""Command line front end.

    cusp-torsion modelop {logdet,at-db,at-small,assembly,cm-defect,even-at,constants}
    cusp-torsion torsion {verify {rt10,rt3,milnor,subdivision},compute}
    cusp-torsion sim {rel-trace,rel-logdet,renorm-vol,neck,small-eig,logdet-fit}

Exit codes: 0 pass, 2 input error, 3 tolerance failure, 4 guard rail.
"""
import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import chain_torsion as ct
from . import model_formulas as mf
from . import simplicial as sx
from . import spectral_sim as ss

EXIT_OK, EXIT_INPUT, EXIT_TOL, EXIT_GUARD = 0, 2, 3, 4

DEFAULT_TOL = {
    "assembly": 1e-12,
    "rt10": 1e-8,
    "rt3": 1e-8,
    "milnor": 1e-9,
    "subdivision": 1e-8,
    "rel_trace": 1e-3,
    "rel_logdet": 0.02,
    "renorm_vol": 1e-6,
    "burger": 0.05,
    "wolpert": 0.3,
}


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output

def fmt(x):
    return "%.17g" % x


def to_json(obj):
    """JSON with every float at 17 significant digits; keys in insertion order."""
    if isinstance(obj, dict):
        return "{" + ", ".join(json.dumps(str(k)) + ": " + to_json(v) for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else "null"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def emit(args, text):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument helpers

def float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated numbers, got %r" % text) from None


def tol_pair(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected NAME=VALUE, got %r" % text)
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("tolerance %r is not a number" % value) from None


def _as_list(x):
    if x is None:
        return None
    if isinstance(x, (list, tuple)):
        return [float(v) for v in x]
    if isinstance(x, (int, float)):
        return [float(x)]
    return float_list(x)


def load_config(args):
    """Fill unset options from --config and collect tolerances."""
    tol = dict(DEFAULT_TOL)
    if args.config:
        if not os.path.exists(args.config):
            raise InputError("config file %s does not exist" % args.config)
        with open(args.config, encoding="utf-8") as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError("config is not valid JSON: %s" % exc) from None
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
        for key, value in cfg.items():
            if key in ("tol", "tolerances"):
                if not isinstance(value, dict):
                    raise InputError("config tolerances must be an object")
                tol.update({k: float(v) for k, v in value.items()})
                continue
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                raise InputError("unknown config key %r for this command" % key)
            if getattr(args, dest) is None:
                setattr(args, dest, value)
    for name, value in args.tol or []:
        tol[name] = value
    for name, value in tol.items():
        if name not in DEFAULT_TOL:
            raise InputError("unknown tolerance %r; known: %s" % (name, ", ".join(sorted(DEFAULT_TOL))))
        if not value > 0:
            raise InputError("tolerance %s must be positive" % name)
    if args.threads is not None:
        if int(args.threads) < 1:
            raise InputError("--threads must be at least 1")
        os.environ["CUSP_TORSION_THREADS"] = str(int(args.threads))
    return tol


def require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise InputError("missing required option --%s" % n.replace("_", "-"))


def _profile(args):
    require(args, "m", "betti")
    return mf.BettiProfile(int(args.m), _as_list(args.betti), _as_list(args.bplus), _as_list(args.bH),
                           _as_list(args.jdet))


# ---------------------------------------------------------------------------
# modelop

def cmd_modelop(args, tol):
    op = args.op
    if op == "logdet":
        require(args, "a")
        a = float(args.a)
        out = {"a": a, "logdet": mf.logdet_model(a)}
    elif op == "at-db":
        require(args, "v", "betti")
        out = {"at_db": mf.at_db(int(args.v), _as_list(args.betti))}
    elif op == "at-small":
        require(args, "m", "bplus", "jdet")
        out = {"at_small": mf.at_small(int(args.m), _as_list(args.bplus), _as_list(args.jdet))}
    elif op == "assembly":
        p = _profile(args)
        parts = mf.at_parts(p.m, p)
        total = mf.at_assembly(p.m, p)
        resid = abs(sum(parts.values()) - total)
        out = dict(parts, at_assembly=total, residual=resid, passed=resid <= tol["assembly"])
        emit(args, to_json(out))
        return EXIT_OK if out["passed"] else EXIT_TOL
    elif op == "cm-defect":
        require(args, "m", "betti")
        g, e = mf.cm_defect(int(args.m), _as_list(args.betti))
        out = {"defect_general": g, "defect_euclidean": e}
    elif op == "even-at":
        require(args, "m", "betti")
        out = {"even_at": mf.even_cusp_at(int(args.m), _as_list(args.betti))}
    elif op == "constants":
        out = mf.constants()
    else:  # pragma: no cover - argparse restricts choices
        raise InputError("unknown modelop %r" % op)
    emit(args, to_json(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# torsion

def _load_json(path):
    if not os.path.exists(path):
        raise InputError("file %s does not exist" % path)
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError("%s is not valid JSON: %s" % (path, exc)) from None


def _case(args):
    if args.case_file:
        return sx.case_from_dict(_load_json(args.case_file))
    return sx.builtin_case(args.case or "s1xs2")


def cmd_torsion(args, tol):
    if args.action == "compute":
        require(args, "complex")
        data = _load_json(args.complex)
        C = ct.BasedComplex.from_json(data)
        mu = None
        if args.basis:
            raw = _load_json(args.basis)
            mu = [np.array(b, dtype=float).reshape(C.dims[q], -1) if np.size(b) else np.zeros((C.dims[q], 0))
                  for q, b in enumerate(raw)]
        rep = ct.log_torsion(C, mu)
        emit(args, to_json({"log_torsion": rep.log_torsion, "analytic_part": rep.analytic_part,
                            "basis_factor": rep.basis_factor, "betti": rep.betti,
                            "log_det_prime": rep.per_degree_logdetprime}))
        return EXIT_OK

    what = args.identity
    if what == "milnor":
        seed = 0 if args.seed is None else int(args.seed)
        n = 100 if args.n is None else int(args.n)
        res = ct.milnor_suite(seed, n)
        worst = max(res) if res else 0.0
        out = {"identity": "milnor", "seed": seed, "n": n, "max_residual": worst,
               "tolerance": tol["milnor"], "passed": worst <= tol["milnor"]}
    elif what == "subdivision":
        case = _case(args)
        a, b = sx.subdivision_torsion_pair(case.K, case.F)
        r = abs(a - b)
        out = {"identity": "subdivision", "case": case.name, "lhs": a, "rhs": b, "residual": r,
               "tolerance": tol["subdivision"], "passed": r <= tol["subdivision"]}
    else:
        case = _case(args)
        cut = sx.cut_case(case)
        if what == "rt3":
            r = sx.rt3_verify(cut)
            out = {"identity": "rt3", "case": case.name}
            out.update(r)
            out.update(tolerance=tol["rt3"], passed=r["residual"] <= tol["rt3"])
        else:
            r = sx.rt10_verify(cut)
            scaled = args.variant == "scaled"
            resid = r.parts["residual_scaled"] if scaled else r.residual
            out = {"identity": "rt10", "variant": args.variant or "full", "case": case.name,
                   "lhs": r.lhs, "rhs": r.parts["rhs_scaled"] if scaled else r.rhs, "residual": resid,
                   "parts": r.parts, "log_jdet": r.log_jdet, "betti_link": r.profile.b,
                   "tolerance": tol["rt10"], "passed": resid <= tol["rt10"]}
    emit(args, to_json(out))
    return EXIT_OK if out["passed"] else EXIT_TOL


# ---------------------------------------------------------------------------
# sim

def cmd_sim(args, tol):
    kind = args.kind
    ok = True
    if kind == "rel-trace":
        a_list = _as_list(args.a) or [0.5, 1.0, 2.0]
        t_list = _as_list(args.t) or [0.1, 0.5, 1.0, 4.0, 9.0]
        n = int(args.n or 4000)
        rows = []
        for a in a_list:
            for t in t_list:
                grid = ss.Grid1D(float(args.L), n) if args.L is not None else ss.grid_for(t, n)
                val = ss.relative_heat_trace(a, t, grid)
                ref = mf.strint_rhs(a, t)
                err = abs(val - ref)
                ok &= err <= tol["rel_trace"]
                rows.append([a, t, grid.L, grid.n, val, ref, err, int(err <= tol["rel_trace"])])
        text = to_csv(["a", "t", "L", "n", "numeric", "closed", "abs_error", "pass"], rows)
    elif kind == "rel-logdet":
        a_list = _as_list(args.a) or [0.5, 1.0, 1.5]
        grid = ss.Grid1D(float(args.L or 40.0), int(args.n or 4000))
        vals = ss._map(lambda a: ss.relative_logdet(a, grid), a_list)
        rows = []
        for a, val in zip(a_list, vals):
            ref = mf.relative_logdet_target(a)
            closed = ss.relative_logdet_closed(a)
            err = abs(val - ref)
            ok &= err <= tol["rel_logdet"]
            rows.append([a, grid.L, grid.n, val, closed, ref, err, int(err <= tol["rel_logdet"])])
        text = to_csv(["a", "L", "n", "numeric", "closed_trace_route", "target", "abs_error", "pass"], rows)
    elif kind == "renorm-vol":
        fit = ss.renorm_volume_fit()
        target = 2.0 * mf.LOG2
        err = abs(fit.value - target)
        ok = err <= tol["renorm_vol"]
        text = to_csv(["value", "target", "abs_error", "log_slope", "fit_residual", "halving_change", "pass"],
                      [[fit.value, target, err, fit.slope, fit.residual, fit.halving_change, int(ok)]])
    elif kind == "neck":
        surf = ss.builtin_surface(args.case or "symmetric")
        eps = _as_list(args.eps) or [1e-3]
        rows = []
        delta = None
        for e in sorted(eps, reverse=True):
            spec = ss.neck_spectrum(surf, e, k_max=args.k_max, h=float(args.h or 0.01), n_eig=int(args.n_eig or 20))
            if delta is None:
                # held fixed over the sweep, from the largest eps
                delta = ss.gap_scan(spec)
            for i, (lam, k) in enumerate(zip(spec.eigenvalues, spec.modes)):
                rows.append([e, i, lam, int(k), "small" if lam < delta else "large", delta])
        text = to_csv(["eps", "index", "eigenvalue", "mode", "class", "delta"], rows)
    elif kind == "small-eig":
        surf = ss.builtin_surface(args.case or "symmetric")
        eps = _as_list(args.eps) or [4e-3, 2e-3, 1e-3]
        fit = ss.small_eig_fit(surf, eps, h=float(args.h or 0.01))
        rows = [[e, r * e, r, "", "", ""] for e, r in zip(fit.eps, fit.ratios)]
        ok = fit.rel_error <= tol["burger"]
        rows.append(["extrapolated", "", fit.extrapolated, fit.target, fit.rel_error, int(ok)])
        text = to_csv(["eps", "lambda1", "lambda1_over_eps", "target", "rel_error", "pass"], rows)
    elif kind == "logdet-fit":
        surf = ss.builtin_surface(args.case or "symmetric")
        eps = _as_list(args.eps) or list(np.geomspace(0.02, 0.2, 7))
        fit = ss.logdet_surface_fit(surf, eps)
        ok = fit.monotone and fit.c1 < 0 and fit.rel_error <= tol["wolpert"]
        rows = [[e, ld, "", "", "", ""] for e, ld in zip(fit.eps, fit.logdets)]
        rows.append(["fit", "", fit.c1, fit.target, fit.rel_error, int(ok)])
        text = to_csv(["eps", "logdet", "c1", "target", "rel_error", "pass"], rows)
    else:  # pragma: no cover
        raise InputError("unknown simulation %r" % kind)
    emit(args, text)
    return EXIT_OK if ok else EXIT_TOL


# ---------------------------------------------------------------------------
# parser

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=None, help="JSON file with option values and tolerances")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=tol_pair, action="append", default=None, metavar="NAME=VALUE")
    p.add_argument("--threads", type=int, default=None)
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="cusp-torsion", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    mo = groups.add_parser("modelop", parents=[common], help="closed-form model values")
    mo.add_argument("op", choices=["logdet", "at-db", "at-small", "assembly", "cm-defect", "even-at",
                                   "constants"])
    mo.add_argument("--a", type=float, default=None)
    mo.add_argument("--v", type=int, default=None)
    mo.add_argument("--m", type=int, default=None)
    mo.add_argument("--betti", type=float_list, default=None)
    mo.add_argument("--bplus", type=float_list, default=None)
    mo.add_argument("--bH", type=float_list, default=None)
    mo.add_argument("--jdet", type=float_list, default=None)
    mo.set_defaults(func=cmd_modelop)

    to = groups.add_parser("torsion", help="combinatorial torsion")
    tsub = to.add_subparsers(dest="action", required=True)
    ver = tsub.add_parser("verify", parents=[common])
    ver.add_argument("identity", choices=["rt10", "rt3", "milnor", "subdivision"])
    ver.add_argument("--case", default=None)
    ver.add_argument("--case-file", default=None)
    ver.add_argument("--variant", choices=["full", "scaled"], default=None)
    ver.add_argument("--n", type=int, default=None)
    ver.set_defaults(func=cmd_torsion)
    comp = tsub.add_parser("compute", parents=[common])
    comp.add_argument("--complex", default=None, help="JSON with dims, diffs, grams")
    comp.add_argument("--basis", default=None, help="JSON list of per-degree cocycle bases (columns)")
    comp.set_defaults(func=cmd_torsion)

    si = groups.add_parser("sim", parents=[common], help="spectral simulations (CSV)")
    si.add_argument("kind", choices=["rel-trace", "rel-logdet", "renorm-vol", "neck", "small-eig",
                                     "logdet-fit"])
    si.add_argument("--a", type=float_list, default=None)
    si.add_argument("--t", type=float_list, default=None)
    si.add_argument("--L", type=float, default=None)
    si.add_argument("--n", type=int, default=None)
    si.add_argument("--case", default=None)
    si.add_argument("--eps", type=float_list, default=None)
    si.add_argument("--k-max", type=int, default=None)
    si.add_argument("--h", type=float, default=None)
    si.add_argument("--n-eig", type=int, default=None)
    si.set_defaults(func=cmd_sim)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tol = load_config(args)
        return args.func(args, tol)
    except ss.GuardRailError as exc:
        print("guard rail: %s" % exc, file=sys.stderr)
        return EXIT_GUARD
    except mf.WittError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ValueError, KeyError, TypeError, OSError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except ss.SimulationError as exc:
        print("guard rail: %s" % exc, file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
