"""Command-line front end.

Every command prints (or writes with ``--output``) one JSON report carrying
``"schema": 1``, the package version, the seed and SHA-256 digests of the
input files. Exit status: 0 success, 1 verification violation, 2 input
error, 3 resource guard.
"""

import argparse
import csv
import io as _io
import math
import sys

import numpy as np

from . import __version__
from .exceptions import InputError, ResourceError, UnsupportedInputError
from .families import DEFAULT_SEED, function_family, measure_family
from .io import SCHEMA_VERSION, dumps, read_json
from .reports import VerificationReport, _jsonable

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3

TOLERANCE_DEFAULTS = {"dual": 1e-8, "transport": 1e-8, "mls": 1e-12,
                      "concentration": 1e-12, "semigroup": None, "displacement": 1e-8}


class _Run:
    """Collects input digests and tolerances while a command executes."""

    def __init__(self, args):
        self.args = args
        self.digests = {}
        self.tol = dict(TOLERANCE_DEFAULTS)
        for item in args.tolerance or []:
            key, sep, value = item.partition("=")
            if not sep or key not in self.tol:
                raise InputError(f"--tolerance expects key=value with key in {sorted(self.tol)}")
            try:
                self.tol[key] = float(value)
            except ValueError:
                raise InputError(f"--tolerance {key}: not a number: {value!r}") from None

    def load(self, role, path, parser):
        if path is None:
            raise InputError(f"--{role} is required")
        obj, digest = read_json(path)
        self.digests[role] = digest
        return parser(obj)

    def load_many(self, role, path, parser):
        """A single object or a JSON list of objects."""
        def parse(obj):
            return [parser(o) for o in obj] if isinstance(obj, list) else [parser(obj)]
        return self.load(role, path, parse)


def _measure(obj):
    from .io import measure_from_dict
    return measure_from_dict(obj)


def _function(obj):
    from .io import function_from_dict
    return function_from_dict(obj)


def _cost(obj):
    from .io import cost_from_dict
    return cost_from_dict(obj)


def _floats(text, name):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


# ------------------------------------------------------------------ commands

def cmd_entropy(run):
    from .measures import relative_entropy

    a = run.args
    mu = run.load("mu", a.mu, _measure)
    nu = run.load("nu", a.nu, _measure)
    return {"relative_entropy": relative_entropy(nu, mu)}, None


def cmd_ot(run):
    from .transport import standard_ot, weak_ot

    a = run.args
    mu = run.load("from", a.source, _measure)
    nu = run.load("to", a.target, _measure)
    theta = run.load("cost", a.cost, _cost)
    if a.which == "standard":
        val, coupling, cert = standard_ot(mu, nu, theta, return_certificate=True)
        return {"cost": val, "coupling": coupling.pi, "certificate": cert}, None
    val, plan = weak_ot(nu, mu, theta)
    return {"cost": val, "plan": plan.to_dict()}, None


def cmd_w2(run):
    from .transport import w2_squared

    mu = run.load("mu", run.args.mu, _measure)
    nu = run.load("nu", run.args.nu, _measure)
    return {"w2_squared": w2_squared(mu, nu)}, None


def cmd_norm(run):
    from .costs import dual_norm, orlicz_norm

    a = run.args
    theta = run.load("cost", a.cost, _cost)
    x = _floats(a.x, "x")
    if a.which == "orlicz":
        return {"orlicz_norm": orlicz_norm(theta, a.p, x)}, None
    val, info = dual_norm(theta, a.p, x, full_output=True, seed=a.seed)
    return {"dual_norm": val, **info}, None


def cmd_cost(run):
    from .costs import DIVERGENCE_SENTINEL

    a = run.args
    theta = run.load("cost", a.cost, _cost)
    x = np.asarray(_floats(a.x, "x"))
    if x.size != theta.dimension:
        raise InputError(f"--x has {x.size} entries, the cost has dimension {theta.dimension}")
    if a.which == "eval":
        return {"value": float(theta(x))}, None
    val = float(theta.conjugate(x))
    return {"conjugate": val, "finite": math.isfinite(val),
            "divergence_sentinel": DIVERGENCE_SENTINEL}, None


def _lattice(a, dim):
    from .hopflax import Lattice

    lo, hi = _floats(a.lo, "lo"), _floats(a.hi, "hi")
    if len(lo) != dim or len(hi) != dim:
        raise InputError(f"--lo/--hi need {dim} entries")
    return Lattice.from_bounds(lo, hi, a.h)


def cmd_hopflax(run):
    from .costs import RadialAlpha
    from .hopflax import hj_residual, inf_convolution, semigroup_check

    a = run.args
    f = run.load("function", a.function, _function)
    if a.which == "residual":
        alpha = RadialAlpha(a.C, a.L, f.dimension)
        res = hj_residual(f, alpha, _floats(a.times, "times"), _lattice(a, f.dimension))
        return res, None
    theta = run.load("cost", a.cost, _cost)
    if a.which == "eval":
        x = np.asarray(_floats(a.x, "x"))
        val, y = inf_convolution(f, theta, a.t, x, return_argmin=True)
        return {"value": float(val), "argmin": np.atleast_1d(y)}, None
    rep = semigroup_check(f, theta, a.s, a.t, _lattice(a, f.dimension), mode=a.mode,
                          tol=run.tol["semigroup"])
    return rep.to_dict(), [rep]


def cmd_poincare(run):
    from .inequalities import estimate_convex_poincare

    a = run.args
    mu = run.load("mu", a.mu, _measure)
    est = estimate_convex_poincare(mu, k_pieces=a.k_pieces, restarts=a.restarts, seed=a.seed)
    return est.to_dict(), None


def _functions(run, dimension, slope_cap=None):
    a = run.args
    if a.function is not None:
        fs = run.load_many("function", a.function, _function)
        if a.random:
            raise InputError("use either --function or --random, not both")
        return fs
    if not a.random:
        raise InputError("give --function or --random N")
    return function_family(a.seed, a.random, dimension, slope_cap=slope_cap)


def _sweep(items, check):
    """Run ``check`` on each item separately and merge in index order."""
    merged = None
    for i, item in enumerate(items):
        rep = check(item).reindex(i)
        merged = rep if merged is None else merged.merge(rep)
    return merged


def cmd_verify(run):
    from . import inequalities as ineq
    from .transport import check_weak_transport_inequalities

    a = run.args
    w = a.which
    if w == "suite":
        return _verify_suite(run)
    mu = run.load("mu", a.mu, _measure)
    if w in ("dual-t+", "dual-t-", "ic2"):
        theta = run.load("cost", a.cost, _cost)
        fn = {"dual-t+": ineq.check_dual_Tplus, "dual-t-": ineq.check_dual_Tminus,
              "ic2": ineq.check_inf_convolution_t2}[w]
        reps = [_sweep(_functions(run, mu.dimension),
                       lambda f: fn(mu, theta, f, tol=run.tol["dual"]))]
    elif w == "mls-convex":
        reps = [_sweep(_functions(run, mu.dimension, a.c),
                       lambda f: ineq.check_mls_convex(mu, f, a.lam, a.c, tol=run.tol["mls"]))]
    elif w == "mls-concave":
        reps = [_sweep(_functions(run, mu.dimension, a.c),
                       lambda f: ineq.check_mls_concave(mu, f, a.lam, a.c, M=a.M,
                                                        tol=run.tol["mls"]))]
    elif w == "transport":
        theta = run.load("cost", a.cost, _cost)
        theta_minus = run.load("cost_minus", a.cost_minus, _cost) if a.cost_minus else None
        if a.nu is not None:
            nus = run.load_many("nu", a.nu, _measure)
        elif a.random:
            nus = measure_family(a.seed, a.random, mu)
        else:
            raise InputError("give --nu or --random N")
        plus = minus = None
        for i, nu in enumerate(nus):
            p, m = check_weak_transport_inequalities(mu, theta, [nu], theta_minus=theta_minus,
                                                     tol=run.tol["transport"])
            plus = p.reindex(i) if plus is None else plus.merge(p.reindex(i))
            minus = m.reindex(i) if minus is None else minus.merge(m.reindex(i))
        reps = [plus, minus]
    elif w == "concentration":
        theta = run.load("cost", a.cost, _cost)
        reps = [_sweep(_functions(run, mu.dimension),
                       lambda f: ineq.empirical_concentration_check(
                           mu, f, theta, a.p, mode=a.mode, q=a.q,
                           tol=run.tol["concentration"]))]
    else:
        raise InputError(f"unknown verification {w!r}")
    return {"reports": [r.to_dict() for r in reps]}, reps


def _verify_suite(run):
    from .suite import SuiteConfig, run_suite

    a = run.args
    cfg = SuiteConfig(seed=a.seed, n=a.random or 1000)
    for key in ("dual", "transport", "mls", "concentration"):
        cfg.set_tolerance(key, run.tol[key])
    reports, pipe = run_suite(cfg, jobs=a.jobs)
    reps = list(reports.values())
    return {"pipeline": pipe.to_dict(), "instances_per_check": cfg.n,
            "reports": [r.to_dict() for r in reps]}, reps


def cmd_constants(run):
    from . import constants as K

    a = run.args
    if a.which == "pipeline":
        pipe = K.ConstantsPipeline(a.lam, a.c, M=a.M, c_plus=a.c_plus)
        out = pipe.to_dict()
        out["derived"]["C"] = out["derived"]["C_mls_convex"]
        return out, None
    if a.which == "tensorize":
        lam_p, info = K.tensorization_lambda(a.lam, full_output=True)
        return {"lambda": a.lam, "lambda_prime": lam_p, **info}, None
    if a.which == "mixture":
        if a.w2sq is None:
            from .transport import w2_squared

            mu0 = run.load("mu0", a.mu0, _measure)
            mu1 = run.load("mu1", a.mu1, _measure)
            a.w2sq = w2_squared(mu0, mu1)
        return {"lambda": K.mixture_lambda(a.lam0, a.lam1, a.w2sq), "w2_squared": a.w2sq}, None
    return {"lambda": K.perturbation_lambda(a.lam, a.osc)}, None


def _params(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise InputError(f"--param {key}: not a number: {value!r}") from None
    return out


def cmd_bounds(run):
    from .inequalities import tail_bound

    a = run.args
    params = _params(a.param)
    out = {"kind": a.kind, "params": params}
    if not (a.plot_data and "t" not in params):
        try:
            out.update(tail_bound(a.kind, **params).to_dict())
        except TypeError as exc:
            raise InputError(f"bounds {a.kind}: {exc}") from None
    if a.plot_data:
        out["plot_data"] = _tail_curve(run, a.kind, params)
    return out, None


def _tail_curve(run, kind, params):
    """Bound against ``t`` on a grid, with the exact tail of ``f`` under ``mu`` if given."""
    from .inequalities import tail_bound
    from .measures import pushforward_stats

    a = run.args
    if kind not in ("upper_tail", "lower_tail"):
        raise InputError("--plot-data is available for upper_tail and lower_tail")
    exact = None
    if a.mu is not None and a.function is not None:
        mu = run.load("mu", a.mu, _measure)
        f = run.load("function", a.function, _function)
        exact = pushforward_stats(mu, f)
    rows = []
    for t in np.linspace(0.0, a.t_max, a.points):
        try:
            b = tail_bound(kind, **{**params, "t": float(t)})
        except TypeError as exc:
            raise InputError(f"bounds {kind}: {exc}") from None
        row = {"t": float(t), "bound": b.value if b.applicable else None}
        if exact is not None:
            dev = exact.values - exact.median
            mask = dev >= t if kind == "upper_tail" else dev <= -t
            row["exact"] = float(mu.weights @ mask)
        rows.append(row)
    with open(a.plot_data, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return a.plot_data


COMMANDS = {"entropy": cmd_entropy, "ot": cmd_ot, "w2": cmd_w2, "norm": cmd_norm,
            "cost": cmd_cost, "hopflax": cmd_hopflax, "poincare": cmd_poincare,
            "verify": cmd_verify, "constants": cmd_constants, "bounds": cmd_bounds}


# -------------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    common.add_argument("--tolerance", action="append", metavar="KEY=VALUE",
                        help=f"override a tolerance; keys: {', '.join(TOLERANCE_DEFAULTS)}")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="convexpoincare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", parents=[common], help="relative entropy H(nu|mu)")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)

    p = sub.add_parser("ot", parents=[common], help="standard or weak transport cost")
    p.add_argument("which", choices=("standard", "weak"))
    p.add_argument("--from", dest="source", required=True, help="source measure mu")
    p.add_argument("--to", dest="target", required=True, help="target measure nu")
    p.add_argument("--cost", required=True)

    p = sub.add_parser("w2", parents=[common], help="squared quadratic transport cost")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)

    p = sub.add_parser("norm", parents=[common], help="Orlicz norm or its dual")
    p.add_argument("which", choices=("orlicz", "dual"))
    p.add_argument("--cost", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--x", required=True, help="comma-separated vector")

    p = sub.add_parser("cost", parents=[common], help="evaluate a cost or its conjugate")
    p.add_argument("which", choices=("eval", "legendre"))
    p.add_argument("--cost", required=True)
    p.add_argument("--x", required=True, help="comma-separated vector")

    p = sub.add_parser("hopflax", parents=[common], help="infimum convolution tools")
    p.add_argument("which", choices=("eval", "semigroup", "residual"))
    p.add_argument("--function", required=True)
    p.add_argument("--cost")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--x", default="0")
    p.add_argument("--lo", default="-1")
    p.add_argument("--hi", default="1")
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--mode", choices=("grid", "nested"), default="grid")
    p.add_argument("--C", type=float, default=1.0, help="residual: quadratic constant")
    p.add_argument("--L", type=float, default=1.0, help="residual: slope cap")
    p.add_argument("--times", default="0.49,0.5,0.51")

    p = sub.add_parser("poincare", parents=[common], help="convex Poincare estimation")
    p.add_argument("which", choices=("estimate",))
    p.add_argument("--mu", required=True)
    p.add_argument("--k-pieces", type=int, default=2)
    p.add_argument("--restarts", type=int, default=16)

    p = sub.add_parser("verify", parents=[common], help="inequality checks")
    p.add_argument("which", choices=("dual-t+", "dual-t-", "ic2", "mls-convex", "mls-concave",
                                     "transport", "concentration", "suite"))
    p.add_argument("--mu")
    p.add_argument("--cost")
    p.add_argument("--cost-minus", help="transport: cost for T(mu|nu)")
    p.add_argument("--function", help="a function JSON or a list of them")
    p.add_argument("--nu", help="transport: a measure JSON or a list of them")
    p.add_argument("--random", type=int, default=0, help="number of seeded random instances")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--M", type=float)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=0.75)
    p.add_argument("--mode", default="lipschitz")

    p = sub.add_parser("constants", parents=[common], help="closed-form constants")
    p.add_argument("which", choices=("pipeline", "tensorize", "mixture", "perturb"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--c-plus", type=float)
    p.add_argument("--lambda0", dest="lam0", type=float)
    p.add_argument("--lambda1", dest="lam1", type=float)
    p.add_argument("--w2sq", type=float)
    p.add_argument("--mu0")
    p.add_argument("--mu1")
    p.add_argument("--osc", type=float)

    p = sub.add_parser("bounds", parents=[common], help="tail bound calculators")
    p.add_argument("kind")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--plot-data", help="write a CSV curve of the bound against t")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--mu")
    p.add_argument("--function")
    return parser


_REQUIRED = {
    ("constants", "pipeline"): ("lam", "c"),
    ("constants", "tensorize"): ("lam",),
    ("constants", "mixture"): ("lam0", "lam1"),
    ("constants", "perturb"): ("lam", "osc"),
}


def _check_required(args):
    need = _REQUIRED.get((args.command, getattr(args, "which", None)), ())
    missing = [n for n in need if getattr(args, n) is None]
    if missing:
        raise InputError(f"missing option(s): {', '.join('--' + m for m in missing)}")
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")


# -------------------------------------------------------------------- output

def _csv(result):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    reports = result.get("reports") if isinstance(result, dict) else None
    if reports:
        cols = ["inequality", "instances", "vacuous", "tolerance", "worst_slack", "passed"]
        writer.writerow(cols)
        for r in reports:
            writer.writerow([r[c] for c in cols])
    else:
        writer.writerow(["key", "value"])
        for key, value in _flatten(result):
            writer.writerow([key, value])
    return buf.getvalue()


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _envelope(args, run, result):
    return _jsonable({
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "command": [args.command] + ([args.which] if hasattr(args, "which") else [])
                   + ([args.kind] if hasattr(args, "kind") else []),
        "seed": args.seed,
        "tolerances": run.tol,
        "inputs": dict(sorted(run.digests.items())),
        "result": result,
    })


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        _check_required(args)
        run = _Run(args)
        result, reports = COMMANDS[args.command](run)
        doc = _envelope(args, run, result)
        text = _csv(doc["result"]) if args.format == "csv" else dumps(doc)
        _emit(text, args.output)
    except UnsupportedInputError as exc:
        print(f"error: unsupported input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ResourceError, MemoryError) as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    violated = any(not r.passed for r in reports or [] if isinstance(r, VerificationReport))
    return EXIT_VIOLATION if violated else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
