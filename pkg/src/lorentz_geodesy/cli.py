"""Command-line front end.

Exit codes: 0 on success, 2 when the answer is a negative or undecided
verdict (NotFound, Inconclusive, not connectable), 1 on errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .completeness import Verdict, classify_grw, classify_warped_radial
from .exceptions import ConfigError, GeodesyError
from .integrator import IntegratorOptions, integrate_geodesic
from .io import (CSV_COLUMNS, SCHEMA_VERSION, dumps, parse_interval, parse_params, parse_vector,
                 load_config, write_csv, write_json)
from .variational import (VariationalOptions, minimize_connect_static, multistart_windings,
                          solve_splitting_saddle, stationary_connect_shooting)

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

_INT_OPTS = {"windings", "N", "modes", "max_iter", "max_steps", "n", "seed"}
_FLOAT_OPTS = {"rtol", "atol", "eps"}

CITE_INTEGRATE = ("extendibility: a curve with finite parameter whose velocity leaves every compact "
                  "set of the tangent bundle is inextendible (blow-up detection)")
CITE_PSEUDOSPHERE = "pseudosphere connectability: p and q are joined by a geodesic iff <p,q>_1 > -1"


def build_parser():
    ap = argparse.ArgumentParser(prog="lorentz-geodesy",
                                 description="Geodesics of semi-Riemannian model spacetimes.")
    ap.add_argument("--config", help="key=value config file (sections model, task, options, output)")
    ap.add_argument("--json", action="store_true", default=None, help="print a JSON report on stdout")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed for randomized starts")
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command")

    cat = sub.add_parser("catalog", parents=[common], help="list catalog models")
    cat.add_argument("action", choices=["list"])

    it = sub.add_parser("integrate", parents=[common], help="integrate one geodesic")
    _model_args(it)
    it.add_argument("--point", help="initial point, comma separated")
    it.add_argument("--velocity", help="initial velocity, comma separated")
    it.add_argument("--span", help="parameter span A:B (default 0:10)")
    it.add_argument("--rtol", type=float)
    it.add_argument("--atol", type=float)
    it.add_argument("--max-steps", dest="max_steps", type=int)
    it.add_argument("--out", help="trajectory CSV path")
    it.add_argument("--summary", help="summary JSON path (default: CSV path with .json)")

    co = sub.add_parser("completeness", parents=[common], help="integral completeness criteria")
    co.add_argument("kind", choices=["grw", "warped"])
    co.add_argument("--f", help="warping function expression")
    co.add_argument("--interval", help="time interval A:B for grw (default -inf:inf)")
    co.add_argument("--var", help="variable of f (default t for grw)")
    co.add_argument("--fiber-incomplete", dest="fiber_incomplete", action="store_true", default=None)
    co.add_argument("--base", help="Riemannian base: euclidean:N, circle:L or torus:L1,L2")
    co.add_argument("--x0", help="base point for the radial profile")

    cn = sub.add_parser("connect", parents=[common], help="geodesics joining two events")
    cn.add_argument("kind", choices=["static", "stationary", "splitting"])
    _model_args(cn)
    cn.add_argument("--p", help="first event (t, x...)")
    cn.add_argument("--q", help="second event (t, x...)")
    cn.add_argument("--windings", type=int, help="winding classes |k| <= K (static, quotient factor)")
    cn.add_argument("--N", type=int, help="path segments (default 64)")
    cn.add_argument("--modes", type=int, help="Galerkin time modes (default 16)")
    cn.add_argument("--eps", type=float, help="penalty parameter (splitting)")
    cn.add_argument("--max-iter", dest="max_iter", type=int)
    cn.add_argument("--out-dir", dest="out_dir", help="directory for result JSON and trajectory CSVs")

    ps = sub.add_parser("pseudosphere", parents=[common], help="connectability on the pseudosphere S^n_1")
    ps.add_argument("--n", type=int, help="dimension n (default 2)")
    ps.add_argument("--p", help="ambient point on S^n_1 (n+1 numbers)")
    ps.add_argument("--q", help="ambient point on S^n_1 (n+1 numbers)")
    return ap


def _model_args(p):
    p.add_argument("--model", help="catalog id")
    p.add_argument("--param", action="append", default=None, metavar="KEY=VALUE",
                   help="catalog parameter (repeatable)")


def _merge_config(args, cfg):
    for section in ("task", "options", "output"):
        for key, value in cfg.get(section, {}).items():
            dest = key.replace("-", "_")
            if dest == "command" or not hasattr(args, dest) or getattr(args, dest) is not None:
                continue
            try:
                if dest in _INT_OPTS:
                    value = int(value)
                elif dest in _FLOAT_OPTS:
                    value = float(value)
                elif dest in ("json", "fiber_incomplete"):
                    value = value.strip().lower() in ("1", "true", "yes", "on")
            except ValueError:
                raise ConfigError(f"config key {key!r}: invalid value {value!r}") from None
            setattr(args, dest, value)
    model = dict(cfg.get("model", {}))
    if hasattr(args, "model"):
        if args.model is None:
            args.model = model.pop("id", None)
        else:
            model.pop("id", None)
        params = model
        params.update(parse_params(args.param))
        args.params = params
    return args


_VALUE_OPTS = {"--interval", "--span", "--p", "--q", "--point", "--velocity", "--x0", "--f"}


def _glue_negative_values(argv):
    """Attach values such as ``-inf:inf`` or ``-1,0`` to their option, which argparse would refuse."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def parse_args(argv):
    argv = _glue_negative_values(list(argv))
    ap = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    cfg = load_config(known.config) if known.config else {}
    commands = {"catalog", "integrate", "completeness", "connect", "pseudosphere"}
    if cfg and not any(a in commands for a in rest):
        command = cfg.get("task", {}).get("command")
        if not command:
            raise ConfigError("no subcommand given and config has no [task] command")
        argv = list(argv) + command.split()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_help(sys.stderr)
        raise ConfigError("a subcommand is required")
    args = _merge_config(args, cfg)
    if hasattr(args, "model") and not hasattr(args, "params"):
        args.params = parse_params(args.param)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _emit(args, doc, lines):
    doc = dict(doc)
    doc["schema"] = SCHEMA_VERSION
    if args.json:
        sys.stdout.write(dumps(doc))
    else:
        for line in lines:
            print(line)


# -- commands ------------------------------------------------------------------------

def cmd_catalog(args):
    entries = {k: d for k, (_, d) in sorted(catalog.CATALOG.items())}
    _emit(args, {"catalog": entries}, [f"{k:22s} {d}" for k, d in entries.items()])
    return EXIT_OK


def cmd_integrate(args):
    _require(args, "model", "point", "velocity")
    m = catalog.build(args.model, **args.params)
    p = parse_vector(args.point, "point")
    v = parse_vector(args.velocity, "velocity")
    kw = {"span": parse_interval(args.span or "0:10", "span")}
    for k in ("rtol", "atol", "max_steps"):
        if getattr(args, k) is not None:
            kw[k] = getattr(args, k)
    sol = integrate_geodesic(m, p, v, IntegratorOptions(**kw))
    summary = sol.summary()
    summary.update({"model": m.name, "message": sol.message, "citation": CITE_INTEGRATE,
                    "csv_columns": CSV_COLUMNS})
    if sol.boundary_point is not None:
        summary["boundary_point"] = [float(a) for a in sol.boundary_point]
    if args.out:
        header, rows = sol.table()
        write_csv(args.out, header, rows)
        summary_path = args.summary or str(Path(args.out).with_suffix(".json"))
        write_json(summary_path, summary)
        summary["outputs"] = {"trajectory": args.out, "summary": summary_path}
    lines = [f"termination: {summary['termination']}",
             f"b_hat: {summary['b_hat']}", f"confidence: {summary['confidence']}",
             f"winding: {summary['winding']}", f"citation: {CITE_INTEGRATE}"]
    _emit(args, summary, lines)
    return EXIT_OK


def _base_model(spec):
    kind, _, val = (spec or "euclidean:1").partition(":")
    if kind == "euclidean":
        return catalog.euclidean(int(val or 1))
    if kind == "circle":
        return catalog.flat_torus([float(val or 1.0)])
    if kind == "torus":
        return catalog.flat_torus(parse_vector(val or "1,1", "torus periods"))
    raise ConfigError(f"unknown base {spec!r}; use euclidean:N, circle:L or torus:L1,L2")


def _verdict_lines(verdict):
    lines = [f"{k}: {verdict[k].value}" for k in ("timelike", "lightlike", "spacelike")]
    for side, d in verdict.per_side.items():
        lines.append(f"  {side}: " + ", ".join(f"{k} {v.value}" for k, v in d.items()))
    for ev in verdict.evidence:
        if isinstance(ev, dict) and ev.get("citation"):
            lines.append(f"citation: {ev.get('criterion', '')}: {ev['citation']}")
    return lines


def cmd_completeness(args):
    _require(args, "f")
    fiber_complete = not args.fiber_incomplete
    if args.kind == "grw":
        verdict = classify_grw(args.f, parse_interval(args.interval or "-inf:inf"),
                               fiber_complete=fiber_complete, var=args.var or "t")
    else:
        base = _base_model(args.base)
        x0 = None if args.x0 is None else parse_vector(args.x0, "x0")
        verdict = classify_warped_radial(base, args.f, x0=x0, fiber_complete=fiber_complete)
    doc = verdict.to_dict()
    _emit(args, doc, _verdict_lines(verdict))
    undecided = any(verdict[k] is Verdict.INCONCLUSIVE for k in ("timelike", "lightlike", "spacelike"))
    return EXIT_NEGATIVE if undecided else EXIT_OK


def cmd_connect(args):
    _require(args, "model", "p", "q")
    m = catalog.build(args.model, **args.params)
    spec = m.params.get("spec")
    p = parse_vector(args.p, "event p")
    q = parse_vector(args.q, "event q")
    kw = {}
    for k in ("N", "modes", "eps", "max_iter", "seed"):
        if getattr(args, k, None) is not None:
            kw[k] = getattr(args, k)
    opts = VariationalOptions(**kw)
    if args.kind in ("static", "stationary") and not isinstance(spec, catalog.StationarySpec):
        raise ConfigError(f"model {args.model!r} is not a static/stationary model")
    if args.kind == "splitting" and not isinstance(spec, catalog.SplittingSpec):
        raise ConfigError(f"model {args.model!r} is not a splitting model")
    if args.kind == "static":
        if args.windings is not None:
            res = multistart_windings(spec, p, q, args.windings, opts)
        else:
            res = minimize_connect_static(spec, p, q, opts)
    elif args.kind == "stationary":
        res = stationary_connect_shooting(spec, p, q, opts)
    else:
        res = solve_splitting_saddle(spec, p, q, opts=opts)
    doc = res.to_dict()
    doc["model"] = m.name
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for i, rec in enumerate(res.records):
            if rec.geodesic is not None:
                name = f"geodesic_{i:03d}.csv"
                header, rows = rec.geodesic.table()
                write_csv(out / name, header, rows)
                files.append(name)
        doc["trajectories"] = files
        doc["csv_columns"] = CSV_COLUMNS
        write_json(out / "result.json", doc)
    lines = [f"status: {res.status.value}"]
    if res.diagnostic:
        lines.append(f"diagnostic: {res.diagnostic}")
    for rec in res.records:
        lab = "" if rec.winding is None else f" winding={list(rec.winding)}"
        lines.append(f"  action={rec.action:.12g} residual={rec.residual}{lab}")
    lines.append(f"citation: {res.citation}")
    _emit(args, doc, lines)
    return EXIT_OK if res.found else EXIT_NEGATIVE


def cmd_pseudosphere(args):
    _require(args, "p", "q")
    n = args.n or 2
    p = parse_vector(args.p, "point p")
    q = parse_vector(args.q, "point q")
    if len(p) != n + 1 or len(q) != n + 1:
        raise ConfigError(f"points of S^{n}_1 need {n + 1} ambient coordinates")
    ok = catalog.pseudosphere_connectable(p, q)
    ip = float(catalog.pseudosphere_inner(p, q))
    doc = {"connectable": bool(ok), "inner_product": ip, "n": n, "citation": CITE_PSEUDOSPHERE}
    _emit(args, doc, ["connectable" if ok else "not connectable", f"<p,q>_1 = {ip:.17g}",
                      f"citation: {CITE_PSEUDOSPHERE}"])
    return EXIT_OK if ok else EXIT_NEGATIVE


COMMANDS = {"catalog": cmd_catalog, "integrate": cmd_integrate, "completeness": cmd_completeness,
            "connect": cmd_connect, "pseudosphere": cmd_pseudosphere}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        if args.seed is not None:
            np.random.seed(args.seed)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    except (GeodesyError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
