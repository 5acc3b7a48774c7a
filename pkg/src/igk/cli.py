"""Command-line front end.

Loads models (builtin families or JSON files), kernels and statistics,
runs the tensor / loss / sufficiency / factorization computations plus the
worked-example reproductions, and writes JSON or CSV reports. All reports
carry the package version and the resolved configuration; numbers are
written with 17 significant digits, so identical invocations produce
byte-identical output. The environment variable IGK_THREADS caps how many
grid points are evaluated concurrently.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, families, infoloss, markov, measures, models, serialize
from .errors import (
    ExprSyntaxError,
    IgkError,
    UnknownIdentifierError,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONTRACT = 3
EXIT_IO = 4


class _Validation(Exception):
    pass


def _threads():
    raw = os.environ.get("IGK_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise _Validation("IGK_THREADS must be an integer, got {!r}".format(raw))
    return max(1, n)


def _pmap(fn, items):
    items = list(items)
    n = _threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _load_model(spec):
    if spec.startswith("builtin:"):
        return families.build(spec[len("builtin:"):])
    obj = serialize.load_json(spec)
    return serialize.model_from_obj(obj, name=spec)


def _load_kernel_or_statistic(path):
    if path.startswith("builtin:"):
        name = path[len("builtin:"):]
        m = re.match(r"^ex-suff-proj(?:\(([^()]*)\))?$", name)
        if m is None:
            raise _Validation(
                "unknown builtin statistic {!r} (available: ex-suff-proj(ns,nt))".format(name)
            )
        args = [int(float(v)) for v in m.group(1).split(",")] if m.group(1) else []
        return families.ex_suff_projection(*args)
    return serialize.kernel_or_statistic_from_obj(serialize.load_json(path))


def _parse_point(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise _Validation("bad parameter point {!r}".format(text))


def _parse_scalar_list(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise _Validation("bad value list {!r}".format(text))


def _parse_grid(text, dim):
    """A parameter grid: 'lo:hi:n' (dim 1), or ';'-separated points."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise _Validation("grid spec {!r} is not lo:hi:n".format(text))
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise _Validation("grid spec {!r} is not lo:hi:n".format(text))
        if n < 1:
            raise _Validation("grid needs at least one point")
        if dim != 1:
            raise _Validation("lo:hi:n grids apply to single-parameter models")
        return [np.array([v]) for v in np.linspace(lo, hi, n)]
    points = [_parse_point(part) for part in text.split(";")]
    for p in points:
        if p.shape != (dim,):
            raise _Validation(
                "grid point {} has dimension {}, model has {}".format(
                    p.tolist(), p.shape[0], dim
                )
            )
    return points


def _directions(model, random_n, seed):
    d = model.domain.dim
    dirs = [np.eye(d)[a] for a in range(d)]
    if random_n:
        rng = np.random.default_rng(seed)
        for _ in range(random_n):
            v = rng.standard_normal(d)
            norm = np.linalg.norm(v)
            dirs.append(v / norm if norm > 0 else np.eye(d)[0])
    return dirs


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _report(config, body):
    out = {"version": __version__, "config": config}
    out.update(body)
    return out


def _config(args, keys):
    cfg = {}
    for key in keys:
        value = getattr(args, key.replace("-", "_"))
        cfg[key] = value
    return cfg


def _require_json(args):
    if args.format != "json":
        raise _Validation(
            "subcommand {!r} only emits json".format(args.subcommand)
        )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_tensor(args):
    _require_json(args)
    if args.order < 1:
        raise _Validation("tensor order must be >= 1, got {}".format(args.order))
    model = _load_model(args.model)
    xi = _parse_point(args.xi)
    tensor = models.tau_tensor(model, xi, args.order)
    key = {1: "tau1", 2: "fisher", 3: "amari_chentsov"}.get(args.order, "tau")
    body = {"order": args.order, key: tensor.values.tolist()}
    cfg = _config(args, ("model", "order", "xi"))
    return serialize.dumps(_report(cfg, body))


def _cmd_pushforward(args):
    _require_json(args)
    kernel = _load_kernel_or_statistic(args.kernel)
    nu = serialize.measure_from_obj(serialize.load_json(args.measure))
    if isinstance(nu, measures.PowerMeasure):
        out = markov.power_pushforward(kernel, nu)
    else:
        out = markov.pushforward(markov.as_kernel(kernel), nu)
    cfg = _config(args, ("kernel", "measure"))
    return serialize.dumps(_report(cfg, {"measure": serialize.measure_to_obj(out)}))


def _loss_entries_obj(report):
    return [
        {
            "xi": list(e.xi),
            "direction": list(e.direction),
            "source_norm_k": e.source_norm_k,
            "induced_norm_k": e.induced_norm_k,
            "loss": e.loss,
        }
        for e in report.entries
    ]


def _loss_csv(report):
    rows = [
        (
            " ".join(serialize.dumps(v) for v in e.xi),
            " ".join(serialize.dumps(v) for v in e.direction),
            e.source_norm_k,
            e.induced_norm_k,
            e.loss,
        )
        for e in report.entries
    ]
    return serialize.write_csv(
        ("xi", "direction", "source_norm_k", "induced_norm_k", "loss"), rows
    )


def _grid_loss_report(model, kernel, grid, dirs, k):
    # one loss_table call per grid point so points can run concurrently
    reports = _pmap(
        lambda xi: infoloss.loss_table(model, kernel, [xi], dirs, k), grid
    )
    entries = tuple(e for r in reports for e in r.entries)
    losses = [e.loss for e in entries]
    argmax = int(np.argmax(losses))
    return infoloss.LossReport(
        k=float(k),
        entries=entries,
        max_loss=float(losses[argmax]),
        argmax=argmax,
    )


def _kernel_arg(args):
    given = [s for s in (args.kernel, args.statistic) if s]
    if len(given) != 1:
        raise _Validation("give exactly one of --kernel or --statistic")
    return _load_kernel_or_statistic(given[0])


def _cmd_infoloss(args):
    model = _load_model(args.model)
    kernel = _kernel_arg(args)
    if args.k < 1:
        raise _Validation("k must be >= 1, got {}".format(args.k))
    grid = _parse_grid(args.xi_grid, model.domain.dim)
    dirs = _directions(model, args.random, args.seed)
    report = _grid_loss_report(model, kernel, grid, dirs, args.k)
    if args.format == "csv":
        return _loss_csv(report)
    cfg = _config(
        args, ("model", "kernel", "statistic", "k", "xi-grid", "random", "seed")
    )
    body = {
        "k": report.k,
        "entries": _loss_entries_obj(report),
        "max_loss": report.max_loss,
        "argmax": report.argmax,
        "warnings": list(report.warnings),
    }
    return serialize.dumps(_report(cfg, body))


def _cmd_sufficient(args):
    _require_json(args)
    model = _load_model(args.model)
    kernel = _kernel_arg(args)
    if not args.k > 1:
        raise _Validation("sufficiency needs k > 1, got {}".format(args.k))
    grid = _parse_grid(args.xi_grid, model.domain.dim)
    verdict, report = infoloss.is_sufficient(model, kernel, grid, args.k, tol=args.tol)
    cfg = _config(
        args, ("model", "kernel", "statistic", "k", "xi-grid", "tol")
    )
    body = {
        "sufficient": bool(verdict),
        "k": report.k,
        "tol": args.tol,
        "max_loss": report.max_loss,
        "entries": _loss_entries_obj(report),
        "warnings": list(report.warnings),
    }
    return serialize.dumps(_report(cfg, body))


def _factorization_obj(result):
    obj = {"status": result.status, "residual": result.residual}
    obj["mu0"] = (
        None if result.mu0 is None else serialize.measure_to_obj(result.mu0)
    )
    obj["conflict"] = (
        None
        if result.conflict is None
        else {
            "xi_a": list(result.conflict.xi_a),
            "xi_b": list(result.conflict.xi_b),
            "atom": result.conflict.atom,
            "variation": result.conflict.variation,
        }
    )
    obj["subgrids"] = [
        {
            "xi_first": list(s.xi_first),
            "xi_last": list(s.xi_last),
            "n_points": s.n_points,
            "mu": serialize.measure_to_obj(s.mu),
        }
        for s in result.subgrids
    ]
    obj["reconstruction_residual"] = result.reconstruction_residual
    return obj


def _cmd_factorize(args):
    _require_json(args)
    model = _load_model(args.model)
    statistic = _load_kernel_or_statistic(args.statistic)
    if not isinstance(statistic, markov.Statistic):
        raise _Validation("--statistic must name a statistic, not a kernel")
    grid = _parse_grid(args.xi_grid, model.domain.dim)
    result = infoloss.fisher_neyman_check(model, statistic, grid, rel_tol=args.rel_tol)
    cfg = _config(args, ("model", "statistic", "xi-grid", "rel-tol"))
    return serialize.dumps(_report(cfg, _factorization_obj(result)))


def _cmd_decompose_kernel(args):
    kernel = serialize.kernel_from_obj(serialize.load_json(args.kernel))
    k_cong, kappa1, kappa2 = markov.decompose_kernel(kernel)
    if args.format == "csv":
        return serialize.kernel_to_csv(k_cong)
    cfg = _config(args, ("kernel",))
    body = {
        "k_cong": serialize.kernel_to_obj(k_cong),
        "kappa1": serialize.statistic_to_obj(kappa1),
        "kappa2": serialize.statistic_to_obj(kappa2),
    }
    return serialize.dumps(_report(cfg, body))


def _cmd_check_integrability(args):
    model = _load_model(args.model)
    if args.k < 1:
        raise _Validation("k must be >= 1, got {}".format(args.k))
    grid = _parse_grid(args.xi_grid, model.domain.dim)
    dirs = _directions(model, args.random, args.seed)
    report = models.check_k_integrability(model, grid, dirs, args.k, tol=args.tol)
    rows = [
        (
            " ".join(serialize.dumps(v) for v in report.grid[i]),
            " ".join(serialize.dumps(v) for v in report.directions[a]),
            report.values[i, a],
        )
        for i in range(len(report.grid))
        for a in range(len(report.directions))
    ]
    if args.format == "csv":
        return serialize.write_csv(("xi", "direction", "k_norm"), rows)
    cfg = _config(args, ("model", "k", "xi-grid", "tol", "random", "seed"))
    body = {
        "k": report.k,
        "grid": [list(x) for x in report.grid],
        "directions": [list(v) for v in report.directions],
        "values": [list(row) for row in report.values],
        "max_jump": report.max_jump,
        "max_jump_at": list(report.max_jump_at),
        "flagged": [list(f) for f in report.flagged],
        "passed": report.passed,
    }
    return serialize.dumps(_report(cfg, body))


def _cmd_paper_example(args):
    _require_json(args)
    if args.example == "bernoulli":
        model = families.bernoulli()
        xis = _parse_scalar_list(args.xi or "0.1,0.25,0.5")

        def one(x):
            g = models.fisher_metric(model, [x]).values[0, 0]
            closed = 1.0 / (x * (1.0 - x))
            return {"xi": x, "fisher": g, "closed_form": closed,
                    "abs_err": abs(g - closed)}

        rows = _pmap(one, xis)
        cfg = _config(args, ("example", "xi"))
        body = {
            "example": "bernoulli",
            "rows": rows,
            "max_abs_err": max(r["abs_err"] for r in rows),
        }
        return serialize.dumps(_report(cfg, body))

    if args.example == "ex4.1":
        n = args.grid_points
        model = families.ex41(n)
        base = models.evaluate(model, [0.0]).mass
        xis = _parse_scalar_list(args.xi or "1,0.5,0.3,0.2")
        for x in xis:
            if x == 0.0:
                raise _Validation("the difference quotient needs xi != 0")

        def quotient(x):
            mass = models.evaluate(model, [x]).mass
            nu = measures.SignedMeasure(model.space, (mass - base) / x)
            return measures.tv_norm(nu)

        values = _pmap(quotient, xis)
        rows = [{"xi": x, "l1_quotient": q} for x, q in zip(xis, values)]
        cfg = _config(args, ("example", "xi", "grid-points"))
        body = {
            "example": "ex4.1",
            "grid_points": n,
            "rows": rows,
            "monotone_decreasing": all(
                a > b for a, b in zip(values, values[1:])
            ),
        }
        return serialize.dumps(_report(cfg, body))

    if args.example == "ex-suff":
        try:
            ns, nt = (int(v) for v in args.cells.split("x"))
        except ValueError:
            raise _Validation("--cells must look like 200x100")
        model = families.ex_suff(ns, nt)
        statistic = families.ex_suff_projection(ns, nt)
        grid = _parse_grid(args.xi_grid or "-1:1:5", 1)
        verdict, report = infoloss.is_sufficient(
            model, statistic, grid, args.k, tol=args.tol
        )
        result = infoloss.fisher_neyman_check(model, statistic, grid)
        cfg = _config(args, ("example", "k", "xi-grid", "cells", "tol"))
        body = {
            "example": "ex-suff",
            "cells": [ns, nt],
            "k": args.k,
            "rows": [
                {"xi": list(e.xi), "loss": e.loss} for e in report.entries
            ],
            "max_loss": report.max_loss,
            "verdict": "sufficient" if verdict else "not sufficient",
            "warnings": list(report.warnings),
            "factorization": _factorization_obj(result),
        }
        return serialize.dumps(_report(cfg, body))

    raise _Validation("unknown example {!r}".format(args.example))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="igk",
        description="Finite-space information geometry: tensors, pushforwards, "
        "information loss, sufficiency, factorization.",
    )
    parser.add_argument("--version", action="version", version="igk " + __version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, fmt=True):
        p.add_argument("--out", help="output path (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")
        else:
            p.set_defaults(format="json")
        p.add_argument("--seed", type=int, default=0, help="seed for random directions")

    p = sub.add_parser("tensor", help="Fisher matrix and higher-order tensors")
    p.add_argument("--model", required=True, help="builtin:NAME or a model JSON path")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--xi", required=True, help="parameter point, comma-separated")
    common(p, fmt=False)
    p.set_defaults(run=_cmd_tensor)

    p = sub.add_parser("pushforward", help="push a measure through a kernel")
    p.add_argument("--kernel", required=True, help="kernel or statistic JSON path")
    p.add_argument("--measure", required=True, help="measure JSON path")
    common(p, fmt=False)
    p.set_defaults(run=_cmd_pushforward)

    p = sub.add_parser("infoloss", help="order-k information loss over a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--kernel")
    p.add_argument("--statistic")
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--xi-grid", required=True, help="lo:hi:n or ';'-separated points")
    p.add_argument("--random", type=int, default=0,
                   help="additional random unit directions")
    common(p)
    p.set_defaults(run=_cmd_infoloss)

    p = sub.add_parser("sufficient", help="zero-loss test over a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--kernel")
    p.add_argument("--statistic")
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--xi-grid", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p, fmt=False)
    p.set_defaults(run=_cmd_sufficient)

    p = sub.add_parser("factorize", help="Fisher-Neyman factorization check")
    p.add_argument("--model", required=True)
    p.add_argument("--statistic", required=True)
    p.add_argument("--xi-grid", required=True)
    p.add_argument("--rel-tol", type=float, default=1e-9)
    common(p, fmt=False)
    p.set_defaults(run=_cmd_factorize)

    p = sub.add_parser("decompose-kernel",
                       help="split a kernel into a congruent part and a statistic")
    p.add_argument("--kernel", required=True)
    common(p)
    p.set_defaults(run=_cmd_decompose_kernel)

    p = sub.add_parser("check-integrability",
                       help="probe continuity of the k-norm over a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--xi-grid", required=True)
    p.add_argument("--tol", type=float, default=0.5)
    p.add_argument("--random", type=int, default=0)
    common(p)
    p.set_defaults(run=_cmd_check_integrability)

    p = sub.add_parser("paper-example", help="reproduce a worked example")
    p.add_argument("example", choices=("ex4.1", "ex-suff", "bernoulli"))
    p.add_argument("--xi", help="comma-separated scalar parameters")
    p.add_argument("--xi-grid")
    p.add_argument("--grid-points", type=int, default=20000)
    p.add_argument("--cells", default="200x100")
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p, fmt=False)
    p.set_defaults(run=_cmd_paper_example)

    return parser


_VALUE_FLAGS = ("--xi", "--xi-grid")


def _merge_negative_values(argv):
    """Let '--xi-grid -1:1:5' parse although the value starts with '-'."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok in _VALUE_FLAGS
            and i + 1 < len(argv)
            and len(argv[i + 1]) > 1
            and argv[i + 1][0] == "-"
            and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")
        ):
            out.append("{}={}".format(tok, argv[i + 1]))
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_negative_values(list(argv)))
    try:
        text = args.run(args)
    except _Validation as err:
        print("error: ValidationError: {}".format(err), file=sys.stderr)
        return EXIT_VALIDATION
    except (ExprSyntaxError, UnknownIdentifierError) as err:
        print("error: {}: {}".format(type(err).__name__, err), file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as err:
        print("error: {}: {}".format(type(err).__name__, err), file=sys.stderr)
        return EXIT_VALIDATION
    except IgkError as err:
        print("error: {}: {}".format(type(err).__name__, err), file=sys.stderr)
        return EXIT_CONTRACT
    except OSError as err:
        print("error: {}: {}".format(type(err).__name__, err), file=sys.stderr)
        return EXIT_IO
    try:
        _emit(args, text)
    except OSError as err:
        print("error: {}: {}".format(type(err).__name__, err), file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
