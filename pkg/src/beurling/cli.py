"""Command-line interface: every experiment as a reproducible subcommand.

Output is deterministic given the configuration: CSV rows carry `#`-prefixed
manifest lines echoing the resolved config and library version; JSON output
carries the same manifest as a top-level object.  Exit codes: 0 success,
1 domain error (diagnostic on stderr), 2 usage error.

No plotting here; the emitted columns are plot-ready for external tools.
Renormalisation is explicit: `--power LAMBDA` applies the power transform
at load time, never implicitly.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .counting import counting_report, stream_gintegers
from .errors import BeurlingError, ParameterError
from .mellin import (
    EXPANSIONS,
    KERNELS,
    PartitionSpec,
    check_fe_mellin,
    continue_Gzeta,
    expansion_from_json,
    fe_residual,
    mellin_G,
    partition_F,
    residual_series_from_json,
    theta_pair,
)
from .orders import (
    InducedOracle,
    ProcessOracle,
    check_axioms,
    orderings_coincide,
    reconstruct,
)
from .perron import PerronParams, perron_convergence_scan, perron_psi
from .counting import psi as psi_exact
from .systems import from_file, from_list, gaussian_system, power_system, rational_primes
from .zeta import phi_continued, phi_dirichlet, zeta_dirichlet, zeta_euler, zeta_mellin_identity_check


def _parse_complex(text: str) -> complex:
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    if cleaned.endswith("j") or "j" in cleaned:
        return complex(cleaned)
    return complex(float(cleaned), 0.0)


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParameterError(f"grid spec must be a:b:step, got {text!r}")
        a, b, step = map(float, parts)
        if step <= 0 or b < a:
            raise ParameterError(f"bad grid spec {text!r}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [a + i * step for i in range(n)]
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _load_system(args) -> "GPrimeSystem":
    spec = args.system
    if spec is None:
        raise ParameterError("this command needs --system")
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if args.limit is None:
            raise ParameterError("builtin systems need --limit")
        if name in ("rationals", "rational"):
            system = rational_primes(args.limit)
        elif name in ("gaussian", "qi"):
            system = gaussian_system(args.limit)
        else:
            raise ParameterError(f"unknown builtin system {name!r}")
    elif spec.startswith("file:"):
        system = from_file(spec.split(":", 1)[1])
        if args.limit is not None:
            system = from_list(list(system.primes), args.limit, label=system.label)
    elif spec.startswith("list:"):
        values = [float(v) for v in spec.split(":", 1)[1].split(",")]
        limit = args.limit if args.limit is not None else max(values)
        system = from_list(values, limit)
    else:
        raise ParameterError(f"unknown system spec {spec!r}")
    if getattr(args, "power", None):
        system = power_system(system, args.power)
    return system


def _manifest(args, command: str) -> dict:
    skip = {"func", "out", "config"}
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None
    }
    return {"tool": "beurling", "version": __version__, "command": command, **{
        k: (v if isinstance(v, (int, float, str, bool)) else str(v)) for k, v in resolved.items()
    }}


def _emit(args, manifest: dict, header: list[str], rows: list[list], extra: dict | None = None):
    if args.format == "json":
        payload = {
            "manifest": manifest,
            "rows": [dict(zip(header, row)) for row in rows],
        }
        if extra:
            payload.update(extra)
        text = json.dumps(payload, sort_keys=True, default=str) + "\n"
    else:
        buf = io.StringIO()
        for key in sorted(manifest):
            buf.write(f"# {key}={manifest[key]}\n")
        if extra:
            for key in sorted(extra):
                buf.write(f"# {key}={extra[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def cmd_gen(args) -> int:
    system = _load_system(args)
    rows = []
    for g in stream_gintegers(system, args.bound):
        exps = " ".join(f"{i}^{a}" for i, a in g.exponents) or "1"
        rows.append([_fmt(g.value), _fmt(g.log_value), exps])
    _emit(args, _manifest(args, "gen"), ["value", "log_value", "exponents"], rows)
    return 0


def cmd_count(args) -> int:
    system = _load_system(args)
    grid = _parse_grid(args.grid)
    report = counting_report(system, grid)
    rows = [
        [_fmt(float(x)), int(n), int(p), _fmt(float(ps))]
        for x, n, p, ps in zip(report.grid, report.N, report.pi, report.psi)
    ]
    extra = {"rho_hat": _fmt(report.rho_hat)}
    _emit(args, _manifest(args, "count"), ["x", "N", "pi", "psi"], rows, extra)
    return 0


def cmd_zeta(args) -> int:
    system = _load_system(args)

    def evaluate(stext: str):
        s = _parse_complex(stext)
        if args.method == "euler":
            r = zeta_euler(system, s, args.cutoff)
            val, tail = r.value, r.tail_bound
        elif args.method == "dirichlet":
            r = zeta_dirichlet(system, s, args.cutoff)
            val, tail = r.value, r.tail_bound
        elif args.method == "continued":
            r = phi_continued(system, s, args.cutoff)
            val, tail = r.value, r.tail_bound
        elif args.method == "phi":
            r = phi_dirichlet(system, s, args.cutoff)
            val, tail = r.value, r.tail_bound
        else:  # mellin identity residual
            x_max = args.cutoff if args.cutoff else system.limit
            resid = zeta_mellin_identity_check(system, s, x_max)
            val, tail = complex(resid), 0.0
        return [_fmt(s.real), _fmt(s.imag), _fmt(val.real), _fmt(val.imag), _fmt(tail)]

    # evaluations are pure; shard across threads, assemble in input order
    if args.threads > 1 and len(args.s) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(evaluate, args.s))
    else:
        rows = [evaluate(stext) for stext in args.s]
    _emit(
        args,
        _manifest(args, "zeta"),
        ["s_re", "s_im", "value_re", "value_im", "tail_bound"],
        rows,
    )
    return 0


def cmd_perron(args) -> int:
    system = _load_system(args)
    rows = []
    header = ["T", "value", "oracle", "error", "budget", "imag_residual"]
    if args.scan:
        ts = [float(t) for t in args.scan.split(",")]
        scan = perron_convergence_scan(system, args.x, ts, threads=args.threads)
        for (T, value, err, budget) in scan.rows:
            rows.append([_fmt(T), _fmt(value), _fmt(scan.oracle), _fmt(err), _fmt(budget), ""])
        extra = {"monotone_trend": str(scan.monotone_trend).lower()}
    else:
        params = PerronParams(x=args.x, T=args.T, c=args.c)
        res = perron_psi(system, params, threads=args.threads)
        oracle = psi_exact(system, args.x)
        rows.append(
            [
                _fmt(args.T),
                _fmt(res.value),
                _fmt(oracle),
                _fmt(abs(res.value - oracle)),
                _fmt(res.budget.total),
                _fmt(res.imag_residual),
            ]
        )
        extra = {
            "budget_far": _fmt(res.budget.far_term),
            "budget_near": _fmt(res.budget.near_term),
            "budget_quadrature": _fmt(res.budget.quadrature),
        }
    _emit(args, _manifest(args, "perron"), header, rows, extra)
    return 0


def _load_expansion(spec: str):
    if spec in EXPANSIONS:
        return EXPANSIONS[spec]
    with open(spec) as fh:
        return expansion_from_json(fh.read())


def cmd_mellin(args) -> int:
    kernel = KERNELS.get(args.kernel)
    if kernel is None:
        raise ParameterError(f"unknown kernel {args.kernel!r}; have {sorted(KERNELS)}")
    rows = []
    if args.op == "transform":
        for stext in args.s:
            s = _parse_complex(stext)
            r = mellin_G(kernel, s)
            rows.append([_fmt(s.real), _fmt(s.imag), _fmt(r.value.real), _fmt(r.value.imag), _fmt(r.tail_bound)])
        header = ["s_re", "s_im", "value_re", "value_im", "quad_error"]
    elif args.op == "continue":
        system = _load_system(args)
        expansion = _load_expansion(args.expansion or args.kernel)
        for stext in args.s:
            s = _parse_complex(stext)
            r = continue_Gzeta(system, kernel, expansion, s)
            rows.append([_fmt(s.real), _fmt(s.imag), _fmt(r.value.real), _fmt(r.value.imag), _fmt(r.tail_bound)])
        header = ["s_re", "s_im", "value_re", "value_im", "tail_bound"]
    else:  # partition
        system = _load_system(args)
        for xtext in args.x:
            x = float(xtext)
            r = partition_F(system, kernel, x)
            rows.append([_fmt(x), _fmt(r.value.real), _fmt(r.value.imag), _fmt(r.tail_bound)])
        header = ["x", "F_re", "F_im", "tail_bound"]
    _emit(args, _manifest(args, "mellin"), header, rows)
    return 0


def cmd_fe_check(args) -> int:
    if args.pair == "theta":
        spec1, spec2, H = theta_pair(args.limit or 10**4)
    else:
        system = _load_system(args)
        kernel = KERNELS.get(args.kernel)
        if kernel is None:
            raise ParameterError(f"unknown kernel {args.kernel!r}")
        expansion = _load_expansion(args.expansion or args.kernel)
        spec1 = spec2 = PartitionSpec(system, kernel, expansion, "custom")
        with open(args.h_file) as fh:
            H = residual_series_from_json(fh.read())
    xs = np.geomspace(args.x_min, args.x_max, args.x_points)
    rows = []
    worst = 0.0
    for x in xs:
        res = fe_residual(spec1, spec2, H, float(x))
        worst = max(worst, abs(res.value))
        rows.append(
            [
                _fmt(float(x)),
                _fmt(res.value.real),
                _fmt(res.value.imag),
                _fmt(res.tail_budget),
                str(res.inconclusive).lower(),
            ]
        )
    extra = {"max_abs_residual": _fmt(worst)}
    if args.s_grid:
        sgrid = [_parse_complex(tok) for tok in args.s_grid.split(",")]
        rep = check_fe_mellin(spec1, spec2, sgrid)
        extra["mellin_max_residual"] = _fmt(rep.max_residual)
        extra["mellin_skipped"] = ";".join(str(s) for s, _ in rep.skipped) or "none"
    _emit(
        args,
        _manifest(args, "fe-check"),
        ["x", "residual_re", "residual_im", "tail_budget", "inconclusive"],
        rows,
        extra,
    )
    return 0


def _load_oracle(spec: str, args):
    if spec.startswith("cmd:"):
        return ProcessOracle(spec.split(":", 1)[1])
    if spec.startswith("system:"):
        return InducedOracle(from_file(spec.split(":", 1)[1]))
    if spec.startswith("builtin:"):
        saved = args.system
        args.system = spec
        system = _load_system(args)
        args.system = saved
        return InducedOracle(system)
    raise ParameterError(f"unknown oracle spec {spec!r}")


def cmd_order(args) -> int:
    if args.action == "reconstruct":
        oracle = _load_oracle(args.oracle, args)
        try:
            rec = reconstruct(oracle, args.p1, args.K, args.n)
        finally:
            if isinstance(oracle, ProcessOracle):
                oracle.close()
        rows = [
            [k + 1, _fmt(a.value), _fmt(a.radius), a.f, _fmt(p)]
            for k, (a, p) in enumerate(zip(rec.alpha, rec.system.primes))
        ]
        extra = {"limit": _fmt(rec.system.limit), "p1": _fmt(rec.p1)}
        _emit(
            args,
            _manifest(args, "order"),
            ["k", "alpha", "radius", "f", "prime"],
            rows,
            extra,
        )
        return 0
    # coincide
    saved = args.system
    s1 = _load_system(args)
    args.system = args.system2
    s2 = _load_system(args)
    args.system = saved
    res = orderings_coincide(s1, s2, args.prefix)
    rows = [
        [
            str(res.coincide).lower(),
            _fmt(res.lam) if res.lam is not None else "",
            str(res.witness) if res.witness else "",
            res.checked,
        ]
    ]
    _emit(args, _manifest(args, "order"), ["coincide", "lambda", "witness", "checked"], rows)
    return 0


def cmd_axioms(args) -> int:
    oracle = _load_oracle(args.oracle, args)
    try:
        M, N = (int(tok) for tok in args.window.split(","))
        rep = check_axioms(oracle, (M, N))
    finally:
        if isinstance(oracle, ProcessOracle):
            oracle.close()
    a3 = "undetermined" if rep.a3_ok is None else str(rep.a3_ok).lower()
    rows = [
        ["A1", str(rep.a1_ok).lower(), str(rep.a1_counterexample or "")],
        ["A2", str(rep.a2_ok).lower(), str(rep.a2_counterexample or "")],
        ["A3", a3, str(rep.a3_counterexample or "")],
    ]
    extra = {"all_pass": str(rep.all_pass).lower()}
    _emit(args, _manifest(args, "axioms"), ["axiom", "ok", "counterexample"], rows, extra)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beurling",
        description="Computable Beurling generalised prime systems",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, system=True):
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--json", dest="format", action="store_const", const="json",
                       help="shorthand for --format json")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("BEURLING_THREADS", "1")))
        p.add_argument("--config", default=None,
                       help="key=value file merged under the flags (flags win)")
        if system:
            p.add_argument("--system", default=None,
                           help="builtin:rationals | builtin:gaussian | list:v1,v2 | file:PATH")
            p.add_argument("--limit", type=float, default=None)
            p.add_argument("--power", type=float, default=None,
                           help="renormalise by the power transform at load time")

    p = sub.add_parser("gen", help="emit sorted g-integers up to a bound")
    add_common(p)
    p.add_argument("--bound", type=float, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("count", help="counting report N, pi, psi over a grid")
    add_common(p)
    p.add_argument("--grid", required=True, help="a:b:step or x1,x2,...")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("zeta", help="zeta/phi evaluators with tail bounds")
    add_common(p)
    p.add_argument("--s", action="append", required=True, help="complex point, e.g. 2+10i")
    p.add_argument("--method", choices=["euler", "dirichlet", "mellin", "continued", "phi"],
                   default="euler")
    p.add_argument("--cutoff", type=float, default=None)
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("perron", help="Perron recovery of psi(x)")
    add_common(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--scan", default=None, help="comma list of T values")
    p.set_defaults(func=cmd_perron)

    p = sub.add_parser("mellin", help="Mellin transforms and continuations")
    add_common(p)
    p.add_argument("--kernel", default="exp")
    p.add_argument("--op", choices=["transform", "continue", "partition"],
                   default="transform")
    p.add_argument("--s", action="append", default=None)
    p.add_argument("--x", action="append", default=None)
    p.add_argument("--expansion", default=None,
                   help="builtin name or JSON file of expansion terms")
    p.set_defaults(func=cmd_mellin)

    p = sub.add_parser("fe-check", help="functional-equation residuals")
    add_common(p)
    p.add_argument("--pair", default=None, help="builtin pair name (theta)")
    p.add_argument("--kernel", default=None)
    p.add_argument("--expansion", default=None)
    p.add_argument("--h-file", default=None, help="residual series JSON")
    p.add_argument("--x-min", type=float, default=0.5)
    p.add_argument("--x-max", type=float, default=2.0)
    p.add_argument("--x-points", type=int, default=50)
    p.add_argument("--s-grid", default=None, help="comma list of complex points")
    p.set_defaults(func=cmd_fe_check)

    p = sub.add_parser("order", help="order reconstruction and comparison")
    add_common(p)
    p.add_argument("action", choices=["reconstruct", "coincide"])
    p.add_argument("--oracle", default=None,
                   help="cmd:... | system:FILE | builtin:name (with --limit)")
    p.add_argument("--p1", type=float, default=2.0)
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--n", type=int, default=10**4)
    p.add_argument("--system2", default=None)
    p.add_argument("--prefix", type=int, default=10**4)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("axioms", help="windowed order-axiom verification")
    add_common(p)
    p.add_argument("--oracle", required=True)
    p.add_argument("--window", default="5,5", help="M,N")
    p.set_defaults(func=cmd_axioms)

    return parser


def _merge_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = argv[idx + 1]
    pairs = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, val = line.split("=", 1)
            pairs.extend([f"--{key.strip()}", val.strip()])
    # insert right after the subcommand so explicit flags (later) win
    return argv[:1] + pairs + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _merge_config(argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except BeurlingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
