"""Command line: generate, solve, oracle, bench, diagram, difficulty.

Exit codes: 0 optimal, 2 time or node limit reached, 1 error.
Limits fall back to the COMBPRICING_TIME_LIMIT and COMBPRICING_NODE_LIMIT
environment variables when the flags are not given.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import InstanceTooLarge, PricingError, brute_force_cpp, brute_force_kip
from .diagrams import export_dot
from .driver import MethodConfig, initial_diagram, solve, verify
from .io import (InstanceFormatError, format_rows, format_summary, load_instance, result_row,
                 save_instance, summarize)
from .problems import estimate_difficulty, generate

log = logging.getLogger("combpricing")

EXIT_OK, EXIT_ERROR, EXIT_LIMIT = 0, 1, 2
ENV_TIME = "COMBPRICING_TIME_LIMIT"
ENV_NODES = "COMBPRICING_NODE_LIMIT"
ORACLE_MAX_N = 20


def _env_float(name):
    val = os.environ.get(name)
    if val is None or val == "":
        return None
    try:
        return float(val)
    except ValueError:
        raise SystemExit(f"error: {name}={val!r} is not a number")


def _limits(args):
    tl = args.time_limit if args.time_limit is not None else _env_float(ENV_TIME)
    nl = args.node_limit if args.node_limit is not None else _env_float(ENV_NODES)
    return (np.inf if tl is None else tl), (np.inf if nl is None else nl)


def _layers(val, n):
    if val is None:
        return None
    if val == "half":
        return math.ceil(n / 2)
    return int(val)


def _config(args, n):
    tl, nl = _limits(args)
    return MethodConfig(method=args.method, pairs=args.pairs, width=args.width,
                        layers=_layers(args.layers, n), seed=args.seed, mode=args.mode,
                        eps=args.eps, time_limit=tl, node_limit=nl, backend=args.backend)


def _method_flags(p):
    p.add_argument("--method", choices=["vf", "sd", "dd"], default="vf")
    p.add_argument("--pairs", type=int, default=0, help="sampled pairs N of the selection diagram")
    p.add_argument("--width", type=int, default=0, help="sampled paths W of the decision diagram")
    p.add_argument("--layers", default=None, help="item groups m (integer or 'half')")
    p.add_argument("--seed", type=int, default=0)


def _solver_flags(p):
    p.add_argument("--mode", choices=["callback", "iterative"], default="callback")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--node-limit", type=float, default=None)
    p.add_argument("--backend", default="simplex")


def _exit_code(status):
    return EXIT_OK if status == "optimal" else EXIT_LIMIT if status == "limit" else EXIT_ERROR


def _instance_id(path):
    return os.path.splitext(os.path.basename(path))[0]


# ----------------------------------------------------------------------

def cmd_generate(args):
    params = {}
    if args.problem in ("kpp", "maxsspp", "kip"):
        params["n"] = args.n
    if args.problem == "kpp":
        params["r"] = args.r
    if args.problem == "maxsspp":
        params["d"] = args.d
    if args.problem == "minscpp":
        params.update(n_sets=args.n, ratio=args.ratio)
        if args.n_elements is not None:
            params["n_elements"] = args.n_elements
    os.makedirs(args.out, exist_ok=True)
    tag = "_".join(f"{k}{v}" for k, v in params.items() if k != "n_elements")
    for k in range(args.count):
        seed = args.seed + k
        inst = generate(args.problem, seed, **params)
        path = os.path.join(args.out, f"{args.problem}_{tag}_s{seed}.json")
        save_instance(inst, path)
        print(path)
    return EXIT_OK


def cmd_solve(args):
    inst = load_instance(args.file)
    config = _config(args, inst.n)
    res = solve(inst, config)
    row = result_row(_instance_id(args.file), config, res)
    sys.stdout.write(format_rows([row], header=not args.no_header))
    if args.solution:
        rep = verify(inst, res) if res.tolls is not None else None
        doc = {"status": res.status, "objective": res.value, "bound": res.bound, "gap": res.gap,
               "tolls": None if res.tolls is None else [float(x) for x in res.tolls],
               "response": None if res.response is None else list(res.response.items),
               "verified": None if rep is None else rep.ok,
               "issues": [] if rep is None else rep.issues}
        with open(args.solution, "w") as f:
            json.dump(doc, f, indent=1)
    return _exit_code(res.status)


def cmd_oracle(args):
    inst = load_instance(args.file)
    if inst.n > args.max_n:
        raise InstanceTooLarge(f"instance has {inst.n} items; the oracle is capped at {args.max_n}")
    if inst.problem == "kip":
        res = brute_force_kip(inst, max_n=args.max_n)
    else:
        res = brute_force_cpp(inst)
    resp = "" if res.response is None else " ".join(str(i) for i in res.response.items)
    tolls = " ".join(f"{x:.10g}" for x in res.tolls)
    print("instance,status,objective,response,tolls")
    print(f"{_instance_id(args.file)},{res.status},{res.value:.10g},{resp},{tolls}")
    return EXIT_OK


def parse_method(spec):
    """``vf``, ``sd:N``, ``dd:W`` or ``dd:W:m`` (m an integer or 'half')."""
    parts = spec.strip().split(":")
    kind = parts[0].lower()
    if kind == "vf" and len(parts) == 1:
        return {"method": "vf"}
    if kind == "sd" and len(parts) == 2:
        return {"method": "sd", "pairs": int(parts[1])}
    if kind == "dd" and len(parts) in (2, 3):
        out = {"method": "dd", "width": int(parts[1])}
        if len(parts) == 3:
            out["layers"] = parts[2]
        return out
    raise ValueError(f"bad method spec {spec!r}")


def _bench_one(job):
    path, mspec, base = job
    inst = load_instance(path)
    kw = dict(base)
    kw.update({k: v for k, v in mspec.items() if k != "layers"})
    kw["layers"] = _layers(mspec.get("layers"), inst.n)
    config = MethodConfig(**kw)
    try:
        res = solve(inst, config)
    except PricingError as e:
        log.warning("%s %s failed: %s", path, config.label, e)
        raise
    return result_row(_instance_id(path), config, res)


def cmd_bench(args):
    files = []
    for pat in args.instances:
        files.extend(sorted(glob.glob(pat)))
    if not files:
        raise FileNotFoundError("no instance files matched")
    methods = [parse_method(m) for m in args.methods.split(",")]
    tl, nl = _limits(args)
    base = dict(seed=args.seed, mode=args.mode, eps=args.eps, time_limit=tl, node_limit=nl,
                backend=args.backend)
    jobs = [(f, m, base) for f in files for m in methods]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    text = format_rows(rows)
    summary = format_summary(summarize(rows))
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        with open(os.path.splitext(args.out)[0] + "_summary.csv", "w") as f:
            f.write(summary)
    sys.stdout.write(text)
    sys.stdout.write("\n" + summary)
    return EXIT_OK if all(r.status == "optimal" for r in rows) else EXIT_LIMIT


def cmd_diagram(args):
    inst = load_instance(args.file)
    config = _config(args, inst.n)
    if args.final:
        res = solve(inst, config)
        d = res.extra["diagram"]
    else:
        d, _ = initial_diagram(inst, config)
    text = export_dot(d)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_difficulty(args):
    inst = load_instance(args.file)
    d = estimate_difficulty(inst)
    print("instance,f0,finf,g,score")
    print(f"{_instance_id(args.file)},{d.f0:.10g},{d.finf:.10g},{d.g:.10g},{d.score:.10g}")
    return EXIT_OK


# ----------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="combpricing", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write random instance files")
    p.add_argument("problem", choices=["kpp", "maxsspp", "minscpp", "kip"])
    p.add_argument("--n", type=int, required=True, help="items (sets for minscpp)")
    p.add_argument("--r", type=float, default=0.5, help="kpp capacity ratio")
    p.add_argument("--d", type=float, default=0.1, help="maxsspp edge density")
    p.add_argument("--ratio", type=float, default=1.0, help="minscpp sets per element")
    p.add_argument("--n-elements", type=int, default=None)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one instance and print a result row")
    p.add_argument("file")
    _method_flags(p)
    _solver_flags(p)
    p.add_argument("--solution", default=None, help="write tolls and response as JSON")
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive reference solution of a small instance")
    p.add_argument("file")
    p.add_argument("--max-n", type=int, default=ORACLE_MAX_N)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run a method matrix over instance files")
    p.add_argument("instances", nargs="+", help="instance files or glob patterns")
    p.add_argument("--methods", default="vf,sd:2,dd:2", help="comma list of vf | sd:N | dd:W[:m]")
    p.add_argument("--seed", type=int, default=0)
    _solver_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diagram", help="export the initial (or final) diagram as DOT")
    p.add_argument("file")
    _method_flags(p)
    _solver_flags(p)
    p.add_argument("--final", action="store_true", help="solve first and export the grown diagram")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("difficulty", help="print the difficulty score and its parts")
    p.add_argument("file")
    p.set_defaults(func=cmd_difficulty)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InstanceFormatError, PricingError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
