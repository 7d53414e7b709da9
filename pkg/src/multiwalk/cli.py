"""Batch command-line front end.

Subcommands: gen, exact, simulate, verify, gap-decay, torus, dominance.
Every command writes CSV (or an edge list, for gen) whose header comments
embed the tool version, the resolved configuration, the seed, and the
method, so outputs are reproducible from their own metadata.

Exit codes: 0 success, 1 usage or input error, 2 verification failure
(some gap fell below -1e-9 with its preconditions satisfied).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import __version__
from .chain import (
    CONTINUOUS,
    LAZY,
    PLAIN,
    FixedPoints,
    IIDProduct,
    SharedPoint,
    TransitionKernel,
    kernel_from_network,
    uniform_measure,
    with_variant,
)
from .errors import MultiwalkError
from .experiments import (
    GAP_TOLERANCE,
    dominance_scan,
    gap_decay_experiment,
    lifespan_grid,
    min_gap,
    odd_case_scan,
    run_suite,
    suite_cases,
    torus_star_vs_single,
    verify_one_vs_many,
    verify_star_vs_iid,
)
from .network import (
    enumerate_connected_graphs,
    generate_complete,
    generate_cycle,
    generate_gnp,
    generate_path,
    generate_torus,
    read_edge_list,
    write_edge_list,
)
from .simulate import WalkJob, estimate
from .survival import expected_union

EXACT_AUTO_MAX_N = 512
EXACT_AUTO_MAX_TOTAL = 10**5

_VARIANTS = {"plain": PLAIN, "lazy": LAZY, "continuous": CONTINUOUS}


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits 1 on usage errors with a one-line message."""

    def error(self, message):
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".10g")


def _add_graph_flags(p: _Parser):
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--cycle", type=int, help="cycle on N vertices")
    p.add_argument("--complete", type=int, help="complete graph on N vertices")
    p.add_argument("--path", type=int, help="path on N vertices")
    p.add_argument("--torus", help="torus D,N")
    p.add_argument("--gnp", help="connected G(n,p) sample: N,P,SEED")


def _resolve_graph(args):
    chosen = [
        name
        for name in ("graph", "cycle", "complete", "path", "torus", "gnp")
        if getattr(args, name, None) is not None
    ]
    if len(chosen) != 1:
        raise MultiwalkError(
            "exactly one graph source required (--graph/--cycle/--complete/"
            "--path/--torus/--gnp)"
        )
    src = chosen[0]
    if src == "graph":
        return read_edge_list(args.graph)
    if src == "cycle":
        return generate_cycle(args.cycle)
    if src == "complete":
        return generate_complete(args.complete)
    if src == "path":
        return generate_path(args.path)
    if src == "torus":
        d, n = (int(x) for x in args.torus.split(","))
        return generate_torus(d, n)
    n, p, seed = args.gnp.split(",")
    return generate_gnp(int(n), float(p), int(seed))


def _parse_lifespans(spec: str, variant: str) -> tuple:
    parts = [s for s in spec.split(",") if s]
    if not parts:
        raise MultiwalkError("--t needs at least one lifespan")
    if variant == CONTINUOUS:
        return tuple(float(s) for s in parts)
    return tuple(int(s) for s in parts)


def _load_distribution(path: str, n: int) -> np.ndarray:
    weights = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            weights.append(float(line))
    v = np.asarray(weights, dtype=float)
    if len(v) != n or np.any(v < 0) or v.sum() <= 0:
        raise MultiwalkError(f"distribution file {path} is not usable for n={n}")
    return v / v.sum()


def _parse_scheme(spec: str, kernel: TransitionKernel, k: int):
    if spec == "iid-stationary":
        return IIDProduct(*([kernel.pi] * k))
    if spec == "iid-uniform":
        return IIDProduct(*([uniform_measure(kernel.n)] * k))
    if spec == "shared-stationary":
        return SharedPoint(kernel.pi)
    if spec == "shared-uniform":
        return SharedPoint(uniform_measure(kernel.n))
    if spec.startswith("point:"):
        points = tuple(int(s) for s in spec[len("point:") :].split(","))
        if len(points) != k:
            raise MultiwalkError(
                f"scheme gives {len(points)} start points but k={k}"
            )
        return FixedPoints(*points)
    if spec.startswith("dist:"):
        nu = _load_distribution(spec[len("dist:") :], kernel.n)
        return IIDProduct(*([nu] * k))
    raise MultiwalkError(f"unknown scheme {spec!r}")


def _config_string(args, skip=("output", "workers", "func")) -> str:
    pairs = []
    for key, value in sorted(vars(args).items()):
        if key in skip or key == "command" or value is None or callable(value):
            continue
        pairs.append(f"{key}={value}")
    return " ".join(pairs)


class _CsvOut:
    """CSV sink with deterministic formatting and leading comment headers."""

    def __init__(self, args, method: str, seed):
        self.buf = io.StringIO()
        self.buf.write(f"# multiwalk {__version__}\n")
        self.buf.write(f"# config: {args.command} {_config_string(args)}\n")
        self.buf.write(f"# seed: {'' if seed is None else seed}\n")
        self.buf.write(f"# method: {method}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def row(self, cells):
        self.writer.writerow(cells)

    def comment(self, text: str):
        self.buf.write(f"# {text}\n")

    def flush(self, path):
        text = self.buf.getvalue()
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _scheme_label(args) -> str:
    return args.scheme


def _cmd_gen(args) -> int:
    net = _resolve_graph(args)
    lines = [f"# multiwalk {__version__} gen {_config_string(args)}", f"{net.n}"]
    lines += [f"{u} {v} {c!r}" for u, v, c in net.edges]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _auto_method(kernel: TransitionKernel, ts) -> str:
    if kernel.n <= EXACT_AUTO_MAX_N and sum(ts) <= EXACT_AUTO_MAX_TOTAL:
        return "exact"
    return "mc"


def _cmd_evaluate(args, default_method: str) -> int:
    net = _resolve_graph(args)
    variant = _VARIANTS[args.variant]
    kernel = with_variant(kernel_from_network(net), variant)
    ts = _parse_lifespans(args.t, variant)
    k = args.k if args.k is not None else len(ts)
    if k != len(ts):
        raise MultiwalkError(f"--k {k} does not match {len(ts)} lifespans")
    scheme = _parse_scheme(args.scheme, kernel, k)
    method = args.method or default_method
    if method == "auto":
        method = _auto_method(kernel, ts)
    if method == "exact":
        value, se = expected_union(kernel, scheme, ts), 0.0
        method_name = "exact"
    else:
        job = WalkJob(
            kernel=kernel,
            scheme=scheme,
            lifespans=ts,
            replicas=args.replicas,
            seed=args.seed,
        )
        est = estimate(job, workers=args.workers)
        value, se = est.mean, est.std_error
        method_name = "monte-carlo"
    out = _CsvOut(args, method_name, args.seed)
    out.row(["scheme", "k", "t_list", "variant", "method", "value", "std_error", "seed"])
    out.row(
        [
            _scheme_label(args),
            k,
            ";".join(_fmt(t) for t in ts),
            args.variant,
            method_name,
            _fmt(value),
            _fmt(se),
            args.seed,
        ]
    )
    out.flush(args.output)
    return 0


def _report_row(r):
    return [
        r.name,
        r.graph,
        r.variant,
        r.k,
        ";".join(_fmt(t) for t in r.lifespans),
        _fmt(r.lhs),
        _fmt(r.rhs),
        _fmt(r.gap),
        r.method,
        "" if r.seed is None else r.seed,
    ]


def _cmd_verify(args) -> int:
    reports = []
    asserted = True
    if args.suite:
        if args.suite != "small":
            raise MultiwalkError(f"unknown suite {args.suite!r}")
        case_map = {
            "lazy": (LAZY,),
            "continuous": (CONTINUOUS,),
            "plain-even": (PLAIN,),
            "all": (LAZY, CONTINUOUS, PLAIN),
        }
        if args.case not in case_map:
            raise MultiwalkError(f"unknown case {args.case!r}")
        ks = tuple(int(s) for s in args.k.split(",")) if args.k else (2, 3)
        cases = suite_cases(case_map[args.case])
        reports = run_suite(ks=ks, max_total=args.max_total, cases=cases)
    elif args.name == "odd-case-scan":
        nets = enumerate_connected_graphs(args.max_n)
        reports = odd_case_scan(nets, ks=(args.k_single,), max_total=args.max_total)
        asserted = False
    else:
        net = _resolve_graph(args)
        variant = _VARIANTS[args.variant]
        kernel = with_variant(kernel_from_network(net), variant)
        ts = _parse_lifespans(args.t, variant)
        k = args.k_single if args.k_single is not None else len(ts)
        if args.name == "one-vs-many":
            reports = [verify_one_vs_many(kernel, k, ts)]
        elif args.name == "star-vs-iid":
            if len(set(ts)) != 1:
                raise MultiwalkError("star-vs-iid needs equal lifespans")
            nu = _parse_scheme(args.nu, kernel, 1)
            nu = nu.nus[0] if isinstance(nu, IIDProduct) else nu.nu
            reports = [verify_star_vs_iid(kernel, k, ts[0], nu)]
        else:
            raise MultiwalkError(f"unknown verification {args.name!r}")
    out = _CsvOut(args, "exact", None)
    out.row(["name", "graph", "variant", "k", "t_list", "lhs", "rhs", "gap", "method", "seed"])
    for r in reports:
        out.row(_report_row(r))
    if reports:
        out.comment(f"reports={len(reports)} min_gap={_fmt(min_gap(reports))}")
    out.flush(args.output)
    if asserted and any(r.gap < GAP_TOLERANCE for r in reports):
        return 2
    return 0


def _cmd_gap_decay(args) -> int:
    c_grid = [float(s) for s in args.c_grid.split(",")]
    curve = gap_decay_experiment(
        n=args.n,
        p=args.p,
        k=args.k,
        c_grid=c_grid,
        replicas=args.replicas,
        seed=args.seed,
        variant=_VARIANTS[args.variant],
        workers=args.workers,
    )
    out = _CsvOut(args, "monte-carlo", args.seed)
    out.row(
        [
            "c",
            "T",
            "multi_mean",
            "multi_se",
            "single_mean",
            "single_se",
            "gap",
            "gap_se",
        ]
    )
    for p in curve.points:
        out.row(
            [
                _fmt(p.c),
                p.T,
                _fmt(p.multi_mean),
                _fmt(p.multi_se),
                _fmt(p.single_mean),
                _fmt(p.single_se),
                _fmt(p.gap),
                _fmt(p.gap_se),
            ]
        )
    out.comment(f"fit_a={_fmt(curve.fit_a)}")
    out.comment(f"fit_b={_fmt(curve.fit_b)}")
    out.comment(f"fit_residual={_fmt(curve.fit_residual)}")
    out.flush(args.output)
    return 0


def _cmd_torus(args) -> int:
    report = torus_star_vs_single(
        d=args.d,
        n=args.n,
        t1=args.t1,
        t2=args.t2,
        t3=args.t3,
        replicas=args.replicas,
        seed=args.seed,
        variant=_VARIANTS[args.variant],
        c0=args.c0,
        workers=args.workers,
    )
    out = _CsvOut(args, "monte-carlo", args.seed)
    out.row(["name", "graph", "variant", "k", "t_list", "lhs", "rhs", "gap", "method", "seed"])
    out.row(_report_row(report))
    out.comment(f"lhs_se={_fmt(report.lhs_se)}")
    out.comment(f"rhs_se={_fmt(report.rhs_se)}")
    out.comment(f"t1_ratio={_fmt(report.extra['t1_ratio'])}")
    out.comment(f"within_4se={report.extra['within_4se']}")
    out.flush(args.output)
    return 0


def _cmd_dominance(args) -> int:
    net = _resolve_graph(args)
    variant = _VARIANTS[args.variant]
    kernel = with_variant(kernel_from_network(net), variant)
    ts = _parse_lifespans(args.t, variant)
    k = args.k if args.k is not None else len(ts)
    if k != len(ts):
        raise MultiwalkError(f"--k {k} does not match {len(ts)} lifespans")
    report = dominance_scan(
        kernel, k, ts, replicas=args.replicas, seed=args.seed, workers=args.workers
    )
    out = _CsvOut(args, "monte-carlo", args.seed)
    out.row(["side", "value", "cdf"])
    for side, cdf in (("multi", report.multi), ("single", report.single)):
        for v, pr in cdf.steps():
            out.row([side, _fmt(v), _fmt(pr)])
    out.comment(f"max_crossing={_fmt(report.max_crossing)}")
    out.flush(args.output)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="multiwalk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"multiwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a graph and write its edge list")
    _add_graph_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_gen)

    for name, default_method in (("exact", "exact"), ("simulate", "mc")):
        p = sub.add_parser(name, help=f"{name} expected union size evaluation")
        _add_graph_flags(p)
        p.add_argument("--variant", choices=sorted(_VARIANTS), default="plain")
        p.add_argument("--scheme", default="iid-stationary")
        p.add_argument("--k", type=int)
        p.add_argument("--t", required=True, help="comma-separated lifespans")
        p.add_argument("--replicas", type=int, default=10000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--method", choices=["exact", "mc", "auto"])
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("-o", "--output")
        p.set_defaults(func=lambda a, m=default_method: _cmd_evaluate(a, m))

    p = sub.add_parser("verify", help="evaluate inequality gaps; exit 2 on violation")
    _add_graph_flags(p)
    p.add_argument("--suite", help="'small' for the pinned small-graph suite")
    p.add_argument("--case", default="all", help="lazy|continuous|plain-even|all")
    p.add_argument("--name", help="one-vs-many|star-vs-iid|odd-case-scan")
    p.add_argument("--variant", choices=sorted(_VARIANTS), default="plain")
    p.add_argument("--k", help="comma-separated walker counts for suite mode")
    p.add_argument("--k-single", type=int, help="walker count for single checks")
    p.add_argument("--t", help="comma-separated lifespans for single checks")
    p.add_argument("--nu", default="shared-stationary", help="measure for star-vs-iid")
    p.add_argument("--max-total", type=int, default=12)
    p.add_argument("--max-n", type=int, default=5, help="odd-case-scan graph size cap")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("gap-decay", help="coverage gap vs lifespan scale on G(n,p)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--c-grid", required=True, help="comma-separated scale factors")
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=sorted(_VARIANTS), default="plain")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_gap_decay)

    p = sub.add_parser("torus", help="three walkers from the origin vs one, on a torus")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t1", type=int, required=True)
    p.add_argument("--t2", type=int, required=True)
    p.add_argument("--t3", type=int, required=True)
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c0", type=float, default=10.0)
    p.add_argument("--variant", choices=sorted(_VARIANTS), default="lazy")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_torus)

    p = sub.add_parser("dominance", help="empirical CDFs of both schemes")
    _add_graph_flags(p)
    p.add_argument("--variant", choices=sorted(_VARIANTS), default="plain")
    p.add_argument("--k", type=int)
    p.add_argument("--t", required=True)
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_dominance)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MultiwalkError as exc:
        print(f"multiwalk {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
