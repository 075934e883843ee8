"""``divsim`` command line: one subcommand per toolkit area, JSON/CSV output.

Exit codes: 0 success (for ``experiment``: every verdict passed), 1 verdict
failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from importlib import resources

from . import __version__, theory
from .coupling import CouplingMode, coupled_run
from .dynamics import OpinionState, ProcessKind, Rule, run, trial_rng
from .experiment import ConfigError, ExperimentConfig, resolve_threads, run_experiment
from .graph import (
    GraphError,
    complete_graph,
    cycle_graph,
    gnp,
    parse_graph_spec,
    path_graph,
    random_regular,
    read_edge_list,
    star_graph,
    to_edge_list,
)
from .initial import InitSpecError, parse_init
from .oracle import StateCapExceeded, exact_win_distribution
from .spectral import spectrum

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


SCHEMAS = ("spectral", "trajectory", "oracle", "couple", "bounds", "config", "experiment")


class UsageError(Exception):
    pass


def load_schema(name: str) -> dict:
    """JSON Schema (draft 2020-12) for one output document; see ``SCHEMAS``."""
    if name not in SCHEMAS:
        raise KeyError(name)
    return json.loads((resources.files("divsim") / "schemas" / f"{name}.schema.json").read_text())


def _load_graph(arg: str, allow_disconnected: bool = False):
    if os.path.exists(arg):
        return read_edge_list(arg, allow_disconnected=allow_disconnected)
    if ":" in arg:
        return parse_graph_spec(arg)
    raise UsageError(f"graph {arg!r} is neither a file nor a family spec")


def _initial(graph, spec: str, seed: int) -> OpinionState:
    init = parse_init(spec, graph.n)
    x = init.draw(graph.n, trial_rng(seed, None) if init.per_trial else None)
    if len(x) != graph.n:
        raise UsageError(f"initial condition has {len(x)} opinions for {graph.n} vertices")
    return OpinionState(graph, x, max(int(x.max()), init.k or 0))


def _eps_list(text: str | None) -> list[float]:
    if not text:
        return []
    return [float(t) for t in text.split(",") if t.strip()]


def _emit(args, payload) -> None:
    if isinstance(payload, (dict, list)):
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        text = payload
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    fam = args.family
    if args.n is None:
        raise UsageError("--n is required")
    if fam == "complete":
        g = complete_graph(args.n)
    elif fam == "path":
        g = path_graph(args.n)
    elif fam == "cycle":
        g = cycle_graph(args.n)
    elif fam == "star":
        g = star_graph(args.n)
    elif fam == "regular":
        if args.d is None:
            raise UsageError("--d is required for the regular family")
        g = random_regular(args.n, args.d, args.seed)
    elif fam == "gnp":
        if args.p is None:
            raise UsageError("--p is required for the gnp family")
        g = gnp(args.n, args.p, args.seed)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown family {fam}")
    _emit(args, to_edge_list(g))
    return EXIT_OK


def cmd_spectral(args) -> int:
    g = _load_graph(args.graph)
    sp = spectrum(g)
    _emit(args, {
        "n": g.n,
        "m": g.m,
        "lambda": sp.lam,
        "lambda2": sp.lambda2,
        "lambdan": sp.lambdan,
        "pi_min": sp.pi_min,
        "bipartite": sp.bipartite,
    })
    return EXIT_OK


def cmd_simulate(args) -> int:
    g = _load_graph(args.graph)
    state = _initial(g, args.init, args.seed)
    rng = trial_rng(args.seed, 0)
    res = run(g, state, args.kind, args.rule, rng, args.max_steps, _eps_list(args.eps), args.stride)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "S", "Z"])
        w.writerows(res.weight_samples)
        _emit(args, buf.getvalue())
        return EXIT_OK
    payload = res.to_dict()
    payload["bipartite"] = spectrum(g).bipartite if g.n <= 5000 else None
    payload["seed"] = args.seed
    _emit(args, payload)
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = _load_graph(args.graph)
    state = _initial(g, args.init, args.seed)
    dist = exact_win_distribution(g, state.x, args.kind, args.rule, state_cap=args.state_cap)
    _emit(args, dist.to_dict())
    return EXIT_OK


def cmd_couple(args) -> int:
    g = _load_graph(args.graph)
    state = _initial(g, args.init, args.seed)
    rep = coupled_run(g, state, args.mode, args.kind, trial_rng(args.seed, 0), args.max_steps)
    _emit(args, rep.to_dict())
    return EXIT_OK


def cmd_bounds(args) -> int:
    pi_min = args.pi_min
    if args.graph:
        g = _load_graph(args.graph)
        sp = spectrum(g)
        n, lam = g.n, sp.lam
        pi_min = sp.pi_min if pi_min is None else pi_min
    else:
        if args.n is None or args.lam is None:
            raise UsageError("give --graph, or both --n and --lambda")
        n, lam = args.n, args.lam
    if args.k is None:
        raise UsageError("--k is required")
    rep = theory.bound_report(n, args.k, lam, pi_min, args.eps, args.eta)
    _emit(args, rep.to_dict())
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    summary = run_experiment(cfg, resolve_threads(args.threads))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(summary.records_csv())
    _emit(args, summary.records_csv() if args.format == "csv" else summary.to_dict())
    return EXIT_OK if summary.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    p = argparse.ArgumentParser(prog="divsim", description="Discrete incremental voting toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a graph as an edge list")
    g.add_argument("--family", required=True, choices=["complete", "regular", "gnp", "path", "cycle", "star"])
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--p", type=float)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("spectral", parents=[common], help="walk-matrix spectrum summary")
    s.add_argument("--graph", required=True, help="edge-list file or family spec such as complete:5")
    s.set_defaults(func=cmd_spectral)

    def dyn_args(sp, rule=True):
        sp.add_argument("--graph", required=True)
        sp.add_argument("--init", required=True, help="uniform:K | blocks:AxC,... | values:... | file:PATH")
        sp.add_argument("--kind", choices=[k.value for k in ProcessKind], default="vertex")
        if rule:
            sp.add_argument("--rule", choices=[r.value for r in Rule], default="div")

    r = sub.add_parser("simulate", parents=[common], help="run one trajectory")
    dyn_args(r)
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--eps", help="comma-separated thresholds for extreme-shrink hits")
    r.add_argument("--stride", type=int, default=0, help="weight sampling stride")
    r.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle", parents=[common], help="exact winning distribution")
    dyn_args(o)
    o.add_argument("--state-cap", type=int, default=2_000_000)
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("couple", parents=[common], help="coupled DIV / pull-voting run")
    dyn_args(c, rule=False)
    c.add_argument("--mode", choices=[m.value for m in CouplingMode], default="s-side")
    c.add_argument("--max-steps", type=int, default=None)
    c.set_defaults(func=cmd_couple)

    b = sub.add_parser("bounds", parents=[common], help="closed-form horizons and bounds")
    b.add_argument("--graph")
    b.add_argument("--n", type=int)
    b.add_argument("--k", type=int)
    b.add_argument("--lambda", dest="lam", type=float)
    b.add_argument("--pi-min", type=float)
    b.add_argument("--eps", type=float)
    b.add_argument("--eta", type=float)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", parents=[common], help="Monte Carlo campaign from a config file")
    e.add_argument("--config", required=True)
    e.add_argument("--threads", type=int, default=None, help="worker threads (fallback: DIVSIM_THREADS)")
    e.add_argument("--csv", help="also write per-trial records as CSV here")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "experiment" and args.seed is None:
        args.seed = 0
    if args.format == "csv" and args.command not in ("simulate", "experiment"):
        print(f"divsim: error: --format csv is not available for {args.command}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, GraphError, InitSpecError, ConfigError, StateCapExceeded, ValueError, OSError) as exc:
        print(f"divsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
