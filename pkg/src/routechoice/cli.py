"""Command-line interface: ``routechoice <command> ...``.

Commands: generate, identify, search, evaluate, report, batch. Any command
accepts ``--config FILE`` with flat ``key=value`` lines (keys are the long flag
names, dashes or underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import RunReport, histogram_csv, run_batch, write_batch, write_figure_data
from .files import (atomic_write_json, atomic_write_text, read_flows, read_network,
                    read_od, read_weights, write_flows, write_network, write_od)
from .identification import FlowColumnCache
from .network import RoutingInstance
from .search import SearchConfig, search
from .synthgen import GeneratorParams, generate_instance, match_weights

logger = logging.getLogger("routechoice")

SEARCH_DEFAULTS = SearchConfig()
GEN_DEFAULTS = GeneratorParams()


def load_config(path) -> dict:
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def _add_instance_args(p):
    p.add_argument("--network", required=True, help="network file")
    p.add_argument("--od", required=True, help="O-D pairs file")
    p.add_argument("--flows", required=True, help="measured flows file")


def _add_search_args(p):
    d = SEARCH_DEFAULTS
    p.add_argument("--tol1", type=float, default=d.tol1,
                   help=f"threshold cap on epsilon (default {d.tol1})")
    p.add_argument("--tol2", type=float, default=d.tol2,
                   help=f"required improvement factor per refine step (default {d.tol2})")
    p.add_argument("--tol3", type=float, default=d.tol3,
                   help=f"smallest local-search radius (default {d.tol3})")
    p.add_argument("--epsilon0", type=float, default=d.epsilon0,
                   help=f"initial probability threshold (default {d.epsilon0})")
    p.add_argument("--grid", type=int, default=d.grid_resolution,
                   help=f"initial lattice resolution (default {d.grid_resolution})")
    p.add_argument("--cutoff", type=float, default=d.cluster_cutoff,
                   help=f"single-linkage cut distance (default {d.cluster_cutoff})")
    p.add_argument("--max-outer", type=int, default=d.max_outer_iterations,
                   help=f"refine-loop iteration cap (default {d.max_outer_iterations})")
    p.add_argument("--stopping-rule", choices=["improvement_based", "literal_until"],
                   default=d.stopping_rule, help=f"refine-loop stop test (default {d.stopping_rule})")


def _add_generator_args(p):
    d = GEN_DEFAULTS
    p.add_argument("--grid-side", type=int, default=d.grid_side,
                   help=f"nodes per grid side (default {d.grid_side})")
    p.add_argument("--od", dest="num_od", type=int, default=d.num_od,
                   help=f"number of O-D pairs (default {d.num_od})")
    p.add_argument("--q", type=int, default=d.q, help=f"true weight groups (default {d.q})")
    p.add_argument("--r", type=int, default=d.r, help=f"basic costs per arc (default {d.r})")
    p.add_argument("--demand", type=int, default=d.demand,
                   help=f"demand per O-D pair (default {d.demand})")
    p.add_argument("--cost-low", type=int, default=d.cost_low,
                   help=f"smallest raw cost (default {d.cost_low})")
    p.add_argument("--cost-high", type=int, default=d.cost_high,
                   help=f"largest raw cost (default {d.cost_high})")
    p.add_argument("--measured-fraction", type=float, default=d.measured_fraction,
                   help=f"share of arcs observed (default {d.measured_fraction})")


def _config_from(args) -> SearchConfig:
    return SearchConfig(tol1=args.tol1, tol2=args.tol2, tol3=args.tol3,
                        epsilon0=args.epsilon0, grid_resolution=args.grid,
                        cluster_cutoff=args.cutoff, max_outer_iterations=args.max_outer,
                        stopping_rule=args.stopping_rule)


def _params_from(args) -> GeneratorParams:
    return GeneratorParams(grid_side=args.grid_side, num_od=args.num_od, demand=args.demand,
                           r=args.r, q=args.q, cost_low=args.cost_low,
                           cost_high=args.cost_high,
                           measured_fraction=args.measured_fraction, seed=args.seed)


def _load_instance(args) -> RoutingInstance:
    return RoutingInstance(read_network(args.network), read_od(args.od), read_flows(args.flows))


def _emit(obj, out) -> None:
    if out:
        atomic_write_json(out, obj)
    else:
        json.dump(obj, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    instance, truth = generate_instance(_params_from(args))
    out = Path(args.out)
    write_network(out / "network.csv", instance.network)
    write_od(out / "od.csv", instance.od_pairs)
    write_flows(out / "flows.csv", instance.measured)
    atomic_write_json(out / "truth.json", {**truth.to_dict(), "generator": _params_from(args).to_dict()})
    logger.info("wrote instance with %d arcs to %s", instance.network.arc_count, out)
    return 0


def cmd_identify(args) -> int:
    instance = _load_instance(args)
    cache = FlowColumnCache(instance)
    res = cache.identify(read_weights(args.weights))
    if args.dump_matrix:
        atomic_write_text(args.dump_matrix, res.flow_matrix.to_csv())
    _emit({"weights": res.weights.tolist(), "alpha": res.alpha.tolist(), "g": res.g_value,
           "kkt_residual": res.solution.kkt_residual, "converged": res.solution.converged},
          args.out)
    return 0


def cmd_search(args) -> int:
    instance = _load_instance(args)
    cache = FlowColumnCache(instance)
    result = search(cache, _config_from(args))
    c = cache.counters
    _emit({
        "weights": result.weights.tolist(),
        "alpha": result.alpha.tolist(),
        "g": result.g,
        "trace": result.trace(),
        "seed": args.seed,
        "timing": {"time_sp": c.time_sp, "time_qp": c.time_qp, "sp_solves": c.sp_solves,
                   "qp_solves": c.qp_solves},
    }, args.out)
    return 0


def cmd_evaluate(args) -> int:
    result = json.loads(Path(args.result).read_text())
    truth = json.loads(Path(args.truth).read_text())
    match = match_weights(np.asarray(truth["weights"]), np.asarray(result["weights"]))
    _emit({
        "distances": match.distances.tolist(),
        "pairs": [[int(i), int(j)] for i, j in zip(match.true_index, match.estimated_index)],
        "unmatched_true": match.unmatched_true.tolist(),
        "unmatched_estimated": match.unmatched_estimated.tolist(),
    }, args.out)
    return 0


def cmd_report(args) -> int:
    data = json.loads(Path(args.result).read_text())
    out = Path(args.out)
    if "reports" in data:
        reports = [RunReport(**r) for r in data["reports"]]
        write_figure_data(out, reports, bins=args.bins)
        return 0
    trace = data["trace"]
    phases = ["g_initial", "g_after_refine", "g_after_cluster", "g_final"]
    atomic_write_text(out / "g_phases.csv",
                      "phase,g\n" + "".join(f"{k},{trace[k]!r}\n" for k in phases))
    rows = ["t,epsilon,size,g"] + [f"{it['t']},{it['epsilon']!r},{it['size']},{it['g']!r}"
                                   for it in trace["iterations"]]
    atomic_write_text(out / "iterations.csv", "\n".join(rows) + "\n")
    if "timing" in data:
        t = data["timing"]
        atomic_write_text(out / "timing.csv",
                          f"time_sp,time_qp\n{t['time_sp']!r},{t['time_qp']!r}\n")
    if args.truth:
        truth = json.loads(Path(args.truth).read_text())
        dist = match_weights(np.asarray(truth["weights"]), np.asarray(data["weights"])).distances
        atomic_write_text(out / "recovery_distance_hist.csv", histogram_csv(dist, bins=args.bins))
    return 0


def cmd_batch(args) -> int:
    params = _params_from(args)
    config = _config_from(args)
    reports, failures = run_batch(args.num_instances, params, config, args.seed)
    write_batch(args.out, reports, failures, params, config, args.seed, bins=args.bins)
    if failures:
        json.dump({"failed": failures}, sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 1
    return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="routechoice", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("generate", help="write a synthetic grid instance")
    _add_generator_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)
    subs["generate"] = p

    p = sub.add_parser("identify", help="probabilities for a known weight set")
    _add_instance_args(p)
    p.add_argument("--weights", required=True, help="weights file (JSON or CSV rows)")
    p.add_argument("--dump-matrix", help="also write the flow matrix as CSV")
    p.add_argument("--out", help="result JSON (default: stdout)")
    p.set_defaults(func=cmd_identify)
    subs["identify"] = p

    p = sub.add_parser("search", help="search for an unknown weight set")
    _add_instance_args(p)
    _add_search_args(p)
    p.add_argument("--seed", type=int, default=None,
                   help="recorded in the output; the search itself is deterministic")
    p.add_argument("--out", help="result JSON (default: stdout)")
    p.set_defaults(func=cmd_search)
    subs["search"] = p

    p = sub.add_parser("evaluate", help="recovery distances against a ground truth")
    p.add_argument("--result", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    subs["evaluate"] = p

    p = sub.add_parser("report", help="CSV figure data from a search or batch result")
    p.add_argument("--result", required=True)
    p.add_argument("--truth", help="truth.json, for recovery distances of a single search")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=cmd_report)
    subs["report"] = p

    p = sub.add_parser("batch", help="generate, search and evaluate many instances")
    p.add_argument("--num-instances", type=int, default=100)
    _add_generator_args(p)
    _add_search_args(p)
    p.add_argument("--seed", type=int, required=True, help="seed of instance 0")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--bins", type=int, default=10)
    p.set_defaults(func=cmd_batch)
    subs["batch"] = p

    for p in subs.values():
        p.add_argument("--config", help="key=value file of flag defaults")
    return parser, subs


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            parser.error("--config needs a file")
        command = next((a for a in argv if a in subs), None)
        if command is not None:
            sp = subs[command]
            known = {a.dest: a for a in sp._actions}
            cfg = load_config(argv[i + 1])
            defaults = {}
            for key, value in cfg.items():
                action = known.get(key) or next(
                    (a for a in sp._actions if f"--{key.replace('_', '-')}" in a.option_strings),
                    None)
                if action is None:
                    parser.error(f"unknown config key {key!r}")
                defaults[action.dest] = action.type(value) if action.type else value
                action.required = False
            sp.set_defaults(**defaults)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
