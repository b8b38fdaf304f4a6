"""Command line front end.

Four subcommands: run an experiment configuration, check it (exit code
reflects the outcome), dump the theoretical bound curves for it, and
generate instance files for inspection. Output goes to --out, the
NETPROX_OUT environment variable, or ./netprox_out, in that order.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench
from .objective import objective_to_text
from .topology import TopologySpec, edge_list_text


def _add_common(p) -> None:
    p.add_argument("config", help="path to a JSON experiment configuration")
    p.add_argument(
        "--out",
        default=None,
        help="output directory (default: $NETPROX_OUT or ./netprox_out)",
    )


def _label(cfg) -> str:
    prob = cfg["problem"]
    return cfg.get(
        "label",
        f"case{prob['case']}_N{prob['N']}_ng{prob['n_g']}_{cfg['topology']['kind']}",
    )


def _cmd_run(args, check: bool) -> int:
    cfg = bench.load_config(args.config)
    summary = bench.run_experiment(cfg, out_dir=args.out, check=check)
    for path in summary.csv_paths:
        print(path)
    print(summary.summary_path)
    if check:
        print("PASS" if summary.checks_passed else "FAIL")
        return 0 if summary.checks_passed else 1
    return 0


def _cmd_bounds(args) -> int:
    cfg = bench.load_config(args.config)
    out = bench.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prob_cfg = cfg["problem"]
    topo_cfg = cfg["topology"]
    graph = bench.build_topology(
        topo_cfg["kind"],
        prob_cfg["N"],
        extra_edges=int(topo_cfg.get("extra_edges", 0)),
        seed=topo_cfg.get("seed"),
    )
    seed = cfg["seeds"][0]
    spec = bench.ProblemSpec(
        case=prob_cfg["case"],
        N=prob_cfg["N"],
        n_g=prob_cfg["n_g"],
        seed=seed,
        K=int(prob_cfg.get("K", 10)),
    )
    problem = bench.generate_problem(spec)
    reference = bench.reference_for(problem)
    x0 = [np.zeros(spec.n) for _ in range(spec.N)]
    gammas = bench._resolve_gammas(
        cfg, graph, spec.N, reference, float(np.linalg.norm(reference.x_star))
    )
    safety = float(cfg.get("safety", 0.999))
    curves = []
    for algorithm in cfg["algorithms"]:
        curve = bench._bound_for(
            algorithm, cfg, graph, problem.objectives, gammas, x0, reference, safety
        )
        if curve is not None:
            curves.append(curve)
    if not curves:
        print("no bound curves for the configured algorithms", file=sys.stderr)
        return 2
    ts = np.unique(
        np.geomspace(1, args.rounds, num=min(args.points, args.rounds)).astype(int)
    )
    header = ["t"]
    for c in curves:
        header.extend([f"{c.column}_subopt", f"{c.column}_consensus"])
    lines = [",".join(header)]
    for t in ts:
        cells = [str(int(t))]
        for c in curves:
            cells.append(repr(float(c.subopt_bound(int(t)))))
            cells.append(repr(float(c.consensus_bound(int(t)))))
        lines.append(",".join(cells))
    path = out / f"bounds_{_label(cfg)}_seed{seed}.csv"
    path.write_text("\n".join(lines) + "\n")
    print(path)
    return 0


def _cmd_gen(args) -> int:
    cfg = bench.load_config(args.config)
    out = bench.output_dir(args.out)
    prob_cfg = cfg["problem"]
    topo_cfg = cfg["topology"]
    label = _label(cfg)
    for seed in cfg["seeds"]:
        spec = bench.ProblemSpec(
            case=prob_cfg["case"],
            N=prob_cfg["N"],
            n_g=prob_cfg["n_g"],
            seed=seed,
            K=int(prob_cfg.get("K", 10)),
        )
        problem = bench.generate_problem(spec)
        inst = out / f"instance_{label}_seed{seed}"
        inst.mkdir(parents=True, exist_ok=True)
        topo_spec = TopologySpec(
            kind=topo_cfg["kind"],
            N=prob_cfg["N"],
            extra_edges=int(topo_cfg.get("extra_edges", 0)),
            seed=topo_cfg.get("seed"),
        )
        (inst / "topology.txt").write_text(topo_spec.to_text())
        (inst / "edges.txt").write_text(edge_list_text(topo_spec.build()))
        (inst / "planted.txt").write_text(
            "\n".join(repr(float(v)) for v in problem.x_planted) + "\n"
        )
        for i, obj in enumerate(problem.objectives):
            (inst / f"node{i + 1}.txt").write_text(objective_to_text(obj))
        print(inst)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="netprox",
        description="distributed proximal-gradient experiments on networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every (algorithm, seed) cell; write CSVs and a summary")
    _add_common(run_p)
    check_p = sub.add_parser(
        "check", help="run and verify stopping, audits, and bound domination; exit 1 on failure"
    )
    _add_common(check_p)
    bounds_p = sub.add_parser("bounds", help="write the theoretical bound curves as a CSV")
    _add_common(bounds_p)
    bounds_p.add_argument("--rounds", type=int, default=10000, help="largest t in the grid")
    bounds_p.add_argument("--points", type=int, default=200, help="grid resolution")
    gen_p = sub.add_parser("gen", help="write instance files (topology, objectives, planted signal)")
    _add_common(gen_p)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, check=False)
        if args.command == "check":
            return _cmd_run(args, check=True)
        if args.command == "bounds":
            return _cmd_bounds(args)
        return _cmd_gen(args)
    except bench.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
