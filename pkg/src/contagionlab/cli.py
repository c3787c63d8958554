"""Command-line entry point: ``contagionlab <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analytics, branching, experiments, mcv
from .contagion import ContagionConfig, parse_seed_spec, run
from .graphs import GenConfig, Model, StagePartition, generate, load_graph, save_graph


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="")


def cmd_generate(a):
    g = generate(GenConfig(Model(a.model), a.n, a.m, a.p, a.seed))
    save_graph(g, a.out)


def cmd_infect(a):
    g = load_graph(a.graph)
    seeds = parse_seed_spec(a.seeds, g.n)
    res = run(g, ContagionConfig(a.k, tuple(seeds), a.multiplicity, a.max_rounds))
    with _open_out(a.out) as fh:
        w = csv.writer(fh)
        w.writerow(["node", "round"])
        for node in res.infected():
            w.writerow([int(node), int(res.rounds[node])])
    summary = {
        "infected_count": res.infected_count,
        "rounds_to_fixation": res.rounds_to_fixation,
        "fully_infected": res.fully_infected,
    }
    text = json.dumps(summary)
    if a.summary:
        Path(a.summary).write_text(text + "\n")
    else:
        print(text, file=sys.stderr if a.out in (None, "-") else sys.stdout)


def cmd_branch(a):
    rows, summary = experiments.run_branch_extinction(a.m, a.alpha, a.x, a.depth, a.runs, a.seed)
    with _open_out(a.out) as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "mean_phi", "survivor_fraction"])
        for r in rows:
            w.writerow([r["depth"], repr(r["mean_phi"]), repr(r["survivor_fraction"])])


def cmd_analyze(a):
    with _open_out(a.out) as fh:
        w = csv.writer(fh)
        if a.mode == "eta":
            t = analytics.solve_eta(a.p, a.m, a.x_max, a.source)
            w.writerow(["x", "a_x", "eta", "bound"])
            for x in range(1, t.x_max + 1):
                w.writerow([x, repr(float(t.a[x])), repr(float(t.eta[x])), repr(float(t.bound(a.n)[x]))])
        elif a.mode == "degree":
            t = analytics.expected_degree(a.p, a.m, a.s, a.n, a.total)
            w.writerow(["t", "expected_degree"])
            for i, v in enumerate(t.values):
                w.writerow([a.s + i, repr(float(v))])
        elif a.mode == "bootstrap-bound":
            table = analytics.solve_eta(a.p, a.m, a.m * a.n)
            w.writerow(["s", "bound"])
            for s in a.sizes:
                w.writerow([s, repr(analytics.expected_round1_infections(a.p, a.m, a.k, s, a.n, table))])
        else:
            g = load_graph(a.graph) if a.graph else generate(GenConfig(Model.PA_INDEPENDENT, a.n, a.m, a.p, a.seed))
            esc = analytics.staging_escape_stats(g, StagePartition.for_n(g.n))
            w.writerow(["stage", "issued", "same_stage", "fraction"])
            for i, f in enumerate(esc.fractions()):
                w.writerow([i, int(esc.issued[i]), int(esc.same[i]), "" if f is None else repr(f)])


def cmd_mcv(a):
    for path in a.circuits:
        try:
            c = mcv.parse_circuit(Path(path).read_text())
            v = mcv.check(c, a.k, a.epsilon, a.M, minimal_M=a.minimal_m)
            out = {"circuit": path, **v.as_dict()}
        except mcv.CircuitError as e:
            out = {"circuit": path, "verdict": "REJECTED", "error": str(e)}
        print(json.dumps(out))


def cmd_run(a):
    cfg = experiments.ExperimentConfig.load(a.config)
    _, summary = experiments.run_experiment(cfg, a.out)
    print(json.dumps(experiments._jsonable(summary), indent=2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="contagionlab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write one evolving graph to a file")
    g.add_argument("--model", default="PA_INDEPENDENT", choices=[m.value for m in Model])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--p", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("infect", help="run a k-complex contagion on a graph file")
    i.add_argument("graph")
    i.add_argument("--k", type=int, required=True)
    i.add_argument("--seeds", required=True, help="oldest:<c> | list:<csv> | random:<s>:<rng-seed>")
    i.add_argument("--multiplicity", action="store_true", help="count parallel edges as separate exposures")
    i.add_argument("--max-rounds", type=int)
    i.add_argument("--out", help="node,round CSV (default stdout)")
    i.add_argument("--summary", help="summary JSON path")
    i.set_defaults(func=cmd_infect)

    b = sub.add_parser("branch", help="labelled branching process census")
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--x", type=int, required=True)
    b.add_argument("--depth", type=int, required=True)
    b.add_argument("--runs", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_branch)

    an = sub.add_parser("analyze", help="degree analytics tables")
    an.add_argument("mode", choices=["eta", "degree", "bootstrap-bound", "staging"])
    an.add_argument("--p", type=float, default=1.0)
    an.add_argument("--m", type=int, default=2)
    an.add_argument("--n", type=int, default=2**14)
    an.add_argument("--k", type=int, default=2)
    an.add_argument("--s", type=int, default=4)
    an.add_argument("--x-max", type=int, default=1024)
    an.add_argument("--source", type=int, help="birth degree for eta (default m)")
    an.add_argument("--total", choices=["exact", "asymptotic"], default="exact")
    an.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000])
    an.add_argument("--graph", help="graph file for staging (default: generate one)")
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--out")
    an.set_defaults(func=cmd_analyze)

    mc = sub.add_parser("mcv", help="monotone circuit reduction")
    mc_sub = mc.add_subparsers(dest="mcv_cmd", required=True)
    ch = mc_sub.add_parser("check", help="verify the reduction on circuit files")
    ch.add_argument("circuits", nargs="+")
    ch.add_argument("--k", type=int, default=2)
    ch.add_argument("--epsilon", type=float, default=0.5)
    ch.add_argument("--M", type=int, help="pad size override")
    ch.add_argument("--minimal-m", action="store_true", help="use the smallest feasible pad")
    ch.set_defaults(func=cmd_mcv)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING)
    a.func(a)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
