"""Command-line entry points: preprocess, customize, generate, simulate, compare."""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .ch import build_ch, load_hierarchy
from .cch import CustomizableHierarchy
from .dispatch import EngineOptions
from .fleet import CostParameters
from .graph import NetworkFormatError, load_network
from .instance import Instance, generate_instance, load_instance, write_instance
from .sim import ENGINES, simulate

EXIT_OK, EXIT_INVALID = 0, 2


@dataclass
class RunConfig:
    graph: str
    vehicles: str
    requests: str
    params: Optional[str] = None
    coords: Optional[str] = None
    hierarchy: Optional[str] = None
    engines: list[str] = field(default_factory=lambda: ["loud-ch"])
    out: str = "out"
    options: EngineOptions = field(default_factory=EngineOptions)
    heuristic: bool = False

    def check(self) -> None:
        for name in ("graph", "vehicles", "requests", "params", "coords", "hierarchy"):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise FileNotFoundError(f"{name} file not found: {path}")
        for e in self.engines:
            if e not in ENGINES:
                raise ValueError(f"unknown engine {e!r}; expected one of {', '.join(ENGINES)}")

    def load(self) -> Instance:
        return load_instance(self.graph, self.vehicles, self.requests, self.params, self.coords)


def _hierarchy_for(engine: str, cfg: RunConfig, inst: Instance):
    if cfg.hierarchy is None or engine == "baseline-exact":
        return None
    with open(cfg.hierarchy) as f:
        h = load_hierarchy(inst.net, f)
    if h.kind == "cch" and h.customized is None:
        h.customize_perfect()
    return h if h.kind == engine.split("-")[1] else None


def cmd_preprocess(args) -> int:
    net = load_network(args.graph)
    t0 = time.perf_counter()
    if args.mode == "ch":
        h = build_ch(net)
    else:
        h = CustomizableHierarchy.build(net, balance=args.balance)
    elapsed = time.perf_counter() - t0
    with open(args.out, "w") as f:
        h.dump(f)
    print(f"{args.mode} built in {elapsed:.3f} s: {net.num_vertices} vertices, {h.num_arcs} arcs -> {args.out}")
    return EXIT_OK


def cmd_customize(args) -> int:
    net = load_network(args.graph)
    with open(args.hierarchy) as f:
        h = load_hierarchy(net, f)
    if h.kind != "cch":
        raise ValueError("customize needs a cch hierarchy file")
    lengths = None
    if args.metric:
        with open(args.metric) as f:
            lengths = [int(x) for x in f.read().split()]
    t0 = time.perf_counter()
    if args.mode == "basic":
        h.customize_basic(lengths)
    else:
        h.customize_perfect(lengths)
    elapsed = time.perf_counter() - t0
    with open(args.out, "w") as f:
        h.dump(f)
    print(f"{args.mode} customization in {elapsed:.3f} s: {h.num_live_arcs} live arcs -> {args.out}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.vehicles < 0 or args.requests < 0 or args.vertices < 1 or args.horizon < 0:
        raise ValueError("counts and horizon must be nonnegative and the graph nonempty")
    params = CostParameters()
    inst = generate_instance(args.seed, args.vertices, args.vehicles, args.requests, args.horizon,
                             service_tail=args.service_tail, params=params)
    paths = write_instance(inst, args.out)
    print(f"instance written to {args.out}: " + ", ".join(sorted(os.path.basename(p) for p in paths.values())))
    return EXIT_OK


def _config(args, engines) -> RunConfig:
    cfg = RunConfig(args.graph, args.vehicles, args.requests, args.params, args.coords,
                    args.hierarchy, engines, args.out,
                    EngineOptions(elliptic=not args.no_elliptic, stopping=not args.no_stopping),
                    args.heuristic_filter)
    cfg.check()
    return cfg


def cmd_simulate(args) -> int:
    cfg = _config(args, [args.engine])
    inst = cfg.load()
    t0 = time.perf_counter()
    res = simulate(inst, args.engine, _hierarchy_for(args.engine, cfg, inst), cfg.options,
                   heuristic=cfg.heuristic)
    elapsed = time.perf_counter() - t0
    res.write(cfg.out)
    summary = res.stats.summary()
    print(f"{args.engine}: {summary['accepted']}/{summary['requests']} accepted in {elapsed:.2f} s, "
          f"mean {res.mean_request_us():.0f} us per request -> {cfg.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    if len(engines) < 2:
        raise ValueError("compare needs at least two engines")
    cfg = _config(args, engines)
    inst = cfg.load()
    results = []
    for e in engines:
        res = simulate(inst, e, _hierarchy_for(e, cfg, inst), cfg.options, heuristic=cfg.heuristic)
        res.write(os.path.join(cfg.out, e))
        results.append(res)
    ref = results[0]
    lines = ["engine,decision_diffs,first_diff_request,stats_identical,mean_us,time_ratio_vs_first"]
    for res in results:
        diffs = [a[0] for a, b in zip(ref.decisions, res.decisions) if a != b]
        ratio = res.mean_request_us() / ref.mean_request_us() if ref.mean_request_us() else 0.0
        lines.append(f"{res.engine},{len(diffs)},{diffs[0] if diffs else ''},"
                     f"{int(res.stats_csv() == ref.stats_csv())},{res.mean_request_us():.1f},{ratio:.3f}")
    report = "\n".join(lines) + "\n"
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "compare.csv"), "w") as f:
        f.write(report)
    print(report, end="")
    return EXIT_OK


def _instance_args(p) -> None:
    p.add_argument("--graph", required=True)
    p.add_argument("--vehicles", required=True)
    p.add_argument("--requests", required=True)
    p.add_argument("--params")
    p.add_argument("--coords", help="vertex coordinates; enables the geometric filter of baseline-exact")
    p.add_argument("--hierarchy", help="preprocessed hierarchy file (built on the fly otherwise)")
    p.add_argument("--out", required=True)
    p.add_argument("--no-elliptic", action="store_true", help="store unpruned bucket entries")
    p.add_argument("--no-stopping", action="store_true",
                   help="run last-stop searches to exhaustion and always query diversions")
    p.add_argument("--heuristic-filter", action="store_true",
                   help="baseline-exact filters with 30 km/h, 1.3, 1.5 estimates (inexact; needs --coords)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loud", description="Exact ride-pooling dispatch on road networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build a CH or a CCH topology")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=("ch", "cch"), default="ch")
    p.add_argument("--balance", type=float, default=0.3, help="nested dissection balance for cch")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("customize", help="apply a metric to a CCH")
    p.add_argument("--graph", required=True)
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--metric", help="one length per edge, in graph order (default: graph lengths)")
    p.add_argument("--mode", choices=("basic", "perfect"), default="perfect")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_customize)

    p = sub.add_parser("generate", help="write a seeded synthetic instance")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--vertices", type=int, default=2000)
    p.add_argument("--vehicles", type=int, default=50)
    p.add_argument("--requests", type=int, default=2000)
    p.add_argument("--horizon", type=int, default=144000, help="request times are uniform in [0, horizon)")
    p.add_argument("--service-tail", type=int, default=36000, help="service continues this long after the horizon")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run one engine")
    _instance_args(p)
    p.add_argument("--engine", choices=ENGINES, default="loud-ch")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run several engines and diff their decisions")
    _instance_args(p)
    p.add_argument("--engines", default=",".join(ENGINES))
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NetworkFormatError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
