"""Time every engine on one generated instance and print a per-request comparison.

    python3 scripts/benchmark.py --vertices 2000 --vehicles 50 --requests 2000
"""
import argparse
from time import perf_counter

from loud.cch import CustomizableHierarchy
from loud.ch import build_ch
from loud.instance import generate_instance
from loud.sim import ENGINES, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--vertices", type=int, default=2000)
    ap.add_argument("--vehicles", type=int, default=50)
    ap.add_argument("--requests", type=int, default=2000)
    ap.add_argument("--horizon", type=int, default=288000)
    ap.add_argument("--engines", default=",".join(ENGINES))
    args = ap.parse_args()

    inst = generate_instance(args.seed, args.vertices, args.vehicles, args.requests, args.horizon)
    hierarchies = {}
    t0 = perf_counter()
    hierarchies["loud-ch"] = build_ch(inst.net)
    t1 = perf_counter()
    cch = CustomizableHierarchy.build(inst.net)
    t2 = perf_counter()
    cch.customize_perfect()
    t3 = perf_counter()
    hierarchies["loud-cch"] = cch
    print(f"CH build {t1 - t0:.2f} s, CCH topology {t2 - t1:.2f} s, perfect customization {t3 - t2:.2f} s")

    rows = []
    for name in args.engines.split(","):
        t0 = perf_counter()
        res = simulate(inst, name, hierarchies.get(name))
        rows.append((name, perf_counter() - t0, res.mean_request_us(), res.stats.summary()["accepted"], res))
    ref_mean = rows[0][2]
    print(f"{'engine':<16}{'sim s':>10}{'mean us':>12}{'ratio':>8}{'accepted':>10}  same decisions")
    for name, wall, mean, accepted, res in rows:
        same = res.decisions == rows[0][4].decisions
        print(f"{name:<16}{wall:>10.2f}{mean:>12.0f}{mean / ref_mean:>8.2f}{accepted:>10}  {same}")


if __name__ == "__main__":
    main()
