"""Compare elliptic and unpruned bucket sizes while simulating one instance with loud-ch.

    python3 scripts/pruning_report.py --vertices 2000 --vehicles 50 --requests 2000
"""
import argparse
import copy

from loud.buckets import BucketIndex
from loud.fleet import Fleet
from loud.instance import Instance, generate_instance
from loud.sim import Simulation, make_engine


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--vertices", type=int, default=2000)
    ap.add_argument("--vehicles", type=int, default=50)
    ap.add_argument("--requests", type=int, default=2000)
    ap.add_argument("--horizon", type=int, default=288000)
    ap.add_argument("--every", type=int, default=250, help="snapshot interval in requests")
    args = ap.parse_args()

    inst = generate_instance(args.seed, args.vertices, args.vehicles, args.requests, args.horizon)
    run_inst = Instance(inst.net, inst.vehicles, [copy.copy(r) for r in inst.requests], inst.params, inst.coords)
    eng = make_engine("loud-ch", run_inst, Fleet(inst.vehicles, inst.params))
    live, full = eng.buckets, BucketIndex(eng.h, elliptic=False)

    def mirror(name):
        pruned_fn, full_fn = getattr(live, name), getattr(full, name)

        def both(*a):
            full_fn(*a)
            return pruned_fn(*a)
        return both

    for name in ("generate_source_entries", "generate_target_entries", "remove_entries"):
        setattr(live, name, mirror(name))
    resolve = eng.resolve

    def snapshot(req, now):
        if req.id % args.every == args.every // 2:
            a, b = live.store.count(), full.store.count()
            print(f"request {req.id:>6} t={now:>7}: {a:>7} elliptic vs {b:>8} unpruned entries "
                  f"(factor {b / max(a, 1):.2f})")
        return resolve(req, now)

    eng.resolve = snapshot
    Simulation(run_inst, eng).run()
    st = live.stats
    print(f"{st.generations} generations: {st.entries} elliptic vs {full.stats.entries} unpruned entries "
          f"(factor {full.stats.entries / max(st.entries, 1):.2f}); "
          f"parent-chain extras {st.parent_chain_extra} ({st.parent_chain_extra / max(st.entries, 1):.4%})")


if __name__ == "__main__":
    main()
