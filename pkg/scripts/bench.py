"""FDA vs GNN per-record latency and throughput on the reference corpus.

    python scripts/bench.py --records 1000 --warm-runs 3
"""

import argparse
import json

from provfda import experiment
from provfda.pipeline import PipelineConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[1])
    ap.add_argument("--users", type=int, default=10)
    ap.add_argument("--logs", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--records", type=int, default=1000)
    ap.add_argument("--warm-runs", type=int, default=3)
    ap.add_argument("--out")
    args = ap.parse_args()

    corpus = experiment.reference_corpus(
        experiment.ReferenceConfig(users=args.users, logs_per_user=args.logs, seed=args.seed))
    out = experiment.bench(corpus, PipelineConfig(), args.records, args.warm_runs)
    for path in ("fda", "gnn"):
        lat, thr = out[path]["latency"], out[path]["throughput"]
        print(f"{path}: mean={lat['mean_s'] * 1e3:.3f}ms std={lat['std_s'] * 1e3:.3f}ms "
              f"p95={lat['p95_s'] * 1e3:.3f}ms {thr['records_per_s']:.0f} rec/s "
              f"{thr['bytes_per_s'] / 1e6:.2f} MB/s cv={thr['cv']:.3f}")
    print(f"throughput ratio {out['throughput_ratio']:.2f}, latency ratio {out['latency_ratio']:.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
