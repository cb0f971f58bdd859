"""Seven-variant ablation (sampling x path x clusterer) on the reference corpus.

    python scripts/ablate.py --csv results/ablation.csv
"""

import argparse
import csv

from provfda import experiment
from provfda.pipeline import PipelineConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[1])
    ap.add_argument("--users", type=int, default=10)
    ap.add_argument("--logs", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--records", type=int, default=300)
    ap.add_argument("--csv")
    args = ap.parse_args()

    corpus = experiment.reference_corpus(
        experiment.ReferenceConfig(users=args.users, logs_per_user=args.logs, seed=args.seed))
    rows = experiment.ablate(corpus, PipelineConfig(), args.records)
    for r in rows:
        print(f"{r['variant']}  {r['method']:30s} auc={r['auc']:.4f} "
              f"time/record={r['time_per_record_s'] * 1e3:.3f}ms clusters={r['n_clusters']}")
    print(experiment.ablation_ordering(rows))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
