"""Command-line entry point: gen, train, detect, bench, ablate.

Exit codes (format version 1):

    0  success
    1  unexpected internal error
    2  bad command-line usage (argparse)
    3  input/output path missing or unreadable
    4  configuration or validation error (includes model/path mismatch)
    5  model file unreadable as a model (bad magic, version, checksum, layout)

Verdict stream (JSON lines, one per input record in input order)::

    {"record_index": <int>, "score": <float>, "is_anomaly": <bool>}
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import detector, experiment, modelfile, pipeline
from .errors import ConfigError, DataError, ModelFormatError
from .ingest import read_jsonl, record_to_json
from .pipeline import PipelineConfig
from .synthgen import BehaviorProfile, InjectionSpec, gen_benign, inject, load_config, split_by_time

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_PATH, EXIT_CONFIG, EXIT_MODEL = 0, 1, 2, 3, 4, 5
VERDICT_SCHEMA_VERSION = 1

log = logging.getLogger("provfda")


class PathProblem(Exception):
    pass


def _event_ids(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated event ids, got {text!r}")


def _hidden(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated layer sizes, got {text!r}")


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="JSON-lines log file")
    p.add_argument("--user-field", default="Hostname", help="field naming the user/host")
    p.add_argument("--denylist", type=_event_ids, default=[], help="event ids to drop, e.g. 4634,4672")


def _add_pipeline(p):
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", help="pipeline config JSON (flags override it)")
    g.add_argument("--path", choices=pipeline.PATHS)
    g.add_argument("--no-rwr", action="store_true", help="use the direct-neighbor window")
    g.add_argument("--walk-len", type=int)
    g.add_argument("--hops", type=int)
    g.add_argument("--restart-p", type=float)
    g.add_argument("--seed", type=int, help="sampling seed")
    g.add_argument("--embed-dim", type=int)
    g.add_argument("--sg-epochs", type=int)
    g.add_argument("--sg-neg", type=int)
    g.add_argument("--sg-window", type=int)
    g.add_argument("--dft-window", type=int, help="defaults to the walk length")
    g.add_argument("--log-c", type=float)
    g.add_argument("--gnn-hidden", type=_hidden)
    g.add_argument("--gnn-seed", type=int)
    g.add_argument("--delta", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--clusterer", choices=pipeline.CLUSTERERS)


def _add_corpus(p):
    g = p.add_argument_group("corpus (reference synthetic corpus unless --input/--test given)")
    _add_input(g, required=False)
    g.add_argument("--test", help="labeled JSON-lines test file")
    g.add_argument("--users", type=int, default=10)
    g.add_argument("--logs", type=int, default=5000, help="benign logs per user")
    g.add_argument("--corpus-seed", type=int, default=42)
    g.add_argument("--gen-config", help="generator JSON {profile, injection}")


def _set(obj, **kw):
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(obj, **kw) if kw else obj


def build_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = PipelineConfig.from_dict(json.loads(_read_text(args.config)))
    walk = args.walk_len
    cfg = replace(
        cfg,
        rwr=_set(cfg.rwr, walk_length=walk, hop_limit=args.hops,
                 restart_probability=args.restart_p, seed=args.seed),
        fda=_set(cfg.fda, window=args.dft_window if args.dft_window is not None else walk,
                 log_constant=args.log_c),
        encoder=_set(cfg.encoder, embed_dim=args.embed_dim, sg_epochs=args.sg_epochs,
                     sg_neg=args.sg_neg, sg_window=args.sg_window),
        gnn=_set(cfg.gnn, hidden=args.gnn_hidden, seed=args.gnn_seed),
        detector=_set(cfg.detector, delta=args.delta, tau=args.tau, clusterer=args.clusterer),
    )
    cfg = _set(cfg, path=args.path)
    if args.no_rwr:
        cfg = replace(cfg, use_rwr=False)
    return cfg.validate()


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise PathProblem(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_corpus(path, args):
    if not Path(path).is_file():
        raise PathProblem(f"input file not found: {path}")
    try:
        corpus = read_jsonl(path, user_field=args.user_field, denylist=args.denylist)
    except OSError as exc:
        raise PathProblem(f"cannot read {path}: {exc}") from None
    if corpus.n_errors:
        log.warning("%s: skipped %d malformed lines", path, corpus.n_errors)
    return corpus


def _writable(path) -> Path:
    p = Path(path)
    if p.parent and not p.parent.exists():
        raise PathProblem(f"output directory does not exist: {p.parent}")
    return p


def write_features(path, X: np.ndarray) -> None:
    with open(_writable(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id"] + [f"f_{i}" for i in range(X.shape[1])])
        for v, row in enumerate(X):
            w.writerow([v] + [repr(float(x)) for x in row])


def write_metrics_csv(path, rows: list[dict]) -> None:
    keys: list = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with open(_writable(path), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow(r)


# ---------------------------------------------------------------- commands

def cmd_gen(args) -> int:
    profile, spec = BehaviorProfile(), InjectionSpec()
    if args.gen_config:
        _read_text(args.gen_config)
        profile, spec = load_config(args.gen_config)
    if args.rate is not None:
        spec = replace(spec, rate=args.rate)
    if args.family is not None:
        spec = replace(spec, family=args.family)
    benign = gen_benign(profile, args.users, args.logs, args.corpus_seed)
    if args.test_out:
        train, held = split_by_time(benign, args.train_fraction)
        mixed = inject(held, spec, args.corpus_seed)
        _write_jsonl(args.out, train, None)
        _write_jsonl(args.test_out, mixed.records, mixed.labels)
        print(f"wrote {len(train)} training records to {args.out}")
        print(f"wrote {len(mixed.records)} test records ({sum(mixed.labels)} anomalous) to {args.test_out}")
    elif args.inject:
        mixed = inject(benign, spec, args.corpus_seed)
        _write_jsonl(args.out, mixed.records, mixed.labels)
        print(f"wrote {len(mixed.records)} records ({sum(mixed.labels)} anomalous) to {args.out}")
    else:
        _write_jsonl(args.out, benign, None)
        print(f"wrote {len(benign)} records to {args.out}")
    return EXIT_OK


def _write_jsonl(path, records, labels) -> None:
    with open(_writable(path), "w") as fh:
        for i, rec in enumerate(records):
            extra = {} if labels is None else {"Label": "malicious" if labels[i] else "benign"}
            fh.write(record_to_json(rec, **extra) + "\n")


def cmd_train(args) -> int:
    cfg = build_config(args)
    corpus = _load_corpus(args.input, args)
    if not corpus.records:
        raise DataError(f"no usable records in {args.input}")
    fr = pipeline.fit(corpus.records, cfg)
    modelfile.save(fr.model, _writable(args.model))
    if args.features_out:
        write_features(args.features_out, fr.features)
    if args.graph_out:
        fr.graph.write_edge_list(_writable(args.graph_out + ".edges"))
        fr.graph.write_node_table(_writable(args.graph_out + ".nodes.csv"))
    c = fr.model.cluster
    print(f"path={cfg.path} rwr={cfg.use_rwr} records={len(corpus.records)} "
          f"clusters={c.n_clusters} loss_train={c.loss_train:.6g} fit_s={fr.seconds:.2f}")
    print(f"model written to {args.model}")
    return EXIT_OK


def _load_model(path):
    if not Path(path).is_file():
        raise PathProblem(f"model file not found: {path}")
    return modelfile.load(path)


def cmd_detect(args) -> int:
    model = _load_model(args.model)
    if args.path and args.path != model.config.path:
        raise ConfigError(f"model was trained for path {model.config.path!r}, not {args.path!r}")
    corpus = _load_corpus(args.input, args)
    if not corpus.records:
        raise DataError(f"no usable records in {args.input}")
    if args.workers > 1:
        from .workers import detect_parallel
        dr = detect_parallel(model, corpus.records, args.workers)
    else:
        dr = pipeline.detect(model, corpus.records)
    scores, _ = dr.by_source()
    thr = model.cluster.threshold
    out = open(_writable(args.verdicts), "w") if args.verdicts else sys.stdout
    try:
        for i, s in enumerate(scores):
            out.write(json.dumps({"record_index": i, "score": float(s),
                                  "is_anomaly": bool(s > thr)}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.features_out:
        order = np.argsort(np.asarray(dr.graph.source_index), kind="stable")
        write_features(args.features_out, dr.features[order])

    report = {
        "verdict_schema": VERDICT_SCHEMA_VERSION,
        "records": len(scores),
        "threshold": thr,
        "anomalies": int(np.sum(scores > thr)),
        "mean_score": float(scores.mean()),
        "config": model.config.to_dict(),
        "seed": model.config.rwr.seed,
    }
    if corpus.labels is not None:
        metrics = detector.evaluate(corpus.labels, scores, thr)
        report["metrics"] = metrics
    if args.latency_records > 0:
        lat = experiment.measure_latency(model, corpus.records, args.latency_records,
                                         args.warm_runs, dr.graph)
        total_bytes = corpus.total_bytes
        report["latency"] = {"mean_s": lat.mean_s, "std_s": lat.std_s, "p95_s": lat.p95_s,
                             "runs_s": lat.run_means_s}
        report["throughput"] = {"records_per_s": lat.records_per_s,
                                "bytes_per_s": lat.records_per_s * total_bytes / len(corpus.records),
                                "cv": lat.cv}
    if args.report:
        Path(_writable(args.report)).write_text(json.dumps(report, indent=2, default=_jsonable))
    if args.metrics_csv and "metrics" in report:
        write_metrics_csv(args.metrics_csv, [report["metrics"]])
    _summary(report, sys.stderr if not args.verdicts else sys.stdout)
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serializable: {type(x)}")


def _summary(report: dict, stream) -> None:
    m = report.get("metrics")
    line = f"records={report['records']} anomalies={report['anomalies']} threshold={report['threshold']:.6g}"
    if m:
        auc = "n/a" if m["auc"] is None else f"{m['auc']:.4f}"
        line += f" auc={auc} tpr={m['tpr']:.3f} fpr={m['fpr']:.3f} f1={m['f1']:.3f}"
    if "latency" in report:
        line += (f" latency_mean_ms={report['latency']['mean_s'] * 1e3:.3f}"
                 f" records_per_s={report['throughput']['records_per_s']:.1f}")
    print(line, file=stream)


def _corpus_for(args) -> experiment.ReferenceCorpus:
    if args.input or args.test:
        if not (args.input and args.test):
            raise ConfigError("--input and --test must be given together")
        train = _load_corpus(args.input, args)
        test = _load_corpus(args.test, args)
        if test.labels is None:
            raise DataError(f"{args.test} carries no labels")
        return experiment.ReferenceCorpus(train.records, test.records, test.labels, [])
    ref = experiment.ReferenceConfig(users=args.users, logs_per_user=args.logs, seed=args.corpus_seed)
    if args.gen_config:
        _read_text(args.gen_config)
        profile, spec = load_config(args.gen_config)
        ref = replace(ref, profile=profile, injection=spec)
    return experiment.reference_corpus(ref)


def cmd_bench(args) -> int:
    cfg = build_config(args)
    corpus = _corpus_for(args)
    out = experiment.bench(corpus, cfg, args.latency_records, args.warm_runs)
    rows = []
    for path in ("fda", "gnn"):
        r = out[path]
        rows.append({"path": path, "auc": r["metrics"]["auc"],
                     "latency_mean_s": r["latency"]["mean_s"], "latency_std_s": r["latency"]["std_s"],
                     "latency_p95_s": r["latency"]["p95_s"],
                     "records_per_s": r["throughput"]["records_per_s"],
                     "bytes_per_s": r["throughput"]["bytes_per_s"], "throughput_cv": r["throughput"]["cv"]})
        print(f"{path}: auc={r['metrics']['auc']:.4f} latency_mean_ms={r['latency']['mean_s'] * 1e3:.3f} "
              f"p95_ms={r['latency']['p95_s'] * 1e3:.3f} records_per_s={r['throughput']['records_per_s']:.1f} "
              f"cv={r['throughput']['cv']:.3f}")
    print(f"throughput ratio fda/gnn = {out['throughput_ratio']:.2f}; "
          f"latency ratio fda/gnn = {out['latency_ratio']:.3f}")
    if args.report:
        Path(_writable(args.report)).write_text(json.dumps(out, indent=2, default=_jsonable))
    if args.metrics_csv:
        write_metrics_csv(args.metrics_csv, rows)
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = build_config(args)
    corpus = _corpus_for(args)
    rows = experiment.ablate(corpus, cfg, args.latency_records, args.warm_runs)
    print(f"{'variant':8s} {'method':34s} {'AUC':>7s} {'time/record (ms)':>17s}")
    for r in rows:
        auc = "n/a" if r["auc"] is None else f"{r['auc']:.4f}"
        print(f"{r['variant']:8s} {r['method']:34s} {auc:>7s} {r['time_per_record_s'] * 1e3:17.3f}")
    order = experiment.ablation_ordering(rows)
    print(f"RWR variants beat non-RWR: {order['rwr_beats_no_rwr']}; "
          f"FDA variants faster than GNN: {order['fda_faster_than_gnn']}")
    if args.metrics_csv:
        write_metrics_csv(args.metrics_csv, rows)
    if args.report:
        Path(_writable(args.report)).write_text(
            json.dumps({"rows": rows, "ordering": order, "config": cfg.to_dict()}, indent=2,
                       default=_jsonable))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="provfda", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic JSON-lines corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--logs", type=int, default=5000, help="benign logs per user")
    p.add_argument("--corpus-seed", "--seed", dest="corpus_seed", type=int, default=42)
    p.add_argument("--gen-config", help="generator JSON {profile, injection}")
    p.add_argument("--inject", action="store_true", help="splice labeled anomalies into the stream")
    p.add_argument("--test-out", help="also write a labeled test split here (implies injection)")
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--rate", type=float)
    p.add_argument("--family")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="fit a detector on benign logs")
    _add_input(p)
    _add_pipeline(p)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--features-out", help="CSV dump of training features")
    p.add_argument("--graph-out", help="prefix for edge-list and node-table dumps")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="score logs against a trained model")
    _add_input(p)
    p.add_argument("--model", required=True)
    p.add_argument("--path", choices=pipeline.PATHS, help="assert the model's feature path")
    p.add_argument("--verdicts", help="JSON-lines verdict file (default: stdout)")
    p.add_argument("--report", help="RunReport JSON")
    p.add_argument("--metrics-csv")
    p.add_argument("--features-out")
    p.add_argument("--workers", type=int, default=1, help="parallel feature workers")
    p.add_argument("--latency-records", type=int, default=0,
                   help="records timed at batch size 1 (0 skips the latency measurement)")
    p.add_argument("--warm-runs", type=int, default=3)
    p.set_defaults(func=cmd_detect)

    for name, func, help_ in (("bench", cmd_bench, "compare FDA and GNN latency/throughput"),
                              ("ablate", cmd_ablate, "run the seven-variant ablation")):
        p = sub.add_parser(name, help=help_)
        _add_corpus(p)
        _add_pipeline(p)
        p.add_argument("--report")
        p.add_argument("--metrics-csv")
        p.add_argument("--latency-records", type=int, default=1000 if name == "bench" else 300)
        p.add_argument("--warm-runs", type=int, default=3)
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except PathProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PATH
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (json.JSONDecodeError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
