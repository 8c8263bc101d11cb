"""Command-line entry point.

Subcommands operate on a federation store directory (see store module) and
write CSV reports, a JSON summary, and rendered figures into --out. Failures
exit nonzero after printing the error class name, so scripts can branch on it.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .classifier import HINGE, LOGISTIC, TrainConfig, model_to_bytes, train
from .corpus import LabelConfig, load_corpus
from .errors import DomainError, ModPairError
from .experiments import (
    BUDGET_GRID,
    NOISE_GRID,
    HarnessConfig,
    run_budget_experiment,
    run_cross_matrix,
    run_modpair_experiment,
    run_noise_experiment,
)
from .fedsim import FederationGraph, FediverseSim, fetch_round
from .pairing import PairingConfig
from .reporting import read_table, write_report, write_table
from .store import load_store, write_store
from .synth import SynthConfig, generate_federation
from .textproc import build_vocabulary, tfidf_profile


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="experiment seed")
    parser.add_argument(
        "--threshold",
        type=float,
        choices=[0.5, 0.8],
        default=0.5,
        help="toxicity threshold for deriving labels from scores",
    )
    parser.add_argument(
        "--trainer", choices=[LOGISTIC, HINGE], default=LOGISTIC, help="classifier kind"
    )
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )


def _harness_config(args) -> HarnessConfig:
    return HarnessConfig(
        seed=args.seed,
        trainer=args.trainer,
        k=getattr(args, "k", 3),
        presample_f=getattr(args, "presample_f", None),
        train_config=TrainConfig(),
    )


def _load(args) -> FederationGraph:
    return load_store(args.store, label_cfg=LabelConfig(threshold=args.threshold))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modpair",
        description="Decentralized moderation by model sharing: simulate, pair, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize toot JSONL files into a store")
    p.add_argument("files", nargs="+", type=Path, help="one JSONL timeline per instance")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--domain", help="instance domain (single-file ingest only)")
    p.add_argument("--edges", type=Path, help="optional follower-edge JSONL")
    _add_common(p)

    p = sub.add_parser("synth", help="generate a synthetic federation store")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--instances", type=int, default=12)
    p.add_argument("--clusters", type=int, default=3)
    p.add_argument("--toots-per-instance", type=int, default=2000)
    p.add_argument("--users-per-instance", type=int, default=20)
    p.add_argument("--intra-follow", type=float, default=0.05)
    p.add_argument("--inter-follow", type=float, default=0.005)
    p.add_argument("--toxic-fraction", type=float, default=0.3)
    p.add_argument("--label-noise", type=float, default=0.07)
    _add_common(p)

    p = sub.add_parser("train", help="train each instance's local model")
    p.add_argument("--store", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("crossmatrix", help="train-on-one test-on-all transfer matrix")
    p.add_argument("--store", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("pair", help="profile exchange and top-k peer selection round")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--presample-f", type=int, default=None)
    _add_common(p)

    p = sub.add_parser(
        "ensemble-eval", help="full pipeline: pair, exchange models, vote, score vs oracle"
    )
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--presample-f", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("noise-exp", help="label-noise robustness experiment")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument(
        "--levels",
        default=",".join(str(x) for x in NOISE_GRID),
        help="comma-separated flip fractions",
    )
    p.add_argument("--noise-seeds", type=int, default=1, help="number of seeds to median over")
    p.add_argument("--no-topic", action="store_true", help="skip topic-whitelist mode")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--presample-f", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("budget-exp", help="annotation-budget curve experiment")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument(
        "--grid",
        default=",".join(str(n) for n in BUDGET_GRID),
        help="comma-separated budget sizes",
    )
    p.add_argument("--modes", default="first,random")
    p.add_argument("--budget-seeds", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("report", help="re-render figures and summary from report CSVs")
    p.add_argument("report_dir", type=Path, nargs="?", help="defaults to --out")
    _add_common(p)

    return parser


def cmd_ingest(args) -> int:
    label_cfg = LabelConfig(threshold=args.threshold)
    if args.domain and len(args.files) > 1:
        raise DomainError("--domain only applies to single-file ingest")
    instances = {}
    registered = {}
    for path in args.files:
        corpus = load_corpus(path, domain=args.domain, label_cfg=label_cfg)
        instances[corpus.domain] = corpus
        registered[corpus.domain] = corpus.registered_user_count
    edges = set()
    if args.edges:
        import json

        with args.edges.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    entry = json.loads(line)
                    edges.add((entry["follower"], entry["followee"]))
    graph = FederationGraph(
        instances=instances, follow_edges=edges, registered_users=registered
    )
    write_store(graph, args.store)
    print(f"ingested {len(instances)} instance(s) into {args.store}")
    return 0


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        instances=args.instances,
        clusters=args.clusters,
        toots_per_instance=args.toots_per_instance,
        users_per_instance=args.users_per_instance,
        intra_follow_prob=args.intra_follow,
        inter_follow_prob=args.inter_follow,
        toxic_fraction=args.toxic_fraction,
        label_noise=args.label_noise,
        threshold=args.threshold,
        seed=args.seed,
    )
    graph = generate_federation(cfg)
    write_store(graph, args.store)
    total = sum(len(c.all_toots()) for c in graph.instances.values())
    print(f"wrote {len(graph.instances)} instances, {total} toot records to {args.store}")
    return 0


def cmd_train(args) -> int:
    graph = _load(args)
    cfg = _harness_config(args)
    from .experiments import prepare_federation

    prepared = prepare_federation(graph, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    models_dir = args.out / "models"
    models_dir.mkdir(exist_ok=True)
    rows = []
    for domain in sorted(prepared):
        inst = prepared[domain]
        if inst.model is None:
            rows.append(
                {
                    "instance": domain,
                    "trainer": cfg.trainer,
                    "train_size": len(inst.train),
                    "vocabulary_size": len(inst.vocab),
                    "final_loss": None,
                    "size_bytes": None,
                }
            )
            continue
        payload = model_to_bytes(inst.model)
        (models_dir / f"{domain}.json").write_bytes(payload)
        rows.append(
            {
                "instance": domain,
                "trainer": cfg.trainer,
                "train_size": len(inst.train),
                "vocabulary_size": len(inst.vocab),
                "final_loss": inst.model.loss_history[-1],
                "size_bytes": len(payload),
            }
        )
    write_table(rows, "models", args.out)
    print(f"trained {sum(1 for r in rows if r['size_bytes'])}/{len(rows)} models")
    return 0


def cmd_crossmatrix(args) -> int:
    report = run_cross_matrix(_load(args), _harness_config(args))
    write_report(report, args.out, figures=not args.no_figures)
    print(f"crossmatrix over {report.summary['instances']} instances -> {args.out}")
    return 0


def cmd_pair(args) -> int:
    graph = _load(args)
    cfg = _harness_config(args)
    from .experiments import ExperimentReport, _message_table, _pairing_table, prepare_federation

    prepared = prepare_federation(graph, cfg)
    sim = FediverseSim(graph)
    for domain in sorted(prepared):
        sim.publish_profile(domain, prepared[domain].profile)
        if prepared[domain].model is not None:
            sim.publish_model(domain, prepared[domain].model)
    result = fetch_round(
        sim, PairingConfig(k=cfg.k, presample_f=cfg.presample_f), cfg.rate_limit
    )
    report = ExperimentReport(name="pair", seed=cfg.seed, config=cfg.snapshot())
    report.tables["pairing"] = _pairing_table(result.decisions)
    report.tables["messages"] = _message_table(result, len(prepared), cfg)
    report.summary = {
        "instances": len(prepared),
        "profile_fetches": result.profile_requests,
        "model_fetches": result.model_requests,
    }
    write_report(report, args.out, figures=not args.no_figures)
    print(
        f"paired {len(result.decisions)} instances "
        f"({result.profile_requests} profile fetches) -> {args.out}"
    )
    return 0


def cmd_ensemble_eval(args) -> int:
    report = run_modpair_experiment(_load(args), _harness_config(args))
    write_report(report, args.out, figures=not args.no_figures)
    mean_local = report.summary["local_macro_f1"]["mean"]
    mean_ensemble = report.summary["ensemble_macro_f1"]["mean"]
    print(
        f"mean macro-F1 local {mean_local:.4f} vs ensemble {mean_ensemble:.4f} -> {args.out}"
    )
    return 0


def cmd_noise_exp(args) -> int:
    levels = tuple(float(x) for x in args.levels.split(",") if x)
    seeds = [args.seed + i for i in range(args.noise_seeds)]
    report = run_noise_experiment(
        _load(args),
        _harness_config(args),
        levels=levels,
        topic_mode=not args.no_topic,
        seeds=seeds,
    )
    write_report(report, args.out, figures=not args.no_figures)
    print(f"noise experiment over levels {levels} -> {args.out}")
    return 0


def cmd_budget_exp(args) -> int:
    grid = tuple(int(x) for x in args.grid.split(",") if x)
    modes = tuple(m for m in args.modes.split(",") if m)
    seeds = [args.seed + i for i in range(args.budget_seeds)]
    report = run_budget_experiment(
        _load(args), _harness_config(args), grid=grid, modes=modes, seeds=seeds
    )
    write_report(report, args.out, figures=not args.no_figures)
    print(f"budget experiment over {len(grid)} sizes -> {args.out}")
    return 0


def cmd_report(args) -> int:
    report_dir = args.report_dir or args.out
    from . import figures as fig_mod

    tables = {}
    for name in ("crossmatrix", "modpair", "pairing", "noise", "budget"):
        path = report_dir / f"{name}.csv"
        if path.exists():
            tables[name] = read_table(path)
    if not tables:
        print(f"no report CSVs found under {report_dir}", file=sys.stderr)
        return 1
    written = [] if args.no_figures else fig_mod.render_tables(tables, report_dir)
    print(f"rendered {len(written)} figure(s) from {sorted(tables)} in {report_dir}")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "train": cmd_train,
    "crossmatrix": cmd_crossmatrix,
    "pair": cmd_pair,
    "ensemble-eval": cmd_ensemble_eval,
    "noise-exp": cmd_noise_exp,
    "budget-exp": cmd_budget_exp,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ModPairError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
