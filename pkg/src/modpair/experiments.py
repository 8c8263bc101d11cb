"""Experiment drivers: cross-instance transfer, pairing + ensembles, noise, budgets.

Every driver is a pure function of (graph, config): all randomness flows
through seeds derived from the config seed plus stable labels, so rerunning a
driver reproduces its report bit for bit. Wall time and memory are recorded
separately under summary["runtime"] and never enter the tables.
"""

from __future__ import annotations

import math
import resource
import time
import dataclasses
from dataclasses import dataclass, field
from statistics import median
from typing import Sequence

import numpy as np

from .classifier import LinearModel, TrainConfig, predict_labels, train
from .corpus import (
    NON_TOXIC,
    RANDOM_FLIP,
    SAMPLE_FIRST,
    SAMPLE_RANDOM,
    TOPIC_WHITELIST,
    TOXIC,
    NoiseConfig,
    Toot,
    inject_noise,
    sample_budget,
    split_train_test,
)
from .ensemble import TIE_MEAN_SCORE, Ensemble, evaluate
from .errors import DegenerateTrainingError, DomainError, StratificationError
from .fedsim import (
    FederationGraph,
    FediverseSim,
    expected_model_fetches,
    expected_profile_fetches,
    fetch_round,
)
from .metrics import macro_f1
from .pairing import PairingConfig, precision_at_k
from .seeding import derive_seed
from .textproc import DEFAULT_MIN_DF, build_vocabulary, tfidf_profile

BUDGET_GRID = tuple(range(500, 10001, 500))
NOISE_GRID = (0.05, 0.10, 0.15, 0.20, 0.25)


@dataclass(frozen=True)
class HarnessConfig:
    """Shared experiment knobs; one snapshot of this goes into every report."""

    seed: int = 0
    trainer: str = "logistic"
    train_ratio: float = 0.8
    min_df: int = DEFAULT_MIN_DF
    k: int = 3
    presample_f: int | None = None
    rate_limit: float = 10.0
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def snapshot(self) -> dict:
        return {
            "seed": self.seed,
            "trainer": self.trainer,
            "train_ratio": self.train_ratio,
            "min_df": self.min_df,
            "k": self.k,
            "presample_f": self.presample_f,
            "rate_limit": self.rate_limit,
            "learning_rate": self.train_config.learning_rate,
            "epochs": self.train_config.epochs,
            "l2_lambda": self.train_config.l2_lambda,
            "convergence_tol": self.train_config.convergence_tol,
        }


@dataclass
class ExperimentReport:
    """Named tables (CSV-bound) plus a summary dict (JSON-bound)."""

    name: str
    seed: int
    config: dict
    tables: dict[str, list[dict]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


class _Runtime:
    """Collects wall time and a peak-RSS estimate for summary["runtime"]."""

    def __init__(self):
        self.start = time.perf_counter()

    def finish(self) -> dict:
        return {
            "wall_time_s": round(time.perf_counter() - self.start, 3),
            "peak_rss_kb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss,
        }


def _dispersion(values: Sequence[float]) -> dict:
    if not values:
        return {"mean": None, "median": None, "min": None, "max": None}
    return {
        "mean": float(np.mean(values)),
        "median": float(np.median(values)),
        "min": float(min(values)),
        "max": float(max(values)),
    }


@dataclass
class PreparedInstance:
    """One instance readied for experiments: split, vocab, local model, profile."""

    domain: str
    train: list[Toot]
    test: list[Toot]
    vocab: object
    model: LinearModel | None
    profile: object
    error: str | None = None


def split_seed(base_seed: int) -> int:
    """One split seed for every instance: identical corpora split identically."""
    return derive_seed(base_seed, "split")


def prepare_federation(
    graph: FederationGraph, cfg: HarnessConfig
) -> dict[str, PreparedInstance]:
    """Split, train and profile every instance.

    Per-instance failures (unsplittable or untrainable corpora) are recorded on
    the PreparedInstance instead of aborting the whole federation.
    """
    prepared: dict[str, PreparedInstance] = {}
    for domain in graph.domains():
        corpus = graph.instances[domain]
        profile_vocab = build_vocabulary(corpus.all_toots(), min_df=cfg.min_df)
        profile = tfidf_profile(corpus, profile_vocab)
        train_set: list[Toot] = []
        test_set: list[Toot] = []
        vocab = build_vocabulary([], min_df=cfg.min_df)
        model = None
        error = None
        try:
            train_set, test_set = split_train_test(
                corpus, ratio=cfg.train_ratio, seed=split_seed(cfg.seed)
            )
            vocab = build_vocabulary(train_set, min_df=cfg.min_df)
            model = train(
                train_set, vocab, cfg.trainer, cfg.train_config, origin_instance=domain
            )
        except (StratificationError, DegenerateTrainingError, DomainError) as exc:
            error = str(exc)
        prepared[domain] = PreparedInstance(
            domain=domain,
            train=train_set,
            test=test_set,
            vocab=vocab,
            model=model,
            profile=profile,
            error=error,
        )
    return prepared


@dataclass
class CrossMatrix:
    """scores[i, j] = macro-F1 of the model trained on domains[i], tested on j."""

    domains: list[str]
    scores: np.ndarray

    def score(self, trained_on: str, tested_on: str) -> float:
        return float(
            self.scores[self.domains.index(trained_on), self.domains.index(tested_on)]
        )

    def to_table(self) -> list[dict]:
        rows = []
        for i, trained_on in enumerate(self.domains):
            for j, tested_on in enumerate(self.domains):
                value = self.scores[i, j]
                rows.append(
                    {
                        "trained_on": trained_on,
                        "tested_on": tested_on,
                        "macro_f1": None if math.isnan(value) else float(value),
                    }
                )
        return rows


def _cross_matrix(prepared: dict[str, PreparedInstance]) -> CrossMatrix:
    domains = sorted(prepared)
    scores = np.full((len(domains), len(domains)), np.nan)
    for i, trained_on in enumerate(domains):
        model = prepared[trained_on].model
        if model is None:
            continue
        for j, tested_on in enumerate(domains):
            test_set = prepared[tested_on].test
            if not test_set:
                continue
            gold = [t.label for t in test_set]
            scores[i, j] = macro_f1(predict_labels(model, test_set), gold)
    return CrossMatrix(domains=domains, scores=scores)


def run_cross_matrix(graph: FederationGraph, cfg: HarnessConfig) -> ExperimentReport:
    runtime = _Runtime()
    prepared = prepare_federation(graph, cfg)
    matrix = _cross_matrix(prepared)
    report = ExperimentReport(name="crossmatrix", seed=cfg.seed, config=cfg.snapshot())
    report.tables["crossmatrix"] = matrix.to_table()
    diagonal = [
        matrix.score(d, d) for d in matrix.domains if not math.isnan(matrix.score(d, d))
    ]
    report.summary = {
        "instances": len(matrix.domains),
        "failed_instances": [d for d in matrix.domains if prepared[d].model is None],
        "self_test_macro_f1": _dispersion(diagonal),
        "runtime": runtime.finish(),
    }
    return report


def oracle_ranking(
    matrix: CrossMatrix, instance: str, pool: Sequence[str]
) -> list[str]:
    """Peers ordered by their model's true macro-F1 on `instance`'s test split."""
    j = matrix.domains.index(instance)

    def true_score(peer: str) -> float:
        value = matrix.scores[matrix.domains.index(peer), j]
        return -math.inf if math.isnan(value) else float(value)

    return sorted(
        (p for p in pool if p != instance), key=lambda p: (-true_score(p), p)
    )


def _pairing_table(decisions: dict) -> list[dict]:
    rows = []
    for instance in sorted(decisions):
        decision = decisions[instance]
        selected = set(decision.selected)
        for rank, (peer, similarity) in enumerate(decision.ranking, start=1):
            rows.append(
                {
                    "instance": instance,
                    "rank": rank,
                    "peer": peer,
                    "similarity": similarity,
                    "selected": peer in selected,
                    "pool": decision.pool_kind,
                }
            )
    return rows


def _message_table(result, n_instances: int, cfg: HarnessConfig) -> list[dict]:
    pool = cfg.presample_f
    return [
        {
            "metric": "profile_fetches",
            "count": result.profile_requests,
            "expected": expected_profile_fetches(n_instances, pool),
        },
        {
            "metric": "model_fetches",
            "count": result.model_requests,
            "expected": expected_model_fetches(n_instances, cfg.k),
        },
    ]


def run_modpair_experiment(
    graph: FederationGraph, cfg: HarnessConfig
) -> ExperimentReport:
    """Full pipeline: profiles, pairing, model exchange, ensembles, P@k vs oracle."""
    runtime = _Runtime()
    prepared = prepare_federation(graph, cfg)
    matrix = _cross_matrix(prepared)
    domains = sorted(prepared)

    sim = FediverseSim(graph)
    for domain in domains:
        sim.publish_profile(domain, prepared[domain].profile)
        if prepared[domain].model is not None:
            sim.publish_model(domain, prepared[domain].model)
    pairing_cfg = PairingConfig(k=cfg.k, presample_f=cfg.presample_f)
    round_result = fetch_round(sim, pairing_cfg, rate_limit=cfg.rate_limit)

    rows = []
    full_pool = domains
    for domain in domains:
        inst = prepared[domain]
        if inst.model is None:
            continue
        decision = round_result.decisions[domain]
        gold = [t.label for t in inst.test]
        local_f1 = macro_f1(predict_labels(inst.model, inst.test), gold)
        members = [round_result.models[domain][p] for p in decision.selected]
        ensemble_f1 = None
        if members:
            ensemble_f1 = evaluate(
                Ensemble(members=members, tie_rule=TIE_MEAN_SCORE), inst.test
            ).macro_f1
        pool = (
            list(decision.presampled_pool)
            if decision.presampled_pool is not None
            else [d for d in full_pool if d != domain]
        )
        oracle_pool = oracle_ranking(matrix, domain, pool)
        oracle_full = oracle_ranking(matrix, domain, full_pool)
        k = len(decision.selected)
        row = {
            "instance": domain,
            "local_macro_f1": local_f1,
            "ensemble_macro_f1": ensemble_f1,
            "selected": ";".join(decision.selected),
            "pool": decision.pool_kind,
            "p_at_1": precision_at_k(decision.selected, oracle_pool, 1) if k >= 1 else None,
            "p_at_3": precision_at_k(decision.selected, oracle_pool, 3) if k >= 3 else None,
            "p_at_1_fullpool": precision_at_k(decision.selected, oracle_full, 1)
            if k >= 1
            else None,
            "p_at_3_fullpool": precision_at_k(decision.selected, oracle_full, 3)
            if k >= 3
            else None,
        }
        rows.append(row)

    report = ExperimentReport(name="modpair", seed=cfg.seed, config=cfg.snapshot())
    report.tables["modpair"] = rows
    report.tables["pairing"] = _pairing_table(round_result.decisions)
    report.tables["crossmatrix"] = matrix.to_table()
    report.tables["messages"] = _message_table(round_result, len(domains), cfg)

    local_scores = [r["local_macro_f1"] for r in rows]
    ensemble_scores = [r["ensemble_macro_f1"] for r in rows if r["ensemble_macro_f1"] is not None]
    report.summary = {
        "instances": len(domains),
        "local_macro_f1": _dispersion(local_scores),
        "ensemble_macro_f1": _dispersion(ensemble_scores),
        "p_at_1": _dispersion([r["p_at_1"] for r in rows if r["p_at_1"] is not None]),
        "p_at_3": _dispersion([r["p_at_3"] for r in rows if r["p_at_3"] is not None]),
        "profile_fetches": round_result.profile_requests,
        "model_fetches": round_result.model_requests,
        "skipped": len(round_result.skipped),
        "runtime": runtime.finish(),
    }
    return report


def _instance_top_topic(train_set: Sequence[Toot]) -> str | None:
    """Most frequent topic tag excluding the catch-all general bucket."""
    counts: dict[str, int] = {}
    for toot in train_set:
        if toot.topic and toot.topic != "general":
            counts[toot.topic] = counts.get(toot.topic, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda topic: (-counts[topic], topic))


MATCHED_RANDOM = "matched_random"


def run_noise_experiment(
    graph: FederationGraph,
    cfg: HarnessConfig,
    levels: Sequence[float] = NOISE_GRID,
    topic_mode: bool = True,
    seeds: Sequence[int] | None = None,
) -> ExperimentReport:
    """Local vs ensemble degradation under flipped labels and topic whitelists.

    For every seed: train the clean baselines, pair instances (pairing depends
    only on content, not labels), then retrain each instance at every noise
    level and rebuild each ensemble from its selected peers' noisy models.
    matched_random rows flip exactly as many labels as that instance's topic
    whitelist did, supporting a volume-matched comparison.
    """
    runtime = _Runtime()
    seeds = list(seeds) if seeds is not None else [cfg.seed]
    rows: list[dict] = []
    for seed in seeds:
        seed_cfg = dataclasses.replace(cfg, seed=seed)
        prepared = prepare_federation(graph, seed_cfg)
        domains = sorted(prepared)
        sim = FediverseSim(graph)
        for domain in domains:
            sim.publish_profile(domain, prepared[domain].profile)
            if prepared[domain].model is not None:
                sim.publish_model(domain, prepared[domain].model)
        round_result = fetch_round(
            sim, PairingConfig(k=cfg.k, presample_f=cfg.presample_f), cfg.rate_limit
        )

        clean_local: dict[str, float] = {}
        gold: dict[str, list[str]] = {}
        for domain in domains:
            inst = prepared[domain]
            if inst.model is None:
                continue
            gold[domain] = [t.label for t in inst.test]
            clean_local[domain] = macro_f1(
                predict_labels(inst.model, inst.test), gold[domain]
            )

        def ensemble_f1(domain: str, models_by_domain: dict[str, LinearModel]) -> float | None:
            decision = round_result.decisions[domain]
            members = [
                models_by_domain[p] for p in decision.selected if p in models_by_domain
            ]
            if not members:
                return None
            return evaluate(
                Ensemble(members=members, tie_rule=TIE_MEAN_SCORE),
                prepared[domain].test,
            ).macro_f1

        clean_models = {
            d: prepared[d].model for d in domains if prepared[d].model is not None
        }
        clean_ensemble = {d: ensemble_f1(d, clean_models) for d in clean_local}

        def train_noisy(domain: str, noise_cfg: NoiseConfig) -> tuple[LinearModel, int]:
            inst = prepared[domain]
            noisy_train = inject_noise(inst.train, noise_cfg)
            flips = sum(
                1 for a, b in zip(inst.train, noisy_train) if a.label != b.label
            )
            vocab = build_vocabulary(noisy_train, min_df=cfg.min_df)
            model = train(
                noisy_train, vocab, cfg.trainer, cfg.train_config, origin_instance=domain
            )
            return model, flips

        def add_rows(mode: str, level_label, noisy_models, flips_by_domain):
            noisy_ensemble = {d: ensemble_f1(d, noisy_models) for d in clean_local}
            for domain in sorted(clean_local):
                noisy_local_f1 = macro_f1(
                    predict_labels(noisy_models[domain], prepared[domain].test),
                    gold[domain],
                )
                row = {
                    "seed": seed,
                    "mode": mode,
                    "level": level_label,
                    "instance": domain,
                    "flips": flips_by_domain[domain],
                    "clean_local_macro_f1": clean_local[domain],
                    "noisy_local_macro_f1": noisy_local_f1,
                    "local_degradation": _degradation(clean_local[domain], noisy_local_f1),
                    "clean_ensemble_macro_f1": clean_ensemble[domain],
                    "noisy_ensemble_macro_f1": noisy_ensemble[domain],
                    "ensemble_degradation": _degradation(
                        clean_ensemble[domain], noisy_ensemble[domain]
                    ),
                }
                rows.append(row)

        for level in levels:
            noisy_models = {}
            flips_by_domain = {}
            for domain in sorted(clean_local):
                noise_cfg = NoiseConfig(
                    mode=RANDOM_FLIP,
                    flip_fraction=level,
                    seed=derive_seed(seed, "flip", level, domain),
                )
                noisy_models[domain], flips_by_domain[domain] = train_noisy(
                    domain, noise_cfg
                )
            add_rows(RANDOM_FLIP, level, noisy_models, flips_by_domain)

        if topic_mode:
            topic_models = {}
            topic_flips = {}
            for domain in sorted(clean_local):
                topic = _instance_top_topic(prepared[domain].train)
                if topic is None:
                    raise DomainError(
                        f"{domain} has no topic tags; topic mode needs tagged corpora"
                    )
                noise_cfg = NoiseConfig(mode=TOPIC_WHITELIST, topic=topic)
                topic_models[domain], topic_flips[domain] = train_noisy(
                    domain, noise_cfg
                )
            add_rows(TOPIC_WHITELIST, "topic", topic_models, topic_flips)

            matched_models = {}
            matched_flips = {}
            for domain in sorted(clean_local):
                n_train = len(prepared[domain].train)
                fraction = topic_flips[domain] / n_train if n_train else 0.0
                noise_cfg = NoiseConfig(
                    mode=RANDOM_FLIP,
                    flip_fraction=fraction,
                    seed=derive_seed(seed, "matched", domain),
                )
                matched_models[domain], matched_flips[domain] = train_noisy(
                    domain, noise_cfg
                )
            add_rows(MATCHED_RANDOM, "topic", matched_models, matched_flips)

    report = ExperimentReport(name="noise", seed=cfg.seed, config=cfg.snapshot())
    report.tables["noise"] = rows
    report.summary = {
        "seeds": seeds,
        "levels": list(levels),
        "modes": _noise_mode_summary(rows),
        "runtime": runtime.finish(),
    }
    return report


def _degradation(clean: float | None, noisy: float | None) -> float | None:
    """Relative macro-F1 loss (clean - noisy) / clean."""
    if clean is None or noisy is None or clean == 0.0:
        return None
    return (clean - noisy) / clean


def _noise_mode_summary(rows: list[dict]) -> dict:
    summary: dict = {}
    keys = sorted({(r["mode"], str(r["level"])) for r in rows})
    for mode, level in keys:
        subset = [r for r in rows if r["mode"] == mode and str(r["level"]) == level]
        per_seed_local = {}
        per_seed_ensemble = {}
        for row in subset:
            per_seed_local.setdefault(row["seed"], []).append(row["local_degradation"])
            if row["ensemble_degradation"] is not None:
                per_seed_ensemble.setdefault(row["seed"], []).append(
                    row["ensemble_degradation"]
                )
        local_means = [float(np.mean(v)) for v in per_seed_local.values()]
        ensemble_means = [float(np.mean(v)) for v in per_seed_ensemble.values() if v]
        summary[f"{mode}@{level}"] = {
            "local_degradation_seed_median": median(local_means) if local_means else None,
            "ensemble_degradation_seed_median": median(ensemble_means)
            if ensemble_means
            else None,
        }
    return summary


def run_budget_experiment(
    graph: FederationGraph,
    cfg: HarnessConfig,
    grid: Sequence[int] = BUDGET_GRID,
    modes: Sequence[str] = (SAMPLE_FIRST, SAMPLE_RANDOM),
    seeds: Sequence[int] | None = None,
) -> ExperimentReport:
    """Macro-F1 versus annotation budget n, sampled from each train split.

    Budgets larger than an instance's train pool are clipped and flagged; at
    n == pool size either mode trains on exactly the standard split, so the
    curve's endpoint reproduces the 80:20 baseline.
    """
    runtime = _Runtime()
    seeds = list(seeds) if seeds is not None else [cfg.seed]
    for mode in modes:
        if mode not in (SAMPLE_FIRST, SAMPLE_RANDOM):
            raise DomainError(f"unknown budget mode {mode!r}")
    rows: list[dict] = []
    baselines: list[dict] = []
    for seed in seeds:
        seed_cfg = dataclasses.replace(cfg, seed=seed)
        prepared = prepare_federation(graph, seed_cfg)
        for domain in sorted(prepared):
            inst = prepared[domain]
            if inst.model is None:
                continue
            gold = [t.label for t in inst.test]
            baselines.append(
                {
                    "seed": seed,
                    "instance": domain,
                    "train_pool": len(inst.train),
                    "macro_f1": macro_f1(predict_labels(inst.model, inst.test), gold),
                }
            )
            for mode in modes:
                for n in grid:
                    n_used = min(n, len(inst.train))
                    subset = sample_budget(
                        inst.train,
                        n_used,
                        mode=mode,
                        seed=derive_seed(seed, "budget", mode, n, domain),
                    )
                    vocab = build_vocabulary(subset, min_df=cfg.min_df)
                    try:
                        model = train(
                            subset,
                            vocab,
                            cfg.trainer,
                            cfg.train_config,
                            origin_instance=domain,
                        )
                        f1 = macro_f1(predict_labels(model, inst.test), gold)
                        error = None
                    except DegenerateTrainingError as exc:
                        f1 = None
                        error = str(exc)
                    rows.append(
                        {
                            "seed": seed,
                            "instance": domain,
                            "mode": mode,
                            "n_requested": n,
                            "n_used": n_used,
                            "clipped": n_used < n,
                            "macro_f1": f1,
                            "error": error,
                        }
                    )

    report = ExperimentReport(name="budget", seed=cfg.seed, config=cfg.snapshot())
    report.tables["budget"] = rows
    report.tables["budget_baseline"] = baselines
    report.summary = {
        "seeds": seeds,
        "grid": list(grid),
        "modes": list(modes),
        "clipped_cells": sum(1 for r in rows if r["clipped"]),
        "runtime": runtime.finish(),
    }
    return report


