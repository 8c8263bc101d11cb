"""On-disk federation store: manifest + edges + one toot JSONL file per instance.

Layout under a store directory:

    manifest.jsonl      {"domain": ..., "registered_users": ...} per instance
    edges.jsonl         {"follower": "user@domain", "followee": "user@domain"}
    toots/<domain>.jsonl  the instance's full timeline (local then federated)

Everything is written in sorted/deterministic order so a store round-trips
byte-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import InstanceCorpus, LabelConfig, Toot, load_corpus
from .errors import SchemaError
from .fedsim import FederationGraph

MANIFEST_NAME = "manifest.jsonl"
EDGES_NAME = "edges.jsonl"
TOOTS_DIR = "toots"


def toot_to_record(toot: Toot) -> dict:
    record = {
        "id": toot.id,
        "origin_instance": toot.origin_instance,
        "author": toot.author,
        "text": toot.text,
        "timestamp": toot.timestamp,
        "content_warning": toot.content_warning,
        "reblog_count": toot.reblog_count,
    }
    if toot.toxicity_score is not None:
        # the score is the ground annotation; the label is re-derived under the
        # active threshold at load, so the store stays rethresholdable
        record["toxicity_score"] = toot.toxicity_score
    elif toot.label is not None:
        record["label"] = toot.label
    if toot.topic is not None:
        record["topic"] = toot.topic
    return record


def _dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_store(graph: FederationGraph, store_dir: str | Path) -> Path:
    store = Path(store_dir)
    (store / TOOTS_DIR).mkdir(parents=True, exist_ok=True)
    with (store / MANIFEST_NAME).open("w", encoding="utf-8") as fh:
        for domain in graph.domains():
            fh.write(
                _dump_line(
                    {
                        "domain": domain,
                        "registered_users": graph.registered_users[domain],
                        "users": graph.instances[domain].users,
                    }
                )
                + "\n"
            )
    with (store / EDGES_NAME).open("w", encoding="utf-8") as fh:
        for follower, followee in sorted(graph.follow_edges):
            fh.write(_dump_line({"follower": follower, "followee": followee}) + "\n")
    for domain in graph.domains():
        corpus = graph.instances[domain]
        with (store / TOOTS_DIR / f"{domain}.jsonl").open("w", encoding="utf-8") as fh:
            for toot in corpus.all_toots():
                fh.write(_dump_line(toot_to_record(toot)) + "\n")
    return store


def load_store(
    store_dir: str | Path, label_cfg: LabelConfig = LabelConfig()
) -> FederationGraph:
    store = Path(store_dir)
    manifest_path = store / MANIFEST_NAME
    if not manifest_path.exists():
        raise SchemaError(f"no {MANIFEST_NAME} under {store}")
    instances: dict[str, InstanceCorpus] = {}
    registered: dict[str, int] = {}
    with manifest_path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            domain = entry["domain"]
            toots_path = store / TOOTS_DIR / f"{domain}.jsonl"
            if toots_path.exists():
                corpus = load_corpus(toots_path, domain=domain, label_cfg=label_cfg)
            else:
                corpus = InstanceCorpus(domain=domain)
            if "users" in entry:
                # manifest users may include accounts that never tooted
                manifest_users = list(entry["users"])
                listed = set(manifest_users)
                corpus.users = manifest_users + [
                    u for u in corpus.users if u not in listed
                ]
                corpus.validate()
            registered[domain] = int(entry.get("registered_users", 1))
            corpus.registered_user_count = registered[domain]
            instances[domain] = corpus

    edges: set[tuple[str, str]] = set()
    edges_path = store / EDGES_NAME
    if edges_path.exists():
        with edges_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                edges.add((entry["follower"], entry["followee"]))
    return FederationGraph(
        instances=instances, follow_edges=edges, registered_users=registered
    )
