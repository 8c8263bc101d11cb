"""Toot data model, JSON Lines ingestion, labeling rules, splits, noise, budgets.

Corpora are treated as immutable after load: every operation here returns new
lists/objects and never mutates its inputs.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    BoundsError,
    DomainError,
    ParseError,
    SchemaError,
    StratificationError,
)

TOXIC = "toxic"
NON_TOXIC = "non-toxic"
LABELS = (TOXIC, NON_TOXIC)

_REQUIRED_KEYS = ("id", "origin_instance", "author", "text", "timestamp")


@dataclass(frozen=True)
class Toot:
    """One post, local or federated.

    `label` is the moderation call active for whoever holds this toot; after
    noise injection it may deliberately disagree with `toxicity_score`.
    Score/label consistency is enforced at ingestion only.
    """

    id: str
    origin_instance: str
    author: str
    text: str
    timestamp: float
    toxicity_score: float | None = None
    label: str | None = None
    content_warning: bool = False
    reblog_count: int = 0
    topic: str | None = None


@dataclass
class InstanceCorpus:
    """An instance's view of the Fediverse: its own toots plus imported ones."""

    domain: str
    local_toots: list[Toot] = field(default_factory=list)
    federated_toots: list[Toot] = field(default_factory=list)
    users: list[str] = field(default_factory=list)
    registered_user_count: int = 1
    follower_edges: list[tuple[str, str, str]] = field(default_factory=list)

    def all_toots(self) -> list[Toot]:
        """Local then federated toots, the full timeline the instance sees."""
        return self.local_toots + self.federated_toots

    def validate(self) -> None:
        for toot in self.local_toots:
            if toot.origin_instance != self.domain:
                raise SchemaError(
                    f"local toot {toot.id!r} originates at {toot.origin_instance!r}, "
                    f"not {self.domain!r}"
                )
        for toot in self.federated_toots:
            if toot.origin_instance == self.domain:
                raise SchemaError(f"federated toot {toot.id!r} originates locally")
        known = set(self.users)
        for toot in self.local_toots:
            if toot.author not in known:
                raise SchemaError(f"local author {toot.author!r} missing from users")
        if self.registered_user_count < 1:
            raise SchemaError("registered_user_count must be positive")


@dataclass(frozen=True)
class LabelConfig:
    """Toxicity threshold for turning scores into binary labels (0.5, or 0.8 strict)."""

    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise DomainError(f"threshold must lie in (0, 1), got {self.threshold}")


RANDOM_FLIP = "random_flip"
TOPIC_WHITELIST = "topic_whitelist"


@dataclass(frozen=True)
class NoiseConfig:
    """Annotation-noise scheme: uniform label flips or per-topic whitelisting.

    The replication grid uses flip fractions 0.05..0.25; any value in [0, 1]
    is accepted.
    """

    mode: str
    flip_fraction: float = 0.0
    topic: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (RANDOM_FLIP, TOPIC_WHITELIST):
            raise DomainError(f"unknown noise mode {self.mode!r}")
        if not 0.0 <= self.flip_fraction <= 1.0:
            raise DomainError(
                f"flip_fraction must lie in [0, 1], got {self.flip_fraction}"
            )
        if (self.topic is not None) != (self.mode == TOPIC_WHITELIST):
            raise DomainError("topic is required exactly when mode is topic_whitelist")


def label_from_score(score: float, cfg: LabelConfig = LabelConfig()) -> str:
    """Binary label for a toxicity score: toxic iff score > threshold (strict)."""
    if not 0.0 <= score <= 1.0:
        raise DomainError(f"toxicity score must lie in [0, 1], got {score}")
    return TOXIC if score > cfg.threshold else NON_TOXIC


def opposite_label(label: str) -> str:
    if label not in LABELS:
        raise DomainError(f"unknown label {label!r}")
    return NON_TOXIC if label == TOXIC else TOXIC


def user_toxicity(toots_of_user: list[Toot], cfg: LabelConfig | None = None) -> str:
    """A user is toxic iff the mean toxicity score of their toots exceeds 0.5."""
    if not toots_of_user:
        raise DomainError("user has no toots to average")
    scores = []
    for toot in toots_of_user:
        if toot.toxicity_score is None:
            raise DomainError(f"toot {toot.id!r} carries no toxicity score")
        scores.append(toot.toxicity_score)
    threshold = cfg.threshold if cfg is not None else 0.5
    return TOXIC if sum(scores) / len(scores) > threshold else NON_TOXIC


def _parse_record(raw: dict, line_no: int, label_cfg: LabelConfig) -> Toot:
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise SchemaError(f"line {line_no}: missing required field {key!r}")
    score = raw.get("toxicity_score")
    if score is not None:
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise SchemaError(
                f"line {line_no}: toxicity_score must lie in [0, 1], got {score!r}"
            )
        score = float(score)
    label = raw.get("label")
    if label is not None and label not in LABELS:
        raise SchemaError(f"line {line_no}: label must be one of {LABELS}, got {label!r}")
    if score is not None:
        derived = label_from_score(score, label_cfg)
        if label is None:
            label = derived
        elif label != derived:
            raise SchemaError(
                f"line {line_no}: label {label!r} contradicts toxicity_score {score} "
                f"under threshold {label_cfg.threshold}"
            )
    reblogs = raw.get("reblog_count", 0)
    if not isinstance(reblogs, int) or reblogs < 0:
        raise SchemaError(f"line {line_no}: reblog_count must be a nonnegative integer")
    return Toot(
        id=str(raw["id"]),
        origin_instance=str(raw["origin_instance"]),
        author=str(raw["author"]),
        text=str(raw["text"]),
        timestamp=float(raw["timestamp"]),
        toxicity_score=score,
        label=label,
        content_warning=bool(raw.get("content_warning", False)),
        reblog_count=reblogs,
        topic=raw.get("topic"),
    )


def load_corpus(
    path: str | Path,
    domain: str | None = None,
    label_cfg: LabelConfig = LabelConfig(),
) -> InstanceCorpus:
    """Load one instance's toots from a JSON Lines file.

    Records are partitioned into local/federated by comparing origin_instance
    against `domain`; when `domain` is omitted it is inferred as the most
    frequent origin (ties broken lexicographically). Records with empty text
    are filtered out. Labels are derived from scores under `label_cfg` when
    absent, and checked against them when present.
    """
    path = Path(path)
    toots: list[Toot] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(raw, dict):
                raise ParseError(f"line {line_no}: expected a JSON object")
            toot = _parse_record(raw, line_no, label_cfg)
            if not toot.text.strip():
                continue
            toots.append(toot)

    if domain is None:
        counts = Counter(t.origin_instance for t in toots)
        domain = min(counts, key=lambda d: (-counts[d], d)) if counts else ""

    local = [t for t in toots if t.origin_instance == domain]
    federated = [t for t in toots if t.origin_instance != domain]
    users: list[str] = []
    seen = set()
    for toot in local:
        if toot.author not in seen:
            seen.add(toot.author)
            users.append(toot.author)
    corpus = InstanceCorpus(
        domain=domain,
        local_toots=local,
        federated_toots=federated,
        users=users,
        registered_user_count=max(1, len(users)),
    )
    corpus.validate()
    return corpus


def _as_toots(corpus_or_toots) -> list[Toot]:
    if isinstance(corpus_or_toots, InstanceCorpus):
        return corpus_or_toots.all_toots()
    return list(corpus_or_toots)


def split_train_test(
    corpus: InstanceCorpus | list[Toot],
    ratio: float = 0.8,
    seed: int = 0,
) -> tuple[list[Toot], list[Toot]]:
    """Label-stratified split; per-class train counts within one toot of ratio * size.

    Deterministic for a given seed. Both output sides keep the input order.
    """
    toots = _as_toots(corpus)
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"split ratio must lie in (0, 1), got {ratio}")
    by_label: dict[str, list[int]] = {label: [] for label in LABELS}
    for pos, toot in enumerate(toots):
        if toot.label is None:
            raise DomainError(f"toot {toot.id!r} is unlabeled; label the corpus first")
        by_label[toot.label].append(pos)
    for label in LABELS:
        if len(by_label[label]) < 2:
            raise StratificationError(
                f"class {label!r} has {len(by_label[label])} members; need at least 2"
            )
    rng = random.Random(seed)
    train_pos: set[int] = set()
    for label in LABELS:
        positions = list(by_label[label])
        rng.shuffle(positions)
        n_train = round(ratio * len(positions))
        n_train = min(max(n_train, 1), len(positions) - 1)
        train_pos.update(positions[:n_train])
    train = [toots[i] for i in range(len(toots)) if i in train_pos]
    test = [toots[i] for i in range(len(toots)) if i not in train_pos]
    return train, test


def inject_noise(toots: list[Toot], cfg: NoiseConfig) -> list[Toot]:
    """Emulate inconsistent admin annotations.

    random_flip: flip exactly round(flip_fraction * N) labels, indices drawn
    uniformly without replacement from the seed (label-independent, so the
    same config applied twice restores the input). topic_whitelist: relabel
    every toot tagged with the topic as non-toxic, touch nothing else.
    """
    toots = list(toots)
    for toot in toots:
        if toot.label is None:
            raise DomainError(f"toot {toot.id!r} is unlabeled")
    if cfg.mode == TOPIC_WHITELIST:
        return [
            replace(t, label=NON_TOXIC) if t.topic == cfg.topic else t for t in toots
        ]
    n_flip = round(cfg.flip_fraction * len(toots))
    if n_flip == 0:
        return toots
    rng = random.Random(cfg.seed)
    flip_at = set(rng.sample(range(len(toots)), n_flip))
    return [
        replace(t, label=opposite_label(t.label)) if i in flip_at else t
        for i, t in enumerate(toots)
    ]


SAMPLE_FIRST = "first"
SAMPLE_RANDOM = "random"


def sample_budget(
    corpus: InstanceCorpus | list[Toot],
    n: int,
    mode: str = SAMPLE_FIRST,
    seed: int = 0,
) -> list[Toot]:
    """Annotation-budget subset: the n earliest toots, or n uniform random ones.

    "first" orders by timestamp with ties broken by toot id; "random" draws
    without replacement from the seed.
    """
    toots = _as_toots(corpus)
    if n < 1:
        raise DomainError(f"budget must be positive, got {n}")
    if n > len(toots):
        raise BoundsError(f"budget {n} exceeds the {len(toots)} available toots")
    if mode == SAMPLE_FIRST:
        return sorted(toots, key=lambda t: (t.timestamp, t.id))[:n]
    if mode == SAMPLE_RANDOM:
        rng = random.Random(seed)
        return rng.sample(toots, n)
    raise DomainError(f"unknown budget mode {mode!r}")
