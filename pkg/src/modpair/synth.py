"""Synthetic federation generator: topic-clustered instances with follow graphs.

Instances in the same cluster share a topic vocabulary and a cluster-specific
slice of toxic vocabulary (on top of a shared toxic core), and follow each
other more densely than across clusters. A small label-noise rate makes the
labeling imperfect by construction, so locally trained models differ in their
idiosyncratic errors and ensembling has something to average out.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .corpus import InstanceCorpus, LabelConfig, Toot, label_from_score
from .errors import DomainError
from .fedsim import FederationGraph, propagate
from .seeding import make_rng

_BASE_TIMESTAMP = 1_600_000_000.0

COMMON_WORDS = [f"plain{i:02d}" for i in range(40)]
SHARED_TOXIC_WORDS = [f"slur{i:02d}" for i in range(25)]


@dataclass(frozen=True)
class SynthConfig:
    instances: int = 12
    clusters: int = 3
    toots_per_instance: int = 2000
    users_per_instance: int = 20
    intra_follow_prob: float = 0.05
    inter_follow_prob: float = 0.005
    toxic_fraction: float = 0.3
    label_noise: float = 0.07
    hard_negative_rate: float = 0.20
    # topic tags skew non-toxic: an instance's favourite topic contributes only
    # a small slice of its toxic content, so whitelisting it stays a bounded,
    # coherent label change
    topic_tag_rate_toxic: float = 0.08
    topic_tag_rate_clean: float = 0.45
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.instances < 2:
            raise DomainError("need at least two instances")
        if not 1 <= self.clusters <= self.instances:
            raise DomainError("clusters must lie in [1, instances]")
        if self.toots_per_instance < 10:
            raise DomainError("need at least 10 toots per instance")


def cluster_of(domain: str) -> int:
    """Cluster id encoded in synthetic domain names (iNN-cC.fed.test)."""
    return int(domain.split("-c", 1)[1].split(".", 1)[0])


def _domain(index: int, cluster: int) -> str:
    return f"i{index:02d}-c{cluster}.fed.test"


@lru_cache(maxsize=None)
def _topic_words(cluster: int) -> tuple[str, ...]:
    return tuple(f"t{cluster}w{i:02d}" for i in range(80))


@lru_cache(maxsize=None)
def _cluster_toxic_words(cluster: int) -> tuple[str, ...]:
    return tuple(f"c{cluster}slur{i:02d}" for i in range(15))


@lru_cache(maxsize=None)
def _rare_words(cluster: int, toxic_leaning: bool) -> tuple[str, ...]:
    # long tail of low-frequency terms, each leaning toxic or clean; they are
    # informative but observed only a handful of times each, which is where
    # label noise actually bites
    half = "tox" if toxic_leaning else "cln"
    return tuple(f"r{cluster}{half}{i:04d}" for i in range(2000))


def _make_text(rng, cluster: int, toxic: bool, on_topic: bool, hard_negative: bool) -> str:
    words = []
    topic_pool = _topic_words(cluster)
    words += [rng.choice(topic_pool) for _ in range(rng.randint(4, 7))]
    words += [rng.choice(COMMON_WORDS) for _ in range(rng.randint(3, 6))]
    for _ in range(rng.randint(3, 6)):
        leaning = toxic if rng.random() < 0.85 else not toxic
        words.append(rng.choice(_rare_words(cluster, leaning)))
    if toxic and rng.random() < 0.7:
        cluster_pool = _cluster_toxic_words(cluster)
        # on-topic toxicity leans on the cluster's own toxic vocabulary, which
        # is what a topic whitelist coherently redefines
        own_weight = 0.95 if on_topic else 0.05
        for _ in range(rng.randint(1, 3)):
            pool = cluster_pool if rng.random() < own_weight else SHARED_TOXIC_WORDS
            words.append(rng.choice(pool))
    elif not toxic and hard_negative:
        words.append(rng.choice(SHARED_TOXIC_WORDS))
    rng.shuffle(words)
    return " ".join(words)


def generate_federation(cfg: SynthConfig) -> FederationGraph:
    """Build the full graph: users, follow edges, local toots, then propagate."""
    label_cfg = LabelConfig(threshold=cfg.threshold)
    domains = [_domain(i, i % cfg.clusters) for i in range(cfg.instances)]
    users = {
        d: [f"u{j:02d}" for j in range(cfg.users_per_instance)] for d in domains
    }

    edge_rng = make_rng(cfg.seed, "edges")
    edges: set[tuple[str, str]] = set()
    for a in domains:
        for b in domains:
            if a == b:
                continue
            prob = (
                cfg.intra_follow_prob
                if cluster_of(a) == cluster_of(b)
                else cfg.inter_follow_prob
            )
            for ua in users[a]:
                for ub in users[b]:
                    if edge_rng.random() < prob:
                        edges.add((f"{ua}@{a}", f"{ub}@{b}"))

    corpora: dict[str, InstanceCorpus] = {}
    for d in domains:
        rng = make_rng(cfg.seed, "toots", d)
        cluster = cluster_of(d)
        local: list[Toot] = []
        for seq in range(cfg.toots_per_instance):
            toxic_content = rng.random() < cfg.toxic_fraction
            tag_rate = (
                cfg.topic_tag_rate_toxic if toxic_content else cfg.topic_tag_rate_clean
            )
            on_topic = rng.random() < tag_rate
            hard_negative = (not toxic_content) and rng.random() < cfg.hard_negative_rate
            text = _make_text(rng, cluster, toxic_content, on_topic, hard_negative)
            toxic_label = toxic_content ^ (rng.random() < cfg.label_noise)
            score = 0.55 + 0.42 * rng.random() if toxic_label else 0.03 + 0.42 * rng.random()
            local.append(
                Toot(
                    id=f"{d}/{seq:06d}",
                    origin_instance=d,
                    author=rng.choice(users[d]),
                    text=text,
                    timestamp=_BASE_TIMESTAMP + seq * 60.0,
                    toxicity_score=round(score, 6),
                    label=label_from_score(round(score, 6), label_cfg),
                    content_warning=rng.random() < 0.05,
                    reblog_count=rng.randrange(4) if toxic_label else rng.randrange(2),
                    topic=f"topic-c{cluster}" if on_topic else "general",
                )
            )
        corpora[d] = InstanceCorpus(
            domain=d,
            local_toots=local,
            users=list(users[d]),
            registered_user_count=cfg.users_per_instance,
        )

    graph = FederationGraph(
        instances=corpora,
        follow_edges=edges,
        registered_users={d: cfg.users_per_instance for d in domains},
    )
    for d in domains:
        for toot in corpora[d].local_toots:
            propagate(graph, toot)
    return graph
