import time

import pytest

from modpair.corpus import NON_TOXIC, TOXIC, InstanceCorpus, Toot
from modpair.experiments import HarnessConfig, run_modpair_experiment
from modpair.synth import SynthConfig, generate_federation


def make_toot(
    id="t0",
    origin="a.example",
    author="alice",
    text="hello world",
    timestamp=0.0,
    score=None,
    label=None,
    topic=None,
    content_warning=False,
    reblog_count=0,
):
    return Toot(
        id=id,
        origin_instance=origin,
        author=author,
        text=text,
        timestamp=timestamp,
        toxicity_score=score,
        label=label,
        content_warning=content_warning,
        reblog_count=reblog_count,
        topic=topic,
    )


def labeled_toots(labels, origin="a.example", texts=None, topics=None):
    """One toot per label, ids t0..tN in order."""
    toots = []
    for i, label in enumerate(labels):
        toots.append(
            make_toot(
                id=f"t{i}",
                origin=origin,
                text=texts[i] if texts else f"word{i} filler text",
                timestamp=float(i),
                label=label,
                topic=topics[i] if topics else None,
            )
        )
    return toots


def corpus_from_texts(domain, texts, labels=None, authors=None):
    toots = []
    for i, text in enumerate(texts):
        toots.append(
            make_toot(
                id=f"{domain}/{i}",
                origin=domain,
                author=authors[i] if authors else "alice",
                text=text,
                timestamp=float(i),
                label=labels[i] if labels else None,
            )
        )
    users = sorted({t.author for t in toots}) or ["alice"]
    return InstanceCorpus(domain=domain, local_toots=toots, users=users)


@pytest.fixture
def tiny_corpus():
    return corpus_from_texts("a.example", ["cat cat", "cat dog", "dog"])


TOXIC_LABEL = TOXIC
CLEAN_LABEL = NON_TOXIC

# The reference synthetic federation shared by the structural and acceptance
# tests: 12 instances in 3 topic clusters, 2K local toots each, one seed.
REFERENCE_SEED = 42


@pytest.fixture(scope="session")
def reference_federation():
    start = time.perf_counter()
    graph = generate_federation(
        SynthConfig(
            instances=12, clusters=3, toots_per_instance=2000, seed=REFERENCE_SEED
        )
    )
    return graph, time.perf_counter() - start


@pytest.fixture(scope="session")
def reference_modpair_report(reference_federation):
    graph, build_seconds = reference_federation
    start = time.perf_counter()
    report = run_modpair_experiment(graph, HarnessConfig(seed=REFERENCE_SEED))
    return report, build_seconds + (time.perf_counter() - start)
