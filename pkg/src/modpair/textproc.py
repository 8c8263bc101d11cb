"""Tokenization, vocabularies, bag-of-words, instance tf-idf profiles, cosine.

The instance profile treats the whole timeline (local + federated toots) as a
single document: tf(t) is the total occurrence count of t across all toots,
df(t) the number of toots containing t, and

    idf(t) = ln((1 + n) / (1 + df(t))) + 1

with n the instance's toot count, so idf >= 1 always.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from .corpus import InstanceCorpus, Toot
from .errors import DegenerateInputError, SchemaError

DEFAULT_MIN_DF = 2

_TAG_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@[\w.\-]+")
_WORD_RE = re.compile(r"\w+")


@lru_cache(maxsize=1 << 18)
def tokenize(text: str) -> tuple[str, ...]:
    """Lowercased unicode word tokens; HTML tags, URLs and @-mentions stripped.

    Tokens shorter than two characters are dropped. Stop words are kept (they
    only ever disappear through min_df).
    """
    cleaned = _TAG_RE.sub(" ", text)
    cleaned = _URL_RE.sub(" ", cleaned)
    cleaned = _MENTION_RE.sub(" ", cleaned)
    return tuple(t for t in _WORD_RE.findall(cleaned.lower()) if len(t) >= 2)


@dataclass(frozen=True)
class Vocabulary:
    """Term -> dense index mapping plus per-term document frequencies.

    Indices are assigned in sorted-term order, which is also the canonical
    serialization order.
    """

    index: dict[str, int]
    document_frequency: dict[str, int]
    document_count: int

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def __len__(self) -> int:
        return len(self.index)

    @property
    def terms(self) -> list[str]:
        """Terms in index order."""
        ordered = [""] * len(self.index)
        for term, idx in self.index.items():
            ordered[idx] = term
        return ordered


def build_vocabulary(toots: list[Toot], min_df: int = DEFAULT_MIN_DF) -> Vocabulary:
    """Vocabulary of terms appearing in at least min_df distinct toots.

    df counts containing toots, not occurrences; n is the toot count.
    """
    df: Counter[str] = Counter()
    for toot in toots:
        df.update(set(tokenize(toot.text)))
    kept = sorted(term for term, count in df.items() if count >= min_df)
    return Vocabulary(
        index={term: i for i, term in enumerate(kept)},
        document_frequency={term: df[term] for term in kept},
        document_count=len(toots),
    )


def bow_vector(toot: Toot, vocab: Vocabulary) -> dict[str, int]:
    """Raw occurrence counts of in-vocabulary terms; everything else dropped."""
    counts = Counter(tokenize(toot.text))
    return {term: count for term, count in counts.items() if term in vocab.index}


def idf(term: str, vocab: Vocabulary) -> float:
    """Smoothed inverse document frequency; >= 1 because df(t) <= n."""
    if term not in vocab.index:
        raise KeyError(term)
    n = vocab.document_count
    return math.log((1 + n) / (1 + vocab.document_frequency[term])) + 1.0


@dataclass(frozen=True)
class TfIdfProfile:
    """The exchanged content summary: one term -> tf*idf weight vector per instance."""

    instance: str
    weights: dict[str, float]
    toot_count: int
    version: int = 1
    created_at: float = 0.0


def tfidf_profile(corpus: InstanceCorpus, vocab: Vocabulary) -> TfIdfProfile:
    """Instance profile over its full timeline (local + federated toots).

    Weights are keyed by term string so profiles from different instances are
    directly comparable.
    """
    tf: Counter[str] = Counter()
    toots = corpus.all_toots()
    for toot in toots:
        for term in tokenize(toot.text):
            if term in vocab.index:
                tf[term] += 1
    weights = {term: count * idf(term, vocab) for term, count in tf.items()}
    return TfIdfProfile(instance=corpus.domain, weights=weights, toot_count=len(toots))


def _dot(a: dict[str, float], b: dict[str, float]) -> float:
    # summed in sorted-term order so the result is exactly symmetric in (a, b)
    if len(a) > len(b):
        a, b = b, a
    return sum(a[term] * b[term] for term in sorted(a) if term in b)


def cosine_similarity(a: TfIdfProfile, b: TfIdfProfile) -> float:
    """Cosine over the union of term keys; nonnegative weights keep it in [0, 1]."""
    norm_a = math.sqrt(_dot(a.weights, a.weights))
    norm_b = math.sqrt(_dot(b.weights, b.weights))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateInputError(
            f"zero-norm profile for {a.instance if norm_a == 0.0 else b.instance!r}"
        )
    value = _dot(a.weights, b.weights) / (norm_a * norm_b)
    return min(1.0, max(0.0, value))


PROFILE_FORMAT = "tfidf-profile"
PROFILE_FORMAT_VERSION = 1


def profile_to_bytes(profile: TfIdfProfile) -> bytes:
    """Canonical serialized form: terms sorted, keys sorted, UTF-8, no whitespace."""
    record = {
        "format": PROFILE_FORMAT,
        "format_version": PROFILE_FORMAT_VERSION,
        "instance": profile.instance,
        "toot_count": profile.toot_count,
        "version": profile.version,
        "created_at": profile.created_at,
        "weights": {term: float(w) for term, w in sorted(profile.weights.items())},
    }
    return json.dumps(
        record, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def profile_from_bytes(data: bytes) -> TfIdfProfile:
    record = json.loads(data.decode("utf-8"))
    if record.get("format") != PROFILE_FORMAT:
        raise SchemaError(f"not a serialized profile: format={record.get('format')!r}")
    return TfIdfProfile(
        instance=record["instance"],
        weights=dict(record["weights"]),
        toot_count=record["toot_count"],
        version=record["version"],
        created_at=record["created_at"],
    )
