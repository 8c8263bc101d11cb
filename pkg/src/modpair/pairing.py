"""Peer selection: rank candidate instances by profile similarity, keep top-k.

Ranking is by LARGEST cosine similarity (similar content predicts transferable
models); ties break lexicographically by domain so every ranking is
deterministic. Pre-sampling bounds protocol traffic by restricting candidates
to the f peers sharing the most follower edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .errors import DomainError, GraphError, PoolTooSmallError
from .textproc import TfIdfProfile, cosine_similarity

if TYPE_CHECKING:
    from .fedsim import FederationGraph


@dataclass(frozen=True)
class PairingConfig:
    """k models to retrieve; presample_f restricts candidates when set."""

    k: int = 3
    presample_f: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"k must be positive, got {self.k}")
        if self.presample_f is not None:
            if self.presample_f < 1:
                raise DomainError(f"presample_f must be positive, got {self.presample_f}")
            if self.k > self.presample_f:
                raise DomainError(
                    f"k={self.k} cannot exceed the presampled pool size f={self.presample_f}"
                )


DEFAULT_PRESAMPLE_F = 5


@dataclass(frozen=True)
class PairingDecision:
    """One instance's ranked peers and the top-k it will retrieve models from."""

    instance: str
    ranking: tuple[tuple[str, float], ...]
    selected: tuple[str, ...]
    presampled_pool: tuple[str, ...] | None = None
    pool_short: bool = False

    @property
    def pool_kind(self) -> str:
        return "full" if self.presampled_pool is None else "presampled"


def rank_peers(
    own: TfIdfProfile, candidates: Sequence[TfIdfProfile]
) -> list[tuple[str, float]]:
    """Candidates sorted by similarity to `own`, descending; ties by domain."""
    for candidate in candidates:
        if candidate.instance == own.instance:
            raise DomainError(
                f"candidate pool contains the instance itself ({own.instance!r})"
            )
    scored = [(c.instance, cosine_similarity(own, c)) for c in candidates]
    return sorted(scored, key=lambda pair: (-pair[1], pair[0]))


def select_top_k(
    ranking: Sequence[tuple[str, float]], cfg: PairingConfig
) -> list[str]:
    """The first k ranked peers."""
    if len(ranking) < cfg.k:
        raise PoolTooSmallError(
            f"need {cfg.k} peers but only {len(ranking)} are ranked"
        )
    return [domain for domain, _ in ranking[: cfg.k]]


def pair_instance(
    own: TfIdfProfile,
    candidates: Sequence[TfIdfProfile],
    cfg: PairingConfig,
    presampled_pool: Sequence[str] | None = None,
) -> PairingDecision:
    """Full decision record for one instance: ranking, selection, pool provenance."""
    ranking = rank_peers(own, candidates)
    selected = select_top_k(ranking, cfg)
    pool_short = (
        presampled_pool is not None
        and cfg.presample_f is not None
        and len(presampled_pool) < cfg.presample_f
    )
    return PairingDecision(
        instance=own.instance,
        ranking=tuple(ranking),
        selected=tuple(selected),
        presampled_pool=tuple(presampled_pool) if presampled_pool is not None else None,
        pool_short=pool_short,
    )


def shared_follower_count(graph: "FederationGraph", a: str, b: str) -> int:
    """Follower edges between the two instances, counted in both directions."""
    count = 0
    for follower, followee in graph.follow_edges:
        da = follower.rsplit("@", 1)[1]
        db = followee.rsplit("@", 1)[1]
        if {da, db} == {a, b}:
            count += 1
    return count


def presample(graph: "FederationGraph", instance: str, f: int) -> list[str]:
    """The f peers with the most shared follower edges; all peers if fewer exist.

    Ties break lexicographically. Callers flag short pools on their decision
    records (the pool is simply returned here).
    """
    if f < 1:
        raise DomainError(f"presample size must be positive, got {f}")
    domains = graph.domains()
    if instance not in domains:
        raise GraphError(f"unknown instance {instance!r}")
    counts: dict[str, int] = {d: 0 for d in domains if d != instance}
    for follower, followee in sorted(graph.follow_edges):
        da = follower.rsplit("@", 1)[1]
        db = followee.rsplit("@", 1)[1]
        if da == instance and db != instance:
            counts[db] += 1
        elif db == instance and da != instance:
            counts[da] += 1
    ranked = sorted(counts, key=lambda d: (-counts[d], d))
    return ranked[:f]


def precision_at_k(
    selected: Sequence[str], oracle_ranking: Sequence[str], k: int
) -> float:
    """Fraction of the top-k selections that appear in the oracle's top-k."""
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if len(selected) < k or len(oracle_ranking) < k:
        raise DomainError(
            f"need at least {k} entries in both rankings "
            f"(got {len(selected)} selected, {len(oracle_ranking)} oracle)"
        )
    return len(set(selected[:k]) & set(oracle_ranking[:k])) / k
