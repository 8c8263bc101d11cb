"""Simulated Fediverse: follower graph, toot propagation, reach, wire protocol.

The protocol runs as in-process message passing carrying the exact bytes a
network transport would (see transport for the optional HTTP adapter). All
protocol effects are applied in sorted-domain order under a simulated clock,
so a whole round is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .classifier import LinearModel, model_from_bytes, model_to_bytes
from .corpus import InstanceCorpus, Toot
from .errors import DomainError, GraphError, PeerUnavailableError
from .pairing import PairingConfig, PairingDecision, presample, rank_peers
from .textproc import TfIdfProfile, profile_from_bytes, profile_to_bytes

ONE_WEEK = 604800.0


def _handle_domain(handle: str) -> str:
    if "@" not in handle:
        raise GraphError(f"malformed user handle {handle!r} (want user@domain)")
    return handle.rsplit("@", 1)[1]


@dataclass
class FederationGraph:
    """Instances plus the user-level follow edges that drive federation."""

    instances: dict[str, InstanceCorpus]
    follow_edges: set[tuple[str, str]] = field(default_factory=set)
    registered_users: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for domain, corpus in self.instances.items():
            if corpus.domain != domain:
                raise GraphError(f"corpus for {domain!r} claims domain {corpus.domain!r}")
        for follower, followee in self.follow_edges:
            if follower == followee:
                raise GraphError(f"self-follow edge {follower!r}")
            for endpoint in (follower, followee):
                if _handle_domain(endpoint) not in self.instances:
                    raise GraphError(f"edge endpoint {endpoint!r} on unknown instance")
        for domain, corpus in self.instances.items():
            self.registered_users.setdefault(domain, corpus.registered_user_count)
            if self.registered_users[domain] < 1:
                raise GraphError(f"registered_users for {domain!r} must be positive")
        self._followers_of: dict[str, list[str]] = {}
        for follower, followee in sorted(self.follow_edges):
            self._followers_of.setdefault(followee, []).append(follower)
        self._federated_ids: dict[str, set[str]] = {
            domain: {t.id for t in corpus.federated_toots}
            for domain, corpus in self.instances.items()
        }

    def domains(self) -> list[str]:
        return sorted(self.instances)

    def followers_of(self, handle: str) -> list[str]:
        return self._followers_of.get(handle, [])


def propagate(graph: FederationGraph, toot: Toot) -> set[str]:
    """Replicate a toot to every instance hosting a follower of its author.

    Returns the replication set (origin excluded). Idempotent per
    (toot, instance): re-propagating never duplicates a federated copy.
    """
    origin = toot.origin_instance
    if origin not in graph.instances:
        raise GraphError(f"unknown origin instance {origin!r}")
    if toot.author not in graph.instances[origin].users:
        raise GraphError(f"unknown author {toot.author!r} on {origin!r}")
    handle = f"{toot.author}@{origin}"
    targets = {
        _handle_domain(follower) for follower in graph.followers_of(handle)
    } - {origin}
    for domain in sorted(targets):
        seen = graph._federated_ids[domain]
        if toot.id not in seen:
            graph.instances[domain].federated_toots.append(toot)
            seen.add(toot.id)
    return targets


def reach(graph: FederationGraph, toot: Toot) -> tuple[int, int]:
    """(instances reached, registered users reached) for a propagated toot."""
    origin = toot.origin_instance
    if origin not in graph.instances:
        raise GraphError(f"unknown origin instance {origin!r}")
    replicated = {
        domain
        for domain, ids in graph._federated_ids.items()
        if toot.id in ids and domain != origin
    }
    instances_reached = 1 + len(replicated)
    users_reached = graph.registered_users[origin] + sum(
        graph.registered_users[d] for d in replicated
    )
    return instances_reached, users_reached


@dataclass
class SimClock:
    """Simulated seconds; profiles refresh once per period by default."""

    now: float = 0.0
    refresh_period: float = ONE_WEEK

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise DomainError(f"clock cannot move backwards (dt={dt})")
        self.now += dt


PROFILE_REQUEST = "profile_request"
PROFILE_RESPONSE = "profile_response"
MODEL_REQUEST = "model_request"
MODEL_RESPONSE = "model_response"


@dataclass(frozen=True)
class ProtocolMessage:
    kind: str
    sender: str
    recipient: str
    payload: bytes
    sent_at: float


class FediverseSim:
    """Deterministic event loop over the graph: publish, serve, fetch rounds.

    Served payloads are the canonical bytes stored at publish time, so two
    requests without a republish in between return identical bytes, and
    versions only ever increase.
    """

    def __init__(self, graph: FederationGraph, clock: SimClock | None = None):
        self.graph = graph
        self.clock = clock if clock is not None else SimClock()
        self.message_log: list[ProtocolMessage] = []
        self._profiles: dict[str, tuple[bytes, int]] = {}
        self._models: dict[str, tuple[bytes, int]] = {}
        self._offline: set[str] = set()
        # (owner, peer) -> version of the peer model the owner already holds
        self._model_cache: dict[tuple[str, str], tuple[bytes, int]] = {}

    def set_offline(self, domain: str, offline: bool = True) -> None:
        if offline:
            self._offline.add(domain)
        else:
            self._offline.discard(domain)

    def publish_profile(self, domain: str, profile: TfIdfProfile) -> int:
        version = self._profiles.get(domain, (b"", 0))[1] + 1
        stamped = replace(profile, version=version, created_at=self.clock.now)
        self._profiles[domain] = (profile_to_bytes(stamped), version)
        return version

    def publish_model(self, domain: str, model: LinearModel) -> int:
        version = self._models.get(domain, (b"", 0))[1] + 1
        self._models[domain] = (model_to_bytes(model), version)
        return version

    def profile_version(self, domain: str) -> int:
        return self._profiles.get(domain, (b"", 0))[1]

    def model_version(self, domain: str) -> int:
        return self._models.get(domain, (b"", 0))[1]

    def serve_profile(self, domain: str) -> bytes:
        if domain in self._offline:
            raise PeerUnavailableError(f"{domain} is offline")
        if domain not in self._profiles:
            raise PeerUnavailableError(f"{domain} has not published a profile yet")
        return self._profiles[domain][0]

    def serve_model(self, domain: str) -> bytes:
        if domain in self._offline:
            raise PeerUnavailableError(f"{domain} is offline")
        if domain not in self._models:
            raise PeerUnavailableError(f"{domain} has not published a model yet")
        return self._models[domain][0]


@dataclass
class FetchRoundResult:
    decisions: dict[str, PairingDecision]
    models: dict[str, dict[str, LinearModel]]
    profile_requests: int
    model_requests: int
    skipped: list[tuple[str, str, str]]
    clamped: list[str]


def expected_profile_fetches(n_instances: int, pool_size: int | None = None) -> int:
    """Closed-form message count: N * min(pool, N-1) profile fetches per round."""
    pool = n_instances - 1 if pool_size is None else min(pool_size, n_instances - 1)
    return n_instances * pool


def expected_model_fetches(n_instances: int, k: int) -> int:
    return n_instances * k


def fetch_round(
    sim: FediverseSim,
    cfg: PairingConfig,
    rate_limit: float = 10.0,
) -> FetchRoundResult:
    """One full protocol round: every instance fetches profiles, pairs, fetches models.

    Each instance's requests are spaced 1/rate_limit apart on the simulated
    clock (instances proceed in parallel). Unavailable peers are skipped and
    logged; when that leaves fewer than k ranked peers the selection is
    clamped to what exists and the instance recorded in `clamped`. Peer models
    already cached at their current version are not refetched.
    """
    if rate_limit <= 0:
        raise DomainError(f"rate limit must be positive, got {rate_limit}")
    graph = sim.graph
    start = sim.clock.now
    spacing = 1.0 / rate_limit
    decisions: dict[str, PairingDecision] = {}
    models: dict[str, dict[str, LinearModel]] = {}
    skipped: list[tuple[str, str, str]] = []
    clamped: list[str] = []
    profile_requests = 0
    model_requests = 0
    last_sent = start

    for instance in graph.domains():
        try:
            own = profile_from_bytes(sim.serve_profile(instance))
        except PeerUnavailableError:
            skipped.append((instance, instance, "own-profile"))
            continue
        if cfg.presample_f is not None:
            pool = presample(graph, instance, cfg.presample_f)
        else:
            pool = [d for d in graph.domains() if d != instance]

        sent = 0
        candidates: list[TfIdfProfile] = []
        for peer in pool:
            sent_at = start + sent * spacing
            sent += 1
            profile_requests += 1
            last_sent = max(last_sent, sent_at)
            sim.message_log.append(
                ProtocolMessage(PROFILE_REQUEST, instance, peer, b"", sent_at)
            )
            try:
                payload = sim.serve_profile(peer)
            except PeerUnavailableError:
                skipped.append((instance, peer, "profile"))
                continue
            sim.message_log.append(
                ProtocolMessage(PROFILE_RESPONSE, peer, instance, payload, sent_at)
            )
            candidates.append(profile_from_bytes(payload))

        ranking = rank_peers(own, candidates)
        k_eff = min(cfg.k, len(ranking))
        if k_eff < cfg.k:
            clamped.append(instance)
        selected = tuple(domain for domain, _ in ranking[:k_eff])
        decisions[instance] = PairingDecision(
            instance=instance,
            ranking=tuple(ranking),
            selected=selected,
            presampled_pool=tuple(pool) if cfg.presample_f is not None else None,
            pool_short=cfg.presample_f is not None and len(pool) < cfg.presample_f,
        )

        fetched: dict[str, LinearModel] = {}
        for peer in selected:
            current = sim.model_version(peer)
            cached = sim._model_cache.get((instance, peer))
            if cached is not None and current > 0 and cached[1] == current:
                fetched[peer] = model_from_bytes(cached[0])
                continue
            sent_at = start + sent * spacing
            sent += 1
            model_requests += 1
            last_sent = max(last_sent, sent_at)
            sim.message_log.append(
                ProtocolMessage(MODEL_REQUEST, instance, peer, b"", sent_at)
            )
            try:
                payload = sim.serve_model(peer)
            except PeerUnavailableError:
                skipped.append((instance, peer, "model"))
                continue
            sim.message_log.append(
                ProtocolMessage(MODEL_RESPONSE, peer, instance, payload, sent_at)
            )
            sim._model_cache[(instance, peer)] = (payload, current)
            fetched[peer] = model_from_bytes(payload)
        models[instance] = fetched

    sim.clock.advance(last_sent - start)
    return FetchRoundResult(
        decisions=decisions,
        models=models,
        profile_requests=profile_requests,
        model_requests=model_requests,
        skipped=skipped,
        clamped=clamped,
    )
