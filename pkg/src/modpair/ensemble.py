"""Majority-vote ensembles over retrieved peer models.

Each member applies its own vocabulary and its own strict 0.5 label rule; the
ensemble label is the strict majority. Ties (possible only with an even member
count) are settled by the configured tie rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifier import LinearModel, predict_label, predict_score, predict_scores
from .corpus import NON_TOXIC, TOXIC, Toot
from .errors import DomainError
from .metrics import EvaluationResult, evaluate_predictions

TIE_LOCAL_FALLBACK = "local_fallback"
TIE_MEAN_SCORE = "mean_score"


@dataclass
class Ensemble:
    members: list[LinearModel]
    tie_rule: str = TIE_MEAN_SCORE
    local_model: LinearModel | None = None

    def __post_init__(self):
        if not self.members:
            raise DomainError("ensemble needs at least one member")
        if self.tie_rule not in (TIE_LOCAL_FALLBACK, TIE_MEAN_SCORE):
            raise DomainError(f"unknown tie rule {self.tie_rule!r}")
        if self.tie_rule == TIE_LOCAL_FALLBACK and self.local_model is None:
            raise DomainError("local_fallback tie rule requires a local model")


@dataclass(frozen=True)
class VoteResult:
    label: str
    member_labels: tuple[str, ...]
    member_scores: tuple[float, ...]


def vote(ensemble: Ensemble, toot: Toot) -> VoteResult:
    """Strict-majority label; the tie rule is consulted only on exact ties."""
    scores = tuple(predict_score(m, toot) for m in ensemble.members)
    labels = tuple(TOXIC if s > 0.5 else NON_TOXIC for s in scores)
    toxic_votes = sum(1 for label in labels if label == TOXIC)
    non_toxic_votes = len(labels) - toxic_votes
    if toxic_votes > non_toxic_votes:
        final = TOXIC
    elif non_toxic_votes > toxic_votes:
        final = NON_TOXIC
    elif ensemble.tie_rule == TIE_LOCAL_FALLBACK:
        final = predict_label(ensemble.local_model, toot)
    else:
        final = TOXIC if sum(scores) / len(scores) > 0.5 else NON_TOXIC
    return VoteResult(label=final, member_labels=labels, member_scores=scores)


def audit_record(ensemble: Ensemble, toot: Toot) -> dict:
    """Per-toot transparency record of how the moderation decision was reached."""
    result = vote(ensemble, toot)
    return {
        "toot_id": toot.id,
        "member_labels": list(result.member_labels),
        "member_scores": list(result.member_scores),
        "label": result.label,
    }


def vote_labels(ensemble: Ensemble, toots: Sequence[Toot]) -> list[str]:
    """Batch path equivalent to vote(); used by evaluate for speed."""
    score_rows = np.vstack([predict_scores(m, toots) for m in ensemble.members])
    toxic_votes = (score_rows > 0.5).sum(axis=0)
    n_members = len(ensemble.members)
    labels = []
    for col, toot in enumerate(toots):
        votes = int(toxic_votes[col])
        if votes * 2 > n_members:
            labels.append(TOXIC)
        elif votes * 2 < n_members:
            labels.append(NON_TOXIC)
        elif ensemble.tie_rule == TIE_LOCAL_FALLBACK:
            labels.append(predict_label(ensemble.local_model, toot))
        else:
            mean = float(score_rows[:, col].mean())
            labels.append(TOXIC if mean > 0.5 else NON_TOXIC)
    return labels


def evaluate(ensemble: Ensemble, test_set: Sequence[Toot]) -> EvaluationResult:
    """Macro-F1 and per-class confusion of the ensemble on a labeled test set."""
    if not test_set:
        raise DomainError("empty test set")
    gold = []
    for toot in test_set:
        if toot.label is None:
            raise DomainError(f"toot {toot.id!r} is unlabeled")
        gold.append(toot.label)
    return evaluate_predictions(vote_labels(ensemble, test_set), gold)
