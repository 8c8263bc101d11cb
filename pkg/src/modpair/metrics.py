"""Classification agreement metrics used across the harness.

Zero-denominator convention: a precision or recall with no predicted/actual
positives contributes an F1 of 0, so a class absent from both gold and
predictions still pulls the macro average down.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

from .corpus import LABELS
from .errors import DomainError


def confusion_counts(
    predictions: Sequence[str], gold: Sequence[str]
) -> dict[str, dict[str, int]]:
    """TP/FP/FN/TN per class, treating each class in turn as the positive one."""
    if len(predictions) != len(gold):
        raise DomainError(
            f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold"
        )
    if not gold:
        raise DomainError("empty evaluation set")
    table = {}
    for positive in LABELS:
        tp = fp = fn = tn = 0
        for pred, actual in zip(predictions, gold):
            if pred == positive and actual == positive:
                tp += 1
            elif pred == positive:
                fp += 1
            elif actual == positive:
                fn += 1
            else:
                tn += 1
        table[positive] = {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
    return table


def _f1(counts: dict[str, int]) -> float:
    tp, fp, fn = counts["tp"], counts["fp"], counts["fn"]
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def macro_f1(predictions: Sequence[str], gold: Sequence[str]) -> float:
    """Unweighted mean of per-class F1 over both binary classes."""
    table = confusion_counts(predictions, gold)
    return sum(_f1(table[label]) for label in LABELS) / len(LABELS)


@dataclass(frozen=True)
class EvaluationResult:
    macro_f1: float
    confusion: dict[str, dict[str, int]]


def evaluate_predictions(
    predictions: Sequence[str], gold: Sequence[str]
) -> EvaluationResult:
    table = confusion_counts(predictions, gold)
    f1 = sum(_f1(table[label]) for label in LABELS) / len(LABELS)
    return EvaluationResult(macro_f1=f1, confusion=table)


def cohens_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    When expected agreement is exactly 1 (both raters constant and equal) the
    statistic is undefined; 0.0 is returned with a warning.
    """
    if len(labels_a) != len(labels_b):
        raise DomainError(
            f"length mismatch: {len(labels_a)} vs {len(labels_b)} labels"
        )
    n = len(labels_a)
    if n == 0:
        raise DomainError("empty label sequences")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    expected = 0.0
    for label in LABELS:
        pa = sum(1 for a in labels_a if a == label) / n
        pb = sum(1 for b in labels_b if b == label) / n
        expected += pa * pb
    if expected == 1.0:
        warnings.warn("expected agreement is 1; Cohen's kappa degenerate, returning 0")
        return 0.0
    return (observed - expected) / (1.0 - expected)
