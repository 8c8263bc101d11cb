import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modpair.classifier import LOGISTIC, LinearModel, TrainConfig, train
from modpair.corpus import NON_TOXIC, TOXIC
from modpair.ensemble import (
    TIE_LOCAL_FALLBACK,
    TIE_MEAN_SCORE,
    Ensemble,
    audit_record,
    evaluate,
    vote,
    vote_labels,
)
from modpair.errors import DomainError
from modpair.metrics import macro_f1
from modpair.textproc import Vocabulary, build_vocabulary

from conftest import make_toot


def constant_model(score):
    """Bias-only model that scores every toot at `score`."""
    vocab = Vocabulary(index={"unusedterm": 0}, document_frequency={"unusedterm": 1}, document_count=1)
    bias = math.log(score / (1 - score))
    return LinearModel(
        vocabulary=vocab,
        weights=np.zeros(1),
        bias=bias,
        trainer=LOGISTIC,
        train_config=TrainConfig(),
    )


TOOT = make_toot(text="whatever text")


class TestVote:
    def test_majority(self):
        ensemble = Ensemble(members=[constant_model(0.9), constant_model(0.8), constant_model(0.2)])
        result = vote(ensemble, TOOT)
        assert result.label == TOXIC
        assert result.member_labels == (TOXIC, TOXIC, NON_TOXIC)

    def test_single_member(self):
        ensemble = Ensemble(members=[constant_model(0.2)])
        assert vote(ensemble, TOOT).label == NON_TOXIC

    def test_even_split_mean_score(self):
        # scores 0.9 and 0.2: mean 0.55 > 0.5 -> toxic
        ensemble = Ensemble(members=[constant_model(0.9), constant_model(0.2)])
        result = vote(ensemble, TOOT)
        assert result.label == TOXIC
        assert result.member_scores == (
            pytest.approx(0.9, abs=1e-12),
            pytest.approx(0.2, abs=1e-12),
        )

    def test_even_split_mean_below_half(self):
        ensemble = Ensemble(members=[constant_model(0.6), constant_model(0.1)])
        assert vote(ensemble, TOOT).label == NON_TOXIC

    def test_even_split_local_fallback(self):
        ensemble = Ensemble(
            members=[constant_model(0.9), constant_model(0.2)],
            tie_rule=TIE_LOCAL_FALLBACK,
            local_model=constant_model(0.05),
        )
        assert vote(ensemble, TOOT).label == NON_TOXIC

    def test_validation(self):
        with pytest.raises(DomainError):
            Ensemble(members=[])
        with pytest.raises(DomainError):
            Ensemble(members=[constant_model(0.5)], tie_rule=TIE_LOCAL_FALLBACK)
        with pytest.raises(DomainError):
            Ensemble(members=[constant_model(0.5)], tie_rule="coin_flip")

    @given(order=st.permutations([0.9, 0.8, 0.2, 0.3, 0.7]))
    @settings(max_examples=30)
    def test_permutation_invariance(self, order):
        baseline = Ensemble(members=[constant_model(s) for s in [0.9, 0.8, 0.2, 0.3, 0.7]])
        shuffled = Ensemble(members=[constant_model(s) for s in order])
        assert vote(shuffled, TOOT).label == vote(baseline, TOOT).label

    def test_odd_member_count_never_consults_tie_rule(self):
        # mean_score would contradict the majority on purpose: if the tie rule
        # were consulted, these assertions would fail
        for scores in itertools.product([0.51, 0.01], repeat=3):
            ensemble = Ensemble(members=[constant_model(s) for s in scores])
            toxic_votes = sum(s > 0.5 for s in scores)
            majority = TOXIC if toxic_votes >= 2 else NON_TOXIC
            mean_says = TOXIC if sum(scores) / 3 > 0.5 else NON_TOXIC
            assert vote(ensemble, TOOT).label == majority
            if toxic_votes == 2:
                assert mean_says == NON_TOXIC  # the adversarial construction held

    def test_duplication_dominance(self):
        rng = random.Random(8)
        toots = [
            make_toot(id=str(i), text=" ".join(rng.choice(["bad", "nice", "meh"]) for _ in range(4)))
            for i in range(20)
        ]
        labeled = [
            make_toot(id=f"l{i}", text=t.text, label=TOXIC if i % 3 else NON_TOXIC)
            for i, t in enumerate(toots)
        ]
        vocab = build_vocabulary(labeled, min_df=1)
        model = train(labeled, vocab)
        solo = Ensemble(members=[model])
        trip = Ensemble(members=[model, model, model])
        for toot in toots:
            assert vote(solo, toot).label == vote(trip, toot).label


class TestEvaluate:
    def labeled_set(self):
        rng = random.Random(11)
        toots = []
        for i in range(60):
            toxic = rng.random() < 0.5
            words = ["bad"] * 2 if toxic else ["nice"] * 2
            words += [rng.choice(["filler", "words", "here"])]
            toots.append(
                make_toot(id=f"e{i}", text=" ".join(words), label=TOXIC if toxic else NON_TOXIC)
            )
        return toots

    def trained_model(self, toots):
        vocab = build_vocabulary(toots, min_df=1)
        return train(toots, vocab)

    def test_three_copies_equal_solo_macro_f1(self):
        toots = self.labeled_set()
        model = self.trained_model(toots)
        gold = [t.label for t in toots]
        solo = evaluate(Ensemble(members=[model]), toots).macro_f1
        trio = evaluate(Ensemble(members=[model] * 3), toots).macro_f1
        assert trio == solo

    def test_perfect_members(self):
        toots = self.labeled_set()
        model = self.trained_model(toots)
        result = evaluate(Ensemble(members=[model] * 3), toots)
        assert result.macro_f1 == 1.0

    def test_empty_test_set(self):
        with pytest.raises(DomainError):
            evaluate(Ensemble(members=[constant_model(0.6)]), [])

    def test_unlabeled_test_set(self):
        with pytest.raises(DomainError):
            evaluate(Ensemble(members=[constant_model(0.6)]), [make_toot()])

    def test_batch_path_matches_per_toot_vote(self):
        toots = self.labeled_set()
        members = [self.trained_model(toots[:40]), constant_model(0.55), constant_model(0.45)]
        ensemble = Ensemble(members=members)
        batch = vote_labels(ensemble, toots)
        single = [vote(ensemble, t).label for t in toots]
        assert batch == single

    def test_confusion_counts_present(self):
        toots = self.labeled_set()
        result = evaluate(Ensemble(members=[self.trained_model(toots)]), toots)
        total = sum(result.confusion[TOXIC][k] for k in ("tp", "fp", "fn", "tn"))
        assert total == len(toots)

    def test_evaluate_agrees_with_metrics(self):
        toots = self.labeled_set()
        ensemble = Ensemble(members=[constant_model(0.7)])
        gold = [t.label for t in toots]
        assert evaluate(ensemble, toots).macro_f1 == macro_f1([TOXIC] * len(toots), gold)


def test_audit_record_shape():
    ensemble = Ensemble(members=[constant_model(0.9), constant_model(0.1), constant_model(0.8)])
    record = audit_record(ensemble, TOOT)
    assert record["toot_id"] == TOOT.id
    assert record["label"] == TOXIC
    assert len(record["member_labels"]) == len(record["member_scores"]) == 3
