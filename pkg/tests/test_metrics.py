import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modpair.corpus import NON_TOXIC, TOXIC
from modpair.errors import DomainError
from modpair.metrics import (
    cohens_kappa,
    confusion_counts,
    evaluate_predictions,
    macro_f1,
)

T, N = TOXIC, NON_TOXIC


class TestMacroF1:
    def test_all_correct(self):
        gold = [T, N, T, N]
        assert macro_f1(gold, gold) == 1.0

    def test_majority_class_only(self):
        gold = [T, T, N, N]
        predictions = [N, N, N, N]
        # hand F1: toxic 0 (no predicted positives), non-toxic 2*(0.5*1)/(1.5)
        expected = (0.0 + 2 * (0.5 * 1.0) / 1.5) / 2
        assert macro_f1(predictions, gold) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(1 / 3, abs=1e-12)

    def test_complement_predictions(self):
        gold = [T, T, N, N]
        predictions = [N, N, T, T]
        assert macro_f1(predictions, gold) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            macro_f1([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(DomainError):
            macro_f1([T], [T, N])

    @given(
        pairs=st.lists(
            st.tuples(st.sampled_from([T, N]), st.sampled_from([T, N])),
            min_size=1,
            max_size=50,
        )
    )
    def test_symmetric_under_class_relabeling(self, pairs):
        predictions = [p for p, _ in pairs]
        gold = [g for _, g in pairs]
        swap = {T: N, N: T}
        swapped = macro_f1([swap[p] for p in predictions], [swap[g] for g in gold])
        assert macro_f1(predictions, gold) == pytest.approx(swapped, abs=1e-12)


class TestConfusionCounts:
    def test_counts(self):
        gold = [T, T, N, N, N]
        predictions = [T, N, T, N, N]
        table = confusion_counts(predictions, gold)
        assert table[T] == {"tp": 1, "fp": 1, "fn": 1, "tn": 2}
        assert table[N] == {"tp": 2, "fp": 1, "fn": 1, "tn": 1}

    def test_evaluate_predictions_bundles_both(self):
        gold = [T, N]
        result = evaluate_predictions(gold, gold)
        assert result.macro_f1 == 1.0
        assert result.confusion[T]["tp"] == 1


class TestCohensKappa:
    def test_identical_with_both_classes(self):
        labels = [T, N, T, N, N]
        assert cohens_kappa(labels, labels) == 1.0

    def test_exact_complements_balanced(self):
        a = [T, T, N, N]
        b = [N, N, T, T]
        # hand evaluation: p_o = 0, p_e = 0.5 -> (0 - 0.5) / 0.5 = -1
        assert cohens_kappa(a, b) == pytest.approx(-1.0, abs=1e-12)

    def test_independent_uniform_labels_near_zero(self):
        rng = random.Random(123)
        a = [rng.choice([T, N]) for _ in range(10_000)]
        b = [rng.choice([T, N]) for _ in range(10_000)]
        assert abs(cohens_kappa(a, b)) < 0.05

    def test_degenerate_constant_agreement(self):
        with pytest.warns(UserWarning):
            assert cohens_kappa([T, T], [T, T]) == 0.0

    def test_constant_but_different_raters(self):
        assert cohens_kappa([T, T], [N, N]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            cohens_kappa([T], [])
