import math
import random

import numpy as np
import pytest

from modpair.classifier import (
    HINGE,
    LOGISTIC,
    LinearModel,
    TrainConfig,
    decision_value,
    featurize,
    loss_and_gradient,
    model_from_bytes,
    model_to_bytes,
    models_equal,
    predict_label,
    predict_labels,
    predict_score,
    train,
)
from modpair.corpus import NON_TOXIC, TOXIC
from modpair.errors import DegenerateTrainingError, SchemaError
from modpair.textproc import Vocabulary, build_vocabulary

from conftest import make_toot


def toy_vocab(terms, document_count=4):
    terms = sorted(terms)
    return Vocabulary(
        index={t: i for i, t in enumerate(terms)},
        document_frequency={t: 1 for t in terms},
        document_count=document_count,
    )


def separable_set(copies=10):
    toots = []
    for i in range(copies):
        toots.append(make_toot(id=f"p{i}", text="bad bad", label=TOXIC))
        toots.append(make_toot(id=f"n{i}", text="nice nice", label=NON_TOXIC))
    return toots


def zero_model(vocab, trainer=LOGISTIC, l2=0.0):
    return LinearModel(
        vocabulary=vocab,
        weights=np.zeros(len(vocab)),
        bias=0.0,
        trainer=trainer,
        train_config=TrainConfig(l2_lambda=l2),
    )


class TestLossAndGradient:
    def test_zero_model_balanced_batch_gives_ln2(self):
        vocab = toy_vocab(["bad", "nice"])
        batch = [
            make_toot(id="1", text="bad", label=TOXIC),
            make_toot(id="2", text="nice", label=NON_TOXIC),
        ]
        loss, _, _ = loss_and_gradient(zero_model(vocab), batch)
        assert loss == pytest.approx(math.log(2), abs=1e-12)

    def test_empty_feature_batch_gradient_only_bias(self):
        vocab = toy_vocab(["bad", "nice"])
        batch = [make_toot(id="1", text="unknownterm", label=TOXIC)]
        loss, grad_w, grad_b = loss_and_gradient(zero_model(vocab), batch)
        assert np.all(grad_w == 0.0)
        assert grad_b != 0.0

    def test_empty_batch_rejected(self):
        with pytest.raises(DegenerateTrainingError):
            loss_and_gradient(zero_model(toy_vocab(["bad"])), [])


def random_model_and_batch(rng, trainer):
    terms = sorted(f"w{i}" for i in range(rng.randint(4, 9)))
    vocab = toy_vocab(terms, document_count=8)
    toots = []
    for i in range(rng.randint(3, 8)):
        words = [rng.choice(terms) for _ in range(rng.randint(1, 6))]
        toots.append(
            make_toot(
                id=f"b{i}",
                text=" ".join(words),
                label=rng.choice([TOXIC, NON_TOXIC]),
            )
        )
    model = LinearModel(
        vocabulary=vocab,
        weights=np.array([rng.uniform(-1, 1) for _ in terms]),
        bias=rng.uniform(-1, 1),
        trainer=trainer,
        train_config=TrainConfig(l2_lambda=1e-3),
    )
    return model, toots


def min_kink_gap(model, toots):
    """Distance of every hinge margin from the non-differentiable point."""
    X = featurize(toots, model.vocabulary)
    z = X @ model.weights + model.bias
    signs = np.array([1.0 if t.label == TOXIC else -1.0 for t in toots])
    return float(np.min(np.abs(1.0 - signs * z)))


def finite_difference_check(model, toots, step=1e-5):
    loss, grad_w, grad_b = loss_and_gradient(model, toots)

    def loss_at(weights, bias):
        probe = LinearModel(
            vocabulary=model.vocabulary,
            weights=weights,
            bias=bias,
            trainer=model.trainer,
            train_config=model.train_config,
        )
        return loss_and_gradient(probe, toots)[0]

    worst = 0.0
    for i in range(len(model.weights)):
        bump = np.zeros_like(model.weights)
        bump[i] = step
        fd = (
            loss_at(model.weights + bump, model.bias)
            - loss_at(model.weights - bump, model.bias)
        ) / (2 * step)
        worst = max(worst, abs(grad_w[i] - fd) / max(abs(fd), abs(grad_w[i]), 1e-6))
    fd_bias = (
        loss_at(model.weights, model.bias + step)
        - loss_at(model.weights, model.bias - step)
    ) / (2 * step)
    worst = max(worst, abs(grad_b - fd_bias) / max(abs(fd_bias), abs(grad_b), 1e-6))
    return worst


@pytest.mark.parametrize("trainer", [LOGISTIC, HINGE])
def test_gradient_matches_central_differences(trainer):
    rng = random.Random(2024)
    checked = 0
    attempt = 0
    while checked < 20:
        attempt += 1
        assert attempt < 200
        model, toots = random_model_and_batch(rng, trainer)
        if trainer == HINGE and min_kink_gap(model, toots) < 1e-3:
            continue  # central differences are undefined across the hinge kink
        assert finite_difference_check(model, toots) < 1e-4
        checked += 1


class TestTrain:
    def test_separable_set_reaches_perfect_training_accuracy(self):
        toots = separable_set()
        vocab = build_vocabulary(toots, min_df=1)
        model = train(toots, vocab)
        assert predict_labels(model, toots) == [t.label for t in toots]

    def test_zero_epochs_is_initialization(self):
        toots = separable_set()
        vocab = build_vocabulary(toots, min_df=1)
        model = train(toots, vocab, cfg=TrainConfig(epochs=0))
        assert np.all(model.weights == 0.0) and model.bias == 0.0
        assert predict_score(model, toots[0]) == 0.5

    def test_deterministic(self):
        toots = separable_set()
        vocab = build_vocabulary(toots, min_df=1)
        first = train(toots, vocab, cfg=TrainConfig(epochs=40))
        second = train(toots, vocab, cfg=TrainConfig(epochs=40))
        assert model_to_bytes(first) == model_to_bytes(second)

    def test_single_class_rejected(self):
        toots = [make_toot(id=str(i), text="bad", label=TOXIC) for i in range(4)]
        vocab = build_vocabulary(toots, min_df=1)
        with pytest.raises(DegenerateTrainingError):
            train(toots, vocab)

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(DegenerateTrainingError):
            train(separable_set(), build_vocabulary([], min_df=1))

    def test_unknown_trainer_rejected(self):
        toots = separable_set()
        with pytest.raises(DegenerateTrainingError):
            train(toots, build_vocabulary(toots, min_df=1), trainer="forest")

    @pytest.mark.parametrize("trainer", [LOGISTIC, HINGE])
    def test_loss_history_monotone_on_default_config(self, trainer):
        rng = random.Random(5)
        pool = [f"w{i}" for i in range(30)] + ["bad", "nasty", "kind"]
        toots = []
        for i in range(300):
            toxic = rng.random() < 0.4
            words = [rng.choice(pool) for _ in range(rng.randint(3, 9))]
            if toxic:
                words += [rng.choice(["bad", "nasty"])] * rng.randint(1, 2)
            toots.append(
                make_toot(
                    id=f"m{i}",
                    text=" ".join(words),
                    label=TOXIC if toxic else NON_TOXIC,
                )
            )
        vocab = build_vocabulary(toots, min_df=1)
        model = train(toots, vocab, trainer=trainer)
        history = model.loss_history
        assert all(later <= earlier for earlier, later in zip(history, history[1:]))
        assert history[-1] <= history[0]

    def test_monotone_even_at_unstable_rate(self):
        toots = separable_set()
        vocab = build_vocabulary(toots, min_df=1)
        model = train(toots, vocab, cfg=TrainConfig(learning_rate=64.0, epochs=60))
        history = model.loss_history
        assert all(later <= earlier for earlier, later in zip(history, history[1:]))
        assert np.all(np.isfinite(model.weights))

    def test_duplicating_examples_leaves_weights_unchanged(self):
        toots = separable_set(copies=6)
        vocab = build_vocabulary(toots, min_df=1)
        base = train(toots, vocab, cfg=TrainConfig(epochs=60))
        doubled = train(toots + toots, vocab, cfg=TrainConfig(epochs=60))
        np.testing.assert_allclose(doubled.weights, base.weights, rtol=1e-9, atol=1e-12)
        assert doubled.bias == pytest.approx(base.bias, rel=1e-9)

    @pytest.mark.parametrize("trainer", [LOGISTIC, HINGE])
    def test_scores_in_open_unit_interval(self, trainer):
        toots = separable_set()
        vocab = build_vocabulary(toots, min_df=1)
        model = train(toots, vocab, trainer=trainer)
        for toot in toots:
            score = predict_score(model, toot)
            assert 0.0 < score < 1.0
            assert predict_label(model, toot) == (TOXIC if score > 0.5 else NON_TOXIC)


class TestPredict:
    def test_zero_model_scores_half(self):
        model = zero_model(toy_vocab(["bad"]))
        assert predict_score(model, make_toot(text="bad bad")) == 0.5

    def test_large_margin_saturates(self):
        vocab = toy_vocab(["bad"])
        model = LinearModel(
            vocabulary=vocab,
            weights=np.array([50.0]),
            bias=0.0,
            trainer=LOGISTIC,
            train_config=TrainConfig(),
        )
        assert predict_score(model, make_toot(text="bad")) > 0.999999

    def test_empty_bow_gives_sigmoid_bias(self):
        vocab = toy_vocab(["bad"])
        model = LinearModel(
            vocabulary=vocab,
            weights=np.array([3.0]),
            bias=-1.25,
            trainer=LOGISTIC,
            train_config=TrainConfig(),
        )
        toot = make_toot(text="mystery words")
        assert decision_value(model, toot) == -1.25
        assert predict_score(model, toot) == pytest.approx(
            1 / (1 + math.exp(1.25)), abs=1e-12
        )


class TestSerialization:
    def trained(self, trainer=LOGISTIC):
        toots = separable_set()
        vocab = build_vocabulary(toots, min_df=1)
        return train(toots, vocab, trainer=trainer, origin_instance="a.example")

    @pytest.mark.parametrize("trainer", [LOGISTIC, HINGE])
    def test_round_trip_bit_exact(self, trainer):
        model = self.trained(trainer)
        payload = model_to_bytes(model)
        restored = model_from_bytes(payload)
        assert models_equal(model, restored)
        assert model_to_bytes(restored) == payload

    def test_size_bytes(self):
        model = self.trained()
        assert model.size_bytes == len(model_to_bytes(model))

    def test_wrong_format_rejected(self):
        with pytest.raises(SchemaError):
            model_from_bytes(b'{"format": "nope"}')
