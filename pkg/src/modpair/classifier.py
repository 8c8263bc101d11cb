"""Linear toxicity classifiers trained from scratch by full-batch gradient descent.

Feature values are raw bag-of-words counts (the pairing profiles use tf-idf;
the two feature spaces stay distinct). Objectives are the L2-regularized mean
log-loss (logistic) or mean hinge loss (hinge); the bias is unregularized.
Weights start at zero, so training is fully deterministic: no RNG is consumed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .corpus import NON_TOXIC, TOXIC, Toot
from .errors import DegenerateTrainingError, NumericError, SchemaError
from .textproc import Vocabulary, tokenize

LOGISTIC = "logistic"
HINGE = "hinge"
TRAINERS = (LOGISTIC, HINGE)

# Largest constant step observed never to trigger the descent safeguard for
# logistic models on the bundled corpora (spectral bound ~8 there); training is
# monotone at any rate because ascending steps are halved away regardless.
STABLE_LEARNING_RATE = 1.0

# Step halvings tried per epoch before declaring there is no descent direction
# (hinge subgradients at a kink need not descend) and stopping.
_MAX_HALVINGS = 40


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings. Declared defaults, not values inferred from elsewhere."""

    learning_rate: float = STABLE_LEARNING_RATE
    epochs: int = 500
    l2_lambda: float = 1e-4
    seed: int = 0
    convergence_tol: float = 1e-6


@dataclass
class LinearModel:
    """The exchanged moderation model: vocabulary, one weight per term, bias."""

    vocabulary: Vocabulary
    weights: np.ndarray
    bias: float
    trainer: str
    train_config: TrainConfig
    origin_instance: str = ""
    loss_history: list[float] = field(default_factory=list, compare=False, repr=False)

    @property
    def size_bytes(self) -> int:
        return len(model_to_bytes(self))


def featurize(toots: Sequence[Toot], vocab: Vocabulary) -> sparse.csr_matrix:
    """Sparse count matrix, one row per toot, columns in vocabulary index order."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    lookup = vocab.index
    for toot in toots:
        counts: Counter[int] = Counter()
        for term in tokenize(toot.text):
            idx = lookup.get(term)
            if idx is not None:
                counts[idx] += 1
        for idx in sorted(counts):
            indices.append(idx)
            data.append(float(counts[idx]))
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (data, indices, indptr), shape=(len(toots), len(lookup)), dtype=np.float64
    )


def _targets(toots: Sequence[Toot]) -> np.ndarray:
    y = np.empty(len(toots))
    for i, toot in enumerate(toots):
        if toot.label not in (TOXIC, NON_TOXIC):
            raise DegenerateTrainingError(f"toot {toot.id!r} is unlabeled")
        y[i] = 1.0 if toot.label == TOXIC else 0.0
    return y


def _loss_grad(X, y, w, bias, trainer, l2_lambda):
    """Mean regularized loss and its exact (sub)gradient at (w, bias)."""
    n = X.shape[0]
    z = X @ w + bias
    if trainer == LOGISTIC:
        # -(y ln p + (1-y) ln(1-p)) == softplus(z) - y z, stable for large |z|
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        residual = (expit(z) - y) / n
    else:
        signs = 2.0 * y - 1.0
        margins = 1.0 - signs * z
        loss = float(np.mean(np.maximum(margins, 0.0)))
        # subgradient 0 at the kink (margin exactly 1)
        residual = np.where(margins > 0.0, -signs, 0.0) / n
    loss += 0.5 * l2_lambda * float(w @ w)
    grad_w = X.T @ residual + l2_lambda * w
    grad_b = float(residual.sum())
    return loss, np.asarray(grad_w).ravel(), grad_b


def loss_and_gradient(
    model: LinearModel, batch: Sequence[Toot]
) -> tuple[float, np.ndarray, float]:
    """Public hook for gradient checks: mean loss and exact gradient on a batch."""
    if not batch:
        raise DegenerateTrainingError("empty batch")
    X = featurize(batch, model.vocabulary)
    y = _targets(batch)
    return _loss_grad(
        X, y, model.weights, model.bias, model.trainer, model.train_config.l2_lambda
    )


def train(
    train_set: Sequence[Toot],
    vocab: Vocabulary,
    trainer: str = LOGISTIC,
    cfg: TrainConfig = TrainConfig(),
    origin_instance: str = "",
) -> LinearModel:
    """Full-batch gradient descent from zero weights, monotone by construction.

    A step that would increase the mean loss is retried with a halved rate
    (the rate stays halved); if no descent step exists, e.g. at a hinge kink,
    training stops. Also stops once the per-epoch loss delta falls below
    cfg.convergence_tol. loss_history holds the initial loss plus the loss
    after every accepted epoch, so it is non-increasing.
    """
    if trainer not in TRAINERS:
        raise DegenerateTrainingError(f"unknown trainer {trainer!r}")
    if len(vocab) == 0:
        raise DegenerateTrainingError("empty vocabulary")
    y = _targets(train_set)
    if len(set(y.tolist())) < 2:
        raise DegenerateTrainingError("training set contains a single class")

    X = featurize(train_set, vocab)
    w = np.zeros(len(vocab))
    bias = 0.0
    rate = cfg.learning_rate
    loss, grad_w, grad_b = _loss_grad(X, y, w, bias, trainer, cfg.l2_lambda)
    history = [loss]
    for epoch in range(cfg.epochs):
        if not np.isfinite(loss) or not np.all(np.isfinite(grad_w)):
            raise NumericError(f"training diverged at epoch {epoch}")
        accepted = False
        for _ in range(_MAX_HALVINGS):
            w_try = w - rate * grad_w
            b_try = bias - rate * grad_b
            loss_try, gw_try, gb_try = _loss_grad(
                X, y, w_try, b_try, trainer, cfg.l2_lambda
            )
            if np.isfinite(loss_try) and loss_try <= loss:
                accepted = True
                break
            rate /= 2.0
        if not accepted:
            break
        delta = loss - loss_try
        w, bias = w_try, b_try
        loss, grad_w, grad_b = loss_try, gw_try, gb_try
        history.append(loss)
        if delta < cfg.convergence_tol:
            break
    return LinearModel(
        vocabulary=vocab,
        weights=w,
        bias=bias,
        trainer=trainer,
        train_config=cfg,
        origin_instance=origin_instance,
        loss_history=history,
    )


def decision_value(model: LinearModel, toot: Toot) -> float:
    """w . bow(toot) + b with out-of-vocabulary tokens dropped."""
    z = model.bias
    lookup = model.vocabulary.index
    for term, count in Counter(tokenize(toot.text)).items():
        idx = lookup.get(term)
        if idx is not None:
            z += model.weights[idx] * count
    return float(z)


def predict_score(model: LinearModel, toot: Toot) -> float:
    """Score in (0, 1): sigmoid of the decision value (hinge margins squashed too)."""
    return float(expit(decision_value(model, toot)))


def predict_label(model: LinearModel, toot: Toot) -> str:
    return TOXIC if predict_score(model, toot) > 0.5 else NON_TOXIC


def predict_scores(model: LinearModel, toots: Sequence[Toot]) -> np.ndarray:
    X = featurize(toots, model.vocabulary)
    return expit(X @ model.weights + model.bias)


def predict_labels(model: LinearModel, toots: Sequence[Toot]) -> list[str]:
    return [TOXIC if s > 0.5 else NON_TOXIC for s in predict_scores(model, toots)]


MODEL_FORMAT = "linear-model"
MODEL_FORMAT_VERSION = 1


def model_to_bytes(model: LinearModel) -> bytes:
    """Canonical serialized form: term-sorted vocabulary, aligned weights, UTF-8."""
    terms = sorted(model.vocabulary.index)
    order = [model.vocabulary.index[t] for t in terms]
    record = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "trainer": model.trainer,
        "origin_instance": model.origin_instance,
        "vocabulary": {
            "document_count": model.vocabulary.document_count,
            "terms": terms,
            "document_frequency": [model.vocabulary.document_frequency[t] for t in terms],
        },
        "weights": [float(model.weights[i]) for i in order],
        "bias": float(model.bias),
        "train_config": asdict(model.train_config),
    }
    return json.dumps(
        record, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def model_from_bytes(data: bytes) -> LinearModel:
    record = json.loads(data.decode("utf-8"))
    if record.get("format") != MODEL_FORMAT:
        raise SchemaError(f"not a serialized model: format={record.get('format')!r}")
    vocab_rec = record["vocabulary"]
    terms = vocab_rec["terms"]
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(terms)},
        document_frequency=dict(zip(terms, vocab_rec["document_frequency"])),
        document_count=vocab_rec["document_count"],
    )
    return LinearModel(
        vocabulary=vocab,
        weights=np.array(record["weights"], dtype=np.float64),
        bias=float(record["bias"]),
        trainer=record["trainer"],
        train_config=TrainConfig(**record["train_config"]),
        origin_instance=record["origin_instance"],
    )


def models_equal(a: LinearModel, b: LinearModel) -> bool:
    """Structural equality over the serialized fields (loss history excluded)."""
    return (
        a.trainer == b.trainer
        and a.origin_instance == b.origin_instance
        and a.train_config == b.train_config
        and a.bias == b.bias
        and a.vocabulary.index == b.vocabulary.index
        and a.vocabulary.document_frequency == b.vocabulary.document_frequency
        and a.vocabulary.document_count == b.vocabulary.document_count
        and np.array_equal(a.weights, b.weights)
    )
