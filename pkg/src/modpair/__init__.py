"""Decentralized moderation by model sharing.

Instances train local toxicity classifiers on bag-of-words features, publish
tf-idf content profiles, pair with their most linguistically similar peers,
retrieve those peers' models, and moderate by majority vote. A deterministic
federation simulator plus an experiment harness reproduce the evaluation
designs on synthetic or user-supplied corpora.
"""

from .classifier import (
    HINGE,
    LOGISTIC,
    LinearModel,
    TrainConfig,
    loss_and_gradient,
    model_from_bytes,
    model_to_bytes,
    predict_label,
    predict_score,
    train,
)
from .corpus import (
    LABELS,
    NON_TOXIC,
    TOXIC,
    InstanceCorpus,
    LabelConfig,
    NoiseConfig,
    Toot,
    inject_noise,
    label_from_score,
    load_corpus,
    sample_budget,
    split_train_test,
    user_toxicity,
)
from .ensemble import Ensemble, VoteResult, evaluate, vote
from .experiments import (
    CrossMatrix,
    ExperimentReport,
    HarnessConfig,
    run_budget_experiment,
    run_cross_matrix,
    run_modpair_experiment,
    run_noise_experiment,
)
from .fedsim import (
    FederationGraph,
    FediverseSim,
    SimClock,
    fetch_round,
    propagate,
    reach,
)
from .metrics import cohens_kappa, macro_f1
from .pairing import (
    PairingConfig,
    PairingDecision,
    precision_at_k,
    presample,
    rank_peers,
    select_top_k,
)
from .synth import SynthConfig, generate_federation
from .textproc import (
    TfIdfProfile,
    Vocabulary,
    bow_vector,
    build_vocabulary,
    cosine_similarity,
    idf,
    profile_from_bytes,
    profile_to_bytes,
    tfidf_profile,
    tokenize,
)

__version__ = "0.1.0"
