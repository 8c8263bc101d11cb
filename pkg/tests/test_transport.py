import urllib.error
import urllib.request

import numpy as np
import pytest

from modpair.classifier import LOGISTIC, LinearModel, TrainConfig
from modpair.corpus import InstanceCorpus
from modpair.errors import PeerUnavailableError
from modpair.fedsim import FederationGraph, FediverseSim
from modpair.textproc import TfIdfProfile, Vocabulary
from modpair.transport import (
    http_fetch_model,
    http_fetch_profile,
    serve_instance,
)


@pytest.fixture
def sim():
    graph = FederationGraph(
        instances={"a.x": InstanceCorpus(domain="a.x", users=["u0"])}
    )
    return FediverseSim(graph)


@pytest.fixture
def server(sim):
    httpd = serve_instance(sim, "a.x")
    yield httpd
    httpd.shutdown()


def base_url(server):
    host, port = server.server_address
    return f"http://{host}:{port}"


def test_endpoints_serve_published_artifacts(sim, server):
    profile = TfIdfProfile(instance="a.x", weights={"hello": 2.0}, toot_count=4)
    sim.publish_profile("a.x", profile)
    vocab = Vocabulary(index={"hello": 0}, document_frequency={"hello": 1}, document_count=4)
    model = LinearModel(
        vocabulary=vocab,
        weights=np.array([1.5]),
        bias=-0.5,
        trainer=LOGISTIC,
        train_config=TrainConfig(),
        origin_instance="a.x",
    )
    sim.publish_model("a.x", model)

    fetched_profile, profile_version = http_fetch_profile(base_url(server))
    assert fetched_profile.weights == {"hello": 2.0}
    assert profile_version == 1

    fetched_model, model_version = http_fetch_model(base_url(server))
    assert fetched_model.bias == -0.5
    assert model_version == 1

    sim.publish_profile("a.x", profile)
    _, bumped = http_fetch_profile(base_url(server))
    assert bumped == 2


def test_unpublished_returns_unavailable(server):
    with pytest.raises(PeerUnavailableError):
        http_fetch_profile(base_url(server))


def test_unknown_path_404(server):
    with pytest.raises(urllib.error.HTTPError) as excinfo:
        urllib.request.urlopen(base_url(server) + "/api/v1/unknown")
    assert excinfo.value.code == 404
