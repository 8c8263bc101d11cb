import pytest

from modpair.corpus import LabelConfig
from modpair.errors import SchemaError
from modpair.fedsim import propagate
from modpair.store import load_store, write_store
from modpair.synth import SynthConfig, generate_federation


@pytest.fixture(scope="module")
def small_graph():
    return generate_federation(
        SynthConfig(instances=4, clusters=2, toots_per_instance=60, seed=17)
    )


def test_round_trip_preserves_everything(tmp_path, small_graph):
    store = tmp_path / "store"
    write_store(small_graph, store)
    loaded = load_store(store)
    assert loaded.domains() == small_graph.domains()
    assert loaded.follow_edges == small_graph.follow_edges
    assert loaded.registered_users == small_graph.registered_users
    for domain in small_graph.domains():
        original = small_graph.instances[domain]
        restored = loaded.instances[domain]
        assert [t.id for t in restored.local_toots] == [t.id for t in original.local_toots]
        assert [t.id for t in restored.federated_toots] == [
            t.id for t in original.federated_toots
        ]
        assert [t.label for t in restored.local_toots] == [
            t.label for t in original.local_toots
        ]
        assert restored.local_toots[0] == original.local_toots[0]
        assert set(original.users) <= set(restored.users)


def test_rewrite_is_byte_stable(tmp_path, small_graph):
    first = tmp_path / "one"
    second = tmp_path / "two"
    write_store(small_graph, first)
    write_store(load_store(first), second)
    for path in sorted(first.rglob("*")):
        if path.is_file():
            twin = second / path.relative_to(first)
            assert twin.read_bytes() == path.read_bytes(), path.name


def test_missing_manifest(tmp_path):
    with pytest.raises(SchemaError):
        load_store(tmp_path / "nowhere")


def test_threshold_applies_on_load(tmp_path, small_graph):
    store = tmp_path / "store"
    write_store(small_graph, store)
    strict = load_store(store, label_cfg=LabelConfig(threshold=0.8))
    domain = strict.domains()[0]
    loose_toxic = sum(
        1 for t in small_graph.instances[domain].local_toots if t.label == "toxic"
    )
    strict_toxic = sum(
        1 for t in strict.instances[domain].local_toots if t.label == "toxic"
    )
    assert strict_toxic < loose_toxic


def test_loaded_graph_supports_propagation(tmp_path, small_graph):
    store = tmp_path / "store"
    write_store(small_graph, store)
    loaded = load_store(store)
    toot = loaded.instances[loaded.domains()[0]].local_toots[0]
    # already propagated during synthesis, so replication is a no-op re-run
    targets = propagate(loaded, toot)
    for target in targets:
        ids = [t.id for t in loaded.instances[target].federated_toots]
        assert ids.count(toot.id) == 1
