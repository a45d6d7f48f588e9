"""Shared fixtures and hand-built model/graph helpers."""

import numpy as np
import pytest

from lexshift.embed import EmbeddingModel, TrainConfig
from lexshift.graph import CommunityPartition, SemanticGraph


def make_model(slice_id, vecs, frequency=None):
    """EmbeddingModel from {word: vector}; insertion order fixes vocab ids."""
    vocab = {w: i for i, w in enumerate(vecs)}
    mat = np.array(list(vecs.values()), dtype=np.float32)
    cfg = TrainConfig(dim=mat.shape[1], window=2, min_count=1, negative=1, epochs=1)
    freq = dict(frequency) if frequency else {w: 10 for w in vecs}
    return EmbeddingModel(slice_id, vocab, mat, cfg, freq)


def make_graph(slice_id, edges, extra_nodes=(), k=10):
    """SemanticGraph from (a, b, weight) triples."""
    adjacency = {}
    for a, b, w in edges:
        adjacency.setdefault(a, {})[b] = w
        adjacency.setdefault(b, {})[a] = w
    for n in extra_nodes:
        adjacency.setdefault(n, {})
    return SemanticGraph(slice_id, k, sorted(adjacency), adjacency)


def make_partition(slice_id, assignment, modularity=0.0):
    return CommunityPartition(slice_id, dict(assignment), modularity)


def random_unit_model(seed, n_words, dim, slice_id=None):
    rng = np.random.default_rng(seed)
    words = [f"w{i:03d}" for i in range(n_words)]
    vecs = rng.normal(size=(n_words, dim))
    return make_model(slice_id or f"r{seed}",
                      {w: vecs[i] for i, w in enumerate(words)})


@pytest.fixture
def tiny_model():
    return make_model("tiny", {
        "a": [1.0, 0.0],
        "b": [0.8, -0.6],
        "c": [0.9, 0.435],
    })
