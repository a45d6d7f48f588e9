import numpy as np
import pytest

from lexshift.embed import (EmbeddingModel, TrainConfig, build_vocab, cosine,
                            load_model, save_model, top_k_neighbors, train,
                            train_global_reference)
from lexshift.errors import DataError, OOVError

from conftest import make_model


def toy_verses(n=400, seed=0):
    rng = np.random.default_rng(seed)
    vocab = [f"t{i}" for i in range(30)]
    return [[vocab[j] for j in rng.integers(0, 30, size=8)] for _ in range(n)]


SMALL = TrainConfig(dim=16, window=3, min_count=2, negative=3, epochs=2, seed=1)


class TestTrainConfig:
    def test_defaults_valid(self):
        cfg = TrainConfig()
        assert cfg.dim == 200 and cfg.window == 5 and cfg.negative == 10

    @pytest.mark.parametrize("kwargs", [
        {"dim": 0}, {"window": 0}, {"negative": 0}, {"epochs": 0}, {"min_count": 0},
    ])
    def test_invalid_raises(self, kwargs):
        with pytest.raises(DataError):
            TrainConfig(**kwargs)

    def test_json_roundtrip(self):
        cfg = TrainConfig(dim=32, epochs=3)
        assert TrainConfig.from_json(cfg.to_json()) == cfg


class TestBuildVocab:
    def test_order_count_desc_then_word_asc(self):
        verses = [["b", "b", "a", "a", "c", "c", "c", "d"]]
        vocab, freq = build_vocab(verses, min_count=2)
        assert list(vocab) == ["c", "a", "b"]
        assert freq == {"a": 2, "b": 2, "c": 3}

    def test_min_count_filters(self):
        vocab, _ = build_vocab([["a", "a", "b"]], min_count=2)
        assert list(vocab) == ["a"]


class TestCosine:
    def test_basic(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(0.0)
        assert cosine(np.array([1.0, 1.0]), np.array([2.0, 2.0])) == pytest.approx(1.0)

    def test_zero_vector_raises(self):
        with pytest.raises(DataError):
            cosine(np.zeros(3), np.ones(3))

    def test_shape_mismatch_raises(self):
        with pytest.raises(DataError):
            cosine(np.ones(2), np.ones(3))


class TestTopKNeighbors:
    def test_ranking(self, tiny_model):
        out = top_k_neighbors(tiny_model, "a", 2)
        assert [w for w, _ in out] == ["c", "b"]

    def test_lexicographic_tie_break(self):
        model = make_model("s", {"q": [1.0, 0.0], "z": [2.0, 0.0],
                                 "m": [3.0, 0.0], "b": [0.0, 1.0]})
        out = top_k_neighbors(model, "q", 2)
        assert [w for w, _ in out] == ["m", "z"]  # equal cosine, word order

    def test_exclude(self, tiny_model):
        out = top_k_neighbors(tiny_model, "a", 2, exclude={"c"})
        assert [w for w, _ in out] == ["b"]

    def test_oov_raises(self, tiny_model):
        with pytest.raises(OOVError):
            top_k_neighbors(tiny_model, "nope", 2)

    def test_bad_k_raises(self, tiny_model):
        with pytest.raises(DataError):
            top_k_neighbors(tiny_model, "a", 0)


class TestTrain:
    def test_deterministic_bit_identical(self):
        verses = toy_verses()
        m1 = train(verses, SMALL, slice_id="s")
        m2 = train(verses, SMALL, slice_id="s")
        assert np.array_equal(m1.vectors, m2.vectors)
        assert m1.vocab == m2.vocab

    def test_seed_changes_vectors(self):
        verses = toy_verses()
        m1 = train(verses, SMALL, slice_id="s")
        m2 = train(verses, TrainConfig(**{**SMALL.to_json(), "seed": 2}),
                   slice_id="s")
        assert not np.array_equal(m1.vectors, m2.vectors)

    def test_empty_vocab_raises(self):
        with pytest.raises(DataError, match="lexical threshold"):
            train([["rare"]], SMALL, slice_id="thin")

    def test_vectors_shape_and_finite(self):
        model = train(toy_verses(), SMALL, slice_id="s")
        assert model.vectors.shape == (len(model.vocab), SMALL.dim)
        assert np.all(np.isfinite(model.vectors))

    def test_cooccurrence_geometry(self):
        # two word groups that never co-occur end up separable by cosine
        rng = np.random.default_rng(3)
        a = [f"a{i}" for i in range(8)]
        b = [f"b{i}" for i in range(8)]
        verses = []
        for _ in range(3000):
            pool = a if rng.random() < 0.5 else b
            verses.append([pool[j] for j in rng.integers(0, 8, size=6)])
        model = train(verses, TrainConfig(dim=8, window=3, min_count=2,
                                          negative=5, epochs=10, seed=1))
        within = cosine(model.vector("a0"), model.vector("a1"))
        across = cosine(model.vector("a0"), model.vector("b0"))
        assert within > across

    def test_global_reference_concatenates(self):
        with pytest.raises(DataError, match="no input"):
            train_global_reference([], SMALL)


class TestPersistence:
    def test_roundtrip_exact(self, tmp_path):
        model = train(toy_verses(), SMALL, slice_id="s")
        save_model(model, tmp_path / "m")
        loaded = load_model(tmp_path / "m")
        assert loaded.vocab == model.vocab
        assert np.array_equal(loaded.vectors, model.vectors)
        assert loaded.frequency == model.frequency
        assert loaded.config == model.config
