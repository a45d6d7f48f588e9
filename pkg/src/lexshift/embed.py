"""Skip-gram negative-sampling embeddings, one model per corpus slice.

The trainer is a single-threaded, fully seeded SGNS implementation (numba
kernel), so deterministic mode produces bit-identical vector matrices for
identical inputs.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .corpus import CorpusSlice
from .errors import DataError, OOVError

NEG_TABLE_SIZE = 1_000_000
NEG_POWER = 0.75  # unigram distribution exponent for negative draws


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 200
    window: int = 5
    min_count: int = 15
    negative: int = 10
    epochs: int = 15
    seed: int = 42
    subsample_threshold: float = 1e-3
    lr_start: float = 0.025
    lr_end: float = 0.0001
    deterministic: bool = True

    def __post_init__(self):
        if self.dim <= 0 or self.window < 1 or self.negative < 1:
            raise DataError("invalid training config: dim/window/negative out of range")
        if self.epochs < 1 or self.min_count < 1:
            raise DataError("invalid training config: epochs/min_count out of range")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "TrainConfig":
        return cls(**data)


@dataclass
class EmbeddingModel:
    slice_id: str
    vocab: dict[str, int]
    vectors: np.ndarray  # |V| x dim, float32
    config: TrainConfig
    frequency: dict[str, int]
    _units: np.ndarray | None = field(default=None, repr=False, compare=False)
    _lex_rank: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def words(self) -> list[str]:
        out = [""] * len(self.vocab)
        for w, i in self.vocab.items():
            out[i] = w
        return out

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        try:
            return self.vectors[self.vocab[word]]
        except KeyError:
            raise OOVError(word, self.slice_id) from None

    @property
    def unit_vectors(self) -> np.ndarray:
        if self._units is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            self._units = self.vectors / norms
        return self._units

    @property
    def lex_rank(self) -> np.ndarray:
        """Rank of each vocab index in lexicographic word order (for tie-breaks)."""
        if self._lex_rank is None:
            words = self.words
            order = sorted(range(len(words)), key=lambda i: words[i])
            rank = np.empty(len(words), dtype=np.int64)
            for r, i in enumerate(order):
                rank[i] = r
            self._lex_rank = rank
        return self._lex_rank

    def with_vectors(self, vectors: np.ndarray) -> "EmbeddingModel":
        return EmbeddingModel(self.slice_id, dict(self.vocab), vectors,
                              self.config, dict(self.frequency))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise DataError("cosine undefined for zero vector")
    if u.shape != v.shape:
        raise DataError("cosine needs vectors of equal dimension")
    return float(np.dot(u, v) / (nu * nv))


def top_k_neighbors(model: EmbeddingModel, word: str, k: int,
                    exclude: Iterable[str] = ()) -> list[tuple[str, float]]:
    """Top-k cosine neighbors, excluding the query and `exclude`; ties broken
    by lexicographic word order."""
    if k < 1:
        raise DataError("k must be >= 1")
    if word not in model.vocab:
        raise OOVError(word, model.slice_id)
    units = model.unit_vectors
    sims = units @ units[model.vocab[word]]
    mask = np.ones(len(sims), dtype=bool)
    mask[model.vocab[word]] = False
    for w in exclude:
        idx = model.vocab.get(w)
        if idx is not None:
            mask[idx] = False
    order = np.lexsort((model.lex_rank, -sims))
    words = model.words
    out = []
    for idx in order:
        if not mask[idx]:
            continue
        out.append((words[idx], float(sims[idx])))
        if len(out) == k:
            break
    return out


# -- trainer -----------------------------------------------------------------

_U64 = np.uint64
_LCG_A = _U64(6364136223846793005)
_LCG_C = _U64(1442695040888963407)
_SHIFT = _U64(33)
_MASK31 = _U64(0x7FFFFFFF)


@njit(cache=True)
def _sgns_kernel(tokens, offsets, syn0, syn1, neg_table, keep_prob,
                 window, negative, epochs, lr_start, lr_end, total_words, seed,
                 max_sentence_len):  # pragma: no cover - exercised via train()
    dim = syn0.shape[1]
    table_size = neg_table.shape[0]
    neu1e = np.zeros(dim, dtype=np.float32)
    sen = np.empty(max_sentence_len, dtype=np.int32)
    state = _U64(seed) * _LCG_A + _U64(1)
    processed = 0.0
    n_sent = offsets.shape[0] - 1
    for _ in range(epochs):
        for s in range(n_sent):
            alpha = lr_start + (lr_end - lr_start) * (processed / total_words)
            if alpha < lr_end:
                alpha = lr_end
            slen = 0
            for j in range(offsets[s], offsets[s + 1]):
                w = tokens[j]
                processed += 1.0
                state = state * _LCG_A + _LCG_C
                r = float((state >> _SHIFT) & _MASK31) / 2147483648.0
                if r < keep_prob[w]:
                    sen[slen] = w
                    slen += 1
            for i in range(slen):
                center = sen[i]
                state = state * _LCG_A + _LCG_C
                b = int((state >> _SHIFT) & _MASK31) % window + 1
                lo = i - b
                if lo < 0:
                    lo = 0
                hi = i + b + 1
                if hi > slen:
                    hi = slen
                for jdx in range(lo, hi):
                    if jdx == i:
                        continue
                    ctx = sen[jdx]
                    for d in range(dim):
                        neu1e[d] = 0.0
                    for n in range(negative + 1):
                        if n == 0:
                            target = center
                            label = 1.0
                        else:
                            state = state * _LCG_A + _LCG_C
                            target = neg_table[int((state >> _SHIFT) & _MASK31) % table_size]
                            if target == center:
                                continue
                            label = 0.0
                        f = 0.0
                        for d in range(dim):
                            f += syn0[ctx, d] * syn1[target, d]
                        if f > 6.0:
                            g = (label - 1.0) * alpha
                        elif f < -6.0:
                            g = label * alpha
                        else:
                            g = (label - 1.0 / (1.0 + math.exp(-f))) * alpha
                        gf = np.float32(g)
                        for d in range(dim):
                            neu1e[d] += gf * syn1[target, d]
                            syn1[target, d] += gf * syn0[ctx, d]
                    for d in range(dim):
                        syn0[ctx, d] += neu1e[d]


def build_vocab(verses: Sequence[Sequence[str]], min_count: int
                ) -> tuple[dict[str, int], dict[str, int]]:
    """Frequency-sorted vocabulary (count desc, word asc) of words at min_count."""
    counts = Counter()
    for verse in verses:
        counts.update(verse)
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    vocab = {w: i for i, (w, _) in enumerate(kept)}
    frequency = {w: c for w, c in kept}
    return vocab, frequency


def _negative_table(frequency: dict[str, int], vocab: dict[str, int]) -> np.ndarray:
    probs = np.zeros(len(vocab))
    for w, i in vocab.items():
        probs[i] = frequency[w] ** NEG_POWER
    probs /= probs.sum()
    bounds = np.cumsum(probs) * NEG_TABLE_SIZE
    table = np.zeros(NEG_TABLE_SIZE, dtype=np.int32)
    idx = 0
    for pos in range(NEG_TABLE_SIZE):
        while idx < len(bounds) - 1 and pos >= bounds[idx]:
            idx += 1
        table[pos] = idx
    return table


def _keep_probs(frequency: dict[str, int], vocab: dict[str, int],
                threshold: float) -> np.ndarray:
    total = sum(frequency.values())
    keep = np.ones(len(vocab), dtype=np.float32)
    if threshold <= 0:
        return keep
    for w, i in vocab.items():
        f = frequency[w] / total
        if f > threshold:
            keep[i] = min(1.0, math.sqrt(threshold / f) + threshold / f)
    return keep


def train(slc: CorpusSlice | Sequence[Sequence[str]], config: TrainConfig,
          slice_id: str | None = None) -> EmbeddingModel:
    """Train an SGNS model on one tokenized slice."""
    if isinstance(slc, CorpusSlice):
        verses = slc.verses
        slice_id = slice_id or slc.slice_id
    else:
        verses = slc
        slice_id = slice_id or "unnamed"

    vocab, frequency = build_vocab(verses, config.min_count)
    if not vocab:
        raise DataError(f"slice below lexical threshold: {slice_id!r}")

    encoded = []
    for verse in verses:
        ids = [vocab[w] for w in verse if w in vocab]
        if ids:
            encoded.append(ids)
    tokens = np.fromiter((i for ids in encoded for i in ids), dtype=np.int32,
                         count=sum(len(ids) for ids in encoded))
    offsets = np.zeros(len(encoded) + 1, dtype=np.int64)
    np.cumsum([len(ids) for ids in encoded], out=offsets[1:])
    max_len = max((len(ids) for ids in encoded), default=1)

    rng = np.random.RandomState(config.seed)
    syn0 = ((rng.rand(len(vocab), config.dim) - 0.5) / config.dim).astype(np.float32)
    syn1 = np.zeros((len(vocab), config.dim), dtype=np.float32)

    total_words = float(max(1, len(tokens) * config.epochs))
    _sgns_kernel(tokens, offsets, syn0, syn1,
                 _negative_table(frequency, vocab),
                 _keep_probs(frequency, vocab, config.subsample_threshold),
                 config.window, config.negative, config.epochs,
                 config.lr_start, config.lr_end, total_words, config.seed,
                 max_len)

    if not np.all(np.isfinite(syn0)):
        raise DataError(f"training diverged on slice {slice_id!r}")
    return EmbeddingModel(slice_id, vocab, syn0, config, frequency)


def train_global_reference(full_slices: Sequence[CorpusSlice],
                           config: TrainConfig,
                           slice_id: str = "reference") -> EmbeddingModel:
    """Train one model on the concatenation of the full slices, in slice order."""
    if not full_slices:
        raise DataError("no input")
    verses = [v for slc in full_slices for v in slc.verses]
    return train(verses, config, slice_id=slice_id)


# -- persistence -------------------------------------------------------------

def save_model(model: EmbeddingModel, prefix: str | Path) -> None:
    """Write word2vec text format plus a JSON sidecar."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    words = model.words
    with open(f"{prefix}.vec", "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {model.vectors.shape[1]}\n")
        for i, w in enumerate(words):
            row = " ".join(repr(float(x)) for x in model.vectors[i])
            fh.write(f"{w} {row}\n")
    sidecar = {
        "slice_id": model.slice_id,
        "config": model.config.to_json(),
        "frequency": model.frequency,
    }
    Path(f"{prefix}.json").write_text(
        json.dumps(sidecar, ensure_ascii=False, sort_keys=True), "utf-8")


def load_model(prefix: str | Path) -> EmbeddingModel:
    prefix = Path(prefix)
    sidecar = json.loads(Path(f"{prefix}.json").read_text("utf-8"))
    with open(f"{prefix}.vec", encoding="utf-8") as fh:
        header = fh.readline().split()
        n, dim = int(header[0]), int(header[1])
        vocab: dict[str, int] = {}
        vectors = np.empty((n, dim), dtype=np.float32)
        for i in range(n):
            parts = fh.readline().rstrip("\n").split(" ")
            vocab[parts[0]] = i
            vectors[i] = [float(x) for x in parts[1:]]
    return EmbeddingModel(
        slice_id=sidecar["slice_id"], vocab=vocab, vectors=vectors,
        config=TrainConfig.from_json(sidecar["config"]),
        frequency={w: int(c) for w, c in sidecar["frequency"].items()})
