"""Synthetic multi-slice corpora with planted semantic behavior.

A cluster-mixture unigram generator: each sentence draws a topic cluster and
samples words from it (Zipf-weighted within the cluster), so SGNS geometry is
predictable. Planted words join the sampling distribution of their host
cluster(s) with a per-slice mixture schedule, giving ground truth for turnover
(rewire), community reallocation (migrate), and stability (stable).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import RawDocument
from .errors import DataError

BEHAVIORS = ("stable", "rewire", "migrate")
FIRST_CENTURY = 3  # synthetic slices are labeled as consecutive centuries
VERSES_PER_DOC = 500


@dataclass(frozen=True)
class PlantedWord:
    word: str
    behavior: str  # stable | rewire | migrate
    from_cluster: int
    to_cluster: int
    schedule: tuple[float, ...]  # per-slice mixture weight toward to_cluster
    occurrences_per_slice: int = 1500


@dataclass
class SynthSpec:
    seed: int = 42
    n_slices: int = 3
    n_poets: int = 8
    clusters: list[list[str]] = field(default_factory=list)
    function_words: list[str] = field(default_factory=list)
    function_share: float = 0.15
    sentence_length: int = 6
    sentences_per_slice: int = 200_000
    planted: list[PlantedWord] = field(default_factory=list)

    def validate(self) -> None:
        if not self.clusters or any(not c for c in self.clusters):
            raise DataError("degenerate spec: empty cluster")
        seen: set[str] = set()
        for c in [*self.clusters, self.function_words]:
            overlap = seen & set(c)
            if overlap:
                raise DataError(f"clusters not disjoint: {sorted(overlap)[:3]}")
            seen |= set(c)
        if not 0.0 <= self.function_share < 1.0:
            raise DataError("function_share must be in [0, 1)")
        if self.function_share > 0 and not self.function_words:
            raise DataError("function_share set but no function words")
        for p in self.planted:
            if p.behavior not in BEHAVIORS:
                raise DataError(f"unknown behavior {p.behavior!r}")
            if len(p.schedule) != self.n_slices:
                raise DataError(f"schedule length mismatch for {p.word!r}")
            if p.behavior in ("rewire", "migrate"):
                if any(b < a for a, b in zip(p.schedule, p.schedule[1:])):
                    raise DataError(f"non-monotone schedule for {p.word!r}")
            if not (0 <= p.from_cluster < len(self.clusters)
                    and 0 <= p.to_cluster < len(self.clusters)):
                raise DataError(f"cluster index out of range for {p.word!r}")
            if p.word in seen:
                raise DataError(f"planted word {p.word!r} collides with cluster vocab")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "n_slices": self.n_slices,
            "n_poets": self.n_poets,
            "clusters": self.clusters,
            "function_words": self.function_words,
            "function_share": self.function_share,
            "sentence_length": self.sentence_length,
            "sentences_per_slice": self.sentences_per_slice,
            "planted": [
                {"word": p.word, "behavior": p.behavior,
                 "from_cluster": p.from_cluster, "to_cluster": p.to_cluster,
                 "schedule": list(p.schedule),
                 "occurrences_per_slice": p.occurrences_per_slice}
                for p in self.planted
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SynthSpec":
        planted = [
            PlantedWord(word=p["word"], behavior=p["behavior"],
                        from_cluster=p["from_cluster"], to_cluster=p["to_cluster"],
                        schedule=tuple(p["schedule"]),
                        occurrences_per_slice=p.get("occurrences_per_slice", 1500))
            for p in data.get("planted", [])
        ]
        return cls(seed=data.get("seed", 42), n_slices=data.get("n_slices", 3),
                   n_poets=data.get("n_poets", 8),
                   clusters=[list(c) for c in data["clusters"]],
                   function_words=list(data.get("function_words", [])),
                   function_share=data.get(
                       "function_share", 0.15 if data.get("function_words") else 0.0),
                   sentence_length=data.get("sentence_length", 6),
                   sentences_per_slice=data.get("sentences_per_slice", 200_000),
                   planted=planted)


def default_spec(seed: int = 42, vocab_size: int = 2000, cluster_size: int = 12,
                 n_slices: int = 3, sentences_per_slice: int = 200_000,
                 n_planted: int = 5) -> SynthSpec:
    """The acceptance-scale spec: disjoint Zipf clusters, a shared function-word
    layer that pins inter-cluster geometry, and 3x n_planted planted words."""
    n_function = max(0, vocab_size - (vocab_size // cluster_size) * cluster_size)
    if n_function < 40:  # reserve a fixed share of the vocab for function words
        n_function += cluster_size * ((40 - n_function + cluster_size - 1) // cluster_size)
    n_clusters = (vocab_size - n_function) // cluster_size
    clusters = [[f"t{c:02d}w{i:02d}" for i in range(cluster_size)]
                for c in range(n_clusters)]
    function_words = [f"f{i:02d}" for i in range(n_function)]
    ramp = tuple(i / (n_slices - 1) for i in range(n_slices)) if n_slices > 1 else (1.0,)
    # migrate words switch host cluster decisively at mid-schedule
    step = tuple(0.0 if i < (n_slices + 1) // 2 else 1.0 for i in range(n_slices))
    flat = tuple(0.0 for _ in range(n_slices))
    planted = []
    for j in range(n_planted):
        planted.append(PlantedWord(f"stable{j}", "stable", 3 * j, 3 * j, flat,
                                   occurrences_per_slice=4000))
        planted.append(PlantedWord(f"rewire{j}", "rewire", 3 * j + 1,
                                   (3 * j + 1 + n_clusters // 2) % n_clusters, ramp,
                                   occurrences_per_slice=2000))
        # migrate words stay at host-cluster frequency levels: much higher and
        # the hub penalty pushes them out of the mutual top-k neighborhood
        planted.append(PlantedWord(f"migrate{j}", "migrate", 3 * j + 2,
                                   (3 * j + 2 + n_clusters // 2) % n_clusters, step,
                                   occurrences_per_slice=800))
    return SynthSpec(seed=seed, n_slices=n_slices, clusters=clusters,
                     function_words=function_words,
                     sentences_per_slice=sentences_per_slice, planted=planted)


def _zipf_probs(n: int) -> np.ndarray:
    p = 1.0 / np.arange(1, n + 1)
    return p / p.sum()


def generate(spec: SynthSpec) -> list[RawDocument]:
    """Deterministically generate the synthetic corpus for a spec."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    cluster_words = [np.array(c) for c in spec.clusters]
    cluster_probs = [_zipf_probs(len(c)) for c in spec.clusters]
    n_clusters = len(spec.clusters)
    # function words appear in every sentence type and anchor the shared
    # coordinate frame across otherwise non-co-occurring clusters
    func_share = spec.function_share if spec.function_words else 0.0
    func_words = np.array(spec.function_words) if spec.function_words else None
    func_probs = (_zipf_probs(len(spec.function_words)) * func_share
                  if spec.function_words else None)

    docs: list[RawDocument] = []
    for s in range(spec.n_slices):
        century = FIRST_CENTURY + s
        sentences: list[str] = []

        # expected planted count per cluster for this slice
        extra: dict[int, list[tuple[str, float]]] = {}
        for p in spec.planted:
            weight = p.schedule[s]
            if p.behavior == "stable":
                # stable words live in the shared layer, spread over every
                # cluster like reference vocabulary; host clusters are ignored
                for c in range(n_clusters):
                    extra.setdefault(c, []).append(
                        (p.word, p.occurrences_per_slice / n_clusters))
                continue
            if p.from_cluster == p.to_cluster:
                extra.setdefault(p.from_cluster, []).append(
                    (p.word, float(p.occurrences_per_slice)))
                continue
            if weight < 1.0:
                extra.setdefault(p.from_cluster, []).append(
                    (p.word, (1.0 - weight) * p.occurrences_per_slice))
            if weight > 0.0:
                extra.setdefault(p.to_cluster, []).append(
                    (p.word, weight * p.occurrences_per_slice))

        # cluster per sentence; words Zipf-weighted within it, with planted
        # words folded into the host cluster's unigram distribution
        cluster_ids = rng.integers(0, n_clusters, size=spec.sentences_per_slice)
        lengths = np.maximum(3, rng.poisson(spec.sentence_length,
                                            size=spec.sentences_per_slice))
        word_buf: list[np.ndarray] = [None] * spec.sentences_per_slice  # type: ignore
        for c in range(n_clusters):
            which = np.nonzero(cluster_ids == c)[0]
            total = int(lengths[which].sum())
            words, probs = cluster_words[c], cluster_probs[c] * (1.0 - func_share)
            if func_words is not None:
                words = np.concatenate([words, func_words])
                probs = np.concatenate([probs, func_probs])
            if c in extra:
                share = np.array([cnt / total for _, cnt in extra[c]])
                if share.sum() >= 0.9:
                    raise DataError(f"planted occurrences overwhelm cluster {c}")
                words = np.concatenate([words, [w for w, _ in extra[c]]])
                probs = np.concatenate([probs * (1.0 - share.sum()), share])
            draws = rng.choice(words, size=total, p=probs)
            pos = 0
            for i in which:
                word_buf[i] = draws[pos:pos + lengths[i]]
                pos += lengths[i]
        for i in range(spec.sentences_per_slice):
            sentences.append(" ".join(word_buf[i]))

        order = rng.permutation(len(sentences))
        shuffled = [sentences[i] for i in order]
        for d, start in enumerate(range(0, len(shuffled), VERSES_PER_DOC)):
            poet = f"poet{d % spec.n_poets:02d}"
            docs.append(RawDocument(
                doc_id=f"s{s}d{d:04d}", poet_id=poet, century=century,
                text="\n".join(shuffled[start:start + VERSES_PER_DOC])))
    return docs


def save_truth(spec: SynthSpec, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(spec.to_json(), sort_keys=True), "utf-8")


def load_truth(path: str | Path) -> SynthSpec:
    return SynthSpec.from_json(json.loads(Path(path).read_text("utf-8")))


def score_recovery(spec: SynthSpec,
                   panel_metrics: Mapping[str, Mapping[str, float | None]]) -> dict:
    """Rank each planted word on its matching metric over the given panel.

    `panel_metrics` maps word -> {"drift": mean, "turnover": mean,
    "reallocation": mean}. Rewire words are ranked by turnover (descending),
    migrate by reallocation (descending), stable by drift (ascending).
    """
    metric_for = {"rewire": ("turnover", True), "migrate": ("reallocation", True),
                  "stable": ("drift", False)}
    report: dict = {"behaviors": {}, "panel_size": len(panel_metrics)}
    for behavior in BEHAVIORS:
        metric, descending = metric_for[behavior]
        words = [p.word for p in spec.planted if p.behavior == behavior]
        if not words:
            continue
        values = {w: m.get(metric) for w, m in panel_metrics.items()
                  if m.get(metric) is not None}
        ordered = sorted(values, key=lambda w: (-values[w] if descending else values[w], w))
        ranks = {w: (ordered.index(w) + 1 if w in values else None) for w in words}
        k = len(words)
        hits = sum(1 for w in words if ranks[w] is not None and ranks[w] <= k)
        report["behaviors"][behavior] = {
            "metric": metric,
            "ranks": ranks,
            "precision_at_k": hits / k,
            "median_value": (sorted(values.values())[len(values) // 2]
                             if values else None),
        }
    return report
