"""Poet-axis analysis: dispersions, double-centered poet similarity, pressure classes."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embed import EmbeddingModel, cosine, top_k_neighbors
from .errors import DataError
from .metrics import minmax_normalize

DEFAULT_PRESSURE_LO = 0.45
DEFAULT_PRESSURE_HI = 0.55


@dataclass
class PoetPanel:
    """Poet models in the common reference space, with eligibility by token support."""
    token_counts: dict[str, int]
    models: dict[str, EmbeddingModel]  # poet_id -> reference-aligned model
    eligibility_threshold: int = 100_000

    @property
    def eligible(self) -> list[str]:
        return sorted(p for p, n in self.token_counts.items()
                      if n >= self.eligibility_threshold and p in self.models)

    @property
    def poets(self) -> list[str]:
        return sorted(self.models)


@dataclass(frozen=True)
class PressureProfile:
    word: str
    century_signal: float
    poet_signal: float
    ratio: float
    pressure_class: str  # time_sensitive | poet_sensitive | mixed
    caution: bool


def _eligible_pairs(word: str, panel: PoetPanel) -> list[tuple[str, str]]:
    carriers = [p for p in panel.eligible if word in panel.models[p]]
    return list(combinations(carriers, 2))


def cosine_dispersion(word: str, panel: PoetPanel) -> float | None:
    """Mean (1 - cosine) over eligible poet pairs carrying the word, in the
    common reference space. None (caution) with fewer than two carriers."""
    pairs = _eligible_pairs(word, panel)
    if not pairs:
        return None
    vals = [1.0 - cosine(panel.models[a].vector(word), panel.models[b].vector(word))
            for a, b in pairs]
    return sum(vals) / len(vals)


def overlap_dispersion(word: str, panel: PoetPanel, k: int = 10,
                       exclude: Iterable[str] = ()) -> float | None:
    """Mean (1 - top-k overlap fraction) over eligible poet pairs; neighborhoods
    are taken within each poet's own model."""
    pairs = _eligible_pairs(word, panel)
    if not pairs:
        return None
    exclude = set(exclude)
    tops = {}
    for p in {p for pair in pairs for p in pair}:
        tops[p] = {w for w, _ in top_k_neighbors(panel.models[p], word, k, exclude)}
    vals = [1.0 - len(tops[a] & tops[b]) / k for a, b in pairs]
    return sum(vals) / len(vals)


def poet_similarity_matrix(panel: PoetPanel, stoplist: Iterable[str] = ()
                           ) -> tuple[list[str], np.ndarray]:
    """Mean pairwise cosine over each poet pair's shared vocabulary (all poets,
    including ineligible ones, for descriptive comparison)."""
    poets = panel.poets
    stop = set(stoplist)
    n = len(poets)
    mat = np.eye(n)
    for i, j in combinations(range(n), 2):
        a, b = panel.models[poets[i]], panel.models[poets[j]]
        shared = sorted((set(a.vocab) & set(b.vocab)) - stop)
        if not shared:
            raise DataError(f"poets {poets[i]!r} and {poets[j]!r} share no vocabulary")
        ua = a.unit_vectors[[a.vocab[w] for w in shared]]
        ub = b.unit_vectors[[b.vocab[w] for w in shared]]
        mat[i, j] = mat[j, i] = float(np.mean(np.sum(ua * ub, axis=1)))
    return poets, mat


def double_center(matrix: np.ndarray) -> np.ndarray:
    """Subtract row and column means, add back the grand mean. Rows and columns
    of the result sum to zero."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataError("double centering needs a square matrix")
    row = matrix.mean(axis=1, keepdims=True)
    col = matrix.mean(axis=0, keepdims=True)
    grand = matrix.mean()
    return matrix - row - col + grand


def poet_signal(dispersions: Mapping[str, tuple[float | None, float | None]]
                ) -> dict[str, float | None]:
    """Composite poet-side signal: mean of min-max panel-normalized cosine and
    overlap dispersions. Words with undefined dispersions stay undefined."""
    cos_vals = {w: d[0] for w, d in dispersions.items() if d[0] is not None}
    ovl_vals = {w: d[1] for w, d in dispersions.items() if d[1] is not None}
    nc = minmax_normalize(cos_vals)
    no = minmax_normalize(ovl_vals)
    return {
        w: ((nc[w] + no[w]) / 2.0 if w in nc and w in no else None)
        for w in dispersions
    }


def classify_pressure(word: str, century_signal: float, poet_signal: float,
                      lo: float = DEFAULT_PRESSURE_LO,
                      hi: float = DEFAULT_PRESSURE_HI,
                      caution: bool = False) -> PressureProfile:
    """Ratio-based time/poet/mixed classification; scale-invariant by design."""
    total = century_signal + poet_signal
    if total == 0:
        return PressureProfile(word, century_signal, poet_signal, 0.5, "mixed", True)
    ratio = poet_signal / total
    if ratio > hi:
        cls = "poet_sensitive"
    elif ratio < lo:
        cls = "time_sensitive"
    else:
        cls = "mixed"
    return PressureProfile(word, century_signal, poet_signal, ratio, cls, caution)
