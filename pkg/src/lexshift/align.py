"""Orthogonal Procrustes alignment between embedding models.

Maps are fitted on row-unit-normalized anchor matrices and applied to the raw
vectors, so frequency-related norm information survives alignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embed import EmbeddingModel
from .errors import AlignmentError

ORTHOGONALITY_TOL = 1e-6


@dataclass
class AlignmentMap:
    source_slice: str
    target_slice: str
    transform: np.ndarray  # dim x dim, orthogonal
    anchors: list[str]
    residual: float

    def apply(self, model: EmbeddingModel) -> EmbeddingModel:
        return model.with_vectors(model.vectors @ self.transform.astype(model.vectors.dtype))

    def to_json(self) -> dict:
        return {
            "source_slice": self.source_slice,
            "target_slice": self.target_slice,
            "anchor_count": len(self.anchors),
            "anchors": self.anchors,
            "residual": self.residual,
            "transform": [[float(x) for x in row] for row in self.transform],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AlignmentMap":
        return cls(source_slice=data["source_slice"], target_slice=data["target_slice"],
                   transform=np.array(data["transform"], dtype=np.float64),
                   anchors=list(data["anchors"]), residual=float(data["residual"]))


def shared_anchors(a: EmbeddingModel, b: EmbeddingModel,
                   stoplist: Iterable[str] = ()) -> list[str]:
    """Sorted vocabulary intersection minus the stoplist; must cover the dimension."""
    anchors = sorted((set(a.vocab) & set(b.vocab)) - set(stoplist))
    dim = a.vectors.shape[1]
    if len(anchors) < dim:
        raise AlignmentError(
            f"too few anchors between {a.slice_id!r} and {b.slice_id!r}: "
            f"{len(anchors)} < dim {dim}")
    return anchors


def _unit_rows(model: EmbeddingModel, anchors: Sequence[str]) -> np.ndarray:
    idx = [model.vocab[w] for w in anchors]
    mat = model.vectors[idx].astype(np.float64)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


def procrustes(source: EmbeddingModel, target: EmbeddingModel,
               anchors: Sequence[str]) -> AlignmentMap:
    """Fit the orthogonal map minimizing ||X W - Y||_F over the anchor rows."""
    dim = source.vectors.shape[1]
    if len(anchors) < dim:
        raise AlignmentError(
            f"underdetermined fit {source.slice_id!r} -> {target.slice_id!r}: "
            f"{len(anchors)} anchors < dim {dim}")
    x = _unit_rows(source, anchors)
    y = _unit_rows(target, anchors)
    m = x.T @ y
    u, s, vt = np.linalg.svd(m)
    if s[-1] < 1e-12 * max(1.0, s[0]):
        raise AlignmentError(
            f"degenerate anchor matrix for {source.slice_id!r} -> {target.slice_id!r}")
    w = u @ vt
    residual = float(np.linalg.norm(x @ w - y))
    return AlignmentMap(source.slice_id, target.slice_id, w, list(anchors), residual)


def align_to_reference(model: EmbeddingModel, reference: EmbeddingModel,
                       stoplist: Iterable[str] = ()) -> AlignmentMap:
    return procrustes(model, reference, shared_anchors(model, reference, stoplist))


def chain_consecutive(models: Sequence[EmbeddingModel],
                      stoplist: Iterable[str] = (),
                      ) -> tuple[list[EmbeddingModel], list[AlignmentMap]]:
    """Align each model into its predecessor's already-aligned space.

    The first model is copied untransformed. Returns the aligned models and the
    accumulated map fitted for each subsequent model.
    """
    if not models:
        raise AlignmentError("no models to chain")
    aligned = [models[0].with_vectors(models[0].vectors.copy())]
    maps: list[AlignmentMap] = []
    for prev_aligned, current in zip(aligned, models[1:]):
        try:
            amap = procrustes(current, prev_aligned,
                              shared_anchors(current, prev_aligned, stoplist))
        except AlignmentError as exc:
            raise AlignmentError(
                f"chain failed at pair ({current.slice_id!r}, "
                f"{prev_aligned.slice_id!r}): {exc}") from exc
        aligned.append(amap.apply(current))
        maps.append(amap)
    return aligned, maps


def chain_to_reference(models: Sequence[EmbeddingModel], reference: EmbeddingModel,
                       stoplist: Iterable[str] = (),
                       ) -> tuple[list[EmbeddingModel], list[AlignmentMap]]:
    """Reference-chained mode: every model aligned directly to the global reference."""
    aligned = []
    maps = []
    for model in models:
        amap = align_to_reference(model, reference, stoplist)
        aligned.append(amap.apply(model))
        maps.append(amap)
    return aligned, maps


def check_orthogonality(amap: AlignmentMap, tol: float = ORTHOGONALITY_TOL) -> float:
    """Max absolute deviation of W^T W from the identity."""
    w = amap.transform
    dev = float(np.max(np.abs(w.T @ w - np.eye(w.shape[0]))))
    if dev >= tol:
        raise AlignmentError(
            f"non-orthogonal transform {amap.source_slice!r} -> "
            f"{amap.target_slice!r}: deviation {dev:.3e}")
    return dev


def save_map(amap: AlignmentMap, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(amap.to_json(), ensure_ascii=False, sort_keys=True), "utf-8")


def load_map(path: str | Path) -> AlignmentMap:
    return AlignmentMap.from_json(json.loads(Path(path).read_text("utf-8")))
