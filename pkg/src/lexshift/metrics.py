"""Per-word, per-transition change measures and the agreement profile."""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import median
from typing import Iterable, Mapping, Sequence

from .embed import EmbeddingModel, cosine, top_k_neighbors
from .errors import DataError, OOVError
from .graph import CommunityPartition, NodeRole, SemanticGraph

AGREEMENT_CLASSES = ("stable_usage", "local_fluctuation", "robust_change",
                     "settled_departure")


@dataclass
class TransitionMetrics:
    from_slice: str
    to_slice: str
    drift: float | None = None
    turnover: float | None = None
    reallocation: float | None = None
    role_volatility: float | None = None


@dataclass
class WordTrajectory:
    word: str
    transitions: list[TransitionMetrics] = field(default_factory=list)
    per_slice: list[dict] = field(default_factory=list)
    flags: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class AgreementCell:
    word: str
    slice_id: str
    local_drift: float
    reference_deviation: float
    agreement_class: str


def drift(word: str, aligned_prev: EmbeddingModel, aligned_next: EmbeddingModel) -> float:
    """1 - cosine between a word's vectors in two already-aligned slices.

    Values in (1, 2] occur when the aligned vectors have negative cosine; they
    are reported as-is, never clamped.
    """
    return 1.0 - cosine(aligned_prev.vector(word), aligned_next.vector(word))


def neighbor_turnover(word: str, model_a: EmbeddingModel, model_b: EmbeddingModel,
                      k: int = 10, exclude: Iterable[str] = ()) -> float:
    """1 - top-k neighborhood overlap fraction. Uses within-model cosines only."""
    exclude = set(exclude)
    top_a = {w for w, _ in top_k_neighbors(model_a, word, k, exclude)}
    top_b = {w for w, _ in top_k_neighbors(model_b, word, k, exclude)}
    return 1.0 - len(top_a & top_b) / k


def community_reallocation(word: str,
                           part_a: CommunityPartition, part_b: CommunityPartition,
                           shared_vocab: set[str]) -> float:
    """1 - Jaccard overlap of the word's community memberships, restricted to
    the shared vocabulary of the two graphs; the query word itself is removed."""
    if word not in part_a.assignment or word not in part_b.assignment:
        raise DataError(f"word {word!r} unassigned in one of the partitions")
    members_a = {w for w, c in part_a.assignment.items()
                 if c == part_a.assignment[word]} - {word}
    members_b = {w for w, c in part_b.assignment.items()
                 if c == part_b.assignment[word]} - {word}
    sa = members_a & shared_vocab
    sb = members_b & shared_vocab
    union = sa | sb
    if not union:
        return 0.0
    return 1.0 - len(sa & sb) / len(union)


def role_volatility(reallocation: float,
                    delta_centrality: float, delta_bridge: float,
                    max_delta_centrality: float, max_delta_bridge: float) -> float:
    """Mean of graded reallocation and panel-normalized |delta| of centrality
    and bridge score; components with a zero panel max contribute 0."""
    c_term = abs(delta_centrality) / max_delta_centrality if max_delta_centrality > 0 else 0.0
    b_term = abs(delta_bridge) / max_delta_bridge if max_delta_bridge > 0 else 0.0
    return (reallocation + c_term + b_term) / 3.0


def reference_deviation(word: str, aligned_century_model: EmbeddingModel,
                        reference_model: EmbeddingModel) -> float:
    """1 - cosine between the reference-aligned century vector and the reference vector."""
    return 1.0 - cosine(aligned_century_model.vector(word), reference_model.vector(word))


def century_centered(values: Mapping[str, float]) -> dict[str, float]:
    """Center one slice's per-word values on the panel mean for that slice."""
    if not values:
        raise DataError("no values to center")
    mean = sum(values.values()) / len(values)
    return {w: v - mean for w, v in values.items()}


def _classify(high_drift: bool, high_dev: bool) -> str:
    if high_drift and high_dev:
        return "robust_change"
    if high_drift:
        return "local_fluctuation"
    if high_dev:
        return "settled_departure"
    return "stable_usage"


def agreement_profile(cells: Sequence[tuple[str, str, float, float]]
                      ) -> list[AgreementCell]:
    """Four-class profile by median splits of local drift and reference deviation.

    Cells are (word, resulting slice, local_drift, reference_deviation). "High"
    means strictly above the full-panel median; boundary cells are low.
    """
    if not cells:
        return []
    drift_median = median(c[2] for c in cells)
    dev_median = median(c[3] for c in cells)
    return [
        AgreementCell(word, slice_id, d, dev,
                      _classify(d > drift_median, dev > dev_median))
        for word, slice_id, d, dev in cells
    ]


def minmax_normalize(values: Mapping[str, float]) -> dict[str, float]:
    """Panel min-max normalization; degenerate (constant) panels map to 0."""
    if not values:
        return {}
    lo = min(values.values())
    hi = max(values.values())
    if hi == lo:
        return {w: 0.0 for w in values}
    return {w: (v - lo) / (hi - lo) for w, v in values.items()}


# -- panel orchestration -----------------------------------------------------

def compute_panel(panel: Sequence[str],
                  slice_ids: Sequence[str],
                  aligned_models: Sequence[EmbeddingModel],
                  graphs: Sequence[SemanticGraph],
                  partitions: Sequence[CommunityPartition],
                  roles: Sequence[Mapping[str, NodeRole]],
                  k: int = 10,
                  exclude: Iterable[str] = (),
                  reference: EmbeddingModel | None = None,
                  ref_aligned: Sequence[EmbeddingModel] | None = None,
                  sparse_slices: Iterable[str] = (),
                  ) -> list[WordTrajectory]:
    """Assemble trajectories for a word panel over century-ordered slices.

    `aligned_models` are the chain-aligned century models; `ref_aligned`, when
    given, are the same century models aligned to the global `reference` and
    feed the reference-deviation column.
    """
    exclude = set(exclude)
    sparse = set(sparse_slices)
    n = len(slice_ids)
    trajectories = {w: WordTrajectory(word=w) for w in panel}

    # per-transition raw measures, panel normalizers computed before volatility
    for t in range(n - 1):
        prev_m, next_m = aligned_models[t], aligned_models[t + 1]
        shared_nodes = set(graphs[t].nodes) & set(graphs[t + 1].nodes)
        raw: dict[str, TransitionMetrics] = {}
        deltas: dict[str, tuple[float, float]] = {}
        for w in panel:
            tm = TransitionMetrics(slice_ids[t], slice_ids[t + 1])
            if w in prev_m and w in next_m:
                tm.drift = drift(w, prev_m, next_m)
                tm.turnover = neighbor_turnover(w, prev_m, next_m, k, exclude)
            else:
                trajectories[w].flags.add("oov-gap")
            if w in partitions[t].assignment and w in partitions[t + 1].assignment:
                tm.reallocation = community_reallocation(
                    w, partitions[t], partitions[t + 1], shared_nodes)
                deltas[w] = (
                    roles[t + 1][w].degree_centrality - roles[t][w].degree_centrality,
                    roles[t + 1][w].bridge_score - roles[t][w].bridge_score)
            raw[w] = tm
        max_dc = max((abs(d[0]) for d in deltas.values()), default=0.0)
        max_db = max((abs(d[1]) for d in deltas.values()), default=0.0)
        for w, tm in raw.items():
            if tm.reallocation is not None:
                dc, db = deltas[w]
                tm.role_volatility = role_volatility(tm.reallocation, dc, db,
                                                     max_dc, max_db)
            trajectories[w].transitions.append(tm)

    # per-slice roles and reference deviation
    for i, sid in enumerate(slice_ids):
        centrality = {w: roles[i][w].degree_centrality
                      for w in panel if w in roles[i]}
        bridge = {w: roles[i][w].bridge_score for w in panel if w in roles[i]}
        centered_c = century_centered(centrality) if centrality else {}
        centered_b = century_centered(bridge) if bridge else {}
        for w in panel:
            entry: dict = {"slice": sid}
            if w in centrality:
                entry["centrality"] = centrality[w]
                entry["bridge"] = bridge[w]
                entry["community"] = roles[i][w].community
                entry["centered_centrality"] = centered_c[w]
                entry["centered_bridge"] = centered_b[w]
            if reference is not None and ref_aligned is not None:
                model = ref_aligned[i]
                if w in model and w in reference:
                    entry["reference_deviation"] = reference_deviation(w, model, reference)
            trajectories[w].per_slice.append(entry)
            if sid in sparse:
                trajectories[w].flags.add("sparse-caution")

    return [trajectories[w] for w in panel]


def century_signal(trajectories: Sequence[WordTrajectory]) -> dict[str, float | None]:
    """Composite century-side signal: per transition, the mean of min-max
    panel-normalized drift, turnover, and role volatility; then the mean over
    each word's valid transitions."""
    if not trajectories:
        return {}
    n_transitions = max(len(t.transitions) for t in trajectories)
    per_word_scores: dict[str, list[float]] = {t.word: [] for t in trajectories}
    for i in range(n_transitions):
        drifts, turns, vols = {}, {}, {}
        for t in trajectories:
            tm = t.transitions[i]
            if tm.drift is not None and tm.turnover is not None \
                    and tm.role_volatility is not None:
                drifts[t.word] = tm.drift
                turns[t.word] = tm.turnover
                vols[t.word] = tm.role_volatility
        nd = minmax_normalize(drifts)
        nt = minmax_normalize(turns)
        nv = minmax_normalize(vols)
        for w in nd:
            per_word_scores[w].append((nd[w] + nt[w] + nv[w]) / 3.0)
    return {
        w: (sum(scores) / len(scores) if scores else None)
        for w, scores in per_word_scores.items()
    }


def agreement_cells_from_trajectories(trajectories: Sequence[WordTrajectory]
                                      ) -> list[AgreementCell]:
    """Pair each adjacent drift with the reference deviation of its resulting
    century and classify by median splits."""
    cells = []
    for t in trajectories:
        dev_by_slice = {e["slice"]: e.get("reference_deviation")
                        for e in t.per_slice}
        for tm in t.transitions:
            dev = dev_by_slice.get(tm.to_slice)
            if tm.drift is not None and dev is not None:
                cells.append((t.word, tm.to_slice, tm.drift, dev))
    return agreement_profile(cells)
