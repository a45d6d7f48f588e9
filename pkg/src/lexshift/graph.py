"""Mutual k-NN semantic graphs, weighted greedy-modularity communities, node roles."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .embed import EmbeddingModel
from .errors import DataError

DEFAULT_K = 10
_KNN_CHUNK = 1024


@dataclass
class SemanticGraph:
    slice_id: str
    k: int
    nodes: list[str]  # lexicographically sorted
    adjacency: dict[str, dict[str, float]]

    def edges(self) -> list[tuple[str, str, float]]:
        out = []
        for a, nbrs in self.adjacency.items():
            for b, w in nbrs.items():
                if a < b:
                    out.append((a, b, w))
        out.sort()
        return out

    def degree(self, word: str) -> int:
        return len(self.adjacency[word])

    def weighted_degree(self, word: str) -> float:
        return sum(self.adjacency[word].values())


@dataclass
class CommunityPartition:
    slice_id: str
    assignment: dict[str, int]
    modularity: float

    def members(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {}
        for w, c in self.assignment.items():
            out.setdefault(c, set()).add(w)
        return out


@dataclass(frozen=True)
class NodeRole:
    word: str
    degree_centrality: float
    community: int
    bridge_score: float


def _topk_rows(units: np.ndarray, lex_rank: np.ndarray, k: int) -> list[np.ndarray]:
    """Top-k cosine neighbor indices per row, self excluded, lexicographic tie-break."""
    n = units.shape[0]
    result: list[np.ndarray] = []
    for start in range(0, n, _KNN_CHUNK):
        block = units[start:start + _KNN_CHUNK] @ units.T
        for r in range(block.shape[0]):
            sims = block[r]
            sims[start + r] = -np.inf  # exclude self
            order = np.lexsort((lex_rank, -sims))
            result.append(order[:min(k, n - 1)].copy())
    return result


def build_mutual_knn(model: EmbeddingModel, k: int = DEFAULT_K,
                     exclude: Iterable[str] = ()) -> SemanticGraph:
    """Graph with an edge only when each word is in the other's top-k neighborhood.

    Edge weight is the mean of the two directed cosines (equal for cosine);
    non-positive-cosine pairs are never edges.
    """
    if k < 1:
        raise DataError("k must be >= 1")
    excluded = set(exclude)
    nodes = sorted(w for w in model.vocab if w not in excluded)
    if not nodes:
        return SemanticGraph(model.slice_id, k, [], {})

    idx = [model.vocab[w] for w in nodes]
    units = model.unit_vectors[idx]
    lex_rank = np.arange(len(nodes))  # nodes already lexicographically sorted
    topk = _topk_rows(units, lex_rank, k)
    topk_sets = [set(t.tolist()) for t in topk]

    adjacency: dict[str, dict[str, float]] = {w: {} for w in nodes}
    for i, neighbors in enumerate(topk):
        for j in neighbors.tolist():
            if j <= i:
                continue
            if i in topk_sets[j]:
                cos_ij = float(units[i] @ units[j])
                cos_ji = float(units[j] @ units[i])
                weight = 0.5 * (cos_ij + cos_ji)
                if weight > 0:
                    adjacency[nodes[i]][nodes[j]] = weight
                    adjacency[nodes[j]][nodes[i]] = weight
    return SemanticGraph(model.slice_id, k, nodes, adjacency)


def detect_communities(graph: SemanticGraph) -> CommunityPartition:
    """Weighted greedy (CNM) modularity maximization, deterministic.

    Merge candidates are ordered by modularity gain with ties broken by the
    smallest community-id pair. Community ids are relabeled densely, ordered by
    each community's lexicographically smallest member.
    """
    nodes = graph.nodes
    n = len(nodes)
    if n == 0:
        return CommunityPartition(graph.slice_id, {}, 0.0)
    node_idx = {w: i for i, w in enumerate(nodes)}

    m = sum(w for a, b, w in graph.edges())
    if m == 0:
        assignment = {w: i for i, w in enumerate(nodes)}
        return CommunityPartition(graph.slice_id, assignment, 0.0)

    deg = [graph.weighted_degree(w) for w in nodes]
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    alive = [True] * n
    version = [0] * n
    pair_w: dict[tuple[int, int], float] = {}
    neighbors: dict[int, set[int]] = {i: set() for i in range(n)}
    for a, b, w in graph.edges():
        i, j = node_idx[a], node_idx[b]
        key = (i, j) if i < j else (j, i)
        pair_w[key] = w
        neighbors[i].add(j)
        neighbors[j].add(i)

    def gain(a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        return pair_w[key] / m - deg[a] * deg[b] / (2.0 * m * m)

    heap: list[tuple[float, int, int, int, int]] = []
    for (a, b) in pair_w:
        heapq.heappush(heap, (-gain(a, b), a, b, 0, 0))

    modularity = -sum((d / (2.0 * m)) ** 2 for d in deg)
    while heap:
        neg_dq, a, b, va, vb = heapq.heappop(heap)
        if not (alive[a] and alive[b]):
            continue
        if version[a] != va or version[b] != vb:
            continue
        dq = -neg_dq
        if dq <= 0:
            break
        # merge b into a (a < b by construction)
        modularity += dq
        alive[b] = False
        members[a].extend(members.pop(b))
        deg[a] += deg[b]
        version[a] += 1
        merged_nbrs = (neighbors[a] | neighbors.pop(b)) - {a, b}
        pair_w.pop((a, b), None)
        for c in merged_nbrs:
            w = 0.0
            for x in (a, b):
                key = (x, c) if x < c else (c, x)
                w += pair_w.pop(key, 0.0)
            key = (a, c) if a < c else (c, a)
            pair_w[key] = w
            neighbors[c].discard(b)
            neighbors[c].add(a)
            heapq.heappush(heap, (-gain(a, c), key[0], key[1],
                                  version[key[0]], version[key[1]]))
        neighbors[a] = merged_nbrs

    groups = sorted(members.values(), key=lambda g: min(nodes[i] for i in g))
    assignment: dict[str, int] = {}
    for cid, group in enumerate(groups):
        for i in group:
            assignment[nodes[i]] = cid
    return CommunityPartition(graph.slice_id, assignment, modularity)


def degree_centrality(graph: SemanticGraph, word: str) -> float:
    if word not in graph.adjacency:
        raise DataError(f"word {word!r} not in graph {graph.slice_id!r}")
    n = len(graph.nodes)
    if n <= 1:
        return 0.0
    return graph.degree(word) / (n - 1)


def bridge_score(graph: SemanticGraph, partition: CommunityPartition, word: str) -> float:
    """External weighted-degree share times normalized external-community diversity."""
    if word not in graph.adjacency:
        raise DataError(f"word {word!r} not in graph {graph.slice_id!r}")
    own = partition.assignment[word]
    total_communities = len(set(partition.assignment.values()))
    incident = graph.adjacency[word]
    total_w = sum(incident.values())
    if total_w == 0 or total_communities <= 1:
        return 0.0
    external_w = 0.0
    external_comms: set[int] = set()
    for nbr, w in incident.items():
        c = partition.assignment[nbr]
        if c != own:
            external_w += w
            external_comms.add(c)
    share = external_w / total_w
    diversity = len(external_comms) / (total_communities - 1)
    return share * diversity


def node_roles(graph: SemanticGraph, partition: CommunityPartition) -> dict[str, NodeRole]:
    return {
        w: NodeRole(word=w,
                    degree_centrality=degree_centrality(graph, w),
                    community=partition.assignment[w],
                    bridge_score=bridge_score(graph, partition, w))
        for w in graph.nodes
    }


# -- persistence -------------------------------------------------------------

def save_graph(graph: SemanticGraph, partition: CommunityPartition,
               roles: dict[str, NodeRole], prefix: str | Path) -> None:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{prefix}.edges.tsv", "w", encoding="utf-8") as fh:
        for a, b, w in graph.edges():
            fh.write(f"{a}\t{b}\t{w!r}\n")
    payload = {
        "slice_id": graph.slice_id,
        "k": graph.k,
        "nodes": graph.nodes,
        "modularity": partition.modularity,
        "roles": {
            w: {"degree_centrality": r.degree_centrality,
                "community": r.community,
                "bridge_score": r.bridge_score}
            for w, r in roles.items()
        },
    }
    Path(f"{prefix}.roles.json").write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True), "utf-8")


def load_graph(prefix: str | Path) -> tuple[SemanticGraph, CommunityPartition,
                                            dict[str, NodeRole]]:
    prefix = Path(prefix)
    payload = json.loads(Path(f"{prefix}.roles.json").read_text("utf-8"))
    adjacency: dict[str, dict[str, float]] = {w: {} for w in payload["nodes"]}
    with open(f"{prefix}.edges.tsv", encoding="utf-8") as fh:
        for line in fh:
            a, b, w = line.rstrip("\n").split("\t")
            adjacency[a][b] = float(w)
            adjacency[b][a] = float(w)
    graph = SemanticGraph(payload["slice_id"], payload["k"], payload["nodes"], adjacency)
    assignment = {w: r["community"] for w, r in payload["roles"].items()}
    partition = CommunityPartition(payload["slice_id"], assignment, payload["modularity"])
    roles = {
        w: NodeRole(w, r["degree_centrality"], r["community"], r["bridge_score"])
        for w, r in payload["roles"].items()
    }
    return graph, partition, roles
