"""Lexical semantic change across corpus slices.

Per-slice skip-gram embeddings, orthogonal Procrustes alignment, mutual k-NN
semantic graphs, and change metrics that track neighborhood rewiring rather
than vector drift alone.
"""

__version__ = "0.1.0"

from .corpus import (BalancePlan, CorpusSlice, RawDocument, balance_slice,
                     build_slices, normalize_text, tokenize)
from .embed import (EmbeddingModel, TrainConfig, cosine, top_k_neighbors, train,
                    train_global_reference)
from .align import (AlignmentMap, align_to_reference, chain_consecutive,
                    procrustes, shared_anchors)
from .graph import (CommunityPartition, NodeRole, SemanticGraph, bridge_score,
                    build_mutual_knn, degree_centrality, detect_communities)
from .metrics import (AgreementCell, WordTrajectory, agreement_profile,
                      century_centered, community_reallocation, drift,
                      neighbor_turnover, reference_deviation, role_volatility)
from .poetcmp import (PoetPanel, PressureProfile, classify_pressure,
                      cosine_dispersion, double_center, overlap_dispersion,
                      poet_signal)
from .synth import PlantedWord, SynthSpec, generate, score_recovery

__all__ = [
    "__version__",
    "RawDocument", "CorpusSlice", "BalancePlan",
    "normalize_text", "tokenize", "build_slices", "balance_slice",
    "TrainConfig", "EmbeddingModel", "train", "train_global_reference",
    "cosine", "top_k_neighbors",
    "AlignmentMap", "shared_anchors", "procrustes", "chain_consecutive",
    "align_to_reference",
    "SemanticGraph", "CommunityPartition", "NodeRole", "build_mutual_knn",
    "detect_communities", "degree_centrality", "bridge_score",
    "WordTrajectory", "AgreementCell", "drift", "neighbor_turnover",
    "community_reallocation", "role_volatility", "reference_deviation",
    "agreement_profile", "century_centered",
    "PoetPanel", "PressureProfile", "cosine_dispersion", "overlap_dispersion",
    "double_center", "poet_signal", "classify_pressure",
    "SynthSpec", "PlantedWord", "generate", "score_recovery",
]
