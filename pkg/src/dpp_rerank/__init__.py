"""Diversity-aware passage re-ranking with a determinantal point process kernel.

The package re-ranks retrieval candidates so that the selected passages are
both query-relevant and mutually diverse, and evaluates selections against
multi-answer gold data with mrecall@k and recall@k.
"""

from .errors import InputError, NonPSDKernelError
from .evaluation import (
    EvalReport,
    GoldEntry,
    aggregate,
    answer_covered,
    count_covered,
    mrecall_at_k,
    normalize_text,
    qrr_rank,
    recall_at_k,
)
from .kernel import (
    Candidate,
    CandidateSet,
    LEnsemble,
    QualityVector,
    SimilarityMatrix,
    build_l_ensemble,
    normalize_quality,
    similarity_matrix,
)
from .map_inference import (
    GreedyState,
    Ranking,
    SelectedItem,
    StopReason,
    exhaustive_map_oracle,
    greedy_map,
    naive_greedy_oracle,
    subset_log_prob,
)
from .pipeline import RerankConfig, evaluate_command, rerank_command, rerank_set
from .selfcheck import run_selfcheck

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "CandidateSet",
    "EvalReport",
    "GoldEntry",
    "GreedyState",
    "InputError",
    "LEnsemble",
    "NonPSDKernelError",
    "QualityVector",
    "Ranking",
    "RerankConfig",
    "SelectedItem",
    "SimilarityMatrix",
    "StopReason",
    "aggregate",
    "answer_covered",
    "build_l_ensemble",
    "count_covered",
    "evaluate_command",
    "exhaustive_map_oracle",
    "greedy_map",
    "mrecall_at_k",
    "naive_greedy_oracle",
    "normalize_quality",
    "normalize_text",
    "qrr_rank",
    "recall_at_k",
    "rerank_command",
    "rerank_set",
    "run_selfcheck",
    "similarity_matrix",
    "subset_log_prob",
]
