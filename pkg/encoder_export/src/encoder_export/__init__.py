"""Produce inputs for the re-ranker: embeddings, relevance scores, gold files."""

from .backends import (
    DEFAULT_BI_ENCODER,
    DEFAULT_CROSS_ENCODER,
    HashingBiEncoder,
    TokenOverlapCrossEncoder,
    load_bi_encoder,
    load_cross_encoder,
)
from .bundles import RawPassage, RawQueryBundle, load_bundles
from .errors import ExportError
from .export import embed_passages, export_candidates, run_export, score_pairs
from .gold import convert_gold, read_records

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BI_ENCODER",
    "DEFAULT_CROSS_ENCODER",
    "ExportError",
    "HashingBiEncoder",
    "RawPassage",
    "RawQueryBundle",
    "TokenOverlapCrossEncoder",
    "convert_gold",
    "embed_passages",
    "export_candidates",
    "load_bi_encoder",
    "load_bundles",
    "load_cross_encoder",
    "read_records",
    "run_export",
    "score_pairs",
]
