"""Embed passages, score query-passage pairs, and write candidates files.

The output is the re-ranker's JSONL candidates format, one query per line:

    {"qid": ..., "query": ..., "passages": [{"pid", "text", "embedding", "score"}]}

A ``#``-prefixed header records the models that produced the numbers. Writes
are atomic (temp file then rename) so a crashed export never leaves a
half-written file behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Mapping, Sequence

import numpy as np

from .backends import load_bi_encoder, load_cross_encoder, pooling_for
from .bundles import RawQueryBundle
from .errors import ExportError

DEFAULT_BATCH_SIZE = 32


def _batched(items: Sequence, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def embed_passages(
    bundles: Iterable[RawQueryBundle],
    model_id: str,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> dict[str, np.ndarray]:
    """One embedding per distinct pid across all bundles.

    A pid that appears for several queries is embedded once; conflicting
    texts under one pid are rejected. Empty passage text is rejected with
    the offending pid.
    """
    if batch_size < 1:
        raise ExportError(f"batch size must be positive, got {batch_size}")
    texts: dict[str, str] = {}
    for bundle in bundles:
        for passage in bundle.passages:
            if not passage.text.strip():
                raise ExportError(f"empty passage text for pid {passage.pid!r}")
            full = passage.full_text()
            if passage.pid in texts and texts[passage.pid] != full:
                raise ExportError(f"pid {passage.pid!r} has conflicting texts across bundles")
            texts[passage.pid] = full
    encoder = load_bi_encoder(model_id)
    pids = list(texts)
    embeddings: dict[str, np.ndarray] = {}
    for batch in _batched(pids, batch_size):
        vectors = np.asarray(encoder.encode([texts[pid] for pid in batch]), dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(batch):
            raise ExportError(f"encoder {model_id!r} returned shape {vectors.shape} for {len(batch)} texts")
        for pid, vector in zip(batch, vectors):
            if not np.isfinite(vector).all():
                raise ExportError(f"encoder produced non-finite embedding for pid {pid!r}")
            embeddings[pid] = vector
    return embeddings


def score_pairs(
    bundles: Iterable[RawQueryBundle],
    model_id: str,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> dict[tuple[str, str], float]:
    """One relevance score per (qid, pid) pair, in bundle order."""
    if batch_size < 1:
        raise ExportError(f"batch size must be positive, got {batch_size}")
    keys: list[tuple[str, str]] = []
    pairs: list[tuple[str, str]] = []
    for bundle in bundles:
        if not bundle.query.strip():
            raise ExportError(f"bundle {bundle.qid!r} has an empty query")
        for passage in bundle.passages:
            keys.append((bundle.qid, passage.pid))
            pairs.append((bundle.query, passage.full_text()))
    scorer = load_cross_encoder(model_id)
    scores: dict[tuple[str, str], float] = {}
    for start in range(0, len(pairs), batch_size):
        batch_keys = keys[start : start + batch_size]
        batch_scores = scorer.predict(pairs[start : start + batch_size])
        if len(batch_scores) != len(batch_keys):
            raise ExportError(f"scorer {model_id!r} returned {len(batch_scores)} scores for {len(batch_keys)} pairs")
        for key, score in zip(batch_keys, batch_scores):
            score = float(score)
            if not np.isfinite(score):
                raise ExportError(f"scorer produced non-finite score for pair {key}")
            scores[key] = score
    return scores


def export_candidates(
    bundles: Sequence[RawQueryBundle],
    embeddings: Mapping[str, np.ndarray],
    scores: Mapping[tuple[str, str], float],
    path: str,
    header_comments: Sequence[str] = (),
):
    """Write the candidates file; every bundle passage must have an embedding and a score."""
    dims = {np.asarray(v).shape for v in embeddings.values()}
    if len(dims) > 1:
        raise ExportError(f"embeddings disagree on dimension: {sorted(dims)}")
    records = []
    for bundle in bundles:
        passages = []
        for passage in bundle.passages:
            if passage.pid not in embeddings:
                raise ExportError(f"no embedding for pid {passage.pid!r} (qid {bundle.qid!r})")
            if (bundle.qid, passage.pid) not in scores:
                raise ExportError(f"no score for pair ({bundle.qid!r}, {passage.pid!r})")
            passages.append(
                {
                    "pid": passage.pid,
                    "text": passage.full_text(),
                    "embedding": np.asarray(embeddings[passage.pid], dtype=np.float64).tolist(),
                    "score": scores[(bundle.qid, passage.pid)],
                }
            )
        records.append({"qid": bundle.qid, "query": bundle.query, "passages": passages})

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".export-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for comment in header_comments:
                fh.write(f"# {comment}\n")
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def run_export(
    queries_path: str,
    passages_path: str,
    bi_encoder: str,
    cross_encoder: str,
    out_path: str,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> int:
    """Full export: load bundles, embed, score, write. Returns the query count."""
    from .bundles import load_bundles

    bundles = load_bundles(queries_path, passages_path)
    embeddings = embed_passages(bundles, bi_encoder, batch_size)
    scores = score_pairs(bundles, cross_encoder, batch_size)
    dim = len(next(iter(embeddings.values()))) if embeddings else 0
    header = [
        f"bi-encoder={bi_encoder} pooling={pooling_for(bi_encoder)} dim={dim}",
        f"cross-encoder={cross_encoder}",
    ]
    export_candidates(bundles, embeddings, scores, out_path, header_comments=header)
    return len(bundles)
