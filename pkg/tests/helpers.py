"""Shared construction helpers for the test suite."""

from __future__ import annotations

import numpy as np

from dpp_rerank.kernel import Candidate, CandidateSet


def make_set(
    embeddings,
    scores,
    qid: str = "q1",
    query: str = "test query",
    pids: list[str] | None = None,
    texts: list[str] | None = None,
) -> CandidateSet:
    embeddings = np.asarray(embeddings, dtype=float)
    n = embeddings.shape[0]
    pids = pids or [f"p{i}" for i in range(n)]
    candidates = tuple(
        Candidate(
            pid=pids[i],
            embedding=embeddings[i],
            raw_score=scores[i],
            text=texts[i] if texts is not None else None,
        )
        for i in range(n)
    )
    return CandidateSet(qid=qid, query=query, candidates=candidates)


def worked_example_set(qid: str = "wq1") -> CandidateSet:
    """Three passages whose pipeline kernel (floor 0.8, ridge 0) is the
    near-duplicate-pair-plus-diverse-third matrix used across the tests:
    L = [[1, 0.98, 0.4], [0.98, 1, 0.4], [0.4, 0.4, 0.64]].
    """
    embeddings = [
        [1.0, 0.0, 0.0],
        [0.96, 0.28, 0.0],  # cos with p0 = 0.96 -> affine 0.98
        [0.0, 0.0, 1.0],    # orthogonal to both -> affine 0.5
    ]
    scores = [10.0, 10.0, 1.0]  # min-max [1, 1, 0] -> floor 0.8 gives q = [1, 1, 0.8]
    texts = ["alpha passage one", "alpha passage two", "gamma passage"]
    return make_set(embeddings, scores, qid=qid, texts=texts)
