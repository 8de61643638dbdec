"""End-to-end rerank and evaluate pipelines over the file formats.

Queries are independent: re-ranking one candidate set reads only immutable
inputs, so distinct queries may safely run on concurrent threads. Output
order always follows input file order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .errors import InputError
from .evaluation import (
    EvalReport,
    QuestionResult,
    aggregate,
    count_covered,
    qrr_rank,
)
from .formats import parse_candidates, parse_gold, parse_run, write_run
from .kernel import (
    DEFAULT_QUALITY_FLOOR,
    CandidateSet,
    build_l_ensemble,
    default_ridge,
    normalize_quality,
    similarity_matrix,
)
from .map_inference import Ranking, greedy_map

logger = logging.getLogger(__name__)

RERANK_MODES = ("dpp", "qrr")


@dataclass(frozen=True)
class RerankConfig:
    """Parameters of one rerank invocation; ridge=None picks the transform default."""

    mode: str = "dpp"
    k: int = 5
    transform: str = "affine"
    floor: float = DEFAULT_QUALITY_FLOOR
    ridge: float | None = None

    def __post_init__(self):
        if self.mode not in RERANK_MODES:
            raise InputError(f"unknown mode {self.mode!r}; expected one of {RERANK_MODES}")
        if self.k < 1:
            raise InputError(f"k must be positive, got {self.k}")

    @property
    def effective_ridge(self) -> float:
        return default_ridge(self.transform) if self.ridge is None else self.ridge


def rerank_set(cset: CandidateSet, config: RerankConfig) -> Ranking:
    """Re-rank one candidate set; k larger than the set is truncated with a warning."""
    k = config.k
    if k > cset.n:
        logger.warning(
            "qid %s has only %d candidates; truncating k from %d", cset.qid, cset.n, k
        )
        k = cset.n
    if config.mode == "qrr":
        return qrr_rank(cset, k, floor=config.floor)
    sim = similarity_matrix(cset, transform=config.transform)
    quality = normalize_quality(cset, floor=config.floor)
    kernel = build_l_ensemble(sim, quality, ridge=config.effective_ridge)
    return greedy_map(kernel, cset.pids, k, qid=cset.qid)


def rerank_command(candidates_path: str, output_path: str, config: RerankConfig) -> list[Ranking]:
    """Parse candidates, re-rank every query, write a run file tagged with the mode."""
    sets = parse_candidates(candidates_path)
    rankings = [rerank_set(cset, config) for cset in sets]
    write_run(output_path, rankings, tag=config.mode)
    return rankings


def evaluate_command(
    run_path: str,
    gold_path: str,
    candidates_path: str,
    cutoffs: Sequence[int],
    word_boundary: bool = False,
) -> EvalReport:
    """Score a run file against gold answers at the given cutoffs.

    Passage texts are resolved through the candidates file. Gold questions
    missing from the run count as failures and are listed in one warning.
    """
    cutoffs = list(dict.fromkeys(int(k) for k in cutoffs))
    for k in cutoffs:
        if k < 1:
            raise InputError(f"cutoffs must be positive, got {k}")
    run = parse_run(run_path)
    gold_entries = parse_gold(gold_path)
    texts: dict[str, dict[str, str | None]] = {}
    for cset in parse_candidates(candidates_path):
        texts[cset.qid] = {c.pid: c.text for c in cset.candidates}

    missing = [g.qid for g in gold_entries if g.qid not in run]
    if missing:
        logger.warning(
            "%d gold question(s) missing from the run file count as failures: %s",
            len(missing),
            ", ".join(missing),
        )

    results: list[QuestionResult] = []
    for gold in gold_entries:
        if gold.qid not in run:
            for k in cutoffs:
                results.append(
                    QuestionResult(
                        qid=gold.qid, k=k, n=gold.n, covered=0,
                        mrecall_success=False, recall_success=False, in_run=False,
                    )
                )
            continue
        lines = run[gold.qid]
        qid_texts = texts.get(gold.qid, {})
        passages: list[str] = []
        for line in lines:
            if line.pid not in qid_texts:
                raise InputError(
                    f"run pid {line.pid!r} for qid {gold.qid!r} is absent from the candidates file"
                )
            text = qid_texts[line.pid]
            if text is None:
                raise InputError(
                    f"candidate pid {line.pid!r} for qid {gold.qid!r} has no passage text"
                )
            passages.append(text)
        for k in cutoffs:
            covered = count_covered(gold, passages[:k], word_boundary)
            results.append(
                QuestionResult(
                    qid=gold.qid, k=k, n=gold.n, covered=covered,
                    mrecall_success=covered >= min(gold.n, k),
                    recall_success=covered >= 1,
                )
            )
    return aggregate(results, cutoffs, question_count=len(gold_entries))


def render_report(report: EvalReport) -> str:
    """Human-readable table for an evaluation report."""
    lines = [f"questions evaluated: {report.question_count}"]
    header = f"{'k':>4}  {'recall@k':>9}  {'mrecall@k':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for s in report.summaries:
        lines.append(f"{s.k:>4}  {s.recall:>9.4f}  {s.mrecall:>10.4f}")
    return "\n".join(lines)
