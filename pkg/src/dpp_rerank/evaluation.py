"""Multi-answer retrieval metrics and the quality-only ranking baseline.

A question with n distinct answers (each an alias group of interchangeable
surface forms) is scored against the top-k selected passages:

* mrecall@k succeeds iff the passages cover at least min(n, k) answers:
  with n <= k every answer must be covered, with n > k at least k of them.
* recall@k succeeds iff at least one answer is covered.

Answer coverage uses normalized substring containment, the usual convention
for span-coverage evaluation; a word-boundary mode is available for callers
worried about short answers matching inside longer words.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError
from .kernel import DEFAULT_QUALITY_FLOOR, CandidateSet, normalize_quality
from .map_inference import Ranking, SelectedItem, StopReason

_ARTICLE_RE = re.compile(r"\b(?:a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_text(s: str) -> str:
    """Lowercase, strip punctuation, drop the articles a/an/the, collapse whitespace."""
    s = s.lower().translate(_PUNCT_TABLE)
    s = _ARTICLE_RE.sub(" ", s)
    return " ".join(s.split())


@dataclass(frozen=True)
class GoldEntry:
    """Gold answers for one question: one alias group per distinct answer."""

    qid: str
    answer_sets: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(g) for g in self.answer_sets)
        if not groups:
            raise InputError(f"gold entry {self.qid!r} has no answer groups")
        for g in groups:
            if not g:
                raise InputError(f"gold entry {self.qid!r} has an empty alias group")
        object.__setattr__(self, "answer_sets", groups)

    @property
    def n(self) -> int:
        return len(self.answer_sets)


def answer_covered(
    aliases: Iterable[str], passages: Sequence[str], word_boundary: bool = False
) -> bool:
    """True iff some alias occurs in some passage after normalization.

    Plain mode uses substring containment; word-boundary mode requires the
    alias to match at word boundaries. Aliases that normalize to the empty
    string never match.
    """
    norm_passages = []
    for p in passages:
        if p is None:
            raise InputError("passage text missing")
        norm_passages.append(normalize_text(p))
    for alias in aliases:
        na = normalize_text(alias)
        if not na:
            continue
        if word_boundary:
            pattern = re.compile(r"\b" + re.escape(na) + r"\b")
            if any(pattern.search(p) for p in norm_passages):
                return True
        else:
            if any(na in p for p in norm_passages):
                return True
    return False


def count_covered(
    gold: GoldEntry, passages: Sequence[str], word_boundary: bool = False
) -> int:
    """Number of the question's answers covered by the passages."""
    return sum(
        1 for group in gold.answer_sets if answer_covered(group, passages, word_boundary)
    )


def mrecall_at_k(
    gold: GoldEntry,
    selected_passages: Sequence[str],
    k: int,
    word_boundary: bool = False,
) -> tuple[bool, int]:
    """Multi-answer success at cutoff k: covered answers must reach min(n, k).

    Returns (success, covered answer count).
    """
    if k < 1:
        raise InputError(f"cutoff k must be positive, got {k}")
    if len(selected_passages) > k:
        raise InputError(f"got {len(selected_passages)} passages for cutoff k={k}")
    covered = count_covered(gold, selected_passages, word_boundary)
    return covered >= min(gold.n, k), covered


def recall_at_k(
    gold: GoldEntry,
    selected_passages: Sequence[str],
    k: int,
    word_boundary: bool = False,
) -> bool:
    """Any-answer success at cutoff k: at least one answer covered."""
    if k < 1:
        raise InputError(f"cutoff k must be positive, got {k}")
    if len(selected_passages) > k:
        raise InputError(f"got {len(selected_passages)} passages for cutoff k={k}")
    return count_covered(gold, selected_passages, word_boundary) >= 1


def qrr_rank(cset: CandidateSet, k: int, floor: float = DEFAULT_QUALITY_FLOOR) -> Ranking:
    """Quality-only baseline: top-k passages by descending normalized relevance.

    Ties break toward the lowest candidate index. The per-item gain fields
    carry the normalized quality scores.
    """
    if not 1 <= k <= cset.n:
        raise InputError(f"k must satisfy 1 <= k <= {cset.n}, got {k}")
    quality = normalize_quality(cset, floor).values
    order = sorted(range(cset.n), key=lambda i: (-quality[i], i))[:k]
    items = tuple(
        SelectedItem(i, cset.candidates[i].pid, float(quality[i])) for i in order
    )
    return Ranking(qid=cset.qid, selected=items, stop_reason=StopReason.REACHED_K)


@dataclass(frozen=True)
class QuestionResult:
    """Outcome for one (question, cutoff) pair."""

    qid: str
    k: int
    n: int
    covered: int
    mrecall_success: bool
    recall_success: bool
    in_run: bool = True


@dataclass(frozen=True)
class CutoffSummary:
    k: int
    question_count: int
    mrecall: float
    recall: float


@dataclass(frozen=True)
class EvalReport:
    """Aggregated metrics per cutoff plus per-question detail records."""

    question_count: int
    summaries: tuple[CutoffSummary, ...]
    details: tuple[QuestionResult, ...]

    def summary_for(self, k: int) -> CutoffSummary:
        for s in self.summaries:
            if s.k == k:
                return s
        raise KeyError(f"no summary for cutoff {k}")

    def to_dict(self) -> dict:
        return {
            "question_count": self.question_count,
            "cutoffs": [
                {
                    "k": s.k,
                    "question_count": s.question_count,
                    "mrecall": s.mrecall,
                    "recall": s.recall,
                }
                for s in self.summaries
            ],
            "questions": [
                {
                    "qid": d.qid,
                    "k": d.k,
                    "n": d.n,
                    "covered": d.covered,
                    "mrecall_success": d.mrecall_success,
                    "recall_success": d.recall_success,
                    "in_run": d.in_run,
                }
                for d in self.details
            ],
        }


def aggregate(
    results: Iterable[QuestionResult],
    cutoffs: Sequence[int],
    question_count: int | None = None,
) -> EvalReport:
    """Fold per-question results into per-cutoff success fractions.

    Detail records are ordered by (cutoff, qid). ``question_count`` defaults
    to the number of distinct qids seen; pass it explicitly when the result
    list may be empty (e.g. an empty cutoff list).
    """
    results = list(results)
    by_k: dict[int, list[QuestionResult]] = {int(k): [] for k in cutoffs}
    for r in results:
        if r.k not in by_k:
            raise InputError(f"result for qid {r.qid!r} has cutoff {r.k} not in {list(cutoffs)}")
        by_k[r.k].append(r)
    if question_count is None:
        question_count = len({r.qid for r in results})
    summaries = []
    for k in by_k:
        rs = by_k[k]
        count = len(rs)
        mrecall = sum(1 for r in rs if r.mrecall_success) / count if count else 0.0
        recall = sum(1 for r in rs if r.recall_success) / count if count else 0.0
        summaries.append(CutoffSummary(k=k, question_count=count, mrecall=mrecall, recall=recall))
    details = tuple(sorted(results, key=lambda r: (r.k, r.qid)))
    return EvalReport(
        question_count=question_count, summaries=tuple(summaries), details=details
    )
