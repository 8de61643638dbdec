"""Line-delimited file formats: candidates (JSONL), runs (TREC-style), gold (JSONL).

Candidates file, one query per line:

    {"qid": ..., "query": ..., "passages": [{"pid": ..., "text": ...,
     "embedding": [...], "score": ...}]}

Run file, one selected passage per line, ranks contiguous from 1 per qid:

    qid Q0 pid rank score tag

Gold file, one question per line, one alias group per distinct answer:

    {"qid": ..., "answers": [["alias", ...], ...]}

Lines starting with '#' are comments (used by exporters for provenance
headers) and blank lines are ignored in all three formats.
"""

from __future__ import annotations

import json
import logging
import math
from typing import Iterable, NamedTuple, Sequence

from .errors import InputError
from .evaluation import GoldEntry, normalize_text
from .kernel import Candidate, CandidateSet
from .map_inference import Ranking

logger = logging.getLogger(__name__)

RUN_SCORE_FORMAT = "%.6g"


def _iter_records(path: str):
    """Yield (line_number, stripped_line) for content lines of a text file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, stripped


def _require(record: dict, key: str, path: str, lineno: int):
    if key not in record:
        raise InputError(f"{path}:{lineno}: missing required field {key!r}")
    return record[key]


def parse_candidates(path: str) -> list[CandidateSet]:
    """Parse a candidates file into one CandidateSet per line.

    Rejects malformed lines (with their line number), duplicate qids, and
    embedding-dimension drift across lines (naming both qids involved).
    An empty file yields an empty list with a warning.
    """
    sets: list[CandidateSet] = []
    seen_qids: dict[str, int] = {}
    first_dim: int | None = None
    first_qid: str | None = None
    for lineno, text in _iter_records(path):
        try:
            record = json.loads(text)
        except json.JSONDecodeError as err:
            raise InputError(f"{path}:{lineno}: malformed candidates line: {err}") from err
        if not isinstance(record, dict):
            raise InputError(f"{path}:{lineno}: candidates line must be an object")
        qid = str(_require(record, "qid", path, lineno))
        query = str(_require(record, "query", path, lineno))
        passages = _require(record, "passages", path, lineno)
        if not isinstance(passages, list) or not passages:
            raise InputError(f"{path}:{lineno}: 'passages' must be a non-empty list")
        candidates = []
        for p in passages:
            if not isinstance(p, dict):
                raise InputError(f"{path}:{lineno}: each passage must be an object")
            pid = str(_require(p, "pid", path, lineno))
            embedding = _require(p, "embedding", path, lineno)
            score = _require(p, "score", path, lineno)
            if not isinstance(embedding, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in embedding
            ):
                raise InputError(f"{path}:{lineno}: embedding for pid {pid!r} must be a list of numbers")
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                raise InputError(f"{path}:{lineno}: score for pid {pid!r} must be a number")
            text_field = p.get("text")
            if text_field is not None:
                text_field = str(text_field)
            try:
                candidates.append(Candidate(pid=pid, embedding=embedding, raw_score=score, text=text_field))
            except InputError as err:
                raise InputError(f"{path}:{lineno}: {err}") from err
        if qid in seen_qids:
            raise InputError(f"{path}:{lineno}: duplicate qid {qid!r} (first seen on line {seen_qids[qid]})")
        seen_qids[qid] = lineno
        try:
            cset = CandidateSet(qid=qid, query=query, candidates=tuple(candidates))
        except InputError as err:
            raise InputError(f"{path}:{lineno}: {err}") from err
        if first_dim is None:
            first_dim, first_qid = cset.dim, qid
        elif cset.dim != first_dim:
            raise InputError(
                f"{path}:{lineno}: embedding dimension drift: qid {first_qid!r} has "
                f"dimension {first_dim} but qid {qid!r} has {cset.dim}"
            )
        sets.append(cset)
    if not sets:
        logger.warning("candidates file %s contains no records", path)
    return sets


def write_candidates(path: str, sets: Iterable[CandidateSet], header_comments: Sequence[str] = ()):
    """Write candidate sets in the JSONL candidates format."""
    with open(path, "w", encoding="utf-8") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        for cset in sets:
            record = {
                "qid": cset.qid,
                "query": cset.query,
                "passages": [
                    {
                        "pid": c.pid,
                        **({"text": c.text} if c.text is not None else {}),
                        "embedding": c.embedding.tolist(),
                        "score": c.raw_score,
                    }
                    for c in cset.candidates
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


class RunLine(NamedTuple):
    qid: str
    pid: str
    rank: int
    score: float
    tag: str


def _token_safe(value: str, what: str) -> str:
    if not value or any(ch.isspace() for ch in value):
        raise InputError(f"{what} {value!r} cannot be written to a run file (empty or contains whitespace)")
    return value


def write_run(path: str, rankings: Iterable[Ranking], tag: str):
    """Write rankings as a run file; scores carry 6 significant digits."""
    _token_safe(tag, "tag")
    with open(path, "w", encoding="utf-8") as fh:
        for ranking in rankings:
            qid = _token_safe(ranking.qid, "qid")
            for rank, item in enumerate(ranking.selected, start=1):
                pid = _token_safe(item.pid, "pid")
                score = RUN_SCORE_FORMAT % item.marginal_gain
                fh.write(f"{qid} Q0 {pid} {rank} {score} {tag}\n")


def write_run_lines(path: str, lines: Iterable[RunLine]):
    """Re-serialize already-parsed run lines, e.g. after filtering a run."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            qid = _token_safe(line.qid, "qid")
            pid = _token_safe(line.pid, "pid")
            tag = _token_safe(line.tag, "tag")
            fh.write(f"{qid} Q0 {pid} {line.rank} {RUN_SCORE_FORMAT % line.score} {tag}\n")


def parse_run(path: str) -> dict[str, list[RunLine]]:
    """Parse a run file into rank-ordered lines per qid.

    Enforces the format invariants: six whitespace-separated fields, ranks
    contiguous from 1 per qid, unique (qid, pid) pairs, and scores
    non-increasing with rank.
    """
    per_qid: dict[str, list[RunLine]] = {}
    seen_pairs: set[tuple[str, str]] = set()
    for lineno, text in _iter_records(path):
        fields = text.split()
        if len(fields) != 6:
            raise InputError(f"{path}:{lineno}: expected 6 fields 'qid Q0 pid rank score tag', got {len(fields)}")
        qid, _, pid, rank_s, score_s, tag = fields
        try:
            rank = int(rank_s)
            score = float(score_s)
        except ValueError as err:
            raise InputError(f"{path}:{lineno}: bad rank or score: {err}") from err
        if math.isnan(score):
            raise InputError(f"{path}:{lineno}: score is NaN")
        if (qid, pid) in seen_pairs:
            raise InputError(f"{path}:{lineno}: duplicate (qid, pid) pair ({qid!r}, {pid!r})")
        seen_pairs.add((qid, pid))
        lines = per_qid.setdefault(qid, [])
        if rank != len(lines) + 1:
            raise InputError(
                f"{path}:{lineno}: ranks for qid {qid!r} must be contiguous from 1, got {rank} "
                f"after {len(lines)} lines"
            )
        if lines and score > lines[-1].score:
            raise InputError(f"{path}:{lineno}: scores for qid {qid!r} increase at rank {rank}")
        lines.append(RunLine(qid=qid, pid=pid, rank=rank, score=score, tag=tag))
    return per_qid


def parse_gold(path: str) -> list[GoldEntry]:
    """Parse a gold file; every alias must survive text normalization."""
    entries: list[GoldEntry] = []
    seen: dict[str, int] = {}
    for lineno, text in _iter_records(path):
        try:
            record = json.loads(text)
        except json.JSONDecodeError as err:
            raise InputError(f"{path}:{lineno}: malformed gold line: {err}") from err
        if not isinstance(record, dict):
            raise InputError(f"{path}:{lineno}: gold line must be an object")
        qid = str(_require(record, "qid", path, lineno))
        answers = _require(record, "answers", path, lineno)
        if qid in seen:
            raise InputError(f"{path}:{lineno}: duplicate qid {qid!r} (first seen on line {seen[qid]})")
        seen[qid] = lineno
        if not isinstance(answers, list) or not answers:
            raise InputError(f"{path}:{lineno}: 'answers' must be a non-empty list of alias groups")
        groups = []
        for group in answers:
            if not isinstance(group, list) or not group:
                raise InputError(f"{path}:{lineno}: qid {qid!r} has an empty alias group")
            aliases = [str(a) for a in group]
            for alias in aliases:
                if not normalize_text(alias):
                    raise InputError(
                        f"{path}:{lineno}: qid {qid!r} has alias {alias!r} that normalizes to an empty string"
                    )
            groups.append(tuple(aliases))
        entries.append(GoldEntry(qid=qid, answer_sets=tuple(groups)))
    if not entries:
        logger.warning("gold file %s contains no records", path)
    return entries


def write_gold(path: str, entries: Iterable[GoldEntry]):
    """Write gold entries in the JSONL gold format."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            record = {"qid": entry.qid, "answers": [list(g) for g in entry.answer_sets]}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
