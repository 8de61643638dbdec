"""Convert multi-answer QA annotations to the evaluator's gold format.

Input records (JSONL) come in two shapes:

* annotation style, as in multi-answer QA datasets:
    {"id": ..., "question": ..., "annotations": [
        {"type": "singleAnswer", "answer": ["alias", ...]},
        {"type": "multipleQAs", "qaPairs": [{"question": ..., "answer": ["alias", ...]}, ...]}
    ]}
* pre-grouped: {"qid": ..., "answers": [["alias", ...], ...]}

Output, one line per question: {"qid": ..., "answers": [[...], ...]}.

The evaluator requires every alias to survive its text normalization
(lowercase, no punctuation, no articles), so aliases that normalize to the
empty string are dropped here; a group losing all its aliases is an error,
as is an empty group in the input.
"""

from __future__ import annotations

import json
import os
import re
import string
import tempfile
from typing import Iterable

from .errors import ExportError

_ARTICLE_RE = re.compile(r"\b(?:a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def _normalizes_to_empty(alias: str) -> bool:
    s = alias.lower().translate(_PUNCT_TABLE)
    s = _ARTICLE_RE.sub(" ", s)
    return not s.split()


def _groups_from_record(record: dict, qid: str) -> list[list[str]]:
    if "answers" in record:
        raw_groups = record["answers"]
        if not isinstance(raw_groups, list):
            raise ExportError(f"qid {qid!r}: 'answers' must be a list of alias groups")
    elif "annotations" in record:
        raw_groups = []
        for annotation in record["annotations"]:
            kind = annotation.get("type")
            if kind == "singleAnswer":
                raw_groups.append(annotation.get("answer", []))
            elif kind == "multipleQAs":
                raw_groups.extend(pair.get("answer", []) for pair in annotation.get("qaPairs", []))
            else:
                raise ExportError(f"qid {qid!r}: unknown annotation type {kind!r}")
    else:
        raise ExportError(f"qid {qid!r}: record has neither 'answers' nor 'annotations'")

    groups: list[list[str]] = []
    seen: set[tuple[str, ...]] = set()
    for raw in raw_groups:
        if not isinstance(raw, list) or not raw:
            raise ExportError(f"qid {qid!r}: empty alias group")
        aliases = [str(a) for a in raw if not _normalizes_to_empty(str(a))]
        if not aliases:
            raise ExportError(
                f"qid {qid!r}: alias group {raw!r} has no alias that survives normalization"
            )
        key = tuple(sorted(aliases))
        if key in seen:
            continue  # the same answer annotated twice
        seen.add(key)
        groups.append(aliases)
    if not groups:
        raise ExportError(f"qid {qid!r}: no answer groups")
    return groups


def convert_gold(records: Iterable[dict], path: str) -> int:
    """Write gold lines for every record; returns the question count."""
    lines = []
    seen_qids: set[str] = set()
    for record in records:
        if not isinstance(record, dict):
            raise ExportError("each gold record must be an object")
        qid = str(record.get("qid") or record.get("id") or "")
        if not qid:
            raise ExportError("gold record is missing 'qid'/'id'")
        if qid in seen_qids:
            raise ExportError(f"duplicate qid {qid!r}")
        seen_qids.add(qid)
        groups = _groups_from_record(record, qid)
        lines.append(json.dumps({"qid": qid, "answers": groups}, ensure_ascii=False))

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gold-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return len(lines)


def read_records(path: str) -> list[dict]:
    """Read JSONL records; also accepts a single top-level JSON array."""
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    stripped = content.lstrip()
    if stripped.startswith("["):
        records = json.loads(content)
        if not isinstance(records, list):
            raise ExportError(f"{path}: expected a list of records")
        return records
    records = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as err:
            raise ExportError(f"{path}:{lineno}: malformed JSON: {err}") from err
    return records
