"""Raw retrieval output: one query plus its first-stage passages.

Two JSONL inputs are merged by qid:

    queries file:  {"qid": ..., "query": ...}
    passages file: {"qid": ..., "passages": [{"pid": ..., "title": ..., "text": ...}]}

``title`` is optional; when present it is prepended to the passage text for
encoding and scoring (titles routinely carry the entity the passage is about).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ExportError


@dataclass(frozen=True)
class RawPassage:
    pid: str
    text: str
    title: str | None = None

    def full_text(self) -> str:
        if self.title:
            return f"{self.title}. {self.text}"
        return self.text


@dataclass(frozen=True)
class RawQueryBundle:
    qid: str
    query: str
    passages: tuple[RawPassage, ...]

    def __post_init__(self):
        if not self.passages:
            raise ExportError(f"bundle {self.qid!r} has no passages")
        pids = [p.pid for p in self.passages]
        if len(set(pids)) != len(pids):
            dup = next(p for p in pids if pids.count(p) > 1)
            raise ExportError(f"bundle {self.qid!r} repeats pid {dup!r}")


def _read_jsonl(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                yield lineno, json.loads(stripped)
            except json.JSONDecodeError as err:
                raise ExportError(f"{path}:{lineno}: malformed JSON: {err}") from err


def load_bundles(queries_path: str, passages_path: str) -> list[RawQueryBundle]:
    """Join the queries and passages files into bundles, in queries-file order."""
    queries: dict[str, str] = {}
    for lineno, record in _read_jsonl(queries_path):
        qid = str(record.get("qid", ""))
        query = record.get("query")
        if not qid or query is None:
            raise ExportError(f"{queries_path}:{lineno}: needs 'qid' and 'query'")
        if qid in queries:
            raise ExportError(f"{queries_path}:{lineno}: duplicate qid {qid!r}")
        queries[qid] = str(query)

    passages: dict[str, list[RawPassage]] = {}
    for lineno, record in _read_jsonl(passages_path):
        qid = str(record.get("qid", ""))
        rows = record.get("passages")
        if not qid or not isinstance(rows, list):
            raise ExportError(f"{passages_path}:{lineno}: needs 'qid' and a 'passages' list")
        if qid in passages:
            raise ExportError(f"{passages_path}:{lineno}: duplicate qid {qid!r}")
        parsed = []
        for row in rows:
            if not isinstance(row, dict) or "pid" not in row or "text" not in row:
                raise ExportError(f"{passages_path}:{lineno}: each passage needs 'pid' and 'text'")
            title = row.get("title")
            parsed.append(
                RawPassage(pid=str(row["pid"]), text=str(row["text"]),
                           title=str(title) if title is not None else None)
            )
        passages[qid] = parsed

    missing = [qid for qid in queries if qid not in passages]
    if missing:
        raise ExportError(f"no passages for qid(s): {', '.join(missing)}")
    orphaned = [qid for qid in passages if qid not in queries]
    if orphaned:
        raise ExportError(f"passages for unknown qid(s): {', '.join(orphaned)}")
    return [
        RawQueryBundle(qid=qid, query=query, passages=tuple(passages[qid]))
        for qid, query in queries.items()
    ]
