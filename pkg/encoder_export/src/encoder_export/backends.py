"""Encoder backends behind string model identifiers.

Two families are supported:

* real transformer checkpoints, loaded through sentence-transformers
  (bi-encoders via ``SentenceTransformer``, query-passage scorers via
  ``CrossEncoder``); and
* built-in deterministic lexical backends that need no downloads:
  ``hash:<dim>`` embeds text by signed token feature hashing, and
  ``overlap`` scores a pair by token-overlap cosine.

The lexical backends exist so pipelines can run and be tested in air-gapped
environments; the transformer ids are the intended production default.
"""

from __future__ import annotations

import hashlib
import math
import re

import numpy as np

from .errors import ExportError

DEFAULT_BI_ENCODER = "sentence-transformers/all-mpnet-base-v2"
DEFAULT_CROSS_ENCODER = "cross-encoder/ms-marco-MiniLM-L-6-v2"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class HashingBiEncoder:
    """Deterministic signed feature hashing of unigrams and bigrams.

    Every token (and adjacent-token bigram) is mapped to a bucket and sign
    by a stable digest, accumulated, and the result L2-normalized. Identical
    texts give bitwise-identical vectors on any platform.
    """

    def __init__(self, dim: int):
        if dim < 2:
            raise ExportError(f"hash embedding dimension must be >= 2, got {dim}")
        self.dim = dim
        self.pooling = "token-hash-sum"

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            tokens = _tokens(text)
            features = tokens + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]
            for feature in features:
                digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
                value = int.from_bytes(digest, "big")
                bucket = value % self.dim
                sign = 1.0 if (value >> 63) & 1 else -1.0
                out[row, bucket] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
            else:
                # text had no alphanumeric tokens; fall back to a fixed direction
                out[row, 0] = 1.0
        return out


class TokenOverlapCrossEncoder:
    """Deterministic lexical relevance: token-overlap cosine of query and passage."""

    def predict(self, pairs: list[tuple[str, str]]) -> list[float]:
        scores = []
        for query, passage in pairs:
            q = _tokens(query)
            p = _tokens(passage)
            if not q or not p:
                scores.append(0.0)
                continue
            overlap = len(set(q) & set(p))
            scores.append(overlap / math.sqrt(len(set(q)) * len(set(p))))
        return scores


def load_bi_encoder(model_id: str):
    """Resolve a bi-encoder id to an object with ``encode(list[str]) -> array``."""
    if model_id.startswith("hash:"):
        try:
            dim = int(model_id.split(":", 1)[1])
        except ValueError as err:
            raise ExportError(f"bad hash encoder id {model_id!r}; expected hash:<dim>") from err
        return HashingBiEncoder(dim)
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as err:
        raise ExportError(
            f"model {model_id!r} needs the sentence-transformers extra; "
            "install it or use the built-in hash:<dim> backend"
        ) from err
    try:
        return _SentenceTransformerWrapper(SentenceTransformer(model_id))
    except Exception as err:
        raise ExportError(f"failed to load bi-encoder {model_id!r}: {err}") from err


def load_cross_encoder(model_id: str):
    """Resolve a cross-encoder id to an object with ``predict(pairs) -> scores``."""
    if model_id == "overlap":
        return TokenOverlapCrossEncoder()
    try:
        from sentence_transformers import CrossEncoder
    except ImportError as err:
        raise ExportError(
            f"model {model_id!r} needs the sentence-transformers extra; "
            "install it or use the built-in overlap backend"
        ) from err
    try:
        return CrossEncoder(model_id)
    except Exception as err:
        raise ExportError(f"failed to load cross-encoder {model_id!r}: {err}") from err


def pooling_for(model_id: str) -> str:
    """Provenance string for the file header: how the encoder pools tokens."""
    return "token-hash-sum" if model_id.startswith("hash:") else "model-native"


class _SentenceTransformerWrapper:
    def __init__(self, model):
        self._model = model
        self.pooling = "model-native"

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(texts, convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float64,
        )
