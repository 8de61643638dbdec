"""Quality/similarity kernel construction for one query's candidate passages.

Two signals go into the kernel: pairwise passage similarity derived from
embedding cosines and mapped into [0, 1], and per-passage query relevance,
min-max normalized within the query. Their product

    L_ij = q_i * S_ij * q_j            (+ ridge on the diagonal)

is the positive semi-definite matrix whose principal-minor determinants
drive the greedy subset selection in :mod:`dpp_rerank.map_inference`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

DEFAULT_QUALITY_FLOOR = 1e-3
DEFAULT_RIDGE_AFFINE = 1e-10
# max(0, cos) does not guarantee a PSD matrix, so it gets a larger ridge
DEFAULT_RIDGE_CLAMP = 1e-6

SIM_TRANSFORMS = ("affine", "clamp")


def default_ridge(transform: str) -> float:
    """Default diagonal ridge for a similarity transform mode."""
    if transform == "clamp":
        return DEFAULT_RIDGE_CLAMP
    return DEFAULT_RIDGE_AFFINE


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Candidate:
    """One retrieved passage: id, embedding, raw relevance score, optional text.

    ``raw_score`` is an unbounded relevance logit; normalization happens per
    query in :func:`normalize_quality`. ``text`` is only needed when the
    candidate set is used for answer-coverage evaluation.
    """

    pid: str
    embedding: np.ndarray
    raw_score: float
    text: str | None = None

    def __post_init__(self):
        emb = np.array(self.embedding, dtype=np.float64)
        if emb.ndim != 1 or emb.size == 0:
            raise InputError(f"embedding for pid {self.pid!r} must be a non-empty vector")
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "raw_score", float(self.raw_score))

    @property
    def dim(self) -> int:
        return int(self.embedding.shape[0])


@dataclass(frozen=True)
class CandidateSet:
    """A query together with its retrieved candidate passages."""

    qid: str
    query: str
    candidates: tuple[Candidate, ...]
    dim: int | None = None

    def __post_init__(self):
        cands = tuple(self.candidates)
        if not cands:
            raise InputError(f"candidate set {self.qid!r} is empty")
        pids = [c.pid for c in cands]
        if len(set(pids)) != len(pids):
            dup = next(p for p in pids if pids.count(p) > 1)
            raise InputError(f"duplicate pid {dup!r} in candidate set {self.qid!r}")
        dim = self.dim if self.dim is not None else cands[0].dim
        for c in cands:
            if c.dim != dim:
                raise InputError(
                    f"embedding dimension mismatch in candidate set {self.qid!r}: "
                    f"pid {c.pid!r} has {c.dim}, expected {dim}"
                )
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "dim", int(dim))

    @property
    def n(self) -> int:
        return len(self.candidates)

    @property
    def pids(self) -> list[str]:
        return [c.pid for c in self.candidates]

    def embedding_matrix(self) -> np.ndarray:
        """Candidate embeddings stacked row-wise, shape (n, dim)."""
        return np.stack([c.embedding for c in self.candidates])

    def raw_scores(self) -> np.ndarray:
        return np.array([c.raw_score for c in self.candidates])


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric passage-passage similarity with unit diagonal, entries in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InputError("similarity matrix must be square")
        if not np.isfinite(v).all():
            raise InputError("similarity matrix contains non-finite entries")
        if not np.array_equal(v, v.T):
            raise InputError("similarity matrix must be exactly symmetric")
        if not np.array_equal(np.diag(v), np.ones(v.shape[0])):
            raise InputError("similarity matrix diagonal must be exactly 1")
        if v.min() < 0.0 or v.max() > 1.0:
            raise InputError("similarity values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class QualityVector:
    """Per-passage relevance after per-query normalization, entries in (0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 1 or v.size == 0:
            raise InputError("quality vector must be a non-empty vector")
        if not np.isfinite(v).all():
            raise InputError("quality vector contains non-finite entries")
        if v.min() <= 0.0 or v.max() > 1.0:
            raise InputError("quality values must lie in (0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class LEnsemble:
    """PSD kernel combining quality and similarity; the selection objective
    is the log-determinant of its principal submatrices."""

    values: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InputError("kernel must be square")
        if not np.isfinite(v).all():
            raise InputError("kernel contains non-finite entries")
        if not np.array_equal(v, v.T):
            raise InputError("kernel must be exactly symmetric")
        if np.diag(v).min() < 0.0:
            raise InputError("kernel diagonal must be nonnegative")
        if self.ridge < 0.0:
            raise InputError("ridge must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "ridge", float(self.ridge))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


def similarity_matrix(cset: CandidateSet, transform: str = "affine") -> SimilarityMatrix:
    """Pairwise cosine similarity of the candidate embeddings, mapped into [0, 1].

    ``affine`` stores (1 + cos) / 2, which keeps the matrix positive
    semi-definite (it is half the all-ones matrix plus half a Gram matrix).
    ``clamp`` stores max(0, cos); that mode loses the PSD guarantee and is
    meant to be paired with a larger kernel ridge. The diagonal is forced to
    exactly 1 and the matrix is stored exactly symmetric.
    """
    if transform not in SIM_TRANSFORMS:
        raise InputError(f"unknown similarity transform {transform!r}; expected one of {SIM_TRANSFORMS}")
    emb = cset.embedding_matrix()
    for c in cset.candidates:
        if not np.isfinite(c.embedding).all():
            raise InputError(f"non-finite embedding for pid {c.pid!r}")
    norms = np.linalg.norm(emb, axis=1)
    for c, nrm in zip(cset.candidates, norms):
        if nrm == 0.0:
            raise InputError(f"zero-norm embedding for pid {c.pid!r}")
    unit = emb / norms[:, None]
    cos = unit @ unit.T
    cos = (cos + cos.T) / 2.0
    if transform == "affine":
        values = (1.0 + cos) / 2.0
    else:
        values = np.maximum(cos, 0.0)
    np.clip(values, 0.0, 1.0, out=values)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values)


def normalize_quality(cset: CandidateSet, floor: float = DEFAULT_QUALITY_FLOOR) -> QualityVector:
    """Min-max normalize the raw relevance scores of one candidate set.

    The minimum score maps to 0 and is then raised to ``floor`` so that no
    passage ends up with zero quality (a zero row/column in the kernel would
    make it unselectable). When every raw score is equal, including the
    single-candidate case, all qualities are 1: with no relevance signal the
    selection is driven by similarity alone.
    """
    if not (0.0 < floor < 1.0):
        raise InputError(f"quality floor must lie in (0, 1), got {floor}")
    for c in cset.candidates:
        if not np.isfinite(c.raw_score):
            raise InputError(f"non-finite raw score for pid {c.pid!r}")
    raw = cset.raw_scores()
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        values = np.ones(cset.n)
    else:
        values = (raw - lo) / (hi - lo)
        np.maximum(values, floor, out=values)
    return QualityVector(values)


def build_l_ensemble(
    sim: SimilarityMatrix, quality: QualityVector, ridge: float = DEFAULT_RIDGE_AFFINE
) -> LEnsemble:
    """Combine similarity and quality into the selection kernel.

    L_ij = q_i * S_ij * q_j, with ``ridge`` added to the diagonal for
    factorization stability. Exact symmetry is preserved: q_i * q_j is
    computed once per unordered pair via the outer product.
    """
    if sim.n != quality.n:
        raise InputError(f"size mismatch: similarity is {sim.n}x{sim.n}, quality has {quality.n} entries")
    if ridge < 0.0:
        raise InputError(f"ridge must be nonnegative, got {ridge}")
    values = np.outer(quality.values, quality.values) * sim.values
    values[np.diag_indices_from(values)] += ridge
    return LEnsemble(values, ridge=ridge)
