"""Greedy maximization of the log-determinant objective over kernel subsets.

The selection objective is f(Y) = log det(L_Y). Greedy MAP inference picks,
at every step, the candidate with the largest marginal gain
f(Y + {i}) - f(Y). The production path (:func:`greedy_map`) maintains an
incremental Cholesky factorization so each step costs O(n) per candidate:
for selected set Y, candidate i carries the factor row c_i and the residual

    d2_i = L_ii - ||c_i||^2,   det(L_{Y + {i}}) = det(L_Y) * d2_i,

so the marginal gain of adding i is log d2_i. Two deliberately slow oracles
(:func:`naive_greedy_oracle`, :func:`exhaustive_map_oracle`) exist to verify
the fast path on small instances and are kept free of shared code with it.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InputError, NonPSDKernelError
from .kernel import LEnsemble

logger = logging.getLogger(__name__)

# below this residual, a candidate adds no usable volume and selection stops
GAIN_EPSILON = 1e-12
# a residual this far below zero cannot be rounding noise: the kernel is not PSD
PSD_VIOLATION_TOLERANCE = 1e-6


class StopReason(enum.Enum):
    REACHED_K = "reached_k"
    GAIN_EXHAUSTED = "gain_exhausted"


class SelectedItem(NamedTuple):
    index: int
    pid: str
    marginal_gain: float


@dataclass(frozen=True)
class Ranking:
    """Ordered selection for one query with per-step log-det marginal gains."""

    qid: str
    selected: tuple[SelectedItem, ...]
    stop_reason: StopReason

    def __post_init__(self):
        idx = [s.index for s in self.selected]
        if len(set(idx)) != len(idx):
            raise InputError(f"ranking for {self.qid!r} repeats a candidate index")

    @property
    def indices(self) -> list[int]:
        return [s.index for s in self.selected]

    @property
    def pids(self) -> list[str]:
        return [s.pid for s in self.selected]

    @property
    def gains(self) -> list[float]:
        return [s.marginal_gain for s in self.selected]


class GreedyState:
    """Incremental Cholesky state for one greedy run.

    Exposed (rather than hidden inside :func:`greedy_map`) so the bordered
    determinant identity det(L_{Y + {i}}) = det(L_Y) * d2_i and the residual
    sign can be checked step by step on small instances.
    """

    def __init__(self, kernel: LEnsemble, max_steps: int):
        self.kernel = kernel
        n = kernel.n
        self._rows = np.zeros((max_steps, n))
        self.d2 = np.diag(kernel.values).copy()
        self.available = np.ones(n, dtype=bool)
        self.selected: list[int] = []

    def best_candidate(self) -> int:
        """Unselected candidate with maximal residual; ties go to the lowest index."""
        masked = np.where(self.available, self.d2, -np.inf)
        return int(np.argmax(masked))

    def select(self, j: int) -> float:
        """Select candidate ``j``, update all residuals, return log d2_j."""
        if not self.available[j]:
            raise InputError(f"candidate {j} already selected")
        dj2 = self.d2[j]
        if dj2 <= 0.0:
            raise NonPSDKernelError(
                f"cannot select candidate {j}: residual {dj2:.3e} is not positive"
            )
        gain = math.log(dj2)
        t = len(self.selected)
        dj = math.sqrt(dj2)
        row = (self.kernel.values[j, :] - self._rows[:t, j] @ self._rows[:t, :]) / dj
        self._rows[t, :] = row
        self.d2 -= row**2
        self.selected.append(j)
        self.available[j] = False
        self._check_psd()
        return gain

    def _check_psd(self):
        if not self.available.any():
            return
        live = self.d2[self.available]
        worst = live.min()
        if worst < -PSD_VIOLATION_TOLERANCE:
            bad = int(np.flatnonzero(self.available)[np.argmin(live)])
            raise NonPSDKernelError(
                f"kernel is not positive semi-definite: candidate {bad} has "
                f"residual conditional variance {worst:.3e} after selecting {self.selected}"
            )


def _validate_run_args(kernel: LEnsemble, pids: Sequence[str], k: int):
    if len(pids) != kernel.n:
        raise InputError(f"got {len(pids)} pids for a {kernel.n}x{kernel.n} kernel")
    if not 1 <= k <= kernel.n:
        raise InputError(f"k must satisfy 1 <= k <= {kernel.n}, got {k}")


def _fill_by_diagonal(kernel: LEnsemble, pids: Sequence[str], taken: Sequence[int], slots: int) -> list[SelectedItem]:
    """Pad a gain-exhausted selection with the highest-diagonal leftovers.

    Downstream evaluation always expects exactly k passages, so when the
    kernel runs out of usable volume the remaining slots are filled in
    descending L_ii (quality) order. The appended items add no volume, which
    their -inf marginal gain records.
    """
    diag = np.diag(kernel.values)
    remaining = [i for i in range(kernel.n) if i not in set(taken)]
    remaining.sort(key=lambda i: (-diag[i], i))
    return [SelectedItem(i, pids[i], -math.inf) for i in remaining[:slots]]


def greedy_map(
    kernel: LEnsemble,
    pids: Sequence[str],
    k: int,
    qid: str = "",
    gain_epsilon: float = GAIN_EPSILON,
) -> Ranking:
    """Select k candidates by greedy log-det maximization (fast incremental path).

    Ties on the marginal gain break toward the lowest candidate index, i.e.
    the original retrieval order. If every remaining residual drops below
    ``gain_epsilon`` before k selections, the run stops with
    ``StopReason.GAIN_EXHAUSTED`` and the remaining slots are filled in
    descending kernel-diagonal order; gain exhaustion is a normal completion
    status, not an error.
    """
    _validate_run_args(kernel, pids, k)
    state = GreedyState(kernel, max_steps=k)
    items: list[SelectedItem] = []
    stop = StopReason.REACHED_K
    while len(items) < k:
        j = state.best_candidate()
        if state.d2[j] < gain_epsilon:
            stop = StopReason.GAIN_EXHAUSTED
            break
        gain = state.select(j)
        items.append(SelectedItem(j, pids[j], gain))
    if stop is StopReason.GAIN_EXHAUSTED:
        items.extend(_fill_by_diagonal(kernel, pids, [s.index for s in items], k - len(items)))
    return Ranking(qid=qid, selected=tuple(items), stop_reason=stop)


NAIVE_ORACLE_MAX_N = 64


def naive_greedy_oracle(
    kernel: LEnsemble,
    pids: Sequence[str],
    k: int,
    qid: str = "",
    gain_epsilon: float = GAIN_EPSILON,
) -> Ranking:
    """Greedy log-det maximization by full determinant recomputation.

    Same objective, tie-breaking, and early-stop rules as :func:`greedy_map`,
    but every marginal gain is evaluated from scratch as
    log det(L_{Y + {i}}) - log det(L_Y). Quadratically slower; guarded to
    n <= 64. This is the verification oracle for the incremental path.
    """
    if kernel.n > NAIVE_ORACLE_MAX_N:
        raise InputError(f"naive oracle is limited to n <= {NAIVE_ORACLE_MAX_N}, got {kernel.n}")
    _validate_run_args(kernel, pids, k)
    values = kernel.values
    log_eps = math.log(gain_epsilon)
    selected: list[int] = []
    items: list[SelectedItem] = []
    log_det_y = 0.0  # det of the empty submatrix is 1 by convention
    stop = StopReason.REACHED_K
    while len(items) < k:
        best_i = -1
        best_gain = -math.inf
        best_logdet = -math.inf
        for i in range(kernel.n):
            if i in selected:
                continue
            sub = selected + [i]
            sign, logdet = np.linalg.slogdet(values[np.ix_(sub, sub)])
            if sign <= 0:
                # determinant ratio d2_i is zero or negative; a clearly
                # negative ratio means the kernel is not PSD
                if sign < 0 and logdet - log_det_y > math.log(PSD_VIOLATION_TOLERANCE):
                    raise NonPSDKernelError(
                        f"kernel is not positive semi-definite: adding candidate {i} to "
                        f"{selected} gives a negative determinant"
                    )
                gain = -math.inf
            else:
                gain = logdet - log_det_y
            if gain > best_gain:
                best_i, best_gain, best_logdet = i, gain, logdet
        if best_gain < log_eps:
            stop = StopReason.GAIN_EXHAUSTED
            break
        selected.append(best_i)
        items.append(SelectedItem(best_i, pids[best_i], best_gain))
        log_det_y = best_logdet
    if stop is StopReason.GAIN_EXHAUSTED:
        items.extend(_fill_by_diagonal(kernel, pids, selected, k - len(items)))
    return Ranking(qid=qid, selected=tuple(items), stop_reason=stop)


EXHAUSTIVE_ORACLE_MAX_N = 15


def exhaustive_map_oracle(kernel: LEnsemble, k: int) -> tuple[tuple[int, ...], float]:
    """Globally optimal size-k subset by full enumeration.

    Returns the subset maximizing det(L_Y) and its log-determinant; ties
    break toward the lexicographically smallest subset. Enumeration of all
    C(n, k) subsets is guarded to n <= 15.
    """
    if kernel.n > EXHAUSTIVE_ORACLE_MAX_N:
        raise InputError(
            f"exhaustive enumeration is limited to n <= {EXHAUSTIVE_ORACLE_MAX_N}, got {kernel.n}"
        )
    if not 1 <= k <= kernel.n:
        raise InputError(f"k must satisfy 1 <= k <= {kernel.n}, got {k}")
    values = kernel.values
    best: tuple[int, ...] | None = None
    best_logdet = -math.inf
    for subset in itertools.combinations(range(kernel.n), k):
        sign, logdet = np.linalg.slogdet(values[np.ix_(subset, subset)])
        if sign <= 0:
            logdet = -math.inf
        if best is None or logdet > best_logdet:
            best, best_logdet = subset, logdet
    assert best is not None
    return best, best_logdet


def _cholesky_logdet(matrix: np.ndarray) -> float:
    chol = np.linalg.cholesky(matrix)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def subset_log_prob(kernel: LEnsemble, subset: Sequence[int]) -> float:
    """Normalized log-probability of one subset under the kernel's distribution.

    Computes log det(L_Y) - log det(L + I), both via Cholesky factorization.
    The empty subset has det 1 by convention. A numerically singular L_Y
    (det <= 0) yields -inf, logged as a warning.
    """
    idx = sorted(int(i) for i in subset)
    if len(set(idx)) != len(idx):
        raise InputError(f"subset indices must be unique, got {list(subset)}")
    if idx and (idx[0] < 0 or idx[-1] >= kernel.n):
        raise InputError(f"subset indices out of range for n={kernel.n}: {list(subset)}")
    log_norm = _cholesky_logdet(kernel.values + np.eye(kernel.n))
    if not idx:
        return -log_norm
    try:
        log_num = _cholesky_logdet(kernel.values[np.ix_(idx, idx)])
    except np.linalg.LinAlgError:
        logger.warning("subset %s has numerically singular kernel minor; log-probability is -inf", idx)
        return -math.inf
    return log_num - log_norm
