import itertools
import math

import numpy as np
import pytest

from dpp_rerank.errors import InputError, NonPSDKernelError
from dpp_rerank.kernel import LEnsemble, build_l_ensemble, normalize_quality, similarity_matrix
from dpp_rerank.map_inference import (
    GreedyState,
    StopReason,
    exhaustive_map_oracle,
    greedy_map,
    naive_greedy_oracle,
    subset_log_prob,
)
from dpp_rerank.selfcheck import (
    check_gain_monotonicity,
    check_oracle_equivalence,
    random_candidate_set,
    random_kernel,
)

from helpers import make_set

WORKED = LEnsemble(np.array([
    [1.0, 0.98, 0.4],
    [0.98, 1.0, 0.4],
    [0.4, 0.4, 0.64],
]))
PIDS3 = ["a", "b", "c"]


def test_worked_example_determinants():
    # the derivation behind the expected selection: after picking 0, the
    # near-duplicate 1 adds far less volume than the diverse 2
    after_one = np.linalg.det(WORKED.values[np.ix_([0, 1], [0, 1])])
    after_two = np.linalg.det(WORKED.values[np.ix_([0, 2], [0, 2])])
    assert after_one == pytest.approx(0.0396, abs=1e-12)
    assert after_two == pytest.approx(0.48, abs=1e-12)


class TestGreedyMap:
    def test_diagonal_kernel_picks_largest(self):
        r = greedy_map(LEnsemble(np.diag([1.0, 0.25])), ["a", "b"], 1)
        assert r.indices == [0]
        assert r.gains == [pytest.approx(0.0, abs=0)]
        assert r.stop_reason is StopReason.REACHED_K

    def test_worked_example_prefers_diverse_passage(self):
        r = greedy_map(WORKED, PIDS3, 2)
        assert r.indices == [0, 2]
        assert r.pids == ["a", "c"]
        assert r.gains[0] == pytest.approx(0.0, abs=0)
        assert r.gains[1] == pytest.approx(math.log(0.48), abs=1e-12)

    def test_k_equals_n_selects_everything(self):
        rng = np.random.default_rng(0)
        kernel = random_kernel(rng, max_n=6)
        r = greedy_map(kernel, [f"p{i}" for i in range(kernel.n)], kernel.n)
        assert sorted(r.indices) == list(range(kernel.n))

    def test_exact_ties_break_to_lowest_index(self):
        r = greedy_map(LEnsemble(np.eye(3)), PIDS3, 3)
        assert r.indices == [0, 1, 2]

    @pytest.mark.parametrize("k", [0, -1, 4])
    def test_k_out_of_range_rejected(self, k):
        with pytest.raises(InputError, match="k must"):
            greedy_map(WORKED, PIDS3, k)

    def test_pid_count_mismatch_rejected(self):
        with pytest.raises(InputError, match="pids"):
            greedy_map(WORKED, ["a"], 1)

    def test_non_psd_kernel_rejected_with_diagnostic(self):
        bad = LEnsemble(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(NonPSDKernelError, match="not positive semi-definite"):
            greedy_map(bad, ["a", "b"], 2)
        with pytest.raises(NonPSDKernelError):
            naive_greedy_oracle(bad, ["a", "b"], 2)

    def test_gain_exhausted_fills_by_diagonal(self):
        v = np.array([0.6, 0.8, 1.0])
        rank_one = np.outer(v, v)
        rank_one = (rank_one + rank_one.T) / 2.0
        kernel = LEnsemble(rank_one)
        r = greedy_map(kernel, PIDS3, 3)
        assert r.stop_reason is StopReason.GAIN_EXHAUSTED
        # index 2 has the largest diagonal and is the only real selection;
        # the rest are filled in descending-diagonal order with -inf gains
        assert r.indices == [2, 1, 0]
        assert r.gains[0] == pytest.approx(0.0, abs=1e-12)
        assert r.gains[1] == -math.inf and r.gains[2] == -math.inf
        slow = naive_greedy_oracle(kernel, PIDS3, 3)
        assert slow.indices == r.indices
        assert slow.stop_reason is StopReason.GAIN_EXHAUSTED

    def test_gain_exhaustion_is_not_an_error(self):
        kernel = LEnsemble(np.zeros((2, 2)))
        r = greedy_map(kernel, ["a", "b"], 2)
        assert r.stop_reason is StopReason.GAIN_EXHAUSTED
        assert r.indices == [0, 1]


class TestGreedyState:
    def test_residuals_stay_nonnegative_on_psd_kernels(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            kernel = random_kernel(rng, max_n=10)
            state = GreedyState(kernel, max_steps=kernel.n)
            for _ in range(kernel.n):
                j = state.best_candidate()
                if state.d2[j] <= 0:
                    break
                state.select(j)
                if state.available.any():
                    assert state.d2[state.available].min() >= -1e-12

    def test_bordered_determinant_identity(self):
        rng = np.random.default_rng(43)
        for _ in range(15):
            cset = random_candidate_set(rng, n=6, max_dim=8)
            kernel = build_l_ensemble(
                similarity_matrix(cset), normalize_quality(cset), ridge=1e-6
            )
            state = GreedyState(kernel, max_steps=4)
            for _ in range(4):
                det_y = np.linalg.det(
                    kernel.values[np.ix_(state.selected, state.selected)]
                ) if state.selected else 1.0
                for i in range(kernel.n):
                    if not state.available[i]:
                        continue
                    sub = state.selected + [i]
                    det_yi = np.linalg.det(kernel.values[np.ix_(sub, sub)])
                    assert det_yi == pytest.approx(det_y * state.d2[i], rel=1e-6, abs=1e-12)
                state.select(state.best_candidate())

    def test_selecting_twice_rejected(self):
        state = GreedyState(WORKED, max_steps=2)
        state.select(0)
        with pytest.raises(InputError, match="already"):
            state.select(0)


class TestNaiveOracleAgreement:
    def test_matches_on_diagonal_kernel(self):
        r = naive_greedy_oracle(LEnsemble(np.diag([1.0, 0.25])), ["a", "b"], 1)
        assert r.indices == [0]

    def test_matches_on_worked_example(self):
        r = naive_greedy_oracle(WORKED, PIDS3, 2)
        assert r.indices == [0, 2]
        assert r.gains[1] == pytest.approx(math.log(0.48), abs=1e-10)

    def test_size_guard(self):
        big = LEnsemble(np.eye(65))
        with pytest.raises(InputError, match="64"):
            naive_greedy_oracle(big, [str(i) for i in range(65)], 1)

    def test_random_kernels_agree_with_fast_path(self):
        rng = np.random.default_rng(47)
        for _ in range(60):
            kernel = random_kernel(rng, max_n=10)
            k = int(rng.integers(1, kernel.n + 1))
            assert check_oracle_equivalence(kernel, k) == ""


class TestExhaustiveOracle:
    def test_diagonal_kernel(self):
        kernel = LEnsemble(np.diag([1.0, 0.25, 1e-10]))
        subset, log_det = exhaustive_map_oracle(kernel, 1)
        assert subset == (0,)
        assert log_det == pytest.approx(0.0, abs=1e-12)

    def test_worked_example_global_optimum(self):
        subset, log_det = exhaustive_map_oracle(WORKED, 2)
        assert subset == (0, 2)
        assert log_det == pytest.approx(math.log(0.48), abs=1e-12)

    def test_identity_ties_break_lexicographically(self):
        subset, log_det = exhaustive_map_oracle(LEnsemble(np.eye(4)), 2)
        assert subset == (0, 1)
        assert log_det == 0.0

    def test_size_guard(self):
        with pytest.raises(InputError, match="15"):
            exhaustive_map_oracle(LEnsemble(np.eye(16)), 2)

    def test_k_out_of_range(self):
        with pytest.raises(InputError, match="k must"):
            exhaustive_map_oracle(WORKED, 4)

    def test_greedy_matches_optimum_on_small_instances(self):
        rng = np.random.default_rng(53)
        hits = 0
        for _ in range(25):
            kernel = random_kernel(rng, max_n=7)
            k = int(rng.integers(1, kernel.n + 1))
            ranking = greedy_map(kernel, [f"p{i}" for i in range(kernel.n)], k)
            best, best_logdet = exhaustive_map_oracle(kernel, k)
            values = kernel.values
            idx = sorted(ranking.indices)
            sign, greedy_logdet = np.linalg.slogdet(values[np.ix_(idx, idx)])
            greedy_logdet = greedy_logdet if sign > 0 else -math.inf
            assert greedy_logdet <= best_logdet + 1e-9
            if tuple(idx) == best:
                hits += 1
        assert hits > 0  # greedy usually finds the optimum on tiny instances


class TestSubsetLogProb:
    def test_single_entry_kernel(self):
        kernel = LEnsemble(np.diag([1.0]))
        assert subset_log_prob(kernel, ()) == pytest.approx(-math.log(2), abs=1e-15)
        assert subset_log_prob(kernel, (0,)) == pytest.approx(-math.log(2), abs=1e-15)

    def test_two_by_two_enumeration(self):
        kernel = LEnsemble(np.diag([1.0, 0.25]))
        probs = {
            subset: math.exp(subset_log_prob(kernel, subset))
            for subset in [(), (0,), (1,), (0, 1)]
        }
        assert probs[()] == pytest.approx(1 / 2.5, abs=1e-12)
        assert probs[(0,)] == pytest.approx(1 / 2.5, abs=1e-12)
        assert probs[(1,)] == pytest.approx(0.25 / 2.5, abs=1e-12)
        assert probs[(0, 1)] == pytest.approx(0.25 / 2.5, abs=1e-12)
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)

    def test_singular_minor_returns_neg_inf_and_warns(self, caplog):
        kernel = LEnsemble(np.ones((2, 2)))
        with caplog.at_level("WARNING"):
            value = subset_log_prob(kernel, (0, 1))
        assert value == -math.inf
        assert any("singular" in rec.message for rec in caplog.records)

    def test_duplicate_indices_rejected(self):
        with pytest.raises(InputError, match="unique"):
            subset_log_prob(WORKED, (0, 0))

    def test_out_of_range_rejected(self):
        with pytest.raises(InputError, match="range"):
            subset_log_prob(WORKED, (0, 3))

    def test_normalization_over_all_subsets(self):
        rng = np.random.default_rng(59)
        for _ in range(10):
            cset = random_candidate_set(rng, max_n=8, max_dim=6)
            kernel = build_l_ensemble(
                similarity_matrix(cset), normalize_quality(cset), ridge=1e-10
            )
            total = sum(
                math.exp(subset_log_prob(kernel, subset))
                for size in range(kernel.n + 1)
                for subset in itertools.combinations(range(kernel.n), size)
            )
            assert total == pytest.approx(1.0, abs=1e-9)


class TestStructuralInvariants:
    def test_gains_non_increasing(self):
        rng = np.random.default_rng(61)
        for _ in range(40):
            kernel = random_kernel(rng, max_n=12)
            k = int(rng.integers(1, kernel.n + 1))
            ranking = greedy_map(kernel, [f"p{i}" for i in range(kernel.n)], k)
            assert check_gain_monotonicity(ranking) == ""

    def test_quality_scaling_leaves_selection_invariant(self):
        rng = np.random.default_rng(67)
        for _ in range(25):
            cset = random_candidate_set(rng, n=int(rng.integers(2, 10)), max_dim=16)
            kernel = build_l_ensemble(
                similarity_matrix(cset), normalize_quality(cset, floor=0.05), ridge=0.0
            )
            if np.linalg.eigvalsh(kernel.values).min() < 1e-8:
                continue
            k = int(rng.integers(1, kernel.n + 1))
            pids = cset.pids
            base = greedy_map(kernel, pids, k)
            for c in (0.1, 10.0):
                scaled = LEnsemble(c * c * kernel.values)
                r = greedy_map(scaled, pids, k)
                assert r.indices == base.indices
                shift = 2 * math.log(c)
                for g0, g1 in zip(base.gains, r.gains):
                    assert g1 - g0 == pytest.approx(shift, abs=1e-8)

    def test_identity_similarity_reduces_to_quality_order(self):
        # orthogonal basis embeddings with clamp give S = I exactly, so the
        # greedy order must coincide with descending normalized quality
        rng = np.random.default_rng(71)
        for _ in range(25):
            n = int(rng.integers(2, 12))
            scores = rng.normal(size=n)
            cset = make_set(np.eye(n), scores)
            quality = normalize_quality(cset)
            kernel = build_l_ensemble(
                similarity_matrix(cset, transform="clamp"), quality, ridge=0.0
            )
            ranking = greedy_map(kernel, cset.pids, n)
            expected = sorted(range(n), key=lambda i: (-quality.values[i], i))
            assert ranking.indices == expected
