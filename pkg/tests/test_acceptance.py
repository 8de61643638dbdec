"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each criterion prints one `ACCEPTANCE PASS/FAIL <name>` line; run with
`pytest tests/test_acceptance.py -v -s` to see them live.
"""

import functools
import itertools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from dpp_rerank.evaluation import GoldEntry, mrecall_at_k
from dpp_rerank.formats import parse_candidates, parse_run, write_candidates
from dpp_rerank.kernel import (
    LEnsemble,
    build_l_ensemble,
    normalize_quality,
    similarity_matrix,
)
from dpp_rerank.map_inference import greedy_map, naive_greedy_oracle, subset_log_prob
from dpp_rerank.pipeline import RerankConfig, evaluate_command, rerank_command
from dpp_rerank.selfcheck import random_candidate_set, random_kernel

from helpers import make_set

FIXTURES = Path(__file__).parent / "fixtures"
DIVERSITY_CANDIDATES = str(FIXTURES / "diversity.candidates.jsonl")
DIVERSITY_GOLD = str(FIXTURES / "diversity.gold.jsonl")

GAIN_ATOL = 1e-8
MONOTONE_ATOL = 1e-9
NORMALIZATION_ATOL = 1e-9
EIGEN_TOL = -1e-8


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE FAIL {name}")
                raise
            print(f"ACCEPTANCE PASS {name}")
        return wrapper
    return deco


def equivalence_kernel_stream(count, seed=2024, max_n=12):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_kernel(rng, max_n=max_n)


@criterion("oracle-equivalence: 200 kernels, every k, gains within 1e-8, under 10 s")
def test_oracle_equivalence():
    start = time.perf_counter()
    kernels = 0
    for kernel in equivalence_kernel_stream(200):
        kernels += 1
        pids = [f"p{i}" for i in range(kernel.n)]
        for k in range(1, kernel.n + 1):
            fast = greedy_map(kernel, pids, k)
            slow = naive_greedy_oracle(kernel, pids, k)
            assert fast.indices == slow.indices, (
                f"selection mismatch on kernel {kernels} k={k}: "
                f"{fast.indices} vs {slow.indices}"
            )
            assert fast.stop_reason == slow.stop_reason
            for fg, sg in zip(fast.gains, slow.gains):
                if math.isinf(fg) or math.isinf(sg):
                    assert fg == sg
                else:
                    assert abs(fg - sg) <= GAIN_ATOL
    elapsed = time.perf_counter() - start
    assert kernels == 200
    assert elapsed < 10.0, f"oracle equivalence took {elapsed:.1f} s"


@criterion("probability-normalization: 50 kernels, subset masses sum to 1 within 1e-9, under 30 s")
def test_probability_normalization():
    start = time.perf_counter()
    rng = np.random.default_rng(515)
    for _ in range(50):
        cset = random_candidate_set(rng, max_n=10, max_dim=8)
        ridge = float(rng.choice([1e-10, 1e-6]))
        kernel = build_l_ensemble(similarity_matrix(cset), normalize_quality(cset), ridge=ridge)
        total = sum(
            math.exp(subset_log_prob(kernel, subset))
            for size in range(kernel.n + 1)
            for subset in itertools.combinations(range(kernel.n), size)
        )
        assert abs(total - 1.0) <= NORMALIZATION_ATOL, (
            f"subset masses sum to {total!r} for n={kernel.n}"
        )
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"normalization check took {elapsed:.1f} s"


@criterion("psd-construction: affine similarity and kernels keep eigenvalues above -1e-8 on 200 sets")
def test_psd_construction():
    rng = np.random.default_rng(77)
    for _ in range(200):
        cset = random_candidate_set(rng, max_n=30, max_dim=16)
        sim = similarity_matrix(cset, transform="affine")
        assert np.linalg.eigvalsh(sim.values).min() >= EIGEN_TOL
        floor = float(rng.choice([1e-3, 0.05, 0.5]))
        ridge = float(rng.choice([0.0, 1e-10, 1e-6]))
        kernel = build_l_ensemble(sim, normalize_quality(cset, floor=floor), ridge=ridge)
        assert np.linalg.eigvalsh(kernel.values).min() >= EIGEN_TOL


@criterion("gain-monotonicity: marginal gains never increase beyond 1e-9 in any greedy run")
def test_gain_monotonicity():
    for kernel in equivalence_kernel_stream(200):
        pids = [f"p{i}" for i in range(kernel.n)]
        for k in range(1, kernel.n + 1):
            gains = greedy_map(kernel, pids, k).gains
            for i in range(1, len(gains)):
                assert gains[i] <= gains[i - 1] + MONOTONE_ATOL, (
                    f"gains increase: {gains[i - 1]!r} -> {gains[i]!r}"
                )


@criterion("quality-scaling: selections invariant under quality scale 0.1x and 10x on 100 instances")
def test_quality_scaling_invariance():
    rng = np.random.default_rng(909)
    checked = 0
    while checked < 100:
        n = int(rng.integers(2, 13))
        cset = random_candidate_set(rng, n=n, max_dim=16)
        kernel = build_l_ensemble(
            similarity_matrix(cset), normalize_quality(cset, floor=0.05), ridge=0.0
        )
        if np.linalg.eigvalsh(kernel.values).min() < 1e-8:
            continue  # keep every gain well above the exhaustion cutoff at both scales
        checked += 1
        k = int(rng.integers(1, n + 1))
        base = greedy_map(kernel, cset.pids, k)
        for c in (0.1, 10.0):
            scaled = LEnsemble(c * c * kernel.values)
            r = greedy_map(scaled, cset.pids, k)
            assert r.indices == base.indices, (
                f"selection changed under scale {c}: {base.indices} vs {r.indices}"
            )
            shift = 2.0 * math.log(c)
            for g0, g1 in zip(base.gains, r.gains):
                assert abs((g1 - g0) - shift) <= GAIN_ATOL


@criterion("qrr-reduction: with identity similarity, dpp and qrr rank identically on 100 queries")
def test_qrr_reduction(tmp_path):
    rng = np.random.default_rng(1234)
    dim = 16
    sets = []
    for i in range(100):
        n = int(rng.integers(5, dim + 1))
        scores = rng.normal(size=n)
        assert len(set(scores.tolist())) == n  # distinct scores
        sets.append(make_set(np.eye(dim)[:n], scores, qid=f"q{i:03d}"))
    cand = tmp_path / "cand.jsonl"
    write_candidates(str(cand), sets)
    dpp_out = tmp_path / "dpp.txt"
    qrr_out = tmp_path / "qrr.txt"
    rerank_command(str(cand), str(dpp_out),
                   RerankConfig(mode="dpp", k=5, transform="clamp", ridge=0.0))
    rerank_command(str(cand), str(qrr_out), RerankConfig(mode="qrr", k=5))
    dpp_run = parse_run(str(dpp_out))
    qrr_run = parse_run(str(qrr_out))
    assert list(dpp_run) == list(qrr_run)
    for qid in dpp_run:
        dpp_order = [(line.pid, line.rank) for line in dpp_run[qid]]
        qrr_order = [(line.pid, line.rank) for line in qrr_run[qid]]
        assert dpp_order == qrr_order, f"orders differ for {qid}"


@criterion("diversity-fixture: redundant top-5 fails mrecall@5 while the diverse selection scores 1.0")
def test_diversity_fixture(tmp_path):
    dpp_out = tmp_path / "dpp.txt"
    qrr_out = tmp_path / "qrr.txt"
    rerank_command(DIVERSITY_CANDIDATES, str(dpp_out), RerankConfig(mode="dpp", k=5))
    rerank_command(DIVERSITY_CANDIDATES, str(qrr_out), RerankConfig(mode="qrr", k=5))

    dpp_report = evaluate_command(str(dpp_out), DIVERSITY_GOLD, DIVERSITY_CANDIDATES, cutoffs=[5])
    qrr_report = evaluate_command(str(qrr_out), DIVERSITY_GOLD, DIVERSITY_CANDIDATES, cutoffs=[5])
    assert qrr_report.summary_for(5).mrecall == 0.0
    assert qrr_report.summary_for(5).recall == 1.0
    assert dpp_report.summary_for(5).mrecall == 1.0
    assert dpp_report.summary_for(5).recall == 1.0

    # confirm the shipped greedy selection against the determinant oracle
    cset = parse_candidates(DIVERSITY_CANDIDATES)[0]
    kernel = build_l_ensemble(similarity_matrix(cset), normalize_quality(cset), ridge=1e-10)
    oracle = naive_greedy_oracle(kernel, cset.pids, 5, qid=cset.qid)
    run_pids = [line.pid for line in parse_run(str(dpp_out))[cset.qid]]
    assert run_pids == oracle.pids


@criterion("mrecall-semantics: n=2 all covered succeeds, n=7 five covered succeeds, n=3 two covered fails")
def test_mrecall_semantics():
    gold2 = GoldEntry(qid="g2", answer_sets=(("alpha",), ("beta",)))
    passages = ["alpha text", "beta text", "filler", "filler two", "filler three"]
    success, covered = mrecall_at_k(gold2, passages, 5)
    assert success and covered == 2

    gold7 = GoldEntry(qid="g7", answer_sets=tuple((f"answer {i}",) for i in range(7)))
    passages = [f"mentions answer {i}" for i in range(5)]
    success, covered = mrecall_at_k(gold7, passages, 5)
    assert success and covered == 5

    gold3 = GoldEntry(qid="g3", answer_sets=(("alpha",), ("beta",), ("gamma",)))
    passages = ["alpha text", "beta text", "filler", "filler two", "filler three"]
    success, covered = mrecall_at_k(gold3, passages, 5)
    assert not success and covered == 2


@criterion("cli-determinism: repeated rerank invocations produce byte-identical run files")
def test_cli_determinism(tmp_path):
    for mode in ("dpp", "qrr"):
        outputs = []
        for name in ("first.txt", "second.txt"):
            out = tmp_path / f"{mode}-{name}"
            res = subprocess.run(
                [sys.executable, "-m", "dpp_rerank", "rerank",
                 "--input", DIVERSITY_CANDIDATES, "--mode", mode,
                 "--k", "5", "--output", str(out)],
                capture_output=True, text=True,
            )
            assert res.returncode == 0, res.stderr
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1], f"{mode} run files differ between invocations"
