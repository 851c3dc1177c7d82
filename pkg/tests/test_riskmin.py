import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hier_risk import (CostMatrix, PredictionSet, RankedOutput, SynthConfig,
                       batch_apply, batch_crm_top1, build_cost_matrix,
                       conditional_risk, crm_predict, crm_rerank,
                       gen_predictions, gen_taxonomy, likelihood_rank,
                       parse_taxonomy)
from hier_risk.riskmin import LIKELIHOOD, RISK

TWO_BRANCH = parse_taxonomy(
    "a\tp1\nb\tp1\nc\tp2\nd\tp2\np1\troot\np2\troot\n")
FLAT3 = CostMatrix(np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]))


def synth_batch(seed, K, N, tree_mode="random-attachment"):
    cfg = SynthConfig(seed=seed, K=K, N=N, tree_mode=tree_mode)
    tax = gen_taxonomy(cfg)
    return tax, gen_predictions(cfg, tax)


def test_cost_matrix_shape_validation():
    with pytest.raises(ValueError, match="square"):
        CostMatrix(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="symmetric"):
        CostMatrix(np.array([[0, 1], [2, 0]]))
    with pytest.raises(ValueError, match="diagonal"):
        CostMatrix(np.array([[1, 1], [1, 0]]))
    with pytest.raises(ValueError, match="finite"):
        CostMatrix(np.array([[0.0, np.inf], [np.inf, 0.0]]))


def test_cost_matrix_accepts_raw_float_entries():
    # The direct constructor is the side door for externally supplied
    # costs; only shape properties are enforced, not tree structure.
    C = CostMatrix(np.array([[0.0, 2.5], [2.5, 0.0]]))
    assert C.K == 2
    assert C.class_names is None


def test_cost_matrix_class_name_validation():
    with pytest.raises(ValueError, match="unique"):
        CostMatrix(np.array([[0, 1], [1, 0]]), ["a", "a"])
    with pytest.raises(ValueError, match="one class name per row"):
        CostMatrix(np.array([[0, 1], [1, 0]]), ["a"])


def test_scaled_returns_new_matrix():
    C = build_cost_matrix(TWO_BRANCH)
    D = C.scaled(2.5)
    assert np.array_equal(D.entries, C.entries * 2.5)
    assert C.entries[0, 1] == 1
    assert D.class_names == C.class_names


def test_probability_vector_validation():
    C = FLAT3
    with pytest.raises(ValueError, match="expected 3"):
        conditional_risk([0.5, 0.5], C)
    with pytest.raises(ValueError, match="negative"):
        conditional_risk([-0.1, 0.6, 0.5], C)
    with pytest.raises(ValueError, match="non-finite"):
        conditional_risk([np.nan, 0.5, 0.5], C)
    with pytest.raises(ValueError, match="1e-6"):
        conditional_risk([0.5, 0.5, 0.1], C)
    with pytest.raises(ValueError, match="1-d"):
        conditional_risk(np.ones((1, 3)) / 3, C)


def test_slightly_off_sums_are_renormalized():
    eps = 4e-7
    risks = conditional_risk([0.5 + eps, 0.25, 0.25], FLAT3)
    exact = conditional_risk([(0.5 + eps) / (1 + eps),
                              0.25 / (1 + eps), 0.25 / (1 + eps)], FLAT3)
    assert np.array_equal(risks, exact)


def test_risk_ties_break_to_lowest_index():
    # Uniform mass on the two-branch tree makes every class risk equal.
    p = [0.25, 0.25, 0.25, 0.25]
    C = build_cost_matrix(TWO_BRANCH)
    assert crm_predict(p, C) == 0
    assert crm_rerank(p, C).permutation.tolist() == [0, 1, 2, 3]
    # Dyadic two-way tie between classes 1 and 2 on the flat matrix.
    r = crm_rerank([0.5, 0.25, 0.25], FLAT3)
    assert r.permutation.tolist() == [0, 1, 2]


def test_likelihood_ties_break_to_lowest_index():
    r = likelihood_rank([0.25, 0.375, 0.375])
    assert r.permutation.tolist() == [1, 2, 0]
    assert r.basis == LIKELIHOOD
    assert likelihood_rank([0.5, 0.5]).permutation.tolist() == [0, 1]


def test_rerank_outputs_are_consistent():
    C = build_cost_matrix(TWO_BRANCH)
    r = crm_rerank([0.35, 0.05, 0.33, 0.27], C)
    assert r.basis == RISK
    assert sorted(r.permutation.tolist()) == [0, 1, 2, 3]
    assert np.array_equal(np.sort(r.scores[r.permutation], kind="stable"),
                          r.scores[r.permutation])
    assert r.permutation[0] == crm_predict([0.35, 0.05, 0.33, 0.27], C)


def test_rerank_is_scale_invariant():
    C = build_cost_matrix(TWO_BRANCH)
    rng = np.random.Generator(np.random.PCG64(4))
    for _ in range(50):
        p = rng.dirichlet(np.ones(4))
        assert np.array_equal(crm_rerank(p, C).permutation,
                              crm_rerank(p, C.scaled(7.25)).permutation)


def test_flat_costs_reduce_to_likelihood_order():
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(50):
        p = rng.dirichlet(np.full(3, 0.7))
        assert np.array_equal(crm_rerank(p, FLAT3).permutation,
                              likelihood_rank(p).permutation)


def test_ranked_output_rejects_unknown_basis():
    with pytest.raises(ValueError, match="basis"):
        RankedOutput(np.array([0, 1]), np.array([0.6, 0.4]), "alphabetical")


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6), K=st.integers(2, 16))
def test_dominant_mass_keeps_the_argmax_on_top(seed, K):
    # Whenever one class holds more than half the mass, minimizing
    # expected cost cannot move it off the top, for any tree.
    rng = np.random.Generator(np.random.PCG64(seed))
    tax = gen_taxonomy(SynthConfig(seed=seed, K=K, N=0,
                                   tree_mode="random-attachment"))
    C = build_cost_matrix(tax)
    top = float(rng.uniform(0.5000001, 0.999))
    rest = rng.dirichlet(np.ones(K - 1)) * (1.0 - top)
    winner = int(rng.integers(0, K))
    p = np.insert(rest, winner, top)
    assert crm_predict(p, C) == winner
    assert crm_predict(p, C, use_fastpath=True) == winner


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_fastpath_is_bit_identical(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    K = int(rng.integers(2, 10))
    tax = gen_taxonomy(SynthConfig(seed=seed, K=K, N=0,
                                   tree_mode="random-attachment"))
    C = build_cost_matrix(tax)
    for _ in range(10):
        p = rng.dirichlet(np.full(K, 0.4))
        assert crm_predict(p, C) == crm_predict(p, C, use_fastpath=True)


def dyadic_rows(seed, N, K, denom_bits=20):
    # Rows of the form count / 2**denom_bits sum to exactly 1.0 in
    # binary floating point, so no path renormalizes them and raw rows
    # can be fed to both the batch and single-sample entry points.
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.multinomial(2 ** denom_bits,
                             rng.dirichlet(np.ones(K)), size=N)
    return counts.astype(np.float64) / 2.0 ** denom_bits


def test_batch_apply_matches_single_sample_calls():
    # Bit-for-bit, not approximately: the batch kernel and the
    # single-sample call accumulate in the same order.
    tax, _ = synth_batch(2, 7, 0)
    C = build_cost_matrix(tax)
    probs = dyadic_rows(2, 64, 7)
    truth = np.zeros(64, dtype=np.int64)
    preds = PredictionSet(probs, truth, C.class_names)
    for basis, alias in ((RISK, "crm"), (LIKELIHOOD, "likelihood")):
        batch = batch_apply(preds, C, alias)
        for i in range(preds.N):
            if basis is RISK:
                single = crm_rerank(probs[i], C)
            else:
                single = likelihood_rank(probs[i])
            assert batch[i].basis == basis
            assert np.array_equal(batch[i].permutation, single.permutation)
            assert np.array_equal(batch[i].scores, single.scores)


def test_batch_apply_accepts_full_basis_names():
    tax, preds = synth_batch(5, 4, 8)
    C = build_cost_matrix(tax)
    a = batch_apply(preds, C, "risk-ascending")
    b = batch_apply(preds, C, "crm")
    assert all(np.array_equal(x.permutation, y.permutation)
               for x, y in zip(a, b))
    with pytest.raises(ValueError, match="basis"):
        batch_apply(preds, C, "best-first")


def test_batch_apply_requires_costs_for_risk_basis():
    _, preds = synth_batch(6, 4, 8)
    with pytest.raises(ValueError, match="cost matrix"):
        batch_apply(preds, None, "crm")


def test_batch_apply_checks_class_names():
    tax, preds = synth_batch(8, 4, 8)
    C = build_cost_matrix(tax)
    renamed = PredictionSet(preds.probs, preds.truth,
                            [f"k{i}" for i in range(4)])
    with pytest.raises(ValueError, match="class order mismatch"):
        batch_apply(renamed, C, "crm")


def test_threaded_batch_is_bit_identical():
    tax, preds = synth_batch(9, 6, 9000)
    C = build_cost_matrix(tax)
    serial = batch_apply(preds, C, "crm", threads=1)
    threaded = batch_apply(preds, C, "crm", threads=4)
    for a, b in zip(serial, threaded):
        assert np.array_equal(a.permutation, b.permutation)
        assert np.array_equal(a.scores, b.scores)
    assert np.array_equal(batch_crm_top1(preds, C, threads=4),
                          batch_crm_top1(preds, C, threads=1))


def test_batch_top1_matches_full_ranking():
    tax, preds = synth_batch(12, 9, 512)
    C = build_cost_matrix(tax)
    ranked = batch_apply(preds, C, "crm")
    tops = np.array([r.permutation[0] for r in ranked])
    assert np.array_equal(batch_crm_top1(preds, C), tops)
    assert np.array_equal(batch_crm_top1(preds, C, use_fastpath=True), tops)
