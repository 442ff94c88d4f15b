import numpy as np
import pytest

from neurosyntax import atlas, stats
from neurosyntax.encoder import FoldSpec, r2_score


def split_by_folds(matrix, folds: FoldSpec):
    return [matrix[a:b] for a, b in folds.boundaries]


def make_folds(n_tr=282, k=4):
    return FoldSpec.contiguous(n_tr, k)


def test_permutation_p_perfect_prediction():
    rng = np.random.default_rng(0)
    folds = make_folds()
    actual = rng.standard_normal((282, 1)).cumsum(axis=0)  # smooth-ish signal
    cfg = stats.StatsConfig(block_size=10, n_permutations=99, seed=1)
    p = stats.block_permutation_test(
        split_by_folds(actual, folds), split_by_folds(actual, folds), cfg
    )
    assert p[0] == pytest.approx(1.0 / 100.0)


def test_permutation_p_zero_iterations_degenerate():
    rng = np.random.default_rng(1)
    folds = make_folds(80, 4)
    actual = rng.standard_normal((80, 2))
    pred = rng.standard_normal((80, 2))
    cfg = stats.StatsConfig(n_permutations=0, seed=0)
    p = stats.block_permutation_test(
        split_by_folds(pred, folds), split_by_folds(actual, folds), cfg
    )
    assert np.all(p == 1.0)


def test_permutation_p_roughly_uniform_under_null():
    # light version of the acceptance calibration: 60 sims, loose bound
    folds = make_folds()
    cfg = stats.StatsConfig(block_size=10, n_permutations=99, seed=7)
    rng = np.random.default_rng(42)
    pvals = []
    for _ in range(60):
        actual = rng.standard_normal((282, 1))
        pred = rng.standard_normal((282, 1))
        p = stats.block_permutation_test(
            split_by_folds(pred, folds), split_by_folds(actual, folds), cfg
        )
        pvals.append(p[0])
    pvals = np.sort(pvals)
    grid = (np.arange(1, 61)) / 60
    assert np.max(np.abs(pvals - grid)) < 0.18


def test_permutation_invariant_to_monotone_statistic_transform():
    rng = np.random.default_rng(3)
    folds = make_folds(120, 4)
    actual = rng.standard_normal((120, 3))
    pred = actual + rng.standard_normal((120, 3))
    cfg = stats.StatsConfig(block_size=10, n_permutations=49, seed=5)
    p, observed, dist = stats.block_permutation_test(
        split_by_folds(pred, folds),
        split_by_folds(actual, folds),
        cfg,
        keep_distribution=True,
    )
    for f in (np.tanh, lambda x: 3 * x + 2, lambda x: np.exp(x / 4)):
        count = (f(dist) >= f(observed)).sum(axis=0)
        assert np.array_equal((1 + count) / (1 + cfg.n_permutations), p)


def test_permutation_seed_reproducible():
    rng = np.random.default_rng(4)
    folds = make_folds(120, 4)
    actual = rng.standard_normal((120, 2))
    pred = rng.standard_normal((120, 2))
    cfg = stats.StatsConfig(n_permutations=50, seed=9)
    a = stats.block_permutation_test(
        split_by_folds(pred, folds), split_by_folds(actual, folds), cfg
    )
    b = stats.block_permutation_test(
        split_by_folds(pred, folds), split_by_folds(actual, folds), cfg
    )
    assert np.array_equal(a, b)


def test_fold_shorter_than_block():
    folds = make_folds(16, 4)  # folds of 4 TRs
    actual = np.random.default_rng(0).standard_normal((16, 1))
    cfg = stats.StatsConfig(block_size=10, n_permutations=5)
    with pytest.raises(stats.FoldShorterThanBlock):
        stats.block_permutation_test(
            split_by_folds(actual, folds), split_by_folds(actual, folds), cfg
        )


def test_bootstrap_identical_models():
    rng = np.random.default_rng(5)
    folds = make_folds(120, 4)
    actual = rng.standard_normal((120, 2))
    pred = actual + 0.5 * rng.standard_normal((120, 2))
    cfg = stats.StatsConfig(block_size=10, n_bootstrap=99, seed=2)
    p = stats.bootstrap_diff_test(
        split_by_folds(pred, folds),
        split_by_folds(pred, folds),
        split_by_folds(actual, folds),
        cfg,
    )
    assert np.all(p >= 0.5)


def test_bootstrap_separation_fixture():
    rng = np.random.default_rng(6)
    folds = make_folds(282, 4)
    actual = rng.standard_normal((282, 1)).cumsum(axis=0)
    good = actual + 0.2 * rng.standard_normal((282, 1))
    shuffled = actual.copy()
    rng.shuffle(shuffled)
    cfg = stats.StatsConfig(block_size=10, n_bootstrap=999, seed=3)
    p = stats.bootstrap_diff_test(
        split_by_folds(good, folds),
        split_by_folds(shuffled, folds),
        split_by_folds(actual, folds),
        cfg,
    )
    assert p[0] < 0.01


def test_bootstrap_swap_gives_complement():
    rng = np.random.default_rng(7)
    folds = make_folds(120, 4)
    actual = rng.standard_normal((120, 1))
    a = actual + 0.4 * rng.standard_normal((120, 1))
    b = actual + 0.9 * rng.standard_normal((120, 1))
    cfg = stats.StatsConfig(block_size=10, n_bootstrap=199, seed=8)
    p_ab = stats.bootstrap_diff_test(
        split_by_folds(a, folds), split_by_folds(b, folds), split_by_folds(actual, folds), cfg
    )
    p_ba = stats.bootstrap_diff_test(
        split_by_folds(b, folds), split_by_folds(a, folds), split_by_folds(actual, folds), cfg
    )
    granularity = 2.0 / (1 + cfg.n_bootstrap)
    assert abs((p_ab[0] + p_ba[0]) - 1.0) <= granularity + 1e-12


def test_bootstrap_full_fold_blocks_reproduce_observed():
    rng = np.random.default_rng(8)
    folds = make_folds(80, 4)
    actual = rng.standard_normal((80, 2))
    a = actual + rng.standard_normal((80, 2))
    b = rng.standard_normal((80, 2))
    cfg = stats.StatsConfig(block_size=20, n_bootstrap=25, seed=4)  # block = fold
    p, observed, dist = stats.bootstrap_diff_test(
        split_by_folds(a, folds),
        split_by_folds(b, folds),
        split_by_folds(actual, folds),
        cfg,
        keep_distribution=True,
    )
    assert np.allclose(dist, observed[None, :])


def test_bh_fdr_worked_example():
    sig = stats.bh_fdr(np.array([0.01, 0.02, 0.5]), q=0.05)
    assert sig.threshold == pytest.approx(0.02)
    assert list(sig.reject) == [True, True, False]


def test_bh_fdr_all_ones_rejects_none():
    sig = stats.bh_fdr(np.ones(10), q=0.05)
    assert not np.any(sig.reject)
    assert sig.threshold == 0.0


def test_bh_fdr_uniform_dominance_rejects_all():
    m = 8
    p = np.full(m, 0.05 / m / 2)
    sig = stats.bh_fdr(p, q=0.05)
    assert np.all(sig.reject)


def test_bh_fdr_monotone_in_q():
    rng = np.random.default_rng(9)
    for _ in range(100):
        p = rng.uniform(1e-6, 1.0, size=rng.integers(3, 40))
        small = stats.bh_fdr(p, q=0.02).reject
        big = stats.bh_fdr(p, q=0.10).reject
        assert np.all(big[small])  # small-q rejections contained in big-q


def test_bh_fdr_rejects_bad_pvalues():
    with pytest.raises(stats.StatsError):
        stats.bh_fdr(np.array([0.0, 0.5]))
    with pytest.raises(stats.StatsError):
        stats.bh_fdr(np.array([0.5, 1.2]))


def _labels(spec):
    text = "\n".join(f"{i}\t{h}\t{p}" for i, (h, p) in enumerate(spec))
    return atlas.load_parcel_labels(text)


def test_roi_aggregate_all_significant():
    labels = _labels([("L", "PFm"), ("L", "PGs"), ("R", "55b")])
    reject = {"s1": np.array([True, True, True]), "s2": np.array([True, True, True])}
    scores = {"s1": np.array([0.5, 0.4, 0.3]), "s2": np.array([0.2, 0.1, 0.6])}
    report = stats.roi_aggregate(reject, scores, {"s1": labels, "s2": labels})
    ag = [s for s in report.summaries() if s.roi == "AG" and s.hemisphere == "L"]
    assert len(ag) == 1
    assert ag[0].mean_pct == 100.0
    assert ag[0].se_pct == 0.0


def test_roi_aggregate_se_formula():
    labels = _labels([("L", "PFm")])
    reject = {"s1": np.array([True]), "s2": np.array([False])}
    scores = {"s1": np.array([1.0]), "s2": np.array([0.0])}
    report = stats.roi_aggregate(reject, scores, {"s1": labels, "s2": labels})
    ag = [s for s in report.summaries() if s.roi == "AG"][0]
    assert ag.mean_pct == pytest.approx(50.0)
    assert ag.se_pct == pytest.approx(50.0 / np.sqrt(2))  # ~35.36


def test_roi_aggregate_empty_roi_absent():
    labels = _labels([("L", "PFm")])
    reject = {"s1": np.array([True])}
    scores = {"s1": np.array([0.1])}
    report = stats.roi_aggregate(reject, scores, {"s1": labels})
    rois_present = {(s.roi, s.hemisphere) for s in report.summaries()}
    assert rois_present == {("AG", "L")}


def test_roi_aggregate_label_count_mismatch():
    labels = _labels([("L", "PFm"), ("L", "PGs")])
    with pytest.raises(atlas.AtlasError):
        stats.roi_aggregate(
            {"s1": np.array([True])}, {"s1": np.array([0.1])}, {"s1": labels}
        )


def test_roi_report_csv_shape():
    labels = _labels([("L", "PFm"), ("R", "RSC")])
    reject = {"s1": np.array([True, False])}
    scores = {"s1": np.array([0.5, -0.1])}
    report = stats.roi_aggregate(reject, scores, {"s1": labels})
    csv = report.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "roi,hemisphere,subject,pct_significant,mean_r2"
    assert len(lines) == 1 + 2  # AG-L and PCC-R rows


def test_different_seeds_agree_within_binomial_se():
    rng = np.random.default_rng(10)
    folds = make_folds(120, 4)
    actual = rng.standard_normal((120, 1))
    pred = actual + 2.0 * rng.standard_normal((120, 1))
    n = 400
    ps = []
    for seed in (1, 2):
        cfg = stats.StatsConfig(block_size=10, n_permutations=n, seed=seed)
        ps.append(
            stats.block_permutation_test(
                split_by_folds(pred, folds), split_by_folds(actual, folds), cfg
            )[0]
        )
    se = np.sqrt(ps[0] * (1 - ps[0]) / n)
    assert abs(ps[0] - ps[1]) <= 3 * se + 2.0 / n
