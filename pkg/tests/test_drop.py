import numpy as np
import pytest

from density_ratio_test.components.drop import (PartitionSequence, best_split, drop_context, evaluate_sequence,
                                                fit_drop, grow_sequence, min_split_points, select_size)
from density_ratio_test.components.histogram import ThresholdedHistogram, estimate, make_context, signal_terms
from density_ratio_test.components.partition import PartitionTree, make_bin_table
from density_ratio_test.constants import metadata, results
from density_ratio_test.constants.settings import GAUSSIAN_SETTINGS
from density_ratio_test.data.densities import setting_densities
from density_ratio_test.data.simulation import sample, simulate_dataset
from density_ratio_test.exceptions import InsufficientDataError
from density_ratio_test.tools.experiments import ExperimentPlan, simulate_signal


@pytest.fixture
def separated():
    points0 = np.repeat([0.1, 0.2], 250).reshape(-1, 1)
    points1 = np.repeat([0.8, 0.9], 250).reshape(-1, 1)
    return points0, points1


@pytest.fixture
def setting_a_parts():
    f0, f1 = setting_densities(GAUSSIAN_SETTINGS.A)
    return sample(f0, 700, seed=0), sample(f1, 300, seed=1)


@pytest.mark.parametrize('criterion', list(metadata.SPLIT_CRITERION))
def test_best_split_separates(separated, criterion):
    points0, points1 = separated
    ctx = drop_context(0.05, 8, 100, 1000, 1000)
    best = best_split(PartitionTree.root(1), 0, points0, points1, ctx, criterion)
    assert best.dim == 0
    assert best.value == pytest.approx(0.5)
    assert best.gain > 0


def test_best_split_matches_exhaustive_scan(setting_a_parts):
    points0, points1 = setting_a_parts
    ctx = drop_context(0.05, 16, 100, len(points0), len(points1))
    best = best_split(PartitionTree.root(2), 0, points0, points1, ctx)
    parent = signal_terms(ctx, len(points0), len(points1))

    expected = -np.inf
    for dim in range(2):
        coords = np.unique(np.concatenate([points0[:, dim], points1[:, dim]]))
        for value in (coords[:-1] + coords[1:]) / 2:
            left0 = np.sum(points0[:, dim] < value)
            left1 = np.sum(points1[:, dim] < value)
            delta = (signal_terms(ctx, left0, left1)
                     + signal_terms(ctx, len(points0) - left0, len(points1) - left1) - parent)
            expected = max(expected, float(delta))
    assert best.delta == pytest.approx(expected)


def test_best_split_needs_points():
    ctx = drop_context(0.05, 8, 100, 1000, 1000)
    assert best_split(PartitionTree.root(1), 0, np.empty((0, 1)), [[0.5]], ctx) is None
    assert best_split(PartitionTree.root(1), 0, [[0.2]], [[0.7]], ctx, min_points=10) is None
    with pytest.raises(ValueError):
        best_split(PartitionTree.root(1), 0, [[0.2]], [[0.7]], ctx, criterion='entropy')


def test_best_split_skips_duplicate_coordinates():
    ctx = drop_context(0.05, 8, 100, 1000, 1000)
    points = np.full((20, 1), 0.3)
    assert best_split(PartitionTree.root(1), 0, points, points, ctx) is None


def test_min_split_points():
    ctx = drop_context(0.05, 8, 100, 1000, 1000)
    assert min_split_points(ctx) == int(np.ceil(3 * 1000 * ctx.eps1))


def test_grow_sequence(setting_a_parts):
    points0, points1 = setting_a_parts
    ctx = drop_context(0.05, 8, 100, len(points0), len(points1))
    seq = grow_sequence(points0, points1, ctx, K_max=8)
    assert 1 < seq.K_reached <= 8
    assert len(seq.splits) == seq.K_reached - 1
    assert all(split.gain > 0 for split in seq.splits)
    assert seq.to_dict()['tree']['K'] == seq.K_reached


def test_grow_sequence_is_nested(setting_a_parts):
    points0, points1 = setting_a_parts
    ctx = drop_context(0.05, 8, 100, len(points0), len(points1))
    seq = grow_sequence(points0, points1, ctx, K_max=8)
    for K in range(1, seq.K_reached):
        coarse = seq.snapshot(K).locate_many(points0)
        fine = seq.snapshot(K + 1).locate_many(points0)
        # Refining only moves points of one coarse bin into the new bin.
        assert np.all((fine == coarse) | (fine == K))


def test_grow_sequence_k_max_one(setting_a_parts):
    points0, points1 = setting_a_parts
    ctx = drop_context(0.05, 1, 100, len(points0), len(points1))
    seq = grow_sequence(points0, points1, ctx, K_max=1)
    assert seq.K_reached == 1
    with pytest.raises(ValueError):
        grow_sequence(points0, points1, ctx, K_max=0)


def test_evaluate_sequence_matches_direct_counts(setting_a_parts):
    points0, points1 = setting_a_parts
    ctx = drop_context(0.05, 8, 100, len(points0), len(points1))
    seq = grow_sequence(points0, points1, ctx, K_max=8)
    f0, f1 = setting_densities(GAUSSIAN_SETTINGS.A)
    est0, est1 = sample(f0, 700, seed=2), sample(f1, 300, seed=3)
    histograms = evaluate_sequence(seq, est0, est1, 0.05, 100)
    assert len(histograms) == seq.K_reached
    for K, hist in enumerate(histograms, start=1):
        direct_ctx = make_context(0.05, K, 100, 700, 300, u_override=np.log(8 * 8 / 0.05))
        direct = estimate(direct_ctx, make_bin_table(seq.snapshot(K), est0, est1))
        assert hist.K == K
        assert hist.h0 == pytest.approx(direct.h0)
        assert hist.sigma2_hat == pytest.approx(direct.sigma2_hat)


def _halving_sequence(K_max):
    tree = PartitionTree.root(1)
    for k in range(1, K_max):
        tree = tree.split_leaf(0, 0, 0.5 ** k)
    return PartitionSequence(tree=tree, K_max=K_max, criterion=metadata.SPLIT_CRITERION.DENSITY_RATIO, splits=())


def _histograms(K_max, signal, n=100, n0=1000, n1=100):
    histograms = []
    for K in range(1, K_max + 1):
        h0 = np.full(K, 1 / K)
        histograms.append(ThresholdedHistogram(h0=h0, h1=h0, r=np.ones(K), omega=np.zeros(K, dtype=np.int8),
                                               sigma2_hat=signal(K), K0=0, K1=0,
                                               context=make_context(0.05, K, n, n0, n1)))
    return histograms


def test_select_size_prefers_growing_signal():
    seq = _halving_sequence(6)
    histograms = _histograms(6, lambda K: 0.01 * K ** 2)
    assert select_size(seq, histograms, metadata.SELECTION_MODE.SIMPLIFIED) == 6


def test_select_size_ties_go_to_smallest():
    seq = _halving_sequence(6)
    histograms = _histograms(6, lambda K: K / 8, n=1000, n0=1000)
    assert select_size(seq, histograms, metadata.SELECTION_MODE.SIMPLIFIED) == 1
    assert select_size(seq, histograms, metadata.SELECTION_MODE.SIMPLIFIED, min_K=3) == 3


def test_select_size_skips_zero_signal():
    seq = _halving_sequence(4)
    histograms = _histograms(4, lambda K: 0.0 if K < 3 else 0.5)
    assert select_size(seq, histograms) == 3
    assert select_size(seq, _histograms(4, lambda K: 0.0), min_K=2) == 2


def test_select_size_errors():
    seq = _halving_sequence(4)
    with pytest.raises(ValueError):
        select_size(seq, _histograms(3, lambda K: 1.0))
    with pytest.raises(ValueError):
        select_size(seq, _histograms(4, lambda K: 1.0), mode='fastest')
    assert select_size(seq, _histograms(4, lambda K: 1.0), min_K=10) == 4


@pytest.fixture(scope='module')
def setting_a_dataset():
    f0, f1 = setting_densities(GAUSSIAN_SETTINGS.A)
    return simulate_dataset(f0, f1, 4000, theta=0.0, n=400, seed=0)


@pytest.mark.parametrize('criterion', list(metadata.SPLIT_CRITERION))
def test_fit_drop(setting_a_dataset, criterion):
    fitted = fit_drop(setting_a_dataset, 400, K_max=16, criterion=criterion, seed=1)
    assert 1 <= fitted.K_star <= fitted.sequence.K_reached
    assert fitted.histogram.K == fitted.K_star
    assert fitted.tree.K == fitted.K_star
    assert fitted.context.n == 400
    assert fitted.histogram.sigma2_hat > 0
    assert len(fitted.sequence.per_K_signal) == fitted.sequence.K_reached
    assert len(fitted.est_reference) + len(fitted.est_contaminant) == 2000


def test_fit_drop_is_deterministic(setting_a_dataset):
    first = fit_drop(setting_a_dataset, 400, K_max=16, seed=7)
    second = fit_drop(setting_a_dataset, 400, K_max=16, seed=7)
    assert first.sequence.to_dict() == second.sequence.to_dict()


def test_fit_drop_min_k(setting_a_dataset):
    fitted = fit_drop(setting_a_dataset, 400, K_max=16, seed=1, min_K=4)
    assert fitted.K_star >= min(4, fitted.sequence.K_reached)


def test_fit_drop_needs_test_size(setting_a_dataset):
    with pytest.raises(InsufficientDataError):
        fit_drop(setting_a_dataset, 0)


def test_best_split_single_label_has_no_gini_gain():
    ctx = drop_context(0.05, 8, 100, 1000, 1000)
    points = np.random.default_rng(0).random((50, 1))
    assert best_split(PartitionTree.root(1), 0, points, np.empty((0, 1)), ctx, metadata.SPLIT_CRITERION.GINI) is None
    assert best_split(PartitionTree.root(1), 0, np.empty((0, 1)), points, ctx, metadata.SPLIT_CRITERION.GINI) is None


def test_best_split_without_signal_anywhere():
    # Both labels are rare relative to the sample sizes, so the bin and every child land in omega01.
    ctx = drop_context(0.05, 8, 100, 100_000, 100_000)
    rng = np.random.default_rng(1)
    points0, points1 = rng.random((20, 2)), rng.random((20, 2))
    assert signal_terms(ctx, 20, 20) == 0
    assert best_split(PartitionTree.root(2), 0, points0, points1, ctx) is None
    assert best_split(PartitionTree.root(2), 0, points0, points1, ctx, metadata.SPLIT_CRITERION.GINI) is not None


@pytest.mark.parametrize('criterion', list(metadata.SPLIT_CRITERION))
def test_grow_sequence_applies_the_best_admissible_split(setting_a_parts, criterion):
    points0, points1 = setting_a_parts
    ctx = drop_context(0.05, 8, 100, len(points0), len(points1))
    min_points = min_split_points(ctx)
    seq = grow_sequence(points0, points1, ctx, K_max=8, criterion=criterion)
    assert seq.splits
    for step, applied in enumerate(seq.splits):
        tree = seq.snapshot(step + 1)
        bins0, bins1 = tree.locate_many(points0), tree.locate_many(points1)
        held = np.sum(bins0 == applied.bin_id) + np.sum(bins1 == applied.bin_id)
        assert held >= min_points

        candidates = {
            bin_id: best_split(tree, bin_id, points0[bins0 == bin_id], points1[bins1 == bin_id], ctx,
                               criterion, min_points)
            for bin_id in range(tree.K)
        }
        rescanned = candidates[applied.bin_id]
        assert rescanned.dim == applied.dim
        assert rescanned.value == pytest.approx(applied.value)
        assert all(applied.gain >= c.gain for c in candidates.values() if c is not None)
        for bin_id in range(tree.K):
            if np.sum(bins0 == bin_id) + np.sum(bins1 == bin_id) < min_points:
                assert candidates[bin_id] is None


def _median_signals(setting, n_train, reps):
    plan = ExperimentPlan(setting=setting, n_train=(n_train,), reps=reps, seed=0)
    raw = simulate_signal(plan)
    assert not raw[results.FAILED_COLUMN].any()
    return raw.groupby(results.CRITERION_COLUMN)[results.SIGMA2_HAT_COLUMN].median()


@pytest.mark.slow
def test_density_ratio_partitions_carry_more_signal_than_gini():
    medians = _median_signals('B', 100_000, 20)
    assert medians[metadata.SPLIT_CRITERION.DENSITY_RATIO] > medians[metadata.SPLIT_CRITERION.GINI]


@pytest.mark.slow
def test_density_ratio_partitions_carry_more_signal_than_gini_at_large_n_train():
    medians = _median_signals('B', 1_000_000, 3)
    assert medians[metadata.SPLIT_CRITERION.DENSITY_RATIO] > medians[metadata.SPLIT_CRITERION.GINI]


@pytest.mark.slow
@pytest.mark.xfail(reason='Setting A Gini partitions keep reference counts near the eps0 floor, so their '
                          'est-sample signal at the selected size runs high', strict=False)
def test_density_ratio_signal_gap_in_setting_a():
    medians = _median_signals('A', 100_000, 20)
    assert medians[metadata.SPLIT_CRITERION.DENSITY_RATIO] > medians[metadata.SPLIT_CRITERION.GINI]
