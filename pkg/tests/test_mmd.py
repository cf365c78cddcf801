import numpy as np
import pytest

from density_ratio_test.components.mmd import KernelSpec, median_heuristic, mmd_linear, mmd_test
from density_ratio_test.constants.settings import GAUSSIAN_SETTINGS
from density_ratio_test.data.densities import setting_densities
from density_ratio_test.data.simulation import sample
from density_ratio_test.exceptions import DataError, InsufficientDataError


def test_kernel_spec():
    with pytest.raises(ValueError):
        KernelSpec(bandwidth=-1.0)
    with pytest.raises(ValueError):
        KernelSpec(kind='laplace')
    with pytest.raises(ValueError):
        KernelSpec().pairwise(np.zeros((1, 2)), np.zeros((1, 2)))
    kernel = KernelSpec(bandwidth=1.0)
    assert kernel.pairwise(np.zeros((1, 1)), np.ones((1, 1)))[0] == pytest.approx(np.exp(-0.5))


def test_median_heuristic():
    assert median_heuristic([[0.0], [1.0], [3.0]]) == pytest.approx(2.0)
    with pytest.raises(InsufficientDataError):
        median_heuristic([[0.0]])
    with pytest.raises(DataError):
        median_heuristic(np.zeros((5, 2)))


def test_median_heuristic_subsample_is_deterministic():
    points = np.random.default_rng(0).random((3000, 2))
    assert median_heuristic(points, cap=500, seed=1) == median_heuristic(points, cap=500, seed=1)


def test_resolve():
    kernel = KernelSpec().resolve(np.array([[0.0], [1.0], [3.0]]))
    assert kernel.resolved
    assert kernel.bandwidth == pytest.approx(2.0)
    assert KernelSpec(bandwidth=0.3).resolve(np.zeros((2, 1))).bandwidth == 0.3


def test_mmd_linear_identical_samples():
    points = np.random.default_rng(1).random((101, 2))
    assert mmd_linear(points, points, KernelSpec(bandwidth=0.5)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InsufficientDataError):
        mmd_linear(points[:1], points, KernelSpec(bandwidth=0.5))


def test_mmd_test_detects_shift():
    f0, f1 = setting_densities(GAUSSIAN_SETTINGS.A)
    report = mmd_test(sample(f0, 500, seed=0), sample(f1, 500, seed=1), replicates=50, seed=2)
    assert report.test_name == 'mmd'
    assert report.reject
    assert report.details['bandwidth'] > 0
    assert report.replicates.shape == (50,)


def test_mmd_test_is_deterministic():
    f0, _ = setting_densities(GAUSSIAN_SETTINGS.C)
    reference, test = sample(f0, 300, seed=0), sample(f0, 100, seed=1)
    first = mmd_test(reference, test, replicates=20, seed=4)
    second = mmd_test(reference, test, replicates=20, seed=4)
    assert first.statistic == second.statistic
    assert np.array_equal(first.replicates, second.replicates)


def test_mmd_test_errors():
    points = np.random.default_rng(2).random((10, 2))
    with pytest.raises(InsufficientDataError):
        mmd_test(points, points[:1])
    with pytest.raises(ValueError):
        mmd_test(points, points, replicates=0)


@pytest.mark.slow
def test_mmd_null_rejection_rate():
    f0, _ = setting_densities(GAUSSIAN_SETTINGS.B)
    rejections = [mmd_test(sample(f0, 400, seed=2 * i), sample(f0, 100, seed=2 * i + 1), replicates=100,
                           seed=i).reject for i in range(100)]
    assert np.mean(rejections) <= 0.15


def test_mmd_linear_single_pair():
    X = np.array([[0.0], [1.0]])
    Y = np.array([[0.5], [2.0]])
    expected = np.exp(-0.5) + np.exp(-1.125) - np.exp(-2.0) - np.exp(-0.125)
    assert mmd_linear(X, Y, KernelSpec(bandwidth=1.0)) == pytest.approx(expected, rel=1e-12)
    # Extra points past the common even size are ignored.
    assert mmd_linear(np.vstack([X, [[7.0]]]), Y, KernelSpec(bandwidth=1.0)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.slow
def test_mmd_linear_is_unbiased_on_three_atoms():
    atoms = np.array([[0.0], [1.0], [2.0]])
    p = np.array([0.5, 0.3, 0.2])
    q = np.array([0.2, 0.3, 0.5])
    kernel = KernelSpec(bandwidth=1.0)

    population = 0.0
    for i in range(3):
        for j in range(3):
            k = np.exp(-(atoms[i, 0] - atoms[j, 0]) ** 2 / 2)
            population += (p[i] * p[j] + q[i] * q[j] - 2 * p[i] * q[j]) * k
    assert population == pytest.approx(0.18 * (1 - np.exp(-2.0)))

    values = []
    for seed in range(10_000):
        rng = np.random.default_rng(seed)
        X = atoms[rng.choice(3, size=20, p=p)]
        Y = atoms[rng.choice(3, size=20, p=q)]
        values.append(mmd_linear(X, Y, kernel))
    se = np.std(values, ddof=1) / np.sqrt(len(values))
    assert abs(np.mean(values) - population) <= 3 * se
