from typing import Tuple, Union

import numpy as np
from loguru import logger

from density_ratio_test.constants import metadata
from density_ratio_test.constants.settings import GaussianSetting
from density_ratio_test.data.dataset import LabeledDataset
from density_ratio_test.data.densities import GaussianMixture, TruncatedGaussian
from density_ratio_test.exceptions import InsufficientDataError, PathologicalSettingError
from density_ratio_test.utilities import Seed, derive_rng


class EmpiricalSource:
    """Resamples rows of an observed sample with replacement.

    Stands in for a density when experiments run on recorded data rather
    than a simulation setting.
    """

    def __init__(self, points: np.ndarray):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[0] == 0:
            raise InsufficientDataError('Cannot resample from an empty sample.')
        self.points = points

    def __repr__(self):
        return f'EmpiricalSource(n={self.points.shape[0]}, d={self.d})'

    @property
    def d(self) -> int:
        return self.points.shape[1]


Sampleable = Union[TruncatedGaussian, GaussianMixture, EmpiricalSource]


def sample(density: Sampleable, count: int, seed: Seed = None) -> np.ndarray:
    """Draws ``count`` i.i.d. points from a density or an empirical source."""
    if count < 0:
        raise ValueError(f'count must be non-negative, got {count}.')
    rng = derive_rng(seed)
    if isinstance(density, TruncatedGaussian):
        return _rejection_sample(density, count, rng)
    if isinstance(density, GaussianMixture):
        labels = rng.choice(len(density.components), size=count, p=density.weights)
        points = np.empty((count, density.d))
        for i, component in enumerate(density.components):
            chosen = labels == i
            points[chosen] = _rejection_sample(component, int(chosen.sum()), rng)
        return points
    if isinstance(density, EmpiricalSource):
        return density.points[rng.integers(0, density.points.shape[0], size=count)]
    raise TypeError(f'Cannot sample from {type(density).__name__}.')


def _rejection_sample(density: TruncatedGaussian, count: int, rng: np.random.Generator) -> np.ndarray:
    accepted = []
    n_accepted = 0
    n_proposed = 0
    while n_accepted < count:
        remaining = count - n_accepted
        rate = n_accepted / n_proposed if n_accepted else None
        batch = int(1.2 * remaining / rate) + 16 if rate else max(2 * remaining, 1024, 2 * n_proposed)
        batch = min(batch, metadata.REJECTION_MAX_BATCH)

        proposals = rng.normal(density.mean, density.sd, size=(batch, density.d))
        inside = proposals[np.all((proposals >= 0) & (proposals <= 1), axis=1)]
        accepted.append(inside)
        n_accepted += inside.shape[0]
        n_proposed += batch

        if (n_proposed >= metadata.REJECTION_MIN_PROPOSALS
                and n_accepted / n_proposed < metadata.REJECTION_MIN_ACCEPTANCE):
            raise PathologicalSettingError(
                f'{density} accepted {n_accepted} of {n_proposed} proposals in the unit cube.'
            )
    if not accepted:
        return np.empty((0, density.d))
    return np.concatenate(accepted)[:count]


def sample_truncated_gaussian(setting: GaussianSetting, which: int, count: int, seed: Seed = None) -> np.ndarray:
    """Draws from the reference (``which=0``) or contaminant (``which=1``) density of a setting."""
    return sample(TruncatedGaussian.from_setting(setting, which), count, seed)


def sample_contaminated(f0: Sampleable, f1: Sampleable, theta: float, n: int,
                        seed: Seed = None) -> Tuple[np.ndarray, np.ndarray]:
    """Draws ``n`` points from ``(1 - theta) f0 + theta f1``.

    Returns
    -------
        The points and a boolean indicator of the points drawn from ``f1``.

    """
    if not 0 <= theta <= 1:
        raise ValueError(f'theta must lie in [0, 1], got {theta}.')
    rng = derive_rng(seed)
    contaminated = rng.random(n) < theta
    n1 = int(contaminated.sum())
    points = np.empty((n, f0.d))
    points[~contaminated] = sample(f0, n - n1, rng)
    points[contaminated] = sample(f1, n1, rng)
    return points, contaminated


def sample_mixture(setting: GaussianSetting, theta: float, n: int, seed: Seed = None,
                   return_indicator: bool = False):
    f0 = TruncatedGaussian.from_setting(setting, 0)
    f1 = TruncatedGaussian.from_setting(setting, 1)
    points, contaminated = sample_contaminated(f0, f1, theta, n, seed)
    return (points, contaminated) if return_indicator else points


def sample_sizes(n_train: int, frac_n0: float = metadata.FRAC_N0,
                 frac_test: float = metadata.FRAC_TEST) -> Tuple[int, int, int]:
    """Returns the reference, contaminant and test sizes for a training size."""
    n0 = int(round(frac_n0 * n_train))
    return n0, n_train - n0, max(int(round(frac_test * n_train)), 1)


def simulate_dataset(f0_train: Sampleable, f1: Sampleable, n_train: int, theta: float = 0.0,
                     n: int = 0, frac_n0: float = metadata.FRAC_N0, seed: Seed = None,
                     f0_test: Sampleable = None) -> LabeledDataset:
    """Simulates labelled training samples and an unlabelled test sample.

    Parameters
    ----------
    f0_train
        Reference density of the training sample.
    f1
        Contaminant density.
    n_train
        Training size; ``frac_n0`` of it is reference.
    theta
        Contamination fraction of the test sample.
    n
        Test size.
    frac_n0
        Reference share of the training sample.
    seed
        Seed of the draws.
    f0_test
        Reference density of the test sample, ``f0_train`` by default.

    """
    rng = derive_rng(seed)
    n0, n1, _ = sample_sizes(n_train, frac_n0)
    reference = sample(f0_train, n0, rng)
    contaminant = sample(f1, n1, rng)
    test, _ = sample_contaminated(f0_test if f0_test is not None else f0_train, f1, theta, n, rng)
    logger.debug(f'Simulated n0={n0}, n1={n1}, n={n} with theta={theta}.')
    return LabeledDataset.from_samples(reference=reference, contaminant=contaminant, test=test, d=f1.d)
