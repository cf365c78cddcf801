from typing import Sequence

import numpy as np
from scipy import stats

from density_ratio_test.constants.settings import GaussianSetting
from density_ratio_test.exceptions import InvalidSettingError
from density_ratio_test.utilities import get_truncnorm_from_sd, normal_mass


class TruncatedGaussian:
    """A Gaussian with diagonal covariance conditioned on the unit cube.

    With a diagonal covariance the truncated density factors into
    truncated-normal marginals, so rectangle probabilities are products
    of one-dimensional normal masses.
    """

    def __init__(self, mean, variance):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        variance = np.broadcast_to(np.asarray(variance, dtype=float), self.mean.shape)
        if np.any(variance <= 0):
            raise InvalidSettingError('Variances must be positive.')
        self.sd = np.sqrt(variance)
        self.axis_mass = normal_mass(0.0, 1.0, self.mean, self.sd)

    def __repr__(self):
        return f'TruncatedGaussian(mean={self.mean.tolist()}, variance={(self.sd ** 2).tolist()})'

    @classmethod
    def from_setting(cls, setting: GaussianSetting, which: int) -> 'TruncatedGaussian':
        if which not in (0, 1):
            raise ValueError(f'which must be 0 (reference) or 1 (contaminant), got {which}.')
        return cls(setting.mean0 if which == 0 else setting.mean1, setting.cov_diag)

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def variance(self) -> np.ndarray:
        return self.sd ** 2

    @property
    def truncation_mass(self) -> float:
        """Probability that the untruncated Gaussian lands in the unit cube."""
        return float(np.prod(self.axis_mass))

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all((x >= 0) & (x <= 1), axis=1)
        density = np.prod(stats.norm.pdf(x, self.mean, self.sd) / self.axis_mass, axis=1)
        return np.where(inside, density, 0.0)

    def rectangle_mass(self, lower, upper) -> np.ndarray:
        """Probability of the axis-aligned boxes ``[lower, upper]``.

        ``lower`` and ``upper`` have shape ``(..., d)``; the result drops
        the last axis.
        """
        lower = np.clip(np.asarray(lower, dtype=float), 0.0, 1.0)
        upper = np.clip(np.asarray(upper, dtype=float), 0.0, 1.0)
        return np.prod(normal_mass(lower, upper, self.mean, self.sd) / self.axis_mass, axis=-1)

    def marginal(self, axis: int):
        return get_truncnorm_from_sd(self.mean[axis], self.sd[axis])


class GaussianMixture:
    """A finite mixture of truncated Gaussians on the unit cube."""

    def __init__(self, components: Sequence[TruncatedGaussian], weights: Sequence[float]):
        weights = np.asarray(weights, dtype=float)
        if len(components) == 0 or len(components) != weights.size:
            raise InvalidSettingError('A mixture needs one weight per component and at least one component.')
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
            raise InvalidSettingError(f'Mixture weights {weights.tolist()} must be non-negative and sum to 1.')
        if len({c.d for c in components}) != 1:
            raise InvalidSettingError('Mixture components have different dimensions.')
        self.components = list(components)
        self.weights = weights

    def __repr__(self):
        return f'GaussianMixture({self.components}, weights={self.weights.tolist()})'

    @property
    def d(self) -> int:
        return self.components[0].d

    def __call__(self, x) -> np.ndarray:
        return sum(w * c(x) for w, c in zip(self.weights, self.components))

    def rectangle_mass(self, lower, upper) -> np.ndarray:
        return sum(w * c.rectangle_mass(lower, upper) for w, c in zip(self.weights, self.components))


def setting_densities(setting: GaussianSetting):
    """Returns the reference and contaminant densities of a setting."""
    return TruncatedGaussian.from_setting(setting, 0), TruncatedGaussian.from_setting(setting, 1)
