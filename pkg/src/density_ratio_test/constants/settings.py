from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from density_ratio_test.exceptions import InvalidSettingError

SETTING_VARIANCE = 1 / 100


@dataclass(frozen=True)
class GaussianSetting:
    """A pair of diagonal Gaussians truncated to the unit cube.

    ``mean0`` locates the reference density and ``mean1`` the contaminant.
    """
    label: str
    mean0: Tuple[float, ...]
    mean1: Tuple[float, ...]
    cov_diag: Tuple[float, ...]

    def __post_init__(self):
        mean0 = np.asarray(self.mean0, dtype=float)
        mean1 = np.asarray(self.mean1, dtype=float)
        cov_diag = np.asarray(self.cov_diag, dtype=float)
        if mean0.ndim != 1 or mean0.size == 0:
            raise InvalidSettingError(f'Setting {self.label} needs at least one axis.')
        if mean0.shape != mean1.shape or mean0.shape != cov_diag.shape:
            raise InvalidSettingError(f'Setting {self.label} has means and variances of different dimensions.')
        for mean in (mean0, mean1):
            if np.any(mean <= 0) or np.any(mean >= 1):
                raise InvalidSettingError(f'Setting {self.label} has a mean {mean.tolist()} outside (0, 1)^d.')
        if np.any(cov_diag <= 0):
            raise InvalidSettingError(f'Setting {self.label} has a non-positive variance.')

    @property
    def d(self) -> int:
        return len(self.mean0)

    @classmethod
    def custom(cls, mean0, mean1, variance: float = SETTING_VARIANCE) -> 'GaussianSetting':
        mean0 = tuple(float(m) for m in mean0)
        return cls('custom', mean0, tuple(float(m) for m in mean1), (float(variance),) * len(mean0))


def _isotropic(label: str, mean0: Tuple[float, ...], mean1: Tuple[float, ...]) -> GaussianSetting:
    return GaussianSetting(label, mean0, mean1, (SETTING_VARIANCE,) * len(mean0))


class __GaussianSettings(NamedTuple):
    A: GaussianSetting = _isotropic('A', (0.3, 0.3), (0.7, 0.7))
    B: GaussianSetting = _isotropic('B', (0.4, 0.4), (0.6, 0.6))
    C: GaussianSetting = _isotropic('C', (0.4, 0.4), (0.5, 0.5))
    NULL: GaussianSetting = _isotropic('null', (0.4, 0.4), (0.4, 0.4))

    def __getitem__(self, item) -> GaussianSetting:
        for setting in self:
            if setting.label.lower() == str(item).lower():
                return setting
        raise KeyError(item)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(setting.label for setting in self)


GAUSSIAN_SETTINGS = __GaussianSettings()


###########################
# Mixture reference model #
###########################

class __MixtureComponents(NamedTuple):
    G_A: Tuple[float, float] = (0.3, 0.6)
    G_B: Tuple[float, float] = (0.6, 0.3)
    CONTAMINANT: Tuple[float, float] = (0.6, 0.6)
    VARIANCE: float = SETTING_VARIANCE


MIXTURE_COMPONENTS = __MixtureComponents()

ROBUSTNESS_THETA = 0.015
ROBUSTNESS_WEIGHTS = (0.5, 0.6, 0.7, 0.8, 0.9)
# Weight of G_A in the reference mixture of the unshifted phase.
BALANCED_WEIGHT = 0.5


class __ShiftDirection(NamedTuple):
    TRAIN_SHIFT: str = 'train_shift'
    TEST_SHIFT: str = 'test_shift'


SHIFT_DIRECTION = __ShiftDirection()
