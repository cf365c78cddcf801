"""density_ratio_test

Supervised contamination detection: density-ratio oriented partitioning,
thresholded histogram estimators, the estimated density ratio test and its
bootstrap-calibrated variant, and a linear-time MMD baseline.

"""
from density_ratio_test.__about__ import (
    __author__,
    __copyright__,
    __email__,
    __license__,
    __summary__,
    __title__,
    __uri__,
    __version__,
)
