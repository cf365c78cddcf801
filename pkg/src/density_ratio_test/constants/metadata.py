from typing import NamedTuple

import numpy as np

####################
# Project metadata #
####################

PROJECT_NAME = 'density_ratio_test'

###################
# Test parameters #
###################

ALPHA = 0.05
K_MAX = 64

# Share of each labelled source used to grow partitions; the rest estimates.
FRAC_PART = 0.5
# Reference share of a training sample, n0 = FRAC_N0 * n_train.
FRAC_N0 = 0.7
# Test sample size, n = FRAC_TEST * n_train.
FRAC_TEST = 0.1

BOOTSTRAP_REPLICATES = 200
BOOTSTRAP_QUANTILE = 0.95

MMD_REPLICATES = 200
MEDIAN_HEURISTIC_CAP = 1000

QUADRATURE_RESOLUTION = 400

REJECTION_MIN_ACCEPTANCE = 1e-6
REJECTION_MIN_PROPOSALS = 1_000_000
REJECTION_MAX_BATCH = 1_000_000

#####################
# Experiment grids  #
#####################

REPS = 100
N_TRAIN_GRID = (1_000, 3_000, 10_000, 30_000, 100_000)
THETA_GRID = tuple(float(theta) for theta in np.geomspace(3e-3, 0.3, 12))
POWER_BAND = (0.2, 0.8)


class __SplitCriterion(NamedTuple):
    DENSITY_RATIO: str = 'density_ratio'
    GINI: str = 'gini'


SPLIT_CRITERION = __SplitCriterion()


class __SelectionMode(NamedTuple):
    FULL: str = 'full'
    SIMPLIFIED: str = 'simplified'


SELECTION_MODE = __SelectionMode()


class __DetectionConstants(NamedTuple):
    """Explicit constants of the power bound behind the detectable-theta diagnostic."""
    REFERENCE_SIGNAL: float = 353.0
    CONTAMINANT_FLOOR: float = 400.0
    REFERENCE_FLOOR: float = 30.0
    BIN_COUNT: float = 64.0


DETECTION_CONSTANTS = __DetectionConstants()
