#################################
# Results columns and variables #
#################################

N_TRAIN_COLUMN = 'n_train'
THETA_COLUMN = 'theta'
REP_COLUMN = 'rep'
TEST_COLUMN = 'test'
REJECT_COLUMN = 'reject'
STATISTIC_COLUMN = 'statistic'
THRESHOLD_COLUMN = 'threshold'
SIGMA2_HAT_COLUMN = 'sigma2_hat'
K_STAR_COLUMN = 'K_star'
FAILED_COLUMN = 'failed'
ERROR_COLUMN = 'error'
CRITERION_COLUMN = 'criterion'
WEIGHT_COLUMN = 'pi'
DIRECTION_COLUMN = 'direction'

RAW_COLUMNS = [
    N_TRAIN_COLUMN,
    THETA_COLUMN,
    REP_COLUMN,
    TEST_COLUMN,
    REJECT_COLUMN,
    STATISTIC_COLUMN,
    THRESHOLD_COLUMN,
    SIGMA2_HAT_COLUMN,
    K_STAR_COLUMN,
    FAILED_COLUMN,
    ERROR_COLUMN,
]

REJECT_RATE_COLUMN = 'reject_rate'
REPS_COLUMN = 'reps'
FAILURES_COLUMN = 'failures'
MEAN_SIGMA2_HAT_COLUMN = 'mean_sigma2_hat'
MEAN_K_STAR_COLUMN = 'mean_K_star'

POWER_CURVE_COLUMNS = [
    N_TRAIN_COLUMN,
    THETA_COLUMN,
    TEST_COLUMN,
    REJECT_RATE_COLUMN,
    REPS_COLUMN,
    FAILURES_COLUMN,
    MEAN_SIGMA2_HAT_COLUMN,
    MEAN_K_STAR_COLUMN,
    FAILED_COLUMN,
]

MEDIAN_SIGMA2_HAT_COLUMN = 'median_sigma2_hat'
MEDIAN_K_STAR_COLUMN = 'median_K_star'

SIGNAL_RAW_COLUMNS = [
    N_TRAIN_COLUMN,
    REP_COLUMN,
    CRITERION_COLUMN,
    SIGMA2_HAT_COLUMN,
    K_STAR_COLUMN,
    FAILED_COLUMN,
    ERROR_COLUMN,
]

SIGNAL_CURVE_COLUMNS = [
    N_TRAIN_COLUMN,
    CRITERION_COLUMN,
    MEDIAN_SIGMA2_HAT_COLUMN,
    MEDIAN_K_STAR_COLUMN,
    REPS_COLUMN,
    FAILURES_COLUMN,
]

ROBUSTNESS_KEYS = [DIRECTION_COLUMN, WEIGHT_COLUMN]
ROBUSTNESS_RAW_COLUMNS = ROBUSTNESS_KEYS + RAW_COLUMNS
ROBUSTNESS_COLUMNS = ROBUSTNESS_KEYS + POWER_CURVE_COLUMNS

SLOPE_COLUMNS = ['test', 'slope', 'intercept', 'points', 'band_low', 'band_high']


class __Tests:
    EDRT = 'edrt'
    BEDRT = 'bedrt'
    MMD = 'mmd'
    ORACLE_LR = 'oracle_lr'

    ALL = (EDRT, BEDRT, MMD, ORACLE_LR)
    PARTITIONED = (EDRT, BEDRT)


TESTS = __Tests()

REPORT_COLUMNS = [
    TEST_COLUMN,
    STATISTIC_COLUMN,
    THRESHOLD_COLUMN,
    REJECT_COLUMN,
    SIGMA2_HAT_COLUMN,
    'K',
    'K0',
    'K1',
    'max_abs_r_minus_1',
    'theta_detectable',
]
