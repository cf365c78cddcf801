"""Bootstrap calibration of the estimated density ratio statistic."""
from dataclasses import dataclass

import numpy as np
from loguru import logger

from density_ratio_test.components.edrt import TestReport, statistic
from density_ratio_test.components.histogram import ThresholdContext, estimate
from density_ratio_test.components.partition import BinTable, PartitionTree, count_points
from density_ratio_test.constants import metadata, results
from density_ratio_test.exceptions import InsufficientDataError
from density_ratio_test.utilities import Seed, derive_rng, upper_order_statistic


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = metadata.BOOTSTRAP_REPLICATES
    quantile_level: float = metadata.BOOTSTRAP_QUANTILE
    seed: Seed = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError(f'At least one bootstrap replicate is needed, got {self.replicates}.')
        if not 0 < self.quantile_level < 1:
            raise ValueError(f'quantile_level must lie in (0, 1), got {self.quantile_level}.')


def bootstrap_statistics(tree: PartitionTree, est_reference: np.ndarray, est_contaminant: np.ndarray,
                         ctx: ThresholdContext, cfg: BootstrapConfig) -> np.ndarray:
    """Null replicates of the statistic on a fixed partition.

    Each replicate draws a pseudo test sample of size ``n`` from the est
    reference sample without replacement, re-estimates the ratios from
    ``n0`` reference points drawn with replacement from the remaining est
    reference points and ``n1`` contaminant points drawn with replacement,
    and evaluates the statistic. Replicate ``b`` uses the stream
    ``(cfg.seed, b)``; the context stays fixed.
    """
    n0_est, n1_est = len(est_reference), len(est_contaminant)
    if n0_est <= ctx.n:
        raise InsufficientDataError(f'The est reference sample ({n0_est} points) must be larger than '
                                    f'the test sample ({ctx.n} points).')
    if n1_est == 0:
        raise InsufficientDataError('The est contaminant sample is empty.')

    bins0 = tree.locate_many(est_reference)
    bins1 = tree.locate_many(est_contaminant)
    values = np.empty(cfg.replicates)
    for b in range(cfg.replicates):
        rng = derive_rng(cfg.seed, b)
        order = rng.permutation(n0_est)
        pseudo_test, pool = order[:ctx.n], order[ctx.n:]
        resampled0 = pool[rng.integers(0, len(pool), size=ctx.n0)]
        resampled1 = rng.integers(0, n1_est, size=ctx.n1)
        table = BinTable(
            n0=np.bincount(bins0[resampled0], minlength=tree.K),
            n1=np.bincount(bins1[resampled1], minlength=tree.K),
        )
        values[b] = statistic(estimate(ctx, table), np.bincount(bins0[pseudo_test], minlength=tree.K), ctx.n)
    return values


def bootstrap_threshold(tree: PartitionTree, est_reference: np.ndarray, est_contaminant: np.ndarray,
                        ctx: ThresholdContext, cfg: BootstrapConfig) -> float:
    """Upper empirical quantile ``tau`` of the null replicates."""
    values = bootstrap_statistics(tree, est_reference, est_contaminant, ctx, cfg)
    return upper_order_statistic(values, cfg.quantile_level)


def run_bedrt(tree: PartitionTree, est_reference: np.ndarray, est_contaminant: np.ndarray,
              test_points: np.ndarray, ctx: ThresholdContext, cfg: BootstrapConfig,
              replicates: np.ndarray = None) -> TestReport:
    """Bootstrap-calibrated test: rejects when the statistic strictly exceeds ``tau``.

    Ratios are estimated on the full est samples. Precomputed null
    ``replicates`` for the same partition and context may be passed in.
    """
    if replicates is None:
        replicates = bootstrap_statistics(tree, est_reference, est_contaminant, ctx, cfg)
    tau = upper_order_statistic(replicates, cfg.quantile_level)
    hist = estimate(ctx, BinTable(count_points(tree, est_reference), count_points(tree, est_contaminant)))
    value = statistic(hist, count_points(tree, test_points), ctx.n)
    reject = value > tau
    logger.debug(f'BEDRT statistic {value:.6g} against tau {tau:.6g}: reject={reject}.')
    return TestReport(
        test_name=results.TESTS.BEDRT,
        statistic=value,
        threshold=tau,
        reject=bool(reject),
        sigma2_hat=hist.sigma2_hat,
        K=hist.K,
        K0=hist.K0,
        K1=hist.K1,
        max_abs_r_minus_1=hist.max_abs_r_minus_1,
        context=ctx,
        replicates=np.asarray(replicates),
        details={'quantile_level': cfg.quantile_level, 'bootstrap_replicates': len(replicates)},
    )
