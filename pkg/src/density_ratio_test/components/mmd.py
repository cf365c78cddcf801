"""Linear-time maximum mean discrepancy two-sample test."""
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from loguru import logger
from scipy.spatial.distance import pdist

from density_ratio_test.components.edrt import TestReport
from density_ratio_test.constants import metadata, results
from density_ratio_test.exceptions import DataError, InsufficientDataError
from density_ratio_test.utilities import Seed, derive_rng, upper_order_statistic

MEDIAN = 'median'


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian RBF kernel ``exp(-|x - y|^2 / (2 bandwidth^2))``.

    The bandwidth is a positive number or ``'median'`` for the median
    heuristic on the pooled samples.
    """
    kind: str = 'gaussian_rbf'
    bandwidth: Union[float, str] = MEDIAN

    def __post_init__(self):
        if self.kind != 'gaussian_rbf':
            raise ValueError(f'Unsupported kernel {self.kind!r}.')
        if self.bandwidth != MEDIAN and not float(self.bandwidth) > 0:
            raise ValueError(f'Bandwidth must be positive or {MEDIAN!r}, got {self.bandwidth!r}.')

    @property
    def resolved(self) -> bool:
        return self.bandwidth != MEDIAN

    def resolve(self, pooled: np.ndarray, cap: int = metadata.MEDIAN_HEURISTIC_CAP, seed: Seed = 0) -> 'KernelSpec':
        if self.resolved:
            return self
        return replace(self, bandwidth=median_heuristic(pooled, cap, seed))

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel values of matched rows ``k(a_i, b_i)``."""
        if not self.resolved:
            raise ValueError('Resolve the median-heuristic bandwidth before evaluating the kernel.')
        squared = np.sum((a - b) ** 2, axis=1)
        return np.exp(-squared / (2 * float(self.bandwidth) ** 2))


def median_heuristic(pooled: np.ndarray, cap: int = metadata.MEDIAN_HEURISTIC_CAP, seed: Seed = 0) -> float:
    """Median pairwise Euclidean distance over at most ``cap`` subsampled points."""
    pooled = np.atleast_2d(np.asarray(pooled, dtype=float))
    if len(pooled) < 2:
        raise InsufficientDataError('The median heuristic needs at least two points.')
    if len(pooled) > cap:
        chosen = np.sort(derive_rng(seed).choice(len(pooled), size=cap, replace=False))
        pooled = pooled[chosen]
    bandwidth = float(np.median(pdist(pooled)))
    if bandwidth <= 0:
        raise DataError('The median pairwise distance is zero; the points are (mostly) identical.')
    return bandwidth


def mmd_linear(X: np.ndarray, Y: np.ndarray, kernel: KernelSpec) -> float:
    """Linear-time MMD^2 estimate over disjoint consecutive pairs.

    Both samples are cut to the same even size ``m``; the estimate averages
    ``k(x1, x2) + k(y1, y2) - k(x1, y2) - k(x2, y1)`` over the ``m / 2``
    pairs.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    m = 2 * (min(len(X), len(Y)) // 2)
    if m < 2:
        raise InsufficientDataError('The linear-time MMD needs at least two points in each sample.')
    if not kernel.resolved:
        kernel = kernel.resolve(np.vstack([X, Y]))
    x1, x2 = X[0:m:2], X[1:m:2]
    y1, y2 = Y[0:m:2], Y[1:m:2]
    brackets = kernel.pairwise(x1, x2) + kernel.pairwise(y1, y2) - kernel.pairwise(x1, y2) - kernel.pairwise(x2, y1)
    return float(np.mean(brackets))


def mmd_test(reference: np.ndarray, test: np.ndarray, kernel: KernelSpec = KernelSpec(),
             replicates: int = metadata.MMD_REPLICATES, alpha: float = metadata.ALPHA,
             seed: Seed = 0) -> TestReport:
    """Permutation-calibrated linear-time MMD test.

    The null distribution comes from ``replicates`` random splits of the
    pooled sample into the original sizes. Rejects when the observed
    statistic strictly exceeds the upper ``1 - alpha`` order statistic.
    """
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    test = np.atleast_2d(np.asarray(test, dtype=float))
    if min(len(reference), len(test)) < 2:
        raise InsufficientDataError('Both samples need at least two points.')
    if replicates < 1:
        raise ValueError(f'At least one replicate is needed, got {replicates}.')

    pooled = np.vstack([reference, test])
    kernel = kernel.resolve(pooled, seed=seed)
    observed = mmd_linear(reference, test, kernel)

    null = np.empty(replicates)
    for b in range(replicates):
        order = derive_rng(seed, b).permutation(len(pooled))
        null[b] = mmd_linear(pooled[order[:len(reference)]], pooled[order[len(reference):]], kernel)
    cutoff = upper_order_statistic(null, 1 - alpha)
    reject = observed > cutoff
    logger.debug(f'MMD statistic {observed:.6g} against {cutoff:.6g}: reject={reject}.')
    return TestReport(
        test_name=results.TESTS.MMD,
        statistic=observed,
        threshold=cutoff,
        reject=bool(reject),
        replicates=null,
        details={'bandwidth': float(kernel.bandwidth), 'bootstrap_replicates': replicates},
    )
