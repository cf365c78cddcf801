"""The estimated density ratio test and its known-density oracles."""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import stats

from density_ratio_test.components.histogram import ThresholdContext, ThresholdedHistogram, population_signal
from density_ratio_test.components.partition import PartitionTree, Rectangle
from density_ratio_test.constants import metadata, results
from density_ratio_test.exceptions import DataError, InsufficientDataError, InvalidContextError
from density_ratio_test.utilities import to_significant


@dataclass(frozen=True, eq=False)
class TestReport:
    """Outcome of one test on one test sample, with its diagnostics."""
    __test__ = False

    test_name: str
    statistic: float
    threshold: float
    reject: bool
    sigma2_hat: float = float('nan')
    K: Optional[int] = None
    K0: Optional[int] = None
    K1: Optional[int] = None
    max_abs_r_minus_1: float = float('nan')
    theta_detectable: float = float('nan')
    threshold_terms: Dict[str, float] = field(default_factory=dict)
    theta_terms: Dict[str, float] = field(default_factory=dict)
    context: Optional[ThresholdContext] = None
    replicates: Optional[np.ndarray] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def undetectable(self) -> bool:
        """True when the detectable-theta bound gives no guarantee."""
        return not self.theta_detectable <= 1

    def to_dict(self, include_replicates: bool = False) -> Dict[str, Any]:
        document = {
            'test': self.test_name,
            'statistic': to_significant(self.statistic),
            'threshold': to_significant(self.threshold),
            'reject': bool(self.reject),
            'sigma2_hat': to_significant(self.sigma2_hat),
            'K': self.K,
            'K0': self.K0,
            'K1': self.K1,
            'max_abs_r_minus_1': to_significant(self.max_abs_r_minus_1),
            'theta_detectable': to_significant(self.theta_detectable),
            'undetectable': self.undetectable,
            'threshold_terms': {k: to_significant(v) for k, v in self.threshold_terms.items()},
            'theta_terms': {k: to_significant(v) for k, v in self.theta_terms.items()},
            'context': None if self.context is None else {
                k: to_significant(v) if isinstance(v, float) else v for k, v in self.context.to_dict().items()
            },
        }
        document.update({k: to_significant(v) if isinstance(v, float) else v for k, v in self.details.items()})
        if include_replicates and self.replicates is not None:
            document['replicates'] = [to_significant(v) for v in self.replicates]
        return document


class DetectableTheta(NamedTuple):
    value: float
    terms: Dict[str, float]

    @property
    def detectable(self) -> bool:
        return self.value <= 1


def _check_counts(hist: ThresholdedHistogram, test_counts, n: int) -> np.ndarray:
    test_counts = np.asarray(test_counts, dtype=float)
    if test_counts.shape != (hist.K,):
        raise ValueError(f'Expected {hist.K} test counts, got shape {test_counts.shape}.')
    if n <= 0:
        raise InsufficientDataError('The test sample is empty.')
    if test_counts.sum() != n:
        raise ValueError(f'Test counts sum to {test_counts.sum():g}, not n={n}.')
    return test_counts


def statistic(hist: ThresholdedHistogram, test_counts, n: int) -> float:
    """``S = (1/n) sum_k (r_k - 1) N_k`` over the test counts ``N_k``."""
    test_counts = _check_counts(hist, test_counts, n)
    return float(np.dot(hist.r - 1, test_counts) / n)


def threshold_terms(hist: ThresholdedHistogram, ctx: ThresholdContext) -> Dict[str, float]:
    """The four addends of the rejection threshold.

    Raises
    ------
    InvalidContextError
        If ``ctx`` breaks ``3 eps0 <= eps1 <= 1`` or ``n1 <= n0``.

    """
    if not ctx.valid:
        raise InvalidContextError(ctx.violations)
    sigma = math.sqrt(hist.sigma2_hat)
    return {
        'signal_reference': sigma * math.sqrt(10 * ctx.u * hist.K / ctx.n0),
        'signal_test': sigma * math.sqrt(6 * ctx.t / ctx.n),
        'ratio_range': ctx.t / (3 * ctx.n) * hist.max_abs_r_minus_1,
        'contaminant_floor': 3 * ctx.eps1 * hist.K1,
    }


def threshold(hist: ThresholdedHistogram, ctx: ThresholdContext) -> float:
    return float(sum(threshold_terms(hist, ctx).values()))


def theta_detectable(hist: ThresholdedHistogram, ctx: ThresholdContext) -> DetectableTheta:
    """Contamination fraction above which the test has power ``1 - alpha``.

    The bound is infinite when the estimated signal is zero. Values above 1
    mean no contamination level is guaranteed to be detected.
    """
    names = ('reference_signal', 'contaminant_floor', 'reference_floor', 'bin_count')
    sigma2 = hist.sigma2_hat
    if sigma2 <= 0:
        return DetectableTheta(math.inf, {name: math.inf for name in names})
    c = metadata.DETECTION_CONSTANTS
    terms = dict(zip(names, (
        c.REFERENCE_SIGNAL * math.sqrt(ctx.t / (ctx.n * sigma2)),
        c.CONTAMINANT_FLOOR * math.sqrt(ctx.u) * hist.K1 / (sigma2 * math.sqrt(ctx.n1)),
        c.REFERENCE_FLOOR * ctx.eps0 * hist.K0 / sigma2,
        c.BIN_COUNT * math.sqrt(ctx.u * hist.K / (ctx.n0 * sigma2)),
    )))
    return DetectableTheta(float(sum(terms.values())), terms)


def run_test(hist: ThresholdedHistogram, ctx: ThresholdContext, test_counts, n: int) -> TestReport:
    """Rejects when the statistic reaches the threshold.

    With a zero threshold the statistic must be strictly positive, so a
    partition without signal never rejects.
    """
    value = statistic(hist, test_counts, n)
    terms = threshold_terms(hist, ctx)
    cutoff = float(sum(terms.values()))
    reject = value >= cutoff if cutoff > 0 else value > cutoff
    detectable = theta_detectable(hist, ctx)
    logger.debug(f'EDRT statistic {value:.6g} against threshold {cutoff:.6g}: reject={reject}.')
    return TestReport(
        test_name=results.TESTS.EDRT,
        statistic=value,
        threshold=cutoff,
        reject=bool(reject),
        sigma2_hat=hist.sigma2_hat,
        K=hist.K,
        K0=hist.K0,
        K1=hist.K1,
        max_abs_r_minus_1=hist.max_abs_r_minus_1,
        theta_detectable=detectable.value,
        threshold_terms=terms,
        theta_terms=detectable.terms,
        context=ctx,
    )


def pointwise_statistic(tree: PartitionTree, hist: ThresholdedHistogram, test_points) -> float:
    """``(1/n) sum_i (f1_hat(X_i) / f0_hat(X_i) - 1)`` with the histogram densities."""
    test_points = np.asarray(test_points, dtype=float)
    if len(test_points) == 0:
        raise InsufficientDataError('The test sample is empty.')
    volumes = tree.bin_volumes()
    bins = tree.locate_many(test_points)
    ratios = (hist.h1[bins] / volumes[bins]) / (hist.h0[bins] / volumes[bins])
    return float(np.mean(ratios - 1))


def oracle_lr_test(f0, f1, test_points, alpha: float = metadata.ALPHA,
                   sigma2: Optional[float] = None) -> TestReport:
    """Likelihood-ratio test with known densities and a normal threshold.

    Rejects when ``S_n = mean(f1(X) / f0(X) - 1)`` reaches
    ``sqrt(sigma2) * Phi^-1(1 - alpha) / sqrt(n)``; when ``sigma2`` is zero
    the comparison is strict.
    """
    test_points = np.atleast_2d(np.asarray(test_points, dtype=float))
    n = len(test_points)
    if n == 0:
        raise InsufficientDataError('The test sample is empty.')
    reference = f0(test_points)
    if np.any(reference <= 0):
        raise DataError('The reference density vanishes at a test point.')
    value = float(np.mean(f1(test_points) / reference - 1))
    if sigma2 is None:
        sigma2 = population_signal(f0, f1)
    quantile = float(stats.norm.ppf(1 - alpha))
    cutoff = math.sqrt(sigma2) * quantile / math.sqrt(n)
    reject = value >= cutoff if sigma2 > 0 else value > cutoff
    return TestReport(
        test_name=results.TESTS.ORACLE_LR,
        statistic=value,
        threshold=cutoff,
        reject=bool(reject),
        details={'sigma2': float(sigma2), 'normal_quantile': quantile},
    )


def oracle_region_test(region: Union[Rectangle, Tuple[PartitionTree, int]], test_points) -> bool:
    """Rejects when at least one test point falls in ``region``.

    ``region`` is a rectangle or a ``(tree, bin_id)`` pair.
    """
    test_points = np.asarray(test_points, dtype=float)
    if test_points.size == 0:
        return False
    if isinstance(region, Rectangle):
        return bool(np.any(region.contains(test_points)))
    tree, bin_id = region
    return bool(np.any(tree.locate_many(test_points.reshape(-1, tree.d)) == bin_id))
