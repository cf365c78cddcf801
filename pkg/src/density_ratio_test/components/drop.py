"""Density-ratio oriented partitioning.

Partitions are grown greedily on the part samples: every step applies the
split, over all current bins, that most increases the thresholded signal
(or, for the CART baseline, that most decreases Gini impurity). The nested
sequence is then evaluated on the est samples and its size chosen by the
detection-rate criterion.
"""
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from density_ratio_test.components.histogram import (
    ThresholdContext,
    ThresholdedHistogram,
    estimate,
    make_context,
    signal_terms,
)
from density_ratio_test.components.partition import BinTable, PartitionTree
from density_ratio_test.constants import metadata
from density_ratio_test.data.dataset import LabeledDataset, SampleSplit, split_training
from density_ratio_test.exceptions import InsufficientDataError
from density_ratio_test.utilities import Seed

CRITERIA = tuple(metadata.SPLIT_CRITERION)
SELECTION_MODES = tuple(metadata.SELECTION_MODE)


@dataclass(frozen=True)
class SplitCandidate:
    bin_id: int
    dim: int
    value: float
    delta: float
    gini_gain: float
    criterion: str = metadata.SPLIT_CRITERION.DENSITY_RATIO

    @property
    def gain(self) -> float:
        return self.delta if self.criterion == metadata.SPLIT_CRITERION.DENSITY_RATIO else self.gini_gain


def _gini(n0, n1) -> np.ndarray:
    total = n0 + n1
    with np.errstate(divide='ignore', invalid='ignore'):
        p = np.where(total > 0, n1 / total, 0.0)
    return 2 * p * (1 - p)


def best_split(tree: PartitionTree, bin_id: int, points0: np.ndarray, points1: np.ndarray,
               ctx: ThresholdContext, criterion: str = metadata.SPLIT_CRITERION.DENSITY_RATIO,
               min_points: int = 0) -> Optional[SplitCandidate]:
    """Finds the best admissible split of one bin.

    Candidate values are midpoints between consecutive distinct coordinates
    of the pooled part points in the bin, along every axis.

    Parameters
    ----------
    tree
        The current partition.
    bin_id
        The bin to split.
    points0, points1
        Reference and contaminant part points lying in the bin.
    ctx
        Thresholds applied to the part counts of the bin and its children.
    criterion
        ``density_ratio`` maximizes the signal gain
        ``signal(left) + signal(right) - signal(bin)``; ``gini`` maximizes
        the weighted Gini impurity decrease.
    min_points
        Bins holding fewer pooled points are not split.

    Returns
    -------
        The best candidate, or ``None`` when no split has a positive gain.
        Ties go to the lowest axis, then to the lowest value.

    """
    if criterion not in CRITERIA:
        raise ValueError(f'Unknown split criterion {criterion!r}; expected one of {CRITERIA}.')
    points0 = np.asarray(points0, dtype=float).reshape(-1, tree.d)
    points1 = np.asarray(points1, dtype=float).reshape(-1, tree.d)
    n0_bin, n1_bin = len(points0), len(points1)
    if n0_bin + n1_bin < max(min_points, 2):
        return None

    bounds = tree.bin_rectangle(bin_id)
    labels = np.concatenate([np.zeros(n0_bin, dtype=np.int64), np.ones(n1_bin, dtype=np.int64)])
    parent_signal = float(signal_terms(ctx, n0_bin, n1_bin))
    parent_gini = float(_gini(n0_bin, n1_bin))
    n_bin = n0_bin + n1_bin

    best = None
    for dim in range(tree.d):
        coords = np.concatenate([points0[:, dim], points1[:, dim]])
        order = np.argsort(coords, kind='stable')
        sorted_coords = coords[order]
        left1 = np.cumsum(labels[order])[:-1]
        left0 = np.arange(1, n_bin) - left1

        values = (sorted_coords[:-1] + sorted_coords[1:]) / 2
        admissible = ((sorted_coords[:-1] < values) & (values < sorted_coords[1:])
                      & (bounds.lower[dim] < values) & (values < bounds.upper[dim]))
        if not admissible.any():
            continue
        values, left0, left1 = values[admissible], left0[admissible], left1[admissible]
        right0, right1 = n0_bin - left0, n1_bin - left1

        delta = signal_terms(ctx, left0, left1) + signal_terms(ctx, right0, right1) - parent_signal
        n_left = left0 + left1
        gini_gain = parent_gini - (n_left * _gini(left0, left1) + (n_bin - n_left) * _gini(right0, right1)) / n_bin

        gains = delta if criterion == metadata.SPLIT_CRITERION.DENSITY_RATIO else gini_gain
        i = int(np.argmax(gains))
        if best is None or gains[i] > best.gain:
            best = SplitCandidate(bin_id, dim, float(values[i]), float(delta[i]), float(gini_gain[i]), criterion)

    if best is None or not best.gain > 0:
        return None
    return best


def drop_context(alpha: float, K_max: int, n: int, n0_part: int, n1_part: int) -> ThresholdContext:
    """Thresholds used while growing, with ``u = ln(8 K_max / alpha)`` at every step."""
    return make_context(alpha, K_max, n, n0_part, n1_part, u_override=math.log(8 * K_max / alpha))


def min_split_points(ctx: ThresholdContext) -> int:
    """Smallest pooled part count a bin needs to be split, ``ceil(3 n1 eps1)``."""
    return math.ceil(3 * ctx.n1 * ctx.eps1)


@dataclass(frozen=True, eq=False)
class PartitionSequence:
    """Nested partitions with 1, 2, ..., K bins, stored as the final tree.

    ``splits[k]`` created bin ``k + 1`` by splitting ``splits[k].bin_id``.
    """
    tree: PartitionTree
    K_max: int
    criterion: str
    splits: Tuple[SplitCandidate, ...]
    per_K_signal: Optional[Tuple[float, ...]] = None
    K_star: Optional[int] = None
    selection: Optional[str] = None

    @property
    def K_reached(self) -> int:
        return self.tree.K

    def snapshot(self, K: int) -> PartitionTree:
        return self.tree.snapshot(K)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'criterion': self.criterion,
            'K_max': self.K_max,
            'K_reached': self.K_reached,
            'K_star': self.K_star,
            'selection': self.selection,
            'per_K_signal': None if self.per_K_signal is None else list(self.per_K_signal),
            'split_gains': [split.gain for split in self.splits],
            'tree': self.tree.to_dict(),
        }


def grow_sequence(points0: np.ndarray, points1: np.ndarray, ctx: ThresholdContext, K_max: int,
                  criterion: str = metadata.SPLIT_CRITERION.DENSITY_RATIO,
                  min_points: Optional[int] = None) -> PartitionSequence:
    """Grows nested partitions one split at a time.

    Each step applies the best split over all current bins, preferring the
    lowest bin id on ties, until ``K_max`` bins or until no bin has an
    admissible positive-gain split.

    Parameters
    ----------
    points0, points1
        Reference and contaminant part samples.
    ctx
        Fixed thresholds of the part samples, see :func:`drop_context`.
    K_max
        Largest number of bins.
    criterion
        Split criterion, see :func:`best_split`.
    min_points
        Defaults to :func:`min_split_points` of ``ctx``.

    """
    if K_max < 1:
        raise ValueError(f'K_max must be at least 1, got {K_max}.')
    points0 = np.asarray(points0, dtype=float)
    points1 = np.asarray(points1, dtype=float)
    d = points0.shape[1] if points0.ndim == 2 else points1.shape[1]
    if min_points is None:
        min_points = min_split_points(ctx)

    tree = PartitionTree.root(d)
    members0 = {0: np.arange(len(points0))}
    members1 = {0: np.arange(len(points1))}

    def scan(bin_id: int) -> Optional[SplitCandidate]:
        return best_split(tree, bin_id, points0[members0[bin_id]], points1[members1[bin_id]],
                          ctx, criterion, min_points)

    candidates = {0: scan(0)}
    splits = []
    while tree.K < K_max:
        best = None
        for bin_id in sorted(candidates):
            candidate = candidates[bin_id]
            if candidate is not None and (best is None or candidate.gain > best.gain):
                best = candidate
        if best is None:
            logger.debug(f'No admissible split left; growth stopped at K={tree.K}.')
            break

        tree = tree.split_leaf(best.bin_id, best.dim, best.value)
        new_bin = tree.K - 1
        for members, points in ((members0, points0), (members1, points1)):
            rows = members[best.bin_id]
            goes_left = points[rows, best.dim] < best.value
            members[best.bin_id], members[new_bin] = rows[goes_left], rows[~goes_left]
        candidates[best.bin_id] = scan(best.bin_id)
        candidates[new_bin] = scan(new_bin)
        splits.append(best)
        logger.debug(f'K={tree.K}: split bin {best.bin_id} on axis {best.dim} at {best.value:.6g} '
                     f'(gain {best.gain:.6g}).')

    return PartitionSequence(tree=tree, K_max=K_max, criterion=criterion, splits=tuple(splits))


def evaluate_sequence(seq: PartitionSequence, est0: np.ndarray, est1: np.ndarray,
                      alpha: float, n: int) -> List[ThresholdedHistogram]:
    """Thresholded histograms of the est samples on every snapshot, index ``K - 1``.

    Counts of smaller snapshots come from merging each split's new bin back
    into its parent, largest partition first.
    """
    n0, n1 = len(est0), len(est1)
    u = math.log(8 * seq.K_max / alpha)
    counts0 = list(np.bincount(seq.tree.locate_many(est0), minlength=seq.K_reached))
    counts1 = list(np.bincount(seq.tree.locate_many(est1), minlength=seq.K_reached))

    histograms = [None] * seq.K_reached
    for K in range(seq.K_reached, 0, -1):
        ctx = make_context(alpha, K, n, n0, n1, u_override=u)
        histograms[K - 1] = estimate(ctx, BinTable(np.array(counts0), np.array(counts1)))
        if K > 1:
            parent = seq.splits[K - 2].bin_id
            counts0[parent] += counts0.pop()
            counts1[parent] += counts1.pop()
    return histograms


def _size_criterion(hist: ThresholdedHistogram, mode: str) -> float:
    ctx = hist.context
    sigma2 = hist.sigma2_hat
    if mode == metadata.SELECTION_MODE.SIMPLIFIED:
        return max(math.sqrt(1 / (ctx.n * sigma2)), math.sqrt(hist.K / (ctx.n0 * sigma2)))
    a = math.sqrt(ctx.t / (ctx.n * sigma2))
    b = math.sqrt(ctx.u / (ctx.n0 * sigma2))
    return (a * (1 + hist.K0 * a)
            + math.sqrt(ctx.u) * hist.K1 / (sigma2 * math.sqrt(ctx.n1))
            + b * (math.sqrt(hist.K) + hist.K0 * b))


def select_size(seq: PartitionSequence, est_histograms: Sequence[ThresholdedHistogram],
                mode: str = metadata.SELECTION_MODE.FULL, min_K: int = 1) -> int:
    """Chooses the partition size minimizing the detection-rate criterion.

    Sizes with zero estimated signal are skipped; ties go to the smallest
    size. ``min_K`` excludes smaller sizes.
    """
    if mode not in SELECTION_MODES:
        raise ValueError(f'Unknown selection mode {mode!r}; expected one of {SELECTION_MODES}.')
    if len(est_histograms) != seq.K_reached:
        raise ValueError(f'Expected {seq.K_reached} histograms, got {len(est_histograms)}.')
    if min_K > seq.K_reached:
        logger.warning(f'Requested at least {min_K} bins but growth stopped at {seq.K_reached}.')
        min_K = seq.K_reached

    best_K, best_value = None, math.inf
    for hist in est_histograms[max(min_K, 1) - 1:]:
        if hist.sigma2_hat <= 0:
            continue
        value = _size_criterion(hist, mode)
        if value < best_value:
            best_K, best_value = hist.K, value

    if best_K is None:
        logger.warning('Estimated signal is zero for every candidate size; keeping the smallest.')
        return max(min_K, 1)
    return best_K


@dataclass(frozen=True, eq=False)
class FittedPartition:
    """A grown, evaluated and size-selected partition with its est-sample estimates."""
    sequence: PartitionSequence
    histograms: Tuple[ThresholdedHistogram, ...]
    split: SampleSplit
    est_reference: np.ndarray
    est_contaminant: np.ndarray

    @property
    def K_star(self) -> int:
        return self.sequence.K_star

    @property
    def tree(self) -> PartitionTree:
        return self.sequence.snapshot(self.K_star)

    @property
    def histogram(self) -> ThresholdedHistogram:
        return self.histograms[self.K_star - 1]

    @property
    def context(self) -> ThresholdContext:
        return self.histogram.context


def fit_drop(ds: LabeledDataset, n: int, alpha: float = metadata.ALPHA, K_max: int = metadata.K_MAX,
             criterion: str = metadata.SPLIT_CRITERION.DENSITY_RATIO,
             selection: str = metadata.SELECTION_MODE.FULL,
             frac_part: float = metadata.FRAC_PART, seed: Seed = 0, min_K: int = 1,
             split: Optional[SampleSplit] = None) -> FittedPartition:
    """Splits the training samples, grows a partition on the part share and selects its size.

    Parameters
    ----------
    ds
        Dataset with reference and contaminant rows.
    n
        Size of the test sample the partition will be used on.
    alpha
        Level of the test.
    K_max
        Largest number of bins.
    criterion
        Split criterion.
    selection
        Size-selection mode.
    frac_part
        Share of each labelled source used for growth.
    seed
        Seed of the part/est split.
    min_K
        Smallest admissible size.
    split
        A precomputed part/est split, overriding ``frac_part`` and ``seed``.

    """
    if split is None:
        split = split_training(ds, frac_part, seed)
    if n < 1:
        raise InsufficientDataError('The test sample size must be positive.')

    part0, part1 = ds.points[split.part_reference], ds.points[split.part_contaminant]
    est0, est1 = ds.points[split.est_reference], ds.points[split.est_contaminant]
    ctx = drop_context(alpha, K_max, n, len(part0), len(part1))
    sequence = grow_sequence(part0, part1, ctx, K_max, criterion)
    histograms = evaluate_sequence(sequence, est0, est1, alpha, n)
    K_star = select_size(sequence, histograms, selection, min_K)
    sequence = replace(
        sequence,
        per_K_signal=tuple(h.sigma2_hat for h in histograms),
        K_star=K_star,
        selection=selection,
    )
    logger.info(f'Fitted {criterion} partition: grew to K={sequence.K_reached}, selected K*={K_star} '
                f'with estimated signal {histograms[K_star - 1].sigma2_hat:.6g}.')
    return FittedPartition(sequence, tuple(histograms), split, est0, est1)
