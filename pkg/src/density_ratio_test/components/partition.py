"""Axis-aligned binary partitions of the unit cube.

A :class:`PartitionTree` is an arena of nodes stored in creation order.
Every split appends its two children, so the tree after ``K - 1`` splits
is the prefix of ``2K - 1`` nodes; snapshots of a nested sequence share
the arrays of the final tree.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from density_ratio_test.data.dataset import LabeledDataset, Source
from density_ratio_test.exceptions import DataError, PartitionError


@dataclass(frozen=True, eq=False)
class Rectangle:
    """An axis-aligned box in the unit cube.

    Membership follows the partition convention: lower faces are closed,
    upper faces are open except on the boundary of the cube.
    """
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise PartitionError('Rectangle bounds must be vectors of the same length.')
        if np.any(lower < 0) or np.any(upper > 1) or np.any(lower > upper):
            raise PartitionError(f'Rectangle [{lower.tolist()}, {upper.tolist()}] is not inside the unit cube.')
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        below_upper = (x < self.upper) | ((self.upper >= 1) & (x <= 1))
        return np.all((x >= self.lower) & below_upper, axis=1)


class PartitionTree:
    """Recursive binary partition of [0, 1]^d whose leaves are numbered bins.

    Trees are immutable; :meth:`split_leaf` returns a new tree.
    """

    def __init__(self, split_dim: np.ndarray, split_value: np.ndarray,
                 left: np.ndarray, right: np.ndarray, bin_id: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray, node_count: Optional[int] = None):
        self._split_dim = split_dim
        self._split_value = split_value
        self._left = left
        self._right = right
        self._bin_id = bin_id
        self._lower = lower
        self._upper = upper
        for array in (split_dim, split_value, left, right, bin_id, lower, upper):
            array.setflags(write=False)

        count = len(split_dim) if node_count is None else node_count
        self._count = count
        # Children created after this snapshot do not exist yet.
        self._is_leaf = (left[:count] < 0) | (left[:count] >= count)
        leaves = np.flatnonzero(self._is_leaf)
        self._leaf_node = np.empty(len(leaves), dtype=np.int64)
        self._leaf_node[bin_id[leaves]] = leaves

        depth = np.zeros(count, dtype=np.int64)
        for node in range(count):
            if not self._is_leaf[node]:
                depth[left[node]] = depth[right[node]] = depth[node] + 1
        self._depth = int(depth.max())

    @classmethod
    def root(cls, d: int) -> 'PartitionTree':
        """The single-bin partition of [0, 1]^d."""
        if d < 1:
            raise PartitionError(f'Dimension must be positive, got {d}.')
        return cls(
            split_dim=np.array([-1]),
            split_value=np.array([np.nan]),
            left=np.array([-1]),
            right=np.array([-1]),
            bin_id=np.array([0]),
            lower=np.zeros((1, d)),
            upper=np.ones((1, d)),
        )

    @property
    def d(self) -> int:
        return self._lower.shape[1]

    @property
    def K(self) -> int:
        return len(self._leaf_node)

    @property
    def n_nodes(self) -> int:
        return self._count

    @property
    def depth(self) -> int:
        return self._depth

    def __repr__(self):
        return f'PartitionTree(d={self.d}, K={self.K})'

    def _check_bin(self, bin_id: int) -> int:
        if not 0 <= bin_id < self.K:
            raise PartitionError(f'Bin {bin_id} does not exist in a partition with {self.K} bins.')
        return int(self._leaf_node[bin_id])

    def locate(self, x) -> int:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise PartitionError(f'Point of shape {x.shape} does not match a {self.d}-dimensional partition.')
        return int(self.locate_many(x[np.newaxis, :])[0])

    def locate_many(self, points) -> np.ndarray:
        """Bin ids of many points; ``x[dim] < value`` descends left, otherwise right."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.d:
            raise PartitionError(f'Points of shape {points.shape} do not match a {self.d}-dimensional partition.')
        node = np.zeros(points.shape[0], dtype=np.int64)
        for _ in range(self._depth):
            active = np.flatnonzero(~self._is_leaf[node])
            if active.size == 0:
                break
            current = node[active]
            go_left = points[active, self._split_dim[current]] < self._split_value[current]
            node[active] = np.where(go_left, self._left[current], self._right[current])
        return self._bin_id[node]

    def split_leaf(self, bin_id: int, dim: int, value: float) -> 'PartitionTree':
        """Splits a bin in two along ``dim`` at ``value``.

        The left child keeps ``bin_id`` and the right child becomes bin ``K``.
        ``value`` must lie strictly inside the bin's extent along ``dim``.
        """
        node = self._check_bin(bin_id)
        if not 0 <= dim < self.d:
            raise PartitionError(f'Axis {dim} does not exist in {self.d} dimensions.')
        low, high = self._lower[node, dim], self._upper[node, dim]
        if not low < value < high:
            raise PartitionError(f'Split value {value} is not strictly inside [{low}, {high}] '
                                 f'along axis {dim} of bin {bin_id}.')

        count = self._count
        left = self._left[:count].copy()
        right = self._right[:count].copy()
        split_dim = self._split_dim[:count].copy()
        split_value = self._split_value[:count].copy()
        pruned = left >= count
        left[pruned] = right[pruned] = split_dim[pruned] = -1
        split_value[pruned] = np.nan

        split_dim[node], split_value[node] = dim, value
        left[node], right[node] = count, count + 1

        left_upper = self._upper[node].copy()
        left_upper[dim] = value
        right_lower = self._lower[node].copy()
        right_lower[dim] = value

        return PartitionTree(
            split_dim=np.append(split_dim, [-1, -1]),
            split_value=np.append(split_value, [np.nan, np.nan]),
            left=np.append(left, [-1, -1]),
            right=np.append(right, [-1, -1]),
            bin_id=np.append(self._bin_id[:count], [bin_id, self.K]),
            lower=np.vstack([self._lower[:count], self._lower[node], right_lower]),
            upper=np.vstack([self._upper[:count], left_upper, self._upper[node]]),
        )

    def snapshot(self, K: int) -> 'PartitionTree':
        """The partition as it was when it had ``K`` bins."""
        if not 1 <= K <= self.K:
            raise PartitionError(f'No snapshot with {K} bins in a partition with {self.K} bins.')
        return PartitionTree(self._split_dim, self._split_value, self._left, self._right,
                             self._bin_id, self._lower, self._upper, node_count=2 * K - 1)

    def bin_rectangle(self, bin_id: int) -> Rectangle:
        node = self._check_bin(bin_id)
        return Rectangle(self._lower[node].copy(), self._upper[node].copy())

    def bin_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of every bin, ordered by bin id."""
        return self._lower[self._leaf_node], self._upper[self._leaf_node]

    def bin_volumes(self) -> np.ndarray:
        lower, upper = self.bin_bounds()
        return np.prod(upper - lower, axis=1)

    def to_dict(self) -> Dict[str, Any]:
        """Nested ``{dim, value, left, right}`` / ``{bin}`` document of the partition."""
        def describe(node: int) -> Dict[str, Any]:
            if self._is_leaf[node]:
                return {'bin': int(self._bin_id[node])}
            return {
                'dim': int(self._split_dim[node]),
                'value': float(self._split_value[node]),
                'left': describe(int(self._left[node])),
                'right': describe(int(self._right[node])),
            }

        return {'d': self.d, 'K': self.K, 'root': describe(0)}

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'PartitionTree':
        """Rebuilds a partition by replaying its splits in bin-creation order."""
        try:
            d = int(document['d'])
            root = document['root']
        except (KeyError, TypeError):
            raise PartitionError('A partition document needs "d" and "root" entries.') from None

        def first_bin(doc: Dict[str, Any]) -> int:
            return int(doc['bin']) if 'bin' in doc else first_bin(doc['left'])

        splits = []

        def collect(doc: Dict[str, Any]):
            if 'bin' not in doc:
                splits.append((first_bin(doc['right']), first_bin(doc), int(doc['dim']), float(doc['value'])))
                collect(doc['left'])
                collect(doc['right'])

        collect(root)
        tree = cls.root(d)
        for new_bin, parent_bin, dim, value in sorted(splits):
            if new_bin != tree.K:
                raise PartitionError(f'Bin ids in the partition document are not consecutive at bin {new_bin}.')
            tree = tree.split_leaf(parent_bin, dim, value)
        return tree


@dataclass(frozen=True, eq=False)
class BinTable:
    """Per-bin counts of the reference, contaminant and test samples."""
    n0: np.ndarray
    n1: np.ndarray
    n_test: Optional[np.ndarray] = None

    def __post_init__(self):
        n0 = np.asarray(self.n0, dtype=np.int64)
        n1 = np.asarray(self.n1, dtype=np.int64)
        n_test = np.zeros_like(n0) if self.n_test is None else np.asarray(self.n_test, dtype=np.int64)
        if not n0.shape == n1.shape == n_test.shape or n0.ndim != 1:
            raise DataError('Count vectors must have one entry per bin.')
        if min(n0.min(initial=0), n1.min(initial=0), n_test.min(initial=0)) < 0:
            raise DataError('Counts must be non-negative.')
        object.__setattr__(self, 'n0', n0)
        object.__setattr__(self, 'n1', n1)
        object.__setattr__(self, 'n_test', n_test)

    @property
    def K(self) -> int:
        return self.n0.size

    @property
    def total_n0(self) -> int:
        return int(self.n0.sum())

    @property
    def total_n1(self) -> int:
        return int(self.n1.sum())

    @property
    def total_n(self) -> int:
        return int(self.n_test.sum())


def count_points(tree: PartitionTree, points) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, tree.d)
    return np.bincount(tree.locate_many(points), minlength=tree.K)


def count_bins(tree: PartitionTree, ds: LabeledDataset, subset=None, source: Optional[Source] = None) -> np.ndarray:
    """Counts rows of ``ds`` per bin.

    Parameters
    ----------
    tree
        The partition.
    ds
        The dataset.
    subset
        Row indices to count. Defaults to every row of ``source``.
    source
        When given, every row in ``subset`` must come from it.

    """
    if subset is None:
        subset = ds.indices(source) if source is not None else np.arange(ds.n_rows)
    subset = np.asarray(subset, dtype=np.int64)
    if source is not None and np.any(ds.source[subset] != source):
        raise DataError(f'Subset holds rows outside the {Source(source).name.lower()} sample.')
    return count_points(tree, ds.points[subset])


def make_bin_table(tree: PartitionTree, reference, contaminant, test=None) -> BinTable:
    return BinTable(
        n0=count_points(tree, reference),
        n1=count_points(tree, contaminant),
        n_test=None if test is None else count_points(tree, test),
    )
