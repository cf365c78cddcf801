import numpy as np
import pytest

from density_ratio_test.components.partition import (BinTable, PartitionTree, Rectangle, count_bins, count_points,
                                                     make_bin_table)
from density_ratio_test.data.dataset import LabeledDataset, Source
from density_ratio_test.exceptions import DataError, PartitionError


@pytest.fixture
def quadrants():
    tree = PartitionTree.root(2)
    tree = tree.split_leaf(0, 0, 0.5)
    tree = tree.split_leaf(0, 1, 0.5)
    return tree.split_leaf(1, 1, 0.25)


def test_root():
    tree = PartitionTree.root(3)
    assert tree.K == 1
    assert tree.d == 3
    assert tree.locate([0.2, 0.9, 1.0]) == 0
    with pytest.raises(PartitionError):
        PartitionTree.root(0)


def test_split_numbering(quadrants):
    assert quadrants.K == 4
    assert quadrants.n_nodes == 7
    assert quadrants.locate([0.1, 0.1]) == 0
    assert quadrants.locate([0.1, 0.9]) == 2
    assert quadrants.locate([0.9, 0.1]) == 1
    assert quadrants.locate([0.9, 0.6]) == 3


def test_boundary_points_go_right(quadrants):
    assert quadrants.locate([0.5, 0.0]) == 1
    assert quadrants.locate([0.0, 0.5]) == 2
    assert quadrants.locate([1.0, 1.0]) == 3


def test_locate_many_matches_locate(quadrants):
    points = np.random.default_rng(0).random((200, 2))
    expected = [quadrants.locate(p) for p in points]
    assert np.array_equal(quadrants.locate_many(points), expected)


def test_locate_agrees_with_rectangles(quadrants):
    points = np.random.default_rng(1).random((500, 2))
    bins = quadrants.locate_many(points)
    for k in range(quadrants.K):
        assert np.array_equal(quadrants.bin_rectangle(k).contains(points), bins == k)


def test_bins_tile_the_cube(quadrants):
    assert quadrants.bin_volumes().sum() == pytest.approx(1.0)
    lower, upper = quadrants.bin_bounds()
    assert np.allclose(lower[1], [0.5, 0.0])
    assert np.allclose(upper[1], [1.0, 0.25])


def test_split_errors(quadrants):
    with pytest.raises(PartitionError):
        quadrants.split_leaf(4, 0, 0.5)
    with pytest.raises(PartitionError):
        quadrants.split_leaf(0, 2, 0.5)
    with pytest.raises(PartitionError):
        quadrants.split_leaf(0, 0, 0.5)
    with pytest.raises(PartitionError):
        quadrants.locate([0.1, 0.2, 0.3])


def test_split_leaves_parent_untouched(quadrants):
    refined = quadrants.split_leaf(3, 0, 0.75)
    assert quadrants.K == 4
    assert refined.K == 5
    assert refined.locate([0.9, 0.9]) == 4


def test_snapshot(quadrants):
    earlier = quadrants.snapshot(2)
    assert earlier.K == 2
    assert earlier.locate([0.9, 0.1]) == 1
    assert earlier.locate([0.1, 0.9]) == 0
    assert quadrants.snapshot(4).to_dict() == quadrants.to_dict()
    with pytest.raises(PartitionError):
        quadrants.snapshot(5)


def test_snapshot_can_be_refined(quadrants):
    other = quadrants.snapshot(2).split_leaf(1, 0, 0.75)
    assert other.K == 3
    assert other.locate([0.9, 0.9]) == 2
    assert other.locate([0.1, 0.9]) == 0


def test_document_round_trip(quadrants):
    document = quadrants.to_dict()
    assert document['K'] == 4
    assert document['root']['dim'] == 0
    assert document['root']['value'] == 0.5
    rebuilt = PartitionTree.from_dict(document)
    points = np.random.default_rng(2).random((300, 2))
    assert np.array_equal(rebuilt.locate_many(points), quadrants.locate_many(points))
    with pytest.raises(PartitionError):
        PartitionTree.from_dict({'root': {'bin': 0}})


def test_rectangle():
    box = Rectangle([0.0, 0.5], [0.5, 1.0])
    assert box.volume == 0.25
    assert list(box.contains([[0.0, 0.5], [0.5, 0.7], [0.2, 1.0]])) == [True, False, True]
    with pytest.raises(PartitionError):
        Rectangle([0.5], [0.2])
    with pytest.raises(PartitionError):
        Rectangle([0.0], [1.5])


def test_count_bins(quadrants):
    ds = LabeledDataset.from_samples(reference=[[0.1, 0.1], [0.9, 0.9], [0.2, 0.2]],
                                     contaminant=[[0.9, 0.1]], test=[[0.1, 0.9]])
    assert list(count_bins(quadrants, ds, source=Source.REFERENCE)) == [2, 0, 0, 1]
    assert list(count_bins(quadrants, ds)) == [2, 1, 1, 1]
    with pytest.raises(DataError):
        count_bins(quadrants, ds, subset=[0, 3], source=Source.REFERENCE)


def test_count_points_empty(quadrants):
    assert list(count_points(quadrants, np.empty((0, 2)))) == [0, 0, 0, 0]


def test_bin_table(quadrants):
    table = make_bin_table(quadrants, [[0.1, 0.1]], [[0.9, 0.9], [0.9, 0.8]])
    assert table.total_n0 == 1
    assert table.total_n1 == 2
    assert table.total_n == 0
    with pytest.raises(DataError):
        BinTable([1, 2], [1])
    with pytest.raises(DataError):
        BinTable([1, -2], [1, 0])
