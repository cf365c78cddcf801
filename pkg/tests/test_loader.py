import numpy as np
import pytest

from density_ratio_test.data.dataset import LabeledDataset, Source
from density_ratio_test.data.loader import load_csv, write_csv
from density_ratio_test.exceptions import EmptyDataError, ParseError, SchemaError


def test_load_csv_with_source_column(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('x0,x1,source\n0.1,0.2,0\n0.3,0.4,1\n0.5,0.6,test\n')
    ds = load_csv(path)
    assert ds.n_rows == 3
    assert ds.d == 2
    assert ds.source.tolist() == [Source.REFERENCE, Source.CONTAMINANT, Source.TEST]
    assert np.array_equal(ds.points, [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])


def test_load_csv_file_level_source(tmp_path):
    path = tmp_path / 'reference.csv'
    path.write_text('a,b\n1,2\n3,4\n')
    ds = load_csv(path, source='reference')
    assert ds.count(Source.REFERENCE) == 2
    assert ds.points[1, 0] == 3.0


def test_load_csv_file_level_source_wins(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('x0,source\n0.1,0\n0.2,1\n')
    ds = load_csv(path, source=Source.TEST)
    assert ds.count(Source.TEST) == 2
    assert ds.d == 1


def test_load_csv_feature_columns(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('id,x0,x1,source\nfoo,0.1,0.2,0\nbar,0.3,0.4,1\n')
    ds = load_csv(path, feature_columns=['x0', 'x1'])
    assert ds.d == 2
    with pytest.raises(SchemaError):
        load_csv(path, feature_columns=['x2'])


def test_load_csv_empty(tmp_path):
    path = tmp_path / 'empty.csv'
    path.write_text('')
    with pytest.raises(EmptyDataError, match='no rows'):
        load_csv(path, source=0)

    header_only = tmp_path / 'header.csv'
    header_only.write_text('x0,x1,source\n')
    with pytest.raises(EmptyDataError, match='no rows'):
        load_csv(header_only)


def test_load_csv_non_numeric_cell_names_its_line(tmp_path):
    rows = ['x0,x1,source'] + [f'0.{i},0.5,0' for i in range(1, 6)] + ['0.6,abc,1', '0.7,0.1,1']
    path = tmp_path / 'bad.csv'
    path.write_text('\n'.join(rows) + '\n')
    with pytest.raises(ParseError, match='line 7') as info:
        load_csv(path)
    assert info.value.line == 7


def test_load_csv_blank_lines_keep_line_numbers(tmp_path):
    path = tmp_path / 'gaps.csv'
    path.write_text('x0,x1,source\n0.1,0.2,0\n\n0.3,0.4,1\n0.5,abc,0\n')
    with pytest.raises(ParseError, match='line 5') as info:
        load_csv(path)
    assert info.value.line == 5

    path.write_text('x0,source\n\n\n0.1,0\n0.2,7\n')
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.line == 5

    path.write_text('x0,x1,source\n0.1,0.2,0\n\n0.3,0.4,test\n\n')
    ds = load_csv(path)
    assert ds.n_rows == 2
    assert ds.source.tolist() == [Source.REFERENCE, Source.TEST]


def test_load_csv_bad_source_tag(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('x0,source\n0.1,0\n0.2,5\n')
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.line == 3


def test_load_csv_missing_source(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('x0,x1\n0.1,0.2\n')
    with pytest.raises(SchemaError):
        load_csv(path)


def test_write_csv_is_read_back(tmp_path):
    rng = np.random.default_rng(0)
    ds = LabeledDataset.from_samples(rng.random((4, 3)), rng.random((2, 3)), rng.random((1, 3)))
    path = tmp_path / 'out.csv'
    write_csv(ds, path)
    loaded = load_csv(path)
    assert np.allclose(loaded.points, ds.points)
    assert np.array_equal(loaded.source, ds.source)
    assert write_csv(ds).splitlines()[0] == 'x0,x1,x2,source'
