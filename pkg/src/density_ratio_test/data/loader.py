"""Reading and writing labelled datasets as CSV.

A file has one header row and numeric feature columns. Rows are tagged
either by a ``source`` column holding ``0`` (reference), ``1``
(contaminant) or ``test``, or by a single source given for the whole file.
"""
import re
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from density_ratio_test.data.dataset import LabeledDataset, Source
from density_ratio_test.exceptions import EmptyDataError, ParseError, SchemaError

SOURCE_COLUMN = 'source'
# Row label 0 is the line after the header; blank lines keep their labels.
FIRST_DATA_LINE = 2


def load_csv(path: Union[str, Path],
             source: Optional[Union[str, int, Source]] = None,
             source_column: str = SOURCE_COLUMN,
             feature_columns: Optional[Sequence[str]] = None) -> LabeledDataset:
    """Loads raw coordinates and source tags from a CSV file.

    Parameters
    ----------
    path
        The CSV file.
    source
        A source assigned to every row. Takes precedence over a source
        column in the file.
    source_column
        Name of the column holding per-row source tags.
    feature_columns
        Columns to read as coordinates. Defaults to every column other
        than the source column.

    Returns
    -------
        The dataset, rows in file order, coordinates untransformed.

    """
    path = Path(path)
    try:
        data = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True,
                           skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise EmptyDataError(f'{path}: no rows.') from None
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        raise ParseError(f'{path}: malformed row ({e}).', line=int(match.group(1)) if match else None) from None

    data = _drop_blank_rows(data)
    if data.empty:
        raise EmptyDataError(f'{path}: no rows.')

    if source is not None:
        if source_column in data.columns:
            logger.warning(f'{path}: ignoring column {source_column!r}, every row is tagged {Source.parse(source).label}.')
        tags = np.full(len(data), Source.parse(source), dtype=np.int8)
    elif source_column in data.columns:
        tags = _parse_sources(data[source_column], path)
    else:
        raise SchemaError(f'{path}: no {source_column!r} column and no source given for the file.')

    if feature_columns is None:
        feature_columns = [c for c in data.columns if c != source_column]
    missing = [c for c in feature_columns if c not in data.columns]
    if missing:
        raise SchemaError(f'{path}: missing feature columns {missing}.')
    if not feature_columns:
        raise SchemaError(f'{path}: no feature columns.')

    points = _parse_features(data[list(feature_columns)], path)
    logger.debug(f'Loaded {len(points)} rows with {points.shape[1]} features from {path}.')
    return LabeledDataset(points, tags)


def _drop_blank_rows(data: pd.DataFrame) -> pd.DataFrame:
    """Removes empty lines, keeping the row labels of the others."""
    data = data.fillna('')
    blank = data.apply(lambda column: column.str.strip().eq('')).all(axis=1)
    return data[~blank]


def _parse_sources(column: pd.Series, path: Path) -> np.ndarray:
    tags = np.empty(len(column), dtype=np.int8)
    for row, (label, value) in enumerate(column.items()):
        try:
            tags[row] = Source.parse(value)
        except ParseError as e:
            raise ParseError(f'{path}: {e}', line=int(label) + FIRST_DATA_LINE) from None
    return tags


def _parse_features(data: pd.DataFrame, path: Path) -> np.ndarray:
    numeric = data.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = min(zip(*np.nonzero(bad)))
        column = data.columns[col]
        raise ParseError(f'{path}: non-numeric value {data.iat[row, col]!r} in column {column!r}.',
                         line=int(data.index[row]) + FIRST_DATA_LINE)
    return numeric.to_numpy(dtype=float)


def feature_names(d: int) -> List[str]:
    return [f'x{axis}' for axis in range(d)]


def write_csv(ds: LabeledDataset, path: Union[str, Path, None] = None,
              columns: Optional[Sequence[str]] = None) -> Optional[str]:
    """Writes a dataset with a ``source`` column; returns the text if ``path`` is None."""
    columns = list(columns) if columns is not None else feature_names(ds.d)
    data = pd.DataFrame(ds.points, columns=columns)
    data[SOURCE_COLUMN] = [Source(s).label for s in ds.source]
    return data.to_csv(path, index=False)
