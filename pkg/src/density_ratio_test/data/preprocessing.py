import numpy as np
from loguru import logger

from density_ratio_test.data.dataset import LabeledDataset
from density_ratio_test.exceptions import DegenerateAxisError


def preprocess(raw: LabeledDataset, cofactor: float = 1.0) -> LabeledDataset:
    """Maps raw measurements into the unit cube.

    Each coordinate is centered on its mean, passed through
    ``arcsinh(x / cofactor)`` and rescaled so its minimum lands on 0 and its
    maximum on 1. All rows are pooled regardless of source.

    Parameters
    ----------
    raw
        Dataset with untransformed coordinates.
    cofactor
        Scale applied before the arcsinh.

    Returns
    -------
        A dataset with the same rows and sources, coordinates in [0, 1].

    """
    if cofactor <= 0:
        raise ValueError(f'cofactor must be positive, got {cofactor}.')
    points = raw.points
    if points.shape[0] == 0:
        raise DegenerateAxisError('Cannot preprocess a dataset without rows.')

    transformed = np.arcsinh((points - points.mean(axis=0)) / cofactor)
    low = transformed.min(axis=0)
    high = transformed.max(axis=0)
    span = high - low
    degenerate = np.flatnonzero(~(span > 0))
    if degenerate.size:
        raise DegenerateAxisError(f'Axes {degenerate.tolist()} are constant and cannot be rescaled.')

    scaled = np.clip((transformed - low) / span, 0.0, 1.0)
    logger.debug(f'Preprocessed {points.shape[0]} rows on {points.shape[1]} axes.')
    return raw.with_points(scaled)
