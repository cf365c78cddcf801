import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Union

import numpy as np
from loguru import logger

from density_ratio_test.constants import metadata
from density_ratio_test.exceptions import DataError, InsufficientDataError, ParseError
from density_ratio_test.utilities import Seed, derive_rng


class Source(IntEnum):
    REFERENCE = 0
    CONTAMINANT = 1
    TEST = 2

    @property
    def label(self) -> str:
        return 'test' if self is Source.TEST else str(self.value)

    @classmethod
    def parse(cls, value: Union[str, int, 'Source']) -> 'Source':
        if isinstance(value, Source):
            return value
        text = str(value).strip().lower()
        aliases = {
            '0': cls.REFERENCE, 'reference': cls.REFERENCE,
            '1': cls.CONTAMINANT, 'contaminant': cls.CONTAMINANT,
            'test': cls.TEST,
        }
        try:
            return aliases[text]
        except KeyError:
            raise ParseError(f'Unknown source {value!r}; expected one of 0, 1, test.') from None


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Points in d dimensions, each tagged with the sample it belongs to."""
    points: np.ndarray
    source: np.ndarray
    _counts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        source = np.asarray(self.source, dtype=np.int8)
        if points.ndim != 2 or points.shape[1] < 1:
            raise DataError(f'Points must be an n_rows x d matrix with d >= 1, got shape {points.shape}.')
        if source.shape != (points.shape[0],):
            raise DataError(f'Expected {points.shape[0]} source tags, got {source.shape[0]}.')
        if source.size and (source.min() < Source.REFERENCE or source.max() > Source.TEST):
            raise DataError('Source tags must be 0 (reference), 1 (contaminant) or 2 (test).')
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'source', source)
        object.__setattr__(self, '_counts', np.bincount(source, minlength=len(Source)))

    @classmethod
    def from_samples(cls, reference=None, contaminant=None, test=None, d: Optional[int] = None) -> 'LabeledDataset':
        blocks = [(Source.REFERENCE, reference), (Source.CONTAMINANT, contaminant), (Source.TEST, test)]
        blocks = [(source, np.asarray(p, dtype=float)) for source, p in blocks if p is not None]
        if d is None:
            if not blocks:
                raise DataError('Cannot infer the dimension of an empty dataset.')
            d = blocks[0][1].shape[1]
        points = [p.reshape(-1, d) for _, p in blocks] or [np.empty((0, d))]
        source = [np.full(len(p), s, dtype=np.int8) for s, p in blocks] or [np.empty(0, dtype=np.int8)]
        return cls(np.concatenate(points), np.concatenate(source))

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_rows(self) -> int:
        return self.points.shape[0]

    def count(self, source: Source) -> int:
        return int(self._counts[source])

    def indices(self, source: Source) -> np.ndarray:
        return np.flatnonzero(self.source == source)

    def select(self, source: Source) -> np.ndarray:
        return self.points[self.source == source]

    def in_unit_cube(self) -> bool:
        return bool(np.all((self.points >= 0) & (self.points <= 1)))

    def with_points(self, points: np.ndarray) -> 'LabeledDataset':
        return LabeledDataset(points, self.source)

    def concat(self, other: 'LabeledDataset') -> 'LabeledDataset':
        if other.d != self.d:
            raise DataError(f'Cannot join datasets of dimension {self.d} and {other.d}.')
        return LabeledDataset(np.vstack([self.points, other.points]),
                              np.concatenate([self.source, other.source]))


@dataclass(frozen=True, eq=False)
class SampleSplit:
    """Disjoint index sets cutting each labelled source into a part and an est share.

    Partitions are grown on the part sets; every estimate that feeds a test
    uses only the est sets.
    """
    part_reference: np.ndarray
    est_reference: np.ndarray
    part_contaminant: np.ndarray
    est_contaminant: np.ndarray

    @property
    def n0_part(self) -> int:
        return len(self.part_reference)

    @property
    def n0_est(self) -> int:
        return len(self.est_reference)

    @property
    def n1_part(self) -> int:
        return len(self.part_contaminant)

    @property
    def n1_est(self) -> int:
        return len(self.est_contaminant)


def split_training(ds: LabeledDataset, frac_part: float = metadata.FRAC_PART, seed: Seed = 0) -> SampleSplit:
    """Randomly assigns ``floor(frac_part * n)`` rows of each labelled source to the part set.

    Parameters
    ----------
    ds
        Dataset holding reference and contaminant rows. Test rows are ignored.
    frac_part
        Share of each source used to grow the partition, in (0, 1).
    seed
        Seed of the permutation; each source gets its own stream.

    Returns
    -------
        The split, with every index set sorted.

    """
    if not 0 < frac_part < 1:
        raise ValueError(f'frac_part must lie in (0, 1), got {frac_part}.')

    sets = {}
    for source in (Source.REFERENCE, Source.CONTAMINANT):
        rows = ds.indices(source)
        if len(rows) < 2:
            raise InsufficientDataError(
                f'The {source.name.lower()} sample has {len(rows)} rows; at least 2 are needed to split it.'
            )
        n_part = math.floor(frac_part * len(rows))
        if n_part == 0:
            raise InsufficientDataError(
                f'frac_part={frac_part} leaves no {source.name.lower()} rows to grow the partition on.'
            )
        shuffled = rows[derive_rng(seed, int(source)).permutation(len(rows))]
        sets[source] = (np.sort(shuffled[:n_part]), np.sort(shuffled[n_part:]))

    split = SampleSplit(
        part_reference=sets[Source.REFERENCE][0],
        est_reference=sets[Source.REFERENCE][1],
        part_contaminant=sets[Source.CONTAMINANT][0],
        est_contaminant=sets[Source.CONTAMINANT][1],
    )
    logger.debug(f'Split training rows: reference {split.n0_part}/{split.n0_est}, '
                 f'contaminant {split.n1_part}/{split.n1_est} (part/est).')
    return split
