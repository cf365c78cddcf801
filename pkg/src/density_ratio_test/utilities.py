import math
from typing import Union

import numpy as np
from scipy import stats

Seed = Union[None, int, np.random.SeedSequence, np.random.Generator]


def derive_seed(seed: Seed, *keys: int) -> np.random.SeedSequence:
    """Derives an independent seed sequence from ``seed`` and integer keys.

    Parameters
    ----------
    seed
        The root seed. A generator is consumed once to produce an entropy
        value.
    keys
        Non-negative integers naming the stream, e.g. ``(rep, replicate)``.

    Returns
    -------
        A seed sequence whose spawn key is the parent spawn key extended
        by ``keys``.

    """
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2 ** 63))
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(keys))
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))


def derive_rng(seed: Seed, *keys: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator) and not keys:
        return seed
    return np.random.default_rng(derive_seed(seed, *keys))


def get_truncnorm_from_sd(mean: float, sd: float, lower_clip: float = 0.0, upper_clip: float = 1.0):
    a = (lower_clip - mean) / sd
    b = (upper_clip - mean) / sd
    return stats.truncnorm(loc=mean, scale=sd, a=a, b=b)


def normal_mass(lower, upper, mean, sd) -> np.ndarray:
    """Probability a normal variable falls in ``[lower, upper]``.

    Differences of survival functions are used right of the mean so
    that masses far in the upper tail keep their precision.
    """
    lower, upper, mean, sd = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lower, upper, mean, sd)))
    a = (lower - mean) / sd
    b = (upper - mean) / sd
    return np.where(a > 0, stats.norm.sf(a) - stats.norm.sf(b), stats.norm.cdf(b) - stats.norm.cdf(a))


def upper_order_statistic(values, level: float) -> float:
    """Returns the order statistic of rank ``ceil(level * B)`` (one-based).

    Parameters
    ----------
    values
        The ``B`` replicate statistics, in any order.
    level
        Quantile level in (0, 1).

    """
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        raise ValueError('Cannot take a quantile of zero replicates.')
    # Rounding absorbs representation error in products like 0.95 * 200.
    rank = math.ceil(round(level * values.size, 9))
    rank = min(max(rank, 1), values.size)
    return float(values[rank - 1])


def to_significant(value: float, digits: int = 6) -> Union[float, str, None]:
    """Rounds to ``digits`` significant digits for JSON output.

    NaN becomes ``None`` and infinities become the strings ``"inf"`` and
    ``"-inf"``.
    """
    if value is None or np.isnan(value):
        return None
    if np.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return float(f'{value:.{digits}g}')
