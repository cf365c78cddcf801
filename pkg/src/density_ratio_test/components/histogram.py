"""Thresholded histogram estimates of bin masses and of the density ratio.

Bin frequencies too small to be trusted are floored: the reference
frequency at ``3 eps0`` (or ``3 eps1`` when the contaminant frequency is
also small) and the contaminant frequency at ``3 eps1``. The floors keep
every reference estimate positive, so the ratio estimate is always
defined.
"""
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from density_ratio_test.components.partition import BinTable, PartitionTree
from density_ratio_test.constants import metadata
from density_ratio_test.data.densities import TruncatedGaussian
from density_ratio_test.exceptions import DataError
from density_ratio_test.utilities import normal_mass


class Omega(IntEnum):
    PLAIN = 0
    OMEGA0 = 1
    OMEGA1 = 2
    OMEGA01 = 3

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ThresholdContext:
    alpha: float
    K: int
    n: int
    n0: int
    n1: int
    u: float
    t: float
    eps0: float
    eps1: float

    @property
    def violations(self) -> Tuple[str, ...]:
        """Hypotheses of the rejection threshold that this context breaks."""
        violated = []
        if not 3 * self.eps0 <= self.eps1:
            violated.append('3*eps0 <= eps1')
        if not self.eps1 <= 1:
            violated.append('eps1 <= 1')
        if not self.n1 <= self.n0:
            violated.append('n1 <= n0')
        return tuple(violated)

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha, 'K': self.K, 'n': self.n, 'n0': self.n0, 'n1': self.n1,
            'u': self.u, 't': self.t, 'eps0': self.eps0, 'eps1': self.eps1,
            'valid': self.valid, 'violations': list(self.violations),
        }


def make_context(alpha: float, K: int, n: int, n0: int, n1: int,
                 u_override: Optional[float] = None, t_override: Optional[float] = None) -> ThresholdContext:
    """Builds the thresholds of a K-bin histogram.

    ``u = ln(4K / alpha)`` and ``t = ln(2 / alpha)`` unless overridden;
    ``eps0 = max(3u / n0, t / n)`` and ``eps1 = sqrt(3u / n1)``.
    Contexts that break the test hypotheses are returned, not rejected;
    check :attr:`ThresholdContext.violations`.
    """
    if not 0 < alpha < 1:
        raise ValueError(f'alpha must lie in (0, 1), got {alpha}.')
    if min(K, n, n0, n1) < 1:
        raise ValueError(f'K, n, n0 and n1 must be positive, got {(K, n, n0, n1)}.')
    u = math.log(4 * K / alpha) if u_override is None else float(u_override)
    t = math.log(2 / alpha) if t_override is None else float(t_override)
    context = ThresholdContext(
        alpha=alpha, K=int(K), n=int(n), n0=int(n0), n1=int(n1), u=u, t=t,
        eps0=max(3 * u / n0, t / n),
        eps1=math.sqrt(3 * u / n1),
    )
    if not context.valid:
        logger.debug(f'Threshold context with K={K}, n={n}, n0={n0}, n1={n1} violates {context.violations}.')
    return context


def threshold_counts(ctx: ThresholdContext, n0_counts, n1_counts):
    """Classifies bins and floors their frequencies.

    Works elementwise on count arrays of any shape.

    Returns
    -------
        The Omega codes and the thresholded reference and contaminant
        estimates.

    """
    f0 = np.asarray(n0_counts, dtype=float) / ctx.n0
    f1 = np.asarray(n1_counts, dtype=float) / ctx.n1
    low1 = f1 <= ctx.eps1
    omega0 = ~low1 & (f0 <= ctx.eps0)
    omega01 = low1 & (f0 <= ctx.eps1)
    omega1 = low1 & (f0 > ctx.eps1)

    omega = np.full(f0.shape, Omega.PLAIN, dtype=np.int8)
    omega[omega0] = Omega.OMEGA0
    omega[omega1] = Omega.OMEGA1
    omega[omega01] = Omega.OMEGA01

    h0 = np.where(omega0, 3 * ctx.eps0, np.where(omega01, 3 * ctx.eps1, f0))
    h1 = np.where(low1, 3 * ctx.eps1, f1)
    return omega, h0, h1


def signal_terms(ctx: ThresholdContext, n0_counts, n1_counts) -> np.ndarray:
    """Per-bin contributions ``(r - 1)^2 h0`` to the estimated signal."""
    _, h0, h1 = threshold_counts(ctx, n0_counts, n1_counts)
    return (h1 - h0) ** 2 / h0


@dataclass(frozen=True, eq=False)
class ThresholdedHistogram:
    h0: np.ndarray
    h1: np.ndarray
    r: np.ndarray
    omega: np.ndarray
    sigma2_hat: float
    K0: int
    K1: int
    context: ThresholdContext

    @property
    def K(self) -> int:
        return self.h0.size

    @property
    def max_abs_r_minus_1(self) -> float:
        return float(np.max(np.abs(self.r - 1)))

    @property
    def omega_labels(self) -> Tuple[str, ...]:
        return tuple(Omega(code).label for code in self.omega)

    @property
    def signal_contributions(self) -> np.ndarray:
        return (self.r - 1) ** 2 * self.h0

    @property
    def unthresholded_reference_mass(self) -> float:
        """Sum of raw reference frequencies; at most 1."""
        raw = (self.omega != Omega.OMEGA0) & (self.omega != Omega.OMEGA01)
        return float(self.h0[raw].sum())

    @property
    def unthresholded_contaminant_mass(self) -> float:
        """Sum of raw contaminant frequencies; at most 1."""
        raw = (self.omega != Omega.OMEGA1) & (self.omega != Omega.OMEGA01)
        return float(self.h1[raw].sum())

    @property
    def contaminant_mass_bound(self) -> float:
        """Upper bound ``1 + 3 eps1 K1`` on the total contaminant estimate."""
        return 1 + 3 * self.context.eps1 * self.K1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'h0': self.h0.tolist(),
            'h1': self.h1.tolist(),
            'r': self.r.tolist(),
            'omega': list(self.omega_labels),
            'sigma2_hat': self.sigma2_hat,
            'K0': self.K0,
            'K1': self.K1,
            'eps0': self.context.eps0,
            'eps1': self.context.eps1,
            'u': self.context.u,
            't': self.context.t,
        }


def estimate(ctx: ThresholdContext, bins: BinTable) -> ThresholdedHistogram:
    """Thresholded estimates, ratios and signal of a partition's counts.

    Frequencies are taken relative to ``ctx.n0`` and ``ctx.n1``.
    """
    if bins.K != ctx.K:
        raise ValueError(f'Count table has {bins.K} bins but the context expects {ctx.K}.')
    omega, h0, h1 = threshold_counts(ctx, bins.n0, bins.n1)
    assert np.all(h0 > 0), 'Thresholded reference estimates must be positive.'
    r = h1 / h0
    return ThresholdedHistogram(
        h0=h0,
        h1=h1,
        r=r,
        omega=omega,
        sigma2_hat=float(np.sum((r - 1) ** 2 * h0)),
        K0=int(np.sum(omega == Omega.OMEGA0)),
        K1=int(np.sum((omega == Omega.OMEGA1) | (omega == Omega.OMEGA01))),
        context=ctx,
    )


def population_signal(f0, f1, tree: Optional[PartitionTree] = None,
                      quadrature: int = metadata.QUADRATURE_RESOLUTION) -> float:
    """Population signal ``int (f1 / f0 - 1)^2 f0``, or its binned version on ``tree``.

    Parameters
    ----------
    f0, f1
        Reference and contaminant densities on [0, 1]^d.
    tree
        When given, the signal of the bin masses ``sum (p1 - p0)^2 / p0``.
    quadrature
        Midpoints per axis of the grid used for densities without a
        closed form.

    """
    if tree is not None:
        if hasattr(f0, 'rectangle_mass') and hasattr(f1, 'rectangle_mass'):
            lower, upper = tree.bin_bounds()
            p0 = f0.rectangle_mass(lower, upper)
            p1 = f1.rectangle_mass(lower, upper)
        else:
            points, weight = _midpoint_grid(tree.d, quadrature)
            bins = tree.locate_many(points)
            p0 = np.bincount(bins, weights=f0(points) * weight, minlength=tree.K)
            p1 = np.bincount(bins, weights=f1(points) * weight, minlength=tree.K)
        with np.errstate(divide='ignore', invalid='ignore'):
            value = float(np.sum((p1 - p0) ** 2 / p0))
    elif _equal_variance_gaussians(f0, f1):
        value = _gaussian_signal(f0, f1)
    else:
        points, weight = _midpoint_grid(f0.d, quadrature)
        d0 = f0(points)
        d1 = f1(points)
        with np.errstate(divide='ignore', invalid='ignore'):
            value = float(np.sum((d1 - d0) ** 2 / d0) * weight)

    if not np.isfinite(value):
        raise DataError('The signal integral is not finite; the reference density vanishes where it is needed.')
    return value


def _equal_variance_gaussians(f0, f1) -> bool:
    return (isinstance(f0, TruncatedGaussian) and isinstance(f1, TruncatedGaussian)
            and f0.d == f1.d and np.array_equal(f0.sd, f1.sd))


def _gaussian_signal(f0: TruncatedGaussian, f1: TruncatedGaussian) -> float:
    # Per axis, f1^2 / f0 is a Gaussian centered on 2 m1 - m0 scaled by exp(delta^2 / s^2).
    s = f0.sd
    delta = f1.mean - f0.mean
    center = 2 * f1.mean - f0.mean
    axis_integral = (np.exp(delta ** 2 / s ** 2) * normal_mass(0.0, 1.0, center, s)
                     * f0.axis_mass / f1.axis_mass ** 2)
    return max(float(np.prod(axis_integral) - 1), 0.0)


def _midpoint_grid(d: int, resolution: int):
    axis = (np.arange(resolution) + 0.5) / resolution
    mesh = np.meshgrid(*([axis] * d), indexing='ij')
    points = np.stack([m.ravel() for m in mesh], axis=1)
    return points, resolution ** -float(d)
