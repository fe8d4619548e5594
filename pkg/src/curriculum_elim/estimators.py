"""Empirical means, the confidence multiplier ``g`` and dispersion estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DeltaOutOfRange, DimensionMismatch, EmptySample, ParamOutOfRange, TooFewSamples

DEFAULT_C_CONST = 4.0
DEFAULT_DELTA_GRID = (0.2, 0.1, 0.05, 0.01)
CALIBRATION_FLOOR = 1.01


@dataclass(frozen=True)
class GFunction:
    """Confidence multiplier ``g(delta) = c_const * ln(e / delta)``.

    With probability at least ``1 - delta`` the empirical mean of ``K``
    samples lies within squared distance ``g(delta) * d * sigma2 / K`` of
    the true mean.
    """

    c_const: float = DEFAULT_C_CONST

    def __post_init__(self) -> None:
        if not self.c_const > 1.0:
            raise ParamOutOfRange(f"c_const must exceed 1, got {self.c_const}")

    def __call__(self, delta: float) -> float:
        return g_of_delta(self, delta)


def g_of_delta(g: GFunction, delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
    return g.c_const * (1.0 - math.log(delta))


def _as_samples(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"samples must form a (K, d) array, got shape {arr.shape}")
    return arr


def empirical_mean(samples) -> np.ndarray:
    arr = _as_samples(samples)
    if arr.shape[0] == 0:
        raise EmptySample("cannot average zero samples")
    return arr.mean(axis=0)


def variance_hat(samples) -> float:
    """Pooled per-coordinate variance ``sum ||Y_i - mean||^2 / (d (K - 1))``.

    Unbiased for ``sigma2`` under isotropic noise.  Under a general
    covariance it estimates ``trace(cov) / d`` (see :func:`trace_hat`).
    """
    arr = _as_samples(samples)
    count, dim = arr.shape
    if count < 2:
        raise TooFewSamples(f"need at least 2 samples, got {count}")
    centred = arr - arr.mean(axis=0)
    return float(np.sum(centred * centred) / (dim * (count - 1)))


def trace_hat(samples) -> float:
    """Estimate of ``trace(cov) / d``; same computation as :func:`variance_hat`."""
    return variance_hat(samples)


def squared_error(estimate, truth) -> float:
    est = np.asarray(estimate, dtype=float).reshape(-1)
    ref = np.asarray(truth, dtype=float).reshape(-1)
    if est.shape != ref.shape:
        raise DimensionMismatch(f"estimate has length {est.shape[0]}, truth has length {ref.shape[0]}")
    diff = est - ref
    return float(diff @ diff)


def calibrate_g(
    dim: int,
    sigma2: float,
    k_samples: int,
    delta_grid: Sequence[float] = DEFAULT_DELTA_GRID,
    reps: int = 10_000,
    seed: int = 0,
    chunk_elements: int = 4_000_000,
) -> GFunction:
    """Smallest ``c >= 1.01`` whose ``g`` covers the simulated mean errors.

    For each repetition ``k_samples`` isotropic Gaussian draws are averaged
    and the normalized error ``K ||mean - theta||^2 / (d sigma2)`` recorded.
    The returned constant makes ``c ln(e / delta)`` dominate the empirical
    ``(1 - delta)``-quantile for every ``delta`` in the grid.
    """
    if reps < 1000:
        raise ParamOutOfRange(f"calibration needs at least 1000 repetitions, got {reps}")
    if k_samples < 1 or dim < 1:
        raise ParamOutOfRange("k_samples and dim must be positive")
    for delta in delta_grid:
        if not 0.0 < delta < 1.0:
            raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
    if sigma2 <= 0.0:
        return GFunction(CALIBRATION_FLOOR)

    rng = np.random.default_rng(seed)
    stats = np.empty(reps)
    per_rep = k_samples * dim
    batch = max(1, chunk_elements // per_rep)
    scale = math.sqrt(sigma2)
    for start in range(0, reps, batch):
        stop = min(reps, start + batch)
        draws = scale * rng.standard_normal((stop - start, k_samples, dim))
        means = draws.mean(axis=1)
        stats[start:stop] = k_samples * np.sum(means * means, axis=1) / (dim * sigma2)

    needed = max(
        float(np.quantile(stats, 1.0 - delta, method="higher")) / (1.0 - math.log(delta)) for delta in delta_grid
    )
    return GFunction(max(CALIBRATION_FLOOR, needed))
