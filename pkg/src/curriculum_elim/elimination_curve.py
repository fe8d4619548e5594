"""Fraction-of-survivors map and its iteration.

``beta(tau)`` is the fraction of sources that survive a round when a fraction
``tau`` of them (the closest ones) is still retained.  Iterating it from 1
predicts how many sources remain after each elimination round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ParamOutOfRange, TauOutOfRange
from .estimators import g_of_delta
from .models import ProblemInstance


@dataclass(frozen=True, eq=False)
class CurveSpec:
    q2s: np.ndarray
    sigma2s: np.ndarray
    sigma0_2: float
    n_budget: int
    dim: int
    g_over_nu: float
    tau_min: float

    def __post_init__(self) -> None:
        if np.any(np.diff(self.q2s) < 0):
            raise ParamOutOfRange("q2s must be sorted ascending")
        if len(self.q2s) != len(self.sigma2s) or len(self.q2s) == 0:
            raise ParamOutOfRange("q2s and sigma2s must be nonempty and of equal length")
        if not 0.0 < self.tau_min <= 1.0:
            raise ParamOutOfRange(f"tau_min must lie in (0, 1], got {self.tau_min}")

    @property
    def n_sources(self) -> int:
        return len(self.q2s)


def default_tau_min(sigma2s: Sequence[float], sigma0_2: float) -> float:
    """``ceil(sigma0_2 / mean(sigma2s)) / T`` capped at 1."""
    n_src = len(sigma2s)
    mean = float(np.mean(sigma2s))
    if mean <= 0:
        return 1.0
    return min(1.0, math.ceil(round(sigma0_2 / mean, 9)) / n_src)


def make_curve(
    q2s: Sequence[float],
    sigma2s: Sequence[float],
    sigma0_2: float,
    n_budget: int,
    dim: int,
    g_over_nu: float,
    tau_min: float | None = None,
) -> CurveSpec:
    """Sort the sources by distance and build a :class:`CurveSpec`."""
    q2 = np.asarray(q2s, dtype=float)
    s2 = np.asarray(sigma2s, dtype=float)
    order = np.argsort(q2, kind="stable")
    q2, s2 = q2[order], s2[order]
    if tau_min is None:
        tau_min = default_tau_min(s2, sigma0_2)
    for arr in (q2, s2):
        arr.setflags(write=False)
    return CurveSpec(q2, s2, float(sigma0_2), int(n_budget), int(dim), float(g_over_nu), float(tau_min))


def curve_from_instance(instance: ProblemInstance, config) -> CurveSpec:
    """Curve with barrier factor ``g(delta_bar) / nu`` taken from an elimination config."""
    g_over_nu = g_of_delta(config.g, config.delta_bar(instance)) / config.nu
    return make_curve(
        instance.distances2[1:], instance.sigma2s[1:], instance.target.sigma2,
        instance.n_budget, instance.dim, g_over_nu,
    )


def _barriers(curve: CurveSpec) -> np.ndarray:
    """Barrier when ``m = 1..T`` closest sources are retained."""
    pooled = np.cumsum(curve.sigma2s)
    return curve.g_over_nu * curve.dim * pooled / curve.n_budget


def _low_barrier(curve: CurveSpec) -> float:
    return curve.g_over_nu * curve.dim * curve.sigma0_2 / curve.n_budget


def _count_below(curve: CurveSpec, barrier) -> np.ndarray:
    return np.searchsorted(curve.q2s, barrier, side="right")


def beta(curve: CurveSpec, tau: float) -> float:
    if not 0.0 < tau <= 1.0:
        raise TauOutOfRange(f"tau must lie in (0, 1], got {tau}")
    n_src = curve.n_sources
    if tau <= curve.tau_min:
        barrier = _low_barrier(curve)
    else:
        # Rounding guards against products like (1/49) * 49 landing just above an integer.
        m = min(n_src, math.ceil(round(tau * n_src, 9)))
        barrier = _barriers(curve)[m - 1]
    return int(_count_below(curve, barrier)) / n_src


def beta_at_counts(curve: CurveSpec) -> np.ndarray:
    """``beta(m / T)`` for ``m = 1..T``, evaluated in one pass."""
    n_src = curve.n_sources
    taus = np.arange(1, n_src + 1) / n_src
    barriers = np.where(taus <= curve.tau_min, _low_barrier(curve), _barriers(curve))
    return _count_below(curve, barriers) / n_src


def jump_points(curve: CurveSpec) -> list[tuple[float, float]]:
    """``(tau, beta(tau))`` at ``tau = m / T``, where beta may change value."""
    n_src = curve.n_sources
    values = beta_at_counts(curve)
    return [((m + 1) / n_src, float(v)) for m, v in enumerate(values)]


class OrbitEnd(str, Enum):
    BELOW_TAU_MIN = "below_tau_min"
    FIXED_POINT = "fixed_point"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class Orbit:
    taus: list[float]
    end: OrbitEnd

    @property
    def fixed_point_at_one(self) -> bool:
        return self.end is OrbitEnd.FIXED_POINT and self.taus[-1] == 1.0


def iterate(curve: CurveSpec, r: int) -> Orbit:
    """Orbit ``[1, beta(1), beta(beta(1)), ...]`` of at most ``r + 1`` values.

    Stops early once a value is at most ``tau_min`` or repeats the previous one.
    """
    if r < 0:
        raise ParamOutOfRange(f"r must be nonnegative, got {r}")
    taus = [1.0]
    for _ in range(r):
        current = taus[-1]
        if current <= curve.tau_min:
            return Orbit(taus, OrbitEnd.BELOW_TAU_MIN)
        nxt = beta(curve, current)
        taus.append(nxt)
        if nxt == current:
            return Orbit(taus, OrbitEnd.FIXED_POINT)
    end = OrbitEnd.BELOW_TAU_MIN if taus[-1] <= curve.tau_min else OrbitEnd.MAX_STEPS
    return Orbit(taus, end)


def rounds_needed(beta_bar: float, tau_min: float) -> float:
    """Rounds until ``beta_bar ** r <= tau_min`` under a linear envelope."""
    if not 0.0 < beta_bar < 1.0:
        raise ParamOutOfRange(f"beta_bar must lie in (0, 1), got {beta_bar}")
    if not 0.0 < tau_min < 1.0:
        raise ParamOutOfRange(f"tau_min must lie in (0, 1), got {tau_min}")
    return math.log(tau_min) / math.log(beta_bar)


def has_fixed_point_above(curve: CurveSpec, tau_min: float | None = None) -> float | None:
    """Largest ``tau`` in ``(tau_min, 1]`` with ``beta(tau) >= tau``, checked on the jump grid.

    beta is constant on each piece ``((m - 1) / T, m / T]`` and takes values
    in multiples of ``1 / T``, so ``beta >= tau`` holds somewhere on a piece
    exactly when it holds at the right end.  The grid check is therefore exact.
    """
    floor = curve.tau_min if tau_min is None else tau_min
    for tau, value in reversed(jump_points(curve)):
        if tau <= floor:
            break
        if value >= tau:
            return tau
    return None
