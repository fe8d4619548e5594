"""Two-model elimination: use the source unless it is provably far away."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DeltaOutOfRange, DimensionMismatch, ParamOutOfRange
from .estimators import GFunction, empirical_mean, g_of_delta
from .models import BudgetedSampler, ProblemInstance

NU = 1.0 / 27.0
ELIMINATION_FACTOR = 10.0
DELTA_CAP = 0.5


@dataclass(frozen=True, eq=False)
class SingleSourceOutcome:
    estimate: np.ndarray
    chose_source: bool
    threshold: float
    stat: float
    delta_used: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate.tolist(),
            "chose_source": self.chose_source,
            "threshold": self.threshold,
            "stat": self.stat,
            "delta_used": self.delta_used,
        }


def eliminate_predicate(theta0_hat, theta_t_hat, lambda_max2: float) -> bool:
    """True when the two estimates are at least ``sqrt(10) * lambda_max`` apart."""
    if not lambda_max2 > 0:
        raise ParamOutOfRange(f"lambda_max2 must be positive, got {lambda_max2}")
    diff = np.asarray(theta0_hat, dtype=float) - np.asarray(theta_t_hat, dtype=float)
    return bool(diff @ diff >= ELIMINATION_FACTOR * lambda_max2)


def _require_single(instance: ProblemInstance) -> None:
    if instance.n_sources != 1:
        raise DimensionMismatch(f"single-source method needs exactly one source, got {instance.n_sources}")


def run_single_source(
    instance: ProblemInstance, sampler: BudgetedSampler, delta: float, g: GFunction
) -> SingleSourceOutcome:
    """Split the budget evenly, then keep the source mean unless it is rejected.

    With odd budgets both halves use ``N // 2`` samples.
    """
    _require_single(instance)
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta}")
    half = instance.n_budget // 2
    if half < 1:
        raise ParamOutOfRange("the budget must allow at least one sample per model")
    target_mean = empirical_mean(sampler.draw(0, half))
    source_mean = empirical_mean(sampler.draw(1, half))
    diff = target_mean - source_mean
    stat = float(diff @ diff)
    threshold = ELIMINATION_FACTOR * g_of_delta(g, delta) * instance.dim * instance.target.sigma2 / half
    chose_source = stat < threshold
    return SingleSourceOutcome(
        estimate=source_mean if chose_source else target_mean,
        chose_source=chose_source,
        threshold=threshold,
        stat=stat,
        delta_used=delta,
    )


def single_source_bound(instance: ProblemInstance, delta: float, g: GFunction, nu: float = NU) -> float:
    """High-probability loss bound ``8 g(delta/2) / nu * min(Q1^2 + d s1/N, d s0/N)``."""
    _require_single(instance)
    n, d = instance.n_budget, instance.dim
    q2 = instance.distances2[1]
    benchmark = min(q2 + d * instance.sources[0].sigma2 / n, d * instance.target.sigma2 / n)
    return 8.0 * g_of_delta(g, delta / 2.0) / nu * benchmark


def single_source_expected_bound(instance: ProblemInstance, g: GFunction, nu: float = NU) -> float:
    """Expected-loss bound ``28 c / nu * ln(2 / delta*) * min(...)``; reported only."""
    _require_single(instance)
    n, d = instance.n_budget, instance.dim
    q2 = instance.distances2[1]
    benchmark = min(q2 + d * instance.sources[0].sigma2 / n, d * instance.target.sigma2 / n)
    delta, _ = clamp_delta(delta_star_single(instance))
    return 28.0 * g.c_const / nu * math.log(2.0 / delta) * benchmark


def delta_star_single(instance: ProblemInstance) -> float:
    """Unclamped ``[s1/(s0+s1) v 1/4 v d s0/(8 C^2 N)]^2``."""
    _require_single(instance)
    s0, s1 = instance.target.sigma2, instance.sources[0].sigma2
    ratio = s1 / (s0 + s1) if s0 + s1 > 0 else 0.0
    noise_term = instance.dim * s0 / (8.0 * instance.c_theta**2 * instance.n_budget)
    return max(ratio, 0.25, noise_term) ** 2


def clamp_delta(value: float, cap: float = DELTA_CAP) -> tuple[float, bool]:
    """Clip a confidence level into ``(0, cap]``; the flag reports clipping."""
    if not value > 0:
        raise DeltaOutOfRange(f"confidence level must be positive, got {value}")
    return (cap, True) if value > cap else (value, False)
