"""Multi-round source elimination with known or estimated noise levels.

The budget is cut into ``r_bar + 2`` equal slices of ``n_bar`` samples.  One
slice estimates the target mean, each of up to ``r_bar`` rounds spends one
slice re-estimating every retained source (proportionally to its noise
level), and the last slice is spent on the chosen model.  A source is dropped
once its estimate is far from the target estimate relative to the current
statistical resolution.

The estimated-variance variants reserve one more slice to estimate the noise
levels and plug those estimates in wherever the known values were used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DeltaOutOfRange, InsufficientBudget, ParamOutOfRange, PreconditionViolated
from .estimators import GFunction, empirical_mean, g_of_delta, trace_hat, variance_hat
from .models import BudgetedSampler, ProblemInstance
from .oracles import select_t_bar
from .single_source import ELIMINATION_FACTOR, NU, clamp_delta

MAX_DEFAULT_ROUNDS = 10


class VarianceMode(str, Enum):
    KNOWN = "known"
    ESTIMATED_VARIANCE = "estimated"
    ESTIMATED_TRACE = "trace"


class StopReason(str, Enum):
    SMALL_RETAINED = "SmallRetained"
    ALL_ELIMINATED = "AllEliminated"
    NO_PROGRESS = "NoProgress"
    MAX_ROUNDS = "MaxRounds"


@dataclass(frozen=True)
class EliminationConfig:
    """Algorithm settings.  ``r_bar=None`` selects :func:`default_rounds`."""

    r_bar: int | None = None
    delta: float = 0.05
    nu: float = NU
    g: GFunction = field(default_factory=GFunction)
    variance_mode: VarianceMode = VarianceMode.KNOWN

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise DeltaOutOfRange(f"delta must lie in (0, 1), got {self.delta}")
        if self.r_bar is not None and (int(self.r_bar) != self.r_bar or self.r_bar < 1):
            raise ParamOutOfRange(f"r_bar must be a positive integer, got {self.r_bar}")
        if not 0.0 < self.nu <= 1.0:
            raise ParamOutOfRange(f"nu must lie in (0, 1], got {self.nu}")
        object.__setattr__(self, "variance_mode", VarianceMode(self.variance_mode))

    def rounds_for(self, instance: ProblemInstance) -> int:
        return int(self.r_bar) if self.r_bar is not None else default_rounds(instance)

    def delta_bar(self, instance: ProblemInstance) -> float:
        """Per-estimate confidence level after the union bound."""
        rounds, n_src = self.rounds_for(instance), instance.n_sources
        if self.variance_mode is VarianceMode.KNOWN:
            return self.delta / (n_src * rounds + 2)
        return self.delta / (n_src * (rounds + 1) + 3)

    def slice_size(self, instance: ProblemInstance) -> int:
        extra = 2 if self.variance_mode is VarianceMode.KNOWN else 3
        return instance.n_budget // (self.rounds_for(instance) + extra)

    def weak_kappa(self, instance: ProblemInstance) -> float:
        """``g(delta_bar) / nu``: the weak-oracle multiplier the algorithm identifies."""
        return g_of_delta(self.g, self.delta_bar(instance)) / self.nu


@dataclass(frozen=True)
class RoundRecord:
    retained_before: tuple[int, ...]
    allocations: dict[int, int]
    stats: dict[int, float]
    threshold: float
    eliminated: tuple[int, ...]
    stop_reason: StopReason | None

    @property
    def retained_after(self) -> tuple[int, ...]:
        gone = set(self.eliminated)
        return tuple(t for t in self.retained_before if t not in gone)

    def to_dict(self) -> dict:
        return {
            "retained_before": list(self.retained_before),
            "allocations": {str(t): n for t, n in self.allocations.items()},
            "stats": {str(t): s for t, s in self.stats.items()},
            "threshold": self.threshold,
            "eliminated": list(self.eliminated),
            "stop_reason": None if self.stop_reason is None else self.stop_reason.value,
        }


@dataclass(frozen=True, eq=False)
class EliminationTrace:
    rounds: list[RoundRecord]
    t_alg: tuple[int, ...]
    t_star: int
    final_estimate: np.ndarray
    samples_used: int
    n_bar: int
    delta_bar: float
    r_bar: int
    variance_estimates: tuple[float, ...] | None = None

    @property
    def retained_counts(self) -> list[int]:
        """``|T_0|, |T_1|, ...`` over the executed rounds."""
        if not self.rounds:
            return [len(self.t_alg)]
        return [len(self.rounds[0].retained_before)] + [len(r.retained_after) for r in self.rounds]

    def to_dict(self) -> dict:
        return {
            "rounds": [r.to_dict() for r in self.rounds],
            "t_alg": list(self.t_alg),
            "t_star": self.t_star,
            "final_estimate": self.final_estimate.tolist(),
            "samples_used": self.samples_used,
            "n_bar": self.n_bar,
            "delta_bar": self.delta_bar,
            "r_bar": self.r_bar,
            "variance_estimates": None if self.variance_estimates is None else list(self.variance_estimates),
        }


def mean_variance(members: Iterable[int], sigma2s) -> float:
    values = [float(sigma2s[t]) for t in members]
    return sum(values) / len(values)


def default_rounds(instance: ProblemInstance) -> int:
    """``ceil(log2(T * mean source variance / target variance))`` clipped to ``[1, 10]``."""
    n_src = instance.n_sources
    if n_src == 0:
        return 1
    ratio = n_src * float(np.mean(instance.sigma2s[1:])) / instance.target.sigma2
    if ratio <= 2.0:
        return 1
    return min(MAX_DEFAULT_ROUNDS, math.ceil(math.log2(ratio)))


def allocate_round(retained: Iterable[int], sigma2s: Mapping[int, float] | Sequence[float], n_bar: int) -> dict[int, int]:
    """Split ``n_bar`` samples over ``retained`` proportionally to the variances.

    Largest-remainder rounding keeps the total exact.  Tasks whose share
    rounds to zero still get one sample, taken from the largest allocation.
    """
    members = sorted(set(retained))
    if not members:
        raise InsufficientBudget("no retained task to allocate to")
    if n_bar < len(members):
        raise InsufficientBudget(f"{n_bar} samples cannot cover {len(members)} retained tasks")
    weights = np.array([float(sigma2s[t]) for t in members])
    total = weights.sum()
    raw = n_bar * weights / total if total > 0 else np.full(len(members), n_bar / len(members))
    counts = np.floor(raw).astype(np.int64)
    shortfall = n_bar - int(counts.sum())
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:shortfall]] += 1
    for slot in np.flatnonzero(counts == 0):
        donor = int(np.argmax(counts))
        counts[donor] -= 1
        counts[slot] = 1
    return {t: int(n) for t, n in zip(members, counts)}


def elimination_threshold(
    retained: Iterable[int],
    sigma2s,
    sigma0_2: float,
    n_bar: int,
    delta_bar: float,
    g: GFunction,
    dim: int,
) -> float:
    """``10 g(delta_bar) * max(d mean_var |T| / n_bar, d sigma0_2 / n_bar)``."""
    members = list(retained)
    if not members:
        raise ParamOutOfRange("threshold needs a nonempty retained set")
    pooled = dim * mean_variance(members, sigma2s) * len(members) / n_bar
    target = dim * sigma0_2 / n_bar
    return ELIMINATION_FACTOR * g_of_delta(g, delta_bar) * max(pooled, target)


def stop_check(
    retained_before: Iterable[int], retained_after: Iterable[int], sigma2s, sigma0_2: float
) -> StopReason | None:
    before, after = set(retained_before), set(retained_after)
    if not after <= before:
        raise ValueError("retained_after must be a subset of retained_before")
    if before and len(before) * mean_variance(before, sigma2s) <= sigma0_2:
        return StopReason.SMALL_RETAINED
    if not after:
        return StopReason.ALL_ELIMINATED
    if after == before:
        return StopReason.NO_PROGRESS
    return None


def _learner_choice(t_alg: Sequence[int], sigma2s, rng: np.random.Generator) -> int:
    """Least noisy retained model; equally noisy candidates are drawn uniformly.

    The learner does not know the distances, so it cannot reproduce the
    pessimistic tie-break of :func:`select_t_bar`; any pick among equally
    noisy candidates obeys the same bound.
    """
    if not t_alg:
        return 0
    values = np.array([float(sigma2s[t]) for t in t_alg])
    ties = [t for t, v in zip(t_alg, values) if v == values.min()]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def _eliminate(
    instance: ProblemInstance,
    sampler: BudgetedSampler,
    config: EliminationConfig,
    sigma2s: np.ndarray,
    n_bar: int,
    delta_bar: float,
    r_bar: int,
    variance_estimates: tuple[float, ...] | None,
) -> EliminationTrace:
    dim = instance.dim
    target_mean = empirical_mean(sampler.draw(0, n_bar))
    retained = tuple(range(1, instance.n_sources + 1))
    rounds: list[RoundRecord] = []
    for _ in range(r_bar):
        if not retained:
            break
        allocations = allocate_round(retained, sigma2s, n_bar)
        threshold = elimination_threshold(retained, sigma2s, sigma2s[0], n_bar, delta_bar, config.g, dim)
        stats = {}
        for t in retained:
            diff = target_mean - empirical_mean(sampler.draw(t, allocations[t]))
            stats[t] = float(diff @ diff)
        eliminated = tuple(t for t in retained if stats[t] >= threshold)
        after = tuple(t for t in retained if stats[t] < threshold)
        assert set(after) <= set(retained)
        reason = stop_check(retained, after, sigma2s, sigma2s[0])
        rounds.append(RoundRecord(retained, allocations, stats, threshold, eliminated, reason))
        retained = after
        if reason is not None:
            break
    else:
        if rounds:
            last = rounds[-1]
            rounds[-1] = RoundRecord(
                last.retained_before, last.allocations, last.stats, last.threshold, last.eliminated,
                StopReason.MAX_ROUNDS,
            )

    t_star = _learner_choice(retained, sigma2s, sampler.policy_rng)
    final_estimate = empirical_mean(sampler.draw(t_star, n_bar))
    return EliminationTrace(
        rounds=rounds,
        t_alg=retained,
        t_star=t_star,
        final_estimate=final_estimate,
        samples_used=sampler.drawn_total,
        n_bar=n_bar,
        delta_bar=delta_bar,
        r_bar=r_bar,
        variance_estimates=variance_estimates,
    )


def run_algorithm1(instance: ProblemInstance, sampler: BudgetedSampler, config: EliminationConfig) -> EliminationTrace:
    """Known-variance elimination; ``config.variance_mode`` is ignored."""
    if sampler.drawn_total != 0:
        raise ValueError("the elimination algorithm expects a fresh sampler")
    known = EliminationConfig(config.r_bar, config.delta, config.nu, config.g, VarianceMode.KNOWN)
    r_bar = known.rounds_for(instance)
    if instance.n_budget < (r_bar + 2) * instance.n_sources:
        raise InsufficientBudget(
            f"N = {instance.n_budget} is below (r_bar + 2) * T = {(r_bar + 2) * instance.n_sources}"
        )
    n_bar = known.slice_size(instance)
    if n_bar < 1:
        raise InsufficientBudget(f"N = {instance.n_budget} leaves no samples per slice")
    return _eliminate(instance, sampler, known, instance.sigma2s, n_bar, known.delta_bar(instance), r_bar, None)


def _check_estimation_budget(instance: ProblemInstance, config: EliminationConfig) -> None:
    r_bar = config.rounds_for(instance)
    n, d, slots = instance.n_budget, instance.dim, instance.n_sources + 1
    delta_bar = config.delta_bar(instance)
    if n < 2 * (r_bar + 3) * slots:
        raise PreconditionViolated(f"N >= 2 (r_bar + 3)(T + 1) fails: {n} < {2 * (r_bar + 3) * slots}")
    needed = 48 * (r_bar + 3) * slots * math.log(2.0 / delta_bar)
    if d * n < needed:
        raise PreconditionViolated(f"d N >= 48 (r_bar + 3)(T + 1) ln(2 / delta_bar) fails: {d * n} < {needed:.6g}")
    if config.variance_mode is VarianceMode.ESTIMATED_TRACE:
        per_task = n // (r_bar + 3) // slots
        needed = 24.0 * math.log(2.0 * d / delta_bar)
        if per_task - 1 < needed:
            raise PreconditionViolated(
                f"K - 1 >= 24 ln(2 d / delta_bar) fails for K = {per_task}: {per_task - 1} < {needed:.6g}"
            )


def _run_estimated(
    instance: ProblemInstance, sampler: BudgetedSampler, config: EliminationConfig, mode: VarianceMode
) -> EliminationTrace:
    if sampler.drawn_total != 0:
        raise ValueError("the elimination algorithm expects a fresh sampler")
    config = EliminationConfig(config.r_bar, config.delta, config.nu, config.g, mode)
    _check_estimation_budget(instance, config)
    r_bar = config.rounds_for(instance)
    n_bar = config.slice_size(instance)
    per_task = n_bar // (instance.n_sources + 1)
    estimator = variance_hat if mode is VarianceMode.ESTIMATED_VARIANCE else trace_hat
    estimates = np.array([estimator(sampler.draw(t, per_task)) for t in range(instance.n_sources + 1)])
    return _eliminate(
        instance, sampler, config, estimates, n_bar, config.delta_bar(instance), r_bar,
        tuple(float(v) for v in estimates),
    )


def run_algorithm1_unknown_variance(
    instance: ProblemInstance, sampler: BudgetedSampler, config: EliminationConfig
) -> EliminationTrace:
    """Variant that first estimates each noise level from a dedicated slice."""
    return _run_estimated(instance, sampler, config, VarianceMode.ESTIMATED_VARIANCE)


def run_algorithm1_unknown_covariance(
    instance: ProblemInstance, sampler: BudgetedSampler, config: EliminationConfig
) -> EliminationTrace:
    """Variant for unknown covariances; estimates ``trace(cov) / d`` per model."""
    return _run_estimated(instance, sampler, config, VarianceMode.ESTIMATED_TRACE)


def run_elimination(instance: ProblemInstance, sampler: BudgetedSampler, config: EliminationConfig) -> EliminationTrace:
    """Dispatch on ``config.variance_mode``."""
    if config.variance_mode is VarianceMode.KNOWN:
        return run_algorithm1(instance, sampler, config)
    return _run_estimated(instance, sampler, config, config.variance_mode)


def theorem2_bound(instance: ProblemInstance, t_alg: Iterable[int], config: EliminationConfig) -> float:
    """High-probability loss bound ``2 (r_bar + 2)(g v 1) [d s_tbar / N + Q_tbar^2]``.

    ``t_bar`` is the pessimistic pick from ``t_alg``, so the bound also covers
    any other choice among equally noisy retained models.
    """
    r_bar = config.rounds_for(instance)
    known = EliminationConfig(config.r_bar, config.delta, config.nu, config.g, VarianceMode.KNOWN)
    g_value = max(g_of_delta(config.g, known.delta_bar(instance)), 1.0)
    t_bar = select_t_bar(instance, t_alg)
    benchmark = instance.dim * instance.sigma2s[t_bar] / instance.n_budget + instance.distances2[t_bar]
    return 2.0 * (r_bar + 2) * g_value * float(benchmark)


def delta_star_multi(instance: ProblemInstance) -> float:
    """``[1/(2(T+1)) * (min variance ratio v min d s_t / (8 N C^2))]^2`` clipped to ``(0, 0.5]``."""
    sigma2s = instance.sigma2s
    ratio = float(sigma2s.min() / sigma2s.max())
    noise = float(instance.dim * sigma2s.min() / (8.0 * instance.n_budget * instance.c_theta**2))
    value = (max(ratio, noise) / (2.0 * (instance.n_sources + 1))) ** 2
    delta, _ = clamp_delta(value)
    return delta


def theorem2_expected_bound(instance: ProblemInstance, t_alg: Iterable[int], config: EliminationConfig) -> float:
    """Expected-loss bound at ``delta*``; an analysis constant, reported only."""
    r_bar = config.rounds_for(instance)
    delta = delta_star_multi(instance)
    t_bar = select_t_bar(instance, t_alg)
    benchmark = instance.dim * instance.sigma2s[t_bar] / instance.n_budget + instance.distances2[t_bar]
    log_term = math.log((instance.n_sources * r_bar + 2) / delta)
    return 8.0 * config.g.c_const * (r_bar + 2) * log_term * float(benchmark)
