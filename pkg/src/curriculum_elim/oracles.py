"""Benchmark learners that know (all or part of) the source distances."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .errors import KappaBelowOne
from .estimators import empirical_mean
from .models import BudgetedSampler, ProblemInstance


@dataclass(frozen=True)
class OracleReport:
    t_star: int
    strong_set: tuple[int, ...]
    weak_set: tuple[int, ...]
    strong_bound: float
    weak_choice: int
    kappa: float
    weak_bound: float

    def to_dict(self) -> dict:
        data = asdict(self)
        data["strong_set"] = list(self.strong_set)
        data["weak_set"] = list(self.weak_set)
        return data


def oracle_losses(instance: ProblemInstance) -> np.ndarray:
    """``d sigma2_t / N + Q_t^2`` for every ``t`` in ``0..T``."""
    return instance.dim * instance.sigma2s / instance.n_budget + instance.distances2


def strong_oracle_index(instance: ProblemInstance) -> int:
    return int(np.argmin(oracle_losses(instance)))


def strong_bound(instance: ProblemInstance) -> float:
    return float(np.min(oracle_losses(instance)))


def strong_oracle_set(instance: ProblemInstance, kappa: float) -> tuple[int, ...]:
    if kappa < 1.0:
        raise KappaBelowOne(f"kappa must be at least 1, got {kappa}")
    losses = oracle_losses(instance)
    return tuple(int(t) for t in np.flatnonzero(losses <= kappa * losses.min()))


def weak_oracle_set(instance: ProblemInstance, kappa: float) -> tuple[int, ...]:
    """Sources whose squared distance is below ``kappa * d sigma2_0 / N``."""
    barrier = kappa * instance.dim * instance.target.sigma2 / instance.n_budget
    return tuple(int(t) for t in np.flatnonzero(instance.distances2[1:] <= barrier) + 1)


def select_t_bar(instance: ProblemInstance, tau_set: Iterable[int]) -> int:
    """Pessimistic pick: least noisy member, then the farthest among those.

    Returns 0 for an empty set.  Remaining ties go to the lowest index.
    """
    members = sorted(set(tau_set))
    if not members:
        return 0
    sigma2s = instance.sigma2s[members]
    quietest = [t for t, s in zip(members, sigma2s) if s == sigma2s.min()]
    dists = instance.distances2[quietest]
    return int(quietest[int(np.argmax(dists))])


def oracle_report(instance: ProblemInstance, kappa: float) -> OracleReport:
    """Summarize both oracles; the strong set uses ``max(kappa, 1)``."""
    weak = weak_oracle_set(instance, kappa)
    choice = select_t_bar(instance, weak)
    return OracleReport(
        t_star=strong_oracle_index(instance),
        strong_set=strong_oracle_set(instance, max(kappa, 1.0)),
        weak_set=weak,
        strong_bound=strong_bound(instance),
        weak_choice=choice,
        kappa=float(kappa),
        weak_bound=float(oracle_losses(instance)[choice]),
    )


def run_weak_oracle(
    instance: ProblemInstance, sampler: BudgetedSampler, kappa: float
) -> tuple[np.ndarray, OracleReport]:
    """Spend the whole budget on ``t_bar`` of the weak-oracle set and average."""
    if sampler.drawn_total != 0:
        raise ValueError("run_weak_oracle expects a fresh sampler")
    report = oracle_report(instance, kappa)
    samples = sampler.draw(report.weak_choice, instance.n_budget)
    return empirical_mean(samples), report
