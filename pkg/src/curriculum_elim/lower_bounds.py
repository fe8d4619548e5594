"""Minimax lower-bound calculators and the hypothesis constructions behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionTooSmall, OrderingViolation, RegimeViolation, SingularCovariance

STALL_BUDGET = 100_000


def kl_gaussian(mu1, cov1, mu2, cov2) -> float:
    """KL divergence ``KL(N(mu1, cov1) || N(mu2, cov2))``."""
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=float))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=float))
    dim = mu1.shape[0]
    try:
        chol1 = np.linalg.cholesky(cov1)
        chol2 = np.linalg.cholesky(cov2)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("covariances must be positive definite") from exc
    logdet1 = 2.0 * np.sum(np.log(np.diag(chol1)))
    logdet2 = 2.0 * np.sum(np.log(np.diag(chol2)))
    # trace(cov2^{-1} cov1) = ||chol2^{-1} chol1||_F^2
    whitened = np.linalg.solve(chol2, chol1)
    shift = np.linalg.solve(chol2, mu2 - mu1)
    return float(0.5 * (logdet2 - logdet1 - dim + np.sum(whitened**2) + shift @ shift))


def _gaussian_kl_1d(a: float, b: float, var: float) -> float:
    """Per-sample KL between equal-variance scalar Gaussians; 0 when the means agree."""
    gap = a - b
    if gap == 0.0:
        return 0.0
    if var <= 0.0:
        return math.inf
    return gap * gap / (2.0 * var)


@dataclass(frozen=True)
class TwoPointInstance:
    hypothesis0: tuple[float, ...]
    hypothesis1: tuple[float, ...]
    kl_total: float
    tv_bound: float
    lecam_value: float
    in_regime: bool

    @property
    def target_gap(self) -> float:
        return abs(self.hypothesis0[0] - self.hypothesis1[0])


def _two_point(hyp0: Sequence[float], hyp1: Sequence[float], sigma2s: Sequence[float], n: int, in_regime: bool):
    kl_total = float(n * sum(_gaussian_kl_1d(a, b, v) for a, b, v in zip(hyp0, hyp1, sigma2s)))
    tv = min(1.0, max(0.0, math.sqrt(kl_total / 2.0)))
    gap = abs(hyp0[0] - hyp1[0])
    value = gap * gap / 2.0 * (1.0 - tv)
    return TwoPointInstance(tuple(map(float, hyp0)), tuple(map(float, hyp1)), kl_total, tv, value, in_regime)


def two_point_T1(q1: float, sigma0_2: float, sigma1_2: float, n: int) -> TwoPointInstance:
    """Two hypotheses for one source at distance ``q1``; out-of-regime inputs are flagged."""
    half_gap = q1 + math.sqrt(sigma1_2) / (4.0 * math.sqrt(n))
    hyp0 = (-half_gap, -half_gap + q1)
    hyp1 = (half_gap, half_gap - q1)
    in_regime = half_gap**2 <= sigma0_2 / (4.0 * n)
    result = _two_point(hyp0, hyp1, (sigma0_2, sigma1_2), n, in_regime)
    if in_regime:
        assert result.kl_total <= 5.0 / 8.0 + 1e-12
    return result


def two_point_T2(q1: float, q2: float, sigma0_2: float, sigma1_2: float, sigma2_2: float, n: int) -> TwoPointInstance:
    """Two hypotheses for two sources; the second hypothesis swaps the source distances."""
    if not (sigma0_2 >= sigma1_2 >= sigma2_2 and q1 <= q2):
        raise OrderingViolation("need sigma0_2 >= sigma1_2 >= sigma2_2 and q1 <= q2")
    half_gap = q1 / 2.0 + q2 / 2.0 + math.sqrt(sigma2_2) / (4.0 * math.sqrt(n))
    hyp0 = (-half_gap, -half_gap + q1, -half_gap + q2)
    hyp1 = (half_gap, half_gap - q2, half_gap - q1)
    in_regime = half_gap**2 <= sigma0_2 / (4.0 * n)
    result = _two_point(hyp0, hyp1, (sigma0_2, sigma1_2, sigma2_2), n, in_regime)
    if in_regime:
        assert result.kl_total <= 0.75 + 1e-12
    return result


def in_semilocal_set(hypothesis: Sequence[float], qs: Sequence[float], rtol: float = 1e-12) -> bool:
    """Whether source distances fit under ``qs`` after some permutation."""
    dists = sorted(abs(v - hypothesis[0]) for v in hypothesis[1:])
    limits = sorted(qs)
    return all(d <= q * (1 + rtol) + rtol for d, q in zip(dists, limits))


def _check_sorted(q2s: np.ndarray, sigma2s: np.ndarray) -> None:
    if len(sigma2s) != len(q2s) + 1:
        raise OrderingViolation("sigma2s must list the target first, then one entry per source")
    if np.any(np.diff(q2s) < 0):
        raise OrderingViolation("q2s must be ascending")
    if np.any(np.diff(sigma2s) > 0):
        raise OrderingViolation("sigma2s must be descending")


def weak_oracle_model(q2s, sigma2s, n: int, d: int, kappa: float) -> tuple[int, bool]:
    """Index of the weak-oracle model for sorted inputs, plus an ambiguity flag.

    ``sigma2s`` holds the target first.  Among the least noisy members of the
    weak-oracle set, the farthest is taken; remaining ties go to the largest
    index and raise the flag.
    """
    q2 = np.asarray(q2s, dtype=float)
    s2 = np.asarray(sigma2s, dtype=float)
    _check_sorted(q2, s2)
    members = np.flatnonzero(q2 <= kappa * d * s2[0] / n) + 1
    if members.size == 0:
        return 0, False
    quietest = members[s2[members] == s2[members].min()]
    farthest = quietest[q2[quietest - 1] == q2[quietest - 1].max()]
    return int(farthest.max()), bool(farthest.size > 1)


def weak_benchmark(q2s, sigma2s, n: int, d: int, kappa: float) -> float:
    """``d sigma_wo^2 / N + q_wo^2`` for the weak-oracle model at ``kappa``."""
    index, _ = weak_oracle_model(q2s, sigma2s, n, d, kappa)
    q2 = 0.0 if index == 0 else float(q2s[index - 1])
    return d * float(sigma2s[index]) / n + q2


def theorem3_value(q2s, sigma2s, n: int, d: int) -> float:
    """``(sigma_T^2 / N + q_med^2) / 720`` with the median index of the close models.

    With no close model the median distance is taken as 0.
    """
    q2 = np.asarray(q2s, dtype=float)
    s2 = np.asarray(sigma2s, dtype=float)
    t_wo, _ = weak_oracle_model(q2, s2, n, d, 1.0 / (4.0 * d))
    t_med = math.ceil((t_wo + 1) / 2) if t_wo > 0 else 0
    q_med2 = 0.0 if t_med == 0 else float(q2[t_med - 1])
    return (float(s2[-1]) / n + q_med2) / 720.0


def separation_constant(d: int) -> float:
    if d < 3:
        raise DimensionTooSmall(f"the packing needs d >= 3, got {d}")
    return math.exp(-(d + 2) / (d - 2))


@dataclass(frozen=True, eq=False)
class PackingSet:
    points: np.ndarray
    separation: float
    dim: int

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def min_pairwise_distance(self) -> float:
        if self.size < 2:
            return math.inf
        gram = self.points @ self.points.T
        sq = np.diag(gram)[:, None] + np.diag(gram)[None, :] - 2 * gram
        np.fill_diagonal(sq, np.inf)
        return float(np.sqrt(max(sq.min(), 0.0)))


def _uniform_ball(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    direction = rng.standard_normal((count, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(count) ** (1.0 / dim)
    return direction * radius[:, None]


def build_packing(dim: int, target_k: int, seed: int, stall_budget: int = STALL_BUDGET) -> PackingSet:
    """Greedy random packing of unit vectors with zero first coordinate.

    Candidates come from the uniform ``(d - 2)``-ball lifted to the sphere by
    ``(0, v, sqrt(1 - ||v||^2))``.  A candidate is kept when it is at least
    ``c(d)`` away from every kept point.  The search stops at ``target_k``
    points or after ``stall_budget`` consecutive rejections.
    """
    separation = separation_constant(dim)
    rng = np.random.default_rng(seed)
    accepted = np.empty((max(target_k, 1), dim))
    count = 0
    rejections = 0
    batch = 256
    while count < target_k and rejections < stall_budget:
        inner = _uniform_ball(rng, batch, dim - 2)
        lift = np.sqrt(np.clip(1.0 - np.sum(inner**2, axis=1), 0.0, None))
        candidates = np.hstack([np.zeros((batch, 1)), inner, lift[:, None]])
        for cand in candidates:
            if count and np.min(np.linalg.norm(accepted[:count] - cand, axis=1)) < separation:
                rejections += 1
                if rejections >= stall_budget:
                    break
                continue
            accepted[count] = cand
            count += 1
            rejections = 0
            if count >= target_k:
                break
    points = accepted[:count].copy()
    return PackingSet(points, separation, dim)


def build_testing_set(packing: PackingSet, q2s, sigma2s, n: int, d: int) -> np.ndarray:
    """Hypotheses ``theta[j, t]`` for ``j`` over the packing and ``t = 0..T``.

    Models up to the weak-oracle index (``kappa = 1``) sit on the ray of each
    packing vector, the rest on the first axis, so every source keeps its
    prescribed distance to the target.
    """
    q2 = np.asarray(q2s, dtype=float)
    s2 = np.asarray(sigma2s, dtype=float)
    if packing.dim != d:
        raise RegimeViolation(f"packing dimension {packing.dim} differs from d = {d}")
    t_wo, _ = weak_oracle_model(q2, s2, n, d, 1.0)
    noise2 = d * float(s2[t_wo]) / n
    q_wo2 = 0.0 if t_wo == 0 else float(q2[t_wo - 1])
    if noise2 < q_wo2:
        raise RegimeViolation(f"noise level {noise2} is below q_wo^2 = {q_wo2}")
    radius = math.sqrt(noise2)
    dists = np.sqrt(q2)
    far_sq = q2[t_wo:] - noise2
    if np.any(far_sq < 0):
        raise RegimeViolation("a far model is closer than the noise radius")
    hyps = np.zeros((packing.size, len(q2) + 1, d))
    hyps[:, 0, :] = radius * packing.points
    for t in range(1, t_wo + 1):
        hyps[:, t, :] = (radius - dists[t - 1]) * packing.points
    hyps[:, t_wo + 1 :, 0] = np.sqrt(far_sq)[None, :]
    return hyps


def theorem4_value(q_wo: float, sigma_wo_2: float, n: int, d: int) -> tuple[float, str]:
    """Two-regime lower bound; the flag is ``"noise"`` or ``"distance"``."""
    c = separation_constant(d)
    noise = d * sigma_wo_2 / n
    if noise >= q_wo**2:
        return c * c / 2.0 * noise, "noise"
    return c * c / 8.0 * q_wo**2, "distance"
