"""Problem instances and the budgeted, seeded sampler.

A problem consists of ``T + 1`` Gaussian models.  Model ``t`` emits samples
``theta_t + eps`` with ``eps ~ N(0, sigma2_t * cov_shape_t)``.  Index 0 is the
target; indices ``1..T`` are the sources.  A learner may request at most
``n_budget`` samples in total, from any models, in any order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    NormBoundViolation,
    NotPSD,
    VarianceOrderViolation,
)

_TOL = 1e-9
_SEED_LIMIT = 2**64
# Spawn key reserved for the learner's own randomness (tie-breaking).
_POLICY_STREAM = 2**32


@dataclass(frozen=True, eq=False)
class TaskParams:
    """One Gaussian model: mean, noise scale and normalized covariance shape."""

    theta: np.ndarray
    sigma2: float
    cov_shape: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return int(self.theta.shape[0])

    @property
    def is_isotropic(self) -> bool:
        return self.cov_shape is None

    @cached_property
    def noise_factor(self) -> np.ndarray | None:
        """Matrix ``L`` with ``L @ L.T == sigma2 * cov_shape``; None when isotropic."""
        if self.cov_shape is None:
            return None
        eigvals, eigvecs = np.linalg.eigh(self.sigma2 * self.cov_shape)
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))

    def covariance(self) -> np.ndarray:
        shape = np.eye(self.dim) if self.cov_shape is None else self.cov_shape
        return self.sigma2 * shape


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A target model (index 0), ``T`` source models and the global constants."""

    target: TaskParams
    sources: tuple[TaskParams, ...]
    n_budget: int
    dim: int
    c_theta: float

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def tasks(self) -> tuple[TaskParams, ...]:
        return (self.target, *self.sources)

    @cached_property
    def sigma2s(self) -> np.ndarray:
        """Noise scales indexed ``0..T``."""
        return np.array([task.sigma2 for task in self.tasks], dtype=float)

    @cached_property
    def distances(self) -> np.ndarray:
        """``Q_t = ||theta_t - theta_0||`` indexed ``0..T`` (so entry 0 is 0)."""
        thetas = np.stack([task.theta for task in self.tasks])
        return np.linalg.norm(thetas - self.target.theta, axis=1)

    @cached_property
    def distances2(self) -> np.ndarray:
        """Squared distances computed directly from coordinate differences."""
        thetas = np.stack([task.theta for task in self.tasks])
        return np.sum((thetas - self.target.theta) ** 2, axis=1)


def _as_vector(value, dim: int | None, what: str) -> np.ndarray:
    vec = np.asarray(value, dtype=float).reshape(-1)
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatch(f"{what} has length {vec.shape[0]}, expected {dim}")
    return vec


def _validate_shape(shape, dim: int, index: int) -> np.ndarray | None:
    if shape is None:
        return None
    mat = np.asarray(shape, dtype=float)
    if mat.shape != (dim, dim):
        raise DimensionMismatch(f"cov_shape of task {index} has shape {mat.shape}, expected {(dim, dim)}")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if not np.allclose(mat, mat.T, rtol=0.0, atol=_TOL * scale):
        raise NotPSD(f"cov_shape of task {index} is not symmetric")
    mat = 0.5 * (mat + mat.T)
    if np.min(np.linalg.eigvalsh(mat)) < -_TOL * scale:
        raise NotPSD(f"cov_shape of task {index} has a negative eigenvalue")
    if abs(np.trace(mat) - dim) > _TOL * dim:
        raise NotPSD(f"cov_shape of task {index} has trace {np.trace(mat)}, expected {dim}")
    return mat


def build_instance(
    thetas: Sequence,
    sigma2s: Sequence[float],
    cov_shapes: Sequence | None = None,
    n_budget: int = 1,
    c_theta: float = float("inf"),
) -> ProblemInstance:
    """Validate raw parameters and assemble a :class:`ProblemInstance`.

    Entry 0 of every list describes the target.  Missing covariance shapes
    default to the identity.
    """
    if len(thetas) == 0:
        raise DimensionMismatch("at least the target model is required")
    if len(sigma2s) != len(thetas):
        raise DimensionMismatch(f"{len(thetas)} means but {len(sigma2s)} variances")
    if cov_shapes is not None and len(cov_shapes) != len(thetas):
        raise DimensionMismatch(f"{len(thetas)} means but {len(cov_shapes)} covariance shapes")
    if int(n_budget) != n_budget or n_budget < 1:
        raise DimensionMismatch(f"n_budget must be a positive integer, got {n_budget}")
    if not c_theta > 0:
        raise NormBoundViolation(f"c_theta must be positive, got {c_theta}")

    dim = _as_vector(thetas[0], None, "theta_0").shape[0]
    if dim < 1:
        raise DimensionMismatch("dimension must be at least 1")
    tasks = []
    for index, (theta, sigma2) in enumerate(zip(thetas, sigma2s)):
        vec = _as_vector(theta, dim, f"theta_{index}")
        if not np.all(np.isfinite(vec)):
            raise DimensionMismatch(f"theta_{index} has non-finite entries")
        if np.linalg.norm(vec) > c_theta:
            raise NormBoundViolation(f"||theta_{index}|| = {np.linalg.norm(vec)} exceeds C_theta = {c_theta}")
        sigma2 = float(sigma2)
        if not (sigma2 >= 0.0 and np.isfinite(sigma2)):
            raise VarianceOrderViolation(f"sigma2_{index} must be finite and nonnegative, got {sigma2}")
        shape = _validate_shape(None if cov_shapes is None else cov_shapes[index], dim, index)
        vec.setflags(write=False)
        tasks.append(TaskParams(theta=vec, sigma2=sigma2, cov_shape=shape))

    target, sources = tasks[0], tuple(tasks[1:])
    for index, source in enumerate(sources, start=1):
        if not source.sigma2 < target.sigma2:
            raise VarianceOrderViolation(
                f"source {index} has sigma2 = {source.sigma2}, not below the target's {target.sigma2}"
            )
    for task in tasks:
        _ = task.noise_factor
    return ProblemInstance(target=target, sources=sources, n_budget=int(n_budget), dim=dim, c_theta=float(c_theta))


def distances(instance: ProblemInstance) -> list[float]:
    """Distances ``Q_t`` for the sources ``t = 1..T`` in index order."""
    return [float(q) for q in instance.distances[1:]]


def instance_to_dict(instance: ProblemInstance) -> dict:
    tasks = []
    for task in instance.tasks:
        entry = {"theta": task.theta.tolist(), "sigma2": task.sigma2}
        if task.cov_shape is not None:
            entry["cov_shape"] = task.cov_shape.reshape(-1).tolist()
        tasks.append(entry)
    return {"dim": instance.dim, "n_budget": instance.n_budget, "c_theta": instance.c_theta, "tasks": tasks}


def instance_from_dict(data: dict) -> ProblemInstance:
    """Inverse of :func:`instance_to_dict`; ``cov_shape`` is row-major."""
    dim = int(data["dim"])
    tasks = data["tasks"]
    shapes = None
    if any("cov_shape" in task for task in tasks):
        shapes = [
            None if "cov_shape" not in task else np.asarray(task["cov_shape"], dtype=float).reshape(dim, dim)
            for task in tasks
        ]
    thetas = [task["theta"] for task in tasks]
    for index, theta in enumerate(thetas):
        if len(theta) != dim:
            raise DimensionMismatch(f"task {index} theta has length {len(theta)}, expected {dim}")
    return build_instance(
        thetas,
        [task["sigma2"] for task in tasks],
        shapes,
        n_budget=data["n_budget"],
        c_theta=data.get("c_theta", float("inf")),
    )


def load_instance(path: str | Path) -> ProblemInstance:
    with open(path, encoding="utf-8") as handle:
        return instance_from_dict(json.load(handle))


def save_instance(instance: ProblemInstance, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(instance_to_dict(instance), handle, indent=2)


def task_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for ``stream`` derived from ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass
class BudgetedSampler:
    """Seeded sample source that enforces the total budget.

    Each task has its own random stream derived from ``(seed, task)``, so the
    samples a task produces depend only on how many were drawn from it before.
    History is kept as one block per request.
    """

    instance: ProblemInstance
    seed: int
    drawn_total: int = 0
    drawn_per_task: np.ndarray = field(init=False)
    _blocks: list[tuple[int, np.ndarray]] = field(init=False, default_factory=list, repr=False)
    _rngs: dict[int, np.random.Generator] = field(init=False, default_factory=dict, repr=False)
    _policy_rng: np.random.Generator | None = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        seed = int(self.seed)
        if not 0 <= seed < _SEED_LIMIT:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.seed = seed
        self.drawn_per_task = np.zeros(self.instance.n_sources + 1, dtype=np.int64)

    @property
    def remaining(self) -> int:
        return self.instance.n_budget - self.drawn_total

    @property
    def policy_rng(self) -> np.random.Generator:
        """Generator reserved for the learner's internal randomization."""
        if self._policy_rng is None:
            self._policy_rng = task_rng(self.seed, _POLICY_STREAM)
        return self._policy_rng

    def _rng(self, task: int) -> np.random.Generator:
        rng = self._rngs.get(task)
        if rng is None:
            rng = self._rngs[task] = task_rng(self.seed, task)
        return rng

    def draw(self, task: int, count: int) -> np.ndarray:
        """Return ``count`` fresh samples from model ``task`` as a ``(count, d)`` array."""
        if not 0 <= task <= self.instance.n_sources:
            raise IndexError(f"task index {task} outside 0..{self.instance.n_sources}")
        count = int(count)
        if count < 0:
            raise ValueError("count must be nonnegative")
        if self.drawn_total + count > self.instance.n_budget:
            raise BudgetExceeded(
                f"requesting {count} samples with {self.drawn_total} of {self.instance.n_budget} already used"
            )
        params = self.instance.tasks[task]
        noise = self._rng(task).standard_normal((count, self.instance.dim))
        if params.noise_factor is None:
            samples = params.theta + np.sqrt(params.sigma2) * noise
        else:
            samples = params.theta + noise @ params.noise_factor.T
        samples.setflags(write=False)
        self.drawn_total += count
        self.drawn_per_task[task] += count
        self._blocks.append((task, samples))
        return samples

    @property
    def blocks(self) -> list[tuple[int, np.ndarray]]:
        """History grouped by request: ``(task, samples)`` pairs in order."""
        return list(self._blocks)

    def history(self) -> Iterator[tuple[int, np.ndarray]]:
        """Per-sample history ``(A_i, S_i)`` in draw order."""
        for task, samples in self._blocks:
            for row in samples:
                yield task, row

    def history_tasks(self) -> np.ndarray:
        """The sequence ``A_1, ..., A_n`` of requested task indices."""
        if not self._blocks:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.full(len(s), t, dtype=np.int64) for t, s in self._blocks])
