"""Seeded Monte-Carlo experiments over the elimination algorithms.

Each experiment expands its parameters into a list of cells (problem
instances), runs ``reps`` seeded repetitions per cell and reduces them to one
summary row per cell.  Repetition ``i`` always uses seed ``master_seed + i``,
so results do not depend on execution order or on the number of workers.

Distances are given in normalized form ``Q^2 / (d sigma0_2 / N)``.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import elimination_curve as curves
from .errors import ConfigError, InfeasibleMixture
from .estimators import GFunction, calibrate_g, squared_error
from .lower_bounds import theorem3_value, theorem4_value, weak_benchmark, weak_oracle_model
from .models import BudgetedSampler, ProblemInstance, build_instance, instance_from_dict
from .multi_source import EliminationConfig, VarianceMode, run_elimination, theorem2_bound
from .oracles import oracle_report, strong_bound, weak_oracle_set
from .single_source import NU, run_single_source, single_source_bound

SEED_MODULUS = 2**64
CALIBRATION_REPS = 4000
CALIBRATION_K = 100


class ExperimentName(str, Enum):
    TWO_SOURCE_SWEEP = "two-source-sweep"
    TYPE_MIXTURE = "type-mixture"
    GAMMA_PRECISION_RECALL = "gamma-pr"
    CURVE_EXPORT = "curve-export"
    BOUND_REPORT = "bound-report"
    SINGLE_SOURCE = "single-source"
    ALGORITHM1 = "algorithm1"


DEFAULT_PARAMS: dict[ExperimentName, dict[str, Any]] = {
    ExperimentName.TWO_SOURCE_SWEEP: {
        "n_budget": 1000, "dim": 2, "sigma2": 1.0, "sigma0_2": 10.0,
        "q2_norm_grid": [0, 10, 20, 30, 40, 50, 75, 100, 150, 200, 250, 300],
    },
    ExperimentName.TYPE_MIXTURE: {
        "n_sources": 100, "n_budget": 100_000, "dim": 2, "sigma2": 0.1, "sigma0_2": 1.0,
        "q2_norm_close": 0.0, "q2_norm_medium": 10.0, "q2_norm_far": 20_000.0,
        "grid_values": [0, 20, 40, 50, 80, 100], "cells": None,
    },
    ExperimentName.GAMMA_PRECISION_RECALL: {
        "n_sources": 100, "n_zero": 10, "n_budget": 100_000, "dim": 2, "sigma2": 0.1, "sigma0_2": 1.0,
        "gammas": [0.5, 1.0, 1.5, 2.0],
    },
    ExperimentName.CURVE_EXPORT: {"preset": "example1"},
    ExperimentName.BOUND_REPORT: {"instance": None},
    ExperimentName.SINGLE_SOURCE: {"instance": None, "q2_norm": 0.0},
    ExperimentName.ALGORITHM1: {"instance": None},
}

# The reference-set multiplier of the gamma experiment: 1 keeps the weak-oracle
# set equal to the zero-distance block for every gamma.
GAMMA_DEFAULT_KAPPA = 1.0


@dataclass
class AlgorithmSettings:
    r_bar: int | None = None
    delta: float = 0.05
    nu: float = NU
    c_const: float | str = "calibrated"
    variance_mode: str = "known"

    def to_dict(self) -> dict:
        return {
            "r_bar": self.r_bar, "delta": self.delta, "nu": self.nu,
            "c_const": self.c_const, "variance_mode": self.variance_mode,
        }


@dataclass
class ExperimentConfig:
    name: ExperimentName
    params: dict[str, Any] = field(default_factory=dict)
    reps: int = 200
    master_seed: int = 0
    algorithm: AlgorithmSettings = field(default_factory=AlgorithmSettings)
    kappa: float | None = None
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self) -> None:
        self.name = ExperimentName(self.name)
        merged = dict(DEFAULT_PARAMS[self.name])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ConfigError(f"unknown parameters for {self.name.value}: {sorted(unknown)}")
        merged.update(self.params)
        self.params = merged
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigError(f"reps must be a positive integer, got {self.reps}")
        if not 0 <= int(self.master_seed) < SEED_MODULUS:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            VarianceMode(self.algorithm.variance_mode)
        except ValueError as exc:
            raise ConfigError(f"unknown variance mode {self.algorithm.variance_mode!r}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name.value, "params": self.params, "reps": self.reps,
            "master_seed": self.master_seed, "algorithm": self.algorithm.to_dict(),
            "kappa": self.kappa, "output_path": self.output_path,
        }

    def config_hash(self) -> str:
        data = self.to_dict()
        data.pop("output_path")
        blob = json.dumps(data, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class ExperimentReport:
    name: ExperimentName
    columns: list[str]
    rows: list[dict[str, Any]]
    metadata: dict[str, Any]
    extras: dict[str, Any] = field(default_factory=dict)


def rep_seed(master_seed: int, rep_index: int) -> int:
    return (int(master_seed) + int(rep_index)) % SEED_MODULUS


def resolve_g(settings: AlgorithmSettings, dim: int, seed: int) -> GFunction:
    """Fixed constant, or Monte-Carlo calibration for dimension ``dim``."""
    if settings.c_const == "calibrated":
        return calibrate_g(dim, 1.0, CALIBRATION_K, reps=CALIBRATION_REPS, seed=seed)
    try:
        return GFunction(float(settings.c_const))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"c_const must be a number above 1 or 'calibrated', got {settings.c_const!r}") from exc


def elimination_config(config: ExperimentConfig, dim: int) -> EliminationConfig:
    algo = config.algorithm
    return EliminationConfig(
        r_bar=algo.r_bar,
        delta=algo.delta,
        nu=algo.nu,
        g=resolve_g(algo, dim, config.master_seed),
        variance_mode=VarianceMode(algo.variance_mode),
    )


def _distance_scale(n_budget: int, dim: int, sigma0_2: float) -> float:
    return dim * sigma0_2 / n_budget


def instance_from_normalized(
    q2_norms: Sequence[float], sigma2: float, sigma0_2: float, n_budget: int, dim: int
) -> ProblemInstance:
    """Target at the origin, source ``t`` on the first axis at the given normalized distance."""
    scale = _distance_scale(n_budget, dim, sigma0_2)
    thetas = [np.zeros(dim)]
    for q2n in q2_norms:
        theta = np.zeros(dim)
        theta[0] = math.sqrt(q2n * scale)
        thetas.append(theta)
    radius = max(float(np.max(np.abs([t[0] for t in thetas]))), 1.0)
    return build_instance(thetas, [sigma0_2] + [sigma2] * len(q2_norms), None, n_budget, 2.0 * radius)


def two_source_instance(q2_norm: float, params: dict) -> ProblemInstance:
    return instance_from_normalized(
        [0.0, q2_norm], params["sigma2"], params["sigma0_2"], int(params["n_budget"]), int(params["dim"])
    )


def mixture_instance(n_far: int, n_close: int, params: dict) -> ProblemInstance:
    """Sources ordered close, medium, far."""
    n_medium = int(params["n_sources"]) - n_far - n_close
    if n_medium < 0 or n_far < 0 or n_close < 0:
        raise InfeasibleMixture(f"cell (far={n_far}, close={n_close}) exceeds T = {params['n_sources']}")
    q2s = (
        [params["q2_norm_close"]] * n_close
        + [params["q2_norm_medium"]] * n_medium
        + [params["q2_norm_far"]] * n_far
    )
    return instance_from_normalized(
        q2s, params["sigma2"], params["sigma0_2"], int(params["n_budget"]), int(params["dim"])
    )


def gamma_instance(gamma: float, params: dict) -> ProblemInstance:
    n_zero = int(params["n_zero"])
    q2s = [0.0 if t <= n_zero else float(t - n_zero) ** gamma for t in range(1, int(params["n_sources"]) + 1)]
    return instance_from_normalized(
        q2s, params["sigma2"], params["sigma0_2"], int(params["n_budget"]), int(params["dim"])
    )


@dataclass(frozen=True)
class RepResult:
    loss: float
    t_star: int
    t_alg_size: int
    precision: float
    recall: float
    empty_t_alg: bool
    empty_reference: bool
    samples_used: int
    identified: bool
    within_bound: bool


def overlap_metrics(t_alg: Sequence[int], reference: Sequence[int]) -> tuple[float, float, bool, bool]:
    """Precision and recall of ``t_alg`` against ``reference``.

    An empty set makes the corresponding ratio 0/0; it is reported as 1.0
    and flagged.
    """
    hits = len(set(t_alg) & set(reference))
    precision = hits / len(t_alg) if t_alg else 1.0
    recall = hits / len(reference) if reference else 1.0
    return precision, recall, not t_alg, not reference


def _simulate(instance: ProblemInstance, config: EliminationConfig, reference: tuple[int, ...], seed: int) -> RepResult:
    sampler = BudgetedSampler(instance, seed)
    trace = run_elimination(instance, sampler, config)
    assert trace.samples_used <= instance.n_budget
    loss = squared_error(trace.final_estimate, instance.target.theta)
    precision, recall, empty_alg, empty_ref = overlap_metrics(trace.t_alg, reference)
    return RepResult(
        loss=loss,
        t_star=trace.t_star,
        t_alg_size=len(trace.t_alg),
        precision=precision,
        recall=recall,
        empty_t_alg=empty_alg,
        empty_reference=empty_ref,
        samples_used=trace.samples_used,
        identified=set(trace.t_alg) == set(reference),
        within_bound=loss <= theorem2_bound(instance, trace.t_alg, config),
    )


def run_reps(func: Callable[[int], Any], reps: int, master_seed: int, workers: int = 1) -> list:
    """Evaluate ``func(seed)`` for every repetition, ordered by repetition index."""
    seeds = [rep_seed(master_seed, i) for i in range(reps)]
    if workers <= 1:
        return [func(seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, seeds, chunksize=max(1, reps // (4 * workers))))


def reference_kappa(config: ExperimentConfig, instance: ProblemInstance, algo: EliminationConfig) -> float:
    if config.kappa is not None:
        return float(config.kappa)
    if config.name is ExperimentName.GAMMA_PRECISION_RECALL:
        return GAMMA_DEFAULT_KAPPA
    return algo.weak_kappa(instance)


def _summarize(results: list[RepResult]) -> dict[str, float]:
    losses = np.array([r.loss for r in results])
    q10, q50, q90 = np.quantile(losses, [0.1, 0.5, 0.9])
    return {
        "mean_loss": float(losses.mean()),
        "se_loss": float(losses.std(ddof=1) / math.sqrt(len(losses))) if len(losses) > 1 else 0.0,
        "loss_q10": float(q10),
        "loss_q50": float(q50),
        "loss_q90": float(q90),
        "precision": float(np.mean([r.precision for r in results])),
        "recall": float(np.mean([r.recall for r in results])),
        "min_recall": float(np.min([r.recall for r in results])),
        "empty_t_alg_rate": float(np.mean([r.empty_t_alg for r in results])),
        "mean_t_alg_size": float(np.mean([r.t_alg_size for r in results])),
        "identification_rate": float(np.mean([r.identified for r in results])),
        "bound_coverage": float(np.mean([r.within_bound for r in results])),
        "mean_samples_used": float(np.mean([r.samples_used for r in results])),
        "max_samples_used": int(np.max([r.samples_used for r in results])),
    }


def _run_cell(config: ExperimentConfig, instance: ProblemInstance, algo: EliminationConfig):
    kappa = reference_kappa(config, instance, algo)
    reference = weak_oracle_set(instance, kappa)
    func = partial(_simulate, instance, algo, reference)
    results = run_reps(func, config.reps, config.master_seed, config.workers)
    return results, reference, kappa


def _metadata(config: ExperimentConfig, started: float, algo: EliminationConfig | None = None) -> dict:
    meta = {
        "experiment": config.name.value,
        "seed": config.master_seed,
        "reps": config.reps,
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "wall_time_s": time.perf_counter() - started,
    }
    if algo is not None:
        meta["c_const"] = algo.g.c_const
    return meta


def exp_two_source_sweep(config: ExperimentConfig) -> ExperimentReport:
    """Two sources, one at the target and one swept outward."""
    started = time.perf_counter()
    params = config.params
    algo = elimination_config(config, int(params["dim"]))
    rows = []
    for cell, q2n in enumerate(params["q2_norm_grid"]):
        instance = two_source_instance(float(q2n), params)
        results, reference, kappa = _run_cell(config, instance, algo)
        picks = np.array([r.t_star for r in results])
        row = {"cell": cell, "q2_norm": float(q2n), "kappa": kappa, "reference_size": len(reference)}
        row.update(_summarize(results))
        for t in range(instance.n_sources + 1):
            row[f"p_task_{t}"] = float(np.mean(picks == t))
        rows.append(row)
    return ExperimentReport(config.name, list(rows[0]), rows, _metadata(config, started, algo))


def mixture_cells(params: dict) -> list[tuple[int, int]]:
    """Explicit ``cells`` if given, else the feasible part of ``grid_values`` squared."""
    if params.get("cells") is not None:
        cells = [(int(far), int(close)) for far, close in params["cells"]]
        for far, close in cells:
            if far + close > int(params["n_sources"]) or far < 0 or close < 0:
                raise InfeasibleMixture(f"cell (far={far}, close={close}) is infeasible")
        return cells
    values = [int(v) for v in params["grid_values"]]
    return [(far, close) for far, close in itertools.product(values, values) if far + close <= int(params["n_sources"])]


def exp_type_mixture(config: ExperimentConfig) -> ExperimentReport:
    """Close/medium/far source mixtures on a ``(T_far, T_close)`` grid."""
    started = time.perf_counter()
    params = config.params
    algo = elimination_config(config, int(params["dim"]))
    rows = []
    for cell, (n_far, n_close) in enumerate(mixture_cells(params)):
        instance = mixture_instance(n_far, n_close, params)
        n_medium = instance.n_sources - n_far - n_close
        results, reference, kappa = _run_cell(config, instance, algo)
        picks = np.array([r.t_star for r in results])
        row = {
            "cell": cell, "t_far": n_far, "t_close": n_close, "t_medium": n_medium,
            "kappa": kappa, "reference_size": len(reference),
        }
        row.update(_summarize(results))
        row["p_target"] = float(np.mean(picks == 0))
        row["p_close"] = float(np.mean((picks >= 1) & (picks <= n_close)))
        row["p_medium"] = float(np.mean((picks > n_close) & (picks <= n_close + n_medium)))
        row["p_far"] = float(np.mean(picks > n_close + n_medium))
        rows.append(row)
    return ExperimentReport(config.name, list(rows[0]), rows, _metadata(config, started, algo))


def exp_gamma_precision_recall(config: ExperimentConfig) -> ExperimentReport:
    """Distances growing as ``(t - n_zero)^gamma``; reports overlap with the weak-oracle set."""
    started = time.perf_counter()
    params = config.params
    algo = elimination_config(config, int(params["dim"]))
    rows, curve_exports = [], {}
    for cell, gamma in enumerate(params["gammas"]):
        instance = gamma_instance(float(gamma), params)
        results, reference, kappa = _run_cell(config, instance, algo)
        row = {"cell": cell, "gamma": float(gamma), "kappa": kappa, "reference_size": len(reference)}
        row.update(_summarize(results))
        rows.append(row)
        curve = curves.curve_from_instance(instance, algo)
        curve_exports[str(float(gamma))] = curves.jump_points(curve)
    report = ExperimentReport(config.name, list(rows[0]), rows, _metadata(config, started, algo))
    report.extras["curves"] = curve_exports
    return report


EXAMPLE_PRESETS = {
    # Normalized so that the barrier at full retention equals 1.
    "example1": lambda t: np.cbrt(t) / 9.0,
    "example1_fixed_point": lambda t: np.cbrt(t) / 12.0,
}


def example_curve(preset: str, n_sources: int = 1000, tau_min: float = 0.2) -> curves.CurveSpec:
    """Equal-variance curve whose barrier at full retention is exactly 1."""
    if preset not in EXAMPLE_PRESETS:
        raise ConfigError(f"unknown curve preset {preset!r}; choose from {sorted(EXAMPLE_PRESETS)}")
    t = np.arange(1, n_sources + 1, dtype=float)
    q2s = EXAMPLE_PRESETS[preset](t)
    sigma0_2 = tau_min * n_sources
    return curves.make_curve(q2s, np.ones(n_sources), sigma0_2, n_sources, 1, 1.0, tau_min)


def _curve_from_params(params: dict) -> curves.CurveSpec:
    if params.get("preset"):
        return example_curve(params["preset"], int(params.get("n_sources", 1000)), float(params.get("tau_min", 0.2)))
    try:
        return curves.make_curve(
            params["q2s"], params["sigma2s"], params["sigma0_2"], params["n_budget"], params["dim"],
            params["g_over_nu"], params.get("tau_min"),
        )
    except KeyError as exc:
        raise ConfigError(f"curve parameters missing {exc.args[0]!r}") from exc


def exp_curve_export(config: ExperimentConfig) -> ExperimentReport:
    started = time.perf_counter()
    curve = _curve_from_params(config.params)
    rows = [{"tau": tau, "beta": value} for tau, value in curves.jump_points(curve)]
    report = ExperimentReport(config.name, ["tau", "beta"], rows, _metadata(config, started))
    orbit = curves.iterate(curve, 20)
    report.extras["orbit"] = {"taus": orbit.taus, "end": orbit.end.value}
    report.extras["fixed_point_above"] = curves.has_fixed_point_above(curve)
    report.extras["tau_min"] = curve.tau_min
    return report


def _instance_param(params: dict, default: Callable[[], ProblemInstance]) -> ProblemInstance:
    data = params.get("instance")
    if data is None:
        return default()
    if isinstance(data, str):
        try:
            with open(data, encoding="utf-8") as handle:
                data = json.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"instance file not found: {data}") from exc
    try:
        return instance_from_dict(data)
    except KeyError as exc:
        raise ConfigError(f"instance is missing field {exc.args[0]!r}") from exc


def separated_instance(n_sources: int = 20, n_far: int = 10) -> ProblemInstance:
    """Half the sources at the target, half at normalized squared distance 100."""
    q2s = [0.0] * (n_sources - n_far) + [100.0] * n_far
    return instance_from_normalized(q2s, 0.1, 1.0, 10_000, 2)


def bound_report(instance: ProblemInstance) -> dict[str, Any]:
    """Oracle benchmarks and lower bounds for an instance.

    Sources are sorted by distance; the lower bounds need the noise levels
    to be non-increasing in that order and are left empty otherwise.
    """
    n, d = instance.n_budget, instance.dim
    q2 = instance.distances2[1:]
    s2 = instance.sigma2s[1:]
    order = np.lexsort((-s2, q2))
    q2_sorted, s2_sorted = q2[order], np.concatenate([[instance.target.sigma2], s2[order]])
    ordered = not np.any(np.diff(s2_sorted) > 0)
    report: dict[str, Any] = {
        "strong_bound": strong_bound(instance),
        "weak_bound": oracle_report(instance, 1.0).weak_bound,
        "theorem3": None,
        "theorem4": None,
        "regime": "ordering_violated" if not ordered else None,
    }
    if ordered:
        report["theorem3"] = theorem3_value(q2_sorted, s2_sorted, n, d)
        report["weak_bound"] = weak_benchmark(q2_sorted, s2_sorted, n, d, 1.0)
        if d >= 3:
            index, _ = weak_oracle_model(q2_sorted, s2_sorted, n, d, 1.0)
            q_wo = 0.0 if index == 0 else math.sqrt(q2_sorted[index - 1])
            report["theorem4"], report["regime"] = theorem4_value(q_wo, float(s2_sorted[index]), n, d)
        else:
            report["regime"] = "dimension_below_3"
    return report


def exp_bound_report(config: ExperimentConfig) -> ExperimentReport:
    started = time.perf_counter()
    instance = _instance_param(config.params, separated_instance)
    report = bound_report(instance)
    columns = ["strong_bound", "weak_bound", "theorem3", "theorem4", "regime"]
    result = ExperimentReport(config.name, columns, [report], _metadata(config, started))
    result.extras["report"] = report
    return result


def _default_single_source(q2_norm: float) -> ProblemInstance:
    return instance_from_normalized([q2_norm], 1.0, 10.0, 1000, 2)


def _single_rep(instance: ProblemInstance, delta: float, g: GFunction, nu: float, seed: int) -> tuple[float, bool, bool]:
    sampler = BudgetedSampler(instance, seed)
    outcome = run_single_source(instance, sampler, delta, g)
    loss = squared_error(outcome.estimate, instance.target.theta)
    return loss, outcome.chose_source, loss <= single_source_bound(instance, delta, g, nu)


def exp_single_source(config: ExperimentConfig) -> ExperimentReport:
    started = time.perf_counter()
    params = config.params
    instance = _instance_param(params, lambda: _default_single_source(float(params["q2_norm"])))
    algo = config.algorithm
    g = resolve_g(algo, instance.dim, config.master_seed)
    func = partial(_single_rep, instance, algo.delta, g, algo.nu)
    results = run_reps(func, config.reps, config.master_seed, config.workers)
    losses = np.array([r[0] for r in results])
    q10, q50, q90 = np.quantile(losses, [0.1, 0.5, 0.9])
    row = {
        "cell": 0,
        "mean_loss": float(losses.mean()),
        "loss_q10": float(q10), "loss_q50": float(q50), "loss_q90": float(q90),
        "p_task_1": float(np.mean([r[1] for r in results])),
        "bound_coverage": float(np.mean([r[2] for r in results])),
        "bound": single_source_bound(instance, algo.delta, g, algo.nu),
    }
    meta = _metadata(config, started)
    meta["c_const"] = g.c_const
    return ExperimentReport(config.name, list(row), [row], meta)


def exp_algorithm1(config: ExperimentConfig) -> ExperimentReport:
    started = time.perf_counter()
    instance = _instance_param(config.params, separated_instance)
    algo = elimination_config(config, instance.dim)
    results, reference, kappa = _run_cell(config, instance, algo)
    row = {"cell": 0, "kappa": kappa, "reference_size": len(reference)}
    row.update(_summarize(results))
    report = ExperimentReport(config.name, list(row), [row], _metadata(config, started, algo))
    first = run_elimination(instance, BudgetedSampler(instance, rep_seed(config.master_seed, 0)), algo)
    report.extras["first_trace"] = first.to_dict()
    return report


RUNNERS: dict[ExperimentName, Callable[[ExperimentConfig], ExperimentReport]] = {
    ExperimentName.TWO_SOURCE_SWEEP: exp_two_source_sweep,
    ExperimentName.TYPE_MIXTURE: exp_type_mixture,
    ExperimentName.GAMMA_PRECISION_RECALL: exp_gamma_precision_recall,
    ExperimentName.CURVE_EXPORT: exp_curve_export,
    ExperimentName.BOUND_REPORT: exp_bound_report,
    ExperimentName.SINGLE_SOURCE: exp_single_source,
    ExperimentName.ALGORITHM1: exp_algorithm1,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[config.name](config)


def format_value(value: Any) -> str:
    """CSV cell text; floats keep 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_report(report: ExperimentReport, out: str) -> tuple[str, str]:
    """Write ``<out>.csv`` and ``<out>.meta.json``; returns both paths."""
    base = Path(out)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = f"{base}.csv"
    meta_path = f"{base}.meta.json"
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([format_value(row.get(col)) for col in report.columns])
    meta = dict(report.metadata)
    meta.update(report.extras)
    with open(meta_path, "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, default=_json_default)
    return csv_path, meta_path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f"cannot serialize {type(value).__name__}")
