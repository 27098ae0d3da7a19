"""Experiment runner: multi-seed optimizer runs, CSV traces, summary JSON,
cloud cost/time models and hyperparameter sweeps.

Experiment specs are YAML files::

    problem:
      kind: tfim          # or "file" with `path:` (relative to this file)
      n: 4
      g: 1.5
      boundary: open
      depth: 6
    optimizers: [gcans, icans]
    budget: 2000000
    seeds: [0, 1, 2]
    threshold_fraction: 0.01   # or `threshold:` in absolute energy units
    output_dir: out/tfim4
    lipschitz: bound           # bound (d * ||c||_1), one_norm, or a number
    optimizer_config:          # optional per-optimizer overrides
      sgd_ds: {s0: 6, ratio: 1.0025}
    sweep:                     # optional defaults for `gcans sweep`
      learning_rate_multiplier: [0.5, 1, 2]

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .estimator import VQEProblem
from .optimizers import OPTIMIZERS, OptimizationTrace, OptimizerConfig, run_optimizer
from .pauli import Observable, load_observable, one_norm, tfim
from .statevector import build_ansatz, ground_energy_dense

OUTPUT_ENV = "GCANS_OUTPUT_DIR"

# USD per task per Pauli term and per shot; seconds per circuit switch and per shot (5 kHz)
TASK_PRICE = 0.3
SHOT_PRICE = 0.00035
SWITCH_SECONDS = 0.1
SHOT_SECONDS = 0.0002

SWEEP_AXES = ("learning_rate_multiplier", "common_ratio")


def cost_usd(iterations: int, shots: int, pauli_terms: int) -> float:
    """Braket-style price: 0.3 P K + 0.00035 S dollars."""
    _check_counts(iterations, shots, pauli_terms)
    return TASK_PRICE * pauli_terms * iterations + SHOT_PRICE * shots


def time_seconds(iterations: int, shots: int, pauli_terms: int) -> float:
    """Wall-clock estimate: 0.1 P K + 0.0002 S seconds."""
    _check_counts(iterations, shots, pauli_terms)
    return SWITCH_SECONDS * pauli_terms * iterations + SHOT_SECONDS * shots


def _check_counts(*counts):
    if any(c < 0 for c in counts):
        raise ValueError("iterations, shots and Pauli terms must be non-negative")


@dataclass
class ProblemSpec:
    kind: str = "tfim"
    n: int = 4
    g: float = 1.5
    boundary: str = "open"
    depth: int = 6
    path: Optional[str] = None

    def observable(self) -> Observable:
        if self.kind == "tfim":
            return tfim(self.n, self.g, self.boundary)
        if self.kind == "file":
            if not self.path:
                raise ValueError("file problems need a `path`")
            return load_observable(self.path)
        raise ValueError(f"unknown problem kind {self.kind!r}")

    def build(self) -> VQEProblem:
        obs = self.observable()
        return VQEProblem(build_ansatz(obs.n, self.depth), obs)


@dataclass
class ExperimentSpec:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    optimizers: list = field(default_factory=lambda: ["gcans", "icans"])
    budget: int = 2_000_000
    seeds: list = field(default_factory=lambda: list(range(10)))
    threshold: Optional[float] = None
    threshold_fraction: float = 0.01
    output_dir: str = "results"
    lipschitz: object = "bound"
    optimizer_config: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        for name in self.optimizers:
            if name not in OPTIMIZERS:
                raise ValueError(f"unknown optimizer {name!r}; choose from {OPTIMIZERS}")
        for name, overrides in self.optimizer_config.items():
            if name not in OPTIMIZERS:
                raise ValueError(f"optimizer_config for unknown optimizer {name!r}")
            OptimizerConfig.from_dict(dict(overrides))
        for axis in self.sweep:
            if axis not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
        if not (self.lipschitz in ("bound", "one_norm") or isinstance(self.lipschitz, (int, float))):
            raise ValueError("lipschitz must be 'bound', 'one_norm' or a number")
        if self.threshold is None and not self.threshold_fraction > 0:
            raise ValueError("threshold_fraction must be positive")
        if self.problem.kind == "file" and not Path(self.problem.path or "").is_file():
            raise ValueError(f"Hamiltonian file not found: {self.problem.path}")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentSpec":
        data = dict(data or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        problem = dict(data.pop("problem", {}) or {})
        pknown = set(ProblemSpec.__dataclass_fields__)
        bad = set(problem) - pknown
        if bad:
            raise ValueError(f"unknown problem keys: {sorted(bad)}")
        if problem.get("path") and base_dir is not None:
            problem["path"] = str((base_dir / problem["path"]).resolve())
        if "output_dir" in data and base_dir is not None:
            data["output_dir"] = str(base_dir / data["output_dir"])
        return cls(problem=ProblemSpec(**problem), **data)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping at top level")
        return cls.from_dict(data, base_dir=path.parent)

    def output_path(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)

    def config_for(self, name: str, problem: VQEProblem) -> OptimizerConfig:
        overrides = dict(self.optimizer_config.get(name, {}))
        if "lipschitz" not in overrides:
            if self.lipschitz == "one_norm":
                overrides["lipschitz"] = one_norm(problem.observable)
            elif self.lipschitz != "bound":
                overrides["lipschitz"] = float(self.lipschitz)
        overrides.setdefault("budget", self.budget)
        return OptimizerConfig.from_dict(overrides)


def _run_cell(args) -> tuple[str, int, OptimizationTrace]:
    name, seed, problem, config = args
    trace = run_optimizer(name, problem, config, np.random.default_rng(seed))
    return name, seed, trace


def _map(cells, jobs: int):
    if jobs <= 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, cells))


def summarize_trace(trace: OptimizationTrace, ground: float, spec: ExperimentSpec, pauli_terms: int) -> dict:
    initial_gap = trace.initial_energy - ground
    eps = spec.threshold if spec.threshold is not None else spec.threshold_fraction * initial_gap
    hit = trace.first_reaching(ground + eps)
    K, S = trace.iterations, trace.total_shots
    out = {
        "K": K,
        "S": S,
        "initial_energy": trace.initial_energy,
        "final_energy": trace.final_energy,
        "best_energy": trace.best_energy,
        "threshold": eps,
        "shots_to_threshold": None if hit is None else hit.cumulative_shots,
        "iterations_to_threshold": None if hit is None else hit.k + 1,
        "cost_usd": cost_usd(K, S, pauli_terms),
        "time_seconds": time_seconds(K, S, pauli_terms),
    }
    if hit is not None:
        out["cost_usd_to_threshold"] = cost_usd(hit.k + 1, hit.cumulative_shots, pauli_terms)
        out["time_seconds_to_threshold"] = time_seconds(hit.k + 1, hit.cumulative_shots, pauli_terms)
    else:
        out["cost_usd_to_threshold"] = None
        out["time_seconds_to_threshold"] = None
    return out


def median_or_none(values) -> Optional[float]:
    """Median with unreached (None) counted as +inf; None if the median is unreached."""
    filled = [np.inf if v is None else float(v) for v in values]
    med = statistics.median(filled)
    return None if not np.isfinite(med) else med


def run_experiment(spec: ExperimentSpec, jobs: int = 1, write: bool = True) -> dict:
    problem = spec.problem.build()
    ground = ground_energy_dense(problem.observable)
    P = problem.pauli_terms
    cells = [
        (name, seed, problem, spec.config_for(name, problem))
        for name in spec.optimizers
        for seed in spec.seeds
    ]
    results = _map(cells, jobs)

    out_dir = spec.output_path()
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
    runs = []
    for name, seed, trace in results:
        if write:
            with open(out_dir / f"{name}_seed{seed}.csv", "w", encoding="utf-8", newline="") as fh:
                fh.write(trace.to_csv())
        runs.append({"optimizer": name, "seed": seed, **summarize_trace(trace, ground, spec, P)})

    aggregate = {}
    for name in spec.optimizers:
        mine = [r for r in runs if r["optimizer"] == name]
        aggregate[name] = {
            "median_shots_to_threshold": median_or_none(r["shots_to_threshold"] for r in mine),
            "median_iterations_to_threshold": median_or_none(r["iterations_to_threshold"] for r in mine),
            "median_final_energy": statistics.median(r["final_energy"] for r in mine),
            "median_K": statistics.median(r["K"] for r in mine),
            "median_S": statistics.median(r["S"] for r in mine),
            "reached": sum(r["shots_to_threshold"] is not None for r in mine),
        }
    summary = {
        "problem": vars(spec.problem).copy(),
        "ground_energy": ground,
        "pauli_terms": P,
        "parameters": problem.dimension,
        "budget": spec.budget,
        "runs": runs,
        "aggregate": aggregate,
    }
    if write:
        with open(out_dir / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    summary["traces"] = {(name, seed): trace for name, seed, trace in results}
    return summary


SWEEP_COLUMNS = ("optimizer", "axis", "value", "seed", "final_energy", "final_gap", "threshold", "normalized_gap")


def run_sweep(spec: ExperimentSpec, axis: str, values=None, jobs: int = 1, write: bool = True) -> dict:
    """Final optimality gap over a hyperparameter grid, normalized by each
    run's accuracy threshold.

    ``learning_rate_multiplier`` scales the optimizer's base ``lr_scale``;
    ``common_ratio`` sets SGD-DS's ``r`` and only applies to ``sgd_ds``.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"invalid sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if values is None:
        values = spec.sweep.get(axis)
    if not values:
        raise ValueError(f"no values given for sweep axis {axis!r}")
    values = [float(v) for v in values]
    names = ["sgd_ds"] if axis == "common_ratio" else list(spec.optimizers)
    if axis == "common_ratio" and "sgd_ds" not in spec.optimizers:
        raise ValueError("common_ratio sweeps need sgd_ds among the optimizers")

    problem = spec.problem.build()
    ground = ground_energy_dense(problem.observable)
    cells, keys = [], []
    for name in names:
        base = spec.config_for(name, problem)
        for value in values:
            if axis == "common_ratio":
                config = replace(base, ratio=value)
            else:
                config = replace(base, lr_scale=base.lr_scale * value)
                alpha, lip = config.resolve(problem)
                if name in ("gcans", "icans") and alpha * lip >= 2.0:
                    raise ValueError(
                        f"multiplier {value:g} gives alpha = {alpha:g} >= 2/L for {name}"
                    )
            for seed in spec.seeds:
                cells.append((name, seed, problem, config))
                keys.append((name, value, seed))
    results = _map(cells, jobs)

    rows = []
    for (name, value, seed), (_, _, trace) in zip(keys, results):
        initial_gap = trace.initial_energy - ground
        eps = spec.threshold if spec.threshold is not None else spec.threshold_fraction * initial_gap
        gap = trace.final_energy - ground
        rows.append({
            "optimizer": name, "axis": axis, "value": value, "seed": seed,
            "final_energy": trace.final_energy, "final_gap": gap,
            "threshold": eps, "normalized_gap": gap / eps,
        })

    medians: dict = {}
    for name in names:
        medians[name] = {
            v: statistics.median(r["normalized_gap"] for r in rows if r["optimizer"] == name and r["value"] == v)
            for v in values
        }
    spread = {name: max(m.values()) - min(m.values()) for name, m in medians.items()}
    report = {"axis": axis, "values": values, "rows": rows, "median_normalized_gap": medians, "range": spread}
    if write:
        out_dir = spec.output_path()
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / f"sweep_{axis}.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for r in rows:
                fh.write(",".join(
                    repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in SWEEP_COLUMNS
                ) + "\n")
    return report


def ground(problem_or_obs) -> float:
    obs = problem_or_obs if isinstance(problem_or_obs, Observable) else problem_or_obs.observable()
    return ground_energy_dense(obs)
