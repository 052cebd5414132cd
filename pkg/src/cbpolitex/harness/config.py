"""Experiment configuration schema (one JSON document per experiment)."""

from __future__ import annotations

import hashlib
import itertools
import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..solvers.driver import ALGORITHMS, RunConfig

SWEEPABLE = ("alpha_lambda", "alpha_pi", "eta_tol", "entropy")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PointRho(_Strict):
    point: int


class RandomEnvSpec(_Strict):
    n_states: int = Field(gt=0)
    n_actions: int = Field(gt=0)
    seed: int = 0
    concentration: float = Field(default=1.0, gt=0)


class EnvSpec(_Strict):
    kind: Literal["gridworld", "random"] = "gridworld"
    gamma: float = Field(default=0.9, ge=0.0, lt=1.0)
    b: Optional[float] = None
    b_fraction: float = Field(default=0.5, gt=0.0)
    rho: Union[Literal["uniform"], PointRho, list[float]] = "uniform"
    random: Optional[RandomEnvSpec] = None

    @model_validator(mode="after")
    def _random_needs_params(self):
        if self.kind == "random" and self.random is None:
            raise ValueError("env.kind == 'random' requires an env.random section")
        return self

    def rho_value(self):
        return self.rho.model_dump() if isinstance(self.rho, PointRho) else self.rho


class AlgorithmSpec(_Strict):
    name: Literal[ALGORITHMS] = "cbp_practical"  # type: ignore[valid-type]
    alpha_lambda: Optional[float] = None
    alpha_pi: Optional[float] = None
    eta_tol: float = 0.0
    entropy: float = Field(default=0.0, ge=0.0)
    lambda0: float = Field(default=0.0, ge=0.0)
    pre_iterations: int = Field(default=200, ge=1)
    anytime: bool = False
    visited_only: bool = False


class EstimatorSpec(_Strict):
    kind: Literal["exact", "monte_carlo"] = "exact"
    m: int = Field(default=2000, ge=1)
    eps_trunc: float = Field(default=1e-3, gt=0.0)
    delta: float = Field(default=0.05, gt=0.0, lt=1.0)


class FeatureSpec(_Strict):
    kind: Literal["one_hot", "tile_coding"] = "one_hot"
    tile_size: Union[int, list[int], list[list[int]], None] = None
    n_tilings: int = Field(default=1, ge=1)
    offsets: Optional[list[list[int]]] = None
    expected_d: Optional[int] = None

    @model_validator(mode="after")
    def _tiles(self):
        if self.kind == "tile_coding" and self.tile_size is None:
            raise ValueError("tile_coding requires tile_size")
        return self


class CoresetSpec(_Strict):
    eps_prime: float = Field(gt=0.0)
    nu: float = Field(default=1.0, gt=0.0)


class ExperimentConfig(_Strict):
    env: EnvSpec = EnvSpec()
    algorithm: AlgorithmSpec = AlgorithmSpec()
    estimator: EstimatorSpec = EstimatorSpec()
    features: FeatureSpec = FeatureSpec()
    coreset: Optional[CoresetSpec] = None
    T: int = Field(default=500, ge=0)
    seeds: list[int] = [0]
    output: str = "runs"
    sweep: Optional[dict[str, list[float]]] = None

    @field_validator("sweep")
    @classmethod
    def _sweep_keys(cls, grid):
        if grid is None:
            return grid
        for key, values in grid.items():
            if key not in SWEEPABLE:
                raise ValueError(f"cannot sweep over {key!r}; choose from {SWEEPABLE}")
            if not values:
                raise ValueError(f"sweep grid for {key!r} is empty")
        return grid

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, seeds):
        if not seeds:
            raise ValueError("at least one seed is required")
        return seeds

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def run_config(self, seed: int) -> RunConfig:
        a = self.algorithm
        return RunConfig(algorithm=a.name, T=self.T, seed=seed, alpha_lambda=a.alpha_lambda,
                         alpha_pi=a.alpha_pi, eta_tol=a.eta_tol, nu_ent=a.entropy,
                         lambda0=a.lambda0, pre_iterations=a.pre_iterations,
                         anytime=a.anytime, visited_only=a.visited_only)

    def cells(self) -> list[dict]:
        """Cartesian product of the sweep grid in sorted-key order."""
        if not self.sweep:
            return [{}]
        keys = sorted(self.sweep)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.sweep[k] for k in keys))]

    def with_cell(self, cell: dict) -> "ExperimentConfig":
        algo = self.algorithm.model_copy(update=cell)
        return self.model_copy(update={"algorithm": algo, "sweep": None})


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    return ExperimentConfig.model_validate_json(text)
