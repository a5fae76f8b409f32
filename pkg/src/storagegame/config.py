"""Scenario files: YAML documents describing an instance and a run plan.

Example::

    schema_version: 1
    name: table1_ka003
    graph: {kind: complete, n: 10}
    classes:
      - {size: 10, alpha: 27, beta: 30, lambda: 3.0}
    game: {k_c: 1.0, k_a: 0.003}
    run: {mode: discrete, schedule: paper, horizon_mult: 10, replicas: 10, seed: 1}

Unknown keys are rejected.  ``game.k_a`` may be a list, in which case the
scenario is a sweep and each value is run separately.  Instead of
``classes`` an explicit ``units`` block with per-unit lists may be given.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import graphs
from .dynamics import SimParams
from .model import Instance, make_instance

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphSpec(_Strict):
    kind: Literal["complete", "regular", "grid", "line", "explicit"]
    n: Optional[int] = Field(default=None, ge=1)
    degree: Optional[int] = Field(default=None, ge=1)
    seed: int = 0
    side: Optional[int] = Field(default=None, ge=1)
    directed: bool = True
    edges: Optional[list[tuple[int, int]]] = None

    @model_validator(mode="after")
    def _required(self):
        if self.kind in ("complete", "regular", "line", "explicit") and self.n is None:
            raise ValueError(f"graph kind {self.kind!r} needs n")
        if self.kind == "regular" and self.degree is None:
            raise ValueError("regular graph needs degree")
        if self.kind == "grid" and self.side is None:
            raise ValueError("grid graph needs side")
        if self.kind == "explicit" and self.edges is None:
            raise ValueError("explicit graph needs edges")
        return self

    @property
    def size(self) -> int:
        return self.side * self.side if self.kind == "grid" else self.n

    def edge_list(self) -> list[tuple[int, int]]:
        if self.kind == "complete":
            return graphs.complete_graph(self.n)
        if self.kind == "regular":
            return graphs.random_regular_graph(self.n, self.degree, self.seed)
        if self.kind == "grid":
            return graphs.grid_graph(self.side)
        if self.kind == "line":
            return graphs.line_graph(self.n, self.directed)
        return [tuple(e) for e in self.edges]


class ClassSpec(_Strict):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    size: int = Field(ge=1)
    alpha: int = Field(ge=0)
    beta: int = Field(ge=0)
    lam: float = Field(alias="lambda")
    p_on: float = Field(default=1.0, ge=0.0, le=1.0)
    nu_on: float = Field(default=1.0, ge=0.0)
    nu_off: float = Field(default=0.0, ge=0.0)
    nu_act: float = Field(default=1.0, ge=0.0)


class UnitsSpec(_Strict):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    alpha: list[int]
    beta: list[int]
    lam: list[float] = Field(alias="lambda")
    p_on: Optional[list[float]] = None
    nu_on: Optional[list[float]] = None
    nu_off: Optional[list[float]] = None
    nu_act: Optional[list[float]] = None
    membership: Optional[list[int]] = Field(default=None, alias="class")


class GameSpec(_Strict):
    k_c: float = Field(default=1.0, ge=0.0)
    k_a: Union[float, list[float]] = 0.0

    @field_validator("k_a")
    @classmethod
    def _nonnegative(cls, v):
        values = v if isinstance(v, list) else [v]
        if not values or any(x < 0 for x in values):
            raise ValueError("k_a values must be nonnegative (and a sweep nonempty)")
        return v

    @property
    def k_a_values(self) -> list[float]:
        return list(self.k_a) if isinstance(self.k_a, list) else [self.k_a]


class RunSpec(_Strict):
    mode: Literal["discrete", "continuous"] = "discrete"
    schedule: Literal["fixed", "paper", "fast", "custom"] = "paper"
    gamma0: float = Field(default=0.0, ge=0.0)
    slope: Optional[float] = None
    horizon_mult: float = Field(default=10.0, ge=0.0)
    horizon: Optional[int] = Field(default=None, ge=0)
    replicas: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    p_all: float = Field(default=1.0, gt=0.0, le=1.0)
    record: Literal["all", "moves", "none"] = "all"
    initial_on: bool = True
    psi_opt: Union[Literal["auto", "none"], float] = "auto"


class OutputSpec(_Strict):
    dir: str = "runs"


class VerifySpec(_Strict):
    gamma: float = Field(default=1.0, ge=0.0)


class ScenarioConfig(_Strict):
    schema_version: Literal[1]
    name: str = "scenario"
    description: str = ""
    graph: GraphSpec
    classes: Optional[list[ClassSpec]] = None
    units: Optional[UnitsSpec] = None
    game: GameSpec = GameSpec()
    run: RunSpec = RunSpec()
    output: OutputSpec = OutputSpec()
    verify: VerifySpec = VerifySpec()

    @model_validator(mode="after")
    def _population(self):
        if (self.classes is None) == (self.units is None):
            raise ValueError("give exactly one of 'classes' or 'units'")
        n = self.graph.size
        if self.classes is not None and sum(c.size for c in self.classes) != n:
            raise ValueError(f"class sizes sum to {sum(c.size for c in self.classes)}, graph has {n} units")
        if self.units is not None:
            for key in ("alpha", "beta", "lam", "p_on", "nu_on", "nu_off", "nu_act", "membership"):
                v = getattr(self.units, key)
                if v is not None and len(v) != n:
                    raise ValueError(f"units.{key} has {len(v)} entries, graph has {n} units")
        return self

    def class_members(self) -> list[list[int]]:
        """Partition of the units into classes (first class = units 0..size-1, etc.)."""
        if self.classes is not None:
            out, start = [], 0
            for c in self.classes:
                out.append(list(range(start, start + c.size)))
                start += c.size
            return out
        labels = self.units.membership or [1] * self.graph.size
        return [[x for x, lab in enumerate(labels) if lab == k] for k in sorted(set(labels))]

    def _per_unit(self) -> dict:
        if self.units is not None:
            u = self.units
            return {"alpha": u.alpha, "beta": u.beta, "lam": u.lam, "p_on": u.p_on,
                    "nu_on": u.nu_on, "nu_off": u.nu_off, "nu_act": u.nu_act}
        out = {k: [] for k in ("alpha", "beta", "lam", "p_on", "nu_on", "nu_off", "nu_act")}
        for c in self.classes:
            for k in out:
                out[k].extend([getattr(c, k)] * c.size)
        return out

    def instances(self) -> list[tuple[float, Instance]]:
        """One validated instance per ``k_a`` value."""
        edges = self.graph.edge_list()
        data = self._per_unit()
        return [
            (k_a, make_instance(edges, data["alpha"], data["beta"], data["lam"], n=self.graph.size,
                                k_c=self.game.k_c, k_a=k_a, nu_on=data["nu_on"], nu_off=data["nu_off"],
                                nu_act=data["nu_act"], p_on=data["p_on"]))
            for k_a in self.game.k_a_values
        ]

    def instance(self) -> Instance:
        return self.instances()[0][1]

    def sim_params(self, seed: int, psi_opt: float | None = None) -> SimParams:
        r = self.run
        return SimParams(mode=r.mode, gamma0=r.gamma0, schedule=r.schedule, slope=r.slope,
                         horizon=r.horizon, horizon_mult=r.horizon_mult, seed=seed, p_all=r.p_all,
                         record=r.record, psi_opt=psi_opt, initial_on=r.initial_on)

    def replica_seeds(self, replicas: int | None = None, base_seed: int | None = None) -> list[int]:
        """Per-replica 64-bit seeds derived deterministically from the base seed."""
        count = replicas or self.run.replicas
        base = self.run.seed if base_seed is None else base_seed
        children = np.random.SeedSequence(base).spawn(count)
        return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping at top level")
    return ScenarioConfig.model_validate(data)
