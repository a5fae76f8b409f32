"""Performance indices of a run and their Monte-Carlo aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import SimState, Trajectory
from .game import potential
from .model import AllocationState, Instance

SUMMARY_COLUMNS = ("psi", "nu_moves", "d_plus", "d_minus_1", "d_minus_2",
                   "lambda_bar", "c_1", "c_2", "completion_events", "seed")


def psi_ratio(instance: Instance, W: AllocationState, psi_opt: float) -> float:
    if psi_opt == 0:
        raise ZeroDivisionError("optimal potential is zero")
    return float(potential(instance, W)) / float(psi_opt)


def moves_per_unit(log: Trajectory) -> list[int]:
    """Allocation moves plus distribution moves that actually relocate an atom."""
    counts = [0] * len(log.alpha)
    for e in log.events:
        if e.kind == "allocation" or (e.kind == "distribution" and e.y != e.y_new):
            counts[e.x] += 1
    return counts


def nu_moves_from_counts(alpha: Sequence[int], counts: Sequence[int]) -> float:
    ratios = [m / a for m, a in zip(counts, alpha) if a > 0]
    return float(np.mean(ratios)) if ratios else 0.0


def nu_moves(log: Trajectory) -> float:
    """Average over units with ``alpha > 0`` of moves per atom."""
    return nu_moves_from_counts(log.alpha, moves_per_unit(log))


def default_classes(n: int) -> list[list[int]]:
    return [list(range(n))]


@dataclass
class DegreeReport:
    d_plus: float
    d_minus: list[float]          # mean in-degree per resource of each class
    d_minus_literal: list[float]  # (2/n) * edges into the class
    literal_applicable: bool      # every class has exactly n/2 members


def degrees(instance: Instance, W: AllocationState, classes: Sequence[Sequence[int]] | None = None) -> DegreeReport:
    """Out- and in-degrees of the support graph ``{(x, y): W_xy > 0}``."""
    n = instance.n
    classes = classes or default_classes(n)
    if n == 0:
        return DegreeReport(0.0, [0.0] * len(classes), [0.0] * len(classes), False)
    d_plus = sum(len(row) for row in W.rows) / n
    indeg = [0] * n
    for _, y, _ in W.entries():
        indeg[y] += 1
    d_minus = [sum(indeg[y] for y in c) / len(c) if c else math.nan for c in classes]
    literal = [2.0 * sum(indeg[y] for y in c) / n for c in classes]
    applicable = all(2 * len(c) == n for c in classes)
    return DegreeReport(d_plus, d_minus, literal, applicable)


def satisfaction(instance: Instance, W: AllocationState) -> float:
    """Reliability seen per atom, averaged over units with ``alpha > 0``."""
    values = []
    for x, row in enumerate(W.rows):
        a = instance.alpha[x]
        if a == 0:
            continue
        values.append(sum(v * instance.lam[y] for y, v in row.items()) / a)
    return float(np.mean(values)) if values else 0.0


@dataclass
class CongestionReport:
    normalized: list[float]  # mean of W^y / beta_y over the class
    literal: list[float]     # sum of W^y over the class / (n * beta)


def congestion_by_class(instance: Instance, W: AllocationState,
                        classes: Sequence[Sequence[int]] | None = None) -> CongestionReport:
    n = instance.n
    classes = classes or default_classes(n)
    normalized, literal = [], []
    for c in classes:
        loads = [W.col_tot[y] / instance.beta[y] for y in c if instance.beta[y] > 0]
        normalized.append(float(np.mean(loads)) if loads else 0.0)
        betas = {instance.beta[y] for y in c}
        if len(betas) == 1 and n and next(iter(betas)) > 0:
            literal.append(sum(W.col_tot[y] for y in c) / (n * next(iter(betas))))
        else:
            literal.append(math.nan)
    return CongestionReport(normalized, literal)


@dataclass
class RunSummary:
    psi: float
    nu_moves: float
    d_plus: float
    d_minus: list[float]
    lambda_bar: float
    congestion: list[float]
    completion_events: int | None
    seed: int
    complete: bool = True

    def row(self) -> dict:
        d = self.d_minus + [math.nan] * (2 - len(self.d_minus))
        c = self.congestion + [math.nan] * (2 - len(self.congestion))
        return {
            "psi": self.psi, "nu_moves": self.nu_moves, "d_plus": self.d_plus,
            "d_minus_1": d[0], "d_minus_2": d[1], "lambda_bar": self.lambda_bar,
            "c_1": c[0], "c_2": c[1],
            "completion_events": -1 if self.completion_events is None else self.completion_events,
            "seed": self.seed,
        }


def summarize(instance: Instance, state: SimState, *, psi_opt: float | None, seed: int,
              classes: Sequence[Sequence[int]] | None = None) -> RunSummary:
    W = state.W
    deg = degrees(instance, W, classes)
    return RunSummary(
        psi=psi_ratio(instance, W, psi_opt) if psi_opt else math.nan,
        nu_moves=nu_moves_from_counts(instance.alpha, state.moves),
        d_plus=deg.d_plus,
        d_minus=deg.d_minus,
        lambda_bar=satisfaction(instance, W),
        congestion=congestion_by_class(instance, W, classes).normalized,
        completion_events=state.completion_activations,
        seed=seed,
        complete=W.is_complete(instance),
    )


@dataclass
class MonteCarloReport:
    rows: list[dict]
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    min: dict = field(default_factory=dict)
    max: dict = field(default_factory=dict)


def aggregate(summaries: Sequence[RunSummary]) -> MonteCarloReport:
    """Mean, sample standard deviation, min and max of every index."""
    if not summaries:
        raise ValueError("nothing to aggregate")
    rows = [s.row() for s in summaries]
    report = MonteCarloReport(rows)
    for key in SUMMARY_COLUMNS:
        if key == "seed":
            continue
        values = np.array([r[key] for r in rows], dtype=float)
        if np.all(np.isnan(values)):
            stats = (math.nan,) * 4
        else:
            v = values[~np.isnan(values)]
            stats = (float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0,
                     float(v.min()), float(v.max()))
        report.mean[key], report.std[key], report.min[key], report.max[key] = stats
    return report
