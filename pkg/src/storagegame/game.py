"""Utilities, potential and Nash analysis.

The utility of unit ``x`` for resource ``y`` under a (possibly partial)
state ``W`` is ``lam[y] - k_c * W^y / beta[y] + k_a * W[x][y]`` where
``W^y`` is the load (column sum) of ``y``.  Moving one atom changes the
potential by exactly the mover's utility change.

All functions accept ``exact=True`` to evaluate in :class:`fractions.Fraction`
arithmetic; float parameters are then taken at their exact binary value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator


from .feasibility import feasible_by_flow
from .model import AllocationState, Instance, make_instance

DEFAULT_STATE_BOUND = 10**6


class StateSpaceTooLarge(RuntimeError):
    pass


def _num(v, exact: bool):
    return Fraction(v) if exact else float(v)


def utility(instance: Instance, W: AllocationState, x: int, y: int, *, exact: bool = False):
    """``f_xy(W)``; undefined for resources without capacity."""
    beta = instance.beta[y]
    if beta == 0:
        raise ValueError(f"resource {y} has zero capacity; utility undefined")
    load = W.col_tot[y]
    if exact:
        return (Fraction(instance.lam[y]) - Fraction(instance.k_c) * Fraction(load, beta)
                + Fraction(instance.k_a) * W[x, y])
    return instance.lam[y] - instance.k_c * load / beta + instance.k_a * W[x, y]


def prospective_utility(instance: Instance, W: AllocationState, x: int, y: int, *, exact: bool = False):
    """``f_xy(W + e_xy)``: the value of placing one more atom of ``x`` on ``y``."""
    beta = instance.beta[y]
    if beta == 0:
        raise ValueError(f"resource {y} has zero capacity; utility undefined")
    load = W.col_tot[y] + 1
    if exact:
        return (Fraction(instance.lam[y]) - Fraction(instance.k_c) * Fraction(load, beta)
                + Fraction(instance.k_a) * (W[x, y] + 1))
    return instance.lam[y] - instance.k_c * load / beta + instance.k_a * (W[x, y] + 1)


def potential(instance: Instance, W: AllocationState, *, exact: bool = False):
    """Potential of ``W`` in closed form.

    Each resource contributes ``(L+1) lam - k_c L (L+1) / (2 beta)`` for load
    ``L`` (the sum over ``s = 0..L``); each entry adds ``k_a w (w+1) / 2``.
    """
    total = _num(0, exact)
    k_c = _num(instance.k_c, exact)
    for y in range(instance.n):
        load = W.col_tot[y]
        lam = _num(instance.lam[y], exact)
        term = (load + 1) * lam
        if load:
            if exact:
                term -= k_c * Fraction(load * (load + 1), 2 * instance.beta[y])
            else:
                term -= k_c * load * (load + 1) / (2 * instance.beta[y])
        total += term
    agg = sum(v * (v + 1) for _, _, v in W.entries())
    if exact:
        total += Fraction(instance.k_a) * Fraction(agg, 2)
    else:
        total += instance.k_a * agg / 2
    return total


def available(instance: Instance, xi, W: AllocationState, x: int) -> list[int]:
    """On, non-full out-neighbours of ``x``."""
    return [y for y in instance.neighbors[x] if xi[y] and W.col_tot[y] < instance.beta[y]]


@dataclass
class NashReport:
    is_nash: bool
    deviations: list[tuple[int, int, int, float]] = field(default_factory=list)


def is_nash(instance: Instance, W: AllocationState, *, exact: bool = False,
            first_only: bool = False) -> NashReport:
    """List every profitable single-atom move of a complete state.

    A deviation ``(x, y, y2, gain)`` means ``f_{x,y2}(W') - f_{xy}(W) > 0``
    with ``W' = W - e_xy + e_{x,y2}`` and ``y2`` available (all units on).
    """
    if not W.is_complete(instance):
        raise ValueError("Nash analysis requires a complete allocation state")
    deviations = []
    for x in range(instance.n):
        row = W.rows[x]
        if not row:
            continue
        targets = [y for y in instance.neighbors[x] if W.col_tot[y] < instance.beta[y]]
        for y, count in row.items():
            here = utility(instance, W, x, y, exact=exact)
            for y2 in targets:
                if y2 == y:
                    continue
                # f_{x,y2}(W') with W' = W - e_xy + e_{x,y2}
                there = prospective_utility(instance, W, x, y2, exact=exact)
                gain = there - here
                if gain > 0:
                    deviations.append((x, y, y2, gain))
                    if first_only:
                        return NashReport(False, deviations)
    return NashReport(not deviations, deviations)


def _compositions(total: int, caps: list[int]) -> Iterator[tuple[int, ...]]:
    if not caps:
        if total == 0:
            yield ()
        return
    head, rest = caps[0], caps[1:]
    room = sum(rest)
    for v in range(min(head, total), max(0, total - room) - 1, -1):
        for tail in _compositions(total - v, rest):
            yield (v,) + tail


def enumerate_complete_states(instance: Instance, bound: int = DEFAULT_STATE_BOUND) -> Iterator[AllocationState]:
    """Yield every complete allocation state exactly once.

    Raises :class:`StateSpaceTooLarge` once more than ``bound`` states have
    been produced.
    """
    n = instance.n
    cols = [0] * n
    current = AllocationState(n)
    count = 0

    def rec(x: int):
        nonlocal count
        if x == n:
            count += 1
            if count > bound:
                raise StateSpaceTooLarge(f"more than {bound} complete states")
            yield current.copy()
            return
        nbrs = instance.neighbors[x]
        caps = [instance.beta[y] - cols[y] for y in nbrs]
        for comp in _compositions(instance.alpha[x], caps):
            for y, v in zip(nbrs, comp):
                if v:
                    current.add(x, y, v)
                    cols[y] += v
            yield from rec(x + 1)
            for y, v in zip(nbrs, comp):
                if v:
                    current.add(x, y, -v)
                    cols[y] -= v

    yield from rec(0)


@dataclass
class Optimum:
    psi_star: float
    argmax: list[AllocationState]
    method: str  # "enumeration", "closed-form" or "approximate"

    @property
    def approximate(self) -> bool:
        return self.method == "approximate"


def _homogeneous(instance: Instance) -> bool:
    return (len(set(instance.alpha)) <= 1 and len(set(instance.beta)) <= 1
            and len(set(instance.lam)) <= 1)


def aggregated_state(instance: Instance) -> AllocationState | None:
    """A state where every unit puts all its atoms on one distinct resource.

    Found as a perfect matching of units to resources along the graph;
    ``None`` when no such matching exists or capacities are too small.
    """
    n = instance.n
    unit = make_instance(instance.edges, [1] * n, [1] * n, n=n)
    report = feasible_by_flow(unit)
    if not report.feasible:
        return None
    W = AllocationState(n)
    for x, y, _ in report.allocation.entries():
        if instance.alpha[x] > instance.beta[y]:
            return None
        if instance.alpha[x]:
            W.add(x, y, instance.alpha[x])
    return W


def optimal_potential(instance: Instance, *, method: str = "auto",
                      bound: int = DEFAULT_STATE_BOUND, exact: bool = False,
                      approx_runs: int = 3, approx_horizon_mult: float = 50.0,
                      seed: int = 0) -> Optimum:
    """Maximum of the potential over complete states.

    ``method`` is ``"auto"``, ``"closed-form"``, ``"enumerate"`` or
    ``"approximate"``.  The closed form applies to homogeneous instances
    (equal alpha, beta, lambda) admitting an aggregated state: it
    simultaneously maximises the concave load part and the convex
    aggregation part, and only one maximiser is returned.  The approximate
    mode keeps the best state seen over a few long annealed runs.
    """
    if instance.total_alpha == 0:
        W = AllocationState(instance.n)
        return Optimum(potential(instance, W, exact=exact), [W], "closed-form")
    if method in ("auto", "closed-form") and _homogeneous(instance):
        W = aggregated_state(instance)
        if W is not None:
            return Optimum(potential(instance, W, exact=exact), [W], "closed-form")
        if method == "closed-form":
            raise ValueError("no closed form: instance admits no aggregated state")
    elif method == "closed-form":
        raise ValueError("closed form needs a homogeneous instance")
    if method in ("auto", "enumerate"):
        try:
            best = None
            argmax: list[AllocationState] = []
            for W in enumerate_complete_states(instance, bound):
                value = potential(instance, W, exact=True)
                if best is None or value > best:
                    best, argmax = value, [W]
                elif value == best:
                    argmax.append(W)
            if best is None:
                raise ValueError("instance admits no complete allocation")
            return Optimum(best if exact else float(best), argmax, "enumeration")
        except StateSpaceTooLarge:
            if method == "enumerate":
                raise
    return _approximate_optimum(instance, approx_runs, approx_horizon_mult, seed, exact)


def _approximate_optimum(instance, runs, horizon_mult, seed, exact) -> Optimum:
    from .dynamics import SimParams, simulate

    best, best_W = None, None
    for r in range(runs):
        params = SimParams(horizon_mult=horizon_mult, schedule="fast", seed=seed + r, record="none")
        final, _ = simulate(instance, params)
        if not final.W.is_complete(instance):
            continue
        value = potential(instance, final.W, exact=exact)
        if best is None or value > best:
            best, best_W = value, final.W.copy()
    if best is None:
        raise ValueError("annealed runs never reached a complete allocation")
    return Optimum(best, [best_W], "approximate")


def split_bound_holds(instance: Instance, W: AllocationState) -> bool:
    """Check the aggregation threshold on a complete state.

    When ``k_a > 1/beta`` a Nash state never has a unit using two non-full
    resources of equal reliability and capacity ``beta``; returns ``False``
    if ``W`` contains such a split.  Pairs with ``k_a <= 1/beta`` are not
    constrained.
    """
    if not W.is_complete(instance):
        raise ValueError("split bound is stated for complete states")
    k_a = instance.k_a
    for x in range(instance.n):
        used = [y for y in W.rows[x] if W.col_tot[y] < instance.beta[y]]
        for y1, y2 in itertools.combinations(used, 2):
            beta = instance.beta[y1]
            if beta != instance.beta[y2] or instance.lam[y1] != instance.lam[y2]:
                continue
            if k_a > 1.0 / beta:
                return False
    return True
