"""Noisy best-response (Gibbs) allocation dynamics.

An active unit ``x`` either places a new atom (allocation move) or moves one
of its stored atoms (distribution move).  The target is drawn from the Gibbs
law over the on, non-full out-neighbours of ``x``::

    p_y  proportional to  exp(gamma * f_xy(W + e_xy))

evaluated at ``W`` for allocations and at ``W - e_{x,src}`` for
distributions, so the source itself stays a candidate.

Two clocks are supported.  In *discrete* mode each step resamples the on/off
vector (unit ``x`` on with probability ``p_on[x]``) and activates one on
unit chosen with probability proportional to ``alpha``.  In *continuous*
mode every unit carries independent exponential clocks ``nu_on`` (while
off), ``nu_off`` and ``nu_act`` (while on) and each step processes the next
clock event.

Random draws come from a PCG64 stream in a fixed order per step:
on/off vector (discrete, only if some ``p_on < 1``) or event time and event
choice (continuous); then the allocate/distribute coin (only when
``p_all < 1`` and the unit is partially allocated); the source atom
(distribution); the Gibbs target.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .feasibility import feasible_by_flow
from .game import potential
from .model import AllocationState, Instance

SCHEDULES = ("fixed", "paper", "fast", "custom")
RECORD_LEVELS = ("all", "moves", "none")


@dataclass
class SimParams:
    """Run configuration.

    ``horizon`` is an absolute number of steps; when it is ``None`` the
    horizon is ``round(horizon_mult * sum(alpha))``.  A step is one time
    instant in discrete mode and one clock event in continuous mode.
    ``p_all`` is the probability that a partially allocated unit allocates
    rather than redistributes (1 = allocate first).
    """

    mode: str = "discrete"
    gamma0: float = 0.0
    schedule: str = "paper"
    slope: float | None = None
    horizon: int | None = None
    horizon_mult: float = 10.0
    seed: int = 0
    p_all: float = 1.0
    record: str = "all"
    psi_opt: float | None = None
    initial_on: bool = True

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "custom" and self.slope is None:
            raise ValueError("custom schedule needs a slope")
        if not self.gamma0 >= 0:
            raise ValueError("gamma0 must be >= 0")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.horizon is None and not self.horizon_mult >= 0:
            raise ValueError("horizon_mult must be >= 0")
        if not 0.0 < self.p_all <= 1.0:
            raise ValueError("p_all must lie in (0, 1]")
        if self.record not in RECORD_LEVELS:
            raise ValueError(f"unknown record level {self.record!r}")

    def resolve_horizon(self, instance: Instance) -> int:
        if self.horizon is not None:
            return int(self.horizon)
        return int(round(self.horizon_mult * instance.total_alpha))


def gamma_schedule(params: SimParams, t: float, lambda_max: float) -> float:
    """Inverse temperature after ``t`` steps.

    ``paper`` grows by ``1/(100 lambda_max)`` per step, ``fast`` by
    ``1/(10 lambda_max)``, ``custom`` by ``params.slope``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if params.schedule == "fixed":
        return params.gamma0
    if params.schedule == "custom":
        return params.gamma0 + params.slope * t
    if lambda_max <= 0:
        raise ValueError("annealing schedule needs lambda_max > 0")
    scale = 100.0 if params.schedule == "paper" else 10.0
    return params.gamma0 + t / (lambda_max * scale)


class Event(NamedTuple):
    t: float
    gamma: float
    kind: str
    x: int
    y: int
    y_new: int
    potential: float
    psi: float
    allocated: int


TRAJECTORY_COLUMNS = Event._fields


@dataclass
class Trajectory:
    alpha: tuple[int, ...]
    events: list[Event] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def psi_series(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([e.t for e in self.events])
        return t, np.array([e.psi for e in self.events])


@dataclass
class SimState:
    W: AllocationState
    xi: list[bool]
    t: float = 0.0
    step: int = 0
    gamma: float = 0.0
    activations: int = 0
    allocated: int = 0
    potential: float = 0.0
    moves: list[int] = field(default_factory=list)
    completion_step: int | None = None
    completion_time: float | None = None
    completion_activations: int | None = None
    log: Trajectory | None = None


def initial_state(instance: Instance, params: SimParams, W: AllocationState | None = None) -> SimState:
    W = AllocationState(instance.n) if W is None else W.copy()
    state = SimState(
        W=W,
        xi=[bool(params.initial_on)] * instance.n,
        gamma=gamma_schedule(params, 0, instance.lambda_max),
        allocated=W.total,
        potential=float(potential(instance, W)),
        moves=[0] * instance.n,
        log=None if params.record == "none" else Trajectory(instance.alpha),
    )
    if state.allocated == instance.total_alpha:
        state.completion_step = 0
        state.completion_time = 0.0
        state.completion_activations = 0
    return state


class _Context:
    """Per-instance lookups used on the hot path."""

    def __init__(self, instance: Instance):
        self.n = instance.n
        self.alpha = list(instance.alpha)
        self.beta = list(instance.beta)
        self.lam = list(instance.lam)
        self.k_c = instance.k_c
        self.k_a = instance.k_a
        self.neighbors = [list(nb) for nb in instance.neighbors]
        self.total_alpha = instance.total_alpha
        self.lambda_max = instance.lambda_max
        self.always_on = all(p >= 1.0 for p in instance.p_on)
        self.p_on = np.array(instance.p_on)
        self.alpha_arr = np.array(instance.alpha, dtype=float)
        self.cum_alpha = list(np.cumsum(instance.alpha))
        self.nu_on = list(instance.nu_on)
        self.nu_off = list(instance.nu_off)
        self.nu_act = list(instance.nu_act)


@lru_cache(maxsize=64)
def _context(instance: Instance) -> _Context:
    return _Context(instance)


def _candidates(ctx: _Context, xi, W: AllocationState, x: int, removed: int | None):
    """Available resources and prospective utilities ``f_xy(W' + e_xy)``.

    ``W'`` is ``W`` with one atom of ``x`` taken off ``removed`` (if given).
    """
    col = W.col_tot
    row = W.rows[x]
    beta, lam = ctx.beta, ctx.lam
    k_c, k_a = ctx.k_c, ctx.k_a
    ys, us = [], []
    for y in ctx.neighbors[x]:
        if not xi[y]:
            continue
        load = col[y]
        own = row.get(y, 0)
        if y == removed:
            load -= 1
            own -= 1
        if load >= beta[y]:
            continue
        ys.append(y)
        us.append(lam[y] - k_c * (load + 1) / beta[y] + k_a * (own + 1))
    return ys, us


def _softmax(us: list[float], gamma: float) -> list[float]:
    top = max(us)
    return [math.exp(gamma * (u - top)) for u in us]


def gibbs(instance: Instance, xi, W: AllocationState, x: int, gamma: float):
    """Gibbs law over the available resources of ``x`` at state ``W``.

    Returns ``(resources, probabilities)``.  Raises ``ValueError`` when
    nothing is available.
    """
    ys, us = _candidates(_context(instance), xi, W, x, None)
    if not ys:
        raise ValueError(f"unit {x} has no available resource")
    weights = np.array(_softmax(us, gamma))
    return ys, weights / weights.sum()


def _sample(ys: list[int], weights: list[float], u: float) -> int:
    target = u * sum(weights)
    acc = 0.0
    for y, w in zip(ys, weights):
        acc += w
        if target < acc:
            return y
    return ys[-1]


def _record(state: SimState, params: SimParams, kind: str, x: int, y: int, y_new: int) -> None:
    log = state.log
    if log is None:
        return
    if params.record == "moves" and kind not in ("allocation", "distribution"):
        return
    psi = state.potential / params.psi_opt if params.psi_opt else math.nan
    log.events.append(Event(state.t, state.gamma, kind, x, y, y_new, state.potential, psi, state.allocated))


def _activate(ctx: _Context, state: SimState, params: SimParams, x: int, rng) -> None:
    """Run one activation of an on unit ``x`` (rules of the algorithm)."""
    W = state.W
    alpha_x = ctx.alpha[x]
    placed = W.row_tot[x]
    if alpha_x == 0:
        _record(state, params, "noop", x, -1, -1)
        return
    state.activations += 1
    allocate = placed < alpha_x
    if allocate and placed > 0 and params.p_all < 1.0:
        allocate = rng.random() < params.p_all
    xi = state.xi
    if allocate:
        ys, us = _candidates(ctx, xi, W, x, None)
        if not ys:
            _record(state, params, "noop", x, -1, -1)
            return
        y_new = _sample(ys, _softmax(us, state.gamma), rng.random())
        gain = us[ys.index(y_new)]
        W.add(x, y_new, 1)
        state.allocated += 1
        state.potential += gain
        state.moves[x] += 1
        _record(state, params, "allocation", x, -1, y_new)
        if state.allocated == ctx.total_alpha and state.completion_step is None:
            state.completion_step = state.step + 1
            state.completion_activations = state.activations
            state.completion_time = None  # filled in by the caller once t is known
        return
    # distribution: pick one stored atom uniformly, i.e. source y with prob w_xy / W_x
    target = rng.random() * placed
    acc = 0
    src = -1
    for y, v in W.rows[x].items():
        acc += v
        if target < acc:
            src = y
            break
    if src < 0:
        src = next(reversed(W.rows[x]))
    if not xi[src]:
        _record(state, params, "noop", x, src, -1)
        return
    ys, us = _candidates(ctx, xi, W, x, src)
    y_new = _sample(ys, _softmax(us, state.gamma), rng.random())
    if y_new != src:
        # f_{x,y_new}(W') - f_{x,src}(W), with W' the state after the move
        here = ctx.lam[src] - ctx.k_c * W.col_tot[src] / ctx.beta[src] + ctx.k_a * W.rows[x][src]
        gain = us[ys.index(y_new)] - here
        W.add(x, src, -1)
        W.add(x, y_new, 1)
        state.potential += gain
        state.moves[x] += 1
    _record(state, params, "distribution", x, src, y_new)


def _finish_step(ctx: _Context, state: SimState, params: SimParams) -> None:
    state.step += 1
    if state.completion_step is not None and state.completion_time is None:
        state.completion_time = state.t
    state.gamma = gamma_schedule(params, state.step, ctx.lambda_max)


def step_discrete(instance: Instance, state: SimState, params: SimParams, rng: np.random.Generator) -> SimState:
    """One time instant: resample on/off, activate one unit, advance gamma."""
    ctx = _context(instance)
    if not ctx.always_on:
        state.xi = (rng.random(ctx.n) < ctx.p_on).tolist()
    state.t = float(state.step + 1)
    if ctx.always_on and all(state.xi):
        if ctx.total_alpha == 0:
            x = -1
        else:
            x = bisect.bisect_right(ctx.cum_alpha, rng.random() * ctx.total_alpha)
            x = min(x, ctx.n - 1)
    else:
        weights = ctx.alpha_arr * np.asarray(state.xi, dtype=bool)
        cum = np.cumsum(weights)
        total = cum[-1] if ctx.n else 0.0
        if total <= 0:
            x = -1
        else:
            x = int(np.searchsorted(cum, rng.random() * total, side="right"))
            x = min(x, ctx.n - 1)
    if x < 0:
        _record(state, params, "noop", -1, -1, -1)
    else:
        _activate(ctx, state, params, x, rng)
    _finish_step(ctx, state, params)
    return state


def step_continuous(instance: Instance, state: SimState, params: SimParams, rng: np.random.Generator) -> SimState:
    """Process the next event of the exponential clock race."""
    ctx = _context(instance)
    xi = state.xi
    total = 0.0
    for x in range(ctx.n):
        total += (ctx.nu_off[x] + ctx.nu_act[x]) if xi[x] else ctx.nu_on[x]
    if total <= 0:
        raise ValueError("all clock rates are zero")
    state.t += rng.standard_exponential() / total
    u = rng.random() * total
    for x in range(ctx.n):
        if xi[x]:
            if u < ctx.nu_off[x]:
                xi[x] = False
                _record(state, params, "off", x, -1, -1)
                break
            u -= ctx.nu_off[x]
            if u < ctx.nu_act[x]:
                _activate(ctx, state, params, x, rng)
                break
            u -= ctx.nu_act[x]
        else:
            if u < ctx.nu_on[x]:
                xi[x] = True
                _record(state, params, "on", x, -1, -1)
                break
            u -= ctx.nu_on[x]
    _finish_step(ctx, state, params)
    return state


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def simulate(instance: Instance, params: SimParams, *, W0: AllocationState | None = None,
             check_feasible: bool = True) -> tuple[SimState, Trajectory | None]:
    """Run the dynamics from ``W0`` (empty by default) up to the horizon."""
    if check_feasible and not feasible_by_flow(instance).feasible:
        warnings.warn("instance admits no complete allocation; the run cannot complete", RuntimeWarning)
    rng = make_rng(params.seed)
    state = initial_state(instance, params, W0)
    step = step_discrete if params.mode == "discrete" else step_continuous
    for _ in range(params.resolve_horizon(instance)):
        step(instance, state, params, rng)
    return state, state.log
