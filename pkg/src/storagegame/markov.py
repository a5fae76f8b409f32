"""Exact analysis of the continuous-time chain on tiny instances.

The chain lives on ``{0,1}^n x (complete allocation states)``.  Its
generator is assembled from the rate table (on/off switches and
distribution moves); the closed-form invariant law

    mu(xi, W) ~ prod_{on} nu_on * prod_{off} nu_off * multinom(alpha; W) * exp(gamma Psi(W))

is checked against it through detailed balance and an independent
null-space solve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .feasibility import strictly_feasible
from .game import StateSpaceTooLarge, enumerate_complete_states, potential
from .model import AllocationState, Instance

DEFAULT_BOUND = 10**5
EPS = 1e-300


class StateIndex:
    """Bijection between ``(xi, W)`` pairs and ``0..size-1``.

    ``xi`` is encoded as an ``n``-bit mask (bit ``x`` set when ``x`` is on);
    index = ``mask * len(states) + position of W``.
    """

    def __init__(self, instance: Instance, bound: int = DEFAULT_BOUND):
        n = instance.n
        limit = max(bound >> n, 0)
        try:
            self.states: list[AllocationState] = list(enumerate_complete_states(instance, limit))
        except StateSpaceTooLarge as exc:
            raise ValueError(f"state space exceeds {bound} (n={n}); use n <= 4 with small alpha") from exc
        self.n = n
        self.position = {W.key(): i for i, W in enumerate(self.states)}

    @property
    def size(self) -> int:
        return (1 << self.n) * len(self.states)

    def index(self, mask: int, W: AllocationState) -> int:
        return mask * len(self.states) + self.position[W.key()]

    def decode(self, i: int) -> tuple[int, AllocationState]:
        mask, pos = divmod(i, len(self.states))
        return mask, self.states[pos]

    @staticmethod
    def xi_of(mask: int, n: int) -> list[bool]:
        return [bool(mask >> x & 1) for x in range(n)]


@dataclass
class Generator:
    index: StateIndex
    rates: sparse.csr_matrix  # off-diagonal rates; diagonal holds minus the row sum

    @property
    def size(self) -> int:
        return self.rates.shape[0]


def _gibbs_weights(instance: Instance, xi, W: AllocationState, x: int, src: int, gamma: float):
    """Targets and probabilities for moving one atom of ``x`` off ``src``."""
    ys, us = [], []
    for y in instance.neighbors[x]:
        if not xi[y]:
            continue
        load = W.col_tot[y] - (1 if y == src else 0)
        own = W[x, y] - (1 if y == src else 0)
        if load >= instance.beta[y]:
            continue
        ys.append(y)
        us.append(instance.lam[y] - instance.k_c * (load + 1) / instance.beta[y] + instance.k_a * (own + 1))
    top = max(us)
    w = np.exp(gamma * (np.array(us) - top))
    return ys, w / w.sum()


def build_generator(instance: Instance, gamma: float, bound: int = DEFAULT_BOUND) -> Generator:
    """Transition-rate matrix restricted to complete allocation states."""
    if not strictly_feasible(instance):
        warnings.warn("instance is not strictly feasible; the chain may not be ergodic", RuntimeWarning)
    index = StateIndex(instance, bound)
    n = instance.n
    m = len(index.states)
    rows, cols, vals = [], [], []
    for mask in range(1 << n):
        xi = StateIndex.xi_of(mask, n)
        for pos, W in enumerate(index.states):
            i = mask * m + pos
            for x in range(n):
                flipped = mask ^ (1 << x)
                rate = instance.nu_off[x] if xi[x] else instance.nu_on[x]
                if rate > 0:
                    rows.append(i)
                    cols.append(flipped * m + pos)
                    vals.append(rate)
            for x in range(n):
                a = instance.alpha[x]
                if not xi[x] or a == 0 or instance.nu_act[x] == 0:
                    continue
                for src, count in W.rows[x].items():
                    if not xi[src]:
                        continue
                    ys, probs = _gibbs_weights(instance, xi, W, x, src, gamma)
                    for y, p in zip(ys, probs):
                        if y == src or p == 0:
                            continue
                        W2 = W.copy()
                        W2.add(x, src, -1)
                        W2.add(x, y, 1)
                        rows.append(i)
                        cols.append(mask * m + index.position[W2.key()])
                        vals.append(instance.nu_act[x] * count / a * p)
    size = index.size
    Q = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    Q.sum_duplicates()
    Q = Q - sparse.diags(np.asarray(Q.sum(axis=1)).ravel())
    return Generator(index, Q.tocsr())


def log_weights(instance: Instance, gamma: float, index: StateIndex) -> np.ndarray:
    """Unnormalised log of the closed-form invariant law over ``index``."""
    n = instance.n
    with np.errstate(divide="ignore"):
        log_on = np.log(np.array(instance.nu_on, dtype=float))
        log_off = np.log(np.array(instance.nu_off, dtype=float))
    log_alpha_fact = sum(math.lgamma(a + 1) for a in instance.alpha)
    w_part = np.array([
        log_alpha_fact - sum(math.lgamma(v + 1) for _, _, v in W.entries())
        + gamma * float(potential(instance, W))
        for W in index.states
    ])
    out = np.empty(index.size)
    m = len(index.states)
    for mask in range(1 << n):
        on = np.array([mask >> x & 1 for x in range(n)], dtype=bool)
        churn = log_on[on].sum() + log_off[~on].sum()
        out[mask * m:(mask + 1) * m] = churn + w_part
    return out


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    finite = np.isfinite(logw)
    if not finite.any():
        raise ValueError("every state has zero weight")
    p = np.zeros_like(logw)
    p[finite] = np.exp(logw[finite] - logw[finite].max())
    return p / p.sum()


def stationary_closed_form(instance: Instance, gamma: float, index: StateIndex | None = None) -> np.ndarray:
    """Closed-form invariant law, normalised in log space."""
    index = index or StateIndex(instance)
    if any(v == 0 for v in instance.nu_on + instance.nu_off):
        warnings.warn("zero on/off rates: some functional states carry zero weight", RuntimeWarning)
    return _normalize_log(log_weights(instance, gamma, index))


def marginal_over_xi(p: np.ndarray, index: StateIndex) -> np.ndarray:
    return p.reshape(1 << index.n, len(index.states)).sum(axis=0)


def reduced_closed_form(instance: Instance, gamma: float, index: StateIndex) -> np.ndarray:
    """Law of ``W`` alone: ``multinom(alpha; W) * exp(gamma Psi(W))`` normalised."""
    logw = np.array([
        sum(math.lgamma(a + 1) for a in instance.alpha)
        - sum(math.lgamma(v + 1) for _, _, v in W.entries())
        + gamma * float(potential(instance, W))
        for W in index.states
    ])
    return _normalize_log(logw)


def check_detailed_balance(instance: Instance, gamma: float, generator: Generator | None = None) -> float:
    """Largest relative violation of ``rho_i Q_ij = rho_j Q_ji`` over all pairs."""
    gen = generator or build_generator(instance, gamma)
    logw = log_weights(instance, gamma, gen.index)
    finite = np.isfinite(logw)
    rho = np.zeros_like(logw)
    rho[finite] = np.exp(logw[finite] - logw[finite].max())
    off = gen.rates - sparse.diags(gen.rates.diagonal())
    off = off.tocsr()
    off.eliminate_zeros()
    flow = sparse.diags(rho) @ off
    back = flow.T.tocsr()
    pattern = (abs(flow) + abs(back)).tocoo()
    if pattern.nnz == 0:
        return 0.0
    a = np.asarray(flow.tocsr()[pattern.row, pattern.col]).ravel()
    b = np.asarray(back[pattern.row, pattern.col]).ravel()
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(a, b), EPS)))


@dataclass
class StationarySolution:
    pi: np.ndarray | None
    classes: list[np.ndarray]
    per_class: list[np.ndarray]

    @property
    def unique(self) -> bool:
        return self.pi is not None


def _solve_block(Q: np.ndarray) -> np.ndarray:
    k = Q.shape[0]
    if k == 1:
        return np.ones(1)
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def solve_stationary(generator: Generator) -> StationarySolution:
    """Invariant law from the generator's left null space.

    The recurrent (closed) communicating classes are found first; if there
    is exactly one, its law extended by zeros is returned as ``pi``.
    Otherwise ``pi`` is ``None`` and each closed class gets its own law.
    """
    Q = generator.rates
    off = Q - sparse.diags(Q.diagonal())
    off = off.tocsr()
    off.eliminate_zeros()
    ncomp, labels = connected_components(off, directed=True, connection="strong")
    closed = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        leaving = off[members].tocoo()
        if np.all(labels[leaving.col] == c):
            closed.append(members)
    dense = Q.toarray()
    per_class = [_solve_block(dense[np.ix_(m, m)]) for m in closed]
    if len(closed) == 1:
        pi = np.zeros(Q.shape[0])
        pi[closed[0]] = per_class[0]
        return StationarySolution(pi, closed, per_class)
    return StationarySolution(None, closed, per_class)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def check_L_connected(instance: Instance, bound: int = DEFAULT_BOUND) -> bool:
    """Connectivity of the move graph on complete states with every unit on."""
    states = list(enumerate_complete_states(instance, bound))
    if not states:
        return False
    position = {W.key(): i for i, W in enumerate(states)}
    rows, cols = [], []
    for i, W in enumerate(states):
        for x in range(instance.n):
            if instance.alpha[x] == 0 or instance.nu_act[x] == 0:
                continue
            for src in W.rows[x]:
                for y in instance.neighbors[x]:
                    if y == src or W.col_tot[y] >= instance.beta[y]:
                        continue
                    W2 = W.copy()
                    W2.add(x, src, -1)
                    W2.add(x, y, 1)
                    rows.append(i)
                    cols.append(position[W2.key()])
    graph = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(states), len(states)))
    ncomp, _ = connected_components(graph, directed=False)
    return ncomp == 1


def empirical_occupation(instance: Instance, gamma: float, events: int, seed: int,
                         index: StateIndex | None = None) -> np.ndarray:
    """Time-weighted occupation of the continuous dynamics at fixed ``gamma``.

    Only time spent in complete states counts; the result is normalised
    over ``index``.
    """
    from .dynamics import SimParams, initial_state, make_rng, step_continuous

    index = index or StateIndex(instance)
    params = SimParams(mode="continuous", schedule="fixed", gamma0=gamma, record="none")
    rng = make_rng(seed)
    state = initial_state(instance, params)
    occupation = np.zeros(index.size)
    total_alpha = instance.total_alpha
    m = len(index.states)
    cache: dict = {}
    for _ in range(events):
        t0 = state.t
        complete = state.allocated == total_alpha
        if complete:
            key = state.W.key()
            pos = cache.get(key)
            if pos is None:
                pos = cache[key] = index.position[key]
            mask = sum(1 << x for x, on in enumerate(state.xi) if on)
        step_continuous(instance, state, params, rng)
        if complete:
            occupation[mask * m + pos] += state.t - t0
    return occupation / occupation.sum()
