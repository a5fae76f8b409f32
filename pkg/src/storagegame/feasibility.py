"""Existence of complete allocations.

Two independent routes decide whether every unit can place all its atoms:

* :func:`feasible_by_subsets` enumerates every nonempty set of units ``D``
  and checks ``sum(alpha[D]) <= sum(beta[N(D)])`` directly (small ``n``).
* :func:`feasible_by_flow` solves a bipartite max-flow problem and reads an
  allocation (or a violating set, from the min cut) off the result.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import AllocationState, Instance

MAX_ENUMERATION_UNITS = 22


class TooLargeError(ValueError):
    """Raised when an exhaustive routine is asked for too many units."""


@dataclass
class FeasibilityReport:
    feasible: bool
    allocation: AllocationState | None = None
    violating_set: tuple[int, ...] = ()
    demand: int = 0
    capacity: int = 0
    strict: bool | None = None

    @property
    def witness(self):
        return self.allocation if self.feasible else self.violating_set


def _neighbor_masks(instance: Instance) -> list[int]:
    masks = []
    for nbrs in instance.neighbors:
        m = 0
        for y in nbrs:
            m |= 1 << y
        masks.append(m)
    return masks


def _subset_tables(instance: Instance):
    """Per-mask sums of alpha, of beta, and neighbourhood masks.

    Built by doubling: entries for masks with top bit ``i`` are derived from
    the entries below ``2**i``.
    """
    n = instance.n
    size = 1 << n
    alpha_sum = np.zeros(size, dtype=np.int64)
    beta_sum = np.zeros(size, dtype=np.int64)
    nbr = np.zeros(size, dtype=np.int64)
    masks = _neighbor_masks(instance)
    for i in range(n):
        lo, hi = 1 << i, 1 << (i + 1)
        alpha_sum[lo:hi] = alpha_sum[:lo] + instance.alpha[i]
        beta_sum[lo:hi] = beta_sum[:lo] + instance.beta[i]
        nbr[lo:hi] = nbr[:lo] | masks[i]
    return alpha_sum, beta_sum, nbr


def _members(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def feasible_by_subsets(instance: Instance, *, with_allocation: bool = False) -> FeasibilityReport:
    """Exhaustive check of the Hall-type condition over all nonempty ``D``.

    The first violating set (lowest bitmask) is returned as the witness.  The
    verdict never touches the flow code; ``with_allocation=True`` attaches a
    flow-built allocation to feasible reports for convenience.
    """
    n = instance.n
    if n > MAX_ENUMERATION_UNITS:
        raise TooLargeError(f"subset enumeration limited to n <= {MAX_ENUMERATION_UNITS}, got {n}")
    alpha_sum, beta_sum, nbr = _subset_tables(instance)
    slack = beta_sum[nbr] - alpha_sum
    slack[0] = 0
    bad = np.flatnonzero(slack < 0)
    if bad.size:
        mask = int(bad[0])
        return FeasibilityReport(
            feasible=False,
            violating_set=_members(mask),
            demand=int(alpha_sum[mask]),
            capacity=int(beta_sum[nbr[mask]]),
        )
    report = FeasibilityReport(feasible=True)
    if with_allocation:
        report.allocation = feasible_by_flow(instance).allocation
    return report


class _Dinic:
    """Integer max-flow on an adjacency-list residual graph."""

    def __init__(self, size: int):
        self.size = size
        self.head: list[list[int]] = [[] for _ in range(size)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, c: int) -> int:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)
        return len(self.to) - 2

    def _levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.size
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                if self.cap[e] > 0 and level[self.to[e]] < 0:
                    level[self.to[e]] = level[u] + 1
                    queue.append(self.to[e])
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        while (level := self._levels(s, t)) is not None:
            it = [0] * self.size
            while pushed := self._push(s, t, level, it):
                flow += pushed
        return flow

    def _push(self, s: int, t: int, level: list[int], it: list[int]) -> int:
        # iterative DFS along the level graph; returns the bottleneck pushed
        path: list[int] = []
        u = s
        while True:
            if u == t:
                amount = min(self.cap[e] for e in path)
                for e in path:
                    self.cap[e] -= amount
                    self.cap[e ^ 1] += amount
                return amount
            edges = self.head[u]
            advanced = False
            while it[u] < len(edges):
                e = edges[it[u]]
                v = self.to[e]
                if self.cap[e] > 0 and level[v] == level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if advanced:
                continue
            if not path:
                return 0
            level[u] = -1
            e = path.pop()
            u = self.to[e ^ 1]
            it[u] += 1

    def reachable(self, s: int) -> list[bool]:
        seen = [False] * self.size
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > 0 and not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen


def _flow_report(instance: Instance, alpha) -> FeasibilityReport:
    n = instance.n
    source, sink = 2 * n, 2 * n + 1
    net = _Dinic(2 * n + 2)
    middle: list[tuple[int, int, int]] = []
    for x in range(n):
        if alpha[x] == 0:
            continue
        net.add_edge(source, x, alpha[x])
        for y in instance.neighbors[x]:
            middle.append((x, y, net.add_edge(x, n + y, alpha[x])))
    for y in range(n):
        if instance.beta[y]:
            net.add_edge(n + y, sink, instance.beta[y])
    demand = int(sum(alpha))
    flow = net.max_flow(source, sink)
    if flow == demand:
        state = AllocationState(n)
        for x, y, e in middle:
            if net.cap[e ^ 1]:
                state.add(x, y, net.cap[e ^ 1])
        return FeasibilityReport(feasible=True, allocation=state)
    # residual-reachable units form a set whose neighbourhood lies on the
    # source side, so its demand exceeds its neighbourhood capacity
    seen = net.reachable(source)
    members = tuple(x for x in range(n) if seen[x])
    cover = set()
    for x in members:
        cover.update(instance.neighbors[x])
    return FeasibilityReport(
        feasible=False,
        violating_set=members,
        demand=int(sum(alpha[x] for x in members)),
        capacity=int(sum(instance.beta[y] for y in cover)),
    )


def feasible_by_flow(instance: Instance) -> FeasibilityReport:
    """Decide feasibility by max-flow ``source -> x -> y -> sink``."""
    return _flow_report(instance, list(instance.alpha))


def strictly_feasible(instance: Instance) -> bool:
    """True iff ``sum(alpha[A]) < sum(beta[N(A)])`` for every nonempty ``A``.

    Equivalent to feasibility of each of the ``n`` problems obtained by giving
    one extra atom to a single unit.
    """
    alpha = list(instance.alpha)
    for x in range(instance.n):
        alpha[x] += 1
        ok = _flow_report(instance, alpha).feasible
        alpha[x] -= 1
        if not ok:
            return False
    return True


def check(instance: Instance) -> FeasibilityReport:
    """Flow verdict plus strictness, the front-end used by the CLI."""
    report = feasible_by_flow(instance)
    report.strict = report.feasible and strictly_feasible(instance)
    return report


def _irreducible(mask: int, masks: list[int]) -> bool:
    members = _members(mask)
    start = members[0]
    seen = 1 << start
    frontier = [start]
    while frontier:
        u = frontier.pop()
        for v in members:
            if not seen >> v & 1 and masks[u] & masks[v]:
                seen |= 1 << v
                frontier.append(v)
    return seen == mask


def maximal_irreducible_subsets(instance: Instance) -> list[tuple[int, ...]]:
    """Maximal irreducible sets of units.

    ``D`` is maximal when adding any other unit enlarges ``N(D)`` and
    irreducible when it cannot be split into two nonempty parts with
    disjoint neighbourhoods.  Units with no out-neighbours never enlarge
    ``N(D)``; they are reported as singletons and left out of every other set.
    """
    n = instance.n
    if n > MAX_ENUMERATION_UNITS:
        raise TooLargeError(f"subset enumeration limited to n <= {MAX_ENUMERATION_UNITS}, got {n}")
    masks = _neighbor_masks(instance)
    isolated = [x for x in range(n) if masks[x] == 0]
    active = [x for x in range(n) if masks[x]]
    found: list[tuple[int, ...]] = [(z,) for z in isolated]
    k = len(active)
    for sub in range(1, 1 << k):
        mask = 0
        cover = 0
        for i in range(k):
            if sub >> i & 1:
                mask |= 1 << active[i]
                cover |= masks[active[i]]
        closure = 0
        for x in active:
            if masks[x] & ~cover == 0:
                closure |= 1 << x
        if closure != mask:
            continue
        if _irreducible(mask, masks):
            found.append(_members(mask))
    return sorted(found, key=lambda s: (len(s), s))


def condition_holds_on(instance: Instance, sets) -> bool:
    """Check the Hall-type inequality on the given sets only."""
    for members in sets:
        cover = set()
        for x in members:
            cover.update(instance.neighbors[x])
        if sum(instance.alpha[x] for x in members) > sum(instance.beta[y] for y in cover):
            return False
    return True
