"""Core domain types for the storage allocation game.

Units are indexed ``0..n-1``.  A unit acts both as a *user* (it has
``alpha[x]`` atoms to back up on its out-neighbours) and as a *resource*
(it can hold ``beta[y]`` atoms from its in-neighbours).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class InstanceError(ValueError):
    """Raised when an instance violates one of its invariants."""


class MoveError(ValueError):
    """Raised when a move would break (P1)-(P3) or has no atom to move."""


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem description.

    ``neighbors[x]`` is the sorted tuple of resources unit ``x`` may use.
    Use :func:`make_instance` to build one from raw data; it fills defaults
    and runs :func:`validate`.
    """

    n: int
    neighbors: tuple[tuple[int, ...], ...]
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    lam: tuple[float, ...]
    k_c: float = 1.0
    k_a: float = 0.0
    nu_on: tuple[float, ...] = ()
    nu_off: tuple[float, ...] = ()
    nu_act: tuple[float, ...] = ()
    p_on: tuple[float, ...] = ()
    in_neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        incoming: list[list[int]] = [[] for _ in range(self.n)]
        for x, nbrs in enumerate(self.neighbors):
            for y in nbrs:
                if 0 <= y < self.n:
                    incoming[y].append(x)
        object.__setattr__(self, "in_neighbors", tuple(tuple(v) for v in incoming))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(x, y) for x, nbrs in enumerate(self.neighbors) for y in nbrs]

    def has_edge(self, x: int, y: int) -> bool:
        return y in self.neighbors[x]

    @property
    def total_alpha(self) -> int:
        return sum(self.alpha)

    @property
    def lambda_max(self) -> float:
        return max(self.lam) if self.n else 0.0

    def replace(self, **changes) -> "Instance":
        """Return a validated copy with some fields replaced."""
        data = {
            "n": self.n,
            "neighbors": self.neighbors,
            "alpha": self.alpha,
            "beta": self.beta,
            "lam": self.lam,
            "k_c": self.k_c,
            "k_a": self.k_a,
            "nu_on": self.nu_on,
            "nu_off": self.nu_off,
            "nu_act": self.nu_act,
            "p_on": self.p_on,
        }
        data.update(changes)
        return validate(Instance(**_normalized(data)))


def _normalized(data: dict) -> dict:
    out = dict(data)
    out["neighbors"] = tuple(tuple(sorted(set(int(y) for y in nb))) for nb in data["neighbors"])
    out["alpha"] = tuple(int(a) for a in data["alpha"])
    out["beta"] = tuple(int(b) for b in data["beta"])
    out["lam"] = tuple(float(v) for v in data["lam"])
    for key in ("nu_on", "nu_off", "nu_act", "p_on"):
        out[key] = tuple(float(v) for v in data[key])
    out["k_c"] = float(data["k_c"])
    out["k_a"] = float(data["k_a"])
    return out


def _per_unit(value, n: int, default: float) -> list[float]:
    if value is None:
        return [default] * n
    if np.isscalar(value):
        return [float(value)] * n
    return [float(v) for v in value]


def make_instance(
    edges: Iterable[tuple[int, int]],
    alpha: Sequence[int] | int,
    beta: Sequence[int] | int,
    lam: Sequence[float] | float = 1.0,
    *,
    n: int | None = None,
    k_c: float = 1.0,
    k_a: float = 0.0,
    nu_on: Sequence[float] | float | None = None,
    nu_off: Sequence[float] | float | None = None,
    nu_act: Sequence[float] | float | None = None,
    p_on: Sequence[float] | float | None = None,
) -> Instance:
    """Build and validate an instance from an edge list.

    Scalars are broadcast to every unit.  Rates default to ``nu_on = nu_act
    = 1``, ``nu_off = 0`` and ``p_on = 1`` (units always on).
    """
    edges = [(int(x), int(y)) for x, y in edges]
    if n is None:
        if not np.isscalar(alpha):
            n = len(alpha)
        elif not np.isscalar(beta):
            n = len(beta)
        else:
            n = 1 + max((max(e) for e in edges), default=-1)
    if np.isscalar(alpha):
        alpha = [int(alpha)] * n
    if np.isscalar(beta):
        beta = [int(beta)] * n
    if np.isscalar(lam):
        lam = [float(lam)] * n
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for x, y in edges:
        if not (0 <= x < n and 0 <= y < n):
            raise InstanceError(f"edge ({x}, {y}) references a unit outside 0..{n - 1}")
        neighbors[x].append(y)
    data = {
        "n": n,
        "neighbors": neighbors,
        "alpha": list(alpha),
        "beta": list(beta),
        "lam": list(lam),
        "k_c": k_c,
        "k_a": k_a,
        "nu_on": _per_unit(nu_on, n, 1.0),
        "nu_off": _per_unit(nu_off, n, 0.0),
        "nu_act": _per_unit(nu_act, n, 1.0),
        "p_on": _per_unit(p_on, n, 1.0),
    }
    return validate(Instance(**_normalized(data)))


def validate(instance: Instance) -> Instance:
    """Return ``instance`` unchanged if every invariant holds.

    Raises :class:`InstanceError` naming the first violated invariant.
    """
    n = instance.n
    if n < 0:
        raise InstanceError("negative unit count")
    for name in ("neighbors", "alpha", "beta", "lam", "nu_on", "nu_off", "nu_act", "p_on"):
        size = len(getattr(instance, name))
        if size != n:
            raise InstanceError(f"length mismatch: {name} has {size} entries, expected {n}")
    for x, nbrs in enumerate(instance.neighbors):
        for y in nbrs:
            if y == x:
                raise InstanceError(f"self-loop at unit {x}")
            if not 0 <= y < n:
                raise InstanceError(f"edge ({x}, {y}) references a unit outside 0..{n - 1}")
    for name in ("alpha", "beta"):
        for x, v in enumerate(getattr(instance, name)):
            if v < 0:
                raise InstanceError(f"negative {name}[{x}] = {v}")
    for name in ("k_c", "k_a"):
        v = getattr(instance, name)
        if not v >= 0:
            raise InstanceError(f"negative weight {name} = {v}")
    for name in ("nu_on", "nu_off", "nu_act"):
        for x, v in enumerate(getattr(instance, name)):
            if not v >= 0 or math.isinf(v):
                raise InstanceError(f"invalid rate {name}[{x}] = {v}")
    for x, v in enumerate(instance.p_on):
        if not 0.0 <= v <= 1.0:
            raise InstanceError(f"p_on[{x}] = {v} outside [0, 1]")
    for x, v in enumerate(instance.lam):
        if not math.isfinite(v):
            raise InstanceError(f"non-finite lambda[{x}]")
    return instance


class AllocationState:
    """Integer matrix ``w[x][y]`` of atoms of ``x`` stored at ``y``.

    Rows are kept as dictionaries of nonzero entries, with running row and
    column totals, so memory is proportional to the number of used edges.
    Invariants (P1)-(P3) are enforced by :func:`apply_move` and by the
    dynamics; :meth:`check` verifies them against an instance.
    """

    __slots__ = ("n", "rows", "row_tot", "col_tot")

    def __init__(self, n: int):
        self.n = n
        self.rows: list[dict[int, int]] = [{} for _ in range(n)]
        self.row_tot: list[int] = [0] * n
        self.col_tot: list[int] = [0] * n

    @classmethod
    def zeros(cls, n: int) -> "AllocationState":
        return cls(n)

    @classmethod
    def from_array(cls, array) -> "AllocationState":
        a = np.asarray(array)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"allocation matrix must be square, got shape {a.shape}")
        if np.any(a < 0) or np.any(a != np.round(a)):
            raise ValueError("allocation matrix must hold nonnegative integers")
        state = cls(a.shape[0])
        for x, y in zip(*np.nonzero(a)):
            state.add(int(x), int(y), int(a[x, y]))
        return state

    def to_array(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for x, row in enumerate(self.rows):
            for y, v in row.items():
                a[x, y] = v
        return a

    def __getitem__(self, key: tuple[int, int]) -> int:
        x, y = key
        return self.rows[x].get(y, 0)

    def add(self, x: int, y: int, delta: int = 1) -> None:
        """Add ``delta`` atoms at ``(x, y)`` without constraint checks."""
        v = self.rows[x].get(y, 0) + delta
        if v < 0:
            raise MoveError(f"entry ({x}, {y}) would become negative")
        if v:
            self.rows[x][y] = v
        else:
            self.rows[x].pop(y, None)
        self.row_tot[x] += delta
        self.col_tot[y] += delta

    def entries(self) -> Iterator[tuple[int, int, int]]:
        for x, row in enumerate(self.rows):
            for y, v in row.items():
                yield x, y, v

    def row_sums(self) -> np.ndarray:
        return np.array(self.row_tot, dtype=np.int64)

    def col_sums(self) -> np.ndarray:
        return np.array(self.col_tot, dtype=np.int64)

    @property
    def total(self) -> int:
        return sum(self.row_tot)

    def copy(self) -> "AllocationState":
        other = AllocationState(self.n)
        other.rows = [dict(r) for r in self.rows]
        other.row_tot = list(self.row_tot)
        other.col_tot = list(self.col_tot)
        return other

    def key(self) -> tuple:
        """Hashable canonical form (sorted nonzero entries)."""
        return tuple(sorted(self.entries()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, AllocationState):
            return NotImplemented
        return self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"AllocationState(n={self.n}, total={self.total}, nonzero={sum(map(len, self.rows))})"

    def is_complete(self, instance: Instance) -> bool:
        return all(r == a for r, a in zip(self.row_tot, instance.alpha))

    def check(self, instance: Instance) -> None:
        """Raise :class:`MoveError` if (P1)-(P3) fail for ``instance``."""
        if self.n != instance.n:
            raise MoveError(f"state has {self.n} units, instance has {instance.n}")
        for x, y, v in self.entries():
            if v < 0:
                raise MoveError(f"negative entry at ({x}, {y})")
            if not instance.has_edge(x, y):
                raise MoveError(f"(P1) atoms at non-edge ({x}, {y})")
        for x in range(self.n):
            if self.row_tot[x] != sum(self.rows[x].values()) or self.row_tot[x] > instance.alpha[x]:
                raise MoveError(f"(P2) row {x} holds {self.row_tot[x]} > alpha = {instance.alpha[x]}")
        cols = [0] * self.n
        for _, y, v in self.entries():
            cols[y] += v
        for y in range(self.n):
            if cols[y] != self.col_tot[y] or cols[y] > instance.beta[y]:
                raise MoveError(f"(P3) column {y} holds {cols[y]} > beta = {instance.beta[y]}")


def row_sums(state: AllocationState) -> np.ndarray:
    return state.row_sums()


def col_sums(state: AllocationState) -> np.ndarray:
    return state.col_sums()


def all_on(n: int) -> np.ndarray:
    """Functional state with every unit on (``xi[x] = True`` means on)."""
    return np.ones(n, dtype=bool)


class MoveKind(str, enum.Enum):
    ALLOCATION = "allocation"
    DISTRIBUTION = "distribution"


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    x: int
    target: int
    source: int | None = None
    t: float = 0.0

    def inverse(self) -> "Move":
        if self.kind is not MoveKind.DISTRIBUTION:
            raise MoveError("only distribution moves have an inverse move")
        return Move(MoveKind.DISTRIBUTION, self.x, self.source, self.target, self.t)


def apply_move(instance: Instance, state: AllocationState, move: Move) -> AllocationState:
    """Return a new state with ``move`` applied; ``state`` is left untouched."""
    x, y_new = move.x, move.target
    if not instance.has_edge(x, y_new):
        raise MoveError(f"non-edge target ({x}, {y_new})")
    out = state.copy()
    if move.kind is MoveKind.ALLOCATION:
        if state.row_tot[x] + 1 > instance.alpha[x]:
            raise MoveError(f"demand overflow: unit {x} already placed {state.row_tot[x]} of {instance.alpha[x]}")
        if state.col_tot[y_new] + 1 > instance.beta[y_new]:
            raise MoveError(f"capacity overflow at resource {y_new}")
        out.add(x, y_new, 1)
        return out
    y = move.source
    if y is None:
        raise MoveError("distribution move needs a source resource")
    if state[x, y] == 0:
        raise MoveError(f"zero-source: unit {x} stores nothing at {y}")
    if y == y_new:
        return out
    if state.col_tot[y_new] + 1 > instance.beta[y_new]:
        raise MoveError(f"capacity overflow at resource {y_new}")
    out.add(x, y, -1)
    out.add(x, y_new, 1)
    return out
