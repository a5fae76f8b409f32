"""Edge-list generators for the graph families used in scenarios."""

from __future__ import annotations

from collections import Counter

import numpy as np


def complete_graph(n: int) -> list[tuple[int, int]]:
    return [(x, y) for x in range(n) for y in range(n) if x != y]


def line_graph(n: int, directed: bool = True) -> list[tuple[int, int]]:
    edges = [(i, i + 1) for i in range(n - 1)]
    if not directed:
        edges += [(i + 1, i) for i in range(n - 1)]
    return edges


def grid_graph(side: int) -> list[tuple[int, int]]:
    """Symmetric 4-neighbour grid on ``{0..side-1}^2``; unit ``(i, j)`` is ``i*side + j``."""
    edges = []
    for i in range(side):
        for j in range(side):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < side and 0 <= b < side:
                    edges.append((i * side + j, a * side + b))
    return edges


def random_regular_graph(n: int, d: int, seed: int, max_tries: int = 1000) -> list[tuple[int, int]]:
    """Uniform-ish random simple ``d``-regular graph, as symmetric directed edges.

    Pairing model: stubs are shuffled and paired; pairs that would form a
    self-loop or a repeated edge are put back and re-paired, and the whole
    attempt restarts if no admissible pair remains.
    """
    if d >= n or (n * d) % 2:
        raise ValueError(f"no simple {d}-regular graph on {n} vertices")
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max_tries):
        pairs = _try_pairing(n, d, rng)
        if pairs is not None:
            edges = sorted(pairs)
            return sorted(edges + [(b, a) for a, b in edges])
    raise RuntimeError(f"pairing failed {max_tries} times for n={n}, d={d}")


def _try_pairing(n: int, d: int, rng) -> set[tuple[int, int]] | None:
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    while stubs.size:
        rng.shuffle(stubs)
        leftover: Counter = Counter()
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover[a] += 1
                leftover[b] += 1
        if leftover and not _admissible(edges, leftover):
            return None
        stubs = np.array(sorted(leftover.elements()), dtype=np.int64)
    return edges


def _admissible(edges, leftover: Counter) -> bool:
    nodes = list(leftover)
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            s, t = (a, b) if a < b else (b, a)
            if (s, t) not in edges:
                return True
    return False
