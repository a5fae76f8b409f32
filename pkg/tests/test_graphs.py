from collections import Counter

import pytest

from storagegame import graphs


def test_complete_and_line():
    assert len(graphs.complete_graph(5)) == 20
    assert graphs.line_graph(3) == [(0, 1), (1, 2)]
    assert sorted(graphs.line_graph(3, directed=False)) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_grid():
    edges = graphs.grid_graph(3)
    out = Counter(x for x, _ in edges)
    assert out[4] == 4 and out[0] == 2 and out[1] == 3
    assert set(edges) == {(b, a) for a, b in edges}


@pytest.mark.parametrize("n,d,seed", [(50, 10, 1), (100, 10, 2), (1000, 10, 3), (12, 3, 0)])
def test_random_regular(n, d, seed):
    edges = graphs.random_regular_graph(n, d, seed)
    assert len(edges) == len(set(edges)) == n * d
    assert all(a != b for a, b in edges)
    assert set(edges) == {(b, a) for a, b in edges}
    out = Counter(a for a, _ in edges)
    assert all(out[x] == d for x in range(n))
    assert edges == graphs.random_regular_graph(n, d, seed)


def test_random_regular_impossible():
    with pytest.raises(ValueError):
        graphs.random_regular_graph(5, 3, 0)
    with pytest.raises(ValueError):
        graphs.random_regular_graph(4, 4, 0)
