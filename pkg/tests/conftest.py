import numpy as np
import pytest
from hypothesis import strategies as st

from storagegame.model import AllocationState, make_instance


def random_instance(rng, n_min=2, n_max=6, alpha_max=3, beta_max=4, p_edge=0.5, k_a=None, **kw):
    """Random small instance with possibly sparse, asymmetric edges."""
    n = int(rng.integers(n_min, n_max + 1))
    edges = [(x, y) for x in range(n) for y in range(n) if x != y and rng.random() < p_edge]
    alpha = rng.integers(0, alpha_max + 1, n).tolist()
    beta = rng.integers(0, beta_max + 1, n).tolist()
    lam = rng.random(n).tolist()
    if k_a is None:
        k_a = float(rng.choice([0.0, 0.05, 0.3]))
    return make_instance(edges, alpha, beta, lam, n=n, k_c=float(rng.uniform(0.2, 2.0)), k_a=k_a, **kw)


def random_partial_state(inst, rng, fill=0.7):
    """Random state obeying (P1)-(P3), built atom by atom."""
    W = AllocationState(inst.n)
    for x in range(inst.n):
        for _ in range(inst.alpha[x]):
            if rng.random() > fill:
                continue
            free = [y for y in inst.neighbors[x] if W.col_tot[y] < inst.beta[y]]
            if free:
                W.add(x, int(rng.choice(free)), 1)
    return W


@st.composite
def instance_and_state(draw, n_max=6):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n_max=n_max)
    return inst, random_partial_state(inst, rng), rng


@pytest.fixture
def toy3():
    """n=3 complete graph, unit demands and capacity 2."""
    return make_instance([(x, y) for x in range(3) for y in range(3) if x != y], 1, 2, 1.0)


@pytest.fixture
def example25():
    """Three units, one dominant resource (lambda_0 - 1 > lambda_1 = lambda_2 = 0)."""
    edges = [(x, y) for x in range(3) for y in range(3) if x != y]
    return make_instance(edges, [7, 35, 14], [35, 21, 28], [2.0, 0.0, 0.0], k_c=1.0, k_a=0.0)


def example25_state(a, b):
    return AllocationState.from_array([[0, a, 7 - a], [b, 0, 35 - b], [35 - b, b - 21, 0]])


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
