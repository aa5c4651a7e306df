"""Shared fixtures and independent oracles for the test suite."""

import itertools
import time

import numpy as np
import pytest

from alwabp import INFEASIBLE, Instance, brute_force_optimal, generate_instance, parse_instance

FIG1_TEXT = """\
alwabp 1
tasks 6
workers 3
times
4 inf 3
4 5 4
3 6 2
1 5 inf
1 2 3
6 4 inf
precedences
1 2
1 3
3 4
3 5
2 5
5 6
end
"""

SINGLE_TEXT = """\
alwabp 1
tasks 1
workers 1
times
7
precedences
end
"""

FIG1_EDGES = {(0, 1), (0, 2), (2, 3), (2, 4), (1, 4), (4, 5)}


@pytest.fixture
def fig1():
    return parse_instance(FIG1_TEXT)


@pytest.fixture
def single():
    return parse_instance(SINGLE_TEXT)


def closure_by_reachability(edges, n):
    """Brute-force reachability: repeatedly extend paths until stable."""
    reach = {(a, b) for a, b in edges}
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(reach), repeat=2):
            if b == c and (a, d) not in reach:
                reach.add((a, d))
                changed = True
    return reach


def rcmax_optimal(inst):
    """Exhaustive makespan optimum with precedence constraints dropped."""
    best = INFEASIBLE
    for combo in itertools.product(*inst.feasible_workers):
        loads = [0] * inst.n_workers
        for t, w in enumerate(combo):
            loads[w] += inst.times[t][w]
        best = min(best, max(loads))
    return best


def random_instance(seed, n_tasks=None, n_workers=None, variability=None, infeasibility=None):
    """Deterministic small random instance for property tests."""
    rng = np.random.Generator(np.random.PCG64(seed))
    if n_tasks is None:
        n_tasks = int(rng.integers(3, 9))
    if n_workers is None:
        n_workers = int(rng.integers(2, 4))
    if variability is None:
        variability = "low" if rng.random() < 0.5 else "high"
    if infeasibility is None:
        infeasibility = float(rng.choice([0.0, 0.1, 0.2]))
    base = [int(rng.integers(1, 11)) for _ in range(n_tasks)]
    edges = {(i, j) for i in range(n_tasks) for j in range(i + 1, n_tasks) if rng.random() < 0.3}
    return generate_instance(base, edges, n_workers, variability, infeasibility, seed)


def suite_params():
    """Factor grid of the 216-instance verification suite."""
    params = []
    for rep in range(3):
        for n_tasks in range(4, 10):
            for n_workers in (2, 3):
                for var in ("low", "high"):
                    for inf_frac in (0.0, 0.1, 0.2):
                        params.append((rep, n_tasks, n_workers, var, inf_frac))
    return params


def build_suite_instance(rep, n_tasks, n_workers, var, inf_frac):
    seed = (
        rep * 1_000_000
        + n_tasks * 10_000
        + n_workers * 1_000
        + (0 if var == "low" else 500)
        + round(inf_frac * 10)
    )
    rng = np.random.Generator(np.random.PCG64(seed))
    base = [int(rng.integers(1, 11)) for _ in range(n_tasks)]
    edges = {(i, j) for i in range(n_tasks) for j in range(i + 1, n_tasks) if rng.random() < 0.3}
    return generate_instance(base, edges, n_workers, var, inf_frac, seed)


@pytest.fixture(scope="session")
def small_suite():
    """The seeded verification suite with exhaustive optima (INFEASIBLE for
    instances without a valid assignment)."""
    t0 = time.perf_counter()
    items = []
    for params in suite_params():
        inst = build_suite_instance(*params)
        items.append((params, inst, brute_force_optimal(inst)))
    return {"items": items, "oracle_elapsed": time.perf_counter() - t0}
