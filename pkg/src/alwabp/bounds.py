"""Lower bounds on the optimal cycle time.

Two relaxation families are implemented. Relaxing every task time to its
per-task minimum gives a homogeneous-line problem, bounded by LC1, LC2 and
LC3 (station windows). Dropping the precedence constraints gives makespan
minimization on unrelated parallel machines, bounded by a Lagrangian dual
of the cycle constraints (L1), its knapsack-based additive improvement
(L1a), a Lagrangian dual of the assignment constraints (L2), and a
disjunctive strengthening of either (L1a_bar, L2_bar).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

DEFAULT_L1_ITERS = 50
DEFAULT_L2_ITERS = 20

NATIVE_BOUNDS = ("LC1", "LC2", "LC3", "L1a_bar", "L2_bar")
ALL_BOUNDS = ("LC1", "LC2", "LC3", "L1", "L1a", "L1a_bar", "L2", "L2_bar")

L1A = "L1A"
L2 = "L2"


@dataclass
class BoundEntry:
    name: str
    value: int
    elapsed_s: float


@dataclass
class BoundReport:
    entries: list[BoundEntry] = field(default_factory=list)

    @property
    def best(self):
        return max(e.value for e in self.entries)

    def value(self, name):
        for e in self.entries:
            if e.name == name:
                return e.value
        raise KeyError(name)


@dataclass
class StationWindow:
    earliest: tuple
    latest: tuple


def _ceil_div(a, b):
    return -(-a // b)


# ---------------------------------------------------------------------------
# Homogeneous-line relaxation (task times replaced by their minima)


def lc1(inst):
    """max of the largest minimum task time and the average-load bound."""
    p = inst.min_times
    return max(max(p), _ceil_div(sum(p), inst.n_workers))


def lc2(inst):
    """Pigeonhole bound on descending-sorted minimum times."""
    return _lc2(sorted(inst.min_times, reverse=True), inst.n_workers)


def _lc2(p_desc, m):
    n = len(p_desc)
    best = 0
    for k in range(1, (n - 1) // m + 1):
        # sum of p_desc at 1-based positions k*m+1, k*m, ..., k*m+1-k
        top = k * m  # 0-based index of position k*m+1
        best = max(best, sum(p_desc[top - k : top + 1]))
    return best


def station_windows(inst, cycle_time):
    """Earliest and latest feasible station of each task at a candidate
    cycle time, both 1-based. The window may be empty (earliest > latest)."""
    pred_sums, succ_sums = _star_sums(inst)
    e, l = _windows(inst.min_times, pred_sums, succ_sums, inst.n_workers, cycle_time)
    return StationWindow(tuple(e), tuple(l))


def _star_sums(inst):
    p = inst.min_times
    pred = [sum(p[j] for j in inst.preds_star[t]) for t in range(inst.n_tasks)]
    succ = [sum(p[j] for j in inst.succs_star[t]) for t in range(inst.n_tasks)]
    return pred, succ


def _windows(p, pred_sums, succ_sums, m, c):
    earliest = [_ceil_div(pred_sums[t] + p[t], c) for t in range(len(p))]
    latest = [m + 1 - _ceil_div(succ_sums[t] + p[t], c) for t in range(len(p))]
    return earliest, latest


def lc3(inst):
    """Smallest cycle time for which every task has a non-empty station window."""
    pred_sums, succ_sums = _star_sums(inst)
    return _lc3(inst.min_times, pred_sums, succ_sums, inst.n_workers)


def _lc3(p, pred_sums, succ_sums, m):
    lo = max(1, max(p))
    hi = max(lo, sum(p))

    def feasible(c):
        e, l = _windows(p, pred_sums, succ_sums, m, c)
        return all(et <= lt for et, lt in zip(e, l))

    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


# ---------------------------------------------------------------------------
# Unrelated-parallel-machines relaxation


def _l1_ascent(times, max_iters):
    """Maximize the dual value sum_t min_w (lam_w * p_tw) over the simplex.

    Projected-subgradient ascent: the gradient component of machine w is the
    total (actual) time of the tasks currently cheapest on w; the direction is
    recentered so multipliers stay on the simplex, clipped at zero and
    renormalized. Any multiplier vector on the simplex yields a valid bound,
    so the running best is kept.
    """
    n_tasks, m = times.shape
    finite = np.isfinite(times)
    filled = np.where(finite, times, 0.0)
    lam = np.full(m, 1.0 / m)
    best_val = -math.inf
    best_lam = lam.copy()
    rows = np.arange(n_tasks)
    for k in range(1, max_iters + 1):
        weighted = np.where(finite, filled * lam, np.inf)
        value = weighted.min(axis=1).sum()
        if value > best_val:
            best_val = value
            best_lam = lam.copy()
        choice = weighted.argmin(axis=1)
        loads = np.bincount(choice, weights=filled[rows, choice], minlength=m)
        direction = loads - loads.mean()
        norm = np.abs(direction).max()
        if norm < 1e-12:
            break
        lam = lam + (0.5 / (m * k)) * direction / norm
        np.clip(lam, 0.0, None, out=lam)
        lam /= lam.sum()
    return best_val, best_lam


def _l1_value(times, max_iters):
    best_val, _ = _l1_ascent(times, max_iters)
    p_min_max = int(np.nanmin(np.where(np.isfinite(times), times, np.nan), axis=1).max())
    return max(math.ceil(best_val - 1e-9), p_min_max)


def bound_l1(inst, max_iters=DEFAULT_L1_ITERS):
    """Lagrangian bound from relaxing the per-worker cycle constraints;
    precedences are ignored. Monotone non-decreasing over iterations."""
    return _l1_value(inst.times_array, max_iters)


def knapsack_all_capacities(weights, profits, capacity):
    """Best 0/1-knapsack profit for every capacity 0..capacity (1-D DP)."""
    dp = np.zeros(capacity + 1)
    for w, p in zip(weights, profits):
        if w <= capacity and p > 0:
            np.maximum(dp[w:], dp[:-w] + p, out=dp[w:])
    return dp


def _knapsack_table(weights, profits, capacity):
    """Full DP table (items+1 rows) for traceback of one optimal subset."""
    table = np.zeros((len(weights) + 1, capacity + 1))
    for k, (w, p) in enumerate(zip(weights, profits), start=1):
        prev = table[k - 1]
        row = prev.copy()
        if w <= capacity and p > 0:
            np.maximum(row[w:], prev[:-w] + p, out=row[w:])
        table[k] = row
    return table


def _knapsack_selection(table, weights, capacity):
    # On a value tie the item is skipped, so lower-index items win.
    chosen = []
    c = capacity
    for k in range(len(weights), 0, -1):
        if table[k, c] != table[k - 1, c]:
            chosen.append(k - 1)
            c -= weights[k - 1]
    return chosen


def _l1_additive(times, l1, max_iters, cap=None):
    """Additive improvement of the cycle-constraint dual.

    With multipliers lam, any schedule of makespan c satisfies
    c >= phi(lam) + (total reassignment cost it pays), where a task moved off
    its cheapest machine pays at least the gap to its second-cheapest one.
    Tasks cheapest on machine w that stay on w must fit into capacity c, so
    the minimum cost is bounded through one all-capacities knapsack per
    machine, reused for every trial c of a binary search for the smallest c
    not proven impossible.
    """
    n_tasks, m = times.shape
    finite = np.isfinite(times)
    filled = np.where(finite, times, 0.0)
    _, lam = _l1_ascent(times, max_iters)
    weighted = np.where(finite, filled * lam, np.inf)
    choice = weighted.argmin(axis=1)
    phi = weighted.min(axis=1).sum()
    if m == 1:
        gaps = np.full(n_tasks, np.inf)
    else:
        two = np.partition(weighted, 1, axis=1)
        gaps = two[:, 1] - two[:, 0]

    forced_sum = [0] * m
    movable = [[] for _ in range(m)]  # (weight, gap) of non-forced tasks
    for t in range(n_tasks):
        w = int(choice[t])
        p = int(times[t, w])
        if math.isinf(gaps[t]):
            forced_sum[w] += p
        else:
            movable[w].append((p, float(gaps[t])))

    hi = sum(forced_sum) + sum(p for items in movable for p, _ in items)
    hi = max(hi, 1)
    if cap is not None:
        hi = min(hi, cap)
    lo = max(l1, 1)
    if lo > hi:
        return l1

    tables = []
    totals = []
    for w in range(m):
        weights = [p for p, _ in movable[w]]
        profits = np.array([g for _, g in movable[w]])
        tables.append(knapsack_all_capacities(weights, profits, hi))
        totals.append(float(profits.sum()))

    def passes(c):
        penalty = 0.0
        for w in range(m):
            rem = c - forced_sum[w]
            if rem < 0:
                return False
            penalty += totals[w] - tables[w][min(rem, hi)]
        return phi + penalty <= c + 1e-9

    if not passes(hi):
        # every c <= hi is proven impossible
        return max(l1, hi + 1)
    a, b = lo, hi
    while a < b:
        mid = (a + b) // 2
        if passes(mid):
            b = mid
        else:
            a = mid + 1
    return max(l1, a)


def improve_l1_additive(inst, l1, max_iters=DEFAULT_L1_ITERS):
    """Knapsack-based additive improvement; never below the input bound."""
    return _l1_additive(inst.times_array, l1, max_iters)


def _disjunction_value(times, base):
    """Strengthening by a disjunction on the machine of a single task.

    For each task, the bound conditional on placing it on machine w is the
    max of its own time there, the largest other minimum time, and the
    average-load bound with its time replaced; the minimum over feasible
    machines is valid, and so is the maximum over tasks.
    """
    n_tasks, m = times.shape
    p_min = np.nanmin(np.where(np.isfinite(times), times, np.nan), axis=1)
    total = p_min.sum()
    if n_tasks == 1:
        others_max = np.zeros(1)
    else:
        order = np.argsort(p_min)
        top, second = order[-1], order[-2]
        others_max = np.full(n_tasks, p_min[top])
        others_max[top] = p_min[second]
    rest = total - p_min
    conditional = np.maximum(times, others_max[:, None])
    conditional = np.maximum(conditional, np.ceil((rest[:, None] + times) / m - 1e-9))
    per_task = np.min(conditional, axis=1)  # inf cells dominate and drop out
    return max(base, int(per_task.max()))


def disjunction_improve(inst, base, which=L1A):
    """Disjunctive strengthening applied to a bound of the named family
    (the construction is shared by both). Never below the input."""
    if which not in (L1A, L2):
        raise ValueError(f"unknown bound family {which!r}")
    return _disjunction_value(inst.times_array, base)


def _l2_value(times, max_iters):
    """Lagrangian bound from relaxing the task assignment constraints.

    For multipliers mu, a makespan-c schedule packs, per machine, tasks of
    mu-value at least sum(mu) in total, so the smallest c whose per-machine
    all-capacities knapsacks reach sum(mu) is a valid bound. Multipliers are
    updated by a subgradient step on the coverage counts of the knapsack
    solutions; the best bound over the iterations is kept.
    """
    n_tasks, m = times.shape
    finite = np.isfinite(times)
    p_min = np.nanmin(np.where(finite, times, np.nan), axis=1)
    mu = p_min.astype(float).copy()
    step0 = max(1.0, float(p_min.mean()) / 2.0)
    best = 1

    items = []  # per machine: (task ids, integer weights)
    for w in range(m):
        tasks = np.flatnonzero(finite[:, w])
        items.append((tasks, [int(times[t, w]) for t in tasks]))
    caps = [max(sum(ws), 1) for _, ws in items]
    hi = max(caps)

    for it in range(1, max_iters + 1):
        mu_plus = np.clip(mu, 0.0, None)
        target = float(mu.sum())
        tables = []
        g = np.zeros(hi + 1)
        for w in range(m):
            tasks, weights = items[w]
            table = _knapsack_table(weights, mu_plus[tasks], caps[w])
            tables.append(table)
            last = table[-1]
            g[: caps[w] + 1] += last
            g[caps[w] + 1 :] += last[-1]
        reached = np.flatnonzero(g >= target - 1e-9)
        c_star = int(reached[0]) if reached.size else hi + 1
        best = max(best, c_star)

        coverage = np.zeros(n_tasks)
        for w in range(m):
            tasks, weights = items[w]
            sel = _knapsack_selection(tables[w], weights, min(c_star, caps[w]))
            for k in sel:
                coverage[tasks[k]] += 1
        mu = mu + (step0 / it) * (1.0 - coverage)
    return best


def bound_l2(inst, max_iters=DEFAULT_L2_ITERS):
    """Assignment-relaxation Lagrangian bound; deterministic."""
    return _l2_value(inst.times_array, max_iters)


# ---------------------------------------------------------------------------


def all_bounds(inst, include=NATIVE_BOUNDS, l1_iters=DEFAULT_L1_ITERS, l2_iters=DEFAULT_L2_ITERS):
    """Compute the requested bounds and report values with compute times."""
    report = BoundReport()
    for name in include:
        t0 = time.perf_counter()
        if name == "LC1":
            value = lc1(inst)
        elif name == "LC2":
            value = lc2(inst)
        elif name == "LC3":
            value = lc3(inst)
        elif name == "L1":
            value = bound_l1(inst, l1_iters)
        elif name == "L1a":
            value = improve_l1_additive(inst, bound_l1(inst, l1_iters), l1_iters)
        elif name == "L1a_bar":
            l1 = bound_l1(inst, l1_iters)
            value = disjunction_improve(inst, improve_l1_additive(inst, l1, l1_iters), L1A)
        elif name == "L2":
            value = bound_l2(inst, l2_iters)
        elif name == "L2_bar":
            value = disjunction_improve(inst, bound_l2(inst, l2_iters), L2)
        else:
            raise ValueError(f"unknown bound {name!r}")
        report.entries.append(BoundEntry(name, int(value), time.perf_counter() - t0))
    return report
