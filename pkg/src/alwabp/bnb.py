"""Task-oriented branch-and-bound with an exhaustive verification oracle.

The search assigns one task per level to every worker that keeps the worker
order graph acyclic, applies reduction rules that pin, exclude and prune
task-worker cells, and bounds each node on the reduced time matrix. Undo is
frame-based: every mutation between a set_assignment and the matching
unset_assignment is recorded and reverted in reverse order.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bounds as lb
from .heuristic import IpbsParams, ipbs
from .instance import INFEASIBLE, EnumerationLimitError, InfeasibleInstanceError, Solution

OPTIMAL = "optimal"
FEASIBLE_TIME_LIMIT = "feasible_time_limit"
INFEASIBLE_STATUS = "infeasible"

TIME_POLL_NODES = 256
ORACLE_LEAF_LIMIT = 10**8


class WorkerOrderGraph:
    """Directed graph over workers, kept transitively closed; an arc (v, w)
    states that v's station precedes w's."""

    def __init__(self, n):
        self.n = n
        self.arcs = set()
        self.preds = [set() for _ in range(n)]
        self.succs = [set() for _ in range(n)]

    def has(self, v, w):
        return (v, w) in self.arcs

    def insert(self, a, b):
        """Add arc (a, b) plus all transitive consequences; returns the newly
        created arcs. The caller must have checked that no cycle results."""
        if a == b or (a, b) in self.arcs:
            return []
        added = []
        sources = self.preds[a] | {a}
        targets = self.succs[b] | {b}
        for x in sources:
            for y in targets:
                if x != y and (x, y) not in self.arcs:
                    assert (y, x) not in self.arcs, "insertion would create a cycle"
                    self.arcs.add((x, y))
                    self.preds[y].add(x)
                    self.succs[x].add(y)
                    added.append((x, y))
        return added

    def remove_arcs(self, arcs):
        for x, y in arcs:
            self.arcs.discard((x, y))
            self.preds[y].discard(x)
            self.succs[x].discard(y)

    def topological_order(self):
        """All workers in an arc-respecting order, lowest index first."""
        indeg = [len(self.preds[w]) for w in range(self.n)]
        heap = [w for w in range(self.n) if indeg[w] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            w = heapq.heappop(heap)
            order.append(w)
            for u in self.succs[w]:
                indeg[u] -= 1
                if indeg[u] == 0:
                    heapq.heappush(heap, u)
        if len(order) != self.n:
            raise ValueError("worker order graph contains a cycle")
        return order


class SearchState:
    """Mutable search node state with a frame stack for exact backtracking."""

    def __init__(self, inst):
        self.inst = inst
        self.eff = np.array(inst.times_array, copy=True)
        self.assignment = {}
        self.loads = [0] * inst.n_workers
        self.order_graph = WorkerOrderGraph(inst.n_workers)
        self.frames = []  # each: (primary task, arcs, cells, assigned tasks)

    def push_frame(self, t):
        self.frames.append((t, [], [], []))

    def pop_frame(self, t):
        primary, arcs, cells, assigns = self.frames.pop()
        assert primary == t, "unbalanced set/unset of assignments"
        self.order_graph.remove_arcs(reversed(arcs))
        for task in reversed(assigns):
            w = self.assignment.pop(task)
            self.loads[w] -= self.inst.times[task][w]
        for task, w, old in reversed(cells):
            self.eff[task, w] = old

    def mark_infeasible(self, t, w):
        """Set a cell infeasible; returns False when task t loses its last
        worker (the node is then dead)."""
        if math.isinf(self.eff[t, w]):
            return True
        self.frames[-1][2].append((t, w, self.eff[t, w]))
        self.eff[t, w] = INFEASIBLE
        return bool(np.isfinite(self.eff[t]).any())

    def fingerprint(self):
        return (
            self.eff.tobytes(),
            tuple(self.loads),
            tuple(sorted(self.assignment.items())),
            frozenset(self.order_graph.arcs),
        )


def assignment_is_valid(state, t, w):
    """True iff pinning task t on worker w adds no arc to the worker order
    graph whose inverse (possibly through existing arcs) is already present."""
    inst = state.inst
    asg = state.assignment
    h = state.order_graph
    pred_workers = {asg[u] for u in inst.preds_star[t] if u in asg} - {w}
    succ_workers = {asg[u] for u in inst.succs_star[t] if u in asg} - {w}
    for v in pred_workers:
        if h.has(w, v):
            return False
    for x in succ_workers:
        if h.has(x, w):
            return False
        for v in pred_workers:
            if x == v or h.has(x, v):
                return False
    return True


def set_assignment(state, t, w):
    """Assign t to w inside a fresh undo frame: load, order-graph arcs and
    the assignment itself are recorded for exact restoration."""
    assert not math.isinf(state.eff[t, w]), "assignment to an infeasible cell"
    state.push_frame(t)
    _assign(state, t, w)


def unset_assignment(state, t, w):
    assert state.assignment.get(t) == w
    state.pop_frame(t)


def _assign(state, t, w):
    inst = state.inst
    frame = state.frames[-1]
    state.assignment[t] = w
    state.loads[w] += inst.times[t][w]
    frame[3].append(t)
    h = state.order_graph
    for u in inst.preds_star[t]:
        v = state.assignment.get(u)
        if v is not None and v != w:
            frame[1].extend(h.insert(v, w))
    for u in inst.succs_star[t]:
        x = state.assignment.get(u)
        if x is not None and x != w:
            frame[1].extend(h.insert(w, x))


def apply_reduction_rules(state, t, w, gub):
    """Fixpoint of the three node reductions after assigning t to w.

    R1 pins the task: all its other cells become infeasible. R2 enforces
    continuity: a task between two tasks of one worker is assigned there too,
    and everything beyond an infeasible intermediate is excluded on that
    worker. R3 excludes a candidate cell when the chain through it would
    already reach the incumbent. Returns True when the node is DEAD. R3 is
    evaluated once per (newly) assigned task against the then-current matrix.
    """
    inst = state.inst
    m = inst.n_workers
    pending_assign = [t]
    pending_marks = []

    def mark(task, worker):
        if state.assignment.get(task) == worker:
            return False  # contradiction: an assigned task lost its own cell
        if math.isinf(state.eff[task, worker]):
            return True
        if not state.mark_infeasible(task, worker):
            return False
        pending_marks.append((task, worker))
        return True

    while pending_assign or pending_marks:
        if pending_assign:
            a = pending_assign.pop()
            wa = state.assignment[a]
            for w2 in range(m):
                if w2 != wa and not mark(a, w2):
                    return True
            # continuity forcing against every task already pinned on wa
            for b, wb in list(state.assignment.items()):
                if wb != wa or b == a:
                    continue
                if b in inst.succs_star[a]:
                    lo, hi = a, b
                elif a in inst.succs_star[b]:
                    lo, hi = b, a
                else:
                    continue
                for j in inst.succs_star[lo] & inst.preds_star[hi]:
                    if j in state.assignment:
                        if state.assignment[j] != wa:
                            return True
                        continue
                    if math.isinf(state.eff[j, wa]) or not assignment_is_valid(state, j, wa):
                        return True
                    _assign(state, j, wa)
                    pending_assign.append(j)
            # infeasible intermediates already present around a
            for star in (inst.succs_star, inst.preds_star):
                for j in star[a]:
                    if math.isinf(state.eff[j, wa]):
                        for k in star[j]:
                            if not mark(k, wa):
                                return True
            # chain-load exclusion relative to the incumbent
            pa = state.eff[a, wa]
            for t2 in range(inst.n_tasks):
                if t2 in state.assignment or math.isinf(state.eff[t2, wa]):
                    continue
                if t2 in inst.succs_star[a]:
                    between = inst.succs_star[a] & inst.preds_star[t2]
                elif t2 in inst.preds_star[a]:
                    between = inst.succs_star[t2] & inst.preds_star[a]
                else:
                    continue
                total = pa + state.eff[t2, wa]
                for u in between:
                    total += state.eff[u, wa]
                if total >= gub and not mark(t2, wa):
                    return True
        else:
            j, wj = pending_marks.pop()
            # propagate exclusions induced by the fresh mark
            for star, star_rev in ((inst.succs_star, inst.preds_star), (inst.preds_star, inst.succs_star)):
                for i in star_rev[j]:
                    if state.assignment.get(i) == wj:
                        for k in star[j]:
                            if not mark(k, wj):
                                return True
                        break
    return False


def _partial_lc1_after(state, totals, max_load, t, w):
    """Average-load bound if t were pinned on w: max of the new worker loads
    and the ceiling of the effective total over the stations."""
    p = state.eff[t, w]
    if math.isinf(p):
        return math.inf
    m = state.inst.n_workers
    new_total = totals[0] - totals[1][t] + p
    return max(max_load, state.loads[w] + p, math.ceil(new_total / m - 1e-9))


def _immediate_cycle(state, t, w):
    inst = state.inst
    h = state.order_graph
    for u in inst.preds[t]:
        v = state.assignment.get(u)
        if v is not None and v != w and h.has(w, v):
            return True
    for u in inst.succs[t]:
        x = state.assignment.get(u)
        if x is not None and x != w and h.has(x, w):
            return True
    return False


def select_branch_task(state, gub):
    """Unassigned task with the most infeasible workers; ties go to the task
    with the largest worker-minimal average-load bound, then the smallest
    index. A worker is infeasible for a task when its cell is excluded, when
    pinning would create an immediate cyclic worker dependency, or when the
    average-load bound after pinning reaches the incumbent."""
    inst = state.inst
    p_min = state.eff.min(axis=1)
    totals = (float(p_min.sum()), p_min)
    max_load = max(state.loads)
    best_key = None
    best_task = None
    for t in range(inst.n_tasks):
        if t in state.assignment:
            continue
        infeasible = 0
        task_lb = math.inf
        for w in range(inst.n_workers):
            if math.isinf(state.eff[t, w]) or _immediate_cycle(state, t, w):
                infeasible += 1
                continue
            after = _partial_lc1_after(state, totals, max_load, t, w)
            if after >= gub:
                infeasible += 1
            else:
                task_lb = min(task_lb, after)
        key = (infeasible, task_lb, -t)
        if best_key is None or key > best_key:
            best_key = key
            best_task = t
    return best_task


def _node_bound(state, gub, config):
    """Bound the completions of the current node on the reduced matrix."""
    inst = state.inst
    m = inst.n_workers
    p_min = state.eff.min(axis=1)
    p_int = [int(x) for x in p_min]
    total = sum(p_int)
    value = max(max(state.loads), max(p_int), -(-total // m))
    if value >= gub:
        return value
    value = max(value, lb._lc2(sorted(p_int, reverse=True), m))
    if value >= gub:
        return value
    pred_sums = [sum(p_int[j] for j in inst.preds_star[t]) for t in range(inst.n_tasks)]
    succ_sums = [sum(p_int[j] for j in inst.succs_star[t]) for t in range(inst.n_tasks)]
    value = max(value, lb._lc3(p_int, pred_sums, succ_sums, m))
    if value >= gub or not config.node_l1a:
        return value
    cap = None if math.isinf(gub) else int(gub)
    l1 = lb._l1_value(state.eff, config.l1_iters)
    l1a = lb._l1_additive(state.eff, l1, config.l1_iters, cap=cap)
    return max(value, lb._disjunction_value(state.eff, l1a))


@dataclass
class BnbConfig:
    time_limit: float | None = None
    seed: int = 42
    heuristic_on: bool = True
    reduction_rules: bool = True
    node_l1a: bool = True
    l1_iters: int = lb.DEFAULT_L1_ITERS
    l2_iters: int = lb.DEFAULT_L2_ITERS
    incumbent: Solution | None = None
    root_bound_names: tuple = lb.NATIVE_BOUNDS


@dataclass
class BnbResult:
    solution: Solution | None
    value: int | None
    status: str
    nodes: int
    elapsed_s: float
    root_bounds: lb.BoundReport = field(default_factory=lb.BoundReport)


class _TimeUp(Exception):
    pass


class _Search:
    def __init__(self, inst, config, gub, incumbent, deadline):
        self.inst = inst
        self.config = config
        self.state = SearchState(inst)
        self.gub = gub
        self.incumbent = incumbent
        self.deadline = deadline
        self.nodes = 0

    def run(self, root_llb):
        self.visit(root_llb)

    def visit(self, llb):
        self.nodes += 1
        if self.deadline is not None and self.nodes % TIME_POLL_NODES == 0:
            if time.monotonic() > self.deadline:
                raise _TimeUp
        state = self.state
        inst = self.inst
        if len(state.assignment) == inst.n_tasks:
            value = max(state.loads)
            if value < self.gub:
                self.gub = value
                order = state.order_graph.topological_order()
                assignment = [state.assignment[t] for t in range(inst.n_tasks)]
                self.incumbent = Solution(order, assignment, value)
            return
        t = select_branch_task(state, self.gub)
        p_min = state.eff.min(axis=1)
        totals = (float(p_min.sum()), p_min)
        max_load = max(state.loads)
        candidates = []
        for w in range(inst.n_workers):
            if math.isinf(state.eff[t, w]) or not assignment_is_valid(state, t, w):
                continue
            after = _partial_lc1_after(state, totals, max_load, t, w)
            if after < self.gub:
                candidates.append((after, w))
        candidates.sort()
        for after, w in candidates:
            if after >= self.gub:  # the incumbent may have improved mid-loop
                continue
            set_assignment(state, t, w)
            dead = False
            if self.config.reduction_rules:
                dead = apply_reduction_rules(state, t, w, self.gub)
            if not dead:
                new_llb = max(llb, _node_bound(state, self.gub, self.config))
                if new_llb < self.gub:
                    self.visit(new_llb)
            unset_assignment(state, t, w)


def branch_and_bound(inst, config=None):
    """Solve to optimality (or the time limit): heuristic incumbent, root
    bounds, then depth-first task-oriented search."""
    if config is None:
        config = BnbConfig()
    t0 = time.monotonic()
    root_report = lb.all_bounds(inst, config.root_bound_names, config.l1_iters, config.l2_iters)
    root_lb = root_report.best

    incumbent = config.incumbent
    if config.heuristic_on:
        params = IpbsParams(
            t_min=0.0,
            t_max=max(0.5, inst.n_tasks * inst.n_workers / 10),
            seed=config.seed,
        )
        try:
            heur = ipbs(inst, params, lower_bound=root_lb)
        except InfeasibleInstanceError:
            heur = None
        if heur is not None and (incumbent is None or heur.cycle_time < incumbent.cycle_time):
            incumbent = heur
    gub = incumbent.cycle_time if incumbent is not None else math.inf

    if incumbent is not None and root_lb >= gub:
        return BnbResult(incumbent, gub, OPTIMAL, 1, time.monotonic() - t0, root_report)

    deadline = None if config.time_limit is None else t0 + config.time_limit
    search = _Search(inst, config, gub, incumbent, deadline)
    status = OPTIMAL
    try:
        search.run(root_lb)
    except _TimeUp:
        status = FEASIBLE_TIME_LIMIT
    if status is OPTIMAL and search.incumbent is None:
        status = INFEASIBLE_STATUS
    value = search.incumbent.cycle_time if search.incumbent is not None else None
    return BnbResult(search.incumbent, value, status, search.nodes, time.monotonic() - t0, root_report)


@lru_cache(maxsize=None)
def _digraph_is_acyclic(mask, m):
    indeg = [0] * m
    succ = [[] for _ in range(m)]
    for v in range(m):
        for w in range(m):
            if v != w and (mask >> (v * m + w)) & 1:
                succ[v].append(w)
                indeg[w] += 1
    queue = [v for v in range(m) if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for u in succ[v]:
            indeg[u] -= 1
            if indeg[u] == 0:
                queue.append(u)
    return seen == m


def brute_force_optimal(inst):
    """Exhaustive oracle: minimum cycle time over every task-worker map whose
    induced worker digraph is acyclic; INFEASIBLE if none is."""
    n, m = inst.n_tasks, inst.n_workers
    leaves = m**n * math.factorial(m)
    if leaves > ORACLE_LEAF_LIMIT:
        raise EnumerationLimitError(f"{leaves} leaf combinations exceed the enumeration guard")
    closure = sorted(inst.closure)
    best = INFEASIBLE
    for combo in itertools.product(*inst.feasible_workers):
        mask = 0
        for a, b in closure:
            va, vb = combo[a], combo[b]
            if va != vb:
                mask |= 1 << (va * m + vb)
        if not _digraph_is_acyclic(mask, m):
            continue
        loads = [0] * m
        for t, w in enumerate(combo):
            loads[w] += inst.times[t][w]
        cycle = max(loads)
        if cycle < best:
            best = cycle
    return best
