"""Feasibility-driven heuristic search for small cycle times.

A probabilistic beam search builds stations forward, drawing tasks with
probability proportional to their minimum positional weight and ranking
partial line configurations by a restricted lower bound over the unassigned
tasks and workers. An interval search sweeps candidate cycle times below the
incumbent, and a critical-station local search polishes the final solution.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bounds as lb
from .instance import INFEASIBLE, InfeasibleInstanceError, Solution

FAILED = None  # beam-search failure is a normal outcome, not an error

DEFAULT_GAMMA = 125
DEFAULT_BEAM_FACTOR = 5
DEFAULT_INTERVAL_FACTOR = 0.95
DEFAULT_T_MIN = 6.0
DEFAULT_T_MAX = 900.0
DEFAULT_REPETITIONS = 20


@dataclass(frozen=True)
class BeamParams:
    cycle_time: int
    gamma: int = DEFAULT_GAMMA
    beam_factor: int = DEFAULT_BEAM_FACTOR
    seed: object = 0  # int or numpy SeedSequence

    def __post_init__(self):
        if self.gamma < 1 or self.beam_factor < 1 or self.cycle_time < 1:
            raise ValueError("beam width, beam factor and cycle time must be >= 1")


@dataclass(frozen=True)
class IpbsParams:
    gamma: int = DEFAULT_GAMMA
    beam_factor: int = DEFAULT_BEAM_FACTOR
    interval_factor: float = DEFAULT_INTERVAL_FACTOR
    t_min: float = DEFAULT_T_MIN
    t_max: float = DEFAULT_T_MAX
    repetitions: int = DEFAULT_REPETITIONS
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.interval_factor < 1.0:
            raise ValueError("interval factor must lie in (0, 1)")
        if self.t_min > self.t_max:
            raise ValueError("t_min must not exceed t_max")
        if self.repetitions < 1 or self.gamma < 1 or self.beam_factor < 1:
            raise ValueError("repetitions, beam width and beam factor must be >= 1")


def max_pw_priority(inst, t):
    """Minimum positional weight: own minimum time plus all successors'."""
    p = inst.min_times
    return p[t] + sum(p[j] for j in inst.succs_star[t])


def _priority_vector(inst):
    p = inst.min_times
    return [p[t] + sum(p[j] for j in inst.succs_star[t]) for t in range(inst.n_tasks)]


def _iter_bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class PartialAssignment:
    """State of a partially built line: stations closed so far, per-worker
    loads, the unassigned tasks and workers, and an effective time matrix
    that accumulates infeasibility marks from continuity reasoning."""

    __slots__ = ("inst", "stations", "assigned_mask", "avail_mask", "workers_mask", "_eff", "dead")

    def __init__(self, inst, stations=(), assigned_mask=0, avail_mask=None, workers_mask=None, eff=None, dead=False):
        self.inst = inst
        self.stations = stations  # tuple of (worker, task tuple, load)
        self.assigned_mask = assigned_mask
        if avail_mask is None:
            avail_mask = sum(1 << t for t in range(inst.n_tasks) if not inst.pred_mask[t])
        self.avail_mask = avail_mask
        if workers_mask is None:
            workers_mask = (1 << inst.n_workers) - 1
        self.workers_mask = workers_mask
        self._eff = eff  # None means the untouched instance matrix
        self.dead = dead

    @classmethod
    def from_stations(cls, inst, stations):
        """Build a partial from (worker, task iterable) pairs, one per closed
        station in line order."""
        assigned = 0
        workers = (1 << inst.n_workers) - 1
        built = []
        for w, tasks in stations:
            w = int(w)
            tasks = tuple(int(t) for t in tasks)
            load = sum(inst.times[t][w] for t in tasks)
            built.append((w, tasks, load))
            workers &= ~(1 << w)
            for t in tasks:
                assigned |= 1 << t
        avail = 0
        for t in range(inst.n_tasks):
            if not (assigned >> t) & 1 and inst.pred_mask[t] & assigned == inst.pred_mask[t]:
                avail |= 1 << t
        return cls(inst, tuple(built), assigned, avail, workers)

    @property
    def effective_times(self):
        return self.inst.times_array if self._eff is None else self._eff

    @property
    def unassigned_tasks(self):
        return frozenset(t for t in range(self.inst.n_tasks) if not (self.assigned_mask >> t) & 1)

    @property
    def unassigned_workers(self):
        return frozenset(_iter_bits(self.workers_mask))

    @property
    def assignment(self):
        out = {}
        for w, tasks, _ in self.stations:
            for t in tasks:
                out[t] = w
        return out

    @property
    def loads(self):
        out = {w: 0 for w in range(self.inst.n_workers)}
        for w, _, load in self.stations:
            out[w] = load
        return out


def strengthen_partial(partial):
    """Apply the continuity logic to a partial assignment until a fixpoint.

    (a) a task lying between two tasks of the same worker is pulled onto that
    worker; (b) once a task is unexecutable for a worker, so is everything
    beyond it on the same side. A task forced onto a worker that cannot run
    it marks the partial dead.
    """
    inst = partial.inst
    assignment = dict(partial.assignment)
    eff = None  # copy of the matrix, made on first write

    def time_of(t, w):
        if eff is not None:
            return eff[t, w]
        return inst.times[t][w]

    def mark(t, w):
        nonlocal eff
        if eff is None:
            eff = np.array(partial.effective_times, copy=True)
        eff[t, w] = INFEASIBLE

    for t, w in assignment.items():
        if time_of(t, w) == INFEASIBLE:
            return _with_updates(partial, assignment, eff, dead=True)

    forced = []
    changed = True
    while changed:
        changed = False
        by_worker = {}
        for t, w in assignment.items():
            by_worker.setdefault(w, []).append(t)
        for w, tasks in by_worker.items():
            for i in tasks:
                for k in tasks:
                    if i == k or k not in inst.succs_star[i]:
                        continue
                    for j in inst.succs_star[i] & inst.preds_star[k]:
                        if j in assignment:
                            continue
                        if time_of(j, w) == INFEASIBLE:
                            return _with_updates(partial, assignment, eff, dead=True, forced=forced)
                        assignment[j] = w
                        forced.append((j, w))
                        changed = True
        for i, w in list(assignment.items()):
            for side_star in (inst.succs_star, inst.preds_star):
                for j in side_star[i]:
                    if time_of(j, w) != INFEASIBLE:
                        continue
                    for k in side_star[j]:
                        if time_of(k, w) != INFEASIBLE:
                            if assignment.get(k) == w:
                                return _with_updates(partial, assignment, eff, dead=True, forced=forced)
                            mark(k, w)
                            changed = True
    return _with_updates(partial, assignment, eff, forced=forced)


def _with_updates(partial, assignment, eff, dead=False, forced=()):
    if not forced and eff is None:
        if dead == partial.dead:
            return partial
        return PartialAssignment(
            partial.inst, partial.stations, partial.assigned_mask,
            partial.avail_mask, partial.workers_mask, partial._eff, dead,
        )
    inst = partial.inst
    stations = list(partial.stations)
    index = {w: i for i, (w, _, _) in enumerate(stations)}
    assigned = partial.assigned_mask
    for j, w in forced:
        assigned |= 1 << j
        if w in index:
            i = index[w]
            worker, tasks, load = stations[i]
            p = inst.times[j][w]
            stations[i] = (worker, tasks + (j,), load if p == INFEASIBLE else load + p)
        else:
            # forcing onto a worker with no station yet cannot happen in the
            # forward construction; keep the assignment without a station
            pass
    avail = partial.avail_mask & ~assigned
    for j, _ in forced:
        for u in inst.succ_lists[j]:
            if not (assigned >> u) & 1 and inst.pred_mask[u] & assigned == inst.pred_mask[u]:
                avail |= 1 << u
    new_eff = partial._eff if eff is None else eff
    return PartialAssignment(inst, tuple(stations), assigned, avail, partial.workers_mask, new_eff, dead)


def min_rlb(partial):
    """Restricted lower bound of a partial assignment: total minimum time of
    the unassigned tasks over the unassigned workers, divided by their
    number. Continuity reasoning is applied first; an unassignable task makes
    the score infinite, pruning the partial."""
    part = strengthen_partial(partial)
    if part.dead:
        return math.inf
    rows = sorted(part.unassigned_tasks)
    if not rows:
        return Fraction(0)
    cols = sorted(part.unassigned_workers)
    if not cols:
        return math.inf
    sub = part.effective_times[np.ix_(rows, cols)]
    mins = sub.min(axis=1)
    if np.isinf(mins).any():
        return math.inf
    return Fraction(int(mins.sum()), len(cols))


def _rlb_sum(inst, assigned_mask, workers_mask):
    """Numerator of the restricted lower bound for forward-built partials.

    On such states the continuity rules can neither force a task nor kill
    the state, and their infeasibility marks land only in columns of
    already-consumed workers, so the min over the remaining workers is
    unaffected and the instance matrix can be used directly."""
    rows = [t for t in range(inst.n_tasks) if not (assigned_mask >> t) & 1]
    if not rows:
        return 0
    cols = list(_iter_bits(workers_mask))
    if not cols:
        return None
    mins = inst.times_array[np.ix_(rows, cols)].min(axis=1)
    if np.isinf(mins).any():
        return None
    return int(mins.sum())


def _fill_station(inst, node, w, capacity, rng, pw):
    """Greedy probabilistic fill of one station for worker w; tasks are drawn
    with probability proportional to their positional weight until nothing
    available fits the residual capacity."""
    avail = node.avail_mask
    assigned = node.assigned_mask
    times = inst.times
    pred_mask = inst.pred_mask
    load = 0
    chosen = []
    while True:
        cands = []
        for t in _iter_bits(avail):
            p = times[t][w]
            if p != INFEASIBLE and p <= capacity - load:
                cands.append(t)
        if not cands:
            break
        if len(cands) == 1:
            t = cands[0]
        else:
            total = 0
            for t in cands:
                total += pw[t]
            r = rng.random() * total
            acc = 0
            t = cands[-1]
            for cand in cands:
                acc += pw[cand]
                if r < acc:
                    t = cand
                    break
        load += times[t][w]
        chosen.append(t)
        bit = 1 << t
        avail ^= bit
        assigned |= bit
        for u in inst.succ_lists[t]:
            if not (assigned >> u) & 1 and pred_mask[u] & assigned == pred_mask[u]:
                avail |= 1 << u
    return assigned, avail, load, tuple(chosen)


def _to_solution(inst, stations, workers_mask):
    order = [w for w, _, _ in stations] + sorted(_iter_bits(workers_mask))
    assignment = [0] * inst.n_tasks
    cycle = 0
    for w, tasks, load in stations:
        cycle = max(cycle, load)
        for t in tasks:
            assignment[t] = w
    return Solution(order, assignment, cycle)


def beam_search_feasible(inst, params, rng=None):
    """Probabilistic beam search for a full assignment with cycle time at
    most params.cycle_time. Returns the first complete solution, or FAILED
    (None) once all stations have been processed."""
    if rng is None:
        rng = np.random.default_rng(params.seed)
    capacity = params.cycle_time
    pw = _priority_vector(inst)
    full = (1 << inst.n_tasks) - 1
    beam = [PartialAssignment(inst)]
    counter = 0
    for _level in range(inst.n_workers):
        heap = []  # (-rlb_sum, -insertion counter, node); root is the evictee
        for node in beam:
            for _rep in range(params.beam_factor):
                for w in _iter_bits(node.workers_mask):
                    assigned, avail, load, chosen = _fill_station(inst, node, w, capacity, rng, pw)
                    stations = node.stations + ((w, chosen, load),)
                    workers = node.workers_mask ^ (1 << w)
                    if assigned == full:
                        return _to_solution(inst, stations, workers)
                    score = _rlb_sum(inst, assigned, workers)
                    if score is None:
                        continue
                    child = PartialAssignment(inst, stations, assigned, avail, workers)
                    counter += 1
                    entry = (-score, -counter, child)
                    if len(heap) < params.gamma:
                        heapq.heappush(heap, entry)
                    elif -score > heap[0][0]:
                        heapq.heapreplace(heap, entry)
        if not heap:
            return FAILED
        beam = [item[2] for item in sorted(heap, key=lambda item: -item[1])]
    return FAILED


def initial_upper_bound(inst, seed=0, gamma=DEFAULT_GAMMA):
    """One beam run with beam factor one at a trivially sufficient capacity;
    the constructed solution carries its true cycle time."""
    capacity = sum(inst.max_finite_times)
    params = BeamParams(cycle_time=capacity, gamma=gamma, beam_factor=1, seed=seed)
    return beam_search_feasible(inst, params)


def ipbs(inst, params=None, *, lower_bound=None, log=None):
    """Interval search over candidate cycle times.

    Starting from the best known lower bound and the initial construction,
    each sweep tries every cycle time from one below the incumbent down to
    max(lower bound, floor(interval_factor * incumbent)), keeping the best
    feasible result. Stops as soon as the incumbent matches the lower bound;
    otherwise runs until the sweep or time budget is exhausted, but never
    shorter than t_min. The final solution is polished by local search.
    """
    if params is None:
        params = IpbsParams()
    t_start = time.monotonic()
    seeds = np.random.SeedSequence(params.seed)

    if lower_bound is None:
        lower_bound = lb.all_bounds(inst).best
    best = initial_upper_bound(inst, seeds.spawn(1)[0], params.gamma)
    if best is FAILED:
        raise InfeasibleInstanceError("no feasible assignment exists at any cycle time")
    c_up = best.cycle_time

    sweeps = 0
    while c_up > lower_bound:
        elapsed = time.monotonic() - t_start
        if (sweeps >= params.repetitions or elapsed >= params.t_max) and elapsed >= params.t_min:
            break
        sweeps += 1
        start = max(lower_bound, math.floor(params.interval_factor * c_up))
        for c in range(c_up - 1, start - 1, -1):
            if c >= c_up:
                continue
            t_c = time.monotonic()
            beam = BeamParams(cycle_time=c, gamma=params.gamma, beam_factor=params.beam_factor, seed=seeds.spawn(1)[0])
            sol = beam_search_feasible(inst, beam)
            if log is not None:
                status = "feasible" if sol is not FAILED else "failed"
                log.append(f"C {c} {status} {int((time.monotonic() - t_c) * 1000)}")
            if sol is not FAILED:
                best = sol
                c_up = sol.cycle_time
                if c_up <= lower_bound:
                    break
            if time.monotonic() - t_start >= params.t_max:
                break
    return local_search(inst, best)


def local_search(inst, sol):
    """Reduce the number of critical stations (ties broken by cycle time,
    lexicographically) with four move kinds: a shift off a critical station,
    a swap involving a critical station, a shift pair through the receiving
    station, and a worker swap between two stations. First improvement,
    restarting after each accepted move."""
    m = inst.n_workers
    station_worker = list(sol.worker_order)
    station_tasks = [[] for _ in range(m)]
    pos = [0] * inst.n_tasks
    for t, w in enumerate(sol.assignment):
        s = station_worker.index(w)
        station_tasks[s].append(t)
        pos[t] = s

    def station_load(s):
        w = station_worker[s]
        total = 0
        for t in station_tasks[s]:
            p = inst.times[t][w]
            if p == INFEASIBLE:
                return math.inf
            total += p
        return total

    loads = [station_load(s) for s in range(m)]

    def state():
        cycle = max(loads)
        return cycle, sum(1 for x in loads if x == cycle)

    def precedence_ok(t, new_pos, override):
        for p in inst.preds_star[t]:
            if override.get(p, pos[p]) > new_pos:
                return False
        for s in inst.succs_star[t]:
            if override.get(s, pos[s]) < new_pos:
                return False
        return True

    def shift_delta(t, a, b):
        # load change of stations a -> b when task t moves; None if illegal
        wb = station_worker[b]
        p = inst.times[t][wb]
        if p == INFEASIBLE or not precedence_ok(t, b, {t: b}):
            return None
        return loads[a] - inst.times[t][station_worker[a]], loads[b] + p

    def apply_shift(t, a, b):
        station_tasks[a].remove(t)
        station_tasks[b].append(t)
        pos[t] = b
        loads[a] -= inst.times[t][station_worker[a]]
        loads[b] += inst.times[t][station_worker[b]]

    def improved(trial_loads, base):
        cycle = max(trial_loads)
        crit = sum(1 for x in trial_loads if x == cycle)
        return (cycle, crit) < base

    while True:
        base = state()
        cycle = base[0]
        critical = [s for s in range(m) if loads[s] == cycle]
        move = None

        for a in critical:
            for t in list(station_tasks[a]):
                for b in range(m):
                    if b == a:
                        continue
                    res = shift_delta(t, a, b)
                    if res is None:
                        continue
                    trial = list(loads)
                    trial[a], trial[b] = res
                    if improved(trial, base):
                        move = ("shift", t, a, b)
                        break
                if move:
                    break
            if move:
                break

        if move is None:
            for a in critical:
                for t1 in list(station_tasks[a]):
                    for b in range(m):
                        if b == a:
                            continue
                        for t2 in list(station_tasks[b]):
                            wa, wb = station_worker[a], station_worker[b]
                            p1b, p2a = inst.times[t1][wb], inst.times[t2][wa]
                            if p1b == INFEASIBLE or p2a == INFEASIBLE:
                                continue
                            override = {t1: b, t2: a}
                            if not precedence_ok(t1, b, override) or not precedence_ok(t2, a, override):
                                continue
                            trial = list(loads)
                            trial[a] += p2a - inst.times[t1][wa]
                            trial[b] += p1b - inst.times[t2][wb]
                            if improved(trial, base):
                                move = ("swap", t1, a, t2, b)
                                break
                        if move:
                            break
                    if move:
                        break
                if move:
                    break

        if move is None:
            # two chained shifts; the first may worsen before the second repairs
            for a in critical:
                for t1 in list(station_tasks[a]):
                    for b in range(m):
                        if b == a:
                            continue
                        first = shift_delta(t1, a, b)
                        if first is None:
                            continue
                        mid = list(loads)
                        mid[a], mid[b] = first
                        saved_pos = pos[t1]
                        pos[t1] = b
                        for t2 in station_tasks[b] + [t1]:
                            for d in range(m):
                                if d == b or (t2 == t1 and d == a):
                                    continue
                                wd = station_worker[d]
                                p = inst.times[t2][wd]
                                if p == INFEASIBLE or not precedence_ok(t2, d, {t2: d}):
                                    continue
                                trial = list(mid)
                                trial[b] -= inst.times[t2][station_worker[b]]
                                trial[d] += p
                                if improved(trial, base):
                                    move = ("double", t1, a, b, t2, d)
                                    break
                            if move:
                                break
                        pos[t1] = saved_pos
                        if move:
                            break
                    if move:
                        break
                if move:
                    break

        if move is None:
            for a in range(m):
                for b in range(a + 1, m):
                    if loads[a] != cycle and loads[b] != cycle:
                        continue
                    wa, wb = station_worker[a], station_worker[b]
                    load_a = sum(inst.times[t][wb] for t in station_tasks[a])
                    load_b = sum(inst.times[t][wa] for t in station_tasks[b])
                    if math.isinf(load_a) or math.isinf(load_b):
                        continue
                    trial = list(loads)
                    trial[a], trial[b] = load_a, load_b
                    if improved(trial, base):
                        move = ("wswap", a, b)
                        break
                if move:
                    break

        if move is None:
            break
        kind = move[0]
        if kind == "shift":
            _, t, a, b = move
            apply_shift(t, a, b)
        elif kind == "swap":
            _, t1, a, t2, b = move
            apply_shift(t1, a, b)
            apply_shift(t2, b, a)
        elif kind == "double":
            _, t1, a, b, t2, d = move
            apply_shift(t1, a, b)
            apply_shift(t2, b, d)
        else:
            _, a, b = move
            station_worker[a], station_worker[b] = station_worker[b], station_worker[a]
            loads[a] = station_load(a)
            loads[b] = station_load(b)

    assignment = [0] * inst.n_tasks
    for s in range(m):
        for t in station_tasks[s]:
            assignment[t] = station_worker[s]
    return Solution(station_worker, assignment, int(max(loads)))
