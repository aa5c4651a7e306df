import math
from fractions import Fraction

import numpy as np
import pytest

from alwabp import (
    FAILED,
    INFEASIBLE,
    BeamParams,
    Instance,
    IpbsParams,
    PartialAssignment,
    InfeasibleInstanceError,
    beam_search_feasible,
    brute_force_optimal,
    initial_upper_bound,
    ipbs,
    local_search,
    max_pw_priority,
    min_rlb,
    strengthen_partial,
    validate_solution,
)
from alwabp import Solution
from conftest import random_instance


class TestMaxPw:
    def test_fig1_first_task(self, fig1):
        assert max_pw_priority(fig1, 0) == 15

    def test_fig1_leaf_task(self, fig1):
        assert max_pw_priority(fig1, 3) == 1

    def test_single(self, single):
        assert max_pw_priority(single, 0) == 7


class TestMinRlb:
    def test_empty_partial(self, fig1):
        assert min_rlb(PartialAssignment(fig1)) == Fraction(15, 3) == 5

    def test_after_first_station(self, fig1):
        part = PartialAssignment.from_stations(fig1, [(2, (0, 2))])
        assert min_rlb(part) == Fraction(10, 2)

    def test_all_assigned(self, fig1):
        part = PartialAssignment.from_stations(fig1, [(2, (0, 2)), (0, (1, 3)), (1, (4, 5))])
        assert min_rlb(part) == 0

    def test_unassignable_task_prunes(self):
        # task 2 is only feasible for worker 0, which is consumed
        inst = Instance([[1, 1], [2, INFEASIBLE]], set())
        part = PartialAssignment.from_stations(inst, [(0, (0,))])
        assert min_rlb(part) == math.inf


class TestStrengthen:
    def test_between_task_is_forced(self, fig1):
        # tasks 1 and 4 share worker 1, so task 3 must join it
        part = PartialAssignment.from_stations(fig1, [(0, (0, 3))])
        result = strengthen_partial(part)
        assert not result.dead
        assert result.assignment[2] == 0

    def test_direct_infeasibility_is_dead(self, fig1):
        part = PartialAssignment.from_stations(fig1, [(1, (0,))])
        assert strengthen_partial(part).dead

    def test_empty_partial_unchanged(self, fig1):
        part = PartialAssignment(fig1)
        result = strengthen_partial(part)
        assert result is part

    def test_forced_onto_infeasible_is_dead(self):
        inst = Instance([[1, 1], [INFEASIBLE, 1], [1, 1]], {(0, 1), (1, 2)})
        part = PartialAssignment.from_stations(inst, [(0, (0, 2))])
        assert strengthen_partial(part).dead

    def test_infeasible_intermediate_excludes_beyond(self):
        # worker 0 runs task 0 but cannot run task 1, so task 2 is cut for it
        inst = Instance([[1, 1], [INFEASIBLE, 1], [1, 1]], {(0, 1), (1, 2)})
        part = PartialAssignment.from_stations(inst, [(0, (0,))])
        result = strengthen_partial(part)
        assert not result.dead
        assert result.effective_times[2, 0] == INFEASIBLE

    def test_score_unchanged_on_forward_built_states(self):
        # on states built station by station in precedence order, the
        # continuity rules never force a task, never kill the state, and can
        # only mark columns of already-consumed workers, so the restricted
        # bound equals the plain min-sum the beam computes directly
        for seed in range(30):
            inst = random_instance(seed)
            rng = np.random.default_rng(seed)
            order = [int(w) for w in rng.permutation(inst.n_workers)]
            assigned = set()
            stations = []
            for w in order[: int(rng.integers(1, inst.n_workers + 1))]:
                tasks = []
                for t in np.argsort(rng.random(inst.n_tasks)):
                    t = int(t)
                    if t in assigned or inst.times[t][w] == INFEASIBLE:
                        continue
                    if all(p in assigned for p in inst.preds_star[t]):
                        tasks.append(t)
                        assigned.add(t)
                stations.append((w, tuple(tasks)))
            part = PartialAssignment.from_stations(inst, stations)
            result = strengthen_partial(part)
            assert result.assignment == part.assignment
            assert not result.dead
            unassigned = sorted(part.unassigned_tasks)
            workers = sorted(part.unassigned_workers)
            if unassigned and workers:
                mins = [
                    min(inst.times[t][w] for w in workers)
                    for t in unassigned
                ]
                expected = math.inf if INFEASIBLE in mins else Fraction(sum(mins), len(workers))
                assert min_rlb(part) == expected


class TestBeamSearch:
    def test_fig1_feasible_at_6(self, fig1):
        for seed in range(5):
            sol = beam_search_feasible(fig1, BeamParams(cycle_time=6, seed=seed))
            assert sol is not FAILED
            assert sol.cycle_time <= 6
            assert validate_solution(fig1, sol) == []

    def test_fig1_always_fails_at_5(self, fig1):
        for seed in range(10):
            assert beam_search_feasible(fig1, BeamParams(cycle_time=5, seed=seed)) is FAILED

    def test_single(self, single):
        sol = beam_search_feasible(single, BeamParams(cycle_time=7, seed=0))
        assert sol.cycle_time == 7

    def test_never_exceeds_capacity(self):
        for seed in range(20):
            inst = random_instance(seed)
            opt = brute_force_optimal(inst)
            if opt == INFEASIBLE:
                continue
            for c in (opt, opt + 2):
                sol = beam_search_feasible(inst, BeamParams(cycle_time=c, seed=seed))
                if sol is not FAILED:
                    assert sol.cycle_time <= c
                    assert validate_solution(inst, sol) == []

    def test_deterministic(self, fig1):
        a = beam_search_feasible(fig1, BeamParams(cycle_time=6, seed=9))
        b = beam_search_feasible(fig1, BeamParams(cycle_time=6, seed=9))
        assert a == b

    def test_params_validated(self):
        with pytest.raises(ValueError):
            BeamParams(cycle_time=0)


class TestInitialUpperBound:
    def test_fig1_bracket(self, fig1):
        sol = initial_upper_bound(fig1, seed=0)
        assert 6 <= sol.cycle_time <= 29
        assert validate_solution(fig1, sol) == []

    def test_single(self, single):
        assert initial_upper_bound(single, seed=0).cycle_time == 7

    def test_deterministic(self, fig1):
        assert initial_upper_bound(fig1, seed=4) == initial_upper_bound(fig1, seed=4)


class TestIpbs:
    def test_fig1_reaches_optimum(self, fig1):
        sol = ipbs(fig1, IpbsParams(seed=42))
        assert sol.cycle_time == 6
        assert validate_solution(fig1, sol) == []

    def test_single_immediate(self, single):
        assert ipbs(single, IpbsParams(seed=1)).cycle_time == 7

    def test_deterministic_with_seed(self, fig1):
        log_a, log_b = [], []
        a = ipbs(fig1, IpbsParams(seed=7), log=log_a)
        b = ipbs(fig1, IpbsParams(seed=7), log=log_b)
        assert a == b
        assert [line.rsplit(" ", 1)[0] for line in log_a] == [line.rsplit(" ", 1)[0] for line in log_b]

    def test_sweep_log_monotone(self, fig1):
        log = []
        ipbs(fig1, IpbsParams(seed=3), log=log)
        feasible = [int(line.split()[1]) for line in log if line.split()[2] == "feasible"]
        assert feasible == sorted(feasible, reverse=True)

    def test_infeasible_instance_raises(self):
        # three chained tasks whose able workers force a station cycle
        inst = Instance(
            [[INFEASIBLE, 1], [1, INFEASIBLE], [INFEASIBLE, 1]],
            {(0, 1), (1, 2)},
        )
        assert brute_force_optimal(inst) == INFEASIBLE
        with pytest.raises(InfeasibleInstanceError):
            ipbs(inst, IpbsParams(seed=0, t_min=0.0, t_max=1.0, repetitions=1))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            IpbsParams(interval_factor=1.0)
        with pytest.raises(ValueError):
            IpbsParams(t_min=5.0, t_max=1.0)


class TestLocalSearch:
    def test_never_worsens_and_stays_valid(self):
        for seed in range(25):
            inst = random_instance(seed)
            opt = brute_force_optimal(inst)
            if opt == INFEASIBLE:
                continue
            start = initial_upper_bound(inst, seed=seed)
            improved = local_search(inst, start)
            assert improved.cycle_time <= start.cycle_time
            assert improved.cycle_time >= opt
            assert validate_solution(inst, improved) == []

    def test_optimal_solution_value_unchanged(self, fig1):
        sol = Solution((2, 0, 1), (2, 0, 2, 0, 1, 1), 6)
        assert validate_solution(fig1, sol) == []
        assert local_search(fig1, sol).cycle_time == 6

    def test_single(self, single):
        sol = Solution((0,), (0,), 7)
        assert local_search(single, sol) == sol

    def test_repairs_loaded_station(self, fig1):
        # everything on worker 1 (cycle 19) must improve
        sol = Solution((0, 1, 2), (0, 0, 0, 0, 0, 0), 19)
        improved = local_search(fig1, sol)
        assert improved.cycle_time < 19
        assert validate_solution(fig1, improved) == []
