"""Decoding and schedule construction, checked against hand-worked timelines.

All hand-computed figures use the line geometry of `line_instance`: depot at
the origin, spaces on the x axis, speed 60 km/h so one kilometre costs one
minute of travel.
"""

import numpy as np
import pytest

from mplp.routing import AdjustPolicy, RoutingContext, State, build_schedule, decode_state
from conftest import clustered_instance, line_instance, tasks_for


class TestDecode:
    def test_hand_traced_three_task_case(self):
        routes = decode_state(State((0, 0, 1), (2, 0, 1)), 2)
        assert routes == [[0, 1], [2]]

    def test_single_locker_follows_global_order(self):
        routes = decode_state(State((0, 0, 0, 0), (3, 1, 0, 2)), 1)
        assert routes == [[3, 1, 0, 2]]

    def test_identity_permutation_is_ascending(self):
        routes = decode_state(State((0, 1, 0, 1), (0, 1, 2, 3)), 2)
        assert routes == [[0, 2], [1, 3]]

    def test_state_check_rejects_bad_permutation(self):
        with pytest.raises(ValueError, match="permutation"):
            State((0, 0), (0, 0)).check(1)


class TestDegenerateRoute:
    def test_single_task_at_depot_position(self):
        inst, tasks = line_instance([0.0], [(0, 480.0, 490.0, 2)], max_fleet=1)
        schedule = build_schedule([[0]], tasks, inst, AdjustPolicy.HCPS)
        visit = schedule.routes[0][0]
        assert visit.arrive == 480.0
        assert visit.depart == 490.0  # service time 10
        assert schedule.delays[0] == 0.0
        assert schedule.fleet_used == 1
        assert schedule.total_distance == 0.0


class TestCapacityReload:
    def test_second_visit_detours_via_depot(self):
        # Demand 13 + 12 > 20: before the second task the locker must reload.
        # Hand trace: arrive A = max(480, 480+1) = 481, depart 491;
        # detour arrive = 491 + t(1,0) + t(0,2) = 491 + 1 + 2 = 494;
        # distance = 1 + (1 + 2) + 2 = 6 (two extra depot legs vs 1+1+2).
        inst, tasks = line_instance([1.0, 2.0], [(0, 480.0, 490.0, 13), (1, 490.0, 500.0, 12)])
        schedule = build_schedule([[0, 1], []], tasks, inst, AdjustPolicy.HCPS)
        first, second = schedule.routes[0]
        assert first.arrive == 481.0
        assert first.depart == 491.0
        assert first.load_after == 7
        assert second.via_depot
        assert second.arrive == 494.0
        assert second.load_after == 8  # reloaded to 20, then served 12
        assert schedule.total_distance == pytest.approx(6.0)
        assert schedule.delays == {0: 0.0, 1: 0.0}

    def test_no_reload_when_capacity_suffices(self):
        inst, tasks = line_instance([1.0, 2.0], [(0, 480.0, 490.0, 5), (1, 490.0, 500.0, 5)])
        schedule = build_schedule([[0, 1], []], tasks, inst, AdjustPolicy.BTD)
        second = schedule.routes[0][1]
        assert not second.via_depot
        assert schedule.total_distance == pytest.approx(1.0 + 1.0 + 2.0)


class TestEarlyArrivalPolicies:
    def _instance(self):
        # Second task opens at 520 but the locker is ready at 491; the straight
        # leg takes 0.5 min, the depot detour 1 + 1.5 = 2.5 min.
        return line_instance(
            [1.0, 1.5],
            [(0, 480.0, 490.0, 2), (1, 520.0, 530.0, 2)],
            customer_windows=[(480.0, 540.0), (520.0, 580.0)],
        )

    def test_btd_detours_and_adds_distance(self):
        inst, tasks = self._instance()
        schedule = build_schedule([[0, 1], []], tasks, inst, AdjustPolicy.BTD)
        second = schedule.routes[0][1]
        assert second.via_depot
        assert second.arrive == pytest.approx(493.5)  # 491 + 1 + 1.5
        assert schedule.delays[1] == pytest.approx(26.5)  # still early by 26.5
        assert schedule.total_distance == pytest.approx(1.0 + 2.5 + 1.5)

    def test_hcps_keeps_straight_leg_when_hold_cannot_reach(self):
        # Hold feasibility fails (490 + 0.5 < 520), so the locker just arrives
        # early and waits for the customer; no distance is added.
        inst, tasks = self._instance()
        schedule = build_schedule([[0, 1], []], tasks, inst, AdjustPolicy.HCPS)
        second = schedule.routes[0][1]
        assert not second.via_depot
        assert not schedule.routes[0][0].wait_applied
        assert second.arrive == pytest.approx(491.5)
        assert schedule.delays[1] == pytest.approx(28.5)
        assert schedule.total_distance == pytest.approx(1.0 + 0.5 + 1.5)

    def test_hcps_distance_beats_btd_distance(self):
        inst, tasks = self._instance()
        hcps = build_schedule([[0, 1], []], tasks, inst, AdjustPolicy.HCPS)
        btd = build_schedule([[0, 1], []], tasks, inst, AdjustPolicy.BTD)
        assert hcps.total_distance < btd.total_distance


class TestHoldAtCurrentSpace:
    def test_hold_fires_after_unrepaired_early_arrival(self):
        # Chain of three tasks: the locker reaches task 1 early (no feasible
        # hold), then the task-1 -> task-2 leg satisfies the hold guard:
        # A + SV + t = 491.5 + 10 + 0.5 < 505 and l + t = 510.5 >= 505.
        inst, tasks = line_instance(
            [1.0, 1.5, 2.0],
            [(0, 480.0, 490.0, 1), (1, 500.0, 510.0, 1), (2, 505.0, 515.0, 1)],
            customer_windows=[(480.0, 540.0), (500.0, 560.0), (505.0, 565.0)],
        )
        schedule = build_schedule([[0, 1, 2], []], tasks, inst, AdjustPolicy.HCPS)
        v0, v1, v2 = schedule.routes[0]
        assert v1.arrive == pytest.approx(491.5)
        assert schedule.delays[1] == pytest.approx(8.5)
        assert v1.wait_applied
        assert v1.depart == pytest.approx(510.0)  # held until its slot closes
        assert v2.arrive == pytest.approx(510.5)
        assert schedule.delays[2] == 0.0

    def test_btd_on_same_chain_detours_instead(self):
        inst, tasks = line_instance(
            [1.0, 1.5, 2.0],
            [(0, 480.0, 490.0, 1), (1, 500.0, 510.0, 1), (2, 505.0, 515.0, 1)],
            customer_windows=[(480.0, 540.0), (500.0, 560.0), (505.0, 565.0)],
        )
        schedule = build_schedule([[0, 1, 2], []], tasks, inst, AdjustPolicy.BTD)
        v1 = schedule.routes[0][1]
        assert v1.via_depot
        assert v1.arrive == pytest.approx(493.5)


class TestCapacityWinsOverHold:
    def test_reload_preempts_hold(self):
        # The hold guard would fire, but the next demand exceeds the onboard
        # stock; capacity is a hard constraint so the depot detour wins.
        inst, tasks = line_instance(
            [1.0, 1.5, 2.0],
            [(0, 480.0, 490.0, 1), (1, 500.0, 510.0, 18), (2, 505.0, 515.0, 18)],
            customer_windows=[(480.0, 540.0), (500.0, 560.0), (505.0, 565.0)],
        )
        schedule = build_schedule([[0, 1, 2], []], tasks, inst, AdjustPolicy.HCPS)
        v1, v2 = schedule.routes[0][1], schedule.routes[0][2]
        assert not v1.wait_applied
        assert v2.via_depot
        assert v2.load_after == 2  # reloaded to 20, then served 18


from conftest import replay_with_slack as _replay_with_slack


def test_earliest_start_dominance_under_slack():
    rng = np.random.default_rng(77)
    for trial in range(30):
        inst = clustered_instance(3, 4, seed=100 + trial)
        tasks = tasks_for(inst)
        n = len(tasks)
        x1 = tuple(int(v) for v in rng.integers(0, inst.fleet.max_fleet, size=n))
        x2 = tuple(int(v) for v in rng.permutation(n))
        policy = AdjustPolicy.BTD if trial % 2 else AdjustPolicy.HCPS
        ctx = RoutingContext(inst, tasks)
        schedule = build_schedule(decode_state(State(x1, x2), inst.fleet.max_fleet),
                                  tasks, inst, policy, ctx=ctx)
        built = {v.task_id: v.arrive for r in schedule.routes for v in r}
        baseline = _replay_with_slack(schedule, ctx, {t.id: 0.0 for t in tasks})
        assert baseline == pytest.approx(built)  # replay anchors to the builder
        slack = {t.id: float(rng.uniform(0.0, 30.0)) for t in tasks}
        slacked = _replay_with_slack(schedule, ctx, slack)
        for tid in baseline:
            assert slacked[tid] >= baseline[tid]


def test_schedule_invariants_on_random_states():
    rng = np.random.default_rng(5)
    inst = clustered_instance(4, 5, seed=55)
    tasks = tasks_for(inst)
    ctx = RoutingContext(inst, tasks)
    n = len(tasks)
    for _ in range(50):
        x1 = tuple(int(v) for v in rng.integers(0, inst.fleet.max_fleet, size=n))
        x2 = tuple(int(v) for v in rng.permutation(n))
        schedule = build_schedule(decode_state(State(x1, x2), inst.fleet.max_fleet),
                                  tasks, inst, AdjustPolicy.HCPS, ctx=ctx)
        seen = sorted(v.task_id for route in schedule.routes for v in route)
        assert seen == list(range(n))  # each task exactly once
        assert schedule.fleet_used == sum(1 for r in schedule.routes if r)
        for route in schedule.routes:
            for v in route:
                assert v.depart >= v.arrive
                assert v.load_after >= 0
                e, l = ctx.task_e[v.task_id], ctx.task_l[v.task_id]
                if e <= v.arrive <= l:
                    assert schedule.delays[v.task_id] == 0.0
                else:
                    assert schedule.delays[v.task_id] > 0.0


def test_buffer_pad_extends_service_time():
    inst, tasks = line_instance([1.0], [(0, 480.0, 490.0, 2)], max_fleet=1)
    plain = build_schedule([[0]], tasks, inst, AdjustPolicy.HCPS)
    padded = build_schedule([[0]], tasks, inst, AdjustPolicy.HCPS, apply_buffer=True)
    assert padded.routes[0][0].depart == plain.routes[0][0].depart + inst.fleet.buffer_time
