"""Shared instance builders for the test suite.

`clustered_instance` builds seeded instances whose customers spread across
many service sub-intervals (windows offset inside each space's availability),
giving solvers a genuinely combinatorial task list.  The stock generator in
`mplp.model` anchors windows to the hourly grid, which funnels each space's
customers into its first sub-interval; that shape is exercised separately.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from mplp.model import (
    Coord,
    Customer,
    FleetParams,
    ParkingSpace,
    ProblemInstance,
    Stopover,
    TimeWindow,
)
from mplp.siting import assign_to_spaces
from mplp.taskgen import Task, build_task_list


def clustered_instance(
    n_spaces: int,
    customers_per_space: int,
    seed: int,
    capacity: int = 20,
    fixed_cost: float = 20_000.0,
    max_fleet: int | None = None,
    depot: tuple[float, float] = (2.5, 2.5),
    side: float = 5.0,
) -> ProblemInstance:
    """Seeded instance with customers clustered around their own space.

    Customer windows start at arbitrary offsets inside the space window (at
    least 50 minutes before it closes), so each customer's earliest feasible
    sub-interval varies and demand spreads across many tasks.
    """
    rng = np.random.default_rng([seed, 424242])
    spaces = []
    for i in range(n_spaces):
        pos = Coord(float(rng.uniform(0, side)), float(rng.uniform(0, side)))
        start = float(rng.uniform(480.0, 640.0))
        length = float(rng.uniform(110.0, 160.0))
        spaces.append(
            ParkingSpace(i, pos, TimeWindow(start, min(start + length, 1080.0)), 10.0)
        )

    def place_near(sp: ParkingSpace) -> Coord:
        for _ in range(200):
            ang = rng.uniform(0, 2 * math.pi)
            r = rng.uniform(0, 0.4)
            pos = Coord(
                min(max(sp.position.x + r * math.cos(ang), 0.0), side),
                min(max(sp.position.y + r * math.sin(ang), 0.0), side),
            )
            nearest = min(spaces, key=lambda s: (s.position.distance_to(pos), s.id))
            if nearest.id == sp.id:
                return pos
        return Coord(sp.position.x, sp.position.y)

    customers = []
    cid = 0
    for sp in spaces:
        for _ in range(customers_per_space):
            w_start = float(rng.uniform(sp.window.start, sp.window.end - 50.0))
            w_len = float(rng.uniform(45.0, 75.0))
            window = TimeWindow(w_start, min(w_start + w_len, sp.window.end))
            customers.append(
                Customer(cid, int(rng.integers(1, 5)), 0.5, [Stopover(place_near(sp), window)])
            )
            cid += 1

    fleet = FleetParams(
        capacity=capacity,
        max_fleet=max_fleet or n_spaces * customers_per_space,
        fixed_cost=fixed_cost,
    )
    return ProblemInstance(
        customers=customers,
        parking_spaces=spaces,
        depot=Coord(*depot),
        fleet=fleet,
        weights=(10.0, 1.0, 5.0),
        seed=seed,
    )


def tasks_for(inst: ProblemInstance) -> list[Task]:
    return build_task_list(inst, assign_to_spaces(inst))


def line_instance(
    space_xs: list[float],
    subs: list[tuple[int, float, float, int]],
    customer_windows: list[tuple[float, float]] | None = None,
    capacity: int = 20,
    speed: float = 60.0,
    max_fleet: int = 2,
    fixed_cost: float = 20_000.0,
) -> tuple[ProblemInstance, list[Task]]:
    """Hand-built 1-D instance for exact schedule arithmetic.

    `space_xs` puts spaces on the x axis with the depot at the origin; speed
    60 km/h makes one kilometre cost exactly one minute.  Each entry of `subs`
    is (space_index, e, l, demand) and becomes task i with customer i
    committed to it; `customer_windows` overrides the containing stopover
    window (defaults to the sub-interval itself).
    """
    spaces = [
        ParkingSpace(i, Coord(x, 0.0), TimeWindow(480.0, 1080.0), 10.0)
        for i, x in enumerate(space_xs)
    ]
    customers = []
    tasks = []
    for tid, (space_idx, e, l, demand) in enumerate(subs):
        cw = customer_windows[tid] if customer_windows else (e, l)
        customers.append(
            Customer(
                tid,
                demand,
                0.5,
                [Stopover(Coord(space_xs[space_idx], 0.0), TimeWindow(*cw))],
            )
        )
        from mplp.taskgen import SubInterval

        tasks.append(
            Task(
                id=tid,
                space_id=space_idx,
                sub=SubInterval(e=e, l=l, index=tid),
                demand=demand,
                customer_ids=[tid],
            )
        )
    inst = ProblemInstance(
        customers=customers,
        parking_spaces=spaces,
        depot=Coord(0.0, 0.0),
        fleet=FleetParams(
            capacity=capacity, speed=speed, max_fleet=max_fleet, fixed_cost=fixed_cost
        ),
        weights=(10.0, 1.0, 5.0),
        seed=0,
    )
    return inst, tasks


@pytest.fixture
def tiny_instance():
    """Two spaces, two tasks, exact geometry for schedule arithmetic."""
    return line_instance([1.0, 2.0], [(0, 480.0, 490.0, 13), (1, 490.0, 500.0, 12)])


def replay_with_slack(schedule, ctx, slack_of):
    """Earliest-start recursion with per-leg slack, repair decisions frozen.

    Independent re-simulation of a built schedule's timeline; with zero slack
    it reproduces the arrivals, and any non-negative slack can only push every
    arrival later (earliest-start dominance).
    """
    arrivals = {}
    for route in schedule.routes:
        prev_depart = None
        prev_row = None
        for v in route:
            row = ctx.task_row[v.task_id]
            if prev_depart is None:
                arrive = max(
                    ctx.task_e[v.task_id], 480.0 + ctx.t_depot[row] + slack_of[v.task_id]
                )
            elif v.via_depot:
                leg = ctx.t_depot[prev_row] + ctx.t_depot[row]
                arrive = prev_depart + leg + slack_of[v.task_id]
            else:
                arrive = prev_depart + ctx.t_mat[prev_row][row] + slack_of[v.task_id]
            depart = max(arrive, ctx.task_estar[v.task_id]) + ctx.sv[row]
            if v.wait_applied:
                depart = max(depart, ctx.task_l[v.task_id])
            arrivals[v.task_id] = arrive
            prev_depart = depart
            prev_row = row
    return arrivals
