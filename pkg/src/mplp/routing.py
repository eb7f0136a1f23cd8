"""State decoding and timed route construction.

A candidate solution is a `State`: a locker id per task plus a global task
execution order.  `build_schedule` turns per-locker task sequences into timed
visit plans using an earliest-start recursion, repairing conflicts either by
detouring through the depot (reload and postpone) or by holding at the current
parking space until its sub-interval closes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .model import ProblemInstance, HORIZON_START
from .taskgen import Task


class AdjustPolicy(Enum):
    """Conflict repair flavour: depot detour vs holding in place."""

    BTD = "btd"
    HCPS = "hcps"


@dataclass(frozen=True)
class State:
    x1: tuple[int, ...]  # locker id per task, indexed by task id
    x2: tuple[int, ...]  # permutation of task ids, position = execution order

    def check(self, n_mpls: int) -> None:
        n = len(self.x1)
        if len(self.x2) != n:
            raise ValueError("x1 and x2 must have equal length")
        if sorted(self.x2) != list(range(n)):
            raise ValueError("x2 must be a permutation of task ids")
        if any(m < 0 or m >= n_mpls for m in self.x1):
            raise ValueError("x1 entries must lie in [0, n_mpls)")


@dataclass(slots=True)
class Visit:
    task_id: int
    space_id: int
    arrive: float
    depart: float
    via_depot: bool  # reached by detouring through the depot (reloaded)
    wait_applied: bool  # departure was extended to the sub-interval end
    load_after: int


@dataclass
class Schedule:
    routes: list[list[Visit]]  # one entry per locker; depot implicit at both ends
    total_distance: float  # km, including depot legs and detours
    delays: dict[int, float]  # task id -> minutes outside its sub-interval
    fleet_used: int


def decode_state(state: State, n_mpls: int) -> list[list[int]]:
    """Split the global execution order into per-locker task sequences."""
    routes: list[list[int]] = [[] for _ in range(n_mpls)]
    x1 = state.x1
    for t in state.x2:
        routes[x1[t]].append(t)
    return routes


class RoutingContext:
    """Precomputed geometry and task attributes shared across many schedules."""

    __slots__ = (
        "n_tasks",
        "capacity",
        "task_row",
        "task_space_id",
        "task_e",
        "task_l",
        "task_q",
        "task_estar",
        "sv",
        "d_depot",
        "d_mat",
        "t_depot",
        "t_mat",
    )

    def __init__(self, inst: ProblemInstance, tasks: list[Task], apply_buffer: bool = False):
        n = len(tasks)
        if sorted(t.id for t in tasks) != list(range(n)):
            raise ValueError("task ids must be 0..n-1 (position in the task list)")

        spaces = sorted(inst.parking_spaces, key=lambda s: s.id)
        row_of = {s.id: i for i, s in enumerate(spaces)}
        xs = [s.position.x for s in spaces]
        ys = [s.position.y for s in spaces]
        minutes_per_km = 60.0 / inst.fleet.speed
        pad = inst.fleet.buffer_time if apply_buffer else 0.0

        self.n_tasks = n
        self.capacity = inst.fleet.capacity
        self.sv = [s.service_time + pad for s in spaces]
        self.d_depot = [
            math.hypot(x - inst.depot.x, y - inst.depot.y) for x, y in zip(xs, ys)
        ]
        self.t_depot = [d * minutes_per_km for d in self.d_depot]
        self.d_mat = [
            [math.hypot(xs[i] - xs[j], ys[i] - ys[j]) for j in range(len(spaces))]
            for i in range(len(spaces))
        ]
        self.t_mat = [[d * minutes_per_km for d in row] for row in self.d_mat]

        by_id = {c.id: c for c in inst.customers}
        self.task_row = [0] * n
        self.task_space_id = [0] * n
        self.task_e = [0.0] * n
        self.task_l = [0.0] * n
        self.task_q = [0] * n
        self.task_estar = [0.0] * n
        for t in tasks:
            self.task_row[t.id] = row_of[t.space_id]
            self.task_space_id[t.id] = t.space_id
            self.task_e[t.id] = t.sub.e
            self.task_l[t.id] = t.sub.l
            self.task_q[t.id] = t.demand
            # Earliest moment a committed customer is present: the start of the
            # stopover window containing this sub-interval (unique, windows are
            # disjoint).  Customers without a containing window contribute the
            # sub-interval start itself.
            earliest = math.inf
            for cid in t.customer_ids:
                cust = by_id.get(cid)
                found = t.sub.e
                if cust is not None:
                    for s in cust.stopovers:
                        if s.window.contains(t.sub.e, t.sub.l):
                            found = s.window.start
                            break
                earliest = min(earliest, found)
            self.task_estar[t.id] = earliest if t.customer_ids else t.sub.e


def build_schedule(
    task_lists: list[list[int]],
    tasks: list[Task],
    inst: ProblemInstance,
    policy: AdjustPolicy,
    ctx: RoutingContext | None = None,
    apply_buffer: bool = False,
) -> Schedule:
    """Simulate every locker's task sequence into a timed, repaired route.

    Lockers leave the depot fully loaded at the horizon start.  Arrivals follow
    the earliest-start recursion; a capacity shortfall always forces a depot
    reload, while early arrivals are repaired according to `policy`.  Lateness
    is never repaired, it only accrues delay.
    """
    if ctx is None:
        ctx = RoutingContext(inst, tasks, apply_buffer=apply_buffer)

    capacity = ctx.capacity
    task_row = ctx.task_row
    task_e = ctx.task_e
    task_l = ctx.task_l
    task_q = ctx.task_q
    task_estar = ctx.task_estar
    sv = ctx.sv
    d_depot = ctx.d_depot
    t_depot = ctx.t_depot
    d_mat = ctx.d_mat
    t_mat = ctx.t_mat
    space_id = ctx.task_space_id
    hcps = policy is AdjustPolicy.HCPS

    routes: list[list[Visit]] = []
    delays: dict[int, float] = {}
    total_distance = 0.0
    fleet_used = 0

    for seq in task_lists:
        visits: list[Visit] = []
        if not seq:
            routes.append(visits)
            continue
        fleet_used += 1
        load = capacity
        prev_visit: Visit | None = None
        prev_t = -1
        prev_row = -1
        prev_arrive = 0.0
        prev_depart = 0.0

        for t in seq:
            row = task_row[t]
            via = False
            if prev_visit is None:
                arrive = max(task_e[t], HORIZON_START + t_depot[row])
                total_distance += d_depot[row]
            else:
                travel = t_mat[prev_row][row]
                if load < task_q[t]:
                    via = True  # capacity wins over any time-window repair
                elif hcps:
                    if (
                        prev_arrive + sv[prev_row] + travel < task_e[t]
                        and task_l[prev_t] + travel >= task_e[t]
                    ):
                        # Hold at the current space until its sub-interval ends.
                        held = max(prev_depart, task_l[prev_t])
                        prev_visit.depart = held
                        prev_visit.wait_applied = True
                        prev_depart = held
                elif prev_depart + travel < task_e[t]:
                    via = True
                if via:
                    arrive = prev_depart + t_depot[prev_row] + t_depot[row]
                    total_distance += d_depot[prev_row] + d_depot[row]
                    load = capacity
                else:
                    arrive = prev_depart + travel
                    total_distance += d_mat[prev_row][row]

            e = task_e[t]
            l = task_l[t]
            delay = (e - arrive if arrive < e else 0.0) + (arrive - l if arrive > l else 0.0)
            delays[t] = delay
            depart = (arrive if arrive > task_estar[t] else task_estar[t]) + sv[row]
            load -= task_q[t]
            if load < 0:
                load = 0
            visit = Visit(
                task_id=t,
                space_id=space_id[t],
                arrive=arrive,
                depart=depart,
                via_depot=via,
                wait_applied=False,
                load_after=load,
            )
            visits.append(visit)
            prev_visit = visit
            prev_t = t
            prev_row = row
            prev_arrive = arrive
            prev_depart = depart

        total_distance += d_depot[prev_row]
        routes.append(visits)

    return Schedule(
        routes=routes,
        total_distance=total_distance,
        delays=delays,
        fleet_used=fleet_used,
    )
