"""Weighted cost of a schedule, its reciprocal reward, and constraint checks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .model import HORIZON_START, ProblemInstance
from .routing import AdjustPolicy, RoutingContext, Schedule, State, build_schedule, decode_state
from .taskgen import Task

log = logging.getLogger(__name__)

TIMING_TOL_MIN = 1e-6


@dataclass(slots=True)
class CostBreakdown:
    c1_fleet: float  # currency
    c2_travel: float  # currency
    c3_delay: float  # minutes
    objective: float  # weighted sum, dimensionless after weighting
    reward: float  # 1 / objective


def cost_breakdown(schedule: Schedule, inst: ProblemInstance) -> CostBreakdown:
    """Weighted fleet + travel + delay cost and its reciprocal reward."""
    w1, w2, w3 = inst.weights
    c1 = inst.fleet.fixed_cost * schedule.fleet_used
    c2 = schedule.total_distance * inst.fleet.unit_travel_cost
    c3 = sum(schedule.delays.values())
    objective = w1 * c1 + w2 * c2 + w3 * c3
    if objective > 0.0:
        reward = 1.0 / objective
    else:
        log.warning("zero objective (empty schedule); reporting infinite reward")
        reward = math.inf
    return CostBreakdown(c1_fleet=c1, c2_travel=c2, c3_delay=c3, objective=objective, reward=reward)


def agent_reward(rewards: list[float]) -> float:
    """An agent scores as its best member state."""
    if not rewards:
        raise ValueError("agent_reward needs at least one state reward")
    return max(rewards)


def evaluate_state(
    state: State,
    tasks: list[Task],
    inst: ProblemInstance,
    policy: AdjustPolicy,
    ctx: RoutingContext | None = None,
) -> tuple[float, Schedule, CostBreakdown]:
    """Decode, schedule, and score one candidate solution."""
    schedule = build_schedule(
        decode_state(state, inst.fleet.max_fleet), tasks, inst, policy, ctx=ctx
    )
    breakdown = cost_breakdown(schedule, inst)
    return breakdown.reward, schedule, breakdown


@dataclass
class ConstraintCheck:
    name: str
    ok: bool
    detail: str = ""


def validate_solution(
    schedule: Schedule, tasks: list[Task], inst: ProblemInstance
) -> list[ConstraintCheck]:
    """Check a schedule against the routing constraints.

    Schedules produced by `build_schedule` pass by construction; the checks
    exist to catch hand-edited or corrupted solution documents.
    """
    checks: list[ConstraintCheck] = []
    ctx = RoutingContext(inst, tasks)
    demand = {t.id: t.demand for t in tasks}

    # Fleet bound.
    ok = schedule.fleet_used <= inst.fleet.max_fleet
    checks.append(
        ConstraintCheck(
            "fleet_limit",
            ok,
            "" if ok else f"{schedule.fleet_used} lockers used, limit {inst.fleet.max_fleet}",
        )
    )

    # Per-trip load: a reload (via_depot) starts a new trip.
    offenders = []
    for m, route in enumerate(schedule.routes):
        trip = 0
        for v in route:
            if v.via_depot:
                trip = 0
            trip += demand.get(v.task_id, 0)
            if trip > inst.fleet.capacity:
                offenders.append(f"locker {m} trip ending at task {v.task_id} carries {trip}")
                trip = 0
    checks.append(
        ConstraintCheck("trip_capacity", not offenders, "; ".join(offenders))
    )

    # Every task exactly once.
    seen: dict[int, int] = {}
    for route in schedule.routes:
        for v in route:
            seen[v.task_id] = seen.get(v.task_id, 0) + 1
    missing = [t.id for t in tasks if seen.get(t.id, 0) == 0]
    dupes = [tid for tid, n in seen.items() if n > 1]
    ok = not missing and not dupes
    detail = []
    if missing:
        detail.append(f"missing tasks {missing}")
    if dupes:
        detail.append(f"duplicated tasks {dupes}")
    checks.append(ConstraintCheck("task_multiplicity", ok, "; ".join(detail)))

    # Depot closure: routes start from the depot no earlier than physically
    # possible, and the distance total accounts for both depot legs and every
    # detour.
    offenders = []
    expected_distance = 0.0
    for m, route in enumerate(schedule.routes):
        if not route:
            continue
        first_row = ctx.task_row[route[0].task_id]
        if route[0].arrive < HORIZON_START + ctx.t_depot[first_row] - TIMING_TOL_MIN:
            offenders.append(
                f"locker {m} would need to leave the depot before the horizon start"
            )
        expected_distance += ctx.d_depot[first_row]
        for prev, cur in zip(route, route[1:]):
            pr, cr = ctx.task_row[prev.task_id], ctx.task_row[cur.task_id]
            if cur.via_depot:
                expected_distance += ctx.d_depot[pr] + ctx.d_depot[cr]
            else:
                expected_distance += ctx.d_mat[pr][cr]
        expected_distance += ctx.d_depot[ctx.task_row[route[-1].task_id]]
    if abs(expected_distance - schedule.total_distance) > TIMING_TOL_MIN:
        offenders.append(
            f"distance total {schedule.total_distance:.6f} km does not match the "
            f"route legs ({expected_distance:.6f} km)"
        )
    checks.append(ConstraintCheck("depot_closure", not offenders, "; ".join(offenders)))

    # Leg timing: each arrival equals the previous departure plus the travel
    # time of the chosen leg, and nobody departs before arriving.
    offenders = []
    for m, route in enumerate(schedule.routes):
        for v in route:
            if v.depart < v.arrive - TIMING_TOL_MIN:
                offenders.append(f"locker {m} task {v.task_id} departs before arriving")
        for prev, cur in zip(route, route[1:]):
            pr, cr = ctx.task_row[prev.task_id], ctx.task_row[cur.task_id]
            leg = (
                ctx.t_depot[pr] + ctx.t_depot[cr] if cur.via_depot else ctx.t_mat[pr][cr]
            )
            if abs(cur.arrive - (prev.depart + leg)) > TIMING_TOL_MIN:
                offenders.append(
                    f"locker {m} task {cur.task_id} arrival is inconsistent with the leg"
                )
    checks.append(ConstraintCheck("leg_timing", not offenders, "; ".join(offenders)))

    # Assignment variables are implied binary in a constructed schedule.
    checks.append(ConstraintCheck("binary_domains", True, "vacuous for constructed schedules"))
    return checks
