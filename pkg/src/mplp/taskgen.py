"""Task generation: window reduction, service sub-intervals, and the task list.

Each parking space's availability window is first tightened against the
windows of the customers assigned to it, then sliced into service-time-length
sub-intervals.  Every customer is committed to exactly one sub-interval; the
demand aggregated on a sub-interval forms one delivery task.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Customer, MplpError, ParkingSpace, ProblemInstance, TimeWindow
from .siting import SitingResult


class UncoverableCustomerError(MplpError):
    """A customer has no service sub-interval inside any stopover window."""


@dataclass(slots=True)
class SubInterval:
    e: float  # minutes
    l: float
    index: int  # position within the space's reduced window


@dataclass
class Task:
    id: int
    space_id: int
    sub: SubInterval
    demand: int
    customer_ids: list[int]


def reduce_windows(
    space: ParkingSpace,
    customers: list[Customer],
    labels: dict[tuple[int, int], int],
) -> TimeWindow | None:
    """Tighten a parking window against the assigned customers' windows.

    Returns the intersection of the parking window with the hull of the
    stopover windows labelled to this space, or None when they are disjoint
    (the space then emits no tasks).
    """
    starts = []
    ends = []
    for c in customers:
        for k, s in enumerate(c.stopovers):
            if labels.get((c.id, k)) == space.id:
                starts.append(s.window.start)
                ends.append(s.window.end)
    if not starts:
        raise ValueError(f"no stopover is labelled to parking space {space.id}")
    lo = max(space.window.start, min(starts))
    hi = min(space.window.end, max(ends))
    if lo >= hi:
        return None
    return TimeWindow(lo, hi)


def split_subintervals(window: TimeWindow, service_time: float) -> list[SubInterval]:
    """Slice a window into service-time pieces; a short tail keeps full coverage."""
    if window.length <= 0:
        raise ValueError("window must have positive length")
    if service_time <= 0:
        raise ValueError("service_time must be positive")
    count = math.ceil(window.length / service_time)
    subs = []
    for a in range(count):
        e = window.start + a * service_time
        l = min(window.start + (a + 1) * service_time, window.end)
        subs.append(SubInterval(e=e, l=l, index=a))
    return subs


def build_task_list(inst: ProblemInstance, siting: SitingResult) -> list[Task]:
    """Commit every customer to one sub-interval and aggregate demand into tasks.

    A customer's candidate sub-intervals are those lying fully inside one of
    its stopover windows, at the space that stopover is labelled to.  The
    candidate with the largest overlap wins; ties break toward the earliest
    start, then the lowest space id.  Sub-intervals nobody committed to are
    dropped, and tasks are numbered in (space id, sub-interval) order.
    """
    spaces = {p.id: p for p in inst.parking_spaces}
    subs_by_space: dict[int, list[SubInterval]] = {}
    for sid, space in spaces.items():
        labelled = any(lab == sid for lab in siting.labels.values())
        if not labelled:
            continue
        reduced = reduce_windows(space, inst.customers, siting.labels)
        if reduced is None:
            subs_by_space[sid] = []
            continue
        subs_by_space[sid] = split_subintervals(reduced, space.service_time)

    committed: dict[tuple[int, int], tuple[int, list[int]]] = {}
    for c in inst.customers:
        candidates: list[tuple[float, float, int, int]] = []
        for k, s in enumerate(c.stopovers):
            sid = siting.labels.get((c.id, k))
            if sid is None:
                raise ValueError(f"siting does not cover customer {c.id} stopover {k}")
            for sub in subs_by_space.get(sid, []):
                if s.window.contains(sub.e, sub.l):
                    candidates.append((-(sub.l - sub.e), sub.e, sid, sub.index))
        if not candidates:
            raise UncoverableCustomerError(
                f"customer {c.id}: no service sub-interval fits inside any stopover window"
            )
        _, _, sid, a = min(candidates)
        demand, ids = committed.setdefault((sid, a), (0, []))
        committed[(sid, a)] = (demand + c.demand, ids + [c.id])

    tasks: list[Task] = []
    for tid, (sid, a) in enumerate(sorted(committed)):
        demand, ids = committed[(sid, a)]
        tasks.append(
            Task(
                id=tid,
                space_id=sid,
                sub=subs_by_space[sid][a],
                demand=demand,
                customer_ids=sorted(ids),
            )
        )
    return tasks
