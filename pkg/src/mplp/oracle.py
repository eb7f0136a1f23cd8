"""Exhaustive ground truth for tiny instances.

Enumerates every assignment-permutation state and keeps the maximum-reward
one, so heuristic solvers can be checked against the true optimum where the
state space is small enough to walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations, product

from .model import MplpError, ProblemInstance
from .objective import evaluate_state
from .routing import AdjustPolicy, RoutingContext, State
from .taskgen import Task

DEFAULT_LIMIT = 10_000_000


class SearchSpaceError(MplpError):
    """The full enumeration would exceed the configured state budget."""


@dataclass
class OracleResult:
    best_state: State
    best_reward: float
    states_enumerated: int


def brute_force_best(
    inst: ProblemInstance,
    tasks: list[Task],
    policy: AdjustPolicy,
    limit: int = DEFAULT_LIMIT,
    apply_buffer: bool = False,
) -> OracleResult:
    """Score every state; ties resolve to the lexicographically smallest one."""
    if not tasks:
        raise ValueError("cannot enumerate an empty task list")
    n = len(tasks)
    n_mpls = inst.fleet.max_fleet
    cardinality = n_mpls**n * math.factorial(n)
    if cardinality > limit:
        raise SearchSpaceError(
            f"{n_mpls}^{n} * {n}! = {cardinality} states exceeds the limit of {limit}"
        )

    ctx = RoutingContext(inst, tasks, apply_buffer=apply_buffer)
    best_state: State | None = None
    best_reward = -math.inf
    count = 0
    # product/permutations iterate in ascending lexicographic order, so keeping
    # only strict improvements leaves the lexicographically smallest optimum.
    for x1 in product(range(n_mpls), repeat=n):
        for x2 in permutations(range(n)):
            state = State(x1, x2)
            reward, _, _ = evaluate_state(state, tasks, inst, policy, ctx=ctx)
            count += 1
            if reward > best_reward:
                best_state, best_reward = state, reward
    assert best_state is not None
    return OracleResult(
        best_state=best_state, best_reward=best_reward, states_enumerated=count
    )
