"""Genetic algorithm baseline sharing the state encoding and scorer.

Selection is elitist roulette-wheel over reward; crossover exchanges a segment
between adjacent mating-pool individuals (order-preserving repair keeps the
execution order a permutation); mutation swaps genes with their right
neighbour.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .hqm import SolveResult, init_agent
from .model import ProblemInstance
from .objective import evaluate_state
from .routing import AdjustPolicy, RoutingContext, State
from .taskgen import Task


@dataclass
class GaConfig:
    iterations: int = 1000
    pop_size: int = 100
    p_cross: float = 50.0  # percent chance an adjacent pair breeds
    elite_frac: float = 5.0  # percent of the population copied unchanged
    mutation_rate: float = 5.0  # percent chance per gene
    policy: AdjustPolicy = AdjustPolicy.HCPS
    seed: int = 0
    apply_buffer: bool = False


def _roulette_index(cum_perc: list[float], draw: float) -> int:
    for i, threshold in enumerate(cum_perc):
        if draw <= threshold:
            return i
    return len(cum_perc) - 1


def _crossover_x1(
    a: tuple[int, ...], b: tuple[int, ...], lo: int, hi: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    la, lb = list(a), list(b)
    la[lo:hi], lb[lo:hi] = lb[lo:hi], la[lo:hi]
    return tuple(la), tuple(lb)


def _crossover_x2(
    a: tuple[int, ...], b: tuple[int, ...], lo: int, hi: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Order crossover: keep the segment, fill the rest in donor order."""

    def child(keeper: tuple[int, ...], donor: tuple[int, ...]) -> tuple[int, ...]:
        segment = set(keeper[lo:hi])
        filler = (g for g in donor if g not in segment)
        return tuple(
            keeper[i] if lo <= i < hi else next(filler) for i in range(len(keeper))
        )

    return child(a, b), child(b, a)


def _mutate(state: State, rate: float, rng: np.random.Generator) -> State:
    n = len(state.x1)
    if n < 2 or rate <= 0.0:
        return state
    x1, x2 = list(state.x1), list(state.x2)
    draws1 = rng.random(n - 1) * 100.0
    draws2 = rng.random(n - 1) * 100.0
    for g in range(n - 1):
        if draws1[g] < rate:
            x1[g], x1[g + 1] = x1[g + 1], x1[g]
    for g in range(n - 1):
        if draws2[g] < rate:
            x2[g], x2[g + 1] = x2[g + 1], x2[g]
    return State(tuple(x1), tuple(x2))


def run_ga(inst: ProblemInstance, tasks: list[Task], cfg: GaConfig) -> SolveResult:
    """Evolve a population and return the best individual ever seen."""
    if not tasks:
        raise ValueError("cannot solve an empty task list")
    if cfg.pop_size < 2:
        raise ValueError("pop_size must be >= 2")
    n = len(tasks)
    n_mpls = inst.fleet.max_fleet
    rng = np.random.default_rng(cfg.seed)
    ctx = RoutingContext(inst, tasks, apply_buffer=cfg.apply_buffer)

    def evaluate(state: State) -> float:
        return evaluate_state(state, tasks, inst, cfg.policy, ctx=ctx)[0]

    started = time.perf_counter()
    population = init_agent(n, n_mpls, cfg.pop_size, rng, evaluate)
    best_state = population.states[0]
    best_reward = population.rewards[0]
    trace = [best_reward]
    elite_n = min(cfg.pop_size, max(1, round(cfg.pop_size * cfg.elite_frac / 100.0)))

    states, rewards = population.states, population.rewards
    for _ in range(cfg.iterations):
        order = sorted(range(cfg.pop_size), key=lambda i: -rewards[i])
        ranked = [states[i] for i in order]
        ranked_rewards = [rewards[i] for i in order]

        total = sum(ranked_rewards)
        if total > 0.0:
            acc = 0.0
            cum_perc = []
            for r in ranked_rewards:
                acc += r
                cum_perc.append(100.0 * acc / total)
        else:
            cum_perc = [100.0 * (i + 1) / cfg.pop_size for i in range(cfg.pop_size)]

        pool = ranked[:elite_n] + [
            ranked[_roulette_index(cum_perc, 100.0 * rng.random())]
            for _ in range(cfg.pop_size - elite_n)
        ]

        children: list[State] = pool[:elite_n]
        child_rewards: list[float] = ranked_rewards[:elite_n]
        rest = pool[elite_n:]
        idx = 0
        bred: list[State] = []
        while idx < len(rest):
            if idx + 1 >= len(rest):
                bred.append(rest[idx])
                break
            a, b = rest[idx], rest[idx + 1]
            if 100.0 * rng.random() < cfg.p_cross and n >= 2:
                p, q = int(rng.integers(0, n)), int(rng.integers(0, n))
                lo, hi = min(p, q), max(p, q)
                if lo < hi:
                    ax1, bx1 = _crossover_x1(a.x1, b.x1, lo, hi)
                    ax2, bx2 = _crossover_x2(a.x2, b.x2, lo, hi)
                    a, b = State(ax1, ax2), State(bx1, bx2)
            bred.extend((a, b))
            idx += 2
        for child in bred:
            child = _mutate(child, cfg.mutation_rate, rng)
            children.append(child)
            child_rewards.append(evaluate(child))

        states, rewards = children, child_rewards
        for s, r in zip(states, rewards):
            if r > best_reward:
                best_state, best_reward = s, r
        trace.append(best_reward)

    wall = time.perf_counter() - started
    _, schedule, breakdown = evaluate_state(best_state, tasks, inst, cfg.policy, ctx=ctx)
    return SolveResult(
        best_state=best_state,
        best_reward=best_reward,
        reward_trace=trace,
        schedule=schedule,
        breakdown=breakdown,
        timesteps_run=cfg.iterations,
        wall_time=wall,
    )
