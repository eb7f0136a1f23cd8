"""Hybrid Q-learning solver.

A population ("agent") of candidate states is evolved per timestep: a global
rebuild samples every state element-by-element from softmax-normalised Q-value
matrices under an epsilon-greedy rule, a local move perturbs each state
against a neighbour, and the incumbent best state's transition path feeds the
Q-value update.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ProblemInstance
from .objective import CostBreakdown, evaluate_state
from .routing import AdjustPolicy, RoutingContext, Schedule, State
from .taskgen import Task

Evaluator = Callable[[State], float]


@dataclass
class Agent:
    states: list[State]
    rewards: list[float]


@dataclass
class QModel:
    q1: np.ndarray  # locker-to-locker transition values
    q2: np.ndarray  # task-to-task transition values

    @classmethod
    def zeros(cls, n_mpls: int, n_tasks: int) -> "QModel":
        return cls(
            q1=np.zeros((n_mpls, n_mpls), dtype=float),
            q2=np.zeros((n_tasks, n_tasks), dtype=float),
        )


@dataclass
class HqmConfig:
    timesteps: int = 1000
    agent_size: int = 100
    gamma: float = 0.9
    alpha_initial: float = 0.9  # decays as alpha_initial * exp(-t / timesteps)
    epsilon_mode: str = "uniform"  # fresh U(0,1) greedy factor each timestep
    convergence_eps: float = 1e-8
    policy: AdjustPolicy = AdjustPolicy.HCPS
    seed: int = 0
    apply_buffer: bool = False  # pad service times with the fleet buffer


@dataclass
class SolveResult:
    best_state: State
    best_reward: float
    reward_trace: list[float]  # entry 0 is the initial population best
    schedule: Schedule
    breakdown: CostBreakdown
    timesteps_run: int
    wall_time: float
    q1_deltas: list[float] | None = None
    q2_deltas: list[float] | None = None


def alpha_schedule(t: int, total: int, initial: float = 0.9) -> float:
    return initial * math.exp(-t / total)


def init_agent(
    n_tasks: int,
    n_mpls: int,
    size: int,
    rng: np.random.Generator,
    evaluate: Evaluator | None = None,
) -> Agent:
    """Draw `size` random states and rank them by reward when scored."""
    if n_tasks < 1 or n_mpls < 1 or size < 1:
        raise ValueError("n_tasks, n_mpls, and size must all be >= 1")
    states = []
    for _ in range(size):
        x1 = tuple(int(v) for v in rng.integers(0, n_mpls, size=n_tasks))
        x2 = tuple(int(v) for v in rng.permutation(n_tasks))
        states.append(State(x1, x2))
    if evaluate is None:
        return Agent(states=states, rewards=[0.0] * size)
    rewards = [evaluate(s) for s in states]
    order = sorted(range(size), key=lambda i: -rewards[i])
    return Agent(states=[states[i] for i in order], rewards=[rewards[i] for i in order])


def selection_probabilities(q: QModel) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise softmax of both Q matrices, stabilised against overflow."""
    return _softmax_rows(q.q1), _softmax_rows(q.q2)


def _softmax_rows(m: np.ndarray) -> np.ndarray:
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _pick(row: list[float], prow: list[float], candidates: list[int],
          epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice among `candidates` from one Q row."""
    if len(candidates) == 1:
        return candidates[0]
    if rng.random() < epsilon:
        return max(candidates, key=row.__getitem__)  # first max: lowest index on ties
    total = 0.0
    for c in candidates:
        total += prow[c]
    r = rng.random() * total
    acc = 0.0
    for c in candidates:
        acc += prow[c]
        if r < acc:
            return c
    return candidates[-1]


def global_step(
    agent: Agent,
    q: QModel,
    epsilon: float,
    rng: np.random.Generator,
    best_state: State,
    evaluate: Evaluator,
) -> Agent:
    """Rebuild every state element-by-element from the Q model.

    The execution order is re-chained task by task (restricted to unvisited
    tasks), then a locker is chosen per sequence position; each decision is
    greedy with probability `epsilon`, otherwise sampled from the softmax row.
    The first decision of each chain starts from the incumbent best state's
    first element's row.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    n = q.q2.shape[0]
    p1, p2 = selection_probabilities(q)
    q1l, q2l = q.q1.tolist(), q.q2.tolist()
    p1l, p2l = p1.tolist(), p2.tolist()
    start_task = best_state.x2[0]
    start_mpl = best_state.x1[start_task]

    new_states: list[State] = []
    new_rewards: list[float] = []
    all_tasks = list(range(n))
    for _ in agent.states:
        remaining = all_tasks.copy()
        x2: list[int] = []
        prev = start_task
        while remaining:
            choice = _pick(q2l[prev], p2l[prev], remaining, epsilon, rng)
            x2.append(choice)
            remaining.remove(choice)
            prev = choice

        x1 = [0] * n
        prev_m = start_mpl
        mpl_ids = list(range(q.q1.shape[0]))
        for t in x2:
            m = _pick(q1l[prev_m], p1l[prev_m], mpl_ids, epsilon, rng)
            x1[t] = m
            prev_m = m

        state = State(tuple(x1), tuple(x2))
        new_states.append(state)
        new_rewards.append(evaluate(state))
    return Agent(states=new_states, rewards=new_rewards)


def _exchange_segments(x2: tuple[int, ...], p: int, qpos: int, n: int) -> tuple[int, ...]:
    if p == qpos:
        return x2
    lo, hi = (p, qpos) if p < qpos else (qpos, p)
    length = min(hi - lo, n // 2, n - hi)
    if length < 1:
        length = 1  # degenerate: swap the two single elements
    out = list(x2)
    out[lo : lo + length], out[hi : hi + length] = (
        out[hi : hi + length],
        out[lo : lo + length],
    )
    return tuple(out)


def _local_x1(
    x1: tuple[int, ...],
    neighbour: tuple[int, ...],
    omega: list[int],
    n_mpls: int,
) -> tuple[int, ...]:
    """Shift elements toward/away from a neighbour and repair into [0, n_mpls)."""
    return tuple(
        abs(a + w * (a - b)) % n_mpls for a, b, w in zip(x1, neighbour, omega)
    )


def local_step(
    agent: Agent,
    rng: np.random.Generator,
    evaluate: Evaluator,
    n_mpls: int,
) -> Agent:
    """Perturb each state against a neighbouring state in the agent.

    Assignment elements move by the signed difference to the neighbour where
    the neighbour's value is larger (coin-flipped direction); the execution
    order swaps two equal-length non-overlapping blocks.
    """
    size = len(agent.states)
    if size < 2:
        raise ValueError("local search needs at least two states in the agent")
    n = len(agent.states[0].x1)
    new_states: list[State] = []
    new_rewards: list[float] = []
    for i, s in enumerate(agent.states):
        if i == 0:
            j = 1
        elif i == size - 1:
            j = size - 2
        else:
            j = i + 1 if rng.random() < 0.5 else i - 1
        nb = agent.states[j]
        signs = rng.integers(0, 2, size=n) * 2 - 1
        omega = [
            int(sign) if a < b else 0
            for a, b, sign in zip(s.x1, nb.x1, signs)
        ]
        x1 = _local_x1(s.x1, nb.x1, omega, n_mpls)
        p = int(rng.integers(0, n))
        qpos = int(rng.integers(0, n))
        x2 = _exchange_segments(s.x2, p, qpos, n)
        state = State(x1, x2)
        new_states.append(state)
        new_rewards.append(evaluate(state))
    return Agent(states=new_states, rewards=new_rewards)


def update_q(
    q: QModel,
    best_state: State,
    reward: float,
    alpha: float,
    gamma: float,
) -> QModel:
    """Apply the one-step value update along the best state's transition path.

    Consecutive tasks in execution order update the task matrix, their lockers
    update the locker matrix; every other cell is untouched.  Updates run
    sequentially in path order, each seeing the values left by the previous
    one.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    q1 = q.q1.copy()
    q2 = q.q2.copy()
    order = best_state.x2
    for k in range(len(order) - 1):
        a, b = order[k], order[k + 1]
        q2[a, b] += alpha * (reward + gamma * q2[b].max() - q2[a, b])
        ma, mb = best_state.x1[a], best_state.x1[b]
        q1[ma, mb] += alpha * (reward + gamma * q1[mb].max() - q1[ma, mb])
    return QModel(q1=q1, q2=q2)


def run_hqm(inst: ProblemInstance, tasks: list[Task], cfg: HqmConfig) -> SolveResult:
    """Full solver loop: init, per-timestep global + local search, Q update.

    Stops early once both Q matrices change by less than `convergence_eps`
    between consecutive timesteps.  Deterministic for a given config.
    """
    if not tasks:
        raise ValueError("cannot solve an empty task list")
    n = len(tasks)
    n_mpls = inst.fleet.max_fleet
    rng = np.random.default_rng(cfg.seed)
    ctx = RoutingContext(inst, tasks, apply_buffer=cfg.apply_buffer)

    def evaluate(state: State) -> float:
        return evaluate_state(state, tasks, inst, cfg.policy, ctx=ctx)[0]

    started = time.perf_counter()
    agent = init_agent(n, n_mpls, cfg.agent_size, rng, evaluate)
    best_state = agent.states[0]
    best_reward = agent.rewards[0]

    q = QModel.zeros(n_mpls, n)
    trace = [best_reward]
    q1_deltas: list[float] = []
    q2_deltas: list[float] = []
    steps_run = 0

    for t in range(1, cfg.timesteps + 1):
        epsilon = float(rng.random()) if cfg.epsilon_mode == "uniform" else float(cfg.epsilon_mode)
        agent = global_step(agent, q, epsilon, rng, best_state, evaluate)
        best_state, best_reward = _take_best(agent, best_state, best_reward)
        if cfg.agent_size >= 2:
            agent = local_step(agent, rng, evaluate, n_mpls)
            best_state, best_reward = _take_best(agent, best_state, best_reward)

        alpha = alpha_schedule(t, cfg.timesteps, cfg.alpha_initial)
        q_new = update_q(q, best_state, best_reward, alpha, cfg.gamma)
        d1 = float(np.abs(q_new.q1 - q.q1).max())
        d2 = float(np.abs(q_new.q2 - q.q2).max())
        q = q_new

        trace.append(best_reward)
        q1_deltas.append(d1)
        q2_deltas.append(d2)
        steps_run = t
        if d1 < cfg.convergence_eps and d2 < cfg.convergence_eps:
            break

    wall = time.perf_counter() - started
    _, schedule, breakdown = evaluate_state(best_state, tasks, inst, cfg.policy, ctx=ctx)
    return SolveResult(
        best_state=best_state,
        best_reward=best_reward,
        reward_trace=trace,
        schedule=schedule,
        breakdown=breakdown,
        timesteps_run=steps_run,
        wall_time=wall,
        q1_deltas=q1_deltas,
        q2_deltas=q2_deltas,
    )


def _take_best(agent: Agent, best_state: State, best_reward: float) -> tuple[State, float]:
    for s, r in zip(agent.states, agent.rewards):
        if r > best_reward:
            best_state, best_reward = s, r
    return best_state, best_reward
