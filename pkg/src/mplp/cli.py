"""Experiment harness: generate, site, tasks, solve, compare, sweep, oracle.

Every command is deterministic for a given argument set; wall-clock time
appears only in the metrics CSV so reruns reproduce artifacts byte for byte.

Exit codes: 0 success, 2 validation failure, 3 infeasibility, 4 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .ga import GaConfig, run_ga
from .hqm import HqmConfig, SolveResult, run_hqm
from .model import (
    BIG_M,
    FleetParams,
    GenConfig,
    MplpError,
    ProblemInstance,
    generate_instance,
    load_instance,
    save_instance,
    validate_instance,
)
from .objective import ConstraintCheck, validate_solution
from .oracle import DEFAULT_LIMIT, SearchSpaceError, brute_force_best
from .routing import AdjustPolicy, Schedule, State
from .siting import SitingInfeasibleError, SitingResult, assign_to_spaces, min_parking_spaces
from .stats import wilcoxon_signed_rank
from .taskgen import Task, UncoverableCustomerError, build_task_list

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_USAGE = 4

METRICS_COLUMNS = [
    "run_id",
    "seed",
    "algorithm",
    "policy",
    "fleet",
    "distance_km",
    "delay_min",
    "objective",
    "reward",
    "first_time_fulfilment",
    "improvement_rate",
    "wall_time_s",
]

SWEEP_COLUMNS = [
    "param",
    "value",
    "seed",
    "status",
    "fleet",
    "distance_km",
    "delay_min",
    "objective",
    "reward",
]

SWEEP_PARAMS = ("T_s", "T_p", "Q", "v", "r_m", "rho_c", "I", "N_n")

DEFAULT_CONFIG: dict[str, Any] = {
    "fleet": {
        "capacity": 20,
        "speed": 40.0,
        "service_radius": 5.0,
        "fixed_cost": 20000.0,
        "unit_travel_cost": 0.5,
        "max_fleet": None,  # None: one locker per customer
        "buffer_time": 10.0,
    },
    "weights": [10.0, 1.0, 5.0],
    "phi": BIG_M,
    "generation": {
        "area_side_km": 5.0,
        "service_time": 10.0,
        "customer_window_mean": 60.0,
        "customer_window_sd": 5.0,
        "parking_window_mean": 50.0,
        "parking_window_sd": 5.0,
        "walk_mean": 0.5,
        "walk_sd": 0.1,
    },
    "hqm": {
        "timesteps": 1000,
        "agent_size": 100,
        "gamma": 0.9,
        "alpha_initial": 0.9,
        "convergence_eps": 1e-8,
    },
    "ga": {
        "iterations": 1000,
        "pop_size": 100,
        "p_cross": 50.0,
        "elite_frac": 5.0,
        "mutation_rate": 5.0,
    },
    "oracle": {"limit": DEFAULT_LIMIT},
}


class UsageError(MplpError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunManifest:
    algorithm: str  # hqm | ga | oracle
    policy: str  # btd | hcps
    seeds: list[int]
    out_dir: str
    instance_path: str | None = None
    gen: dict[str, Any] | None = None  # n_parking / customers_per_space / overrides
    solver: dict[str, Any] = field(default_factory=dict)
    apply_buffer: bool = False


def first_time_fulfilment(schedule: Schedule, tasks: list[Task]) -> int:
    """Largest demand any locker delivers before its first depot reload."""
    demand = {t.id: t.demand for t in tasks}
    best = 0
    for route in schedule.routes:
        acc = 0
        for v in route:
            if v.via_depot:
                break
            acc += demand.get(v.task_id, 0)
        best = max(best, acc)
    return best


def improvement_rate(trace: Sequence[float]) -> float:
    """Relative gain of the final best reward over the initial one."""
    if not trace or trace[0] <= 0.0:
        return 0.0
    return (trace[-1] - trace[0]) / trace[0]


# --- config plumbing --------------------------------------------------------


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    payload = json.loads(Path(path).read_text())
    if not isinstance(payload, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return _deep_merge(DEFAULT_CONFIG, payload)


def _fleet_from_config(cfg: dict[str, Any], n_customers: int) -> FleetParams:
    f = cfg["fleet"]
    max_fleet = f.get("max_fleet")
    if max_fleet is None:
        max_fleet = max(1, n_customers)
    return FleetParams(
        capacity=int(f["capacity"]),
        speed=float(f["speed"]),
        service_radius=float(f["service_radius"]),
        fixed_cost=float(f["fixed_cost"]),
        unit_travel_cost=float(f["unit_travel_cost"]),
        max_fleet=int(max_fleet),
        buffer_time=float(f["buffer_time"]),
    )


def _gen_config(gen: dict[str, Any], seed: int, config: dict[str, Any]) -> GenConfig:
    g = config["generation"]
    return GenConfig(
        n_parking=int(gen["n_parking"]),
        customers_per_space=int(gen["customers_per_space"]),
        area_side_km=float(gen.get("area_side_km", g["area_side_km"])),
        seed=seed,
        service_time=float(gen.get("service_time", g["service_time"])),
        customer_window_mean=float(gen.get("customer_window_mean", g["customer_window_mean"])),
        customer_window_sd=float(gen.get("customer_window_sd", g["customer_window_sd"])),
        parking_window_mean=float(gen.get("parking_window_mean", g["parking_window_mean"])),
        parking_window_sd=float(gen.get("parking_window_sd", g["parking_window_sd"])),
        walk_mean=float(gen.get("walk_mean", g["walk_mean"])),
        walk_sd=float(gen.get("walk_sd", g["walk_sd"])),
    )


def _build_instance(manifest: RunManifest, seed: int, config: dict[str, Any]) -> ProblemInstance:
    if manifest.instance_path:
        return load_instance(manifest.instance_path)
    assert manifest.gen is not None
    gen = manifest.gen
    cfg = _gen_config(gen, seed, config)
    n_customers = cfg.n_parking * cfg.customers_per_space
    fleet = _fleet_from_config(config, n_customers)
    weights = tuple(float(w) for w in config["weights"])
    return generate_instance(cfg, fleet=fleet, weights=weights)  # type: ignore[arg-type]


# --- artifact writers -------------------------------------------------------


def _append_metrics(path: Path, row: dict[str, Any]) -> None:
    new_file = not path.exists()
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS)
        if new_file:
            writer.writeheader()
        writer.writerow(row)


def _write_trace(path: Path, result: SolveResult) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep", "best_reward", "q1_delta", "q2_delta"])
        for t, reward in enumerate(result.reward_trace):
            d1 = result.q1_deltas[t - 1] if result.q1_deltas and t >= 1 else ""
            d2 = result.q2_deltas[t - 1] if result.q2_deltas and t >= 1 else ""
            writer.writerow([t, repr(reward), repr(d1) if d1 != "" else "", repr(d2) if d2 != "" else ""])


def _schedule_doc(schedule: Schedule) -> dict[str, Any]:
    return {
        "fleet_used": schedule.fleet_used,
        "total_distance_km": schedule.total_distance,
        "total_delay_min": sum(schedule.delays.values()),
        "delays": {str(k): v for k, v in sorted(schedule.delays.items())},
        "routes": [
            [
                {
                    "task_id": v.task_id,
                    "space_id": v.space_id,
                    "arrive": v.arrive,
                    "depart": v.depart,
                    "via_depot": v.via_depot,
                    "wait_applied": v.wait_applied,
                    "load_after": v.load_after,
                }
                for v in route
            ]
            for route in schedule.routes
        ],
    }


def _solution_doc(
    manifest: RunManifest,
    seed: int,
    siting: SitingResult,
    tasks: list[Task],
    result: SolveResult,
    checks: list[ConstraintCheck],
) -> dict[str, Any]:
    return {
        "format": "mplp-solution-1",
        "algorithm": manifest.algorithm,
        "policy": manifest.policy,
        "seed": seed,
        "solver": manifest.solver,
        "siting": {
            "P": siting.P,
            "inertia": siting.inertia,
            "centroids": [{"x": c.x, "y": c.y} for c in siting.centroids],
            "labels": [
                [cid, k, space] for (cid, k), space in sorted(siting.labels.items())
            ],
        },
        "tasks": [
            {
                "task_id": t.id,
                "space_id": t.space_id,
                "a": t.sub.index,
                "e": t.sub.e,
                "l": t.sub.l,
                "demand": t.demand,
                "customer_ids": t.customer_ids,
            }
            for t in tasks
        ],
        "best_state": {"x1": list(result.best_state.x1), "x2": list(result.best_state.x2)},
        "best_reward": result.best_reward,
        "timesteps_run": result.timesteps_run,
        "breakdown": {
            "c1_fleet": result.breakdown.c1_fleet,
            "c2_travel": result.breakdown.c2_travel,
            "c3_delay": result.breakdown.c3_delay,
            "objective": result.breakdown.objective,
            "reward": result.breakdown.reward,
        },
        "schedule": _schedule_doc(result.schedule),
        "constraints": [
            {"name": c.name, "ok": c.ok, "detail": c.detail} for c in checks
        ],
    }


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- pipeline ---------------------------------------------------------------


def _prepare(inst: ProblemInstance) -> tuple[SitingResult, list[Task]]:
    """Default task pipeline: the instance's own spaces serve as the sites."""
    siting = assign_to_spaces(inst)
    tasks = build_task_list(inst, siting)
    return siting, tasks


def _solve_one(
    manifest: RunManifest,
    inst: ProblemInstance,
    tasks: list[Task],
    seed: int,
    config: dict[str, Any],
) -> SolveResult:
    solver = manifest.solver
    if manifest.algorithm == "hqm":
        cfg = HqmConfig(
            timesteps=int(solver.get("timesteps", config["hqm"]["timesteps"])),
            agent_size=int(solver.get("agent_size", config["hqm"]["agent_size"])),
            gamma=float(solver.get("gamma", config["hqm"]["gamma"])),
            alpha_initial=float(solver.get("alpha_initial", config["hqm"]["alpha_initial"])),
            convergence_eps=float(
                solver.get("convergence_eps", config["hqm"]["convergence_eps"])
            ),
            policy=AdjustPolicy(manifest.policy),
            seed=seed,
            apply_buffer=manifest.apply_buffer,
        )
        return run_hqm(inst, tasks, cfg)
    if manifest.algorithm == "ga":
        cfg = GaConfig(
            iterations=int(solver.get("iterations", config["ga"]["iterations"])),
            pop_size=int(solver.get("pop_size", config["ga"]["pop_size"])),
            p_cross=float(solver.get("p_cross", config["ga"]["p_cross"])),
            elite_frac=float(solver.get("elite_frac", config["ga"]["elite_frac"])),
            mutation_rate=float(solver.get("mutation_rate", config["ga"]["mutation_rate"])),
            policy=AdjustPolicy(manifest.policy),
            seed=seed,
            apply_buffer=manifest.apply_buffer,
        )
        return run_ga(inst, tasks, cfg)
    if manifest.algorithm == "oracle":
        started = time.perf_counter()
        limit = int(manifest.solver.get("limit", config["oracle"]["limit"]))
        res = brute_force_best(
            inst,
            tasks,
            AdjustPolicy(manifest.policy),
            limit=limit,
            apply_buffer=manifest.apply_buffer,
        )
        from .objective import evaluate_state  # late import keeps module load light

        _, schedule, breakdown = evaluate_state(
            res.best_state, tasks, inst, AdjustPolicy(manifest.policy)
        )
        return SolveResult(
            best_state=res.best_state,
            best_reward=res.best_reward,
            reward_trace=[res.best_reward],
            schedule=schedule,
            breakdown=breakdown,
            timesteps_run=0,
            wall_time=time.perf_counter() - started,
        )
    raise UsageError(f"unknown algorithm {manifest.algorithm!r}")


def run_manifest(manifest: RunManifest, config: dict[str, Any]) -> int:
    """Execute a solve manifest: one run directory per seed plus shared metrics."""
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"run_manifest-{manifest.algorithm}.json", asdict(manifest))
    all_ok = True
    for seed in manifest.seeds:
        inst = _build_instance(manifest, seed, config)
        problems = validate_instance(inst)
        if problems:
            print("instance validation failed:", "; ".join(problems), file=sys.stderr)
            return EXIT_VALIDATION
        siting, tasks = _prepare(inst)
        result = _solve_one(manifest, inst, tasks, seed, config)
        checks = validate_solution(result.schedule, tasks, inst)
        ok = all(c.ok for c in checks)
        all_ok = all_ok and ok

        run_dir = out / f"run-{manifest.algorithm}-{manifest.policy}-s{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        save_instance(inst, run_dir / "instance.mplp.json")
        _write_json(
            run_dir / "solution.json",
            _solution_doc(manifest, seed, siting, tasks, result, checks),
        )
        _write_trace(run_dir / "trace.csv", result)
        _append_metrics(
            out / "metrics.csv",
            {
                "run_id": f"{manifest.algorithm}-{manifest.policy}-s{seed}",
                "seed": seed,
                "algorithm": manifest.algorithm,
                "policy": manifest.policy,
                "fleet": result.schedule.fleet_used,
                "distance_km": repr(result.schedule.total_distance),
                "delay_min": repr(sum(result.schedule.delays.values())),
                "objective": repr(result.breakdown.objective),
                "reward": repr(result.breakdown.reward),
                "first_time_fulfilment": first_time_fulfilment(result.schedule, tasks),
                "improvement_rate": (
                    repr(improvement_rate(result.reward_trace))
                    if manifest.algorithm != "oracle"
                    else ""
                ),
                "wall_time_s": repr(result.wall_time),
            },
        )
        print(
            f"{manifest.algorithm}-{manifest.policy} seed={seed}: "
            f"reward={result.best_reward:.6g} fleet={result.schedule.fleet_used} "
            f"distance={result.schedule.total_distance:.3f}km "
            f"delay={sum(result.schedule.delays.values()):.3f}min "
            f"constraints={'ok' if ok else 'FAIL'}"
        )
    return EXIT_OK if all_ok else EXIT_VALIDATION


# --- commands ---------------------------------------------------------------


def _parse_gen(text: str) -> dict[str, Any]:
    try:
        left, right = text.lower().split("x")
        return {"n_parking": int(left), "customers_per_space": int(right)}
    except ValueError as exc:
        raise UsageError(f"--gen expects IxN (e.g. 5x10), got {text!r}") from exc


def _manifest_from_args(args: argparse.Namespace, algorithm: str) -> RunManifest:
    if getattr(args, "manifest", None):
        payload = json.loads(Path(args.manifest).read_text())
        return RunManifest(**payload)
    if not args.instance and not args.gen:
        raise UsageError("either --instance or --gen is required")
    solver: dict[str, Any] = {}
    for key in ("timesteps", "agent_size", "iterations", "pop_size", "limit"):
        value = getattr(args, key, None)
        if value is not None:
            solver[key] = value
    gen = _parse_gen(args.gen) if args.gen else None
    if gen is not None and getattr(args, "max_fleet", None) is not None:
        pass  # handled via config override below
    return RunManifest(
        algorithm=algorithm,
        policy=args.policy,
        seeds=args.seed or [0],
        out_dir=args.out,
        instance_path=args.instance,
        gen=gen,
        solver=solver,
        apply_buffer=bool(getattr(args, "apply_buffer", False)),
    )


def _apply_max_fleet(config: dict[str, Any], args: argparse.Namespace) -> None:
    if getattr(args, "max_fleet", None) is not None:
        config["fleet"]["max_fleet"] = int(args.max_fleet)


def cmd_generate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_max_fleet(config, args)
    gen = {"n_parking": args.parking, "customers_per_space": args.customers_per_space}
    if args.area is not None:
        gen["area_side_km"] = args.area
    seed = (args.seed or [0])[0]
    cfg = _gen_config(gen, seed, config)
    fleet = _fleet_from_config(config, cfg.n_parking * cfg.customers_per_space)
    inst = generate_instance(cfg, fleet=fleet, weights=tuple(config["weights"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out / "instance.mplp.json")
    print(f"wrote {out / 'instance.mplp.json'} "
          f"({len(inst.customers)} customers, {len(inst.parking_spaces)} spaces)")
    return EXIT_OK


def cmd_site(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    seed = (args.seed or [0])[0]
    siting = min_parking_spaces(inst, seed, max_clusters=args.max_clusters)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_instance(inst, out / "instance.sited.mplp.json")
    _write_json(
        out / "siting.json",
        {
            "P": siting.P,
            "inertia": siting.inertia,
            "centroids": [{"x": c.x, "y": c.y} for c in siting.centroids],
            "labels": [[cid, k, s] for (cid, k), s in sorted(siting.labels.items())],
        },
    )
    print(f"sited {siting.P} parking spaces (inertia {siting.inertia:.6f})")
    return EXIT_OK


def cmd_tasks(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    siting, tasks = _prepare(inst)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "tasks.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "space_id", "a", "e", "l", "demand", "customer_ids"])
        for t in tasks:
            writer.writerow(
                [t.id, t.space_id, t.sub.index, repr(t.sub.e), repr(t.sub.l), t.demand,
                 ";".join(str(c) for c in t.customer_ids)]
            )
    print(f"wrote {len(tasks)} tasks to {out / 'tasks.csv'}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, algorithm: str | None = None) -> int:
    config = load_config(args.config)
    _apply_max_fleet(config, args)
    if getattr(args, "policy", None) == "both":
        # One run per repair policy, plus the averaged-final-reward table.
        codes = []
        algo = algorithm or args.algo
        for policy in ("btd", "hcps"):
            manifest = _manifest_from_args(args, algo)
            manifest.policy = policy
            codes.append(run_manifest(manifest, config))
        out = Path(args.out)
        with (out / "avg_final_reward.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["algorithm", "seed", "reward_btd", "reward_hcps",
                             "avg_final_reward"])
            for seed in args.seed or [0]:
                rewards = {}
                for policy in ("btd", "hcps"):
                    doc = json.loads(
                        (out / f"run-{algo}-{policy}-s{seed}" / "solution.json").read_text()
                    )
                    rewards[policy] = doc["best_reward"]
                avg = (rewards["btd"] + rewards["hcps"]) / 2.0
                writer.writerow([algo, seed, repr(rewards["btd"]),
                                 repr(rewards["hcps"]), repr(avg)])
        return max(codes)
    manifest = _manifest_from_args(args, algorithm or args.algo)
    return run_manifest(manifest, config)


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_max_fleet(config, args)
    seeds = args.seed or []
    if len(seeds) < 5:
        raise UsageError("compare needs at least 5 paired seeds")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rewards: dict[str, list[float]] = {"hqm": [], "ga": []}
    rows = []
    for algorithm in ("hqm", "ga"):
        manifest = _manifest_from_args(args, algorithm)
        manifest.out_dir = str(out)
        code = run_manifest(manifest, config)
        if code != EXIT_OK:
            return code
    for seed in seeds:
        per_seed = {}
        for algorithm in ("hqm", "ga"):
            doc = json.loads(
                (out / f"run-{algorithm}-{args.policy}-s{seed}" / "solution.json").read_text()
            )
            per_seed[algorithm] = doc["best_reward"]
        hqm_r, ga_r = per_seed["hqm"], per_seed["ga"]
        gap = 100.0 * (hqm_r - ga_r) / hqm_r if hqm_r > 0 else float("nan")
        rewards["hqm"].append(hqm_r)
        rewards["ga"].append(ga_r)
        rows.append((seed, hqm_r, ga_r, gap))

    with (out / "compare.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "hqm_reward", "ga_reward", "gap_pct"])
        for seed, hqm_r, ga_r, gap in rows:
            writer.writerow([seed, repr(hqm_r), repr(ga_r), repr(gap)])

    try:
        test = wilcoxon_signed_rank(rewards["hqm"], rewards["ga"])
    except ValueError as exc:
        print(f"degenerate comparison: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"{'seed':>6} {'hqm':>14} {'ga':>14} {'gap_pct':>9}")
    for seed, hqm_r, ga_r, gap in rows:
        print(f"{seed:>6} {hqm_r:>14.6e} {ga_r:>14.6e} {gap:>9.2f}")
    z_text = "n/a" if test.z is None else f"{test.z:.4f}"
    print(
        f"wilcoxon: n={test.n} W+={test.w_plus} W-={test.w_minus} "
        f"method={test.method} Z={z_text} p={test.p_value:.6g}"
    )
    _write_json(
        out / "compare_summary.json",
        {
            "n": test.n,
            "w_plus": test.w_plus,
            "w_minus": test.w_minus,
            "z": test.z,
            "p_value": test.p_value,
            "method": test.method,
            "mean_gap_pct": sum(r[3] for r in rows) / len(rows),
        },
    )
    return EXIT_OK


_SWEEP_GEN_KEYS = {
    "T_s": "customer_window_mean",
    "T_p": "parking_window_mean",
    "rho_c": "walk_mean",
}
_SWEEP_FLEET_KEYS = {"Q": "capacity", "v": "speed", "r_m": "service_radius"}


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    _apply_max_fleet(config, args)
    if not args.gen:
        raise UsageError("sweep requires --gen IxN as the base recipe")
    base_gen = _parse_gen(args.gen)
    grid = [float(v) for v in args.grid.split(",") if v.strip() != ""]
    if not grid:
        raise UsageError("--grid must list at least one value")
    seeds = args.seed or [0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for value in grid:
        for seed in seeds:
            cell_config = json.loads(json.dumps(config))
            gen = dict(base_gen)
            if args.param in _SWEEP_GEN_KEYS:
                gen[_SWEEP_GEN_KEYS[args.param]] = value
            elif args.param in _SWEEP_FLEET_KEYS:
                cell_config["fleet"][_SWEEP_FLEET_KEYS[args.param]] = value
            elif args.param == "I":
                gen["n_parking"] = int(value)
            elif args.param == "N_n":
                gen["customers_per_space"] = int(value)
            manifest = RunManifest(
                algorithm=args.algo,
                policy=args.policy,
                seeds=[seed],
                out_dir=str(out / "cells"),
                gen=gen,
                solver={
                    k: getattr(args, k)
                    for k in ("timesteps", "agent_size", "iterations", "pop_size")
                    if getattr(args, k, None) is not None
                },
            )
            try:
                inst = _build_instance(manifest, seed, cell_config)
                problems = validate_instance(inst)
                if problems:
                    raise MplpError("; ".join(problems))
                _, tasks = _prepare(inst)
                result = _solve_one(manifest, inst, tasks, seed, cell_config)
                rows.append(
                    [
                        args.param,
                        repr(value),
                        seed,
                        "ok",
                        result.schedule.fleet_used,
                        repr(result.schedule.total_distance),
                        repr(sum(result.schedule.delays.values())),
                        repr(result.breakdown.objective),
                        repr(result.breakdown.reward),
                    ]
                )
            except MplpError as exc:
                rows.append([args.param, repr(value), seed, f"failed: {exc}", "", "", "", "", ""])

    with (out / "sweep.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)
    print(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return EXIT_OK


# --- argument parsing -------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, policies=("btd", "hcps")) -> None:
    parser.add_argument("--seed", type=int, action="append", help="seed (repeatable)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--policy", choices=list(policies), default="hcps")
    parser.add_argument("--config", help="JSON config file overriding the defaults")


def _add_solver_knobs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--timesteps", type=int)
    parser.add_argument("--agent-size", dest="agent_size", type=int)
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--pop-size", dest="pop_size", type=int)
    parser.add_argument("--max-fleet", dest="max_fleet", type=int)
    parser.add_argument("--apply-buffer", dest="apply_buffer", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mplp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random instance")
    p.add_argument("--parking", type=int, required=True)
    p.add_argument("--customers-per-space", dest="customers_per_space", type=int, required=True)
    p.add_argument("--area", type=float)
    p.add_argument("--max-fleet", dest="max_fleet", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("site", help="re-site parking spaces by clustering stopovers")
    p.add_argument("--instance", required=True)
    p.add_argument("--max-clusters", dest="max_clusters", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_site)

    p = sub.add_parser("tasks", help="emit the task table for an instance")
    p.add_argument("--instance", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tasks)

    p = sub.add_parser("solve", help="run one solver over one or more seeds")
    p.add_argument("--instance")
    p.add_argument("--gen", help="IxN recipe, e.g. 5x10")
    p.add_argument("--algo", choices=["hqm", "ga", "oracle"], default="hqm")
    p.add_argument("--limit", type=int, help="oracle state budget")
    p.add_argument("--manifest", help="JSON run manifest (overrides other flags)")
    _add_solver_knobs(p)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="paired hqm-vs-ga runs with a Wilcoxon test")
    p.add_argument("--instance")
    p.add_argument("--gen")
    _add_solver_knobs(p)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="solve across a one-parameter grid")
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--gen", help="IxN recipe, e.g. 8x10")
    p.add_argument("--algo", choices=["hqm", "ga"], default="hqm")
    _add_solver_knobs(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exhaustive optimum on a tiny instance")
    p.add_argument("--instance")
    p.add_argument("--gen")
    p.add_argument("--limit", type=int)
    p.add_argument("--manifest", help=argparse.SUPPRESS)
    _add_solver_knobs(p)
    _add_common(p)
    p.set_defaults(func=lambda a: cmd_solve(a, algorithm="oracle"))

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SitingInfeasibleError, UncoverableCustomerError, SearchSpaceError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MplpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
