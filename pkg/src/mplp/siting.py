"""Parking-space siting.

Stopovers are clustered with Lloyd's k-means; `min_parking_spaces` searches
for the smallest cluster count whose centroids keep every stopover within its
owner's walking range.  `assign_to_spaces` is the fixed-centroid variant used
when an instance already carries usable parking spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    HOUR_GRID,
    Coord,
    MplpError,
    ParkingSpace,
    ProblemInstance,
    TimeWindow,
    _draw_window,
    validate_instance,
)

KMEANS_TOL_KM = 1e-6
KMEANS_MAX_ITER = 300
RESTARTS = 5


class SitingInfeasibleError(MplpError):
    """No cluster count can satisfy the walking-range condition."""


@dataclass
class KMeansResult:
    centroids: list[Coord]
    labels: list[int]  # parallel to the input points
    inertia: float
    iterations: int


@dataclass
class SitingResult:
    centroids: list[Coord]
    labels: dict[tuple[int, int], int]  # (customer id, stopover index) -> space id
    P: int
    inertia: float


def _kmeans_pp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(pts)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # All remaining points coincide with a chosen center; take the
            # lowest unchosen index to stay deterministic.
            remaining = [i for i in range(n) if i not in chosen]
            idx = remaining[0]
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((pts - pts[idx]) ** 2, axis=1))
    return pts[chosen].copy()


def kmeans(points: list[Coord], n_clusters: int, seed) -> KMeansResult:
    """Lloyd iterations from a k-means++ start.

    Nearest-centroid ties break toward the lowest centroid id; empty clusters
    are re-seeded at the point farthest from its assigned centroid.
    """
    if n_clusters < 1:
        raise ValueError("n_clusters must be >= 1")
    if len(points) < n_clusters:
        raise ValueError(
            f"infeasible cluster count: {n_clusters} clusters for {len(points)} points"
        )
    pts = np.array([[p.x, p.y] for p in points], dtype=float)
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(pts, n_clusters, rng)

    labels = np.zeros(len(pts), dtype=int)
    iterations = 0
    for iterations in range(1, KMEANS_MAX_ITER + 1):
        d2 = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties
        assigned_d2 = d2[np.arange(len(pts)), labels]
        for c in range(n_clusters):
            if not np.any(labels == c):
                far = int(np.argmax(assigned_d2))
                centroids[c] = pts[far]
                labels[far] = c
                assigned_d2[far] = 0.0
        new_centroids = np.vstack(
            [pts[labels == c].mean(axis=0) for c in range(n_clusters)]
        )
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < KMEANS_TOL_KM:
            break

    d2 = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(pts)), labels].sum())
    return KMeansResult(
        centroids=[Coord(float(c[0]), float(c[1])) for c in centroids],
        labels=[int(l) for l in labels],
        inertia=inertia,
        iterations=iterations,
    )


def _stopover_table(inst: ProblemInstance) -> tuple[list[tuple[int, int]], list[Coord], list[float]]:
    keys: list[tuple[int, int]] = []
    points: list[Coord] = []
    limits: list[float] = []
    radius = inst.fleet.service_radius
    for c in inst.customers:
        for k, s in enumerate(c.stopovers):
            keys.append((c.id, k))
            points.append(s.position)
            limits.append(min(c.max_walk, radius))
    return keys, points, limits


def assign_to_spaces(inst: ProblemInstance) -> SitingResult:
    """Label every stopover with its nearest existing parking space.

    This is the assignment used when the instance's own spaces are kept as the
    service sites; ties break toward the lowest space id.
    """
    if not inst.parking_spaces:
        raise ValueError("instance has no parking spaces to assign to")
    keys, points, _ = _stopover_table(inst)
    labels: dict[tuple[int, int], int] = {}
    inertia = 0.0
    for key, p in zip(keys, points):
        best = min(inst.parking_spaces, key=lambda s: (s.position.distance_to(p), s.id))
        labels[key] = best.id
        inertia += p.distance_to(best.position) ** 2
    return SitingResult(
        centroids=[s.position for s in sorted(inst.parking_spaces, key=lambda s: s.id)],
        labels=labels,
        P=len(inst.parking_spaces),
        inertia=inertia,
    )


def _inherit_window(centroid: Coord, anchors: list[ParkingSpace]) -> ParkingSpace | None:
    if not anchors:
        return None
    return min(anchors, key=lambda a: (a.position.distance_to(centroid), a.id))


def min_parking_spaces(
    inst: ProblemInstance,
    seed,
    max_clusters: int | None = None,
) -> SitingResult:
    """Find the smallest cluster count keeping every stopover in walking range.

    Cluster counts are tried incrementally from 1 (feasibility is not monotone
    under heuristic clustering, so no bisection), keeping the best of
    `RESTARTS` seeded runs per count.  On success the centroids replace the
    instance's parking spaces; each new space inherits the window and service
    time of the nearest previous anchor, or a freshly drawn window when the
    instance carried none.
    """
    problems = validate_instance(inst)
    if problems:
        raise ValueError("instance fails validation: " + "; ".join(problems))

    keys, points, limits = _stopover_table(inst)
    n_pts = len(points)
    cap = n_pts if max_clusters is None else min(max_clusters, n_pts)

    best_run: KMeansResult | None = None
    chosen_p = 0
    for p in range(1, cap + 1):
        runs = [kmeans(points, p, seed=[seed, p, r]) for r in range(RESTARTS)]
        run = min(enumerate(runs), key=lambda ir: (ir[1].inertia, ir[0]))[1]
        ok = all(
            pt.distance_to(run.centroids[lab]) <= lim
            for pt, lab, lim in zip(points, run.labels, limits)
        )
        if ok:
            best_run = run
            chosen_p = p
            break

    if best_run is None:
        # Report the customers that remain farthest out of range at the last count.
        worst: dict[int, float] = {}
        if cap >= 1:
            run = kmeans(points, cap, seed=[seed, cap, 0])
            for (cid, _k), pt, lab, lim in zip(keys, points, run.labels, limits):
                excess = pt.distance_to(run.centroids[lab]) - lim
                if excess > 0:
                    worst[cid] = max(worst.get(cid, 0.0), excess)
        offenders = ", ".join(
            f"customer {cid} (+{excess:.3f} km)"
            for cid, excess in sorted(worst.items(), key=lambda kv: -kv[1])[:5]
        )
        raise SitingInfeasibleError(
            f"no cluster count up to {cap} satisfies the walking-range condition"
            + (f"; worst: {offenders}" if offenders else "")
        )

    anchors = list(inst.parking_spaces)
    rng = np.random.default_rng([seed, 104729])  # window draws when no anchors exist
    new_spaces: list[ParkingSpace] = []
    for j, centroid in enumerate(best_run.centroids):
        anchor = _inherit_window(centroid, anchors)
        if anchor is not None:
            window = TimeWindow(anchor.window.start, anchor.window.end)
            service_time = anchor.service_time
        else:
            start = float(rng.choice(HOUR_GRID))
            window = _draw_window(rng, start, 50.0, 5.0)
            service_time = 10.0
        new_spaces.append(ParkingSpace(j, centroid, window, service_time))
    inst.parking_spaces = new_spaces

    labels = {key: lab for key, lab in zip(keys, best_run.labels)}
    return SitingResult(
        centroids=best_run.centroids,
        labels=labels,
        P=chosen_p,
        inertia=best_run.inertia,
    )
