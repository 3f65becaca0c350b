"""Area-regular partitions of a variety built on a fine sample.

The measure is realized as the empirical measure of the sample, so "equal
measure" means exactly-balanced sample counts (within one point).  Regions
come from capacity-balanced Lloyd iterations: farthest-point seeding, an
auction-style assignment (power-diagram prices adjusted until region counts
clear, then greedy lowest-regret swaps for the exact +-1 balance), and
recentering through the closest-point projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from . import varieties
from .varieties import PointConfig, VarietySpec

MAX_ITER = 200
STALL_LIMIT = 20
_CHUNK = 8192


@dataclass
class Partition:
    variety: str
    N: int
    seed: int
    sample: np.ndarray  # (S, n)
    assignment: np.ndarray  # (S,) int
    centers: np.ndarray  # (N, n)
    region_measure: np.ndarray  # (N,)
    region_diameter: np.ndarray  # (N,)
    norm_R: float
    iterations: int = 0
    converged: bool = True
    warnings: list[str] = field(default_factory=list)

    @property
    def sample_size(self) -> int:
        return self.sample.shape[0]

    def region_indices(self, i: int) -> np.ndarray:
        return np.nonzero(self.assignment == i)[0]


def _center_distances(spec: VarietySpec, pts, centers) -> np.ndarray:
    return varieties.cross_distances(spec, pts, centers)


def _farthest_point_init(spec, sample, N) -> np.ndarray:
    centers = np.empty((N, sample.shape[1]))
    centers[0] = sample[0]
    mind = _center_distances(spec, sample, centers[0:1])[:, 0]
    for i in range(1, N):
        centers[i] = sample[int(np.argmax(mind))]
        nd = _center_distances(spec, sample, centers[i : i + 1])[:, 0]
        np.minimum(mind, nd, out=mind)
    return centers


def _nearest_assignment(spec, sample, centers):
    """Plain nearest-center assignment, chunked (squared chordal scores
    order points identically to the geodesic distance on the built-ins)."""
    S = sample.shape[0]
    base = np.einsum("ij,ij->i", centers, centers)
    asn = np.empty(S, dtype=int)
    for lo in range(0, S, _CHUNK):
        hi = min(lo + _CHUNK, S)
        sc = base[None, :] - 2.0 * (sample[lo:hi] @ centers.T)
        asn[lo:hi] = np.argmin(sc, axis=1)
    return asn


def _flow_rebalance(spec, sample, centers, asn, capacity, knn: int = 8):
    """Repair a nearest-center assignment to exact capacities.

    Surpluses are routed to deficits along shortest paths in the
    center-adjacency graph (edge costs are inter-center distances), so
    excess mass travels through chains of neighboring regions; each unit of
    flow along an edge moves the donor point currently closest to the
    recipient center.  Every region stays a Voronoi cell plus/minus a thin
    boundary layer.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    N = centers.shape[0]
    counts = np.bincount(asn, minlength=N).astype(int)
    if (counts == capacity).all():
        return asn
    DC = _center_distances(spec, centers, centers)
    knn = min(knn, N - 1)
    order = np.argsort(DC, axis=1, kind="stable")[:, 1 : knn + 1]
    rows = np.repeat(np.arange(N), knn)
    cols = order.ravel()
    graph = csr_matrix(
        (DC[rows, cols], (rows, cols)), shape=(N, N)
    )
    graph = graph.maximum(graph.T)  # symmetric adjacency

    surplus = np.nonzero(counts > capacity)[0]
    if surplus.size:
        dist, pred = dijkstra(graph, indices=surplus, return_predecessors=True)
        pairs = []
        for si, s in enumerate(surplus):
            for t in np.nonzero(counts < capacity)[0]:
                if np.isfinite(dist[si, t]):
                    pairs.append((dist[si, t], int(s), int(t), si))
        pairs.sort()
        for _, s, t, si in pairs:
            move = min(counts[s] - capacity[s], capacity[t] - counts[t])
            if move <= 0:
                continue
            path = [t]
            while path[-1] != s:
                path.append(int(pred[si, path[-1]]))
            path.reverse()  # s ... t
            for a, b in zip(path[:-1], path[1:]):
                members = np.nonzero(asn == a)[0]
                d = _center_distances(spec, sample[members], centers[b : b + 1])[:, 0]
                chosen = members[np.argsort(d, kind="stable")[:move]]
                asn[chosen] = b
            counts[s] -= move
            counts[t] += move
    # safety net for disconnected adjacency: direct nearest-open moves
    while (counts > capacity).any():
        region = int(np.argmax(counts - capacity))
        members = np.nonzero(asn == region)[0]
        open_idx = np.nonzero(counts < capacity)[0]
        D = _center_distances(spec, sample[members], centers[open_idx])
        row, col = np.unravel_index(int(np.argmin(D)), D.shape)
        asn[members[row]] = open_idx[col]
        counts[open_idx[col]] += 1
        counts[region] -= 1
    return asn


def _swap_refine(spec, sample, centers, asn, rounds: int = 4, cap: int = 4000):
    """Balance-preserving local search: exchange point pairs between regions
    whenever the net squared-distance objective strictly decreases.

    A candidate is any point preferring another region; it is swapped with
    the partner point in the preferred region whose loss from moving the
    other way is smallest.  Swaps strictly lower the objective, so the pass
    terminates, and stray points left behind by the flow repair (large
    gain) always find a cheap boundary partner.
    """
    S = sample.shape[0]
    base = np.einsum("ij,ij->i", centers, centers)
    CT = centers.T
    for _ in range(rounds):
        cur = np.empty(S)
        best_other = np.empty(S)
        for lo in range(0, S, _CHUNK):
            hi = min(lo + _CHUNK, S)
            sc = base[None, :] - 2.0 * (sample[lo:hi] @ CT)
            rows = np.arange(hi - lo)
            cur[lo:hi] = sc[rows, asn[lo:hi]]
            sc[rows, asn[lo:hi]] = np.inf
            best_other[lo:hi] = sc[rows, np.argmin(sc, axis=1)]
        gain = cur - best_other
        cands = np.nonzero(gain > 1e-15)[0]
        if cands.size == 0:
            break
        cands = cands[np.lexsort((cands, -gain[cands]))][:cap]
        swapped = False
        for p in cands:
            sc_p = base - 2.0 * (sample[p] @ CT)
            a = int(asn[p])
            b = int(np.argmin(np.where(np.arange(len(base)) == a, np.inf, sc_p)))
            gain_p = sc_p[a] - sc_p[b]
            if gain_p <= 1e-15:
                continue
            partners = np.nonzero(asn == b)[0]
            loss = (base[a] - 2.0 * (sample[partners] @ centers[a])) - (
                base[b] - 2.0 * (sample[partners] @ centers[b])
            )
            q = partners[int(np.argmin(loss))]
            if gain_p - float(loss.min()) > 1e-15:
                asn[p], asn[q] = b, a
                swapped = True
        if not swapped:
            break
    return asn


def _point_center_distance(spec, sample, centers, asn) -> np.ndarray:
    c = centers[asn]
    if spec.name.startswith("sphere"):
        return np.arccos(np.clip(np.einsum("ij,ij->i", sample, c), -1.0, 1.0))
    return np.linalg.norm(sample - c, axis=1)


def _region_diameters(spec, sample, assignment, N) -> np.ndarray:
    out = np.zeros(N)
    for i in range(N):
        pts = sample[assignment == i]
        if pts.shape[0] < 2:
            continue
        best = 0.0
        for lo in range(0, pts.shape[0], 2048):
            best = max(best, float(_center_distances(spec, pts[lo : lo + 2048], pts).max()))
        out[i] = best
    return out


def area_regular_partition(
    spec: VarietySpec,
    N: int,
    sample_size: int | None = None,
    seed: int = 0,
    max_iter: int = MAX_ITER,
) -> Partition:
    """Equal-measure partition into N regions over a fine seeded sample.

    Sample counts per region are exactly floor(S/N) or ceil(S/N).  Raises
    InputError when sample_size < 100 * N.
    """
    if N < 1:
        raise InputError("N must be >= 1")
    if sample_size is None:
        # floor well above the 100*N precondition so small-N cells are smooth
        sample_size = max(100 * N, 20_000 if N >= 8 else 100 * N)
    if sample_size < 100 * N:
        raise InputError(f"sample_size {sample_size} below 100*N = {100 * N}")
    sample = varieties.sample_measure(spec, sample_size, seed)
    S = sample.shape[0]
    base, rem = divmod(S, N)
    capacity = np.full(N, base, dtype=int)
    capacity[:rem] += 1

    def recenter(centers, assignment):
        means = np.empty_like(centers)
        for i in range(N):
            members = sample[assignment == i]
            means[i] = members.mean(axis=0) if members.shape[0] else centers[i]
        return varieties.project_points(spec, means)

    # Phase 1: unconstrained Lloyd shapes the cells; phase 2 then enforces
    # exact counts, which only moves points near region boundaries.
    centers = _farthest_point_init(spec, sample, N)
    assignment = None
    for _ in range(min(max_iter, 60)):
        new_assignment = _nearest_assignment(spec, sample, centers)
        if assignment is not None and np.sum(new_assignment != assignment) <= S // 1000:
            assignment = new_assignment
            break
        assignment = new_assignment
        centers = recenter(centers, assignment)

    assignment = None
    best = None
    best_obj = np.inf
    stall = 0
    converged = False
    warnings = []
    it = 0
    for it in range(1, max_iter + 1):
        new_assignment = _nearest_assignment(spec, sample, centers)
        new_assignment = _flow_rebalance(spec, sample, centers, new_assignment, capacity)
        new_assignment = _swap_refine(spec, sample, centers, new_assignment, rounds=1, cap=2000)
        dist = _point_center_distance(spec, sample, centers, new_assignment)
        obj = float(np.sum(dist * dist))
        if best is None or obj < best_obj - 1e-12 * (1.0 + abs(best_obj)):
            best_obj = obj
            best = (new_assignment.copy(), centers.copy())
            stall = 0
        else:
            stall += 1
        if assignment is not None and np.sum(new_assignment != assignment) <= S // 2000:
            assignment = new_assignment
            converged = True
            break
        assignment = new_assignment
        if stall >= STALL_LIMIT:
            warnings.append(
                f"Lloyd made no improvement for {STALL_LIMIT} iterations; "
                "returning best assignment seen"
            )
            assignment, centers = best
            break
        centers = recenter(centers, assignment)
    else:
        warnings.append(f"Lloyd reached max_iter = {max_iter} without stabilizing")

    # final polish: exhaustive pair swaps, then recenter once
    assignment = _swap_refine(spec, sample, centers, assignment, rounds=8, cap=20_000)
    centers = recenter(centers, assignment)

    counts = np.bincount(assignment, minlength=N)
    diam = _region_diameters(spec, sample, assignment, N)
    return Partition(
        variety=spec.name,
        N=N,
        seed=seed,
        sample=sample,
        assignment=assignment,
        centers=centers,
        region_measure=counts / S,
        region_diameter=diam,
        norm_R=float(diam.max()),
        iterations=it,
        converged=converged,
        warnings=warnings,
    )


def ball_sandwich_check(partition: Partition, spec: VarietySpec):
    """Empirical constants of the ball sandwich around each region.

    c2_hat scales the largest center-to-member distance by N^{1/d}; c1_hat
    scales the smallest center-to-outside distance (the empirical inradius).
    """
    N = partition.N
    d = spec.intrinsic_dim
    scale = N ** (1.0 / d)
    circum = np.zeros(N)
    inrad = np.full(N, np.inf)
    for i in range(N):
        dists = _center_distances(spec, partition.sample, partition.centers[i : i + 1])[:, 0]
        inside = partition.assignment == i
        circum[i] = float(dists[inside].max())
        if (~inside).any():
            inrad[i] = float(dists[~inside].min())
    c2 = float(circum.max() * scale)
    c1 = float(inrad.min() * scale) if np.isfinite(inrad).all() else float(c2)
    return c1, c2


def pick_points(
    partition: Partition,
    strategy: str = "center",
    seed: int = 0,
    f=None,
    spec: VarietySpec | None = None,
) -> PointConfig:
    """One representative per region: its center, a seeded uniform draw from
    its sample points, or the sample point maximizing |tangential gradient|
    of ``f`` (strategy "worst_gradient", requires ``f`` and ``spec``)."""
    N = partition.N
    if strategy == "center":
        return PointConfig(partition.centers.copy(), partition.variety)
    if strategy == "random":
        rng = np.random.default_rng(seed)
        rows = np.empty((N, partition.sample.shape[1]))
        for i in range(N):
            members = partition.region_indices(i)
            rows[i] = partition.sample[rng.choice(members)]
        return PointConfig(rows, partition.variety)
    if strategy == "worst_gradient":
        if f is None or spec is None:
            raise InputError("worst_gradient strategy needs f and spec")
        g = varieties.tangential_gradient_batch(spec, f, partition.sample)
        mag = np.linalg.norm(g, axis=1)
        rows = np.empty((N, partition.sample.shape[1]))
        for i in range(N):
            members = partition.region_indices(i)
            rows[i] = partition.sample[members[int(np.argmax(mag[members]))]]
        return PointConfig(rows, partition.variety)
    raise InputError(f"unknown pick strategy {strategy!r}")


def sweep_scaling(spec: VarietySpec, N_list, seed: int = 0, sample_size=None):
    """Partition a range of N and fit log(norm_R) against log(N).

    Returns the fitted slope, the per-N diameters and sandwich constants,
    and the smallest N whose sandwich constants came out finite/positive.
    """
    rows = []
    for N in N_list:
        part = area_regular_partition(spec, N, sample_size, seed=seed)
        c1, c2 = ball_sandwich_check(part, spec)
        rows.append({"N": N, "norm_R": part.norm_R, "c1_hat": c1, "c2_hat": c2})
    logs = np.log([r["N"] for r in rows])
    logd = np.log([r["norm_R"] for r in rows])
    slope = float(np.polyfit(logs, logd, 1)[0])
    passing = [r["N"] for r in rows if 0 < r["c1_hat"] <= r["c2_hat"] < np.inf]
    return {
        "slope": slope,
        "rows": rows,
        "c2_spread": float(max(r["c2_hat"] for r in rows) / min(r["c2_hat"] for r in rows)),
        "first_passing_N": min(passing) if passing else None,
    }


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_partition(partition: Partition, spec: VarietySpec, path) -> None:
    c1, c2 = ball_sandwich_check(partition, spec)
    doc = {
        "variety": partition.variety,
        "N": partition.N,
        "seed": partition.seed,
        "sample_size": partition.sample_size,
        "centers": partition.centers.tolist(),
        "assignment": partition.assignment.tolist(),
        "norm_R": partition.norm_R,
        "c1_hat": c1,
        "c2_hat": c2,
        "iterations": partition.iterations,
        "converged": partition.converged,
        "warnings": partition.warnings,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_partition(path, spec: VarietySpec | None = None) -> Partition:
    """Rebuild a partition from JSON; the sample is regenerated from the
    recorded (variety, sample_size, seed), which is deterministic."""
    with open(path) as fh:
        doc = json.load(fh)
    if spec is None:
        spec = varieties.by_name(doc["variety"])
    sample = varieties.sample_measure(spec, int(doc["sample_size"]), int(doc["seed"]))
    assignment = np.asarray(doc["assignment"], dtype=int)
    N = int(doc["N"])
    counts = np.bincount(assignment, minlength=N)
    diam = _region_diameters(spec, sample, assignment, N)
    return Partition(
        variety=doc["variety"],
        N=N,
        seed=int(doc["seed"]),
        sample=sample,
        assignment=assignment,
        centers=np.asarray(doc["centers"], dtype=float),
        region_measure=counts / sample.shape[0],
        region_diameter=diam,
        norm_R=float(diam.max()),
        iterations=int(doc["iterations"]),
        converged=bool(doc["converged"]),
        warnings=list(doc["warnings"]),
    )
