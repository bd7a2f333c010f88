"""Synthetic planar pose graphs and outlier injection."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import wrap_angles
from .graph import EdgeKind, PoseGraph, RelativeMeasurement, TrajectoryEstimate
from .regularization import unwrapped_chain

# Precision used when a noise level is zero; measurements are then exact but
# the solvers still need finite weights.
NOISELESS_SIGMA = 1e-3

NEAR_FACTOR = 1.5


@dataclass(frozen=True)
class Grid:
    rows: int
    cols: int
    step: float = 1.0

    @property
    def num_poses(self):
        return self.rows * self.cols


@dataclass(frozen=True)
class RandomWalk:
    n: int
    step: float = 1.0
    turn_sigma: float = 0.3


@dataclass(frozen=True)
class SyntheticSpec:
    layout: object
    sigma_theta: float = 0.0
    sigma_t: float = 0.0
    loop_closure_probability: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.sigma_theta < 0 or self.sigma_t < 0:
            raise ValueError("noise standard deviations must be non-negative")
        if not 0.0 <= self.loop_closure_probability <= 1.0:
            raise ValueError("loop_closure_probability must lie in [0, 1]")

    @property
    def kappa(self):
        return 1.0 / max(self.sigma_theta, NOISELESS_SIGMA) ** 2

    @property
    def tau(self):
        return 1.0 / max(self.sigma_t, NOISELESS_SIGMA) ** 2


@dataclass(frozen=True)
class InjectionSpec:
    outlier_rate: float
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.outlier_rate < 1.0:
            raise ValueError(f"outlier rate must lie in [0, 1), got {self.outlier_rate}")

    def count(self, num_true):
        return int(round(self.outlier_rate / (1.0 - self.outlier_rate) * num_true))


def grid_trajectory(layout):
    """Boustrophedon sweep over a rows x cols lattice, heading along travel."""
    if layout.rows < 1 or layout.cols < 1 or layout.num_poses < 2:
        raise ValueError("grid layout needs at least two poses")
    pts = []
    for r in range(layout.rows):
        cols = range(layout.cols) if r % 2 == 0 else range(layout.cols - 1, -1, -1)
        pts.extend((c * layout.step, r * layout.step) for c in cols)
    pts = np.array(pts, dtype=float)
    d = np.diff(pts, axis=0)
    heading = np.arctan2(d[:, 1], d[:, 0])
    heading = np.append(heading, heading[-1])
    return TrajectoryEstimate(heading, pts)


def random_walk_trajectory(layout, rng):
    if layout.n < 2:
        raise ValueError("random walk needs at least two poses")
    turns = rng.normal(0.0, layout.turn_sigma, size=layout.n - 1)
    heading = np.concatenate(([0.0], np.cumsum(turns)))
    steps = layout.step * np.stack([np.cos(heading[:-1]), np.sin(heading[:-1])], axis=1)
    pts = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])
    return TrajectoryEstimate(wrap_angles(heading), pts)


def near_pairs(positions, radius):
    """Non-consecutive index pairs (i < j) closer than ``radius``."""
    pairs = cKDTree(positions).query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        return np.empty((0, 2), dtype=np.intp)
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[pairs[:, 1] - pairs[:, 0] > 1]
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def simulate_measurements(ground_truth, pairs, sigma_theta, sigma_t, kappa, tau, kinds, rng):
    """Noisy relative measurements for each ``(i, j)`` in ``pairs``."""
    pairs = np.asarray(pairs, dtype=np.intp).reshape(-1, 2)
    i, j = pairs[:, 0], pairs[:, 1]
    th, t = ground_truth.theta, ground_truth.t
    eps_th = rng.normal(0.0, 1.0, size=len(pairs)) * sigma_theta
    eps_t = rng.normal(0.0, 1.0, size=(len(pairs), 2)) * sigma_t
    dtheta = wrap_angles(th[j] - th[i] + eps_th)
    c, s = np.cos(th[i]), np.sin(th[i])
    d = t[j] - t[i]
    local = np.stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]], axis=1) + eps_t
    return [
        RelativeMeasurement(int(a), int(b), dtheta[e], local[e], kappa, tau, kinds[e])
        for e, (a, b) in enumerate(pairs)
    ]


def generate_synthetic(spec):
    """Sample a pose graph and its ground truth.

    Loop closures connect non-consecutive poses closer than 1.5 step lengths,
    each kept with ``spec.loop_closure_probability``.  Rotation noise is
    Gaussian on the angle.

    Returns
    -------
    graph : PoseGraph
    ground_truth : TrajectoryEstimate
    """
    rng = np.random.default_rng(spec.rng_seed)
    layout = spec.layout
    if isinstance(layout, Grid):
        gt = grid_trajectory(layout)
    elif isinstance(layout, RandomWalk):
        gt = random_walk_trajectory(layout, rng)
    else:
        raise TypeError(f"unknown layout {layout!r}")

    n = len(gt)
    odo = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
    cand = near_pairs(gt.t, NEAR_FACTOR * layout.step + 1e-9)
    loops = cand[rng.random(len(cand)) < spec.loop_closure_probability]
    pairs = np.vstack([odo, loops])
    kinds = [EdgeKind.ODOMETRY] * len(odo) + [EdgeKind.LOOP_CLOSURE] * len(loops)
    edges = simulate_measurements(
        gt, pairs, spec.sigma_theta, spec.sigma_t, spec.kappa, spec.tau, kinds, rng
    )
    return PoseGraph(n, edges), gt


def dead_reckoning(graph):
    """Trajectory obtained by composing the odometry chain from pose 0."""
    tree = graph.tree_edges()
    heading = unwrapped_chain(graph, tree)
    n = graph.num_vertices
    t = np.zeros((n, 2))
    for m in range(n - 1):
        e = tree[m]
        c, s = math.cos(heading[m]), math.sin(heading[m])
        dx, dy = graph.dt[e]
        if graph.frm[e] == m:
            step = np.array([c * dx - s * dy, s * dx + c * dy])
        else:
            # edge stored as (m+1 -> m): invert it
            c1, s1 = math.cos(heading[m + 1]), math.sin(heading[m + 1])
            step = -np.array([c1 * dx - s1 * dy, s1 * dx + c1 * dy])
        t[m + 1] = t[m] + step
    return TrajectoryEstimate(heading, t)


def inject_outliers(graph, spec, extent=None):
    """Append random loop closures between unrelated poses.

    The number added is ``round(rate / (1 - rate) * L)`` for ``L`` existing loop
    closures.  Pairs are uniform over non-consecutive vertex pairs not already
    joined by a loop closure (either direction).  Measurements: heading uniform
    on (-pi, pi], translation uniform over ``[-w, w] x [-h, h]`` where ``w, h``
    are the width and height of ``extent`` (an (n, 2) array of positions;
    defaults to dead-reckoned odometry).  Precisions copy the median of the
    existing loop closures (odometry if there are none).

    Returns
    -------
    graph : PoseGraph
        Original edges followed by the injected ones.
    injected : frozenset of int
        Edge indices of the injected loop closures.
    """
    n = graph.num_vertices
    count = spec.count(graph.num_loop_closures)
    if count == 0:
        return graph, frozenset()

    taken = {(min(a, b), max(a, b)) for a, b in zip(graph.frm[graph.loop_indices], graph.to[graph.loop_indices])}
    available = n * (n - 1) // 2 - (n - 1) - len(taken)
    if count > available:
        raise ValueError(f"cannot inject {count} outliers: only {available} free vertex pairs")

    rng = np.random.default_rng(spec.rng_seed)
    chosen = []
    while len(chosen) < count:
        a, b = rng.choice(n, size=2, replace=False)
        a, b = int(a), int(b)
        key = (min(a, b), max(a, b))
        if key[1] - key[0] == 1 or key in taken:
            continue
        taken.add(key)
        chosen.append(key)

    pos = dead_reckoning(graph).t if extent is None else np.asarray(extent, dtype=float)
    span = np.maximum(pos.max(axis=0) - pos.min(axis=0), 1.0)

    src = graph.loop_indices if graph.num_loop_closures else graph.odometry_indices
    kappa = float(np.median(graph.kappa[src]))
    tau = float(np.median(graph.tau[src]))

    # draw measurements after all pairs so pair selection is independent of them
    u = rng.random(count)
    dtheta = math.pi - 2.0 * math.pi * u  # uniform on (-pi, pi]
    dt = rng.uniform(-span, span, size=(count, 2))

    new = [
        RelativeMeasurement(a, b, dtheta[k], dt[k], kappa, tau, EdgeKind.LOOP_CLOSURE)
        for k, (a, b) in enumerate(chosen)
    ]
    start = graph.num_edges
    return graph.with_edges(new), frozenset(range(start, start + count))
