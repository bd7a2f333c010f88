"""Shared fixture builders for the test suite."""

import numpy as np

from robust_pgo2d import EdgeKind, PoseGraph, RelativeMeasurement, TrajectoryEstimate


def random_trajectory(rng, n, spread=5.0):
    theta = rng.uniform(-np.pi, np.pi, size=n)
    t = rng.uniform(-spread, spread, size=(n, 2))
    return TrajectoryEstimate(theta, t)


def measure(gt, i, j, kappa=1.0, tau=1.0, kind=EdgeKind.LOOP_CLOSURE, noise=(0.0, 0.0), rng=None):
    th, t = gt.theta, gt.t
    dth = th[j] - th[i]
    c, s = np.cos(th[i]), np.sin(th[i])
    d = t[j] - t[i]
    local = np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1]])
    if rng is not None:
        dth = dth + rng.normal(0.0, noise[0])
        local = local + rng.normal(0.0, noise[1], size=2)
    return RelativeMeasurement(i, j, dth, local, kappa, tau, kind)


def random_graph(rng, n, num_loops, noise=(0.0, 0.0), weights=None):
    """Random chain of ``n`` poses plus ``num_loops`` random loop closures.

    Precisions are drawn per edge unless ``weights`` gives (kappa, tau).
    Returns (graph, ground truth).
    """
    gt = random_trajectory(rng, n)

    def prec():
        if weights is not None:
            return weights
        return tuple(rng.uniform(0.5, 20.0, size=2))

    edges = []
    for i in range(n - 1):
        kappa, tau = prec()
        edges.append(measure(gt, i, i + 1, kappa, tau, EdgeKind.ODOMETRY, noise, rng))
    pairs = set()
    limit = n * (n - 1) // 2 - (n - 1)
    while len(pairs) < min(num_loops, limit):
        a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
        if b - a > 1:
            pairs.add((a, b))
    for a, b in sorted(pairs):
        kappa, tau = prec()
        if rng.random() < 0.5:
            a, b = b, a
        edges.append(measure(gt, a, b, kappa, tau, EdgeKind.LOOP_CLOSURE, noise, rng))
    return PoseGraph(n, edges), gt


def brute_force_weights(r2, c2, mu, grid_size=100_001, chunk=100):
    """Grid minimizer over w in [0, 1] of w*r2 + mu*(1-w)/(mu+w)*c2, per triple."""
    grid = np.linspace(0.0, 1.0, grid_size)
    out = np.empty(len(r2))
    for lo in range(0, len(r2), chunk):
        sl = slice(lo, lo + chunk)
        a, c, m = (np.asarray(v, dtype=float)[sl, None] for v in (r2, c2, mu))
        obj = grid * a + m * (1.0 - grid) / (m + grid) * c
        out[sl] = grid[np.argmin(obj, axis=1)]
    return out


def sample_weight_triples(rng, count):
    r2 = rng.uniform(0.0, 100.0, count)
    c2 = rng.uniform(0.1, 100.0, count)
    mu = 10.0 ** rng.uniform(-3.0, 3.0, count)
    return r2, c2, mu
