"""Coupled planar PGO cost and its Gauss-Newton refinement.

Per edge the cost is::

    kappa * ||R_j - R_i Rm||_F^2 + tau * ||t_j - t_i - R_i dt||^2

For planar rotations ``||R(a) - R(b)||_F^2 = 8 sin^2((a - b) / 2)``, so the
rotation term is the square of the scalar residual
``sqrt(8 kappa) * sin(e / 2)`` with ``e = theta_j - theta_i - dtheta``.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import TrajectoryEstimate

logger = logging.getLogger(__name__)

SQRT8 = np.sqrt(8.0)


def _edge_mask(graph, inliers):
    """Odometry edges plus the listed loop closures."""
    mask = ~graph.is_loop.copy()
    if inliers is None:
        mask[:] = True
    else:
        idx = np.asarray(sorted(int(e) for e in inliers), dtype=np.intp)
        if idx.size and not np.all(graph.is_loop[idx]):
            raise ValueError("inlier set must contain loop-closure edge indices only")
        mask[idx] = True
    return mask


def edge_costs(graph, estimate):
    """Per-edge coupled squared residuals (rotation part, translation part)."""
    th, t = estimate.theta, estimate.t
    i, j = graph.frm, graph.to
    e = th[j] - th[i] - graph.dtheta
    rot = graph.kappa * 8.0 * np.sin(0.5 * e) ** 2
    c, s = np.cos(th[i]), np.sin(th[i])
    dx, dy = graph.dt[:, 0], graph.dt[:, 1]
    rdt = np.stack([c * dx - s * dy, s * dx + c * dy], axis=1)
    d = t[j] - t[i] - rdt
    trans = graph.tau * np.einsum("ea,ea->e", d, d)
    return rot, trans


def pgo_cost(graph, estimate, inliers=None):
    """Coupled cost summed over odometry and the given loop closures (all if None)."""
    rot, trans = edge_costs(graph, estimate)
    mask = _edge_mask(graph, inliers)
    return float(np.sum(rot[mask] + trans[mask]))


def evaluate_tls_pgo_cost(graph, estimate, c):
    """Truncated coupled cost: odometry squared, loop closures capped at ``c**2``."""
    rot, trans = edge_costs(graph, estimate)
    r2 = rot + trans
    lc = graph.is_loop
    return float(np.sum(r2[~lc]) + np.sum(np.minimum(r2[lc], c * c)))


@dataclass
class RefinementResult:
    estimate: TrajectoryEstimate
    cost: float
    initial_cost: float
    iterations: int
    stalled: bool


def _residuals_and_jacobian(graph, mask, theta, t, with_jacobian=True):
    idx = np.flatnonzero(mask)
    i, j = graph.frm[idx], graph.to[idx]
    kappa, tau = graph.kappa[idx], graph.tau[idx]
    dtheta, dt = graph.dtheta[idx], graph.dt[idx]
    m = idx.size
    n = graph.num_vertices

    e = theta[j] - theta[i] - dtheta
    sk, st = np.sqrt(8.0 * kappa), np.sqrt(tau)
    r_rot = sk * np.sin(0.5 * e)
    c, s = np.cos(theta[i]), np.sin(theta[i])
    rdt = np.stack([c * dt[:, 0] - s * dt[:, 1], s * dt[:, 0] + c * dt[:, 1]], axis=1)
    r_t = st[:, None] * (t[j] - t[i] - rdt)
    r = np.concatenate([r_rot, r_t[:, 0], r_t[:, 1]])
    if not with_jacobian:
        return r, None

    # unknowns: [theta_1..theta_{n-1}, tx_1.., ty_1..]; column -1 means anchored
    def th_col(v):
        return v - 1

    def tx_col(v):
        return np.where(v > 0, (n - 1) + v - 1, -1)

    def ty_col(v):
        return np.where(v > 0, 2 * (n - 1) + v - 1, -1)

    rows, cols, vals = [], [], []

    def add(row, col, val):
        keep = col >= 0
        rows.append(row[keep])
        cols.append(col[keep])
        vals.append(val[keep])

    rr = np.arange(m)
    drot = 0.5 * sk * np.cos(0.5 * e)
    add(rr, th_col(j), drot)
    add(rr, th_col(i), -drot)

    # d(R_i dt)/dtheta_i = [-s dx - c dy, c dx - s dy] = perp(R_i dt)
    d_rdt = np.stack([-rdt[:, 1], rdt[:, 0]], axis=1)
    for axis, col_fn in ((0, tx_col), (1, ty_col)):
        row = rr + (axis + 1) * m
        add(row, col_fn(j), st)
        add(row, col_fn(i), -st)
        add(row, th_col(i), -st * d_rdt[:, axis])

    J = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * m, 3 * (n - 1)),
    )
    return r, J


def _pack(theta, t):
    return np.concatenate([theta[1:], t[1:, 0], t[1:, 1]])


def _unpack(x, n):
    theta = np.concatenate(([0.0], x[: n - 1]))
    t = np.zeros((n, 2))
    t[1:, 0] = x[n - 1 : 2 * (n - 1)]
    t[1:, 1] = x[2 * (n - 1) :]
    return theta, t


def refine_gauss_newton(
    graph,
    inliers,
    init,
    max_iterations=100,
    rel_tol=1e-9,
    lambda_init=1e-6,
    max_damping_tries=12,
    step_tol=1e-12,
):
    """Minimize the coupled cost over odometry + ``inliers`` starting from ``init``.

    Gauss-Newton steps; a failed step retries with ``lambda * diag(H)``
    added to the normal matrix (lambda x10 per failure, /10 after success).
    Stops on a relative cost decrease below ``rel_tol`` or an accepted step
    with max-norm below ``step_tol * (1 + |x|)``.  ``init`` is re-anchored at
    pose 0 first.  The returned cost never exceeds the initial cost.
    """
    n = graph.num_vertices
    mask = _edge_mask(graph, inliers)
    start = init.anchored(0)
    x = _pack(start.theta, start.t)

    r, J = _residuals_and_jacobian(graph, mask, *_unpack(x, n))
    cost = float(r @ r)
    initial_cost = cost
    lam = lambda_init
    stalled = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        H = (J.T @ J).tocsc()
        g = J.T @ r
        diag = H.diagonal()
        accepted = False
        for _ in range(max_damping_tries):
            try:
                A = H + sp.diags(lam * diag) if lam > 0 else H
                step = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(-g)
            except RuntimeError:
                lam = max(lam, 1e-6) * 10.0
                continue
            x_new = x + step
            r_new, _ = _residuals_and_jacobian(graph, mask, *_unpack(x_new, n), with_jacobian=False)
            new_cost = float(r_new @ r_new)
            if new_cost <= cost:
                accepted = True
                break
            lam = max(lam, 1e-12) * 10.0
        if not accepted:
            stalled = True
            logger.info("refinement stalled after %d iterations", iterations)
            break
        decrease = cost - new_cost
        x = x_new
        lam = lam / 10.0
        prev_cost, cost = cost, new_cost
        r, J = _residuals_and_jacobian(graph, mask, *_unpack(x, n))
        if decrease <= rel_tol * max(prev_cost, np.finfo(float).tiny):
            break
        if np.max(np.abs(step), initial=0.0) <= step_tol * (1.0 + np.max(np.abs(x), initial=0.0)):
            break

    theta, t = _unpack(x, n)
    return RefinementResult(TrajectoryEstimate(theta, t), cost, initial_cost, iterations, stalled)
