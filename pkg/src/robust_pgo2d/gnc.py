"""Graduated non-convexity for truncated least squares.

The engine is problem agnostic.  It needs a weighted solver that returns
the exact minimizer for a given vector of loop-closure weights, and a way
to evaluate squared loop-closure residuals at a solution.  Odometry terms
are never weighted.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

MU_FALLBACK = 1e-4
MU_MIN = 1e-8
STALL_TOL = 1e-6
STALL_ITERATIONS = 5


@dataclass(frozen=True)
class GncConfig:
    c_squared: float
    continuation_factor: float = 1.4
    max_iterations: int = 100
    weight_binary_tol: float = 1e-3

    def __post_init__(self):
        if not self.c_squared > 0:
            raise ValueError(f"c_squared must be positive, got {self.c_squared}")
        if not self.continuation_factor > 1:
            raise ValueError(f"continuation factor must exceed 1, got {self.continuation_factor}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class GncIteration:
    iteration: int
    mu: float
    cost: float  # surrogate after the re-solve
    cost_after_weights: float  # surrogate after the weight update, before the re-solve
    cost_before: float  # surrogate with the previous weights and solution at this mu
    num_inlier_weights: int
    max_weight_change: float


@dataclass
class GncResult:
    solution: object
    weights: np.ndarray  # snapped to {0, 1}
    raw_weights: np.ndarray
    converged: bool
    trace: list = field(default_factory=list)
    initial_solution: object = None

    @property
    def inliers(self):
        return np.flatnonzero(self.weights > 0.5)


def weight_update(r_squared, c_squared, mu):
    """Closed-form minimizer over w in [0, 1] of w*r^2 + mu*(1-w)/(mu+w)*c^2.

    Broadcasts over all three arguments.
    """
    r2, c2, mu = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r_squared, c_squared, mu)))
    lower = mu / (mu + 1.0) * c2
    upper = (mu + 1.0) / mu * c2
    w = np.zeros(r2.shape)
    w[r2 <= lower] = 1.0
    mid = (r2 > lower) & (r2 < upper)
    if np.any(mid):
        m = mu[mid]
        w[mid] = np.sqrt(c2[mid] * m * (m + 1.0)) / np.sqrt(r2[mid]) - m
    np.clip(w, 0.0, 1.0, out=w)
    if w.ndim == 0:
        return float(w)
    return w


def initialize_mu(residuals_squared, c_squared):
    r2max = float(np.max(residuals_squared))
    if 2.0 * r2max > c_squared:
        mu = c_squared / (2.0 * r2max - c_squared)
    else:
        mu = MU_FALLBACK
    return max(mu, MU_MIN)


def surrogate_cost(fixed, r_squared, weights, c_squared, mu):
    w = np.asarray(weights, dtype=float)
    penalty = mu * (1.0 - w) / (mu + w) * c_squared
    return float(fixed + np.sum(w * r_squared + penalty))


def tls_cost(fixed, r_squared, c_squared):
    return float(fixed + np.sum(np.minimum(r_squared, c_squared)))


def _is_binary(w, tol):
    return bool(np.all((w <= tol) | (w >= 1.0 - tol)))


def _settled(weights, r2, c2, next_mu, tol):
    """Binary weights that the next update would leave on the same side.

    At tiny mu every weight is close to zero merely because of its scale
    ``c*sqrt(mu)/r``; the fixed-point check keeps that from passing as binary.
    """
    if not _is_binary(weights, tol):
        return False
    upcoming = weight_update(r2, c2, next_mu)
    return _is_binary(upcoming, tol) and np.array_equal(upcoming >= 0.5, weights >= 0.5)


def gnc_solve(solve, residuals_squared, num_weights, config, fixed_cost=None):
    """Run GNC-TLS.

    Parameters
    ----------
    solve : callable
        ``solve(weights) -> solution``; the exact weighted least-squares
        minimizer.
    residuals_squared : callable
        ``residuals_squared(solution) -> array`` of squared loop-closure
        residuals, length ``num_weights``.
    num_weights : int
    config : GncConfig
    fixed_cost : callable, optional
        Cost of the unweighted (odometry) terms at a solution.  Only enters
        the trace.

    Returns
    -------
    GncResult
    """
    fixed_cost = fixed_cost or (lambda x: 0.0)
    c2 = config.c_squared
    f = config.continuation_factor

    weights = np.ones(num_weights)
    x = solve(weights)
    x0 = x
    if num_weights == 0:
        return GncResult(x, weights, weights.copy(), True, [], initial_solution=x0)

    r2 = np.asarray(residuals_squared(x), dtype=float)
    if np.max(r2) <= c2:
        # every loop closure already passes the TLS gate; annealing from a
        # tiny mu would only drag the estimate toward odometry drift
        return GncResult(x, weights, weights.copy(), True, [], initial_solution=x0)
    mu = initialize_mu(r2, c2)
    fixed = fixed_cost(x)

    best = (tls_cost(fixed, r2, c2), x, weights.copy())
    trace = []
    converged = False
    stalled_for = 0
    for it in range(1, config.max_iterations + 1):
        cost_before = surrogate_cost(fixed, r2, weights, c2, mu)
        new_weights = weight_update(r2, c2, mu)
        cost_after_weights = surrogate_cost(fixed, r2, new_weights, c2, mu)
        change = float(np.max(np.abs(new_weights - weights)))
        weights = new_weights

        x = solve(weights)
        r2 = np.asarray(residuals_squared(x), dtype=float)
        fixed = fixed_cost(x)
        trace.append(
            GncIteration(
                iteration=it,
                mu=mu,
                cost=surrogate_cost(fixed, r2, weights, c2, mu),
                cost_after_weights=cost_after_weights,
                cost_before=cost_before,
                num_inlier_weights=int(np.count_nonzero(weights >= 0.5)),
                max_weight_change=change,
            )
        )
        true_cost = tls_cost(fixed, r2, c2)
        if true_cost < best[0]:
            best = (true_cost, x, weights.copy())

        if _settled(weights, r2, c2, mu * f, config.weight_binary_tol):
            converged = True
            break
        stalled_for = stalled_for + 1 if change < STALL_TOL else 0
        if stalled_for >= STALL_ITERATIONS:
            logger.warning("GNC stalled with non-binary weights after %d iterations", it)
            break
        mu *= f

    if not converged:
        logger.warning("GNC did not reach binary weights in %d iterations", len(trace))
        _, x, weights = best

    snapped = (weights >= 0.5).astype(float)
    # report the minimizer for the snapped weights, not the fractional ones
    x = solve(snapped)
    return GncResult(x, snapped, weights, converged, trace, initial_solution=x0)


TRACE_FIELDS = ("iteration", "mu", "cost", "num_inlier_weights")


def write_trace_csv(trace, stream):
    writer = csv.writer(stream)
    writer.writerow(TRACE_FIELDS)
    for row in trace:
        writer.writerow([row.iteration, repr(row.mu), repr(row.cost), row.num_inlier_weights])
