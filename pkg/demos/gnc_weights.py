"""How the GNC weights anneal on a small robust-averaging problem.

Thirty samples around 0 and ten gross outliers.  The solver is a weighted
mean with a unit prior at the origin, so every weight vector has an exact
minimizer and the engine sees the same interface as the pose-graph stages.
"""

import numpy as np

from robust_pgo2d import GncConfig, gnc_solve, weight_update

rng = np.random.default_rng(0)
values = np.concatenate([rng.normal(0.0, 0.3, 30), rng.uniform(4.0, 20.0, 10)])


def solve(w):
    return float(np.sum(w * values) / (1.0 + np.sum(w)))


def residuals_squared(x):
    return (x - values) ** 2


result = gnc_solve(solve, residuals_squared, values.size, GncConfig(c_squared=1.0))
print(f"plain mean {values.mean():.3f}, robust estimate {result.solution:.3f}")
print(f"kept {int(result.weights.sum())} of {values.size}; converged={result.converged}")
print("iter      mu       surrogate  inliers")
for row in result.trace:
    print(f"{row.iteration:4d}  {row.mu:10.4g}  {row.cost:10.4f}  {row.num_inlier_weights:4d}")

# The weight as a function of the residual sharpens into a step at c as mu grows.
r2 = np.linspace(0.0, 3.0, 7)
for mu in (0.1, 1.0, 10.0):
    print(f"mu={mu:5.1f}", np.round(weight_update(r2, 1.0, mu), 3))
