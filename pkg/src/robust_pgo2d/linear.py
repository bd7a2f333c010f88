"""Weighted linear least squares on the reduced incidence structure.

Both inner problems of the robust pipeline are linear once the
regularization integers (angles) or the rotations (translations) are
fixed::

    angles:        theta_j - theta_i + 2*pi*k_ij - dtheta_ij
    translations:  t_j - t_i - R_i dt_ij

Each edge row touches two unknowns with coefficients -1 and +1, vertex 0 is
eliminated, and the normal matrix is a weighted graph Laplacian with one
row/column removed.  :class:`IncidenceSolver` assembles that matrix from a
cached sparsity pattern so that repeated solves with new weights only
rewrite the numeric values.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import TWO_PI
from .regularization import regularized_residuals


class SingularSystemError(RuntimeError):
    pass


class IncidenceSolver:
    """Reusable normal-equation solver for one edge set.

    Parameters
    ----------
    num_vertices : int
    frm, to : int arrays
        Edge endpoints.  Vertex 0 is the anchor and is eliminated.
    """

    def __init__(self, num_vertices, frm, to):
        self.num_vertices = int(num_vertices)
        self.frm = np.asarray(frm, dtype=np.intp)
        self.to = np.asarray(to, dtype=np.intp)
        n = self.num_vertices - 1
        m = self.frm.size

        # unknown index of each endpoint, -1 for the anchor
        a = self.frm - 1
        b = self.to - 1
        rows = np.concatenate([a, b, a, b])
        cols = np.concatenate([a, b, b, a])
        sign = np.concatenate([np.ones(2 * m), -np.ones(2 * m)])
        edge = np.concatenate([np.arange(m)] * 4)
        keep = (rows >= 0) & (cols >= 0)
        rows, cols, sign, edge = rows[keep], cols[keep], sign[keep], edge[keep]

        # symbolic part: unique pattern plus, per contribution, its slot in data
        pattern = sp.csc_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(n, n)
        )
        pattern.sum_duplicates()
        pattern.sort_indices()
        # diagonal is always present because the odometry chain touches every vertex
        lin = cols.astype(np.int64) * n + rows
        p_cols = np.repeat(np.arange(n), np.diff(pattern.indptr))
        p_lin = p_cols.astype(np.int64) * n + pattern.indices
        self._slot = np.searchsorted(p_lin, lin)
        self._sign = sign
        self._edge = edge
        self._indices = pattern.indices.copy()
        self._indptr = pattern.indptr.copy()
        self._nnz = pattern.nnz
        self._n = n

        self._a = a
        self._b = b

    def normal_matrix(self, edge_weights):
        w = np.asarray(edge_weights, dtype=float)
        data = np.bincount(self._slot, weights=self._sign * w[self._edge], minlength=self._nnz)
        return sp.csc_matrix((data, self._indices, self._indptr), shape=(self._n, self._n))

    def rhs(self, edge_weights, y):
        """A^T W y for edge targets ``y`` of shape (m,) or (m, d)."""
        wy = np.asarray(edge_weights, dtype=float).reshape(-1, *([1] * (np.ndim(y) - 1))) * y
        out = np.zeros((self._n,) + np.shape(y)[1:])
        ma = self._a >= 0
        mb = self._b >= 0
        np.add.at(out, self._b[mb], wy[mb])
        np.subtract.at(out, self._a[ma], wy[ma])
        return out

    def solve(self, edge_weights, y):
        """Minimize sum_e w_e * (x_to - x_from - y_e)^2 with x_0 = 0.

        Returns the full vector (anchor included) and the normal-equation
        pieces ``(H, b)`` for diagnostics.
        """
        H = self.normal_matrix(edge_weights)
        b = self.rhs(edge_weights, y)
        try:
            lu = spla.splu(H, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise SingularSystemError(f"normal matrix is singular: {exc}") from None
        x = lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("normal equations produced non-finite solution")
        full = np.zeros((self.num_vertices,) + np.shape(y)[1:])
        full[1:] = x
        return full, H, b


class AngleSolver:
    """Weighted angle problem with fixed regularization integers.

    Odometry rows carry weight ``kappa``; loop-closure rows ``w * kappa``.
    """

    def __init__(self, graph, reg):
        self.graph = graph
        self.k = np.asarray(getattr(reg, "k", reg))
        self.target = graph.dtheta - TWO_PI * self.k
        self._solver = IncidenceSolver(graph.num_vertices, graph.frm, graph.to)

    def edge_weights(self, loop_weights=None):
        w = self.graph.kappa.copy()
        if loop_weights is not None:
            w[self.graph.loop_indices] *= np.asarray(loop_weights, dtype=float)
        return w

    def solve(self, loop_weights=None):
        theta, _, _ = self._solver.solve(self.edge_weights(loop_weights), self.target)
        return theta

    def solve_with_diagnostics(self, loop_weights=None):
        return self._solver.solve(self.edge_weights(loop_weights), self.target)

    def squared_residuals(self, theta):
        r = regularized_residuals(self.graph, theta, self.k)
        return self.graph.kappa * r * r

    def loop_residuals_squared(self, theta):
        return self.squared_residuals(theta)[self.graph.loop_indices]

    def fixed_cost(self, theta):
        return float(self.squared_residuals(theta)[self.graph.odometry_indices].sum())


class TranslationSolver:
    """Weighted translation problem with fixed rotations.

    x and y decouple and share one factorization (two right-hand sides).
    """

    def __init__(self, graph, rotations):
        self.graph = graph
        R = np.asarray(rotations, dtype=float)
        self.rotations = R
        # R_i dt_ij for every edge
        self.target = np.einsum("eab,eb->ea", R[graph.frm], graph.dt)
        self._solver = IncidenceSolver(graph.num_vertices, graph.frm, graph.to)

    def edge_weights(self, loop_weights=None):
        w = self.graph.tau.copy()
        if loop_weights is not None:
            w[self.graph.loop_indices] *= np.asarray(loop_weights, dtype=float)
        return w

    def solve(self, loop_weights=None):
        t, _, _ = self._solver.solve(self.edge_weights(loop_weights), self.target)
        return t

    def solve_with_diagnostics(self, loop_weights=None):
        return self._solver.solve(self.edge_weights(loop_weights), self.target)

    def squared_residuals(self, t):
        d = t[self.graph.to] - t[self.graph.frm] - self.target
        return self.graph.tau * np.einsum("ea,ea->e", d, d)

    def loop_residuals_squared(self, t):
        return self.squared_residuals(t)[self.graph.loop_indices]

    def fixed_cost(self, t):
        return float(self.squared_residuals(t)[self.graph.odometry_indices].sum())


def _check_weights(graph, weights):
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != graph.num_loop_closures:
        raise ValueError(
            f"expected {graph.num_loop_closures} loop-closure weights, got {w.size}"
        )
    if np.any(w < 0) or np.any(w > 1) or not np.all(np.isfinite(w)):
        raise ValueError("loop-closure weights must lie in [0, 1]")
    return w


def solve_angles(graph, reg, weights=None):
    """Anchored headings minimizing the weighted regularized angle cost.

    ``weights`` holds one value in [0, 1] per loop closure, in the order of
    ``graph.loop_indices``; None means all ones.  ``reg`` is a
    :class:`~robust_pgo2d.regularization.RegularizedAngles` or a plain
    per-edge integer array.
    """
    return AngleSolver(graph, reg).solve(_check_weights(graph, weights))


def solve_translations(graph, rotations, weights=None):
    """Anchored positions minimizing sum tau*w*|t_j - t_i - R_i dt_ij|^2."""
    return TranslationSolver(graph, rotations).solve(_check_weights(graph, weights))


@dataclass
class WeightedLinearSystem:
    """Explicit row list of a weighted least-squares problem.

    Each row is ``(edge, {unknown: coefficient}, rhs, weight)``.  Used to feed
    :func:`dense_oracle_solve` independently of the sparse assembly above.
    """

    num_unknowns: int
    rows: list = field(default_factory=list)

    def add_row(self, edge, coeffs, rhs, weight):
        if not np.isfinite(weight) or weight < 0:
            raise ValueError(f"row weight must be finite and >= 0, got {weight}")
        if len(coeffs) > 2:
            raise ValueError("incidence rows touch at most two unknowns")
        self.rows.append((edge, dict(coeffs), float(rhs), float(weight)))

    def dense(self):
        A = np.zeros((len(self.rows), self.num_unknowns))
        y = np.zeros(len(self.rows))
        w = np.zeros(len(self.rows))
        for r, (_edge, coeffs, rhs, weight) in enumerate(self.rows):
            for col, c in coeffs.items():
                A[r, col] += c
            y[r] = rhs
            w[r] = weight
        return A, y, w


def _incidence_row(i, j):
    coeffs = {}
    if j != 0:
        coeffs[j - 1] = 1.0
    if i != 0:
        coeffs[i - 1] = coeffs.get(i - 1, 0.0) - 1.0
    return coeffs


def angle_system(graph, k, weights=None):
    """Row-by-row angle system with vertex 0 eliminated (unknown v-1 is vertex v)."""
    k = np.asarray(getattr(k, "k", k))
    w = np.ones(graph.num_loop_closures) if weights is None else np.asarray(weights, dtype=float)
    lc_pos = {int(e): p for p, e in enumerate(graph.loop_indices)}
    system = WeightedLinearSystem(graph.num_vertices - 1)
    for e, edge in enumerate(graph.edges):
        scale = w[lc_pos[e]] if e in lc_pos else 1.0
        system.add_row(e, _incidence_row(edge.i, edge.j), edge.dtheta - TWO_PI * k[e], edge.kappa * scale)
    return system


def translation_system(graph, rotations, axis, weights=None):
    """Row-by-row system for one coordinate axis of the translation problem."""
    w = np.ones(graph.num_loop_closures) if weights is None else np.asarray(weights, dtype=float)
    lc_pos = {int(e): p for p, e in enumerate(graph.loop_indices)}
    system = WeightedLinearSystem(graph.num_vertices - 1)
    for e, edge in enumerate(graph.edges):
        scale = w[lc_pos[e]] if e in lc_pos else 1.0
        target = rotations[edge.i] @ np.array(edge.dt)
        system.add_row(e, _incidence_row(edge.i, edge.j), target[axis], edge.tau * scale)
    return system


def dense_oracle_solve(system, max_unknowns=200):
    """Minimizer of a :class:`WeightedLinearSystem` via dense Cholesky.

    Test oracle only; refuses systems larger than ``max_unknowns``.
    """
    if system.num_unknowns > max_unknowns:
        raise ValueError(f"dense oracle limited to {max_unknowns} unknowns")
    A, y, w = system.dense()
    H = A.T @ (w[:, None] * A)
    b = A.T @ (w * y)
    try:
        c = scipy.linalg.cho_factor(H)
    except np.linalg.LinAlgError:
        raise SingularSystemError("normal matrix is rank deficient") from None
    return scipy.linalg.cho_solve(c, b)


def normal_equation_residual(H, x, b):
    """Relative residual |H x - b| / (1 + |b|) of a solve (anchor dropped from x)."""
    x = np.asarray(x)
    r = H @ x - b
    return float(np.linalg.norm(r) / (1.0 + np.linalg.norm(b)))
