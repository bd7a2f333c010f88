"""Pose-graph data model.

A :class:`PoseGraph` is a chain of odometry edges ``(i, i+1)`` plus an
arbitrary set of loop closures.  Vertex 0 is the anchor.  Besides the list
of :class:`RelativeMeasurement` records the graph keeps read-only numpy
arrays of the edge attributes, which is what the solvers work with.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import canonicalize_angle, rotations_from_angles, wrap_angles


class GraphValidationError(ValueError):
    pass


class EdgeKind(str, Enum):
    ODOMETRY = "odometry"
    LOOP_CLOSURE = "loop_closure"


@dataclass(frozen=True)
class RelativeMeasurement:
    """Relative pose measurement from vertex ``i`` to vertex ``j``.

    ``dtheta`` is canonicalized into (-pi, pi] on construction.  ``kappa`` is
    the rotational precision and ``tau`` the (isotropic) translational
    precision.
    """

    i: int
    j: int
    dtheta: float
    dt: tuple
    kappa: float
    tau: float
    kind: EdgeKind = EdgeKind.LOOP_CLOSURE

    def __post_init__(self):
        if not (self.kappa > 0 and self.tau > 0):
            raise GraphValidationError(
                f"edge ({self.i}, {self.j}): kappa and tau must be positive, "
                f"got kappa={self.kappa}, tau={self.tau}"
            )
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "i", int(self.i))
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "dtheta", canonicalize_angle(self.dtheta))
        dt = tuple(float(v) for v in self.dt)
        if len(dt) != 2:
            raise GraphValidationError(f"dt must have two components, got {self.dt!r}")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "kind", EdgeKind(self.kind))

    @property
    def is_loop_closure(self):
        return self.kind is EdgeKind.LOOP_CLOSURE


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class PoseGraph:
    """Planar pose graph with an odometry chain and loop closures.

    Parameters
    ----------
    num_vertices : int
    edges : sequence of RelativeMeasurement
        Order is preserved; edge indices used throughout the package refer
        to positions in this sequence.
    """

    anchor = 0

    def __init__(self, num_vertices, edges):
        self.num_vertices = int(num_vertices)
        self.edges = tuple(edges)
        if self.num_vertices < 2:
            raise GraphValidationError("a pose graph needs at least two vertices")
        self._validate()

        m = len(self.edges)
        self.frm = _frozen(np.array([e.i for e in self.edges], dtype=np.intp))
        self.to = _frozen(np.array([e.j for e in self.edges], dtype=np.intp))
        self.dtheta = _frozen(np.array([e.dtheta for e in self.edges], dtype=float))
        self.dt = _frozen(np.array([e.dt for e in self.edges], dtype=float).reshape(m, 2))
        self.kappa = _frozen(np.array([e.kappa for e in self.edges], dtype=float))
        self.tau = _frozen(np.array([e.tau for e in self.edges], dtype=float))
        self.is_loop = _frozen(np.array([e.is_loop_closure for e in self.edges], dtype=bool))
        self.loop_indices = _frozen(np.flatnonzero(self.is_loop))
        self.odometry_indices = _frozen(np.flatnonzero(~self.is_loop))

    def _validate(self):
        n = self.num_vertices
        covered = np.zeros(n - 1, dtype=bool)
        seen_loops = set()
        for idx, e in enumerate(self.edges):
            if not (0 <= e.i < n and 0 <= e.j < n):
                raise GraphValidationError(
                    f"edge {idx} ({e.i}, {e.j}) references a vertex outside 0..{n - 1}"
                )
            if e.i == e.j:
                raise GraphValidationError(f"edge {idx} is a self-loop on vertex {e.i}")
            if e.kind is EdgeKind.ODOMETRY:
                if abs(e.i - e.j) != 1:
                    raise GraphValidationError(
                        f"odometry edge {idx} ({e.i}, {e.j}) does not join consecutive vertices"
                    )
                covered[min(e.i, e.j)] = True
            else:
                key = (e.i, e.j)
                if key in seen_loops:
                    raise GraphValidationError(f"duplicate loop closure ({e.i}, {e.j})")
                seen_loops.add(key)
        if not covered.all():
            gap = int(np.flatnonzero(~covered)[0])
            raise GraphValidationError(
                f"missing odometry edge ({gap}, {gap + 1}); odometry must form a chain"
            )

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_loop_closures(self):
        return int(self.loop_indices.size)

    def tree_edges(self):
        """Index of the spanning-tree odometry edge for each gap ``(m, m+1)``.

        The first odometry edge found for a gap is used; any further
        odometry edges on the same gap are treated as chords of the tree.
        """
        tree = np.full(self.num_vertices - 1, -1, dtype=np.intp)
        for idx in self.odometry_indices:
            gap = min(self.frm[idx], self.to[idx])
            if tree[gap] < 0:
                tree[gap] = idx
        return tree

    def with_edges(self, extra):
        """New graph with ``extra`` edges appended (existing indices kept)."""
        return PoseGraph(self.num_vertices, self.edges + tuple(extra))

    def subgraph(self, keep):
        """New graph keeping odometry plus the loop closures in ``keep``.

        Edge indices are renumbered.
        """
        keep = set(int(k) for k in keep)
        edges = [e for idx, e in enumerate(self.edges) if not e.is_loop_closure or idx in keep]
        return PoseGraph(self.num_vertices, edges)

    def __eq__(self, other):
        if not isinstance(other, PoseGraph):
            return NotImplemented
        return self.num_vertices == other.num_vertices and self.edges == other.edges

    __hash__ = None

    def __repr__(self):
        return (
            f"PoseGraph(num_vertices={self.num_vertices}, "
            f"odometry={self.odometry_indices.size}, loop_closures={self.num_loop_closures})"
        )


@dataclass
class TrajectoryEstimate:
    """Per-vertex headings (radians) and positions, shape (n,) and (n, 2)."""

    theta: np.ndarray
    t: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        self.t = np.asarray(self.t, dtype=float).reshape(-1, 2)
        if self.theta.shape[0] != self.t.shape[0]:
            raise ValueError(
                f"theta has {self.theta.shape[0]} entries but t has {self.t.shape[0]} rows"
            )

    def __len__(self):
        return self.theta.shape[0]

    @property
    def rotations(self):
        return rotations_from_angles(self.theta)

    def canonicalized(self):
        return TrajectoryEstimate(wrap_angles(self.theta), self.t.copy())

    def anchored(self, index=0):
        """Express the trajectory in the frame of pose ``index``."""
        th0 = self.theta[index]
        c, s = np.cos(th0), np.sin(th0)
        Rt = np.array([[c, s], [-s, c]])
        t = (self.t - self.t[index]) @ Rt.T
        return TrajectoryEstimate(wrap_angles(self.theta - th0), t)

    def transformed(self, phi, offset):
        """Apply a global rigid motion (rotate by ``phi``, then translate)."""
        c, s = np.cos(phi), np.sin(phi)
        Q = np.array([[c, -s], [s, c]])
        return TrajectoryEstimate(self.theta + phi, self.t @ Q.T + np.asarray(offset, dtype=float))

    def copy(self):
        return TrajectoryEstimate(self.theta.copy(), self.t.copy())
