"""Integer angle regularization from the odometry spanning tree.

Each loop closure closes exactly one fundamental cycle of the odometry
chain.  Around a noiseless cycle the wrapped measurements add up to a
multiple of 2*pi; that multiple is the regularization integer ``k`` of the
closing edge, and with it the angle estimation problem becomes linear.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .geometry import TWO_PI
from .graph import GraphValidationError

logger = logging.getLogger(__name__)

# rounding offsets above this are reported as fragile
FRAGILE_OFFSET = 0.25


@dataclass(frozen=True)
class RegularizedAngles:
    """Per-edge regularization integers.

    ``k[e]`` is zero on spanning-tree edges.  ``residual_before_round[e]`` is
    the real-valued cycle sum divided by 2*pi before rounding (0 on tree
    edges).
    """

    k: np.ndarray
    residual_before_round: np.ndarray
    tree: np.ndarray

    @property
    def rounding_offsets(self):
        return np.abs(self.residual_before_round - self.k)

    @property
    def max_rounding_offset(self):
        off = self.rounding_offsets
        return float(off.max()) if off.size else 0.0

    @property
    def ambiguous_edges(self):
        """Edges whose pre-rounding value sat (numerically) half-way between integers."""
        return np.flatnonzero(self.rounding_offsets >= 0.5 - 1e-9)

    @property
    def fragile_edges(self):
        return np.flatnonzero(self.rounding_offsets > FRAGILE_OFFSET)


def unwrapped_chain(graph, tree=None):
    """Heading of every vertex obtained by summing tree measurements from vertex 0."""
    if tree is None:
        tree = graph.tree_edges()
    sign = np.where(graph.to[tree] > graph.frm[tree], 1.0, -1.0)
    steps = sign * graph.dtheta[tree]
    return np.concatenate(([0.0], np.cumsum(steps)))


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def compute_regularization(graph):
    """Regularization integers for every edge of ``graph``.

    For a non-tree edge ``e = (i, j)`` with tree path sum ``S = h[j] - h[i]``
    (``h`` from :func:`unwrapped_chain`), ``k_e = round((dtheta_e - S) / 2pi)``,
    rounding half away from zero.
    """
    tree = graph.tree_edges()
    if np.any(tree < 0):
        gap = int(np.flatnonzero(tree < 0)[0])
        raise GraphValidationError(f"odometry is not a chain: gap at ({gap}, {gap + 1})")

    heading = unwrapped_chain(graph, tree)
    m = graph.num_edges
    k = np.zeros(m, dtype=np.int64)
    before = np.zeros(m)

    chords = np.ones(m, dtype=bool)
    chords[tree] = False
    idx = np.flatnonzero(chords)
    if idx.size:
        path_sum = heading[graph.to[idx]] - heading[graph.frm[idx]]
        before[idx] = (graph.dtheta[idx] - path_sum) / TWO_PI
        k[idx] = round_half_away(before[idx]).astype(np.int64)

    reg = RegularizedAngles(k=k, residual_before_round=before, tree=tree)
    amb = reg.ambiguous_edges
    if amb.size:
        logger.warning("ambiguous angle regularization on edges %s", amb.tolist())
    elif reg.max_rounding_offset > FRAGILE_OFFSET:
        logger.info("largest regularization rounding offset %.3f", reg.max_rounding_offset)
    return reg


def regularized_residuals(graph, theta, k):
    """theta_j - theta_i + 2*pi*k - dtheta for every edge."""
    theta = np.asarray(theta, dtype=float)
    return theta[graph.to] - theta[graph.frm] + TWO_PI * np.asarray(k) - graph.dtheta
