"""Trajectory error metrics."""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import wrap_angles


@dataclass
class Alignment:
    phi: float
    offset: np.ndarray

    def apply(self, points):
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.asarray(points) @ np.array([[c, -s], [s, c]]).T + self.offset


def align_planar(source, target):
    """Rigid motion ``(phi, q)`` minimizing sum |R(phi) s_i + q - t_i|^2 (closed form)."""
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    ms, mt = source.mean(axis=0), target.mean(axis=0)
    a, b = source - ms, target - mt
    cross = np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    dot = np.sum(a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1])
    phi = math.atan2(cross, dot)
    c, s = math.cos(phi), math.sin(phi)
    offset = mt - np.array([c * ms[0] - s * ms[1], s * ms[0] + c * ms[1]])
    return Alignment(phi, offset)


def _check_counts(a, b):
    if len(a) != len(b):
        raise ValueError(f"pose count mismatch: {len(a)} vs {len(b)}")


def ate_for_alignment(estimate, ground_truth, alignment):
    err = alignment.apply(estimate.t) - ground_truth.t
    ate_pos = math.sqrt(np.mean(np.sum(err * err, axis=1)))
    dth = wrap_angles(estimate.theta + alignment.phi - ground_truth.theta)
    ate_rot = math.degrees(math.sqrt(np.mean(dth * dth)))
    return ate_pos, ate_rot


def compute_ate(estimate, ground_truth):
    """Position RMSE and heading RMSE (degrees) after optimal rigid alignment."""
    _check_counts(estimate, ground_truth)
    if len(estimate) < 2:
        raise ValueError("ATE needs at least two poses")
    al = align_planar(estimate.t, ground_truth.t)
    return ate_for_alignment(estimate, ground_truth, al)


def compute_are(rotations_a, rotations_b):
    """Mean absolute heading difference in degrees after removing a global offset.

    The offset is the circular mean of the per-vertex differences.
    """
    a = np.asarray(rotations_a, dtype=float)
    b = np.asarray(rotations_b, dtype=float)
    _check_counts(a, b)
    d = wrap_angles(a - b)
    delta = math.atan2(np.sum(np.sin(d)), np.sum(np.cos(d)))
    return math.degrees(float(np.mean(np.abs(wrap_angles(d - delta)))))


def precision_recall(rejected, injected):
    """Outlier-detection precision and recall (1.0 on empty denominators)."""
    rejected, injected = set(rejected), set(injected)
    hit = len(rejected & injected)
    precision = hit / len(rejected) if rejected else 1.0
    recall = hit / len(injected) if injected else 1.0
    return precision, recall


@dataclass
class MetricsReport:
    ate_pos: float
    ate_rot: float
    are_decoupled: float
    precision: float = None
    recall: float = None
    wall_time: dict = None
