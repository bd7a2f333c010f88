"""Planar angle and rotation primitives."""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def canonicalize_angle(a):
    """Wrap an angle into the half-open interval (-pi, pi]."""
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def wrap_angles(a):
    """Vectorized :func:`canonicalize_angle` for numpy arrays."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("angles must be finite")
    r = np.remainder(a + math.pi, TWO_PI) - math.pi
    # remainder lands on [-pi, pi); move the closed end over
    r = np.where(r <= -math.pi, r + TWO_PI, r)
    return r


def rotation_from_angle(theta):
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotations_from_angles(theta):
    """Stack of 2x2 rotation matrices, shape (n, 2, 2)."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    R = np.empty(theta.shape + (2, 2))
    R[..., 0, 0] = c
    R[..., 0, 1] = -s
    R[..., 1, 0] = s
    R[..., 1, 1] = c
    return R


def angle_from_rotation(R):
    R = np.asarray(R, dtype=float)
    return math.atan2(R[1, 0], R[0, 0])
