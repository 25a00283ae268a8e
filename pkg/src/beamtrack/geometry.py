"""Kinematics of the 3-DoF overhead arm: base yaw plus two pitch joints.

The arm is a planar two-link chain (lengths L1, L2) living in a vertical
plane that is yawed about the body z axis by the base joint q0.  All
functions here are pure and operate in double precision; joint limits are
the dynamics module's business, not ours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinkGeometry:
    """Link lengths in meters, both strictly positive."""

    L1: float
    L2: float

    def __post_init__(self) -> None:
        if not (self.L1 > 0.0 and self.L2 > 0.0):
            raise ValueError(f"link lengths must be positive, got ({self.L1}, {self.L2})")


@dataclass(frozen=True)
class Pose:
    """Rigid pose: 3-vector position plus orthonormal 3x3 rotation."""

    position: np.ndarray
    rotation: np.ndarray

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.eye(3))


def planar_fk(q1: float, q2: float, links: LinkGeometry) -> tuple[float, float]:
    """In-plane tip coordinates (r_x, r_z) of the two-link chain."""
    c1 = math.cos(q1)
    s1 = math.sin(q1)
    c12 = math.cos(q1 + q2)
    s12 = math.sin(q1 + q2)
    return (links.L1 * c1 + links.L2 * c12, links.L1 * s1 + links.L2 * s12)


def rot_z(q0: float) -> np.ndarray:
    """Rotation about z by q0."""
    c = math.cos(q0)
    s = math.sin(q0)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(theta: float) -> np.ndarray:
    """Rotation about y by theta."""
    c = math.cos(theta)
    s = math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def body_fk(q, links: LinkGeometry) -> np.ndarray:
    """End-effector position in the body frame: the planar tip yawed by q0."""
    q0, q1, q2 = q
    r_x, r_z = planar_fk(q1, q2, links)
    return np.array([math.cos(q0) * r_x, math.sin(q0) * r_x, r_z])


def body_orientation(q) -> np.ndarray:
    """End-effector orientation in the body frame, rot_z(q0) . rot_y(q1+q2)."""
    q0, q1, q2 = q
    return rot_z(q0) @ rot_y(q1 + q2)


def world_pose(base: Pose, q, links: LinkGeometry) -> Pose:
    """Map the body-frame end-effector pose through the base pose."""
    return Pose(
        position=base.position + base.rotation @ body_fk(q, links),
        rotation=base.rotation @ body_orientation(q),
    )


def _homog(rotation: np.ndarray, translation) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = rotation
    T[:3, 3] = translation
    return T


def homogeneous_chain(q, links: LinkGeometry) -> np.ndarray:
    """End-effector transform built from per-link frame steps.

    The pitch factors rotate by -q_i so that the composed translation column
    reproduces body_fk exactly (positive-z tip for positive pitch); the
    rotation block is therefore rot_z(q0) . rot_y(-(q1+q2)).
    """
    q0, q1, q2 = q
    T01 = _homog(rot_z(q0), (0.0, 0.0, 0.0))
    Ry1 = rot_y(q1).T
    Ry2 = rot_y(q2).T
    T12 = _homog(Ry1, Ry1 @ np.array([links.L1, 0.0, 0.0]))
    T23 = _homog(Ry2, Ry2 @ np.array([links.L2, 0.0, 0.0]))
    return T01 @ T12 @ T23


def _jacobian_columns(q0: float, q1: float, q2: float, l1: float, l2: float):
    """Columns of the body-frame position Jacobian for a chain with the
    given effective link lengths.  Returns three (x, y, z) tuples."""
    cx = math.cos(q0)
    sx = math.sin(q0)
    c1 = math.cos(q1)
    s1 = math.sin(q1)
    c12 = math.cos(q1 + q2)
    s12 = math.sin(q1 + q2)
    r_x = l1 * c1 + l2 * c12
    drx_1 = -l1 * s1 - l2 * s12
    drz_1 = l1 * c1 + l2 * c12
    drx_2 = -l2 * s12
    drz_2 = l2 * c12
    return (
        (-sx * r_x, cx * r_x, 0.0),
        (cx * drx_1, sx * drx_1, drz_1),
        (cx * drx_2, sx * drx_2, drz_2),
    )


def body_jacobian(q, links: LinkGeometry) -> np.ndarray:
    """Analytic position Jacobian of body_fk, columns per joint."""
    q0, q1, q2 = q
    c0, c1, c2 = _jacobian_columns(q0, q1, q2, links.L1, links.L2)
    return np.column_stack([c0, c1, c2])


def world_jacobian(base_rotation: np.ndarray, j_body: np.ndarray) -> np.ndarray:
    """Rotate a body-frame Jacobian into the world frame."""
    return base_rotation @ j_body


def angular_velocity(q, qdot) -> np.ndarray:
    """Body-frame angular velocity of the end-effector.

    The yaw axis is body z; both pitch joints share the yawed y axis.
    """
    q0 = q[0]
    qd0, qd1, qd2 = qdot
    pitch_rate = qd1 + qd2
    return np.array(
        [-math.sin(q0) * pitch_rate, math.cos(q0) * pitch_rate, qd0]
    )
