"""
Transformations rigides SE(3), angles d'Euler et rotations aléatoires
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Pose rigide : rotation 3x3 orthonormée + translation en mètres"""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(rotation)) and np.all(np.isfinite(translation))):
            raise ValueError("Transformation avec valeurs non finies")
        if not is_rotation(rotation, ORTHONORMAL_TOL):
            raise ValueError(
                f"Rotation non orthonormée ou det != +1 (det={np.linalg.det(rotation):.12f})"
            )
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "RigidTransform":
        """Construit la pose depuis une matrice homogène 4x4"""
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(matrix[:3, :3], matrix[:3, 3])

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Applique la pose à un point (3,) ou à un nuage (n, 3)"""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def __repr__(self) -> str:
        return (
            f"RigidTransform(rotation={self.rotation.tolist()}, "
            f"translation={self.translation.tolist()})"
        )


def is_rotation(matrix: np.ndarray, tol: float = ORTHONORMAL_TOL) -> bool:
    """Vérifie RᵀR = I et det(R) = +1 à tol près (norme infinie)"""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (3, 3):
        return False
    err = np.max(np.abs(matrix.T @ matrix - np.eye(3)))
    return bool(err < tol and abs(np.linalg.det(matrix) - 1.0) < tol)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Applique b puis a"""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def rot_x(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg: float) -> np.ndarray:
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_to_rotation(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """
    Roulis-tangage-lacet (degrés) vers matrice de rotation

    Convention extrinsèque X-Y-Z : R = Rz(yaw) · Ry(pitch) · Rx(roll)

    Args:
        roll: Rotation autour de X (degrés)
        pitch: Rotation autour de Y (degrés)
        yaw: Rotation autour de Z (degrés)

    Returns:
        Matrice 3x3
    """
    for angle in (roll, pitch, yaw):
        if not np.isfinite(angle):
            raise ValueError("Angle d'Euler non fini")
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def quaternion_to_rotation(q: Sequence[float]) -> np.ndarray:
    """Quaternion (w, x, y, z) normalisé vers matrice de rotation"""
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation uniforme sur SO(3) via un quaternion unitaire uniforme (Shoemake)"""
    u1, u2, u3 = rng.random(3)
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    q = (
        b * np.cos(2 * np.pi * u3),
        a * np.sin(2 * np.pi * u2),
        a * np.cos(2 * np.pi * u2),
        b * np.sin(2 * np.pi * u3),
    )
    return quaternion_to_rotation(q)


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Rotation minimale qui amène la direction a sur la direction b

    Args:
        a: Vecteur source (normalisé ici)
        b: Vecteur cible (normalisé ici)

    Returns:
        Matrice 3x3 R telle que R·a = b
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    s2 = float(np.dot(v, v))
    if s2 < 1e-24:
        if c > 0:
            return np.eye(3)
        # demi-tour : axe perpendiculaire à a, pris sur l'axe de base le moins aligné
        base = np.eye(3)[int(np.argmin(np.abs(a)))]
        axis = np.cross(a, base)
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    k = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + k + k @ k * ((1.0 - c) / s2)
