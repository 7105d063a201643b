"""
Caméra sténopé : intrinsèques, projection, rétroprojection et visée
Convention : repère droit, +Z vers l'avant, +X à droite, +Y vers le bas
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.exceptions import BehindCameraError
from src.geometry.transforms import RigidTransform


@dataclass(frozen=True)
class CameraIntrinsics:
    """Paramètres intrinsèques (pixels) et résolution"""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"Focales invalides: fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"Point principal ({self.cx}, {self.cy}) hors de l'image "
                f"{self.width}x{self.height}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def as_list(self) -> list:
        """cam_K ligne par ligne (9 flottants)"""
        return [float(x) for x in self.matrix.reshape(-1)]

    @classmethod
    def from_list(cls, cam_k, width: int, height: int) -> "CameraIntrinsics":
        k = np.asarray(cam_k, dtype=np.float64).reshape(3, 3)
        return cls(float(k[0, 0]), float(k[1, 1]), float(k[0, 2]), float(k[1, 2]), width, height)


def project(K: CameraIntrinsics, p_cam) -> Tuple[float, float]:
    """
    Projette un point du repère caméra sur l'image

    Args:
        K: Intrinsèques
        p_cam: Point (x, y, z) en mètres, repère caméra

    Returns:
        (u, v) en pixels
    """
    x, y, z = (float(c) for c in p_cam)
    if not z > 0:
        raise BehindCameraError(f"Point derrière la caméra (z={z})")
    return K.fx * x / z + K.cx, K.fy * y / z + K.cy


def project_points(K: CameraIntrinsics, points: np.ndarray) -> np.ndarray:
    """Version vectorisée de project, sans contrôle de z (n, 3) -> (n, 2)"""
    points = np.asarray(points, dtype=np.float64)
    z = points[:, 2]
    return np.stack([K.fx * points[:, 0] / z + K.cx, K.fy * points[:, 1] / z + K.cy], axis=1)


def unproject(K: CameraIntrinsics, u: float, v: float, z: float) -> np.ndarray:
    """Inverse de project à profondeur fixe"""
    if not z > 0:
        raise BehindCameraError(f"Profondeur non positive (z={z})")
    return np.array([(u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z])


def pixel_rays(K: CameraIntrinsics, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Directions des rayons (x/z, y/z, 1) passant par les centres de pixel (u, v)"""
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    return np.stack([(us - K.cx) / K.fx, (vs - K.cy) / K.fy, np.ones_like(us)], axis=-1)


def look_at(center, target, roll_deg: float = 0.0) -> RigidTransform:
    """
    Pose monde -> caméra d'une caméra placée en center et visant target

    L'axe +Y caméra pointe vers le bas du monde (monde : +Z vers le haut)

    Args:
        center: Position de la caméra (monde)
        target: Point visé (monde)
        roll_deg: Rotation autour de l'axe optique (degrés)

    Returns:
        RigidTransform monde -> caméra
    """
    center = np.asarray(center, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - center
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.array([0.0, 0.0, 1.0]))
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)

    c, s = np.cos(np.radians(roll_deg)), np.sin(np.radians(roll_deg))
    right, down = c * right + s * down, -s * right + c * down

    cam_to_world = np.stack([right, down, forward], axis=1)
    rotation = cam_to_world.T
    return RigidTransform(rotation, -rotation @ center)


def camera_center(world_to_cam: RigidTransform) -> np.ndarray:
    return -world_to_cam.rotation.T @ world_to_cam.translation
