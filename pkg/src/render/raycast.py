"""
Oracle de profondeur par lancer de rayon (Möller-Trumbore), indépendant du rastériseur
"""

import numpy as np

from src.geometry.camera import CameraIntrinsics, pixel_rays
from src.geometry.transforms import RigidTransform
from src.render.drawables import scene_drawables
from src.render.rasterizer import FAR, NEAR
from src.scene.types import SceneSpec

_DET_EPS = 1e-15


def ray_triangle_distances(direction: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """
    Paramètre t d'intersection du rayon issu de l'origine avec chaque triangle

    Args:
        direction: Direction du rayon (3,)
        triangles: (n, 3, 3) sommets

    Returns:
        (n,) distances paramétriques, inf si pas d'intersection
    """
    v0, v1, v2 = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    e1, e2 = v1 - v0, v2 - v0
    p = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, p)
    valid = np.abs(det) > _DET_EPS
    inv = np.divide(1.0, det, out=np.zeros_like(det), where=valid)
    s = -v0
    u = np.einsum("ij,ij->i", s, p) * inv
    q = np.cross(s, e1)
    v = (q @ direction) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    hit = valid & (u >= 0) & (v >= 0) & (u + v <= 1)
    return np.where(hit, t, np.inf)


def raycast_depth_oracle(
    scene: SceneSpec,
    camera: RigidTransform,
    K: CameraIntrinsics,
    pixel,
    near: float = NEAR,
    far: float = FAR,
) -> float:
    """
    Profondeur (z caméra) de l'intersection la plus proche le long du rayon du pixel

    Args:
        scene: Scène
        camera: Pose monde -> caméra
        K: Intrinsèques
        pixel: (u, v) dans l'image

    Returns:
        Profondeur en mètres, 0 si aucun impact
    """
    u, v = pixel
    if not (0 <= u < K.width and 0 <= v < K.height):
        raise ValueError(f"Pixel {pixel} hors de l'image")
    direction = pixel_rays(K, np.array([u]), np.array([v]))[0]

    best = np.inf
    for drawable in scene_drawables(scene):
        triangles = camera.apply(drawable.vertices)[drawable.triangles]
        t = ray_triangle_distances(direction, triangles)
        # direction de z = 1 : t est directement le z caméra
        t = t[(t >= near) & (t <= far)]
        if t.size:
            best = min(best, float(t.min()))
    return 0.0 if np.isinf(best) else best
