"""
Rastérisation par z-buffer avec interpolation perspective correcte

Convention : le pixel (u, v) échantillonne le rayon de direction
((u - cx)/fx, (v - cy)/fy, 1) ; la profondeur stockée est le z caméra.
Le test de profondeur est strict : à profondeur égale le premier fragment
dessiné est conservé
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.geometry.camera import CameraIntrinsics
from src.geometry.transforms import RigidTransform
from src.render.drawables import Drawable

logger = logging.getLogger(__name__)

NEAR = 0.01
FAR = 100.0
_AREA_EPS = 1e-12


@dataclass
class GBuffer:
    """Tampons par pixel : profondeur, primitive gagnante et barycentriques"""

    depth: np.ndarray
    drawable: np.ndarray
    triangle: np.ndarray
    bary: np.ndarray

    @classmethod
    def empty(cls, width: int, height: int) -> "GBuffer":
        return cls(
            depth=np.full((height, width), np.inf),
            drawable=np.full((height, width), -1, dtype=np.int32),
            triangle=np.full((height, width), -1, dtype=np.int64),
            bary=np.zeros((height, width, 3)),
        )

    @property
    def covered(self) -> np.ndarray:
        return self.drawable >= 0


def clip_near(vertices: np.ndarray, near: float = NEAR) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Découpe un triangle (repère caméra) par le plan z = near (Sutherland-Hodgman)

    Args:
        vertices: Sommets (3, 3) en repère caméra
        near: Plan proche

    Returns:
        Triangles (sommets (3, 3), poids barycentriques d'origine (3, 3)),
        éventail du polygone découpé ; liste vide si tout est derrière
    """
    weights = np.eye(3)
    inside = vertices[:, 2] >= near
    if inside.all():
        return [(vertices, weights)]
    if not inside.any():
        return []

    poly_v, poly_w = [], []
    for i in range(3):
        j = (i + 1) % 3
        if inside[i]:
            poly_v.append(vertices[i])
            poly_w.append(weights[i])
        if inside[i] != inside[j]:
            t = (near - vertices[i, 2]) / (vertices[j, 2] - vertices[i, 2])
            point = vertices[i] + t * (vertices[j] - vertices[i])
            point[2] = near
            poly_v.append(point)
            poly_w.append(weights[i] + t * (weights[j] - weights[i]))

    return [
        (np.array([poly_v[0], poly_v[k], poly_v[k + 1]]), np.array([poly_w[0], poly_w[k], poly_w[k + 1]]))
        for k in range(1, len(poly_v) - 1)
    ]


def _raster_triangle(
    gbuf: GBuffer,
    K: CameraIntrinsics,
    cam_vertices: np.ndarray,
    weights: np.ndarray,
    drawable_id: int,
    triangle_id: int,
    far: float,
):
    z = cam_vertices[:, 2]
    us = K.fx * cam_vertices[:, 0] / z + K.cx
    vs = K.fy * cam_vertices[:, 1] / z + K.cy

    u0 = max(int(np.ceil(us.min())), 0)
    u1 = min(int(np.floor(us.max())), K.width - 1)
    v0 = max(int(np.ceil(vs.min())), 0)
    v1 = min(int(np.floor(vs.max())), K.height - 1)
    if u0 > u1 or v0 > v1:
        return

    area = (us[1] - us[0]) * (vs[2] - vs[0]) - (vs[1] - vs[0]) * (us[2] - us[0])
    if abs(area) < _AREA_EPS:
        return

    px, py = np.meshgrid(np.arange(u0, u1 + 1, dtype=np.float64), np.arange(v0, v1 + 1, dtype=np.float64))
    l0 = ((us[2] - us[1]) * (py - vs[1]) - (vs[2] - vs[1]) * (px - us[1])) / area
    l1 = ((us[0] - us[2]) * (py - vs[2]) - (vs[0] - vs[2]) * (px - us[2])) / area
    l2 = ((us[1] - us[0]) * (py - vs[0]) - (vs[1] - vs[0]) * (px - us[0])) / area
    inside = (l0 >= 0) & (l1 >= 0) & (l2 >= 0)
    if not inside.any():
        return

    l0, l1, l2 = l0[inside], l1[inside], l2[inside]
    inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2]
    depth = 1.0 / inv_z
    rows = py[inside].astype(np.int64)
    cols = px[inside].astype(np.int64)

    passed = (depth < gbuf.depth[rows, cols]) & (depth <= far)
    if not passed.any():
        return
    rows, cols, depth = rows[passed], cols[passed], depth[passed]
    persp = np.stack([l0[passed] / z[0], l1[passed] / z[1], l2[passed] / z[2]], axis=1) * depth[:, None]

    gbuf.depth[rows, cols] = depth
    gbuf.drawable[rows, cols] = drawable_id
    gbuf.triangle[rows, cols] = triangle_id
    gbuf.bary[rows, cols] = persp @ weights


def rasterize(
    drawables: List[Drawable],
    camera: RigidTransform,
    K: CameraIntrinsics,
    near: float = NEAR,
    far: float = FAR,
) -> GBuffer:
    """
    Rastérise toutes les primitives dans un G-buffer

    Args:
        drawables: Primitives en repère monde
        camera: Pose monde -> caméra
        K: Intrinsèques
        near: Plan proche (mètres)
        far: Plan lointain (mètres)

    Returns:
        GBuffer (profondeur inf là où rien n'est dessiné)
    """
    gbuf = GBuffer.empty(K.width, K.height)
    for drawable_id, drawable in enumerate(drawables):
        cam = camera.apply(drawable.vertices)
        tri_z = cam[drawable.triangles][:, :, 2]
        candidates = np.flatnonzero((tri_z.max(axis=1) >= near) & (tri_z.min(axis=1) <= far))
        for t in candidates:
            for sub_vertices, weights in clip_near(cam[drawable.triangles[t]], near):
                _raster_triangle(gbuf, K, sub_vertices, weights, drawable_id, int(t), far)
    logger.debug(f"{int(gbuf.covered.sum())} pixel(s) couverts par {len(drawables)} primitive(s)")
    return gbuf
