"""
Rendu d'une vue : RGB, profondeur métrique, cartes de classes et d'instances
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from src.geometry.camera import CameraIntrinsics, camera_center
from src.geometry.transforms import RigidTransform
from src.render.drawables import scene_drawables
from src.render.rasterizer import FAR, NEAR, rasterize
from src.render.shading import encode_srgb, shade, texture_lookup
from src.scene.types import NamedImage, SceneSpec


@dataclass(frozen=True)
class RenderOptions:
    ambient: Tuple[float, float, float] = (0.25, 0.25, 0.25)
    clear_color: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    near: float = NEAR
    far: float = FAR


@dataclass(frozen=True, eq=False)
class FrameSet:
    """Les quatre tampons alignés d'une vue et la caméra utilisée"""

    rgb: np.ndarray
    depth: np.ndarray
    class_map: np.ndarray
    instance_map: np.ndarray
    K: CameraIntrinsics
    camera: RigidTransform

    def __post_init__(self):
        shape = (self.K.height, self.K.width)
        for name in ("depth", "class_map", "instance_map"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name}: dimensions {getattr(self, name).shape} au lieu de {shape}")
        if self.rgb.shape != shape + (3,):
            raise ValueError(f"rgb: dimensions {self.rgb.shape} au lieu de {shape + (3,)}")


def backdrop_pixels(backdrop: NamedImage, width: int, height: int) -> np.ndarray:
    """Arrière-plan 8 bits mis à l'échelle de la vue (plus proche voisin)"""
    image = Image.fromarray(np.rint(np.clip(backdrop.pixels, 0.0, 1.0) * 255.0).astype(np.uint8))
    return np.asarray(image.resize((width, height), Image.Resampling.NEAREST), dtype=np.uint8)


def render(
    scene: SceneSpec,
    camera: RigidTransform,
    K: CameraIntrinsics,
    options: Optional[RenderOptions] = None,
) -> FrameSet:
    """
    Rend une vue de la scène

    Args:
        scene: Scène composée
        camera: Pose monde -> caméra
        K: Intrinsèques
        options: Ambiant, couleur de fond, plans de découpe

    Returns:
        FrameSet
    """
    options = options or RenderOptions()
    drawables = scene_drawables(scene)
    gbuf = rasterize(drawables, camera, K, options.near, options.far)
    height, width = K.height, K.width

    if scene.backdrop is not None:
        rgb = backdrop_pixels(scene.backdrop, width, height).copy()
        ambient = scene.backdrop.pixels.reshape(-1, 3).mean(axis=0)
    else:
        clear = np.rint(np.clip(options.clear_color, 0.0, 1.0) * 255.0).astype(np.uint8)
        rgb = np.broadcast_to(clear, (height, width, 3)).copy()
        ambient = np.asarray(options.ambient, dtype=np.float64)

    depth = np.zeros((height, width))
    class_map = np.zeros((height, width), dtype=np.uint16)
    instance_map = np.zeros((height, width), dtype=np.uint16)

    covered = gbuf.covered
    if covered.any():
        rows, cols = np.nonzero(covered)
        z = gbuf.depth[rows, cols]
        depth[rows, cols] = z
        ids = gbuf.drawable[rows, cols]
        tris = gbuf.triangle[rows, cols]
        bary = gbuf.bary[rows, cols]

        cam_points = np.stack([(cols - K.cx) / K.fx * z, (rows - K.cy) / K.fy * z, z], axis=1)
        points = (cam_points - camera.translation) @ camera.rotation

        n = len(rows)
        albedo = np.empty((n, 3))
        normals = np.empty((n, 3))
        params = np.empty((n, 3))
        for d in np.unique(ids):
            drawable = drawables[d]
            sel = ids == d
            normals[sel] = drawable.face_normals()[tris[sel]]
            base = np.asarray(drawable.material.base_color, dtype=np.float64)
            if drawable.texture is not None:
                albedo[sel] = texture_lookup(drawable.texture.pixels, drawable.texture_extent, points[sel]) * base
            elif drawable.vertex_colors is not None:
                corner_colors = drawable.vertex_colors[drawable.triangles[tris[sel]]]
                albedo[sel] = np.einsum("ij,ijk->ik", bary[sel], corner_colors) * base
            else:
                albedo[sel] = base
            params[sel] = (drawable.material.roughness, drawable.material.specular, drawable.material.metalness)
            if drawable.instance_id:
                class_map[rows[sel], cols[sel]] = drawable.class_id
                instance_map[rows[sel], cols[sel]] = drawable.instance_id

        linear = shade(
            albedo,
            normals,
            points,
            camera_center(camera),
            params[:, 0],
            params[:, 1],
            params[:, 2],
            scene.lights,
            ambient,
        )
        rgb[rows, cols] = encode_srgb(linear)

    return FrameSet(rgb=rgb, depth=depth, class_map=class_map, instance_map=instance_map, K=K, camera=camera)
