"""
Conversion d'une scène en primitives dessinables (triangles en repère monde)
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.scene.types import FLOOR_TEXTURED, Material, NamedImage, SceneSpec

FLOOR_MATERIAL = Material(base_color=(1.0, 1.0, 1.0), roughness=0.8, specular=0.2, metalness=0.0)


@dataclass(frozen=True, eq=False)
class Drawable:
    """Triangles d'un objet de la scène, sommets en repère monde"""

    vertices: np.ndarray
    triangles: np.ndarray
    material: Material
    vertex_colors: Optional[np.ndarray] = None
    class_id: int = 0
    instance_id: int = 0
    texture: Optional[NamedImage] = None
    texture_extent: float = 0.0

    def face_normals(self) -> np.ndarray:
        """Normales unitaires par triangle (nulles pour les triangles dégénérés)"""
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        normals = np.cross(b - a, c - a)
        norms = np.linalg.norm(normals, axis=1, keepdims=True)
        return np.divide(normals, norms, out=np.zeros_like(normals), where=norms > 0)


def floor_drawable(size: float, texture: NamedImage) -> Drawable:
    """Plan carré de côté size centré à l'origine, z = 0"""
    h = size / 2.0
    vertices = np.array([[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0]])
    triangles = np.array([[0, 1, 2], [0, 2, 3]])
    return Drawable(vertices, triangles, FLOOR_MATERIAL, texture=texture, texture_extent=size)


def scene_drawables(scene: SceneSpec) -> List[Drawable]:
    """
    Liste des primitives d'une scène : objets actifs (étiquetés), distracteurs,
    structure et sol texturé (non étiquetés). Le plan invisible n'est pas dessiné

    Args:
        scene: Scène composée

    Returns:
        Liste de Drawable, objets actifs en premier
    """
    drawables = [
        Drawable(
            obj.pose.apply(obj.mesh.vertices),
            obj.mesh.triangles,
            obj.material,
            obj.mesh.vertex_colors,
            class_id=obj.category_id,
            instance_id=obj.instance_id,
        )
        for obj in scene.placed_objects
    ]
    for obj in list(scene.distractors) + list(scene.structure):
        drawables.append(Drawable(obj.pose.apply(obj.mesh.vertices), obj.mesh.triangles, obj.material, obj.mesh.vertex_colors))
    if scene.floor.kind == FLOOR_TEXTURED:
        drawables.append(floor_drawable(scene.floor.size, scene.floor.texture))
    return drawables
