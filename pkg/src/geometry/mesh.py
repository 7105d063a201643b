"""
Maillage triangulaire indexé
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.exceptions import EmptyMeshError


@dataclass(frozen=True, eq=False)
class Mesh:
    """Géométrie triangulaire indexée, sommets en mètres"""

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_colors: Optional[np.ndarray] = None
    name: str = ""
    _centroid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(vertices)):
            raise ValueError(f"Maillage '{self.name}': coordonnées NaN/Inf")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError(f"Maillage '{self.name}': indice de triangle hors bornes")
        colors = None
        if self.vertex_colors is not None:
            colors = np.array(self.vertex_colors, dtype=np.float64).reshape(-1, 3)
            if len(colors) != len(vertices):
                raise ValueError(f"Maillage '{self.name}': couleurs et sommets de tailles différentes")
            colors = np.clip(colors, 0.0, 1.0)
            colors.setflags(write=False)
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "vertex_colors", colors)
        centroid = vertices.mean(axis=0) if len(vertices) else np.zeros(3)
        object.__setattr__(self, "_centroid", centroid)

    @property
    def centroid(self) -> np.ndarray:
        """Centroïde des sommets, utilisé comme centre de masse"""
        return self._centroid

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def require_triangles(self) -> "Mesh":
        """Lève EmptyMeshError si le maillage n'a aucun triangle"""
        if self.num_triangles == 0:
            raise EmptyMeshError(f"Maillage '{self.name}' vide (0 triangle)")
        return self

    def __repr__(self) -> str:
        return f"Mesh(name={self.name!r}, vertices={len(self.vertices)}, triangles={self.num_triangles})"
