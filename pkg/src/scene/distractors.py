"""
Distracteurs : polyèdres convexes aléatoires générés depuis le flux de la scène
"""

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from src.geometry.mesh import Mesh

MIN_POINTS = 8
MAX_POINTS = 20
_MAX_ATTEMPTS = 10


def _outward_triangles(points: np.ndarray, hull: ConvexHull) -> np.ndarray:
    """Simplexes réorientés pour que les normales pointent vers l'extérieur"""
    triangles = hull.simplices.copy()
    a, b, c = (points[triangles[:, k]] for k in range(3))
    normals = np.cross(b - a, c - a)
    flip = np.einsum("ij,ij->i", normals, hull.equations[:, :3]) < 0
    triangles[flip] = triangles[flip][:, ::-1]
    return triangles


def random_convex_mesh(rng: np.random.Generator, size: float, name: str = "distractor") -> Mesh:
    """
    Polyèdre convexe de 8 à 20 points tirés dans un pavé de côté `size`

    Args:
        rng: Flux de la scène
        size: Dimension caractéristique (mètres)
        name: Nom du maillage

    Returns:
        Mesh réduit aux sommets de l'enveloppe
    """
    for _ in range(_MAX_ATTEMPTS):
        count = int(rng.integers(MIN_POINTS, MAX_POINTS + 1))
        aspect = rng.uniform(0.3, 1.0, size=3)
        points = (rng.random((count, 3)) - 0.5) * aspect * size
        try:
            hull = ConvexHull(points)
        except QhullError:
            continue
        if hull.volume <= 0:
            continue
        used = np.unique(hull.simplices)
        remap = np.full(count, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        triangles = remap[_outward_triangles(points, hull)]
        return Mesh(points[used], triangles, name=name)
    raise RuntimeError("Impossible de générer un polyèdre convexe non dégénéré")
