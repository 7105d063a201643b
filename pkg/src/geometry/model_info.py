"""
Statistiques de modèle (format models_info BOP) et boîtes orientées
"""

import itertools
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import ConvexHull

from src.exceptions import EmptyMeshError
from src.geometry.mesh import Mesh
from src.geometry.transforms import RigidTransform

EXACT_DIAMETER_MAX_VERTICES = 10_000
_BLOCK = 512

# Ordre binaire sur (x, y, z), z varie le plus vite
CORNER_BITS = np.array(list(itertools.product((0, 1), repeat=3)), dtype=np.float64)
BOX_EDGES = [
    (i, j) for i in range(8) for j in range(i + 1, 8) if bin(i ^ j).count("1") == 1
]


@dataclass(frozen=True)
class ModelInfo:
    """Dimensions d'un modèle en mètres"""

    diameter: float
    min_x: float
    min_y: float
    min_z: float
    size_x: float
    size_y: float
    size_z: float

    @property
    def minimum(self) -> np.ndarray:
        return np.array([self.min_x, self.min_y, self.min_z])

    @property
    def size(self) -> np.ndarray:
        return np.array([self.size_x, self.size_y, self.size_z])

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelInfo":
        return cls(**{k: float(data[k]) for k in cls.__dataclass_fields__})


def _max_pairwise_distance(points: np.ndarray) -> float:
    """Distance maximale entre deux points, exacte, par blocs"""
    best = 0.0
    for start in range(0, len(points), _BLOCK):
        block = points[start : start + _BLOCK]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(-1)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def mesh_stats(mesh: Mesh) -> ModelInfo:
    """
    Calcule diamètre, minimum et taille d'un maillage

    Diamètre exact en O(n²) jusqu'à 10 000 sommets ; au-delà, le calcul
    est restreint aux sommets de l'enveloppe convexe (le diamètre y est atteint)

    Args:
        mesh: Maillage non vide

    Returns:
        ModelInfo
    """
    vertices = mesh.vertices
    if len(vertices) == 0:
        raise EmptyMeshError(f"Maillage '{mesh.name}' vide")

    points = vertices
    if len(vertices) > EXACT_DIAMETER_MAX_VERTICES:
        try:
            points = vertices[ConvexHull(vertices).vertices]
        except Exception:
            # nuage plat ou dégénéré : on garde la force brute
            points = vertices

    lo = vertices.min(axis=0)
    size = vertices.max(axis=0) - lo
    return ModelInfo(
        diameter=_max_pairwise_distance(points),
        min_x=float(lo[0]),
        min_y=float(lo[1]),
        min_z=float(lo[2]),
        size_x=float(size[0]),
        size_y=float(size[1]),
        size_z=float(size[2]),
    )


@dataclass(frozen=True, eq=False)
class Obb:
    """Boîte orientée : 8 coins ordonnés + repère de la pose"""

    corners: np.ndarray
    rotation: np.ndarray
    half_extents: np.ndarray

    @property
    def center(self) -> np.ndarray:
        return self.corners.mean(axis=0)


def obb_corners(info: ModelInfo, pose: RigidTransform) -> Obb:
    """
    Coins de la boîte [min, min + size] du modèle transformés par la pose

    Args:
        info: Dimensions du modèle
        pose: Pose modèle -> repère cible

    Returns:
        Obb dont corners[k] correspond aux bits (x, y, z) de CORNER_BITS[k]
    """
    local = info.minimum + CORNER_BITS * info.size
    return Obb(
        corners=pose.apply(local),
        rotation=pose.rotation.copy(),
        half_extents=info.size / 2.0,
    )
