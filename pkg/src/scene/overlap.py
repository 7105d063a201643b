"""
Test de chevauchement de boîtes orientées par le théorème de l'axe séparateur
"""

import numpy as np

from src.geometry.model_info import Obb

SEPARATION_EPS = 1e-9
AXIS_EPS = 1e-9


def _radius(box: Obb, axis: np.ndarray) -> float:
    return float(np.sum(box.half_extents * np.abs(box.rotation.T @ axis)))


def check_overlap(a: Obb, b: Obb) -> bool:
    """
    Vrai si les deux boîtes s'intersectent avec un volume strictement positif

    15 axes candidats : 3 faces de a, 3 faces de b, 9 produits vectoriels
    d'arêtes. Un contact exact entre faces n'est pas un chevauchement

    Args:
        a: Première boîte
        b: Seconde boîte

    Returns:
        True si chevauchement
    """
    offset = b.center - a.center
    axes = [a.rotation[:, i] for i in range(3)] + [b.rotation[:, j] for j in range(3)]
    for i in range(3):
        for j in range(3):
            cross = np.cross(a.rotation[:, i], b.rotation[:, j])
            norm = np.linalg.norm(cross)
            if norm > AXIS_EPS:
                axes.append(cross / norm)

    for axis in axes:
        if abs(float(offset @ axis)) > _radius(a, axis) + _radius(b, axis) - SEPARATION_EPS:
            return False
    return True
