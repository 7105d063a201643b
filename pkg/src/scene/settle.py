"""
Mise au repos quasi statique d'un maillage sur le plan z = 0

L'objet roule d'une face à l'autre de son enveloppe convexe jusqu'à une face
stable (le centre de masse projeté tombe dans la face). Chaque bascule fait
strictement descendre le centre de masse, la boucle termine donc toujours
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from src.exceptions import SettleError
from src.geometry.mesh import Mesh
from src.geometry.transforms import RigidTransform, rotation_between

logger = logging.getLogger(__name__)

COPLANAR_TOL = 1e-9
INSIDE_TOL = 1e-12
DOWN = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True, eq=False)
class FaceEdges:
    """Arêtes de bord d'une face : origine, normale intérieure, face voisine"""

    origins: np.ndarray
    inward: np.ndarray
    neighbors: np.ndarray


@dataclass(frozen=True, eq=False)
class SupportPolytope:
    """Faces (coplanaires fusionnées) de l'enveloppe convexe, repère objet"""

    normals: np.ndarray
    offsets: np.ndarray
    edges: List[FaceEdges]
    com: np.ndarray

    def heights(self) -> np.ndarray:
        """Distance du centre de masse au plan de chaque face"""
        return -(self.normals @ self.com + self.offsets)

    def entry_face(self, gravity: np.ndarray) -> int:
        """Face traversée par le rayon issu du centre de masse dans la direction gravity"""
        along = self.normals @ gravity
        heights = self.heights()
        t = np.full(len(along), np.inf)
        hit = along > 1e-12
        t[hit] = heights[hit] / along[hit]
        return int(np.argmin(t))


def _merge_faces(hull: ConvexHull):
    """Regroupe les simplexes de même équation de plan"""
    equations = hull.equations
    face_of = np.full(len(equations), -1, dtype=np.int64)
    representatives = []
    for i in range(len(equations)):
        if face_of[i] >= 0:
            continue
        same = (np.abs(equations - equations[i]).max(axis=1) < COPLANAR_TOL) & (face_of < 0)
        face_of[same] = len(representatives)
        representatives.append(i)
    return face_of, equations[representatives]


@lru_cache(maxsize=256)
def support_polytope(mesh: Mesh) -> SupportPolytope:
    """
    Construit le polytope d'appui d'un maillage (mis en cache par maillage)

    Args:
        mesh: Maillage non vide

    Returns:
        SupportPolytope
    """
    points = mesh.vertices
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError) as e:
        raise SettleError(f"Enveloppe convexe dégénérée pour '{mesh.name}': {str(e).splitlines()[0]}")
    if not hull.volume > 0:
        raise SettleError(f"Enveloppe convexe de volume nul pour '{mesh.name}'")

    face_of, planes = _merge_faces(hull)
    normals = planes[:, :3] / np.linalg.norm(planes[:, :3], axis=1, keepdims=True)
    offsets = planes[:, 3] / np.linalg.norm(planes[:, :3], axis=1)

    edges = []
    for f in range(len(planes)):
        origins, inward, neighbors = [], [], []
        simplices = np.flatnonzero(face_of == f)
        members = np.unique(hull.simplices[simplices])
        center = points[members].mean(axis=0)
        for s in simplices:
            for k in range(3):
                g = face_of[hull.neighbors[s, k]]
                if g == f:
                    continue
                a, b = (points[v] for v in np.delete(hull.simplices[s], k))
                m = np.cross(normals[f], b - a)
                m /= np.linalg.norm(m)
                if np.dot(m, center - a) < 0:
                    m = -m
                origins.append(a)
                inward.append(m)
                neighbors.append(g)
        edges.append(FaceEdges(np.array(origins), np.array(inward), np.array(neighbors, dtype=np.int64)))

    return SupportPolytope(normals, offsets, edges, mesh.centroid.copy())


def _face_centroid(poly: SupportPolytope, f: int) -> np.ndarray:
    return poly.edges[f].origins.mean(axis=0)


def resting_face(poly: SupportPolytope, start: int, min_tipping_angle_deg: float = 10.0) -> int:
    """
    Fait rouler le polytope depuis la face `start` jusqu'à une face stable

    Args:
        poly: Polytope d'appui
        start: Face initiale
        min_tipping_angle_deg: En dessous de cet angle de basculement, la face
            bascule vers la voisine la plus proche si le centre de masse y est plus bas

    Returns:
        Indice de la face de repos
    """
    heights = poly.heights()
    tan_margin = np.tan(np.radians(min_tipping_angle_deg))
    face = start
    visited = {face}

    for _ in range(len(heights) + 1):
        n = poly.normals[face]
        p = poly.com + heights[face] * n
        edges = poly.edges[face]
        signed = np.einsum("ij,ij->i", edges.inward, p - edges.origins)

        if np.all(signed >= -INSIDE_TOL):
            nearest = int(np.argmin(signed))
            neighbor = int(edges.neighbors[nearest])
            if signed[nearest] >= tan_margin * heights[face] or heights[neighbor] >= heights[face]:
                return face
            nxt = neighbor
        else:
            # première arête coupée par le segment centroïde de face -> COM projeté
            c = _face_centroid(poly, face)
            start_side = np.einsum("ij,ij->i", edges.inward, c - edges.origins)
            crossing = np.full(len(signed), np.inf)
            out = signed < -INSIDE_TOL
            crossing[out] = start_side[out] / (start_side[out] - signed[out])
            nxt = int(edges.neighbors[int(np.argmin(crossing))])

        if nxt in visited or heights[nxt] >= heights[face]:
            logger.debug(f"Bascule interrompue sur la face {face}")
            return face
        visited.add(nxt)
        face = nxt
    return face


def settle_on_plane(
    mesh: Mesh, initial_rotation, xy, min_tipping_angle_deg: float = 10.0
) -> RigidTransform:
    """
    Pose de repos d'un maillage lâché avec l'orientation initiale donnée

    Args:
        mesh: Maillage non vide
        initial_rotation: Rotation 3x3 au moment du lâcher
        xy: Position (x, y) visée pour le centroïde
        min_tipping_angle_deg: Marge de basculement (degrés)

    Returns:
        RigidTransform modèle -> monde, min z = 0
    """
    mesh.require_triangles()
    poly = support_polytope(mesh)
    gravity = np.asarray(initial_rotation, dtype=np.float64).T @ DOWN
    face = resting_face(poly, poly.entry_face(gravity), min_tipping_angle_deg)

    rotation = rotation_between(poly.normals[face], DOWN)
    rotated = mesh.vertices @ rotation.T
    centroid = rotation @ mesh.centroid
    translation = np.array([xy[0] - centroid[0], xy[1] - centroid[1], -rotated[:, 2].min()])
    return RigidTransform(rotation, translation)
