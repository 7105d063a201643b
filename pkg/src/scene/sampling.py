"""
Tirages aléatoires de la composition : poses flottantes, matériaux,
lumières et positions de caméra
"""

import numpy as np

from src.geometry.camera import look_at
from src.geometry.transforms import RigidTransform, random_rotation
from src.scene.types import (
    LIGHT_KINDS,
    Interval,
    LightRanges,
    LightSpec,
    Material,
    MaterialRanges,
    SceneSpec,
)


def uniform_in(rng: np.random.Generator, interval: Interval, size=None):
    lo, hi = interval
    if hi > lo:
        return rng.uniform(lo, hi, size=size)
    # intervalle ponctuel : aucun tirage consommé
    return np.full(size, float(lo)) if size is not None else float(lo)


def sample_floating_pose(bounds, rng: np.random.Generator) -> RigidTransform:
    """
    Pose flottante : translation uniforme dans la boîte, rotation uniforme sur SO(3)

    Args:
        bounds: ((xmin, ymin, zmin), (xmax, ymax, zmax)) en mètres
        rng: Flux de la scène

    Returns:
        RigidTransform
    """
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    translation = lo + rng.random(3) * (hi - lo)
    rotation = random_rotation(rng)
    return RigidTransform(rotation, translation)


def randomize_material(rng: np.random.Generator, ranges: MaterialRanges = MaterialRanges()) -> Material:
    """Tire chaque paramètre uniformément dans son intervalle"""
    color = uniform_in(rng, ranges.base_color, size=3)
    return Material(
        base_color=tuple(float(c) for c in color),
        roughness=float(uniform_in(rng, ranges.roughness)),
        specular=float(uniform_in(rng, ranges.specular)),
        metalness=float(uniform_in(rng, ranges.metalness)),
    )


def sample_light(
    rng: np.random.Generator, plane_size: float, ranges: LightRanges = LightRanges()
) -> LightSpec:
    """
    Tire une lumière (soleil, ponctuelle ou plan) dimensionnée sur le plan texturé

    Args:
        rng: Flux de la scène
        plane_size: Côté du plan (mètres)
        ranges: Plages d'intensité et de couleur

    Returns:
        LightSpec
    """
    if not plane_size > 0:
        raise ValueError("plane_size doit être > 0")
    kind = LIGHT_KINDS[int(rng.integers(len(LIGHT_KINDS)))]
    color = tuple(float(c) for c in uniform_in(rng, ranges.color, size=3))

    if kind == "sun":
        # direction vers la lumière, uniforme sur l'hémisphère supérieur
        z = rng.uniform(0.0, 1.0)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        r = np.sqrt(max(0.0, 1.0 - z * z))
        direction = np.array([r * np.cos(phi), r * np.sin(phi), z])
        direction /= np.linalg.norm(direction)
        return LightSpec(kind, color, float(uniform_in(rng, ranges.sun_intensity)), direction=direction)

    half = plane_size / 2.0
    position = np.array(
        [
            rng.uniform(-half, half),
            rng.uniform(-half, half),
            rng.uniform(0.5 * plane_size, 1.5 * plane_size),
        ]
    )
    if kind == "point":
        return LightSpec(kind, color, float(uniform_in(rng, ranges.point_intensity)), position=position)
    extent = float(uniform_in(rng, ranges.plane_half_extent)) * plane_size
    return LightSpec(
        kind,
        color,
        float(uniform_in(rng, ranges.plane_intensity)),
        position=position,
        plane_half_extent=max(extent, 1e-6),
    )


def scene_target(scene: SceneSpec) -> np.ndarray:
    """Moyenne des centroïdes (monde) des objets actifs"""
    if not scene.placed_objects:
        raise ValueError("Scène sans objet actif : pas de cible caméra")
    centroids = [obj.pose.apply(obj.mesh.centroid) for obj in scene.placed_objects]
    return np.mean(centroids, axis=0)


def sample_camera(
    scene: SceneSpec,
    radius: float,
    rng: np.random.Generator,
    elevation_deg: Interval = (-90.0, 90.0),
    roll_deg: Interval = (0.0, 0.0),
) -> RigidTransform:
    """
    Place la caméra sur une sphère autour de la moyenne des objets

    L'élévation est tirée uniformément en sin(élévation), ce qui donne une
    densité uniforme sur la zone sphérique

    Args:
        scene: Scène avec au moins un objet actif
        radius: Rayon de la sphère (mètres)
        rng: Flux de la scène
        elevation_deg: Bornes d'élévation au-dessus de l'horizontale
        roll_deg: Bornes du roulis autour de l'axe optique

    Returns:
        RigidTransform monde -> caméra
    """
    if not radius > 0:
        raise ValueError("Le rayon caméra doit être > 0")
    target = scene_target(scene)
    s_lo, s_hi = np.sin(np.radians(elevation_deg[0])), np.sin(np.radians(elevation_deg[1]))
    sin_el = float(uniform_in(rng, (s_lo, s_hi)))
    azimuth = rng.uniform(0.0, 2.0 * np.pi)
    roll = float(uniform_in(rng, roll_deg))

    cos_el = np.sqrt(max(0.0, 1.0 - sin_el * sin_el))
    offset = np.array([cos_el * np.cos(azimuth), cos_el * np.sin(azimuth), sin_el])
    offset /= np.linalg.norm(offset)
    return look_at(target + radius * offset, target, roll)
