"""
Ombrage différé : Lambert + spéculaire GGX (Fresnel de Schlick, masquage de
Smith), terme ambiant constant, sans ombres portées
"""

from typing import List

import numpy as np

from src.scene.types import LightSpec

MIN_ALPHA = 1e-3
DIELECTRIC_F0 = 0.08
GAMMA = 2.2


def texture_lookup(texture: np.ndarray, extent: float, points: np.ndarray) -> np.ndarray:
    """Plus proche voisin dans une texture couvrant [-extent/2, extent/2]² en (x, y) monde"""
    th, tw = texture.shape[:2]
    s = (points[:, 0] + extent / 2.0) / extent
    t = (extent / 2.0 - points[:, 1]) / extent
    cols = np.clip(np.floor(s * tw).astype(np.int64), 0, tw - 1)
    rows = np.clip(np.floor(t * th).astype(np.int64), 0, th - 1)
    return texture[rows, cols]


def _normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def _light_terms(light: LightSpec, points: np.ndarray):
    """(direction vers la lumière, éclairement RGB) par pixel et par échantillon"""
    color = np.asarray(light.color, dtype=np.float64)
    if light.kind == "sun":
        direction = np.broadcast_to(np.asarray(light.direction, dtype=np.float64), points.shape)
        yield direction, np.broadcast_to(color * light.intensity, points.shape)
        return
    for position, weight in light.point_samples():
        delta = position - points
        dist2 = np.maximum(np.einsum("ij,ij->i", delta, delta), 1e-12)
        irradiance = (weight * light.intensity / (4.0 * np.pi * dist2))[:, None] * color
        yield _normalize(delta), irradiance


def shade(
    albedo: np.ndarray,
    normals: np.ndarray,
    points: np.ndarray,
    eye: np.ndarray,
    roughness: np.ndarray,
    specular: np.ndarray,
    metalness: np.ndarray,
    lights: List[LightSpec],
    ambient: np.ndarray,
) -> np.ndarray:
    """
    Radiance linéaire des fragments visibles

    Les normales sont retournées vers la caméra (surfaces bilatérales)

    Args:
        albedo: (n, 3) couleur de base
        normals: (n, 3) normales unitaires (monde)
        points: (n, 3) positions monde
        eye: Centre de la caméra (monde)
        roughness, specular, metalness: (n,) paramètres du matériau
        lights: Lumières de la scène
        ambient: Couleur ambiante RGB

    Returns:
        (n, 3) radiance linéaire non bornée
    """
    view = _normalize(eye - points)
    flip = np.einsum("ij,ij->i", normals, view) < 0
    normals = np.where(flip[:, None], -normals, normals)
    n_dot_v = np.clip(np.einsum("ij,ij->i", normals, view), 1e-4, 1.0)

    alpha = np.maximum(roughness * roughness, MIN_ALPHA)
    alpha2 = alpha * alpha
    k = alpha / 2.0
    f0 = (DIELECTRIC_F0 * specular)[:, None] * (1.0 - metalness[:, None]) + albedo * metalness[:, None]
    diffuse_albedo = albedo * (1.0 - metalness[:, None])

    color = albedo * np.asarray(ambient, dtype=np.float64)
    for light in lights:
        for direction, irradiance in _light_terms(light, points):
            n_dot_l = np.einsum("ij,ij->i", normals, direction)
            lit = n_dot_l > 0
            if not lit.any():
                continue
            n_dot_l = np.clip(n_dot_l, 0.0, 1.0)
            half = _normalize(direction + view)
            n_dot_h = np.clip(np.einsum("ij,ij->i", normals, half), 0.0, 1.0)
            v_dot_h = np.clip(np.einsum("ij,ij->i", view, half), 0.0, 1.0)

            d = alpha2 / (np.pi * (n_dot_h * n_dot_h * (alpha2 - 1.0) + 1.0) ** 2)
            fresnel = f0 + (1.0 - f0) * ((1.0 - v_dot_h) ** 5)[:, None]
            g = (n_dot_v / (n_dot_v * (1.0 - k) + k)) * (n_dot_l / (n_dot_l * (1.0 - k) + k))
            spec = fresnel * (d * g / (4.0 * n_dot_v * np.maximum(n_dot_l, 1e-4)))[:, None]

            contribution = (diffuse_albedo + spec) * (n_dot_l[:, None] * irradiance)
            color += np.where(lit[:, None], contribution, 0.0)
    return color


def encode_srgb(linear: np.ndarray) -> np.ndarray:
    """Gamma 2.2, arrondi au plus proche, 8 bits"""
    return np.rint(np.clip(linear, 0.0, 1.0) ** (1.0 / GAMMA) * 255.0).astype(np.uint8)
