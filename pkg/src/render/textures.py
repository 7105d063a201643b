"""
Textures de sol et images d'arrière-plan : chargement depuis un dossier ou
génération procédurale (damier bruité, dégradé) quand aucun dossier n'est fourni
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from PIL import Image

from src.exceptions import ConfigError
from src.scene.types import NamedImage

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
PROCEDURAL_TEXTURE_SIZE = 256


def to_float_rgb(image: Image.Image) -> np.ndarray:
    return np.asarray(image.convert("RGB"), dtype=np.float64) / 255.0


def load_image_folder(folder) -> List[NamedImage]:
    """
    Charge toutes les images d'un dossier, triées par nom

    Args:
        folder: Dossier d'images

    Returns:
        Liste de NamedImage (RGB flottant dans [0, 1])
    """
    root = Path(folder)
    if not root.is_dir():
        raise ConfigError(f"Dossier d'images introuvable: {root}")
    images = []
    for path in sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS):
        with Image.open(path) as img:
            images.append(NamedImage(path.name, to_float_rgb(img)))
    if not images:
        raise ConfigError(f"Aucune image dans {root}")
    logger.info(f"{len(images)} image(s) chargée(s) depuis {root}")
    return images


def procedural_texture(rng: np.random.Generator, size: int = PROCEDURAL_TEXTURE_SIZE) -> NamedImage:
    """Damier de deux couleurs aléatoires, bruit multiplicatif léger"""
    cells = int(rng.integers(4, 17))
    colors = rng.uniform(0.1, 0.9, size=(2, 3))
    idx = (np.arange(size) * cells // size)
    checker = (idx[:, None] + idx[None, :]) % 2
    pixels = colors[checker]
    noise = rng.uniform(0.85, 1.0, size=(size, size, 1))
    return NamedImage(f"procedural_checker_{cells}", np.clip(pixels * noise, 0.0, 1.0))


def procedural_backdrop(rng: np.random.Generator, width: int, height: int) -> NamedImage:
    """Dégradé vertical entre deux couleurs, modulé par un bruit basse fréquence"""
    top, bottom = rng.uniform(0.0, 1.0, size=(2, 3))
    t = np.linspace(0.0, 1.0, height)[:, None, None]
    gradient = np.broadcast_to(top * (1.0 - t) + bottom * t, (height, width, 3))
    coarse = (rng.uniform(0.7, 1.0, size=(6, 8)) * 255).astype(np.uint8)
    blur = np.asarray(Image.fromarray(coarse).resize((width, height), Image.Resampling.BILINEAR), dtype=np.float64)
    return NamedImage("procedural_gradient", np.clip(gradient * (blur[..., None] / 255.0), 0.0, 1.0))


@dataclass
class AppearanceBank:
    """Textures de sol et arrière-plans disponibles pour la composition"""

    textures: List[NamedImage] = field(default_factory=list)
    backdrops: List[NamedImage] = field(default_factory=list)

    @classmethod
    def from_folders(cls, texture_dir: Optional[str] = None, backdrop_dir: Optional[str] = None) -> "AppearanceBank":
        return cls(
            textures=load_image_folder(texture_dir) if texture_dir else [],
            backdrops=load_image_folder(backdrop_dir) if backdrop_dir else [],
        )

    def pick_texture(self, rng: np.random.Generator) -> NamedImage:
        if self.textures:
            return self.textures[int(rng.integers(len(self.textures)))]
        return procedural_texture(rng)

    def pick_backdrop(self, rng: np.random.Generator, width: int, height: int) -> NamedImage:
        if self.backdrops:
            return self.backdrops[int(rng.integers(len(self.backdrops)))]
        return procedural_backdrop(rng, width, height)
