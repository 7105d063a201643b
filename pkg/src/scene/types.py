"""
Types de la composition de scène : procédures, matériaux, lumières,
objets placés et spécification complète d'une scène
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from src.exceptions import ConfigError, SceneError
from src.geometry.mesh import Mesh
from src.geometry.transforms import RigidTransform

Interval = Tuple[float, float]


class ProcedureId(str, Enum):
    """Les cinq procédures de génération"""

    P1 = "P1"  # plan texturé, objets posés au sol
    P2 = "P2"  # plan texturé, objets flottants
    P3 = "P3"  # arrière-plan, objets posés sur un plan invisible
    P4 = "P4"  # arrière-plan, objets flottants
    P5 = "P5"  # arrière-plan, assemblage reconstruit

    @property
    def settles(self) -> bool:
        return self in (ProcedureId.P1, ProcedureId.P3)

    @property
    def floating(self) -> bool:
        return self in (ProcedureId.P2, ProcedureId.P4)

    @property
    def assembly(self) -> bool:
        return self is ProcedureId.P5

    @property
    def floor_kind(self) -> str:
        if self in (ProcedureId.P1, ProcedureId.P2):
            return FLOOR_TEXTURED
        if self is ProcedureId.P3:
            return FLOOR_INVISIBLE
        return FLOOR_NONE

    @property
    def has_backdrop(self) -> bool:
        return self not in (ProcedureId.P1, ProcedureId.P2)

    @classmethod
    def parse(cls, value) -> "ProcedureId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ConfigError(f"Procédure inconnue: {value!r} (attendu P1..P5)")


ALL_PROCEDURES = tuple(ProcedureId)

FLOOR_TEXTURED = "textured-plane"
FLOOR_INVISIBLE = "invisible-plane"
FLOOR_NONE = "none"

LIGHT_KINDS = ("sun", "point", "plane")


def _check_interval(name: str, interval, lo=None, hi=None) -> Interval:
    a, b = (float(v) for v in interval)
    if not (np.isfinite(a) and np.isfinite(b)) or a > b:
        raise ConfigError(f"{name}: intervalle invalide [{a}, {b}]")
    if (lo is not None and a < lo) or (hi is not None and b > hi):
        raise ConfigError(f"{name}: [{a}, {b}] hors de [{lo}, {hi}]")
    return a, b


# ========== APPARENCE ==========


@dataclass(frozen=True)
class Material:
    """Paramètres de surface, tous dans [0, 1]"""

    base_color: Tuple[float, float, float]
    roughness: float
    specular: float
    metalness: float

    def __post_init__(self):
        values = list(self.base_color) + [self.roughness, self.specular, self.metalness]
        if len(self.base_color) != 3 or not all(0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"Matériau hors de [0, 1]: {self}")


@dataclass(frozen=True)
class MaterialRanges:
    base_color: Interval = (0.0, 1.0)
    roughness: Interval = (0.0, 1.0)
    specular: Interval = (0.0, 1.0)
    metalness: Interval = (0.0, 1.0)

    def __post_init__(self):
        for name in ("base_color", "roughness", "specular", "metalness"):
            object.__setattr__(self, name, _check_interval(f"material.{name}", getattr(self, name), 0.0, 1.0))


@dataclass(frozen=True)
class LightRanges:
    """Plages de tirage des lumières (intensités en unités arbitraires)"""

    sun_intensity: Interval = (1.0, 3.0)
    point_intensity: Interval = (20.0, 100.0)
    plane_intensity: Interval = (20.0, 100.0)
    color: Interval = (0.8, 1.0)
    # demi-côté du plan lumineux, en fraction de plane_size
    plane_half_extent: Interval = (0.05, 0.25)

    def __post_init__(self):
        for name in ("sun_intensity", "point_intensity", "plane_intensity"):
            object.__setattr__(self, name, _check_interval(f"light.{name}", getattr(self, name), 0.0))
        object.__setattr__(self, "color", _check_interval("light.color", self.color, 0.0, 1.0))
        object.__setattr__(
            self, "plane_half_extent", _check_interval("light.plane_half_extent", self.plane_half_extent, 0.0)
        )


@dataclass(frozen=True, eq=False)
class LightSpec:
    kind: str
    color: Tuple[float, float, float]
    intensity: float
    position: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None
    plane_half_extent: float = 0.0

    def __post_init__(self):
        if self.kind not in LIGHT_KINDS:
            raise ValueError(f"Type de lumière inconnu: {self.kind}")
        if self.intensity < 0:
            raise ValueError("Intensité négative")
        if self.kind == "sun":
            if self.direction is None or self.position is not None:
                raise ValueError("Soleil: direction seule attendue")
            if abs(np.linalg.norm(self.direction) - 1.0) > 1e-9:
                raise ValueError("Soleil: direction non unitaire")
        else:
            if self.position is None or self.direction is not None:
                raise ValueError(f"Lumière {self.kind}: position seule attendue")
            if (self.kind == "plane") != (self.plane_half_extent > 0):
                raise ValueError("plane_half_extent réservé (et requis) pour le plan lumineux")

    def point_samples(self) -> List[Tuple[np.ndarray, float]]:
        """Positions et poids des sources ponctuelles équivalentes"""
        if self.kind == "point":
            return [(np.asarray(self.position, dtype=np.float64), 1.0)]
        if self.kind == "plane":
            h = self.plane_half_extent / 2.0
            return [
                (np.asarray(self.position, dtype=np.float64) + np.array([dx, dy, 0.0]), 0.25)
                for dx in (-h, h)
                for dy in (-h, h)
            ]
        return []


@dataclass(frozen=True, eq=False)
class NamedImage:
    """Image RGB flottante dans [0, 1] et son nom d'origine"""

    name: str
    pixels: np.ndarray


@dataclass(frozen=True, eq=False)
class Floor:
    kind: str
    size: float = 0.0
    texture: Optional[NamedImage] = None


# ========== OBJETS ==========


@dataclass(frozen=True, eq=False)
class SceneObject:
    """Objet non annoté (distracteur ou structure)"""

    mesh: Mesh
    pose: RigidTransform
    material: Material
    label: str = ""


@dataclass(frozen=True, eq=False)
class PlacedObject(SceneObject):
    """Objet actif annoté"""

    category_id: int = 0
    instance_id: int = 0


@dataclass(frozen=True)
class ProcedureConfig:
    """Paramètres d'une procédure (boucle externe = scènes, interne = vues)"""

    procedure: ProcedureId
    num_scenes: int = 10
    views_per_scene: int = 5
    objects_per_scene: Tuple[int, int] = (1, 3)
    distractors_per_scene: Tuple[int, int] = (2, 6)
    floating_bounds: Tuple[Tuple[float, float, float], Tuple[float, float, float]] = (
        (-0.25, -0.25, 0.05),
        (0.25, 0.25, 0.45),
    )
    plane_size: float = 2.0
    camera_radius: Interval = (0.6, 1.2)
    max_pose_retries: int = 100
    seed: int = 0
    elevation_deg: Optional[Interval] = None
    roll_deg: Interval = (-15.0, 15.0)
    distractor_size: Interval = (0.03, 0.15)
    structure_distractors: bool = True
    min_tipping_angle_deg: float = 10.0
    randomize_assembly_yaw: bool = False

    def __post_init__(self):
        object.__setattr__(self, "procedure", ProcedureId.parse(self.procedure))
        if self.num_scenes < 1 or self.views_per_scene < 1:
            raise ConfigError("num_scenes et views_per_scene doivent être >= 1")
        for name in ("objects_per_scene", "distractors_per_scene"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ConfigError(f"{name}: plage vide [{lo}, {hi}]")
        if self.objects_per_scene[1] < 1:
            raise ConfigError("objects_per_scene: au moins un objet par scène")
        lo, hi = np.asarray(self.floating_bounds[0], float), np.asarray(self.floating_bounds[1], float)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(lo > hi):
            raise ConfigError(f"floating_bounds invalide: {self.floating_bounds}")
        if self.procedure.floating and np.any(hi - lo <= 0):
            raise ConfigError(f"floating_bounds de volume nul: {self.floating_bounds}")
        if not self.plane_size > 0:
            raise ConfigError("plane_size doit être > 0")
        radius = _check_interval("camera_radius", self.camera_radius)
        if radius[0] <= 0:
            raise ConfigError("camera_radius doit être > 0")
        if self.max_pose_retries < 1:
            raise ConfigError("max_pose_retries doit être >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed doit être un entier non signé 64 bits")
        if self.elevation_deg is not None:
            _check_interval("elevation_deg", self.elevation_deg, -90.0, 90.0)
        _check_interval("roll_deg", self.roll_deg)
        if _check_interval("distractor_size", self.distractor_size)[0] <= 0:
            raise ConfigError("distractor_size doit être > 0")

    @property
    def elevation_range(self) -> Interval:
        """Élévation caméra : au-dessus du sol pour P1/P3, sphère entière sinon"""
        if self.elevation_deg is not None:
            return tuple(self.elevation_deg)
        return (5.0, 85.0) if self.procedure.settles else (-90.0, 90.0)

    @property
    def num_images(self) -> int:
        return self.num_scenes * self.views_per_scene


# ========== SCENE ==========


@dataclass(frozen=True, eq=False)
class SceneSpec:
    procedure: ProcedureId
    scene_index: int
    placed_objects: List[PlacedObject]
    distractors: List[SceneObject]
    structure: List[SceneObject]
    floor: Floor
    backdrop: Optional[NamedImage]
    lights: List[LightSpec]
    assembly_root: RigidTransform = field(default_factory=RigidTransform.identity)

    def validate(self) -> "SceneSpec":
        """Contrôle les invariants de type ; lève SceneError sinon"""
        ids = [o.instance_id for o in self.placed_objects]
        if ids != list(range(1, len(ids) + 1)):
            raise SceneError(f"Identifiants d'instance non contigus: {ids}")
        proc = self.procedure
        if self.floor.kind != proc.floor_kind:
            raise SceneError(f"{proc.value}: sol '{self.floor.kind}' au lieu de '{proc.floor_kind}'")
        if (self.backdrop is not None) != proc.has_backdrop:
            raise SceneError(f"{proc.value}: présence d'arrière-plan incohérente")
        if self.structure and not proc.assembly:
            raise SceneError(f"{proc.value}: structure passive réservée à P5")
        if proc.settles:
            for obj in self.placed_objects:
                min_z = float(obj.pose.apply(obj.mesh.vertices)[:, 2].min())
                if abs(min_z) > 1e-6:
                    raise SceneError(f"Objet '{obj.label}' non posé au sol (min z = {min_z:.3g})")
        return self

    @property
    def all_objects(self) -> List[SceneObject]:
        return list(self.placed_objects) + list(self.distractors) + list(self.structure)
