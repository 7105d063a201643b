"""
Composition des scènes des procédures P1 à P5

P1/P3 : objets lâchés puis mis au repos sur le plan z = 0
P2/P4 : objets flottants dans floating_bounds
P5    : objets et structure aux poses de l'assemblage CAO
"""

import logging
from functools import lru_cache
from typing import List, Optional

import numpy as np

from src.etl.extract import AssetCatalog, to_pose
from src.exceptions import PlacementError, SceneError
from src.geometry.mesh import Mesh
from src.geometry.model_info import Obb, mesh_stats, obb_corners
from src.geometry.transforms import RigidTransform, compose, random_rotation, rot_z
from src.render.textures import AppearanceBank
from src.scene.distractors import random_convex_mesh
from src.scene.overlap import check_overlap
from src.scene.sampling import randomize_material, sample_floating_pose, sample_light, uniform_in
from src.scene.settle import settle_on_plane
from src.scene.types import (
    FLOOR_INVISIBLE,
    FLOOR_NONE,
    FLOOR_TEXTURED,
    Floor,
    LightRanges,
    MaterialRanges,
    PlacedObject,
    ProcedureConfig,
    SceneObject,
    SceneSpec,
)

logger = logging.getLogger(__name__)

# résolution des arrière-plans procéduraux (redimensionnés au rendu)
BACKDROP_SIZE = (320, 240)

cached_stats = lru_cache(maxsize=1024)(mesh_stats)


def _yaw_about(rotation_deg: float, pivot) -> RigidTransform:
    """Rotation autour de la verticale passant par pivot"""
    rz = rot_z(rotation_deg)
    pivot = np.array([pivot[0], pivot[1], 0.0])
    return RigidTransform(rz, pivot - rz @ pivot)


class _Placer:
    """Tirage de poses avec rejet des chevauchements de boîtes orientées"""

    def __init__(self, cfg: ProcedureConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.boxes: List[Obb] = []

    def _candidate(self, mesh: Mesh) -> RigidTransform:
        cfg, rng = self.cfg, self.rng
        lo, hi = np.asarray(cfg.floating_bounds[0], float), np.asarray(cfg.floating_bounds[1], float)
        if cfg.procedure.settles:
            initial = random_rotation(rng)
            xy = lo[:2] + rng.random(2) * (hi[:2] - lo[:2])
            rest = settle_on_plane(mesh, initial, xy, cfg.min_tipping_angle_deg)
            return compose(_yaw_about(rng.uniform(0.0, 360.0), xy), rest)
        pose = sample_floating_pose(cfg.floating_bounds, rng)
        # le centroïde, pas l'origine du modèle, tombe dans la boîte
        return RigidTransform(pose.rotation, pose.translation - pose.rotation @ mesh.centroid)

    def place(self, mesh: Mesh, info) -> Optional[RigidTransform]:
        """Première pose sans chevauchement, None après max_pose_retries essais"""
        for attempt in range(self.cfg.max_pose_retries):
            pose = self._candidate(mesh)
            box = obb_corners(info, pose)
            if not any(check_overlap(box, other) for other in self.boxes):
                self.boxes.append(box)
                if attempt:
                    logger.debug(f"'{mesh.name}' placé après {attempt + 1} essais")
                return pose
        return None


def _floor(cfg: ProcedureConfig, rng, appearance: AppearanceBank) -> Floor:
    kind = cfg.procedure.floor_kind
    if kind == FLOOR_TEXTURED:
        return Floor(FLOOR_TEXTURED, cfg.plane_size, appearance.pick_texture(rng))
    if kind == FLOOR_INVISIBLE:
        return Floor(FLOOR_INVISIBLE, cfg.plane_size)
    return Floor(FLOOR_NONE)


def _assembly_objects(cfg, catalog: AssetCatalog, rng, materials: MaterialRanges):
    catalog.require_assembly()
    root = RigidTransform.identity()
    if cfg.randomize_assembly_yaw:
        root = RigidTransform(rot_z(rng.uniform(0.0, 360.0)), np.zeros(3))
    placed = []
    for instance_id, model in enumerate(catalog.classes, start=1):
        pose = compose(root, to_pose(catalog.placements[model.component_name]))
        placed.append(
            PlacedObject(
                mesh=model.mesh,
                pose=pose,
                material=randomize_material(rng, materials),
                label=model.component_name,
                category_id=model.category_id,
                instance_id=instance_id,
            )
        )
    structure = [
        SceneObject(mesh, compose(root, to_pose(catalog.placements[name])), randomize_material(rng, materials), name)
        for name, mesh in catalog.structure.items()
    ]
    return root, placed, structure


def compose_scene(
    cfg: ProcedureConfig,
    catalog: AssetCatalog,
    rng: np.random.Generator,
    scene_index: int = 0,
    appearance: Optional[AppearanceBank] = None,
    materials: MaterialRanges = MaterialRanges(),
    lights: LightRanges = LightRanges(),
) -> SceneSpec:
    """
    Compose une scène aléatoire selon la procédure de cfg

    Ordre des tirages : sol, arrière-plan, objets actifs, distracteurs, lumière

    Args:
        cfg: Configuration de la procédure
        catalog: Maillages actifs/passifs et placements
        rng: Flux de la scène (rng.stream(seed, scene_index))
        scene_index: Indice de la scène (provenance)
        appearance: Textures et arrière-plans (procéduraux si None)
        materials: Plages des matériaux
        lights: Plages des lumières

    Returns:
        SceneSpec validée
    """
    if not catalog.classes:
        raise SceneError("Catalogue sans objet actif : aucune catégorie définie")
    appearance = appearance or AppearanceBank()
    procedure = cfg.procedure

    floor = _floor(cfg, rng, appearance)
    backdrop = appearance.pick_backdrop(rng, *BACKDROP_SIZE) if procedure.has_backdrop else None
    placer = _Placer(cfg, rng)
    root = RigidTransform.identity()
    structure: List[SceneObject] = []

    if procedure.assembly:
        root, placed, structure = _assembly_objects(cfg, catalog, rng, materials)
        for obj in placed:
            # les pièces d'assemblage se touchent : pas de rejet entre elles
            placer.boxes.append(obb_corners(cached_stats(obj.mesh), obj.pose))
    else:
        lo, hi = cfg.objects_per_scene
        count = int(rng.integers(max(lo, 1), hi + 1))
        placed = []
        for instance_id in range(1, count + 1):
            model = catalog.classes[int(rng.integers(len(catalog.classes)))]
            pose = placer.place(model.mesh, cached_stats(model.mesh))
            if pose is None:
                raise PlacementError(f"{model.component_name}#{instance_id}", cfg.max_pose_retries)
            placed.append(
                PlacedObject(
                    mesh=model.mesh,
                    pose=pose,
                    material=randomize_material(rng, materials),
                    label=model.component_name,
                    category_id=model.category_id,
                    instance_id=instance_id,
                )
            )

    distractors = _place_distractors(cfg, catalog, rng, placer, materials)
    light = sample_light(rng, cfg.plane_size, lights)

    scene = SceneSpec(
        procedure=procedure,
        scene_index=scene_index,
        placed_objects=placed,
        distractors=distractors,
        structure=structure,
        floor=floor,
        backdrop=backdrop,
        lights=[light],
        assembly_root=root,
    )
    logger.debug(
        f"Scène {procedure.value}#{scene_index}: {len(placed)} objet(s), "
        f"{len(distractors)} distracteur(s), lumière {light.kind}"
    )
    return scene.validate()


def _place_distractors(cfg, catalog: AssetCatalog, rng, placer: _Placer, materials) -> List[SceneObject]:
    lo, hi = cfg.distractors_per_scene
    count = int(rng.integers(lo, hi + 1))
    pool = list(catalog.structure.values()) if cfg.structure_distractors and not cfg.procedure.assembly else []
    result = []
    for k in range(count):
        if pool and rng.random() < 0.5:
            mesh = pool[int(rng.integers(len(pool)))]
            info = cached_stats(mesh)
        else:
            mesh = random_convex_mesh(rng, uniform_in(rng, cfg.distractor_size), name=f"distractor_{k}")
            info = mesh_stats(mesh)
        pose = placer.place(mesh, info)
        if pose is None:
            logger.warning(f"⚠ Distracteur '{mesh.name}' ignoré après {cfg.max_pose_retries} essais")
            continue
        result.append(SceneObject(mesh, pose, randomize_material(rng, materials), mesh.name))
    return result
