"""
Mélange des jeux par procédure en jeux de combinaison (C1 à C5)

Les images sont réutilisées depuis les jeux sources : les N premières de
chaque partage, dans l'ordre des image_id, puis renumérotées
"""

import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Tuple

from src.db.dataset_store import (
    IMAGE_DIRS,
    MODELS_INFO,
    SCENE_GT,
    DatasetManifest,
    DatasetStore,
    ImageIndex,
    coco_image_id,
    image_file,
    round_half_up,
)
from src.exceptions import CategoryMismatchError, ConfigError, DatasetWriteError, InsufficientImagesError
from src.scene.types import ALL_PROCEDURES, ProcedureId

logger = logging.getLogger(__name__)

SUM_TOL = 1e-9


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class MixPlan:
    """Composition d'un jeu de combinaison"""

    name: str
    total_images: int
    proportions: Mapping[ProcedureId, Fraction]
    split_ratio: float = 0.7

    def __post_init__(self):
        proportions = {ProcedureId.parse(k): _to_fraction(v) for k, v in self.proportions.items()}
        object.__setattr__(self, "proportions", proportions)
        if self.total_images < 1:
            raise ConfigError(f"{self.name}: total_images doit être >= 1")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"{self.name}: split_ratio hors de ]0, 1[")
        if any(not 0 <= f <= 1 for f in proportions.values()):
            raise ConfigError(f"{self.name}: proportion hors de [0, 1]")
        if abs(float(sum(proportions.values())) - 1.0) > SUM_TOL:
            raise ConfigError(f"{self.name}: la somme des proportions vaut {float(sum(proportions.values()))}")

    @classmethod
    def from_percentages(cls, name: str, row: Mapping[str, float], total_images: int, split_ratio: float = 0.7) -> "MixPlan":
        """Ligne de combinaison en pourcents, ex. {"P1": 40, "P4": 40, "P5": 20}"""
        return cls(name, total_images, {k: _to_fraction(v) / 100 for k, v in row.items()}, split_ratio)


def plan_counts(plan: MixPlan) -> Dict[ProcedureId, int]:
    """
    Nombre d'images par procédure (méthode du plus fort reste)

    Les restes égaux sont départagés dans l'ordre P1 < ... < P5 ; les
    procédures de proportion nulle sont omises

    Returns:
        {ProcedureId: nombre}, somme exactement égale à total_images
    """
    quotas = {p: plan.proportions.get(p, Fraction(0)) * plan.total_images for p in ALL_PROCEDURES}
    counts = {p: int(q) for p, q in quotas.items()}
    missing = plan.total_images - sum(counts.values())
    by_remainder = sorted(ALL_PROCEDURES, key=lambda p: (-(quotas[p] - counts[p]), ALL_PROCEDURES.index(p)))
    for p in by_remainder[:missing]:
        counts[p] += 1
    return {p: n for p, n in counts.items() if plan.proportions.get(p, 0) > 0}


def split_counts(plan: MixPlan) -> Dict[ProcedureId, Tuple[int, int]]:
    """(train, test) par procédure, au ratio du plan"""
    result = {}
    for procedure, count in plan_counts(plan).items():
        train = round_half_up(plan.split_ratio * count)
        result[procedure] = (train, count - train)
    return result


def _check_compatible(manifests: Dict[ProcedureId, DatasetManifest]):
    reference_proc, reference = next(iter(manifests.items()))
    ref_categories = sorted((c["id"], c["name"]) for c in reference.categories)
    for procedure, manifest in manifests.items():
        categories = sorted((c["id"], c["name"]) for c in manifest.categories)
        if categories != ref_categories:
            raise CategoryMismatchError(
                f"Catégories de {procedure.value} ({manifest.name}) différentes de "
                f"{reference_proc.value} ({reference.name})"
            )
        if (manifest.width, manifest.height) != (reference.width, reference.height):
            raise CategoryMismatchError(
                f"Résolution de {procedure.value} {manifest.width}x{manifest.height} différente de "
                f"{reference.width}x{reference.height}"
            )


def _check_cameras(selected: List[Tuple[ProcedureId, dict]], indexes: Dict[ProcedureId, dict]):
    """Toutes les images retenues doivent partager la même matrice cam_K"""
    reference = None
    for procedure, entry in selected:
        cam_k = [float(v) for v in indexes[procedure]["camera"][entry["image_id"]]["cam_K"]]
        if reference is None:
            reference = (procedure, entry["image_id"], cam_k)
        elif cam_k != reference[2]:
            raise CategoryMismatchError(
                f"cam_K de {procedure.value}#{entry['image_id']} {cam_k} différente de "
                f"{reference[0].value}#{reference[1]} {reference[2]}"
            )


def _select(plan: MixPlan, manifests: Dict[ProcedureId, DatasetManifest]) -> List[Tuple[ProcedureId, dict]]:
    selected = []
    for procedure, (n_train, n_test) in split_counts(plan).items():
        if procedure not in manifests:
            raise InsufficientImagesError(f"{plan.name}: aucun jeu source pour {procedure.value}")
        manifest = manifests[procedure]
        picked = []
        for split, wanted in (("train", n_train), ("test", n_test)):
            available = sorted(manifest.images_for(procedure.value, split), key=lambda e: e["image_id"])
            if len(available) < wanted:
                raise InsufficientImagesError(
                    f"{plan.name}: {procedure.value} demande {wanted} image(s) {split}, "
                    f"le jeu '{manifest.name}' n'en a que {len(available)}"
                )
            picked.extend(available[:wanted])
        selected.extend((procedure, entry) for entry in sorted(picked, key=lambda e: e["image_id"]))
    return selected


def assemble(plan: MixPlan, sources: Mapping, out_root, seed: int = 0, max_workers: int = 4) -> DatasetManifest:
    """
    Construit un jeu de combinaison à partir des jeux par procédure

    Args:
        plan: Composition
        sources: {ProcedureId: dossier du jeu source}
        out_root: Dossier du jeu combiné
        seed: Graine reportée dans le manifeste
        max_workers: Threads de copie des images

    Returns:
        DatasetManifest du jeu combiné
    """
    stores = {ProcedureId.parse(p): DatasetStore(root) for p, root in sources.items()}
    counts = plan_counts(plan)
    stores = {p: s for p, s in stores.items() if p in counts}
    manifests = {p: s.load_manifest() for p, s in stores.items()}
    if not manifests:
        raise InsufficientImagesError(f"{plan.name}: aucun jeu source fourni")
    _check_compatible(manifests)
    selected = _select(plan, manifests)

    indexes = {}
    for procedure, store in stores.items():
        coco = store.load_coco()
        indexes[procedure] = {
            "boxes": coco.annotations_by_image(),
            "scene_gt": {int(k): v for k, v in store.read_index(SCENE_GT).items()},
            "gt_info": store.load_scene_gt_info(),
            "camera": store.load_scene_camera(),
        }
    _check_cameras(selected, indexes)

    out = DatasetStore(out_root)
    out.prepare()
    copies = []
    splits = {}
    for new_id, (procedure, entry) in enumerate(selected):
        old_id = entry["image_id"]
        source = stores[procedure]
        for kind in IMAGE_DIRS:
            copies.append((source.root / image_file(kind, old_id), out.root / image_file(kind, new_id)))
        index = indexes[procedure]
        provenance = {k: v for k, v in entry.items() if k not in ("image_id", "file_name", "split")}
        provenance.setdefault("source", {"dataset": manifests[procedure].name, "image_id": old_id})
        out.add_index(
            ImageIndex(
                image_id=new_id,
                boxes=[
                    {"category_id": a["category_id"], "bbox": a["bbox"], "area": a["area"]}
                    for a in index["boxes"].get(coco_image_id(old_id), [])
                ],
                scene_gt=index["scene_gt"][old_id],
                gt_info=index["gt_info"][old_id],
                camera=index["camera"][old_id],
                provenance=provenance,
            )
        )
        splits[new_id] = entry["split"]

    try:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            list(executor.map(lambda pair: shutil.copyfile(*pair), copies))
    except OSError as e:
        raise DatasetWriteError(f"{plan.name}: copie des images impossible: {e}")

    reference = next(iter(stores.values()))
    categories = next(iter(manifests.values())).categories
    models_info = reference.read_index(MODELS_INFO)
    manifest = out.finalize(
        plan.name, reference.intrinsics(), categories, models_info, seed, plan.split_ratio, splits=splits
    )
    logger.info(
        f"{plan.name}: "
        + ", ".join(f"{p.value}={n}" for p, n in counts.items())
        + f" ({len(selected)} image(s))"
    )
    return manifest

