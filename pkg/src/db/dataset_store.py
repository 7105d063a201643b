"""
Stockage d'un jeu de données généré : images, index JSON (COCO, BOP) et manifeste

Disposition :
    rgb/%06d.png, depth/%06d.png, class/%06d.png, instance/%06d.png,
    scene_gt.json, scene_gt_info.json, scene_camera.json, models_info.json,
    coco_annotations.json, manifest.json

Chaque fichier est écrit de façon atomique (fichier temporaire puis os.replace)
"""

import json
import logging
import math
import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Dict, Iterable, List, Optional

import numpy as np
from PIL import Image

from src.db.bop import (
    DEPTH_SCALE,
    PoseRecord,
    camera_entry,
    decode_depth,
    encode_depth,
    gt_info_entries,
)
from src.db.coco import CocoDataset, bbox_from_mask
from src.exceptions import DatasetError, DatasetValidationError, DatasetWriteError
from src.geometry.camera import CameraIntrinsics
from src.geometry.model_info import ModelInfo
from src.render.frame import FrameSet
from src.scene.rng import stable_hash

logger = logging.getLogger(__name__)

IMAGE_DIRS = ("rgb", "depth", "class", "instance")
SCENE_GT = "scene_gt.json"
SCENE_GT_INFO = "scene_gt_info.json"
SCENE_CAMERA = "scene_camera.json"
MODELS_INFO = "models_info.json"
COCO_FILE = "coco_annotations.json"
MANIFEST_FILE = "manifest.json"
INCOMPLETE_DIR = "_incomplete"
SPLITS = ("train", "test")


def image_file(kind: str, image_id: int) -> str:
    return f"{kind}/{image_id:06d}.png"


def coco_image_id(image_id: int) -> int:
    """Les ids COCO sont positifs : image_id (à partir de 0) + 1"""
    return image_id + 1


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def assign_splits(seed: int, image_ids: Iterable[int], split_ratio: float) -> Dict[int, str]:
    """
    Partage train/test par rang du hachage de (seed, image_id)

    Les round_half_up(ratio · N) premiers rangs sont en train : la
    proportion est respectée à une image près quel que soit N

    Args:
        seed: Graine du jeu
        image_ids: Identifiants d'image
        split_ratio: Fraction train dans ]0, 1[

    Returns:
        {image_id: "train" | "test"}
    """
    ids = list(image_ids)
    ranked = sorted(ids, key=lambda i: (stable_hash(seed, i), i))
    n_train = round_half_up(split_ratio * len(ids))
    return {image_id: ("train" if rank < n_train else "test") for rank, image_id in enumerate(ranked)}


# ========== ECRITURE ATOMIQUE ==========


def write_json_atomic(path: Path, data) -> Path:
    """JSON UTF-8 ; les flottants sont écrits par repr (relecture exacte)"""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=1, ensure_ascii=False)
    os.replace(tmp, path)
    return path


def write_png_atomic(path: Path, pixels: np.ndarray) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    Image.fromarray(pixels).save(tmp, format="PNG")
    os.replace(tmp, path)
    return path


def read_json(path: Path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def read_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.array(img)


# ========== MANIFESTE ==========


@dataclass
class DatasetManifest:
    """Provenance et partage de chaque image du jeu"""

    name: str
    seed: int
    split_ratio: float
    width: int
    height: int
    categories: List[dict] = field(default_factory=list)
    images: List[dict] = field(default_factory=list)

    @property
    def counts(self) -> Dict[str, Dict[str, int]]:
        """Par procédure : nombre total d'images, en train et en test"""
        counts: Dict[str, Dict[str, int]] = {}
        for entry in self.images:
            bucket = counts.setdefault(entry["procedure"], {"count": 0, "train": 0, "test": 0})
            bucket["count"] += 1
            bucket[entry["split"]] += 1
        return dict(sorted(counts.items()))

    def images_for(self, procedure: str, split: str) -> List[dict]:
        return [e for e in self.images if e["procedure"] == procedure and e["split"] == split]

    def validate(self):
        ids = [e["image_id"] for e in self.images]
        if ids != list(range(len(ids))):
            raise DatasetValidationError(f"Manifeste '{self.name}': image_id non contigus")
        for entry in self.images:
            if entry.get("split") not in SPLITS:
                raise DatasetValidationError(f"Image {entry['image_id']}: partage '{entry.get('split')}' invalide")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "split_ratio": self.split_ratio,
            "width": self.width,
            "height": self.height,
            "categories": self.categories,
            "counts": self.counts,
            "images": self.images,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        return cls(
            name=data["name"],
            seed=int(data["seed"]),
            split_ratio=float(data["split_ratio"]),
            width=int(data["width"]),
            height=int(data["height"]),
            categories=list(data.get("categories", [])),
            images=list(data.get("images", [])),
        )


# ========== IMAGES ==========


@dataclass(eq=False)
class ImageSample:
    """Une vue rendue, ses poses et sa provenance"""

    image_id: int
    frame: FrameSet
    poses: List[PoseRecord]
    provenance: dict


@dataclass
class ImageIndex:
    """Entrées d'index d'une image, assemblées à la fin de l'écriture"""

    image_id: int
    boxes: List[dict]
    scene_gt: List[dict]
    gt_info: List[dict]
    camera: dict
    provenance: dict


def validate_sample(sample: ImageSample):
    for pose in sample.poses:
        if pose.image_id != sample.image_id:
            raise DatasetValidationError(f"Pose de l'image {pose.image_id} rangée dans l'image {sample.image_id}")
        pose.validate()
    instance_ids = [p.instance_id for p in sample.poses]
    if len(set(instance_ids)) != len(instance_ids):
        raise DatasetValidationError(f"Image {sample.image_id}: identifiants d'instance en double")


class DatasetStore:
    """Lecture et écriture d'un jeu de données sur disque"""

    def __init__(self, root):
        """
        Args:
            root: Dossier racine du jeu
        """
        self.root = Path(root)
        self._lock = Lock()
        self._written: List[str] = []
        self._entries: Dict[int, ImageIndex] = {}

    # ========== ECRITURE ==========

    def prepare(self):
        try:
            for sub in IMAGE_DIRS:
                (self.root / sub).mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DatasetWriteError(f"Création de {self.root} impossible: {e}")

    def _record(self, path: Path):
        with self._lock:
            self._written.append(str(path))

    def write_image(self, sample: ImageSample, depth_scale: float = DEPTH_SCALE) -> ImageIndex:
        """
        Valide puis écrit les quatre images d'une vue ; aucun fichier n'est
        écrit si la validation échoue

        Args:
            sample: Vue rendue et ses poses
            depth_scale: Mètres par unité de profondeur PNG

        Returns:
            ImageIndex de la vue
        """
        validate_sample(sample)
        with self._lock:
            if sample.image_id in self._entries:
                raise DatasetValidationError(f"Image {sample.image_id} déjà écrite")

        frame = sample.frame
        boxes = []
        for pose in sorted(sample.poses, key=lambda p: p.instance_id):
            found = bbox_from_mask(frame.instance_map, pose.instance_id)
            if found is not None:
                boxes.append({"category_id": pose.obj_id, "bbox": found[0], "area": found[1]})

        buffers = {
            "rgb": frame.rgb,
            "depth": encode_depth(frame.depth, depth_scale),
            "class": frame.class_map.astype(np.uint16),
            "instance": frame.instance_map.astype(np.uint16),
        }
        try:
            for kind, pixels in buffers.items():
                self._record(write_png_atomic(self.root / image_file(kind, sample.image_id), pixels))
        except OSError as e:
            raise DatasetWriteError(f"Écriture de l'image {sample.image_id} impossible: {e}", self._written)

        entry = ImageIndex(
            image_id=sample.image_id,
            boxes=boxes,
            scene_gt=[p.to_dict() for p in sample.poses],
            gt_info=gt_info_entries(frame.instance_map, sample.poses),
            camera=camera_entry(frame.K, frame.camera, depth_scale),
            provenance=dict(sample.provenance),
        )
        with self._lock:
            self._entries[sample.image_id] = entry
        return entry

    def add_index(self, entry: ImageIndex):
        """Enregistre l'index d'une image copiée d'un autre jeu"""
        with self._lock:
            if entry.image_id in self._entries:
                raise DatasetValidationError(f"Image {entry.image_id} déjà indexée")
            self._entries[entry.image_id] = entry

    def finalize(
        self,
        name: str,
        K: CameraIntrinsics,
        categories: List[dict],
        models_info: Dict[str, dict],
        seed: int,
        split_ratio: float,
        splits: Optional[Dict[int, str]] = None,
    ) -> DatasetManifest:
        """
        Écrit les index JSON et le manifeste une fois toutes les images écrites

        Args:
            name: Nom du jeu
            K: Intrinsèques communes
            categories: [{id, name}]
            models_info: Sortie de write_models_info
            seed: Graine du jeu
            split_ratio: Fraction train
            splits: Partage imposé (jeux mélangés) ; sinon assign_splits

        Returns:
            DatasetManifest écrit
        """
        entries = [self._entries[i] for i in sorted(self._entries)]
        if [e.image_id for e in entries] != list(range(len(entries))):
            raise DatasetValidationError(f"Jeu '{name}': image_id non contigus")
        splits = splits or assign_splits(seed, [e.image_id for e in entries], split_ratio)

        coco = CocoDataset(categories=list(categories))
        manifest = DatasetManifest(name, seed, split_ratio, K.width, K.height, list(categories))
        scene_gt, gt_info, scene_camera = {}, {}, {}
        for entry in entries:
            coco_id = coco_image_id(entry.image_id)
            coco.add_image(coco_id, image_file("rgb", entry.image_id), K.width, K.height)
            for box in entry.boxes:
                coco.add_annotation(coco_id, box["category_id"], box["bbox"], box["area"])
            key = str(entry.image_id)
            scene_gt[key] = entry.scene_gt
            gt_info[key] = entry.gt_info
            scene_camera[key] = entry.camera
            manifest.images.append(
                {
                    "image_id": entry.image_id,
                    "file_name": image_file("rgb", entry.image_id),
                    **entry.provenance,
                    "split": splits[entry.image_id],
                }
            )
        coco.validate()
        manifest.validate()

        try:
            for file_name, data in (
                (SCENE_GT, scene_gt),
                (SCENE_GT_INFO, gt_info),
                (SCENE_CAMERA, scene_camera),
                (MODELS_INFO, models_info),
                (COCO_FILE, coco.to_dict()),
                (MANIFEST_FILE, manifest.to_dict()),
            ):
                self._record(write_json_atomic(self.root / file_name, data))
        except OSError as e:
            raise DatasetWriteError(f"Écriture des index de '{name}' impossible: {e}", self._written)

        logger.info(f"Jeu '{name}': {len(entries)} image(s), {len(coco.annotations)} annotation(s)")
        return manifest

    @property
    def written(self) -> List[str]:
        return list(self._written)

    # ========== LECTURE ==========

    def _require(self, file_name: str) -> Path:
        path = self.root / file_name
        if not path.exists():
            raise DatasetError(f"Fichier absent du jeu {self.root}: {file_name}")
        return path

    def read_index(self, file_name: str):
        """Contenu brut d'un index JSON du jeu"""
        return read_json(self._require(file_name))

    def load_manifest(self) -> DatasetManifest:
        return DatasetManifest.from_dict(read_json(self._require(MANIFEST_FILE)))

    def load_coco(self) -> CocoDataset:
        return CocoDataset.from_dict(read_json(self._require(COCO_FILE)))

    def load_scene_gt(self) -> Dict[int, List[PoseRecord]]:
        data = read_json(self._require(SCENE_GT))
        return {int(k): [PoseRecord.from_dict(int(k), d) for d in v] for k, v in data.items()}

    def load_scene_camera(self) -> Dict[int, dict]:
        return {int(k): v for k, v in read_json(self._require(SCENE_CAMERA)).items()}

    def load_scene_gt_info(self) -> Dict[int, List[dict]]:
        return {int(k): v for k, v in read_json(self._require(SCENE_GT_INFO)).items()}

    def load_models_info(self) -> Dict[int, ModelInfo]:
        return {int(k): ModelInfo.from_dict(v) for k, v in read_json(self._require(MODELS_INFO)).items()}

    def read_image(self, kind: str, image_id: int) -> np.ndarray:
        if kind not in IMAGE_DIRS:
            raise ValueError(f"Type d'image inconnu: {kind}")
        return read_png(self._require(image_file(kind, image_id)))

    def read_depth(self, image_id: int) -> np.ndarray:
        scale = self.load_scene_camera()[image_id]["depth_scale"]
        return decode_depth(self.read_image("depth", image_id), scale)

    def intrinsics(self, image_id: int = 0) -> CameraIntrinsics:
        manifest = self.load_manifest()
        cam_k = self.load_scene_camera()[image_id]["cam_K"]
        return CameraIntrinsics.from_list(cam_k, manifest.width, manifest.height)


def write_dataset(
    samples: List[ImageSample],
    root,
    name: str,
    categories: List[dict],
    models_info: Dict[str, dict],
    seed: int,
    split_ratio: float,
) -> DatasetManifest:
    """
    Écrit un jeu complet ; toutes les vues sont validées avant la première écriture

    Args:
        samples: Vues rendues (image_id contigus à partir de 0)
        root: Dossier racine
        name: Nom du jeu
        categories: [{id, name}]
        models_info: Dimensions des modèles
        seed: Graine
        split_ratio: Fraction train

    Returns:
        DatasetManifest
    """
    if not samples:
        raise DatasetValidationError("Aucune image à écrire")
    ids = [s.image_id for s in samples]
    if len(set(ids)) != len(ids):
        raise DatasetValidationError(f"Identifiants d'image en double: {sorted(i for i in set(ids) if ids.count(i) > 1)}")
    known = {c["id"] for c in categories}
    for sample in samples:
        validate_sample(sample)
        unknown = {p.obj_id for p in sample.poses} - known
        if unknown:
            raise DatasetValidationError(f"Image {sample.image_id}: catégories inconnues {sorted(unknown)}")
    K = samples[0].frame.K
    if any(s.frame.K != K for s in samples):
        raise DatasetValidationError("Intrinsèques différentes entre les images")

    store = DatasetStore(root)
    store.prepare()
    for sample in samples:
        store.write_image(sample)
    return store.finalize(name, K, categories, models_info, seed, split_ratio)


# ========== QUARANTAINE ==========


def staging_root(output_root, name: str) -> Path:
    """Dossier d'écriture provisoire ; il n'est publié qu'en cas de succès"""
    staging = Path(output_root) / INCOMPLETE_DIR / name
    if staging.exists():
        logger.info(f"Suppression d'une sortie incomplète précédente: {staging}")
        shutil.rmtree(staging)
    return staging


def publish(staging: Path, final: Path) -> Path:
    """Remplace le jeu final par le dossier provisoire"""
    final = Path(final)
    if final.exists():
        shutil.rmtree(final)
    final.parent.mkdir(parents=True, exist_ok=True)
    os.replace(staging, final)
    return final
