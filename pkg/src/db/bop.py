"""
Vérité terrain au format BOP : poses par image (scene_gt), caméra
(scene_camera), visibilité (scene_gt_info) et dimensions des modèles (models_info)

Les translations sont stockées en mètres (champ units = "m")
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.db.coco import bbox_from_mask
from src.exceptions import DatasetValidationError
from src.geometry.camera import CameraIntrinsics
from src.geometry.mesh import Mesh
from src.geometry.model_info import mesh_stats
from src.geometry.transforms import RigidTransform

logger = logging.getLogger(__name__)

DEPTH_SCALE = 0.0001
UNITS = "m"
POSE_TOL = 1e-6
_UINT16_MAX = np.iinfo(np.uint16).max


@dataclass(frozen=True)
class PoseRecord:
    """Pose caméra <- modèle d'une instance dans une image"""

    image_id: int
    obj_id: int
    rotation: tuple
    translation: tuple
    instance_id: int

    @classmethod
    def from_transform(cls, image_id: int, obj_id: int, instance_id: int, cam_from_model: RigidTransform) -> "PoseRecord":
        return cls(
            image_id=image_id,
            obj_id=obj_id,
            rotation=tuple(float(v) for v in cam_from_model.rotation.reshape(-1)),
            translation=tuple(float(v) for v in cam_from_model.translation),
            instance_id=instance_id,
        )

    @property
    def rotation_matrix(self) -> np.ndarray:
        return np.array(self.rotation, dtype=np.float64).reshape(3, 3)

    def to_transform(self) -> RigidTransform:
        return RigidTransform(self.rotation_matrix, np.array(self.translation))

    def validate(self):
        r = self.rotation_matrix
        if len(self.rotation) != 9 or len(self.translation) != 3:
            raise DatasetValidationError(f"Image {self.image_id}: pose mal dimensionnée")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(self.translation))):
            raise DatasetValidationError(f"Image {self.image_id}, instance {self.instance_id}: pose non finie")
        err = np.max(np.abs(r.T @ r - np.eye(3)))
        det = np.linalg.det(r)
        if err > POSE_TOL or abs(det - 1.0) > POSE_TOL:
            raise DatasetValidationError(
                f"Image {self.image_id}, instance {self.instance_id}: rotation invalide (det={det:.6f})"
            )

    def to_dict(self) -> dict:
        return {
            "cam_R_m2c": list(self.rotation),
            "cam_t_m2c": list(self.translation),
            "obj_id": self.obj_id,
            "inst_id": self.instance_id,
        }

    @classmethod
    def from_dict(cls, image_id: int, data: dict) -> "PoseRecord":
        return cls(
            image_id=image_id,
            obj_id=int(data["obj_id"]),
            rotation=tuple(float(v) for v in data["cam_R_m2c"]),
            translation=tuple(float(v) for v in data["cam_t_m2c"]),
            instance_id=int(data["inst_id"]),
        )


def camera_entry(K: CameraIntrinsics, camera: RigidTransform, depth_scale: float = DEPTH_SCALE) -> dict:
    return {
        "cam_K": K.as_list(),
        "depth_scale": depth_scale,
        "units": UNITS,
        "cam_R_w2c": [float(v) for v in camera.rotation.reshape(-1)],
        "cam_t_w2c": [float(v) for v in camera.translation],
    }


def gt_info_entries(instance_map: np.ndarray, poses: List[PoseRecord]) -> List[dict]:
    """Visibilité de chaque instance (≥ 1 pixel visible)"""
    entries = []
    for pose in poses:
        found = bbox_from_mask(instance_map, pose.instance_id)
        bbox, count = found if found else ([-1, -1, -1, -1], 0)
        entries.append(
            {
                "obj_id": pose.obj_id,
                "inst_id": pose.instance_id,
                "bbox_visib": bbox,
                "px_count_visib": count,
                "visib": count >= 1,
            }
        )
    return entries


def encode_depth(depth: np.ndarray, depth_scale: float = DEPTH_SCALE) -> np.ndarray:
    """Profondeur en mètres -> uint16 (unités de depth_scale), saturée à 65535"""
    units = np.rint(np.asarray(depth, dtype=np.float64) / depth_scale)
    saturated = int((units > _UINT16_MAX).sum())
    if saturated:
        logger.warning(f"⚠ {saturated} pixel(s) de profondeur saturé(s) (> {_UINT16_MAX * depth_scale:.2f} m)")
    return np.clip(units, 0, _UINT16_MAX).astype(np.uint16)


def decode_depth(encoded: np.ndarray, depth_scale: float = DEPTH_SCALE) -> np.ndarray:
    return np.asarray(encoded, dtype=np.float64) * depth_scale


def write_models_info(meshes: Dict[int, Optional[Mesh]]) -> Dict[str, dict]:
    """
    Dimensions de chaque modèle, indexées par identifiant de catégorie

    Args:
        meshes: {obj_id: Mesh}

    Returns:
        {"obj_id": {diameter, min_x, ..., size_z}} en mètres
    """
    missing = [obj_id for obj_id, mesh in meshes.items() if mesh is None]
    if missing:
        raise DatasetValidationError(f"Maillage manquant pour les catégories {missing}")
    return {str(obj_id): mesh_stats(mesh).to_dict() for obj_id, mesh in sorted(meshes.items())}
