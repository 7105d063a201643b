"""
Annotations COCO (boîtes 2D) dérivées des cartes d'instances
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.exceptions import DatasetValidationError


def bbox_from_mask(instance_map: np.ndarray, instance_id: int) -> Optional[Tuple[List[int], int]]:
    """
    Rectangle englobant serré des pixels égaux à instance_id

    Args:
        instance_map: Carte d'instances (H, W)
        instance_id: Identifiant > 0

    Returns:
        ([x, y, w, h], aire en pixels) ou None si l'instance est absente
    """
    if instance_id <= 0:
        raise ValueError("L'identifiant d'instance doit être > 0")
    mask = np.asarray(instance_map) == instance_id
    area = int(mask.sum())
    if area == 0:
        return None
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    x, y = int(cols[0]), int(rows[0])
    return [x, y, int(cols[-1]) - x + 1, int(rows[-1]) - y + 1], area


@dataclass
class CocoDataset:
    images: List[dict] = field(default_factory=list)
    annotations: List[dict] = field(default_factory=list)
    categories: List[dict] = field(default_factory=list)

    def add_image(self, image_id: int, file_name: str, width: int, height: int) -> dict:
        entry = {"id": image_id, "file_name": file_name, "width": width, "height": height}
        self.images.append(entry)
        return entry

    def add_annotation(self, image_id: int, category_id: int, bbox: List[int], area: int) -> dict:
        entry = {
            "id": len(self.annotations) + 1,
            "image_id": image_id,
            "category_id": category_id,
            "bbox": [int(v) for v in bbox],
            "area": int(area),
            "iscrowd": 0,
        }
        self.annotations.append(entry)
        return entry

    def annotations_by_image(self) -> Dict[int, List[dict]]:
        grouped: Dict[int, List[dict]] = {img["id"]: [] for img in self.images}
        for ann in self.annotations:
            grouped.setdefault(ann["image_id"], []).append(ann)
        return grouped

    def category_names(self) -> Dict[int, str]:
        return {c["id"]: c["name"] for c in self.categories}

    def validate(self):
        """Ids positifs et uniques, références résolues, boîtes non vides"""
        for kind, items in (("images", self.images), ("annotations", self.annotations), ("categories", self.categories)):
            ids = [item["id"] for item in items]
            if any(i < 1 for i in ids):
                raise DatasetValidationError(f"COCO {kind}: identifiant non positif")
            if len(set(ids)) != len(ids):
                raise DatasetValidationError(f"COCO {kind}: identifiants en double")
        image_ids = {img["id"] for img in self.images}
        category_ids = {cat["id"] for cat in self.categories}
        for ann in self.annotations:
            if ann["image_id"] not in image_ids:
                raise DatasetValidationError(f"Annotation {ann['id']}: image {ann['image_id']} inconnue")
            if ann["category_id"] not in category_ids:
                raise DatasetValidationError(f"Annotation {ann['id']}: catégorie {ann['category_id']} inconnue")
            if ann["bbox"][2] < 1 or ann["bbox"][3] < 1:
                raise DatasetValidationError(f"Annotation {ann['id']}: boîte vide {ann['bbox']}")

    def to_dict(self) -> dict:
        return {"images": self.images, "annotations": self.annotations, "categories": self.categories}

    @classmethod
    def from_dict(cls, data: dict) -> "CocoDataset":
        return cls(
            images=list(data.get("images", [])),
            annotations=list(data.get("annotations", [])),
            categories=list(data.get("categories", [])),
        )
