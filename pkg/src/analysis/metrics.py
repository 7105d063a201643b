"""
Métriques de détection : IoU, précision moyenne interpolée sur 101 points,
mAP@0.5 et mAP@[0.5:0.95]
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.db.coco import CocoDataset
from src.exceptions import EvaluationError

logger = logging.getLogger(__name__)

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_POINTS = 101
MAX_DETS = 100


@dataclass(frozen=True)
class Detection:
    image_id: int
    category_id: int
    bbox: Tuple[float, float, float, float]
    score: float

    def __post_init__(self):
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        if len(self.bbox) != 4 or not (self.bbox[2] > 0 and self.bbox[3] > 0):
            raise EvaluationError(f"Détection image {self.image_id}: boîte invalide {self.bbox}")
        if not math.isfinite(self.score):
            raise EvaluationError(f"Détection image {self.image_id}: score non fini")

    @classmethod
    def from_dict(cls, data: dict) -> "Detection":
        return cls(int(data["image_id"]), int(data["category_id"]), tuple(data["bbox"]), float(data["score"]))


@dataclass(frozen=True)
class GroundTruth:
    image_id: int
    category_id: int
    bbox: Tuple[float, float, float, float]


def ground_truth_from_coco(coco: CocoDataset) -> List[GroundTruth]:
    return [GroundTruth(a["image_id"], a["category_id"], tuple(float(v) for v in a["bbox"])) for a in coco.annotations]


def load_detections(path) -> List[Detection]:
    """Fichier de résultats au format COCO (liste de {image_id, category_id, bbox, score})"""
    with open(Path(path), "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise EvaluationError(f"{path}: une liste de détections est attendue")
    try:
        return [Detection.from_dict(d) for d in data]
    except (KeyError, TypeError, ValueError) as e:
        raise EvaluationError(f"{path}: détection mal formée ({e})")


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """Intersection sur union de deux boîtes [x, y, w, h]"""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def _match(dets: Sequence[Detection], gts: Sequence[GroundTruth], iou_threshold: float, max_dets: int):
    """(scores, vrais positifs) des détections retenues, dans l'ordre d'entrée"""
    gts_by_image: Dict[int, List[GroundTruth]] = {}
    for gt in gts:
        gts_by_image.setdefault(gt.image_id, []).append(gt)
    dets_by_image: Dict[int, List[Tuple[int, Detection]]] = {}
    for k, det in enumerate(dets):
        dets_by_image.setdefault(det.image_id, []).append((k, det))

    kept: List[Tuple[int, float, bool]] = []
    for image_id, entries in dets_by_image.items():
        entries = sorted(entries, key=lambda e: -e[1].score)[:max_dets]
        candidates = gts_by_image.get(image_id, [])
        matched = [False] * len(candidates)
        for k, det in entries:
            best, best_iou = -1, iou_threshold
            for g, gt in enumerate(candidates):
                if matched[g]:
                    continue
                overlap = iou(det.bbox, gt.bbox)
                if overlap >= best_iou and (best < 0 or overlap > best_iou):
                    best, best_iou = g, overlap
            if best >= 0:
                matched[best] = True
            kept.append((k, det.score, best >= 0))
    kept.sort(key=lambda e: e[0])
    return kept


def average_precision(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruth],
    iou_threshold: float = 0.5,
    max_dets: int = MAX_DETS,
) -> float:
    """
    Précision moyenne d'une catégorie, interpolée sur 101 niveaux de rappel

    Appariement glouton par score décroissant (égalités : ordre d'entrée) ;
    chaque vérité terrain est appariée au plus une fois, à la détection de
    plus fort IoU >= seuil parmi celles encore libres

    Args:
        dets: Détections de la catégorie
        gts: Vérités terrain de la catégorie
        iou_threshold: Seuil d'IoU
        max_dets: Détections retenues par image

    Returns:
        AP dans [0, 1] ; 1.0 sans vérité terrain ni détection, 0.0 sans vérité terrain
    """
    n_gt = len(gts)
    if n_gt == 0:
        return 1.0 if not dets else 0.0
    kept = _match(dets, gts, iou_threshold, max_dets)
    if not kept:
        return 0.0

    order = sorted(range(len(kept)), key=lambda i: -kept[i][1])
    tp = np.cumsum([kept[i][2] for i in order], dtype=np.int64)
    ranks = np.arange(1, len(order) + 1)
    precision = tp / ranks
    envelope = np.maximum.accumulate(precision[::-1])[::-1]

    # rappel >= k/100 testé en entiers : tp · 100 >= k · n_gt
    total = 0.0
    for k in range(RECALL_POINTS):
        idx = int(np.searchsorted(tp * (RECALL_POINTS - 1), k * n_gt, side="left"))
        if idx < len(envelope):
            total += float(envelope[idx])
    return total / RECALL_POINTS


@dataclass
class MetricReport:
    """AP par catégorie et par seuil, et les deux moyennes"""

    ap: Dict[int, List[float]] = field(default_factory=dict)
    thresholds: Tuple[float, ...] = IOU_THRESHOLDS
    category_names: Dict[int, str] = field(default_factory=dict)

    @property
    def map_50(self) -> float:
        return float(np.mean([values[0] for values in self.ap.values()]))

    @property
    def map_50_95(self) -> float:
        return float(np.mean([np.mean(values) for values in self.ap.values()]))

    def restricted_to(self, category_id: int) -> "MetricReport":
        if category_id not in self.ap:
            raise EvaluationError(f"Catégorie {category_id} absente du rapport")
        return MetricReport({category_id: self.ap[category_id]}, self.thresholds, self.category_names)

    def to_frame(self) -> pd.DataFrame:
        """Une ligne par catégorie, une colonne par seuil"""
        frame = pd.DataFrame.from_dict(self.ap, orient="index", columns=[f"AP@{t:.2f}" for t in self.thresholds])
        frame.index = [self.category_names.get(c, str(c)) for c in frame.index]
        return frame

    def to_dict(self) -> dict:
        return {
            "mAP@0.5": self.map_50,
            "mAP@[0.5:0.95]": self.map_50_95,
            "per_category": {str(c): dict(zip(map(str, self.thresholds), v)) for c, v in self.ap.items()},
        }


def map_metrics(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruth],
    categories: Optional[Mapping[int, str]] = None,
    max_dets: int = MAX_DETS,
) -> MetricReport:
    """
    AP par catégorie pour chaque seuil de 0.50 à 0.95

    Les catégories évaluées sont les catégories connues présentes dans la
    vérité terrain ou dans les détections

    Args:
        dets: Toutes les détections
        gts: Toutes les vérités terrain
        categories: {category_id: nom} ; par défaut, celles de la vérité terrain
        max_dets: Détections retenues par image et par catégorie

    Returns:
        MetricReport
    """
    known = dict(categories) if categories is not None else {g.category_id: str(g.category_id) for g in gts}
    unknown = sorted({d.category_id for d in dets} - set(known))
    if unknown:
        raise EvaluationError(f"Catégories inconnues dans les détections: {unknown}")
    evaluated = sorted({g.category_id for g in gts} | {d.category_id for d in dets})
    if not evaluated:
        raise EvaluationError("Rien à évaluer : ni vérité terrain ni détection")

    report = MetricReport(category_names={c: known[c] for c in evaluated if c in known})
    for category_id in evaluated:
        cat_dets = [d for d in dets if d.category_id == category_id]
        cat_gts = [g for g in gts if g.category_id == category_id]
        report.ap[category_id] = [average_precision(cat_dets, cat_gts, t, max_dets) for t in IOU_THRESHOLDS]
        logger.debug(f"Catégorie {category_id}: AP@0.5={report.ap[category_id][0]:.4f}")
    return report
