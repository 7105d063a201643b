"""
Contrôle visuel de la vérité terrain : boîtes 2D et étiquettes, boîtes 3D
projetées avec le repère de l'objet, détections au-dessus d'un seuil
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from matplotlib import colormaps

from src.analysis.bitmap_font import draw_text
from src.analysis.metrics import Detection
from src.db.bop import PoseRecord
from src.db.dataset_store import DatasetStore, coco_image_id, write_png_atomic
from src.geometry.camera import CameraIntrinsics, project_points
from src.geometry.model_info import BOX_EDGES, ModelInfo, obb_corners
from src.render.rasterizer import NEAR

logger = logging.getLogger(__name__)

AXIS_COLORS = ((255, 0, 0), (0, 255, 0), (0, 0, 255))
VIZ_DIRS = {"2d": "viz2d", "3d": "viz3d", "dets": "viz_dets"}


def _palette() -> List[Tuple[int, int, int]]:
    cmap = colormaps["tab10"]
    return [tuple(int(round(c * 255)) for c in cmap(i)[:3]) for i in range(cmap.N)]


@dataclass(frozen=True)
class OverlayStyle:
    thickness: int = 1
    colors: Mapping[int, Tuple[int, int, int]] = field(default_factory=dict)
    axis_length: float = 0.5
    font_scale: int = 1
    show_labels: bool = False

    def __post_init__(self):
        if self.thickness < 1:
            raise ValueError("thickness doit être >= 1")
        if not 0.0 < self.axis_length <= 2.0:
            raise ValueError("axis_length doit être dans ]0, 2]")
        if self.font_scale < 1:
            raise ValueError("font_scale doit être >= 1")

    def color_for(self, category_id: int) -> Tuple[int, int, int]:
        if category_id in self.colors:
            return tuple(self.colors[category_id])
        palette = _palette()
        return palette[category_id % len(palette)]


# ========== PRIMITIVES ==========


def clip_segment(p0, p1, width: int, height: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Découpe de Liang-Barsky sur [0, W-1] x [0, H-1] ; None si hors image"""
    p0, p1 = np.asarray(p0, dtype=np.float64), np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-d[0], p0[0]),
        (d[0], width - 1 - p0[0]),
        (-d[1], p0[1]),
        (d[1], height - 1 - p0[1]),
    ):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return p0 + t0 * d, p0 + t1 * d


def bresenham(x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    """Pixels entiers du segment, extrémités comprises (n, 2) en (x, y)"""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    points = []
    while True:
        points.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return np.array(points, dtype=np.int64)


def _stamp(image: np.ndarray, points: np.ndarray, color, thickness: int):
    height, width = image.shape[:2]
    offsets = range(-(thickness // 2), thickness - thickness // 2)
    color = np.asarray(color, dtype=np.uint8)
    for dy in offsets:
        for dx in offsets:
            xs, ys = points[:, 0] + dx, points[:, 1] + dy
            keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
            image[ys[keep], xs[keep]] = color


def draw_line(image: np.ndarray, p0, p1, color, thickness: int = 1) -> bool:
    """Trace un segment en place ; False s'il est entièrement hors image"""
    height, width = image.shape[:2]
    clipped = clip_segment(p0, p1, width, height)
    if clipped is None:
        return False
    a, b = (np.rint(p).astype(int) for p in clipped)
    _stamp(image, bresenham(a[0], a[1], b[0], b[1]), color, thickness)
    return True


def draw_rect(image: np.ndarray, bbox: Sequence[float], color, thickness: int = 1):
    """Contour de la boîte [x, y, w, h] ; l'épaisseur croît vers l'intérieur"""
    x, y, w, h = (int(round(v)) for v in bbox)
    for k in range(thickness):
        x0, y0, x1, y1 = x + k, y + k, x + w - 1 - k, y + h - 1 - k
        if x0 > x1 or y0 > y1:
            break
        for a, b in (((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)), ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))):
            draw_line(image, a, b, color)


def _label(image: np.ndarray, bbox, text: str, color, style: OverlayStyle):
    x, y, w, h = (int(round(v)) for v in bbox)
    t = style.thickness
    draw_text(image, x + t, y + t, text, color, style.font_scale, clip=(x + t, y + t, x + w - 1 - t, y + h - 1 - t))


# ========== SUPERPOSITIONS ==========


def overlay_2d(
    rgb: np.ndarray,
    annotations: Sequence[dict],
    category_names: Optional[Mapping[int, str]] = None,
    style: OverlayStyle = OverlayStyle(),
) -> np.ndarray:
    """
    Boîtes COCO et noms de catégorie sur une copie de l'image

    Avec show_labels, l'étiquette est ancrée au coin haut-gauche, à
    l'intérieur de la boîte ; sinon seul le contour est modifié

    Args:
        rgb: Image (H, W, 3) uint8
        annotations: Annotations COCO de cette image
        category_names: {category_id: nom}
        style: Épaisseur, couleurs, taille de police

    Returns:
        Nouvelle image
    """
    out = np.array(rgb, dtype=np.uint8, copy=True)
    names = category_names or {}
    for ann in annotations:
        color = style.color_for(ann["category_id"])
        draw_rect(out, ann["bbox"], color, style.thickness)
        if style.show_labels:
            _label(out, ann["bbox"], names.get(ann["category_id"], str(ann["category_id"])), color, style)
    return out


def _clip_near(a: np.ndarray, b: np.ndarray, near: float):
    if a[2] < near and b[2] < near:
        return None
    if a[2] < near:
        a = a + (near - a[2]) / (b[2] - a[2]) * (b - a)
    elif b[2] < near:
        b = b + (near - b[2]) / (a[2] - b[2]) * (a - b)
    return a, b


def _draw_3d_segments(image, K: CameraIntrinsics, segments, thickness: int):
    for a, b, color in segments:
        clipped = _clip_near(a, b, NEAR)
        if clipped is None:
            continue
        uv = project_points(K, np.stack(clipped))
        draw_line(image, uv[0], uv[1], color, thickness)


def overlay_3d(
    rgb: np.ndarray,
    pose: PoseRecord,
    info: ModelInfo,
    K: CameraIntrinsics,
    style: OverlayStyle = OverlayStyle(),
) -> Tuple[np.ndarray, bool]:
    """
    Boîte 3D projetée (12 arêtes) et axes X/Y/Z de l'objet (rouge/vert/bleu)

    Les arêtes sont découpées au plan proche avant projection

    Args:
        rgb: Image (H, W, 3) uint8
        pose: Pose caméra <- modèle
        info: Dimensions du modèle
        K: Intrinsèques
        style: Épaisseur, couleurs, longueur des axes (fraction du diamètre)

    Returns:
        (nouvelle image, True si l'objet est entièrement derrière la caméra)
    """
    out = np.array(rgb, dtype=np.uint8, copy=True)
    transform = pose.to_transform()
    corners = obb_corners(info, transform).corners
    if np.all(corners[:, 2] < NEAR):
        logger.warning(f"⚠ Image {pose.image_id}, instance {pose.instance_id}: boîte derrière la caméra")
        return out, True

    color = style.color_for(pose.obj_id)
    segments = [(corners[i], corners[j], color) for i, j in BOX_EDGES]
    length = style.axis_length * info.diameter
    origin = transform.translation
    tips = transform.apply(np.eye(3) * length)
    segments += [(origin, tips[k], AXIS_COLORS[k]) for k in range(3)]
    _draw_3d_segments(out, K, segments, style.thickness)
    return out, False


def overlay_detections(
    rgb: np.ndarray,
    detections: Sequence[Detection],
    category_names: Optional[Mapping[int, str]] = None,
    style: OverlayStyle = OverlayStyle(),
    score_threshold: float = 0.8,
) -> np.ndarray:
    """Détections de score >= score_threshold, étiquetées « nom score »"""
    out = np.array(rgb, dtype=np.uint8, copy=True)
    names = category_names or {}
    for det in detections:
        if det.score < score_threshold:
            continue
        color = style.color_for(det.category_id)
        draw_rect(out, det.bbox, color, style.thickness)
        if style.show_labels:
            _label(out, det.bbox, f"{names.get(det.category_id, det.category_id)} {det.score:.2f}", color, style)
    return out


# ========== JEU COMPLET ==========


def visualize_dataset(
    root,
    modes: Sequence[str] = ("2d", "3d"),
    detections: Optional[Sequence[Detection]] = None,
    score_threshold: float = 0.8,
    style: OverlayStyle = OverlayStyle(),
    max_workers: int = 4,
) -> Dict[str, int]:
    """
    Écrit une image de contrôle par vue et par mode dans viz2d/, viz3d/, viz_dets/

    Returns:
        {mode: nombre d'images écrites}, plus "behind_camera" pour les boîtes 3D ignorées
    """
    store = DatasetStore(root)
    manifest = store.load_manifest()
    coco = store.load_coco()
    names = coco.category_names()
    by_image = coco.annotations_by_image()
    scene_gt = store.load_scene_gt() if "3d" in modes else {}
    infos = store.load_models_info() if "3d" in modes else {}
    cameras = store.load_scene_camera()
    dets_by_image: Dict[int, List[Detection]] = {}
    for det in detections or []:
        dets_by_image.setdefault(det.image_id, []).append(det)

    if "dets" in modes and detections is None:
        raise ValueError("Le mode 'dets' demande un fichier de détections")
    for mode in modes:
        (store.root / VIZ_DIRS[mode]).mkdir(parents=True, exist_ok=True)

    def one(image_id: int) -> int:
        rgb = store.read_image("rgb", image_id)
        coco_id = coco_image_id(image_id)
        file_name = f"{image_id:06d}.png"
        behind = 0
        if "2d" in modes:
            write_png_atomic(store.root / VIZ_DIRS["2d"] / file_name, overlay_2d(rgb, by_image.get(coco_id, []), names, style))
        if "3d" in modes:
            K = CameraIntrinsics.from_list(cameras[image_id]["cam_K"], manifest.width, manifest.height)
            out = rgb
            for pose in scene_gt.get(image_id, []):
                out, warned = overlay_3d(out, pose, infos[pose.obj_id], K, style)
                behind += int(warned)
            write_png_atomic(store.root / VIZ_DIRS["3d"] / file_name, out)
        if "dets" in modes:
            drawn = overlay_detections(rgb, dets_by_image.get(coco_id, []), names, style, score_threshold)
            write_png_atomic(store.root / VIZ_DIRS["dets"] / file_name, drawn)
        return behind

    image_ids = [entry["image_id"] for entry in manifest.images]
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        behind_total = sum(executor.map(one, image_ids))

    counts = {mode: len(image_ids) for mode in modes}
    counts["behind_camera"] = behind_total
    logger.info(f"Visualisation de {store.root}: {counts}")
    return counts

