"""
Extraction des sorties d'export CAO : liste des pièces, catégories,
transformations d'assemblage et maillages des dossiers Classes/ et Structure/
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.exceptions import AssemblySchemaError, UnresolvedComponentError
from src.geometry.mesh import Mesh
from src.geometry.mesh_io import DEFAULT_UNIT_SCALE, load_mesh
from src.geometry.transforms import RigidTransform, rpy_to_rotation

logger = logging.getLogger(__name__)

PART_LIST_FILE = "PartList.csv"
CATEGORY_LIST_FILE = "CategoryList.csv"
CLASSES_DIR = "Classes"
STRUCTURE_DIR = "Structure"
TRANSFORMS_FILE = "transforms.json"

COMPONENT_KINDS = ("part", "sub-assembly", "main-assembly")
MESH_EXTENSIONS = (".ply", ".stl", ".obj")
ROLES = ("class", "structure")


@dataclass(frozen=True)
class ComponentRecord:
    component_name: str
    kind: str


@dataclass(frozen=True)
class CategoryAssignment:
    component_name: str
    category_name: str
    category_id: int


@dataclass(frozen=True)
class AssemblyPlacement:
    """Pose d'un composant dans le repère de l'assemblage principal"""

    component_name: str
    translation_mm: tuple
    rpy_deg: tuple
    role: str


def to_pose(placement: AssemblyPlacement) -> RigidTransform:
    """Placement (mm, degrés RPY) vers pose en mètres"""
    translation = np.array(placement.translation_mm, dtype=np.float64) / 1000.0
    return RigidTransform(rpy_to_rotation(*placement.rpy_deg), translation)


# ========== CSV ==========


def _read_csv(csv_path) -> Optional[pd.DataFrame]:
    """Lit un CSV en chaînes brutes, None si le fichier est vide"""
    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        return None
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame.apply(lambda col: col.str.strip())


def parse_part_list(csv_path) -> List[ComponentRecord]:
    """
    Lit PartList.csv (colonnes component_name, kind)

    Args:
        csv_path: Chemin du CSV

    Returns:
        Composants dans l'ordre du fichier
    """
    frame = _read_csv(csv_path)
    if frame is None or frame.empty:
        raise AssemblySchemaError(f"{csv_path}: liste des pièces vide")
    if "component_name" not in frame.columns:
        raise AssemblySchemaError(f"{csv_path}: colonne 'component_name' absente")

    records = []
    seen: Dict[str, int] = {}
    for index, row in frame.iterrows():
        line = int(index) + 2  # en-tête = ligne 1
        name = row["component_name"]
        kind = row.get("kind", "part") or "part"
        if not name:
            raise AssemblySchemaError(f"{csv_path}: nom de composant vide (ligne {line})")
        if name in seen:
            raise AssemblySchemaError(
                f"{csv_path}: composant '{name}' en double (ligne {line}, déjà vu ligne {seen[name]})"
            )
        if kind not in COMPONENT_KINDS:
            raise AssemblySchemaError(f"{csv_path}: type '{kind}' inconnu (ligne {line})")
        seen[name] = line
        records.append(ComponentRecord(name, kind))
    return records


def parse_category_list(
    csv_path, part_list: Optional[List[ComponentRecord]] = None
) -> List[CategoryAssignment]:
    """
    Lit CategoryList.csv (component_name, category_name[, category_id])

    Sans colonne category_id, les ids suivent l'ordre de première apparition
    des noms de catégorie, à partir de 1

    Args:
        csv_path: Chemin du CSV
        part_list: Composants connus (contrôle de résolution)

    Returns:
        Affectations dans l'ordre du fichier (liste vide si fichier vide)
    """
    frame = _read_csv(csv_path)
    if frame is None or frame.empty:
        return []
    for column in ("component_name", "category_name"):
        if column not in frame.columns:
            raise AssemblySchemaError(f"{csv_path}: colonne '{column}' absente")

    known = {r.component_name for r in part_list} if part_list is not None else None
    explicit = "category_id" in frame.columns
    ids_by_name: Dict[str, int] = {}
    names_by_id: Dict[int, str] = {}
    assigned = set()
    result = []

    for index, row in frame.iterrows():
        line = int(index) + 2
        component, category = row["component_name"], row["category_name"]
        if not component or not category:
            raise AssemblySchemaError(f"{csv_path}: ligne {line} incomplète")
        if known is not None and component not in known:
            raise UnresolvedComponentError(
                f"{csv_path}: composant '{component}' absent de la liste des pièces (ligne {line})"
            )
        if component in assigned:
            raise AssemblySchemaError(f"{csv_path}: composant '{component}' catégorisé deux fois (ligne {line})")
        assigned.add(component)

        if explicit:
            try:
                category_id = int(row["category_id"])
            except ValueError:
                raise AssemblySchemaError(f"{csv_path}: category_id non entier (ligne {line})")
        else:
            category_id = ids_by_name.get(category, len(ids_by_name) + 1)
        if category_id < 1:
            raise AssemblySchemaError(f"{csv_path}: category_id doit être >= 1 (ligne {line})")
        if names_by_id.setdefault(category_id, category) != category or ids_by_name.setdefault(category, category_id) != category_id:
            raise AssemblySchemaError(
                f"{csv_path}: id {category_id} et catégorie '{category}' incohérents (ligne {line})"
            )
        result.append(CategoryAssignment(component, category, category_id))
    return result


# ========== JSON ==========


def _vector(value, json_path: str, source) -> tuple:
    if not isinstance(value, list) or len(value) != 3:
        raise AssemblySchemaError(f"{source}: {json_path} doit être une liste de 3 nombres")
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
            raise AssemblySchemaError(f"{source}: {json_path}[{i}] non numérique")
    return tuple(float(v) for v in value)


def parse_placements(json_path, role: str) -> List[AssemblyPlacement]:
    """
    Lit un transforms.json : {nom: {translation_mm: [x,y,z], rpy_deg: [r,p,y]}}

    Args:
        json_path: Chemin du JSON
        role: "class" ou "structure"

    Returns:
        Placements dans l'ordre du fichier
    """
    if role not in ROLES:
        raise ValueError(f"Rôle inconnu: {role}")
    try:
        with open(json_path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise AssemblySchemaError(f"{json_path}: JSON invalide ({e})")
    if not isinstance(payload, dict):
        raise AssemblySchemaError(f"{json_path}: $ doit être un objet")

    placements = []
    for name, entry in payload.items():
        path = f"$.{name}"
        if not isinstance(entry, dict):
            raise AssemblySchemaError(f"{json_path}: {path} doit être un objet")
        for key in ("translation_mm", "rpy_deg"):
            if key not in entry:
                raise AssemblySchemaError(f"{json_path}: clé manquante {path}.{key}")
        placements.append(
            AssemblyPlacement(
                component_name=name,
                translation_mm=_vector(entry["translation_mm"], f"{path}.translation_mm", json_path),
                rpy_deg=_vector(entry["rpy_deg"], f"{path}.rpy_deg", json_path),
                role=role,
            )
        )
    return placements


# ========== CATALOGUE ==========


def resolve_mesh_path(folder: Path, component_name: str) -> Optional[Path]:
    """Cherche <folder>/<nom>.ply, puis .stl, puis .obj"""
    for ext in MESH_EXTENSIONS:
        candidate = Path(folder) / f"{component_name}{ext}"
        if candidate.exists():
            return candidate
    return None


@dataclass(frozen=True, eq=False)
class ClassModel:
    """Maillage d'une catégorie active"""

    category_id: int
    category_name: str
    component_name: str
    mesh: Mesh


@dataclass(eq=False)
class AssetCatalog:
    """Maillages actifs et passifs, et placements d'assemblage"""

    classes: List[ClassModel]
    structure: Dict[str, Mesh] = field(default_factory=dict)
    placements: Dict[str, AssemblyPlacement] = field(default_factory=dict)

    @property
    def categories(self) -> List[dict]:
        return [{"id": c.category_id, "name": c.category_name} for c in self.classes]

    def class_by_component(self, component_name: str) -> ClassModel:
        for model in self.classes:
            if model.component_name == component_name:
                return model
        raise UnresolvedComponentError(f"Composant actif inconnu: {component_name}")

    def require_assembly(self):
        """Vérifie que chaque maillage actif et passif a son placement (P5)"""
        missing = [c.component_name for c in self.classes if c.component_name not in self.placements]
        missing += [name for name in self.structure if name not in self.placements]
        if missing:
            raise UnresolvedComponentError(f"Placements d'assemblage manquants: {', '.join(missing)}")


def load_catalog(assets_root, unit_scale: float = DEFAULT_UNIT_SCALE) -> AssetCatalog:
    """
    Charge le catalogue complet depuis un dossier d'export

    Les composants de PartList.csv absents de CategoryList.csv forment la
    structure passive ; les sous-assemblages sans maillage sont ignorés

    Args:
        assets_root: Dossier contenant PartList.csv, CategoryList.csv, Classes/, Structure/
        unit_scale: Facteur fichier -> mètres

    Returns:
        AssetCatalog
    """
    root = Path(assets_root)
    parts = parse_part_list(root / PART_LIST_FILE)
    categories = parse_category_list(root / CATEGORY_LIST_FILE, parts)

    by_category: Dict[int, CategoryAssignment] = {}
    for assignment in categories:
        if assignment.category_id in by_category:
            raise AssemblySchemaError(
                f"Catégorie {assignment.category_id} portée par plusieurs composants "
                f"({by_category[assignment.category_id].component_name}, {assignment.component_name})"
            )
        by_category[assignment.category_id] = assignment

    classes = []
    for assignment in categories:
        mesh_path = resolve_mesh_path(root / CLASSES_DIR, assignment.component_name)
        if mesh_path is None:
            raise UnresolvedComponentError(
                f"Maillage introuvable pour '{assignment.component_name}' dans {root / CLASSES_DIR}"
            )
        mesh = load_mesh(mesh_path, unit_scale=unit_scale).require_triangles()
        classes.append(ClassModel(assignment.category_id, assignment.category_name, assignment.component_name, mesh))

    categorized = {a.component_name for a in categories}
    structure: Dict[str, Mesh] = {}
    for record in parts:
        if record.component_name in categorized:
            continue
        mesh_path = resolve_mesh_path(root / STRUCTURE_DIR, record.component_name)
        if mesh_path is None:
            if record.kind == "part":
                logger.warning(f"⚠ Pièce passive sans maillage ignorée: {record.component_name}")
            continue
        structure[record.component_name] = load_mesh(mesh_path, unit_scale=unit_scale).require_triangles()

    placements: Dict[str, AssemblyPlacement] = {}
    for folder, role, known in ((CLASSES_DIR, "class", categorized), (STRUCTURE_DIR, "structure", set(structure))):
        transforms = root / folder / TRANSFORMS_FILE
        if not transforms.exists():
            continue
        for placement in parse_placements(transforms, role):
            if placement.component_name not in known:
                raise UnresolvedComponentError(
                    f"{transforms}: '{placement.component_name}' sans maillage dans {folder}/"
                )
            placements[placement.component_name] = placement

    logger.info(
        f"Catalogue: {len(classes)} classe(s), {len(structure)} pièce(s) de structure, "
        f"{len(placements)} placement(s) ({len(parts)} composants)"
    )
    return AssetCatalog(classes=classes, structure=structure, placements=placements)
