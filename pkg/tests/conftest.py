"""
Fixtures partagées : maillages de boîtes écrits dans les quatre formats,
dossier d'export CAO minimal et configuration de pipeline réduite
"""

import itertools
import json

import numpy as np
import pytest

from src.db.bop import PoseRecord, write_models_info
from src.db.dataset_store import ImageSample, write_dataset
from src.etl.config import config_from_dict
from src.geometry.camera import CameraIntrinsics
from src.geometry.mesh import Mesh
from src.geometry.transforms import RigidTransform, rot_z
from src.render.frame import FrameSet

# Sommet k = bits (x, y, z) de k, comme CORNER_BITS
BOX_CORNERS = np.array(list(itertools.product((0, 1), repeat=3)), dtype=np.float64)
# Normales sortantes
BOX_TRIANGLES = np.array(
    [
        [0, 1, 3], [0, 3, 2],  # x = 0
        [4, 6, 7], [4, 7, 5],  # x = 1
        [0, 4, 5], [0, 5, 1],  # y = 0
        [2, 3, 7], [2, 7, 6],  # y = 1
        [0, 2, 6], [0, 6, 4],  # z = 0
        [1, 5, 7], [1, 7, 3],  # z = 1
    ],
    dtype=np.int64,
)

SMALL_CAMERA = {"width": 64, "height": 48, "fx": 60.0, "fy": 60.0, "cx": 32.0, "cy": 24.0}


def box_vertices(size) -> np.ndarray:
    return BOX_CORNERS * np.asarray(size, dtype=np.float64)


def box_mesh(size, name: str = "box", offset=(0.0, 0.0, 0.0)) -> Mesh:
    """Pavé [offset, offset + size] en mètres"""
    return Mesh(box_vertices(size) + np.asarray(offset, dtype=np.float64), BOX_TRIANGLES, name=name)


# ============================================================================
# ECRITURE DES FORMATS
# ============================================================================


def write_stl_ascii(path, vertices, triangles, name="box"):
    lines = [f"solid {name}"]
    for tri in triangles:
        lines += ["  facet normal 0 0 0", "    outer loop"]
        lines += [f"      vertex {x:.6f} {y:.6f} {z:.6f}" for x, y, z in vertices[tri]]
        lines += ["    endloop", "  endfacet"]
    lines.append(f"endsolid {name}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def write_stl_binary(path, vertices, triangles):
    record = np.dtype([("normal", "<f4", (3,)), ("corners", "<f4", (3, 3)), ("attr", "<u2")])
    records = np.zeros(len(triangles), dtype=record)
    records["corners"] = vertices[triangles]
    header = b"binary stl".ljust(80, b" ")
    path.write_bytes(header + np.uint32(len(triangles)).tobytes() + records.tobytes())
    return path


def write_ply_ascii(path, vertices, triangles):
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines += [f"{x} {y} {z}" for x, y, z in vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in triangles]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def write_obj(path, vertices, triangles):
    lines = [f"v {x} {y} {z}" for x, y, z in vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in triangles]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


WRITERS = {
    ".stl": write_stl_binary,
    ".ply": write_ply_ascii,
    ".obj": write_obj,
}


@pytest.fixture
def write_box():
    """Écrit un pavé (dimensions en mm) au format déduit de l'extension"""

    def _write(path, size_mm, fmt=None):
        vertices = box_vertices(size_mm)
        if fmt == "stl-ascii":
            return write_stl_ascii(path, vertices, BOX_TRIANGLES, path.stem)
        return WRITERS[path.suffix](path, vertices, BOX_TRIANGLES)

    return _write


# ============================================================================
# DOSSIER D'EXPORT CAO
# ============================================================================

PART_LIST = """component_name,kind
Station,main-assembly
Bracket,part
Cover,part
Frame,part
"""

CATEGORY_LIST = """component_name,category_name
Bracket,bracket
Cover,cover
"""


@pytest.fixture
def assets_root(tmp_path, write_box):
    """
    Assemblage minimal : deux pièces catégorisées posées sur un châssis passif

    Bracket 40 mm cube (STL binaire), Cover plaque 60x40x10 mm (PLY),
    Frame plaque 200x200x20 mm (OBJ)
    """
    root = tmp_path / "assets"
    classes = root / "Classes"
    structure = root / "Structure"
    classes.mkdir(parents=True)
    structure.mkdir()
    (root / "PartList.csv").write_text(PART_LIST, encoding="utf-8")
    (root / "CategoryList.csv").write_text(CATEGORY_LIST, encoding="utf-8")

    write_box(classes / "Bracket.stl", (40, 40, 40))
    write_box(classes / "Cover.ply", (60, 40, 10))
    write_box(structure / "Frame.obj", (200, 200, 20))

    (classes / "transforms.json").write_text(
        json.dumps(
            {
                "Bracket": {"translation_mm": [0, 0, 20], "rpy_deg": [0, 0, 0]},
                "Cover": {"translation_mm": [80, 0, 20], "rpy_deg": [0, 0, 90]},
            }
        ),
        encoding="utf-8",
    )
    (structure / "transforms.json").write_text(
        json.dumps({"Frame": {"translation_mm": [-100, -100, 0], "rpy_deg": [0, 0, 0]}}),
        encoding="utf-8",
    )
    return root


@pytest.fixture
def small_camera():
    return CameraIntrinsics(**SMALL_CAMERA)


@pytest.fixture
def pipeline_data(tmp_path, assets_root):
    """Contenu YAML d'une configuration réduite (images 64x48, 2 scènes x 2 vues)"""
    return {
        "seed": 7,
        "output_root": str(tmp_path / "out"),
        "assets_root": str(assets_root),
        "camera": dict(SMALL_CAMERA),
        "procedure_defaults": {
            "num_scenes": 2,
            "views_per_scene": 2,
            "objects_per_scene": [1, 2],
            "distractors_per_scene": [0, 1],
            "camera_radius": [0.5, 0.8],
        },
        "mix_total_images": 4,
    }


@pytest.fixture
def pipeline_config(pipeline_data, tmp_path):
    return config_from_dict(pipeline_data, base_dir=tmp_path, env={})


# ============================================================================
# VUES SYNTHETIQUES
# ============================================================================

CATEGORIES = [{"id": 1, "name": "bracket"}, {"id": 2, "name": "cover"}]


def synthetic_sample(K, image_id, boxes, procedure="P1", depth_value=1.2345, rotation=None):
    """Vue sans rendu : chaque boîte (instance, catégorie, x, y, w, h) est peinte dans les cartes"""
    class_map = np.zeros((K.height, K.width), dtype=np.uint16)
    instance_map = np.zeros_like(class_map)
    depth = np.zeros((K.height, K.width))
    poses = []
    for instance_id, category_id, x, y, w, h in boxes:
        class_map[y : y + h, x : x + w] = category_id
        instance_map[y : y + h, x : x + w] = instance_id
        depth[y : y + h, x : x + w] = depth_value
        pose = RigidTransform(rot_z(15.0 * instance_id) if rotation is None else rotation, (0.01, -0.02, depth_value))
        poses.append(PoseRecord.from_transform(image_id, category_id, instance_id, pose))
    rgb = np.full((K.height, K.width, 3), 40 + image_id % 200, dtype=np.uint8)
    frame = FrameSet(rgb, depth, class_map, instance_map, K, RigidTransform.identity())
    provenance = {"procedure": procedure, "seed": 3, "scene_index": image_id, "view_index": 0}
    return ImageSample(image_id, frame, poses, provenance)


def synthetic_models_info():
    return write_models_info({1: box_mesh((0.04, 0.04, 0.04)), 2: box_mesh((0.06, 0.04, 0.01))})


def write_synthetic_dataset(root, procedure, count, K, seed=0, categories=CATEGORIES):
    """Jeu de `count` images à deux boîtes, marqué comme produit par `procedure`"""
    samples = [
        synthetic_sample(K, i, [(1, 1, i % 5, 1, 4, 4), (2, 2, 8, i % 4, 5, 3)], procedure=procedure)
        for i in range(count)
    ]
    write_dataset(samples, root, procedure, categories, synthetic_models_info(), seed=seed, split_ratio=0.7)
    return root
