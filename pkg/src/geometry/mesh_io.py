"""
Lecture des maillages STL (ASCII et binaire), PLY (ASCII et binaire) et OBJ
Les fichiers CAO sont en millimètres : conversion en mètres au chargement
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from src.exceptions import EmptyMeshError, MeshFormatError
from src.geometry.mesh import Mesh

logger = logging.getLogger(__name__)

DEFAULT_UNIT_SCALE = 0.001
SUPPORTED_FORMATS = ("stl-ascii", "stl-binary", "ply", "obj")

_STL_RECORD = np.dtype(
    [("normal", "<f4", (3,)), ("corners", "<f4", (3, 3)), ("attr", "<u2")]
)
_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


# ========== DETECTION ==========


def detect_format(path: Path, data: bytes) -> str:
    """
    Déduit le format depuis l'extension et les octets magiques

    Args:
        path: Chemin du fichier
        data: Contenu brut

    Returns:
        Un des SUPPORTED_FORMATS
    """
    suffix = path.suffix.lower()
    if suffix == ".stl":
        if len(data) >= 84:
            count = int(np.frombuffer(data, "<u4", count=1, offset=80)[0])
            if 84 + 50 * count == len(data):
                return "stl-binary"
        if data.lstrip()[:5].lower() == b"solid":
            return "stl-ascii"
        return "stl-binary"
    if suffix == ".ply" or data[:3] == b"ply":
        return "ply"
    if suffix == ".obj":
        return "obj"
    raise MeshFormatError(str(path), 0, f"Extension '{suffix}' non reconnue")


def load_mesh(
    path,
    fmt: Optional[str] = None,
    unit_scale: float = DEFAULT_UNIT_SCALE,
    name: Optional[str] = None,
) -> Mesh:
    """
    Charge un maillage depuis le disque

    Args:
        path: Chemin du fichier
        fmt: Format imposé (sinon détecté)
        unit_scale: Facteur unité fichier -> mètres (0.001 pour des mm)
        name: Nom du maillage (défaut: nom du fichier sans extension)

    Returns:
        Mesh en mètres
    """
    path = Path(path)
    data = path.read_bytes()
    fmt = fmt or detect_format(path, data)
    if fmt not in SUPPORTED_FORMATS:
        raise MeshFormatError(str(path), 0, f"Format '{fmt}' non supporté")

    if fmt == "stl-binary":
        vertices, triangles, colors = _parse_stl_binary(path, data)
    elif fmt == "stl-ascii":
        vertices, triangles, colors = _parse_stl_ascii(path, data)
    elif fmt == "ply":
        vertices, triangles, colors = _parse_ply(path, data)
    else:
        vertices, triangles, colors = _parse_obj(path, data)

    if len(triangles) == 0:
        raise EmptyMeshError(f"{path}: aucun triangle")
    if not np.all(np.isfinite(vertices)):
        raise MeshFormatError(str(path), 0, "Coordonnées NaN/Inf")

    mesh = Mesh(
        vertices=vertices * unit_scale,
        triangles=triangles,
        vertex_colors=colors,
        name=name or path.stem,
    )
    logger.debug(f"{path.name}: {len(mesh.vertices)} sommets, {mesh.num_triangles} triangles ({fmt})")
    return mesh


def _dedup_corners(corners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fusionne les sommets STL rigoureusement identiques

    L'ordre des sommets suit leur première apparition dans le fichier
    """
    unique, first, inverse = np.unique(
        corners, axis=0, return_index=True, return_inverse=True
    )
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    triangles = rank[inverse.reshape(-1)].reshape(-1, 3)
    return unique[order], triangles


# ========== STL ==========


def _parse_stl_binary(path: Path, data: bytes):
    if len(data) < 84:
        raise MeshFormatError(str(path), len(data), "En-tête STL binaire tronqué (84 octets attendus)")
    count = int(np.frombuffer(data, "<u4", count=1, offset=80)[0])
    expected = 84 + 50 * count
    if len(data) < expected:
        raise MeshFormatError(
            str(path), len(data), f"{count} triangles annoncés, fichier tronqué ({expected} octets attendus)"
        )
    if count == 0:
        raise EmptyMeshError(f"{path}: aucun triangle")
    records = np.frombuffer(data, _STL_RECORD, count=count, offset=84)
    corners = records["corners"].reshape(-1, 3).astype(np.float64)
    if not np.all(np.isfinite(corners)):
        raise MeshFormatError(str(path), 84, "Coordonnées NaN/Inf")
    vertices, triangles = _dedup_corners(corners)
    return vertices, triangles, None


def _parse_stl_ascii(path: Path, data: bytes):
    corners: List[Tuple[float, float, float]] = []
    state = "solid"
    pending = 0
    offset = 0
    for raw in data.splitlines(keepends=True):
        line_offset = offset
        offset += len(raw)
        tokens = raw.split()
        if not tokens:
            continue
        keyword = tokens[0].lower()

        if state == "solid":
            if keyword != b"solid":
                raise MeshFormatError(str(path), line_offset, "Mot-clé 'solid' attendu")
            state = "facet"
        elif state == "facet":
            if keyword == b"endsolid":
                state = "end"
            elif keyword == b"facet":
                state = "outer"
            else:
                raise MeshFormatError(str(path), line_offset, f"'facet' attendu, lu '{tokens[0].decode(errors='replace')}'")
        elif state == "outer":
            if keyword != b"outer":
                raise MeshFormatError(str(path), line_offset, "'outer loop' attendu")
            state, pending = "vertex", 3
        elif state == "vertex":
            if keyword != b"vertex" or len(tokens) != 4:
                raise MeshFormatError(str(path), line_offset, "'vertex x y z' attendu")
            try:
                corners.append(tuple(float(t) for t in tokens[1:]))
            except ValueError:
                raise MeshFormatError(str(path), line_offset, "Coordonnée non numérique")
            pending -= 1
            if pending == 0:
                state = "endloop"
        elif state == "endloop":
            if keyword != b"endloop":
                raise MeshFormatError(str(path), line_offset, "'endloop' attendu (facette à 3 sommets)")
            state = "endfacet"
        elif state == "endfacet":
            if keyword != b"endfacet":
                raise MeshFormatError(str(path), line_offset, "'endfacet' attendu")
            state = "facet"
        else:
            break

    if state not in ("facet", "end"):
        raise MeshFormatError(str(path), offset, "Fin de fichier inattendue")
    if not corners:
        raise EmptyMeshError(f"{path}: aucune facette")
    vertices, triangles = _dedup_corners(np.array(corners, dtype=np.float64))
    return vertices, triangles, None


# ========== PLY ==========


def _parse_ply_header(path: Path, data: bytes):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise MeshFormatError(str(path), 0, "En-tête PLY invalide ('ply' ... 'end_header')")
    body_start = data.index(b"\n", end) + 1 if b"\n" in data[end:] else len(data)

    fmt = None
    elements = []
    offset = 0
    for raw in data[:end].splitlines(keepends=True):
        line_offset = offset
        offset += len(raw)
        tokens = raw.decode("ascii", errors="replace").split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info"):
            continue
        if tokens[0] == "format":
            fmt = tokens[1] if len(tokens) > 1 else None
        elif tokens[0] == "element":
            if len(tokens) != 3 or not tokens[2].isdigit():
                raise MeshFormatError(str(path), line_offset, "Ligne 'element' invalide")
            elements.append({"name": tokens[1], "count": int(tokens[2]), "props": []})
        elif tokens[0] == "property":
            if not elements:
                raise MeshFormatError(str(path), line_offset, "'property' avant tout 'element'")
            if tokens[1] == "list":
                if len(tokens) != 5 or tokens[2] not in _PLY_TYPES or tokens[3] not in _PLY_TYPES:
                    raise MeshFormatError(str(path), line_offset, "Propriété liste invalide")
                elements[-1]["props"].append(("list", tokens[2], tokens[3], tokens[4]))
            else:
                if len(tokens) != 3 or tokens[1] not in _PLY_TYPES:
                    raise MeshFormatError(str(path), line_offset, f"Type PLY inconnu: {' '.join(tokens[1:])}")
                elements[-1]["props"].append(("scalar", tokens[1], None, tokens[2]))
        else:
            raise MeshFormatError(str(path), line_offset, f"Ligne d'en-tête inconnue: {tokens[0]}")

    if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
        raise MeshFormatError(str(path), 0, f"Format PLY '{fmt}' non supporté")
    return fmt, elements, body_start


def _parse_ply(path: Path, data: bytes):
    fmt, elements, body_start = _parse_ply_header(path, data)
    if fmt == "ascii":
        tables = _read_ply_ascii(path, data, elements, body_start)
    else:
        endian = "<" if fmt == "binary_little_endian" else ">"
        tables = _read_ply_binary(path, data, elements, body_start, endian)

    vertex = tables.get("vertex")
    if vertex is None or not all(k in vertex for k in ("x", "y", "z")):
        raise MeshFormatError(str(path), 0, "Élément 'vertex' avec x, y, z requis")
    vertices = np.stack([vertex["x"], vertex["y"], vertex["z"]], axis=1).astype(np.float64)

    colors = None
    if all(k in vertex for k in ("red", "green", "blue")):
        colors = np.stack([vertex["red"], vertex["green"], vertex["blue"]], axis=1).astype(np.float64)
        color_type = next(p[1] for e in elements if e["name"] == "vertex" for p in e["props"] if p[3] == "red")
        if not _PLY_TYPES[color_type].startswith("f"):
            colors /= 255.0

    faces = tables.get("face", {})
    polygons = faces.get("vertex_indices", faces.get("vertex_index", []))
    triangles = _fan_triangulate(polygons)
    if len(triangles) and triangles.max() >= len(vertices):
        raise MeshFormatError(str(path), body_start, "Indice de face hors bornes")
    return vertices, triangles, colors


def _read_ply_ascii(path: Path, data: bytes, elements, body_start: int):
    lines = data[body_start:].splitlines(keepends=True)
    tables = {}
    cursor = 0
    offset = body_start
    for element in elements:
        columns = {p[3]: [] for p in element["props"]}
        for _ in range(element["count"]):
            while cursor < len(lines) and not lines[cursor].strip():
                offset += len(lines[cursor])
                cursor += 1
            if cursor >= len(lines):
                raise MeshFormatError(str(path), offset, f"Élément '{element['name']}' tronqué")
            tokens = lines[cursor].split()
            line_offset = offset
            offset += len(lines[cursor])
            cursor += 1
            pos = 0
            try:
                for kind, type_a, _, pname in element["props"]:
                    if kind == "list":
                        n = int(tokens[pos])
                        columns[pname].append([int(t) for t in tokens[pos + 1 : pos + 1 + n]])
                        if len(columns[pname][-1]) != n:
                            raise IndexError
                        pos += 1 + n
                    else:
                        columns[pname].append(float(tokens[pos]))
                        pos += 1
            except (ValueError, IndexError):
                raise MeshFormatError(str(path), line_offset, f"Ligne '{element['name']}' invalide")
        tables[element["name"]] = {
            k: (v if any(p[0] == "list" and p[3] == k for p in element["props"]) else np.array(v))
            for k, v in columns.items()
        }
    return tables


def _read_ply_binary(path: Path, data: bytes, elements, body_start: int, endian: str):
    tables = {}
    offset = body_start
    for element in elements:
        props = element["props"]
        count = element["count"]
        if all(p[0] == "scalar" for p in props):
            dtype = np.dtype([(p[3], endian + _PLY_TYPES[p[1]]) for p in props])
            if offset + dtype.itemsize * count > len(data):
                raise MeshFormatError(str(path), offset, f"Élément '{element['name']}' tronqué")
            records = np.frombuffer(data, dtype, count=count, offset=offset)
            tables[element["name"]] = {p[3]: records[p[3]].astype(np.float64) for p in props}
            offset += dtype.itemsize * count
            continue

        columns = {p[3]: [] for p in props}
        for _ in range(count):
            for kind, type_a, type_b, pname in props:
                size_a = np.dtype(_PLY_TYPES[type_a]).itemsize
                if offset + size_a > len(data):
                    raise MeshFormatError(str(path), offset, f"Élément '{element['name']}' tronqué")
                value = np.frombuffer(data, endian + _PLY_TYPES[type_a], count=1, offset=offset)[0]
                offset += size_a
                if kind == "scalar":
                    columns[pname].append(float(value))
                    continue
                size_b = np.dtype(_PLY_TYPES[type_b]).itemsize
                n = int(value)
                if offset + size_b * n > len(data):
                    raise MeshFormatError(str(path), offset, f"Liste '{pname}' tronquée")
                items = np.frombuffer(data, endian + _PLY_TYPES[type_b], count=n, offset=offset)
                columns[pname].append([int(i) for i in items])
                offset += size_b * n
        tables[element["name"]] = columns
    return tables


# ========== OBJ ==========


def _parse_obj(path: Path, data: bytes):
    vertices, colors, polygons = [], [], []
    offset = 0
    for raw in data.splitlines(keepends=True):
        line_offset = offset
        offset += len(raw)
        tokens = raw.split(b"#", 1)[0].split()
        if not tokens:
            continue
        try:
            if tokens[0] == b"v":
                values = [float(t) for t in tokens[1:]]
                if len(values) < 3:
                    raise ValueError
                vertices.append(values[:3])
                colors.append(values[3:6] if len(values) >= 6 else None)
            elif tokens[0] == b"f":
                face = []
                for t in tokens[1:]:
                    index = int(t.split(b"/")[0])
                    face.append(index - 1 if index > 0 else len(vertices) + index)
                if len(face) < 3 or min(face) < 0 or max(face) >= len(vertices):
                    raise ValueError
                polygons.append(face)
        except ValueError:
            raise MeshFormatError(str(path), line_offset, f"Ligne '{tokens[0].decode(errors='replace')}' invalide")

    vertex_colors = None
    if vertices and all(c is not None for c in colors):
        vertex_colors = np.array(colors, dtype=np.float64)
    return np.array(vertices, dtype=np.float64).reshape(-1, 3), _fan_triangulate(polygons), vertex_colors


def _fan_triangulate(polygons) -> np.ndarray:
    """Polygones (listes d'indices) vers triangles en éventail"""
    triangles = []
    for poly in polygons:
        poly = [int(i) for i in poly]
        for k in range(1, len(poly) - 1):
            triangles.append((poly[0], poly[k], poly[k + 1]))
    return np.array(triangles, dtype=np.int64).reshape(-1, 3)
