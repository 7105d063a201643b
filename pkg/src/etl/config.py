"""
Configuration du pipeline : valeurs par défaut, table des combinaisons et
lecture du fichier YAML
"""

import dataclasses
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional

import yaml

from src.exceptions import ConfigError
from src.geometry.camera import CameraIntrinsics
from src.geometry.mesh_io import DEFAULT_UNIT_SCALE
from src.render.frame import RenderOptions
from src.render.textures import AppearanceBank
from src.scene.rng import stable_hash
from src.scene.types import ALL_PROCEDURES, LightRanges, MaterialRanges, ProcedureConfig, ProcedureId

logger = logging.getLogger(__name__)

SEED_ENV = "SYNTHFORGE_SEED"

DEFAULT_SEED = 0
DEFAULT_OUTPUT_ROOT = "data/synth"
DEFAULT_SPLIT_RATIO = 0.7
DEFAULT_JOBS = 1
DEFAULT_MIX_TOTAL_IMAGES = 50

DEFAULT_CAMERA = {"width": 640, "height": 480, "fx": 572.4, "fy": 572.4, "cx": 320.0, "cy": 240.0}

# Composition des jeux de combinaison, en pourcents
COMBINATIONS = {
    "C1": {"P1": 20, "P2": 20, "P3": 10, "P4": 30, "P5": 20},
    "C2": {"P1": 40, "P2": 0, "P3": 0, "P4": 40, "P5": 20},
    "C3": {"P1": 0, "P2": 40, "P3": 0, "P4": 40, "P5": 20},
    "C4": {"P1": 0, "P2": 0, "P3": 0, "P4": 80, "P5": 20},
    "C5": {"P1": 50, "P2": 0, "P3": 0, "P4": 50, "P5": 0},
}

TOP_LEVEL_KEYS = {
    "seed",
    "output_root",
    "assets_root",
    "texture_dir",
    "backdrop_dir",
    "unit_scale",
    "jobs",
    "split_ratio",
    "camera",
    "appearance",
    "procedure_defaults",
    "procedures",
    "combinations",
    "mix_total_images",
}
APPEARANCE_KEYS = {"material", "light", "ambient", "clear_color"}


@dataclass
class PipelineConfig:
    """Configuration complète d'une exécution"""

    seed: int = DEFAULT_SEED
    output_root: Path = Path(DEFAULT_OUTPUT_ROOT)
    assets_root: Optional[Path] = None
    texture_dir: Optional[Path] = None
    backdrop_dir: Optional[Path] = None
    unit_scale: float = DEFAULT_UNIT_SCALE
    jobs: int = DEFAULT_JOBS
    split_ratio: float = DEFAULT_SPLIT_RATIO
    camera: CameraIntrinsics = field(default_factory=lambda: CameraIntrinsics(**DEFAULT_CAMERA))
    materials: MaterialRanges = field(default_factory=MaterialRanges)
    lights: LightRanges = field(default_factory=LightRanges)
    render: RenderOptions = field(default_factory=RenderOptions)
    procedures: Dict[ProcedureId, ProcedureConfig] = field(default_factory=dict)
    combinations: Dict[str, Dict[str, float]] = field(default_factory=lambda: dict(COMBINATIONS))
    mix_total_images: int = DEFAULT_MIX_TOTAL_IMAGES

    def validate(self) -> "PipelineConfig":
        for name in ("assets_root", "texture_dir", "backdrop_dir"):
            folder = getattr(self, name)
            if folder is not None and not Path(folder).is_dir():
                raise ConfigError(f"{name}: dossier introuvable {folder}")
        if not self.procedures and not self.combinations:
            raise ConfigError("Aucune procédure ni combinaison activée")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio doit être dans ]0, 1[ (reçu {self.split_ratio})")
        if self.jobs < 1:
            raise ConfigError("jobs doit être >= 1")
        if not self.unit_scale > 0:
            raise ConfigError("unit_scale doit être > 0")
        if self.mix_total_images < 1:
            raise ConfigError("mix_total_images doit être >= 1")
        for name, row in self.combinations.items():
            unknown = set(row) - {p.value for p in ALL_PROCEDURES}
            if unknown:
                raise ConfigError(f"combinations.{name}: procédures inconnues {sorted(unknown)}")
        return self

    def procedure(self, procedure) -> ProcedureConfig:
        procedure = ProcedureId.parse(procedure)
        if procedure not in self.procedures:
            raise ConfigError(f"Procédure {procedure.value} non activée dans la configuration")
        return self.procedures[procedure]

    def appearance(self) -> AppearanceBank:
        return AppearanceBank.from_folders(self.texture_dir, self.backdrop_dir)

    def dataset_root(self, name: str) -> Path:
        return Path(self.output_root) / name


def procedure_seed(master_seed: int, procedure: ProcedureId) -> int:
    """Graine propre à une procédure, dérivée de la graine maîtresse"""
    return stable_hash(master_seed, ALL_PROCEDURES.index(procedure) + 1)


def _tuples(value):
    if isinstance(value, list):
        return tuple(_tuples(v) for v in value)
    return value


def _section(data: Mapping, key: str) -> dict:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: une section clé/valeur est attendue")
    return value


def _build(cls, values: Mapping, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{where}: clé(s) inconnue(s) {unknown}")
    try:
        return cls(**{k: _tuples(v) for k, v in values.items()})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}")


def _path(base: Path, value) -> Optional[Path]:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def _seed(data: Mapping, env: Mapping[str, str]) -> int:
    raw = env.get(SEED_ENV, data.get("seed", DEFAULT_SEED))
    try:
        seed = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"seed: entier attendu (reçu {raw!r})")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed doit être un entier non signé 64 bits")
    return seed


def config_from_dict(data: Mapping, base_dir=".", env: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """
    Construit et valide la configuration à partir du contenu YAML

    Args:
        data: Contenu du fichier
        base_dir: Dossier de résolution des chemins relatifs
        env: Environnement (os.environ par défaut) pour SYNTHFORGE_SEED

    Returns:
        PipelineConfig validée
    """
    env = os.environ if env is None else env
    unknown = sorted(set(data) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"Clé(s) inconnue(s) dans la configuration: {unknown}")
    base = Path(base_dir)
    seed = _seed(data, env)

    camera = {**DEFAULT_CAMERA, **_section(data, "camera")}
    appearance = _section(data, "appearance")
    if set(appearance) - APPEARANCE_KEYS:
        raise ConfigError(f"appearance: clé(s) inconnue(s) {sorted(set(appearance) - APPEARANCE_KEYS)}")
    render = {k: appearance[k] for k in ("ambient", "clear_color") if k in appearance}

    defaults = _section(data, "procedure_defaults")
    blocks = data.get("procedures")
    if blocks is None:
        blocks = {p.value: {} for p in ALL_PROCEDURES}
    if not isinstance(blocks, dict):
        raise ConfigError("procedures: une section P1..P5 est attendue")
    procedures = {}
    for name, block in blocks.items():
        procedure = ProcedureId.parse(name)
        values = {**defaults, **(block or {})}
        if values.pop("enabled", True) is False:
            continue
        values.setdefault("seed", procedure_seed(seed, procedure))
        procedures[procedure] = _build(ProcedureConfig, {"procedure": procedure, **values}, f"procedures.{name}")

    combinations = dict(COMBINATIONS)
    combinations.update({str(k): dict(v) for k, v in _section(data, "combinations").items()})

    try:
        config = PipelineConfig(
            seed=seed,
            output_root=_path(base, data.get("output_root", DEFAULT_OUTPUT_ROOT)),
            assets_root=_path(base, data.get("assets_root")),
            texture_dir=_path(base, data.get("texture_dir")),
            backdrop_dir=_path(base, data.get("backdrop_dir")),
            unit_scale=float(data.get("unit_scale", DEFAULT_UNIT_SCALE)),
            jobs=int(data.get("jobs", DEFAULT_JOBS)),
            split_ratio=float(data.get("split_ratio", DEFAULT_SPLIT_RATIO)),
            camera=_build(CameraIntrinsics, camera, "camera"),
            materials=_build(MaterialRanges, _section(appearance, "material"), "appearance.material"),
            lights=_build(LightRanges, _section(appearance, "light"), "appearance.light"),
            render=_build(RenderOptions, render, "appearance"),
            procedures=procedures,
            combinations=combinations,
            mix_total_images=int(data.get("mix_total_images", DEFAULT_MIX_TOTAL_IMAGES)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Valeur invalide dans la configuration: {e}")
    return config.validate()


def load_config(path, env: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """Lit un fichier YAML de configuration (yaml.safe_load)"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Fichier de configuration introuvable: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: YAML invalide ({e})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: la racine doit être une section clé/valeur")
    config = config_from_dict(data, base_dir=path.parent, env=env)
    logger.info(f"Configuration {path}: graine {config.seed}, {len(config.procedures)} procédure(s)")
    return config
