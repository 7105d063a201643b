"""
Module de monitoring de la génération : statistiques par scène et rapport
d'exécution (horodatages, durées, échecs)
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional


@dataclass
class SceneStats:
    """Statistiques pour une scène traitée"""

    procedure: str
    scene_index: int
    status: str  # "success", "failed"
    images: int = 0
    annotations: int = 0
    distractors: int = 0
    duration_seconds: float = 0.0
    error_message: Optional[str] = None


@dataclass
class GenerationReport:
    """Rapport d'exécution d'une commande generate"""

    start_time: str = ""
    end_time: str = ""
    duration_seconds: float = 0.0
    jobs: int = 1
    seed: int = 0

    # Statistiques globales
    total_scenes: int = 0
    success_scenes: int = 0
    failed_scenes: int = 0
    total_images: int = 0
    total_annotations: int = 0

    # Détails par scène
    scenes_details: List[Dict] = field(default_factory=list)

    # Images par procédure
    images_by_procedure: Dict[str, int] = field(default_factory=dict)

    # Dossiers publiés ou en quarantaine
    datasets: Dict[str, str] = field(default_factory=dict)

    def add_scene_stats(self, stats: SceneStats):
        """Ajoute les stats d'une scène"""
        self.scenes_details.append(asdict(stats))

        if stats.status == "success":
            self.success_scenes += 1
            self.total_images += stats.images
            self.total_annotations += stats.annotations
            self.images_by_procedure[stats.procedure] = (
                self.images_by_procedure.get(stats.procedure, 0) + stats.images
            )
        else:
            self.failed_scenes += 1

        self.total_scenes += 1

    @property
    def errors(self) -> List[Dict]:
        return [s for s in self.scenes_details if s["status"] == "failed"]

    def save(self, filepath) -> Path:
        """Sauvegarde le rapport en JSON"""
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        self.scenes_details.sort(key=lambda s: (s["procedure"], s["scene_index"]))
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, ensure_ascii=False)
        print(f"📊 Rapport sauvegardé: {filepath}")
        return filepath
