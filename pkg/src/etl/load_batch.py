"""
Générateur par lot : compose et rend les scènes d'une procédure, écrit les
images au fil de l'eau puis les index du jeu

Boucle externe = scènes (réparties sur les workers), boucle interne = vues
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Dict, List, Optional

from tqdm import tqdm

from src.db.bop import PoseRecord, write_models_info
from src.db.dataset_store import DatasetManifest, DatasetStore, ImageSample
from src.etl.config import PipelineConfig
from src.etl.extract import AssetCatalog
from src.geometry.transforms import compose
from src.render.frame import render
from src.render.textures import AppearanceBank
from src.scene.procedures import compose_scene
from src.scene.rng import stream
from src.scene.sampling import sample_camera, uniform_in
from src.scene.types import ProcedureConfig, ProcedureId

logger = logging.getLogger(__name__)


class BatchGenerator:
    """Générateur de masse pour une procédure"""

    def __init__(
        self,
        config: PipelineConfig,
        catalog: AssetCatalog,
        appearance: Optional[AppearanceBank] = None,
        max_workers: Optional[int] = None,
        show_progress: bool = True,
    ):
        """
        Args:
            config: Configuration validée
            catalog: Maillages et placements
            appearance: Textures et arrière-plans (procéduraux si None)
            max_workers: Nombre de workers (défaut: config.jobs)
            show_progress: Afficher la barre tqdm
        """
        self.config = config
        self.catalog = catalog
        self.appearance = appearance or AppearanceBank()
        self.max_workers = max_workers or config.jobs
        self.show_progress = show_progress
        self.stats = self._init_stats()

    def _init_stats(self) -> Dict:
        """Initialise les statistiques"""
        return {"total": 0, "success": 0, "failed": 0, "images": 0, "annotations": 0, "results": []}

    def process_single_scene(self, cfg: ProcedureConfig, scene_index: int, store: DatasetStore) -> Dict:
        """
        Compose une scène, rend toutes ses vues et les écrit

        Args:
            cfg: Configuration de la procédure
            scene_index: Indice de la scène (flux aléatoire dédié)
            store: Jeu en cours d'écriture

        Returns:
            Dictionnaire avec le résultat du traitement
        """
        result = {
            "procedure": cfg.procedure.value,
            "scene_index": scene_index,
            "status": "pending",
            "images": 0,
            "annotations": 0,
            "distractors": 0,
            "error": None,
            "exception": None,
            "duration": 0,
        }

        start_time = time.time()

        try:
            rng = stream(cfg.seed, scene_index)
            scene = compose_scene(
                cfg,
                self.catalog,
                rng,
                scene_index,
                self.appearance,
                self.config.materials,
                self.config.lights,
            )
            result["distractors"] = len(scene.distractors)
            for view_index in range(cfg.views_per_scene):
                radius = float(uniform_in(rng, cfg.camera_radius))
                camera = sample_camera(scene, radius, rng, cfg.elevation_range, cfg.roll_deg)
                frame = render(scene, camera, self.config.camera, self.config.render)
                image_id = scene_index * cfg.views_per_scene + view_index
                poses = [
                    PoseRecord.from_transform(image_id, obj.category_id, obj.instance_id, compose(camera, obj.pose))
                    for obj in scene.placed_objects
                ]
                provenance = {
                    "procedure": cfg.procedure.value,
                    "seed": cfg.seed,
                    "scene_index": scene_index,
                    "view_index": view_index,
                }
                entry = store.write_image(ImageSample(image_id, frame, poses, provenance))
                result["images"] += 1
                result["annotations"] += len(entry.boxes)
            result["status"] = "success"

        except Exception as e:
            result["status"] = "failed"
            result["error"] = str(e)
            result["exception"] = e

        finally:
            result["duration"] = time.time() - start_time

        return result

    def _update_stats(self, result: Dict):
        """Met à jour les statistiques avec le résultat d'une scène"""
        self.stats["total"] += 1
        self.stats["results"].append(result)
        if result["status"] == "success":
            self.stats["success"] += 1
            self.stats["images"] += result["images"]
            self.stats["annotations"] += result["annotations"]
        else:
            self.stats["failed"] += 1

    def _progress(self, total: int, desc: str):
        return tqdm(total=total, desc=desc, unit="scène", disable=not self.show_progress)

    def process_scenes_sequential(self, cfg: ProcedureConfig, store: DatasetStore):
        with self._progress(cfg.num_scenes, cfg.procedure.value) as pbar:
            for scene_index in range(cfg.num_scenes):
                result = self.process_single_scene(cfg, scene_index, store)
                self._update_stats(result)
                pbar.set_postfix({"Images": self.stats["images"], "Échecs": self.stats["failed"]})
                pbar.update(1)
                if result["status"] == "failed":
                    break

    def process_scenes_parallel(self, cfg: ProcedureConfig, store: DatasetStore):
        """
        Traite les scènes en parallèle

        Après un échec, seules les scènes d'indice supérieur sont annulées :
        les résultats retenus sont ceux des scènes 0..premier échec, comme
        en séquentiel, quel que soit l'ordre de fin des workers
        """
        first_failure = cfg.num_scenes
        results = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {
                executor.submit(self.process_single_scene, cfg, scene_index, store): scene_index
                for scene_index in range(cfg.num_scenes)
            }
            with self._progress(cfg.num_scenes, cfg.procedure.value) as pbar:
                for future in as_completed(futures):
                    if future.cancelled():
                        continue
                    result = future.result()
                    results.append(result)
                    pbar.update(1)
                    if result["status"] == "failed" and result["scene_index"] < first_failure:
                        first_failure = result["scene_index"]
                        pbar.set_postfix({"Échec": f"scène {first_failure}"})
                        for pending, scene_index in futures.items():
                            if scene_index > first_failure:
                                pending.cancel()

        for result in sorted(results, key=lambda r: r["scene_index"]):
            if result["scene_index"] <= first_failure:
                self._update_stats(result)

    def run(self, procedure, root) -> DatasetManifest:
        """
        Génère le jeu complet d'une procédure dans root

        Le premier échec de scène interrompt la génération et est relancé

        Args:
            procedure: P1..P5
            root: Dossier d'écriture (provisoire)

        Returns:
            DatasetManifest écrit
        """
        cfg = self.config.procedure(ProcedureId.parse(procedure))
        self.stats = self._init_stats()
        if cfg.procedure.assembly:
            self.catalog.require_assembly()
        store = DatasetStore(root)
        store.prepare()

        if self.max_workers > 1:
            self.process_scenes_parallel(cfg, store)
        else:
            self.process_scenes_sequential(cfg, store)

        failures = sorted(
            (r for r in self.stats["results"] if r["status"] == "failed"), key=lambda r: r["scene_index"]
        )
        if failures:
            first = failures[0]
            logger.error(f"{cfg.procedure.value}#{first['scene_index']}: {first['error']}")
            raise first["exception"]

        models_info = write_models_info({c.category_id: c.mesh for c in self.catalog.classes})
        return store.finalize(
            cfg.procedure.value,
            self.config.camera,
            self.catalog.categories,
            models_info,
            cfg.seed,
            self.config.split_ratio,
        )

    @property
    def results(self) -> List[Dict]:
        return sorted(self.stats["results"], key=lambda r: r["scene_index"])

