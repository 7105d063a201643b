"""
Orchestrateur du pipeline synthforge
Coordonne le chargement des actifs, la génération par procédure, le mélange
des combinaisons, la visualisation et l'évaluation
"""

import json
import time
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from src.analysis.matrix_report import METRICS, load_matrix_spec, matrix_report
from src.analysis.metrics import MetricReport, ground_truth_from_coco, load_detections, map_metrics
from src.analysis.overlay import OverlayStyle, visualize_dataset
from src.db.dataset_store import INCOMPLETE_DIR, DatasetManifest, DatasetStore, publish, staging_root
from src.etl.config import PipelineConfig
from src.etl.extract import AssetCatalog, load_catalog
from src.etl.load_batch import BatchGenerator
from src.etl.mixer import MixPlan, assemble, split_counts
from src.etl.monitoring import GenerationReport, SceneStats
from src.exceptions import ConfigError
from src.geometry.mesh_io import DEFAULT_UNIT_SCALE, load_mesh
from src.geometry.model_info import mesh_stats
from src.scene.types import ALL_PROCEDURES, ProcedureId

REPORT_FILE = "generation_report.json"


class GenerationOrchestrator:
    """Orchestrateur des sous-commandes du pipeline"""

    def __init__(self, config: Optional[PipelineConfig] = None, show_progress: bool = True):
        """
        Args:
            config: Configuration validée (inutile pour visualize/evaluate/meshinfo)
            show_progress: Afficher les barres de progression
        """
        self.config = config
        self.show_progress = show_progress
        self._catalog: Optional[AssetCatalog] = None

    def _require_config(self) -> PipelineConfig:
        if self.config is None:
            raise ConfigError("Cette commande demande un fichier de configuration (--config)")
        return self.config

    # ========== EXTRACT ==========

    @property
    def catalog(self) -> AssetCatalog:
        """Catalogue des maillages, chargé une seule fois"""
        if self._catalog is None:
            config = self._require_config()
            if config.assets_root is None:
                raise ConfigError("assets_root manquant : aucun maillage à composer")
            print(f"📥 Chargement des actifs: {config.assets_root}")
            self._catalog = load_catalog(config.assets_root, config.unit_scale)
            print(f"✓ {len(self._catalog.classes)} catégorie(s), {len(self._catalog.structure)} pièce(s) de structure")
        return self._catalog

    # ========== GENERATE ==========

    def generate(self, procedures: Sequence[str] = ("all",), jobs: Optional[int] = None) -> Dict[str, Path]:
        """
        Génère un jeu par procédure sous output_root/<P>

        Chaque jeu est écrit dans output_root/_incomplete/<P> et publié à la
        fin ; en cas d'échec il y reste

        Args:
            procedures: Liste de P1..P5, ou ["all"] pour toutes les procédures activées
            jobs: Nombre de workers (défaut: config.jobs)

        Returns:
            {procédure: dossier publié}
        """
        config = self._require_config()
        if list(procedures) == ["all"]:
            selected = [p for p in ALL_PROCEDURES if p in config.procedures]
        else:
            selected = [ProcedureId.parse(p) for p in procedures]
        for procedure in selected:
            config.procedure(procedure)

        print(f"\n{'='*60}")
        print(f"🚀 GENERATE: {', '.join(p.value for p in selected)}")
        print(f"{'='*60}")
        print(f"🎲 Graine: {config.seed}")
        print(f"📁 Sortie: {config.output_root}")

        report = GenerationReport(start_time=datetime.now().isoformat(), jobs=jobs or config.jobs, seed=config.seed)
        start = time.time()
        generator = BatchGenerator(
            config, self.catalog, config.appearance(), max_workers=jobs, show_progress=self.show_progress
        )
        published: Dict[str, Path] = {}
        try:
            for procedure in selected:
                cfg = config.procedure(procedure)
                print(f"\n🔄 {procedure.value}: {cfg.num_scenes} scène(s) x {cfg.views_per_scene} vue(s)")
                staging = staging_root(config.output_root, procedure.value)
                try:
                    manifest = generator.run(procedure, staging)
                finally:
                    for result in generator.results:
                        report.add_scene_stats(self._scene_stats(result))
                published[procedure.value] = publish(staging, config.dataset_root(procedure.value))
                report.datasets[procedure.value] = str(published[procedure.value])
                self._print_counts(manifest)
        except Exception:
            report.datasets.update(
                {p.value: str(Path(config.output_root) / INCOMPLETE_DIR / p.value) for p in selected if p.value not in published}
            )
            raise
        finally:
            report.end_time = datetime.now().isoformat()
            report.duration_seconds = time.time() - start
            self.print_summary(report)
            report.save(Path(config.output_root) / REPORT_FILE)
        return published

    @staticmethod
    def _scene_stats(result: Dict) -> SceneStats:
        return SceneStats(
            procedure=result["procedure"],
            scene_index=result["scene_index"],
            status=result["status"],
            images=result["images"],
            annotations=result["annotations"],
            distractors=result["distractors"],
            duration_seconds=result["duration"],
            error_message=result["error"],
        )

    @staticmethod
    def _print_counts(manifest: DatasetManifest):
        for procedure, counts in manifest.counts.items():
            print(f"   ✓ {procedure}: {counts['count']} image(s) (train {counts['train']} / test {counts['test']})")

    def print_summary(self, report: GenerationReport):
        """Affiche un résumé de la génération"""
        print(f"\n{'='*60}")
        print("📊 RÉSUMÉ DE LA GÉNÉRATION")
        print(f"{'='*60}")
        print(f"⏱️  Durée totale: {report.duration_seconds:.2f} secondes")
        print(f"🎬 Scènes: {report.total_scenes} ({report.success_scenes} succès, {report.failed_scenes} échec(s))")
        print(f"🖼️  Images: {report.total_images}")
        print(f"📦 Annotations: {report.total_annotations}")
        for error in report.errors[:5]:
            print(f"   ❌ {error['procedure']}#{error['scene_index']}: {str(error['error_message'])[:80]}")
        print(f"{'='*60}\n")

    # ========== MIX ==========

    def mix(self, combination: str, total_images: Optional[int] = None) -> Path:
        """
        Assemble un jeu de combinaison depuis les jeux publiés output_root/P1..P5

        Args:
            combination: Nom de la combinaison (C1..C5 ou définie dans la configuration)
            total_images: Nombre d'images (défaut: mix_total_images)

        Returns:
            Dossier du jeu combiné
        """
        config = self._require_config()
        if combination not in config.combinations:
            raise ConfigError(f"Combinaison inconnue: {combination} ({', '.join(config.combinations)})")
        plan = MixPlan.from_percentages(
            combination, config.combinations[combination], total_images or config.mix_total_images, config.split_ratio
        )

        print(f"\n{'='*60}")
        print(f"🔀 MIX: {combination} ({plan.total_images} images)")
        print(f"{'='*60}")
        for procedure, (train, test) in split_counts(plan).items():
            print(f"   • {procedure.value}: {train + test} (train {train} / test {test})")

        sources = {p: config.dataset_root(p.value) for p in plan.proportions}
        staging = staging_root(config.output_root, combination)
        manifest = assemble(plan, sources, staging, seed=config.seed, max_workers=config.jobs)
        final = publish(staging, config.dataset_root(combination))
        print(f"✓ {len(manifest.images)} image(s) écrites dans {final}")
        return final

    # ========== VISUALIZE ==========

    def visualize(
        self,
        root,
        modes: Sequence[str] = ("2d", "3d"),
        dets_path=None,
        score_threshold: float = 0.8,
        style: OverlayStyle = OverlayStyle(show_labels=True),
        jobs: int = 4,
    ) -> Dict[str, int]:
        detections = load_detections(dets_path) if dets_path else None
        if detections is not None and "dets" not in modes:
            modes = list(modes) + ["dets"]
        print(f"\n🖍️  Visualisation de {root} ({', '.join(modes)})")
        counts = visualize_dataset(root, modes, detections, score_threshold, style, jobs)
        for mode, n in counts.items():
            if mode != "behind_camera":
                print(f"   ✓ {mode}: {n} image(s)")
        if counts.get("behind_camera"):
            print(f"   ⚠ {counts['behind_camera']} boîte(s) 3D derrière la caméra")
        return counts

    # ========== EVALUATE ==========

    def evaluate(self, gt_root, dets_path, out_dir=None) -> MetricReport:
        """mAP d'un fichier de détections sur un jeu ; rapport JSON et CSV dans out_dir"""
        coco = DatasetStore(gt_root).load_coco()
        report = map_metrics(load_detections(dets_path), ground_truth_from_coco(coco), coco.category_names())

        print(f"\n{'='*60}")
        print("📊 ÉVALUATION")
        print(f"{'='*60}")
        print(f"   mAP@0.5:        {report.map_50:.4f}")
        print(f"   mAP@[0.5:0.95]: {report.map_50_95:.4f}")
        print(report.to_frame().round(4).to_string())

        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "metrics.json", "w", encoding="utf-8") as f:
                json.dump(report.to_dict(), f, indent=2, ensure_ascii=False)
            report.to_frame().to_csv(out / "metrics.csv", index_label="category")
            print(f"💾 Rapport sauvegardé: {out}")
        return report

    def evaluate_matrix(self, matrix_path, out_dir=None, heatmap: bool = False) -> List[str]:
        """Tableau modèles x jeux décrit par un fichier YAML"""
        results, sets, baselines, category = load_matrix_spec(matrix_path)
        report = matrix_report(results, sets, baselines, category)
        texts = []
        for metric in METRICS:
            text = report.to_text(metric)
            texts.append(text)
            print(f"\n{text}")
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for metric, stem in zip(METRICS, ("map50", "map50_95")):
                report.to_csv(out / f"matrix_{stem}.csv", metric)
                if heatmap:
                    report.plot_heatmap(out / f"matrix_{stem}.png", metric)
            print(f"💾 Tableaux sauvegardés: {out}")
        return texts

    # ========== MESHINFO ==========

    @staticmethod
    def meshinfo(path, unit_scale: float = DEFAULT_UNIT_SCALE) -> Dict:
        mesh = load_mesh(path, unit_scale=unit_scale)
        info = mesh_stats(mesh.require_triangles())
        summary = {"name": mesh.name, "vertices": len(mesh.vertices), "triangles": mesh.num_triangles, **info.to_dict()}
        print(f"\n📐 {path}")
        for key, value in summary.items():
            print(f"   {key}: {value}")
        return summary

