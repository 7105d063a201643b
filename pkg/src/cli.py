"""
Interface en ligne de commande de synthforge
Sous-commandes : generate, mix, visualize, evaluate, meshinfo
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.analysis.overlay import OverlayStyle
from src.etl.config import SEED_ENV, load_config
from src.etl.orchestrator import GenerationOrchestrator
from src.exceptions import EXIT_CODES, SynthForgeError
from src.geometry.mesh_io import DEFAULT_UNIT_SCALE

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _epilog() -> str:
    codes = "\n".join(f"  {code}  {label}" for label, code in sorted(EXIT_CODES.items(), key=lambda kv: kv[1]))
    return f"""
Exemples d'utilisation:
  # Générer le jeu P1 décrit dans la configuration
  synthforge generate --config config/pipeline.yaml --procedure P1

  # Générer les cinq procédures avec 4 workers
  synthforge generate --config config/pipeline.yaml --procedure all --jobs 4

  # Construire la combinaison C2 à partir des jeux générés
  synthforge mix --config config/pipeline.yaml --combination C2

  # Vérifier la vérité terrain (boîtes 2D et 3D)
  synthforge visualize --dataset data/synth/P1 --mode 2d 3d

  # Évaluer des détections, ou un tableau modèles x jeux
  synthforge evaluate --gt data/synth/P1 --dets detections.json
  synthforge evaluate --matrix matrix.yaml --out reports/

  # Dimensions d'un maillage
  synthforge meshinfo pieces/bracket.stl

Variable d'environnement:
  {SEED_ENV}  remplace la graine de la configuration

Codes de sortie:
  0  succès
{codes}
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthforge",
        description="Génération de jeux de données synthétiques pour la détection d'objets industriels",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_epilog(),
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Journalisation détaillée (DEBUG)")
    parser.add_argument("--no-progress", action="store_true", help="Masquer les barres de progression")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="Générer un ou plusieurs jeux par procédure")
    generate.add_argument("--config", required=True, help="Fichier YAML de configuration")
    generate.add_argument(
        "--procedure",
        nargs="+",
        default=["all"],
        help="Procédures à générer (P1..P5) ou 'all' (défaut: all)",
    )
    generate.add_argument("--jobs", type=int, default=None, help="Nombre de workers (défaut: jobs de la configuration)")

    mix = sub.add_parser("mix", help="Assembler un jeu de combinaison")
    mix.add_argument("--config", required=True, help="Fichier YAML de configuration")
    mix.add_argument("--combination", required=True, help="Nom de la combinaison (ex: C1)")
    mix.add_argument("--total", type=int, default=None, help="Nombre d'images (défaut: mix_total_images)")

    visualize = sub.add_parser("visualize", help="Dessiner la vérité terrain sur les images")
    visualize.add_argument("--dataset", required=True, help="Dossier du jeu")
    visualize.add_argument("--mode", nargs="+", choices=["2d", "3d"], default=["2d", "3d"], help="Superpositions")
    visualize.add_argument("--dets", default=None, help="Détections à dessiner dans viz_dets/")
    visualize.add_argument("--score-threshold", type=float, default=0.8, help="Score minimal des détections (défaut: 0.8)")
    visualize.add_argument("--thickness", type=int, default=1, help="Épaisseur des traits en pixels")
    visualize.add_argument("--font-scale", type=int, default=1, help="Agrandissement de la police")
    visualize.add_argument("--no-labels", action="store_true", help="Ne pas écrire les noms de catégorie")
    visualize.add_argument("--jobs", type=int, default=4, help="Nombre de workers (défaut: 4)")

    evaluate = sub.add_parser("evaluate", help="Calculer mAP@0.5 et mAP@[0.5:0.95]")
    source = evaluate.add_mutually_exclusive_group(required=True)
    source.add_argument("--gt", default=None, help="Dossier du jeu de vérité terrain (avec --dets)")
    source.add_argument("--matrix", default=None, help="Fichier YAML d'évaluation modèles x jeux")
    evaluate.add_argument("--dets", default=None, help="Fichier JSON de détections (format résultats COCO)")
    evaluate.add_argument("--out", default=None, help="Dossier des rapports CSV/JSON")
    evaluate.add_argument("--heatmap", action="store_true", help="Carte de chaleur PNG (mode matrice)")

    meshinfo = sub.add_parser("meshinfo", help="Afficher les dimensions d'un maillage")
    meshinfo.add_argument("mesh", help="Fichier STL, PLY ou OBJ")
    meshinfo.add_argument(
        "--unit-scale", type=float, default=DEFAULT_UNIT_SCALE, help="Facteur fichier -> mètres (défaut: 0.001)"
    )
    return parser


def run(args: argparse.Namespace) -> int:
    progress = not args.no_progress
    if args.command == "generate":
        GenerationOrchestrator(load_config(args.config), progress).generate(args.procedure, args.jobs)
    elif args.command == "mix":
        GenerationOrchestrator(load_config(args.config), progress).mix(args.combination, args.total)
    elif args.command == "visualize":
        style = OverlayStyle(thickness=args.thickness, font_scale=args.font_scale, show_labels=not args.no_labels)
        GenerationOrchestrator(show_progress=progress).visualize(
            args.dataset, args.mode, args.dets, args.score_threshold, style, args.jobs
        )
    elif args.command == "evaluate":
        orchestrator = GenerationOrchestrator(show_progress=progress)
        if args.matrix:
            orchestrator.evaluate_matrix(args.matrix, args.out, args.heatmap)
        else:
            orchestrator.evaluate(args.gt, args.dets, args.out)
    elif args.command == "meshinfo":
        GenerationOrchestrator.meshinfo(args.mesh, args.unit_scale)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Fonction principale avec arguments CLI"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "evaluate" and args.gt and not args.dets:
        parser.error("evaluate --gt demande --dets")
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        return run(args)
    except SynthForgeError as e:
        print(f"❌ Erreur: {e}")
        logger.debug("Détail de l'erreur", exc_info=True)
        return e.exit_code
    except Exception as e:
        print(f"❌ Erreur inattendue: {e}")
        logger.debug("Détail de l'erreur", exc_info=True)
        return SynthForgeError.exit_code


if __name__ == "__main__":
    sys.exit(main())
