"""
Tableau comparatif modèles x jeux de validation, avec lignes « Average Sim »
et « Average Real », export texte, CSV et carte de chaleur
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
import yaml

from src.analysis.metrics import (
    Detection,
    GroundTruth,
    MetricReport,
    ground_truth_from_coco,
    load_detections,
    map_metrics,
)
from src.db.dataset_store import DatasetStore
from src.exceptions import EvaluationError

logger = logging.getLogger(__name__)

METRICS = ("mAP@0.5", "mAP@[0.5:0.95]")
GROUPS = {"sim": "Average Sim", "real": "Average Real"}
BEST_MARK = "**"
BEATS_BASELINE_MARK = "*"


@dataclass
class ValidationSet:
    name: str
    ground_truth: List[GroundTruth]
    categories: Dict[int, str]
    group: str = "sim"

    def __post_init__(self):
        if self.group not in GROUPS:
            raise EvaluationError(f"Jeu '{self.name}': groupe '{self.group}' inconnu ({', '.join(GROUPS)})")


@dataclass
class MatrixReport:
    """Rapports par paire (modèle, jeu) et tableaux dérivés"""

    models: List[str]
    validation_sets: List[ValidationSet]
    reports: Dict[Tuple[str, str], MetricReport] = field(default_factory=dict)
    baselines: List[str] = field(default_factory=list)
    category_id: Optional[int] = None

    def _value(self, report: MetricReport, metric: str) -> float:
        if self.category_id is not None:
            report = report.restricted_to(self.category_id)
        return report.map_50 if metric == METRICS[0] else report.map_50_95

    def table(self, metric: str = METRICS[1]) -> pd.DataFrame:
        """Lignes = jeux de validation puis moyennes par groupe, colonnes = modèles"""
        if metric not in METRICS:
            raise EvaluationError(f"Métrique inconnue: {metric}")
        rows = {
            vs.name: [self._value(self.reports[(model, vs.name)], metric) for model in self.models]
            for vs in self.validation_sets
        }
        frame = pd.DataFrame.from_dict(rows, orient="index", columns=self.models)
        for group, label in GROUPS.items():
            members = [vs.name for vs in self.validation_sets if vs.group == group]
            if members:
                frame.loc[label] = frame.loc[members].mean(axis=0)
        return frame

    def marked_columns(self, metric: str = METRICS[1]) -> List[str]:
        """Modèles dont la moyenne réelle dépasse le meilleur modèle de référence"""
        frame = self.table(metric)
        label = GROUPS["real"]
        baselines = [b for b in self.baselines if b in frame.columns]
        if label not in frame.index or not baselines:
            return []
        best = frame.loc[label, baselines].max()
        return [m for m in self.models if m not in baselines and frame.loc[label, m] > best]

    def to_text(self, metric: str = METRICS[1]) -> str:
        """Tableau aligné ; ** = meilleur modèle d'une ligne de moyenne"""
        frame = self.table(metric)
        marked = set(self.marked_columns(metric))
        text = frame.map(lambda v: f"{v:.3f}")
        for label in GROUPS.values():
            if label in frame.index:
                best = frame.loc[label].idxmax()
                text.loc[label, best] += BEST_MARK
        text.columns = [f"{m}{BEATS_BASELINE_MARK}" if m in marked else m for m in frame.columns]
        title = metric if self.category_id is None else f"{metric} (catégorie {self.category_id})"
        return f"{title}\n{text.to_string()}"

    def to_csv(self, path, metric: str = METRICS[1]) -> Path:
        path = Path(path)
        self.table(metric).to_csv(path, index_label="validation_set")
        return path

    def plot_heatmap(self, path, metric: str = METRICS[1]) -> Path:
        frame = self.table(metric)
        fig, ax = plt.subplots(figsize=(1.2 * len(frame.columns) + 3, 0.5 * len(frame.index) + 2))
        image = ax.imshow(frame.to_numpy(), cmap="RdYlGn", vmin=0.0, vmax=1.0)
        ax.set_xticks(range(len(frame.columns)), labels=list(frame.columns))
        ax.set_yticks(range(len(frame.index)), labels=list(frame.index))
        for i in range(len(frame.index)):
            for j in range(len(frame.columns)):
                ax.text(j, i, f"{frame.iat[i, j]:.2f}", ha="center", va="center", fontsize=8)
        ax.set_title(metric)
        fig.colorbar(image, ax=ax)
        plt.tight_layout()
        path = Path(path)
        fig.savefig(path, dpi=100)
        plt.close(fig)
        return path


def matrix_report(
    results: Sequence[Tuple[str, Mapping[str, Sequence[Detection]]]],
    validation_sets: Sequence[ValidationSet],
    baselines: Optional[Sequence[str]] = None,
    category_id: Optional[int] = None,
) -> MatrixReport:
    """
    Évalue chaque modèle sur chaque jeu de validation

    Args:
        results: [(nom du modèle, {nom du jeu: détections})]
        validation_sets: Jeux de validation avec leur groupe (sim ou real)
        baselines: Modèles de référence pour le marquage « * »
        category_id: Restreint le tableau à une catégorie

    Returns:
        MatrixReport
    """
    if not results:
        raise EvaluationError("Aucun modèle à évaluer")
    missing = [
        f"({model}, {vs.name})"
        for model, per_set in results
        for vs in validation_sets
        if vs.name not in per_set
    ]
    if missing:
        raise EvaluationError(f"Paires (modèle, jeu) manquantes: {', '.join(missing)}")

    report = MatrixReport(
        models=[model for model, _ in results],
        validation_sets=list(validation_sets),
        baselines=list(baselines or []),
        category_id=category_id,
    )
    for model, per_set in results:
        for vs in validation_sets:
            report.reports[(model, vs.name)] = map_metrics(per_set[vs.name], vs.ground_truth, vs.categories)
            logger.info(f"{model} sur {vs.name}: mAP@0.5={report.reports[(model, vs.name)].map_50:.4f}")
    return report


def load_matrix_spec(path) -> Tuple[List[Tuple[str, Dict[str, List[Detection]]]], List[ValidationSet], List[str], Optional[int]]:
    """
    Lit la description YAML d'une évaluation matricielle

    Format :
        validation_sets:
          P1: {gt: out/P1, group: sim}
          loose: {gt: real/loose, group: real}
        models:
          C1: {P1: dets/C1_P1.json, loose: dets/C1_loose.json}
        baselines: [P1, P2]
        category: 3

    Les chemins relatifs sont résolus depuis le dossier du fichier YAML
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        spec = yaml.safe_load(f) or {}
    for key in ("validation_sets", "models"):
        if not isinstance(spec.get(key), dict) or not spec[key]:
            raise EvaluationError(f"{path}: section '{key}' absente ou vide")

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else path.parent / p

    sets = []
    for name, entry in spec["validation_sets"].items():
        coco = DatasetStore(resolve(entry["gt"])).load_coco()
        sets.append(ValidationSet(str(name), ground_truth_from_coco(coco), coco.category_names(), entry.get("group", "sim")))
    results = [
        (str(model), {str(vs): load_detections(resolve(p)) for vs, p in per_set.items()})
        for model, per_set in spec["models"].items()
    ]
    category = spec.get("category")
    return results, sets, [str(b) for b in spec.get("baselines", [])], (int(category) if category is not None else None)
