"""
Tests PyTest du tableau comparatif modèles x jeux de validation
"""

import json

import pandas as pd
import pytest
import yaml

from conftest import write_synthetic_dataset
from src.analysis.matrix_report import GROUPS, ValidationSet, load_matrix_spec, matrix_report
from src.analysis.metrics import Detection, GroundTruth
from src.db.dataset_store import DatasetStore
from src.exceptions import EvaluationError
from src.geometry.camera import CameraIntrinsics

BOXES = {1: (0.0, 0.0, 10.0, 10.0), 2: (20.0, 20.0, 10.0, 10.0)}


def _validation_set(name, group):
    gts = [GroundTruth(image_id, 1, bbox) for image_id, bbox in BOXES.items()]
    return ValidationSet(name, gts, {1: "bracket"}, group)


def _dets(image_ids):
    return [Detection(i, 1, BOXES[i], 0.9) for i in image_ids]


@pytest.fixture
def report():
    sets = [_validation_set("sim_a", "sim"), _validation_set("real_r", "real")]
    results = [
        ("P1", {"sim_a": _dets([1, 2]), "real_r": []}),
        ("C1", {"sim_a": _dets([1, 2]), "real_r": _dets([1, 2])}),
        ("C2", {"sim_a": _dets([1, 2]), "real_r": _dets([1])}),
    ]
    return matrix_report(results, sets, baselines=["P1"])


# ============================================================================
# TABLEAU
# ============================================================================


class TestTable:
    def test_rows_and_averages(self, report):
        table = report.table("mAP@0.5")
        assert list(table.index) == ["sim_a", "real_r", GROUPS["sim"], GROUPS["real"]]
        assert list(table.columns) == ["P1", "C1", "C2"]
        assert table.loc["real_r", "P1"] == 0.0
        assert table.loc["real_r", "C1"] == pytest.approx(1.0)
        assert table.loc["real_r", "C2"] == pytest.approx(51 / 101)
        assert table.loc[GROUPS["real"]].tolist() == table.loc["real_r"].tolist()

    def test_models_beating_baseline(self, report):
        assert report.marked_columns("mAP@0.5") == ["C1", "C2"]

    def test_text_marks(self, report):
        text = report.to_text("mAP@0.5")
        header = text.splitlines()[1]
        assert "C1*" in header and "C2*" in header and "P1*" not in header
        real_line = next(line for line in text.splitlines() if line.startswith(GROUPS["real"]))
        assert "1.000**" in real_line
        assert real_line.count("**") == 1

    def test_unknown_metric(self, report):
        with pytest.raises(EvaluationError):
            report.table("AP@0.3")

    def test_csv_and_heatmap(self, report, tmp_path):
        csv_path = report.to_csv(tmp_path / "matrix.csv")
        frame = pd.read_csv(csv_path, index_col="validation_set")
        assert list(frame.columns) == ["P1", "C1", "C2"]
        assert len(frame) == 4
        png = report.plot_heatmap(tmp_path / "matrix.png")
        assert png.stat().st_size > 0


def test_missing_pair():
    sets = [_validation_set("sim_a", "sim"), _validation_set("real_r", "real")]
    with pytest.raises(EvaluationError, match="real_r"):
        matrix_report([("C1", {"sim_a": _dets([1])})], sets)


def test_unknown_group():
    with pytest.raises(EvaluationError):
        _validation_set("x", "lab")


def test_single_category():
    sets = [_validation_set("sim_a", "sim")]
    restricted = matrix_report([("C1", {"sim_a": _dets([1, 2])})], sets, category_id=1)
    assert restricted.table().loc["sim_a", "C1"] == pytest.approx(1.0)
    with pytest.raises(EvaluationError):
        matrix_report([("C1", {"sim_a": _dets([1, 2])})], sets, category_id=2).table()


# ============================================================================
# FICHIER YAML
# ============================================================================


def test_matrix_spec_with_perfect_detections(tmp_path):
    K = CameraIntrinsics(fx=30.0, fy=30.0, cx=8.0, cy=6.0, width=16, height=12)
    write_synthetic_dataset(tmp_path / "gt" / "P1", "P1", 3, K)
    write_synthetic_dataset(tmp_path / "gt" / "real", "P4", 2, K)
    (tmp_path / "dets").mkdir()
    models = {}
    for name in ("P1", "real"):
        coco = DatasetStore(tmp_path / "gt" / name).load_coco()
        dets = [
            {"image_id": a["image_id"], "category_id": a["category_id"], "bbox": a["bbox"], "score": 1.0}
            for a in coco.annotations
        ]
        (tmp_path / "dets" / f"C1_{name}.json").write_text(json.dumps(dets), encoding="utf-8")
        models[name] = f"dets/C1_{name}.json"
    spec = {
        "validation_sets": {"P1": {"gt": "gt/P1"}, "real": {"gt": "gt/real", "group": "real"}},
        "models": {"C1": models},
        "baselines": ["P1"],
    }
    spec_path = tmp_path / "matrix.yaml"
    spec_path.write_text(yaml.safe_dump(spec), encoding="utf-8")

    results, sets, baselines, category = load_matrix_spec(spec_path)
    assert [vs.group for vs in sets] == ["sim", "real"]
    assert baselines == ["P1"] and category is None
    table = matrix_report(results, sets, baselines).table()
    assert table.to_numpy().ravel().tolist() == pytest.approx([1.0] * table.size)


def test_matrix_spec_needs_models(tmp_path):
    spec_path = tmp_path / "matrix.yaml"
    spec_path.write_text(yaml.safe_dump({"validation_sets": {"a": {"gt": "x"}}}), encoding="utf-8")
    with pytest.raises(EvaluationError, match="models"):
        load_matrix_spec(spec_path)
