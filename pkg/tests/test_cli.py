"""
Tests PyTest de l'interface en ligne de commande et des codes de sortie
"""

import json

import pytest
import yaml

from conftest import write_synthetic_dataset
from src.cli import build_parser, main
from src.exceptions import EXIT_CODES
from src.geometry.camera import CameraIntrinsics


@pytest.fixture
def config_file(tmp_path, pipeline_data):
    path = tmp_path / "pipeline.yaml"
    path.write_text(yaml.safe_dump(pipeline_data), encoding="utf-8")
    return path


def test_help_lists_exit_codes():
    text = build_parser().format_help()
    assert "Codes de sortie" in text
    assert "SYNTHFORGE_SEED" in text
    assert "  2  configuration ou arguments invalides" in text
    for code in EXIT_CODES.values():
        assert f"  {code}  " in text


def test_missing_config_exits_with_2(tmp_path):
    assert main(["generate", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_unknown_procedure_exits_with_2(config_file):
    assert main(["--no-progress", "generate", "--config", str(config_file), "--procedure", "P9"]) == 2


def test_generate_then_mix(config_file, tmp_path):
    assert main(["--no-progress", "generate", "--config", str(config_file), "--procedure", "P4", "P5"]) == 0
    assert (tmp_path / "out" / "P4" / "manifest.json").is_file()
    assert main(["--no-progress", "mix", "--config", str(config_file), "--combination", "C4", "--total", "3"]) == 0
    assert (tmp_path / "out" / "C4" / "manifest.json").is_file()


def test_mix_without_sources_is_a_dataset_error(config_file):
    assert main(["mix", "--config", str(config_file), "--combination", "C2"]) == 6


@pytest.mark.parametrize(
    "argv",
    [
        ["evaluate"],
        ["evaluate", "--gt", "data/synth/P1"],
        ["evaluate", "--gt", "data/synth/P1", "--matrix", "matrix.yaml", "--dets", "dets.json"],
    ],
)
def test_evaluate_arguments_are_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_evaluate_unknown_category_exits_with_8(tmp_path):
    K = CameraIntrinsics(fx=30.0, fy=30.0, cx=8.0, cy=6.0, width=16, height=12)
    root = write_synthetic_dataset(tmp_path / "gt", "P1", 2, K)
    dets = tmp_path / "dets.json"
    dets.write_text(json.dumps([{"image_id": 1, "category_id": 9, "bbox": [0, 0, 2, 2], "score": 0.5}]), encoding="utf-8")
    assert main(["evaluate", "--gt", str(root), "--dets", str(dets)]) == 8


def test_meshinfo(tmp_path, write_box, capsys):
    path = write_box(tmp_path / "bracket.stl", (40, 40, 40))
    assert main(["meshinfo", str(path)]) == 0
    assert "diameter" in capsys.readouterr().out


def test_meshinfo_bad_file_exits_with_3(tmp_path):
    path = tmp_path / "part.step"
    path.write_text("ISO-10303-21;", encoding="utf-8")
    assert main(["meshinfo", str(path)]) == 3


def test_visualize(tmp_path):
    K = CameraIntrinsics(fx=30.0, fy=30.0, cx=8.0, cy=6.0, width=16, height=12)
    root = write_synthetic_dataset(tmp_path / "gt", "P1", 2, K)
    assert main(["visualize", "--dataset", str(root), "--mode", "2d", "--no-labels", "--thickness", "2"]) == 0
    assert (root / "viz2d" / "000001.png").is_file()


def test_bad_arguments_stop_the_parser():
    with pytest.raises(SystemExit) as excinfo:
        main(["visualize"])
    assert excinfo.value.code == 2
