"""
Tests PyTest du générateur par lot : ordre des échecs avec plusieurs workers
"""

import threading

import pytest

from src.etl.config import config_from_dict
from src.etl.load_batch import BatchGenerator
from src.exceptions import PlacementError

FAILING_SCENES = (1, 3)


@pytest.fixture
def five_scenes(pipeline_data, tmp_path):
    pipeline_data["procedures"] = {"P2": {"num_scenes": 5}}
    return config_from_dict(pipeline_data, base_dir=tmp_path, env={})


def _fake_scenes(monkeypatch, parallel: bool):
    """Scènes 1 et 3 en échec ; en parallèle la scène 3 finit avant la scène 1"""
    scene3_done = threading.Event()

    def fake(self, cfg, scene_index, store):
        if parallel and scene_index == 1:
            scene3_done.wait(timeout=5)
        failed = scene_index in FAILING_SCENES
        error = PlacementError(f"objet#{scene_index}", 3) if failed else None
        result = {
            "procedure": cfg.procedure.value,
            "scene_index": scene_index,
            "status": "failed" if failed else "success",
            "images": 0 if failed else 2,
            "annotations": 0,
            "distractors": 0,
            "error": str(error) if failed else None,
            "exception": error,
            "duration": 0.0,
        }
        if scene_index == 3:
            scene3_done.set()
        return result

    monkeypatch.setattr(BatchGenerator, "process_single_scene", fake)


@pytest.mark.parametrize("jobs", [1, 4])
def test_lowest_failing_scene_is_raised(five_scenes, tmp_path, monkeypatch, jobs):
    _fake_scenes(monkeypatch, parallel=jobs > 1)
    generator = BatchGenerator(five_scenes, catalog=None, max_workers=jobs, show_progress=False)
    with pytest.raises(PlacementError) as excinfo:
        generator.run("P2", tmp_path / "staging")
    assert excinfo.value.label == "objet#1"
    assert [r["scene_index"] for r in generator.results] == [0, 1]
    assert (generator.stats["success"], generator.stats["failed"]) == (1, 1)
