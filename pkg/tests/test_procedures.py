"""
Tests PyTest de la composition des scènes P1 à P5
"""

import itertools

import numpy as np
import pytest

from src.etl.extract import load_catalog, to_pose
from src.exceptions import ConfigError, PlacementError, UnresolvedComponentError
from src.geometry.model_info import mesh_stats, obb_corners
from src.scene.overlap import check_overlap
from src.scene.procedures import compose_scene
from src.scene.rng import stream
from src.scene.types import FLOOR_INVISIBLE, FLOOR_NONE, FLOOR_TEXTURED, ProcedureConfig, ProcedureId


# ============================================================================
# FIXTURES
# ============================================================================


@pytest.fixture
def catalog(assets_root):
    return load_catalog(assets_root)


def _config(procedure, **overrides):
    values = {
        "procedure": procedure,
        "num_scenes": 3,
        "views_per_scene": 1,
        "objects_per_scene": (2, 2),
        "distractors_per_scene": (1, 2),
    }
    values.update(overrides)
    return ProcedureConfig(**values)


def _no_overlap(objects):
    boxes = [obb_corners(mesh_stats(o.mesh), o.pose) for o in objects]
    return not any(check_overlap(a, b) for a, b in itertools.combinations(boxes, 2))


# ============================================================================
# INVARIANTS PAR PROCEDURE
# ============================================================================


@pytest.mark.parametrize(
    "procedure,floor,backdrop",
    [
        ("P1", FLOOR_TEXTURED, False),
        ("P2", FLOOR_TEXTURED, False),
        ("P3", FLOOR_INVISIBLE, True),
        ("P4", FLOOR_NONE, True),
        ("P5", FLOOR_NONE, True),
    ],
)
def test_floor_and_backdrop_pairing(catalog, procedure, floor, backdrop):
    cfg = _config(procedure)
    for scene_index in range(cfg.num_scenes):
        scene = compose_scene(cfg, catalog, stream(cfg.seed, scene_index), scene_index)
        assert scene.floor.kind == floor
        assert (scene.backdrop is not None) == backdrop
        assert [o.instance_id for o in scene.placed_objects] == list(range(1, len(scene.placed_objects) + 1))


@pytest.mark.parametrize("procedure", ["P1", "P3"])
def test_settled_objects_touch_the_ground(catalog, procedure):
    cfg = _config(procedure)
    for scene_index in range(cfg.num_scenes):
        scene = compose_scene(cfg, catalog, stream(cfg.seed, scene_index), scene_index)
        assert len(scene.placed_objects) == 2
        for obj in scene.placed_objects:
            assert obj.pose.apply(obj.mesh.vertices)[:, 2].min() == pytest.approx(0.0, abs=1e-6)
        assert _no_overlap(scene.placed_objects + scene.distractors)


@pytest.mark.parametrize("procedure", ["P2", "P4"])
def test_floating_centroids_inside_bounds(catalog, procedure):
    cfg = _config(procedure)
    lo, hi = np.array(cfg.floating_bounds[0]), np.array(cfg.floating_bounds[1])
    for scene_index in range(cfg.num_scenes):
        scene = compose_scene(cfg, catalog, stream(cfg.seed, scene_index), scene_index)
        for obj in scene.placed_objects:
            centroid = obj.pose.apply(obj.mesh.centroid)
            assert np.all(centroid >= lo - 1e-12) and np.all(centroid <= hi + 1e-12)
        assert _no_overlap(scene.placed_objects + scene.distractors)


def test_assembly_reproduces_placements(catalog):
    cfg = _config("P5")
    scene = compose_scene(cfg, catalog, stream(cfg.seed, 0))
    assert [o.label for o in scene.placed_objects] == ["Bracket", "Cover"]
    for obj in scene.placed_objects + scene.structure:
        expected = to_pose(catalog.placements[obj.label])
        assert np.array_equal(obj.pose.as_matrix(), expected.as_matrix())
    assert [o.label for o in scene.structure] == ["Frame"]


def test_assembly_yaw_moves_whole_assembly(catalog):
    cfg = _config("P5", randomize_assembly_yaw=True)
    scene = compose_scene(cfg, catalog, stream(cfg.seed, 0))
    root = scene.assembly_root
    for obj in scene.placed_objects:
        expected = root.as_matrix() @ to_pose(catalog.placements[obj.label]).as_matrix()
        assert np.allclose(obj.pose.as_matrix(), expected, atol=1e-12)


def test_assembly_requires_every_placement(catalog):
    del catalog.placements["Frame"]
    with pytest.raises(UnresolvedComponentError):
        compose_scene(_config("P5"), catalog, stream(0, 0))


# ============================================================================
# DETERMINISME ET ECHECS
# ============================================================================


def test_same_stream_same_scene(catalog):
    cfg = _config("P4")
    a = compose_scene(cfg, catalog, stream(11, 2), 2)
    b = compose_scene(cfg, catalog, stream(11, 2), 2)
    for x, y in zip(a.all_objects, b.all_objects):
        assert np.array_equal(x.pose.as_matrix(), y.pose.as_matrix())
        assert x.material == y.material
    assert a.lights[0].kind == b.lights[0].kind


def test_crowded_bounds_raise_placement_error(catalog):
    cfg = _config(
        "P4",
        objects_per_scene=(2, 2),
        distractors_per_scene=(0, 0),
        floating_bounds=((0.0, 0.0, 0.5), (0.001, 0.001, 0.501)),
        max_pose_retries=5,
    )
    with pytest.raises(PlacementError) as excinfo:
        compose_scene(cfg, catalog, stream(0, 0))
    assert excinfo.value.retries == 5


def test_distractors_can_be_skipped_without_failing(catalog):
    cfg = _config(
        "P2",
        objects_per_scene=(1, 1),
        distractors_per_scene=(3, 3),
        floating_bounds=((0.0, 0.0, 0.5), (0.001, 0.001, 0.501)),
        distractor_size=(0.05, 0.05),
        max_pose_retries=3,
    )
    scene = compose_scene(cfg, catalog, stream(0, 0))
    assert len(scene.placed_objects) == 1
    assert len(scene.distractors) == 0


def test_invalid_procedure_config():
    with pytest.raises(ConfigError):
        ProcedureConfig("P2", floating_bounds=((0, 0, 0), (1, 0, 1)))
    with pytest.raises(ConfigError):
        ProcedureConfig("P9")


def test_settle_procedures_keep_camera_above_ground():
    assert ProcedureConfig(ProcedureId.P1).elevation_range == (5.0, 85.0)
    assert ProcedureConfig(ProcedureId.P4).elevation_range == (-90.0, 90.0)
