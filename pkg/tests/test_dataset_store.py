"""
Tests PyTest de l'écriture des jeux : COCO, BOP, manifeste, partage train/test
"""

import json

import numpy as np
import pytest

from conftest import CATEGORIES, synthetic_models_info, synthetic_sample
from src.db.bop import DEPTH_SCALE, PoseRecord, decode_depth, encode_depth, gt_info_entries
from src.db.coco import CocoDataset, bbox_from_mask
from src.db.dataset_store import (
    COCO_FILE,
    MANIFEST_FILE,
    SCENE_CAMERA,
    SCENE_GT,
    DatasetStore,
    assign_splits,
    publish,
    round_half_up,
    staging_root,
    write_dataset,
)
from src.exceptions import DatasetValidationError
from src.geometry.camera import CameraIntrinsics
from src.geometry.transforms import RigidTransform, rot_z


@pytest.fixture
def K():
    return CameraIntrinsics(fx=30.0, fy=30.0, cx=8.0, cy=6.0, width=16, height=12)


@pytest.fixture
def models_info():
    return synthetic_models_info()


# ============================================================================
# BOITES ET PROFONDEUR
# ============================================================================


class TestPrimitives:
    def test_bbox_of_two_blobs_is_their_union(self):
        mask = np.zeros((10, 10), dtype=np.uint16)
        mask[1:3, 1:3] = 4
        mask[6:9, 5:8] = 4
        bbox, area = bbox_from_mask(mask, 4)
        assert bbox == [1, 1, 7, 8]
        assert area == 4 + 9

    def test_absent_instance(self):
        assert bbox_from_mask(np.zeros((4, 4)), 1) is None

    def test_depth_quantization_error(self):
        depth = np.random.default_rng(0).uniform(0.1, 6.0, size=(20, 20))
        restored = decode_depth(encode_depth(depth))
        assert np.max(np.abs(restored - depth)) <= DEPTH_SCALE / 2 + 1e-12

    def test_depth_saturates(self):
        assert encode_depth(np.array([[100.0]]))[0, 0] == np.iinfo(np.uint16).max

    def test_occluded_instance_is_not_visible(self):
        instance_map = np.zeros((4, 4), dtype=np.uint16)
        instance_map[0, 0] = 1
        poses = [
            PoseRecord.from_transform(0, 1, 1, RigidTransform.identity()),
            PoseRecord.from_transform(0, 2, 2, RigidTransform.identity()),
        ]
        info = gt_info_entries(instance_map, poses)
        assert [e["visib"] for e in info] == [True, False]
        assert info[1]["bbox_visib"] == [-1, -1, -1, -1]

    def test_coco_validate_rejects_empty_box(self):
        coco = CocoDataset(categories=list(CATEGORIES))
        coco.add_image(1, "rgb/000000.png", 16, 12)
        coco.add_annotation(1, 1, [0, 0, 0, 3], 0)
        with pytest.raises(DatasetValidationError):
            coco.validate()


# ============================================================================
# PARTAGE TRAIN/TEST
# ============================================================================


class TestSplits:
    def test_ratio_on_15000_images(self):
        splits = assign_splits(42, range(15000), 0.7)
        values = list(splits.values())
        assert values.count("train") == 10500
        assert values.count("test") == 4500

    def test_round_half_up(self):
        assert round_half_up(2.5) == 3
        assert round_half_up(3.5) == 4
        assert round_half_up(0.7 * 3) == 2

    def test_splits_depend_only_on_seed_and_ids(self):
        assert assign_splits(1, [5, 3, 9, 0], 0.5) == assign_splits(1, [0, 3, 5, 9], 0.5)
        assert assign_splits(1, range(50), 0.5) != assign_splits(2, range(50), 0.5)


# ============================================================================
# ECRITURE D'UN JEU
# ============================================================================


class TestWriteDataset:
    def test_round_trip(self, tmp_path, K, models_info):
        samples = [
            synthetic_sample(K, 0, [(1, 1, 2, 3, 4, 5), (2, 2, 9, 1, 3, 3)]),
            synthetic_sample(K, 1, [(1, 2, 0, 0, 16, 12)]),
            synthetic_sample(K, 2, []),
        ]
        manifest = write_dataset(samples, tmp_path / "P1", "P1", CATEGORIES, models_info, seed=3, split_ratio=0.7)
        store = DatasetStore(tmp_path / "P1")

        coco = store.load_coco()
        assert [img["id"] for img in coco.images] == [1, 2, 3]
        assert coco.images[0]["file_name"] == "rgb/000000.png"
        assert [(a["image_id"], a["category_id"], a["bbox"]) for a in coco.annotations] == [
            (1, 1, [2, 3, 4, 5]),
            (1, 2, [9, 1, 3, 3]),
            (2, 2, [0, 0, 16, 12]),
        ]

        scene_gt = store.load_scene_gt()
        assert scene_gt[2] == []
        restored = scene_gt[0][0].to_transform()
        assert np.array_equal(restored.rotation, samples[0].poses[0].rotation_matrix)

        assert np.array_equal(store.read_image("rgb", 1), samples[1].frame.rgb)
        assert np.array_equal(store.read_image("instance", 0), samples[0].frame.instance_map)
        assert np.max(np.abs(store.read_depth(0) - samples[0].frame.depth)) <= DEPTH_SCALE / 2 + 1e-12
        assert store.intrinsics() == K

        camera = store.load_scene_camera()[0]
        assert camera["units"] == "m"
        assert camera["depth_scale"] == DEPTH_SCALE

        assert manifest.counts == {"P1": {"count": 3, "train": 2, "test": 1}}
        assert store.load_manifest().images[1]["scene_index"] == 1

    def test_bboxes_rederived_from_instance_png(self, tmp_path, K, models_info):
        samples = [synthetic_sample(K, i, [(1, 1, i, i, 5, 4), (2, 2, 10, 2 + i, 4, 3)]) for i in range(4)]
        write_dataset(samples, tmp_path / "ds", "ds", CATEGORIES, models_info, seed=0, split_ratio=0.5)
        store = DatasetStore(tmp_path / "ds")
        for image_id, annotations in store.load_coco().annotations_by_image().items():
            instance_map = store.read_image("instance", image_id - 1)
            gt = store.load_scene_gt()[image_id - 1]
            expected = [bbox_from_mask(instance_map, p.instance_id) for p in gt]
            assert [[a["bbox"], a["area"]] for a in annotations] == [list(e) for e in expected if e]

    def test_reflection_writes_nothing(self, tmp_path, K, models_info):
        bad = synthetic_sample(K, 0, [(1, 1, 0, 0, 2, 2)])
        mirrored = PoseRecord(0, 1, (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0), (0.0, 0.0, 1.0), 1)
        bad.poses[0] = mirrored
        root = tmp_path / "bad"
        with pytest.raises(DatasetValidationError, match="det"):
            write_dataset([bad], root, "bad", CATEGORIES, models_info, seed=0, split_ratio=0.7)
        assert not root.exists()

    def test_unknown_category(self, tmp_path, K, models_info):
        sample = synthetic_sample(K, 0, [(1, 9, 0, 0, 2, 2)])
        with pytest.raises(DatasetValidationError, match="9"):
            write_dataset([sample], tmp_path / "x", "x", CATEGORIES, models_info, seed=0, split_ratio=0.7)

    def test_duplicate_image_ids(self, tmp_path, K, models_info):
        samples = [synthetic_sample(K, 0, []), synthetic_sample(K, 0, [])]
        with pytest.raises(DatasetValidationError, match="double"):
            write_dataset(samples, tmp_path / "x", "x", CATEGORIES, models_info, seed=0, split_ratio=0.7)

    def test_non_contiguous_ids(self, tmp_path, K, models_info):
        samples = [synthetic_sample(K, 0, []), synthetic_sample(K, 2, [])]
        with pytest.raises(DatasetValidationError, match="contigus"):
            write_dataset(samples, tmp_path / "x", "x", CATEGORIES, models_info, seed=0, split_ratio=0.7)

    def test_json_floats_are_exact(self, tmp_path, K, models_info):
        sample = synthetic_sample(K, 0, [(1, 1, 0, 0, 2, 2)], rotation=rot_z(33.3))
        write_dataset([sample], tmp_path / "ds", "ds", CATEGORIES, models_info, seed=0, split_ratio=0.7)
        with open(tmp_path / "ds" / SCENE_GT, encoding="utf-8") as f:
            stored = json.load(f)["0"][0]["cam_R_m2c"]
        assert stored == list(sample.poses[0].rotation)

    def test_index_files_exist(self, tmp_path, K, models_info):
        write_dataset([synthetic_sample(K, 0, [])], tmp_path / "ds", "ds", CATEGORIES, models_info, seed=0, split_ratio=0.7)
        for name in (COCO_FILE, MANIFEST_FILE, SCENE_CAMERA, SCENE_GT, "scene_gt_info.json", "models_info.json"):
            assert (tmp_path / "ds" / name).is_file()
        assert not list((tmp_path / "ds").glob("*.tmp"))


# ============================================================================
# QUARANTAINE
# ============================================================================


def test_staging_then_publish(tmp_path):
    staging = staging_root(tmp_path, "P1")
    staging.mkdir(parents=True)
    (staging / "marker").write_text("new", encoding="utf-8")
    final = tmp_path / "P1"
    final.mkdir()
    (final / "marker").write_text("old", encoding="utf-8")

    publish(staging, final)
    assert (final / "marker").read_text(encoding="utf-8") == "new"
    assert not staging.exists()


def test_stale_staging_is_cleared(tmp_path):
    stale = tmp_path / "_incomplete" / "P2"
    stale.mkdir(parents=True)
    (stale / "leftover.png").write_bytes(b"")
    assert not staging_root(tmp_path, "P2").exists()
