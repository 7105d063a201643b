"""
Tests PyTest des superpositions de contrôle (boîtes 2D, boîtes 3D, détections)
"""

import numpy as np
import pytest

from conftest import write_synthetic_dataset
from src.analysis.bitmap_font import CELL, draw_text, render_text
from src.analysis.metrics import Detection
from src.analysis.overlay import (
    AXIS_COLORS,
    OverlayStyle,
    draw_rect,
    overlay_2d,
    overlay_3d,
    overlay_detections,
    visualize_dataset,
)
from src.db.bop import PoseRecord
from src.geometry.camera import CameraIntrinsics, project_points
from src.geometry.model_info import ModelInfo, obb_corners
from src.geometry.transforms import RigidTransform

WHITE = (255, 255, 255)
CUBE = ModelInfo(0.2 * np.sqrt(3.0), -0.1, -0.1, -0.1, 0.2, 0.2, 0.2)


@pytest.fixture
def K():
    return CameraIntrinsics(fx=60.0, fy=60.0, cx=32.0, cy=24.0, width=64, height=48)


def _blank(height=20, width=20):
    return np.zeros((height, width, 3), dtype=np.uint8)


def _changed(before, after):
    return np.any(before != after, axis=2)


def _pose(translation, image_id=0):
    return PoseRecord.from_transform(image_id, 1, 1, RigidTransform(np.eye(3), translation))


# ============================================================================
# BOITES 2D
# ============================================================================


class TestOverlay2D:
    def test_no_annotation_keeps_image(self):
        rgb = np.random.default_rng(0).integers(0, 255, size=(20, 20, 3), dtype=np.uint8)
        out = overlay_2d(rgb, [])
        assert np.array_equal(out, rgb)
        assert out is not rgb

    def test_rectangle_is_exact_perimeter(self):
        style = OverlayStyle(colors={1: WHITE})
        rgb = _blank()
        out = overlay_2d(rgb, [{"category_id": 1, "bbox": [5, 7, 10, 10]}], {1: "bracket"}, style)
        expected = np.zeros((20, 20), dtype=bool)
        expected[7:17, 5:15] = True
        expected[8:16, 6:14] = False
        assert np.array_equal(_changed(rgb, out), expected)
        assert np.all(out[expected] == WHITE)

    def test_thickness_grows_inward(self):
        image = _blank()
        draw_rect(image, [2, 2, 10, 10], WHITE, thickness=2)
        drawn = _changed(_blank(), image)
        assert not drawn[:2, :].any() and not drawn[:, :2].any()
        assert drawn[2, 2] and drawn[3, 3] and not drawn[4, 4]
        assert not drawn[12:, :].any() and not drawn[:, 12:].any()

    def test_label_stays_inside_box(self):
        style = OverlayStyle(colors={1: WHITE}, show_labels=True)
        rgb = _blank(40, 40)
        out = overlay_2d(rgb, [{"category_id": 1, "bbox": [2, 2, 30, 14]}], {1: "bracket"}, style)
        rows, cols = np.nonzero(_changed(rgb, out))
        assert rows.min() >= 2 and rows.max() <= 15
        assert cols.min() >= 2 and cols.max() <= 31
        inside = _changed(rgb, out)[4:15, 4:31]
        assert inside.any()

    def test_palette_colors_differ(self):
        style = OverlayStyle()
        assert style.color_for(1) != style.color_for(2)

    def test_invalid_style(self):
        with pytest.raises(ValueError):
            OverlayStyle(thickness=0)
        with pytest.raises(ValueError):
            OverlayStyle(axis_length=3.0)


# ============================================================================
# BOITES 3D
# ============================================================================


class TestOverlay3D:
    def test_corners_are_drawn_where_projected(self, K):
        rgb = _blank(48, 64)
        pose = _pose((0.0, 0.0, 1.0))
        out, behind = overlay_3d(rgb, pose, CUBE, K)
        assert not behind
        drawn = _changed(rgb, out)
        corners = project_points(K, obb_corners(CUBE, pose.to_transform()).corners)
        for u, v in np.rint(corners).astype(int):
            assert drawn[v, u]

    def test_axes_end_at_projected_tips(self, K):
        style = OverlayStyle(axis_length=0.5)
        out, _ = overlay_3d(_blank(48, 64), _pose((0.0, 0.0, 1.0)), CUBE, K, style)
        length = 0.5 * CUBE.diameter
        tips = project_points(K, np.array([[length, 0.0, 1.0], [0.0, length, 1.0]]))
        (ux, vx), (uy, vy) = np.rint(tips).astype(int)
        assert tuple(out[vx, ux]) == AXIS_COLORS[0]
        assert tuple(out[vy, uy]) == AXIS_COLORS[1]

    def test_object_behind_camera(self, K):
        rgb = _blank(48, 64)
        out, behind = overlay_3d(rgb, _pose((0.0, 0.0, -5.0)), CUBE, K)
        assert behind
        assert np.array_equal(out, rgb)

    def test_partially_behind_is_clipped(self, K):
        out, behind = overlay_3d(_blank(48, 64), _pose((0.0, 0.0, 0.05)), CUBE, K)
        assert not behind
        assert _changed(_blank(48, 64), out).any()


# ============================================================================
# DETECTIONS
# ============================================================================


def test_detections_below_threshold_are_skipped():
    rgb = _blank(40, 40)
    low = Detection(1, 1, (2, 2, 20, 20), 0.5)
    high = Detection(1, 2, (4, 4, 30, 20), 0.9)
    assert np.array_equal(overlay_detections(rgb, [low], score_threshold=0.8), rgb)
    out = overlay_detections(rgb, [low, high], {2: "cover"}, score_threshold=0.8)
    rows, cols = np.nonzero(_changed(rgb, out))
    assert rows.min() == 4 and cols.min() == 4


# ============================================================================
# JEU COMPLET
# ============================================================================


def test_visualize_dataset(tmp_path):
    K = CameraIntrinsics(fx=30.0, fy=30.0, cx=8.0, cy=6.0, width=16, height=12)
    root = write_synthetic_dataset(tmp_path / "P1", "P1", 3, K)
    counts = visualize_dataset(root, modes=("2d", "3d"), max_workers=2)
    assert counts == {"2d": 3, "3d": 3, "behind_camera": 0}
    for folder in ("viz2d", "viz3d"):
        assert sorted(p.name for p in (root / folder).iterdir()) == ["000000.png", "000001.png", "000002.png"]


def test_visualize_detections_needs_a_file(tmp_path):
    K = CameraIntrinsics(fx=30.0, fy=30.0, cx=8.0, cy=6.0, width=16, height=12)
    root = write_synthetic_dataset(tmp_path / "P1", "P1", 1, K)
    with pytest.raises(ValueError):
        visualize_dataset(root, modes=("dets",))


# ============================================================================
# POLICE BITMAP
# ============================================================================


class TestBitmapFont:
    def test_mask_shape(self):
        assert render_text("AB").shape == (CELL, 2 * CELL)
        assert render_text("AB", scale=3).shape == (3 * CELL, 6 * CELL)
        assert render_text("").shape == (CELL, 0)

    def test_lowercase_and_unknown(self):
        assert np.array_equal(render_text("abc"), render_text("ABC"))
        assert np.array_equal(render_text("@"), render_text("?"))

    def test_clip_rectangle(self):
        image = _blank(16, 16)
        draw_text(image, 0, 0, "MM", WHITE, clip=(0, 0, 4, 4))
        rows, cols = np.nonzero(image[:, :, 0])
        assert rows.max() <= 4 and cols.max() <= 4
        assert len(rows) > 0

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            render_text("A", scale=0)
