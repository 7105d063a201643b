"""
Tests PyTest des tirages aléatoires, du test de chevauchement et des
distracteurs
"""

import numpy as np
import pytest
from scipy import stats

from src.geometry.model_info import ModelInfo, obb_corners
from src.geometry.transforms import RigidTransform, is_rotation, rot_z
from src.scene.distractors import random_convex_mesh
from src.scene.overlap import check_overlap
from src.scene.rng import stable_hash, stream
from src.scene.sampling import randomize_material, sample_floating_pose, sample_light, uniform_in
from src.scene.types import LIGHT_KINDS, MaterialRanges


def _unit_box(translation, rotation=None):
    info = ModelInfo(np.sqrt(3.0), -0.5, -0.5, -0.5, 1.0, 1.0, 1.0)
    return obb_corners(info, RigidTransform(np.eye(3) if rotation is None else rotation, translation))


# ============================================================================
# FLUX ALEATOIRES
# ============================================================================


class TestStreams:
    def test_same_seed_same_draws(self):
        assert np.array_equal(stream(3, 7).random(5), stream(3, 7).random(5))

    def test_streams_are_independent(self):
        assert not np.array_equal(stream(3, 7).random(5), stream(3, 8).random(5))

    def test_stable_hash_is_fixed(self):
        assert stable_hash(42, 1) == stable_hash(42, 1)
        assert stable_hash(42, 1) != stable_hash(42, 2)

    def test_negative_index(self):
        with pytest.raises(ValueError):
            stream(0, -1)


# ============================================================================
# TIRAGES
# ============================================================================


class TestSampling:
    def test_floating_translation_is_uniform(self):
        rng = np.random.default_rng(0)
        bounds = ((-0.2, 0.0, 0.1), (0.2, 0.5, 0.3))
        translations = np.array([sample_floating_pose(bounds, rng).translation for _ in range(10000)])
        lo, hi = np.array(bounds[0]), np.array(bounds[1])
        for axis in range(3):
            scaled = (translations[:, axis] - lo[axis]) / (hi[axis] - lo[axis])
            assert stats.kstest(scaled, "uniform").pvalue > 0.01

    def test_floating_rotation_is_valid(self):
        rng = np.random.default_rng(1)
        pose = sample_floating_pose(((0, 0, 0), (1, 1, 1)), rng)
        assert is_rotation(pose.rotation)

    def test_point_interval_consumes_nothing(self):
        rng = np.random.default_rng(2)
        assert uniform_in(rng, (0.4, 0.4)) == 0.4
        assert rng.random() == np.random.default_rng(2).random()

    def test_material_within_ranges(self):
        ranges = MaterialRanges(base_color=(0.2, 0.3), roughness=(0.5, 0.5))
        material = randomize_material(np.random.default_rng(3), ranges)
        assert all(0.2 <= c <= 0.3 for c in material.base_color)
        assert material.roughness == 0.5

    def test_light_kinds_are_balanced(self):
        rng = np.random.default_rng(4)
        kinds = [sample_light(rng, 2.0).kind for _ in range(3000)]
        for kind in LIGHT_KINDS:
            assert abs(kinds.count(kind) / 3000 - 1 / 3) <= 0.05

    def test_sun_points_down_from_above(self):
        rng = np.random.default_rng(5)
        suns = [light for light in (sample_light(rng, 2.0) for _ in range(200)) if light.kind == "sun"]
        assert suns
        assert all(light.direction[2] >= 0 for light in suns)

    def test_light_needs_positive_plane(self):
        with pytest.raises(ValueError):
            sample_light(np.random.default_rng(6), 0.0)


# ============================================================================
# CHEVAUCHEMENT
# ============================================================================


class TestOverlap:
    def test_identical_boxes(self):
        assert check_overlap(_unit_box((0, 0, 0)), _unit_box((0, 0, 0)))

    def test_face_contact_is_not_overlap(self):
        assert not check_overlap(_unit_box((0, 0, 0)), _unit_box((1.0, 0, 0)))

    def test_small_penetration(self):
        assert check_overlap(_unit_box((0, 0, 0)), _unit_box((0.999, 0, 0)))

    def test_rotated_box_corner_gap(self):
        # coin du cube tourné de 45° à 0.5·√2 du centre
        assert not check_overlap(_unit_box((0, 0, 0)), _unit_box((1.3, 0, 0), rot_z(45)))
        assert check_overlap(_unit_box((0, 0, 0)), _unit_box((1.1, 0, 0), rot_z(45)))

    def test_symmetric(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            a = _unit_box(rng.normal(size=3), rot_z(rng.uniform(0, 360)))
            b = _unit_box(rng.normal(size=3))
            assert check_overlap(a, b) == check_overlap(b, a)


# ============================================================================
# DISTRACTEURS
# ============================================================================


def test_random_convex_mesh_is_closed_and_outward():
    mesh = random_convex_mesh(np.random.default_rng(9), 0.1)
    a, b, c = (mesh.vertices[mesh.triangles[:, k]] for k in range(3))
    normals = np.cross(b - a, c - a)
    outward = np.einsum("ij,ij->i", normals, (a + b + c) / 3.0 - mesh.centroid)
    assert np.all(outward > 0)
    assert np.ptp(mesh.vertices, axis=0).max() <= 0.1
