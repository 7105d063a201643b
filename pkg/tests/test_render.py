"""
Tests PyTest du rendu logiciel : profondeur, cartes de classes et d'instances
"""

import numpy as np
import pytest

from conftest import box_mesh
from src.etl.extract import load_catalog
from src.geometry.camera import CameraIntrinsics, look_at
from src.geometry.mesh import Mesh
from src.geometry.transforms import RigidTransform
from src.render.frame import RenderOptions, render
from src.render.rasterizer import NEAR, clip_near
from src.render.raycast import raycast_depth_oracle
from src.scene.procedures import compose_scene
from src.scene.rng import stream
from src.scene.sampling import sample_camera
from src.scene.types import FLOOR_NONE, Floor, LightSpec, Material, PlacedObject, ProcedureConfig, ProcedureId, SceneSpec

GREY = Material(base_color=(0.5, 0.5, 0.5), roughness=0.5, specular=0.5, metalness=0.0)
SUN = LightSpec("sun", (1.0, 1.0, 1.0), 2.0, direction=np.array([0.0, 0.0, 1.0]))


def _scene(objects, procedure=ProcedureId.P4) -> SceneSpec:
    return SceneSpec(
        procedure=procedure,
        scene_index=0,
        placed_objects=objects,
        distractors=[],
        structure=[],
        floor=Floor(FLOOR_NONE),
        backdrop=None,
        lights=[SUN],
    )


def _placed(mesh, translation, instance_id=1, category_id=1) -> PlacedObject:
    return PlacedObject(
        mesh=mesh,
        pose=RigidTransform(np.eye(3), translation),
        material=GREY,
        label=mesh.name,
        category_id=category_id,
        instance_id=instance_id,
    )


@pytest.fixture
def K():
    return CameraIntrinsics(fx=50.0, fy=50.0, cx=20.0, cy=15.0, width=40, height=30)


# ============================================================================
# CAS ELEMENTAIRES
# ============================================================================


class TestBasicRender:
    def test_empty_scene(self, K):
        frame = render(_scene([]), RigidTransform.identity(), K, RenderOptions(clear_color=(0.0, 0.0, 1.0)))
        assert frame.depth.max() == 0.0
        assert frame.class_map.max() == 0
        assert frame.instance_map.max() == 0
        assert np.all(frame.rgb == np.array([0, 0, 255], dtype=np.uint8))

    def test_fronto_parallel_triangle_depth(self, K):
        triangle = Mesh([[-1.0, -1.0, 2.0], [1.0, -1.0, 2.0], [0.0, 1.0, 2.0]], [[0, 1, 2]], name="tri")
        frame = render(_scene([_placed(triangle, (0.0, 0.0, 0.0))]), RigidTransform.identity(), K)
        assert frame.depth[15, 20] == pytest.approx(2.0, abs=1e-5)
        assert frame.instance_map[15, 20] == 1

    def test_triangle_behind_camera_is_invisible(self, K):
        triangle = Mesh([[-1.0, -1.0, -2.0], [1.0, -1.0, -2.0], [0.0, 1.0, -2.0]], [[0, 1, 2]], name="tri")
        frame = render(_scene([_placed(triangle, (0.0, 0.0, 0.0))]), RigidTransform.identity(), K)
        assert frame.depth.max() == 0.0

    def test_nearer_object_wins(self, K):
        near = box_mesh((0.4, 0.4, 0.4), name="near", offset=(-0.2, -0.2, 0.0))
        far = box_mesh((2.0, 2.0, 0.4), name="far", offset=(-1.0, -1.0, 0.0))
        scene = _scene(
            [
                _placed(far, (0.0, 0.0, 3.0), instance_id=1, category_id=2),
                _placed(near, (0.0, 0.0, 1.0), instance_id=2, category_id=1),
            ]
        )
        frame = render(scene, RigidTransform.identity(), K)
        assert frame.instance_map[15, 20] == 2
        assert frame.class_map[15, 20] == 1
        assert frame.depth[15, 20] == pytest.approx(1.0, abs=1e-6)
        assert frame.instance_map[5, 5] == 1
        assert frame.depth[5, 5] == pytest.approx(3.0, abs=1e-6)

    def test_maps_are_aligned(self, K):
        cube = box_mesh((0.5, 0.5, 0.5), offset=(-0.25, -0.25, -0.25))
        frame = render(_scene([_placed(cube, (0.0, 0.0, 2.0))]), RigidTransform.identity(), K)
        covered = frame.instance_map > 0
        assert covered.any()
        assert np.array_equal(covered, frame.class_map > 0)
        assert np.all(frame.depth[covered] > 0)
        assert np.all(frame.depth[~covered] == 0)


class TestClipNear:
    def test_triangle_in_front_is_kept(self):
        tri = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        pieces = clip_near(tri)
        assert len(pieces) == 1
        assert np.allclose(pieces[0][0], tri)

    def test_straddling_triangle_is_cut(self):
        tri = np.array([[0.0, 0.0, -1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        pieces = clip_near(tri)
        assert pieces
        for vertices, _ in pieces:
            assert np.all(vertices[:, 2] >= NEAR - 1e-12)

    def test_fully_behind(self):
        tri = np.array([[0.0, 0.0, -1.0], [1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])
        assert clip_near(tri) == []


# ============================================================================
# ORACLE PAR LANCER DE RAYON
# ============================================================================


@pytest.mark.parametrize("procedure", ["P1", "P4", "P5"])
def test_depth_matches_raycast_oracle(assets_root, procedure):
    catalog = load_catalog(assets_root)
    cfg = ProcedureConfig(procedure, objects_per_scene=(2, 3), distractors_per_scene=(1, 2))
    K = CameraIntrinsics(fx=80.0, fy=80.0, cx=40.0, cy=30.0, width=80, height=60)
    rng = stream(5, 0)
    scene = compose_scene(cfg, catalog, rng)
    camera = sample_camera(scene, 0.6, rng, cfg.elevation_range)
    frame = render(scene, camera, K)

    hit = np.argwhere(frame.depth > 0)
    assert len(hit) > 0
    # pixels de bord d'instance exclus
    instance = frame.instance_map
    interior = [
        (r, c)
        for r, c in hit
        if 0 < r < K.height - 1
        and 0 < c < K.width - 1
        and np.all(instance[r - 1 : r + 2, c - 1 : c + 2] == instance[r, c])
        and np.all(frame.depth[r - 1 : r + 2, c - 1 : c + 2] > 0)
    ]
    assert interior
    sample = np.random.default_rng(0).permutation(len(interior))[:200]
    good = 0
    for k in sample:
        r, c = interior[k]
        expected = raycast_depth_oracle(scene, camera, K, (c, r))
        good += int(abs(expected - frame.depth[r, c]) <= max(1e-4, 1e-3 * frame.depth[r, c]))
    assert good >= 0.99 * len(sample)


def test_oracle_outside_image(K):
    with pytest.raises(ValueError):
        raycast_depth_oracle(_scene([]), RigidTransform.identity(), K, (40, 0))


def test_look_at_view_of_cube(K):
    cube = box_mesh((0.2, 0.2, 0.2), offset=(-0.1, -0.1, -0.1))
    scene = _scene([_placed(cube, (0.0, 0.0, 0.0))])
    camera = look_at([0.0, -1.0, 0.5], [0.0, 0.0, 0.0])
    frame = render(scene, camera, K)
    assert frame.instance_map[15, 20] == 1
