"""Tests for virtual views, lookup maps, remapping and view focusing."""

import math
import time

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from utils.camera_geometry import CameraIntrinsics, map_point, project, rotation_from_euler, unproject_many
from utils.errors import InputError, NotRectilinear, SingularPose, SizeMismatch
from utils.lens_models import LensKind, LensModel
from utils.view_synthesis import (
    LookupMap,
    VirtualView,
    apply_homography,
    build_lookup_map,
    focus_view,
    get_lookup_map,
    load_lookup_map,
    parent_to_view,
    read_image,
    rectilinear_homography,
    remap,
    save_lookup_map,
    valid_fraction,
    view_to_parent,
    write_image,
)


def _identity_map(width, height):
    xs, ys = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float))
    return LookupMap(xs, ys, (width, height))


class TestVirtualView:
    def test_rejects_fisheye_intrinsics(self, equidistant):
        with pytest.raises(NotRectilinear):
            VirtualView("cam0", np.eye(3), equidistant)

    def test_rejects_non_rotation(self):
        with pytest.raises(SingularPose):
            VirtualView("cam0", np.diag([1.0, 1.0, -1.0]), CameraIntrinsics.rectilinear(90.0, 64))

    def test_from_fov(self):
        view = VirtualView.from_fov("cam0", rotation_from_euler(90.0), 90.0, 640, 480)
        assert view.size == (640, 480)
        np.testing.assert_allclose(view.optical_axis, [1.0, 0.0, 0.0], atol=1e-12)


class TestBuildLookupMap:
    def test_rectilinear_source_with_same_intrinsics_is_identity(self):
        view = VirtualView.from_fov("cam0", np.eye(3), 90.0, 64, 48)
        lookup = build_lookup_map(view, view.intrinsics)
        expected = _identity_map(64, 48)
        np.testing.assert_allclose(lookup.map_x, expected.map_x, atol=1e-10)
        np.testing.assert_allclose(lookup.map_y, expected.map_y, atol=1e-10)
        assert valid_fraction(lookup) == 1.0

    def test_centre_pixel_hits_source_principal_point(self, wide_fisheye):
        view = VirtualView.from_fov("cam0", np.eye(3), 90.0, 640)
        lookup = build_lookup_map(view, wide_fisheye)
        np.testing.assert_allclose(lookup.entry(320, 320), wide_fisheye.center, atol=1e-9)

    def test_entries_are_inside_source_or_invalid(self):
        source = CameraIntrinsics(LensModel(LensKind.EQUIDISTANT, 200.0), (320.0, 240.0), (640, 480))
        view = VirtualView.from_fov("cam0", rotation_from_euler(60.0, 20.0), 120.0, 200, 150)
        lookup = build_lookup_map(view, source)
        assert 0.0 < valid_fraction(lookup) < 1.0
        valid = lookup.valid
        assert np.all((lookup.map_x[valid] >= 0) & (lookup.map_x[valid] <= 639))
        assert np.all((lookup.map_y[valid] >= 0) & (lookup.map_y[valid] <= 479))
        assert np.all(np.isnan(lookup.map_x[~valid]))

    def test_entries_follow_unproject_rotate_project(self, equidistant):
        rotation = rotation_from_euler(25.0, -10.0, 5.0)
        view = VirtualView.from_fov("cam0", rotation, 70.0, 80, 60)
        lookup = build_lookup_map(view, equidistant)
        for x, y in ((0, 0), (40, 30), (79, 59), (13, 51)):
            ray = unproject_many(np.array([x, y], dtype=float), view.intrinsics)[0]
            expected = project(rotation @ ray, equidistant)
            np.testing.assert_allclose(lookup.entry(x, y), expected, atol=1e-9)

    def test_homography_fast_path_matches_general_path(self):
        source = CameraIntrinsics(LensModel(LensKind.RECTILINEAR, 400.0), (320.0, 240.0), (640, 480))
        view = VirtualView.from_fov("cam0", rotation_from_euler(8.0, -6.0, 2.0), 60.0, 120, 90)
        fast = build_lookup_map(view, source)
        h = source.matrix @ view.rotation @ np.linalg.inv(view.intrinsics.matrix)
        xs, ys = np.meshgrid(np.arange(120.0), np.arange(90.0))
        expected = apply_homography(h, np.stack((xs, ys), axis=-1))
        valid = fast.valid
        assert valid.any()
        np.testing.assert_allclose(fast.map_x[valid], expected[..., 0][valid], atol=1e-9)
        np.testing.assert_allclose(fast.map_y[valid], expected[..., 1][valid], atol=1e-9)
        rays, _ = unproject_many(np.stack((xs, ys), axis=-1), view.intrinsics)
        general = np.array([project(view.rotation @ r, source) for r in rays[valid]])
        np.testing.assert_allclose(np.column_stack((fast.map_x[valid], fast.map_y[valid])), general, atol=1e-8)

    def test_view_outside_lens_domain_is_all_invalid(self):
        source = CameraIntrinsics(LensModel(LensKind.ORTHOGRAPHIC, 100.0), (320.0, 240.0), (640, 480))
        view = VirtualView.from_fov("cam0", rotation_from_euler(180.0), 60.0, 32)
        lookup = build_lookup_map(view, source)
        assert valid_fraction(lookup) == 0.0

    @pytest.mark.slow
    @pytest.mark.parametrize(("size", "budget"), [(640, 0.100), (320, 0.020)])
    def test_build_and_remap_within_budget(self, size, budget):
        source = CameraIntrinsics(LensModel(LensKind.EQUIDISTANT, 619.0), (1296.0, 972.0), (2592, 1944))
        image = np.zeros((1944, 2592, 3), dtype=np.uint8)
        view = VirtualView.from_fov("cam0", rotation_from_euler(30.0, 15.0), 90.0, size)
        remap(image, build_lookup_map(view, source))
        timings = []
        for _ in range(3):
            start = time.perf_counter()
            remap(image, build_lookup_map(view, source))
            timings.append(time.perf_counter() - start)
        assert min(timings) < budget


class TestRemap:
    def test_identity_map_reproduces_image(self, rng):
        image = rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
        np.testing.assert_array_equal(remap(image, _identity_map(64, 48)), image)

    def test_constant_image_stays_constant(self, equidistant):
        image = np.full((480, 640), 77, dtype=np.uint8)
        view = VirtualView.from_fov("cam0", rotation_from_euler(10.0, 5.0), 90.0, 100)
        lookup = build_lookup_map(view, equidistant)
        out = remap(image, lookup, fill=0)
        assert np.all(out[lookup.valid] == 77)

    def test_integer_translation_shifts_ramp(self):
        width, height = 16, 4
        ramp = np.tile(np.arange(width, dtype=np.uint8) * 10, (height, 1))
        base = _identity_map(width, height)
        map_x = base.map_x + 1.0
        map_x[:, -1] = np.nan
        shifted = remap(ramp, LookupMap(map_x, base.map_y, (width, height)), fill=255)
        np.testing.assert_array_equal(shifted[:, :-1], ramp[:, 1:])
        assert np.all(shifted[:, -1] == 255)

    def test_invalid_entries_are_fill(self):
        base = _identity_map(8, 8)
        map_x = np.full((8, 8), np.nan)
        out = remap(np.zeros((8, 8), dtype=np.uint8), LookupMap(map_x, base.map_y, (8, 8)), fill=9)
        assert np.all(out == 9)

    def test_nearest_interpolation(self):
        image = np.arange(16, dtype=np.uint8).reshape(4, 4)
        base = _identity_map(4, 4)
        lookup = LookupMap(np.clip(base.map_x + 0.2, 0, 3), base.map_y, (4, 4))
        np.testing.assert_array_equal(remap(image, lookup, interpolation="nearest"), image)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            remap(np.zeros((10, 10), dtype=np.uint8), _identity_map(8, 8))

    def test_unknown_interpolation(self):
        with pytest.raises(InputError):
            remap(np.zeros((8, 8), dtype=np.uint8), _identity_map(8, 8), interpolation="cubic")

    def test_output_stays_within_source_neighbourhood(self, rng, equidistant):
        image = rng.integers(50, 181, size=(480, 640), dtype=np.uint8)
        view = VirtualView.from_fov("cam0", rotation_from_euler(35.0, -20.0, 10.0), 100.0, 120)
        lookup = build_lookup_map(view, equidistant)
        out = remap(image, lookup, fill=0)
        valid = lookup.valid
        assert valid.any()
        assert np.all(out[valid] >= 50)
        assert np.all(out[valid] <= 180)
        # Bilinear samples lie between the extremes of the 3x3 block around the nearest pixel
        map_x, map_y = lookup.remap_maps
        cols = np.rint(map_x[valid]).astype(int)
        rows = np.rint(map_y[valid]).astype(int)
        padded = np.pad(image.astype(int), 1, mode="edge")
        blocks = np.stack([padded[rows + 1 + dy, cols + 1 + dx] for dy in (-1, 0, 1) for dx in (-1, 0, 1)])
        assert np.all(out[valid] >= blocks.min(axis=0))
        assert np.all(out[valid] <= blocks.max(axis=0))

    def test_straight_edges_stay_straight(self, wide_fisheye):
        # Fisheye image of the plane z=1 split at x=0.3, antialiased by signed pixel distance
        xs, ys = np.meshgrid(np.arange(1024.0), np.arange(1024.0))
        rays, valid = unproject_many(np.stack((xs, ys), axis=-1), wide_fisheye)
        ahead = valid & (rays[..., 2] > 0.05)
        g = np.where(ahead, rays[..., 0] / np.where(ahead, rays[..., 2], 1.0) - 0.3, 1.0)
        gy, gx = np.gradient(g)
        distance = g / np.maximum(np.hypot(gx, gy), 1e-12)
        image = np.clip(255.0 * (0.5 + distance), 0.0, 255.0).astype(np.uint8)

        view = VirtualView.from_fov("cam0", np.eye(3), 90.0, 640)
        out = remap(image, build_lookup_map(view, wide_fisheye)).astype(float)
        rows = np.arange(20, 620)
        crossings = []
        for row in rows:
            line = out[row]
            c = int(np.argmax(line >= 127.5))
            crossings.append(c - 1 + (127.5 - line[c - 1]) / (line[c] - line[c - 1]))
        crossings = np.array(crossings)
        fit = np.polyval(np.polyfit(rows, crossings, 1), rows)
        assert np.max(np.abs(crossings - fit)) <= 0.5
        assert np.mean(crossings) == pytest.approx(320.0 + 320.0 * 0.3, abs=1.0)


class TestHomography:
    def test_identical_views(self):
        view = VirtualView.from_fov("cam0", rotation_from_euler(12.0, 3.0), 75.0, 320)
        np.testing.assert_allclose(rectilinear_homography(view, view), np.eye(3), atol=1e-12)

    def test_doubled_focal_length_is_scaling(self):
        k = CameraIntrinsics(LensModel(LensKind.RECTILINEAR, 100.0), (0.0, 0.0), (200, 200))
        k2 = CameraIntrinsics(LensModel(LensKind.RECTILINEAR, 200.0), (0.0, 0.0), (200, 200))
        h = rectilinear_homography(VirtualView("a", np.eye(3), k), VirtualView("a", np.eye(3), k2))
        np.testing.assert_allclose(h, np.diag([2.0, 2.0, 1.0]), atol=1e-12)

    def test_agrees_with_point_mapping(self):
        view_a = VirtualView.from_fov("cam0", rotation_from_euler(5.0), 80.0, 300)
        view_b = VirtualView.from_fov("cam0", rotation_from_euler(-7.0, 4.0), 60.0, 200)
        points = np.array([[150.0, 150.0], [100.0, 180.0]])
        expected = apply_homography(rectilinear_homography(view_a, view_b), points)
        # Any rectilinear parent works as the pivot between two views of it
        pivot = view_to_parent(points, view_a, view_a.intrinsics)
        np.testing.assert_allclose(parent_to_view(pivot, view_b, view_a.intrinsics), expected, atol=1e-9)

    def test_random_view_pairs_match_map_point(self, rng):
        xs, ys = np.meshgrid(np.arange(64.0), np.arange(64.0))
        grid = np.stack((xs, ys), axis=-1).reshape(-1, 2)
        for _ in range(100):
            rotation_a = Rotation.from_quat(rng.normal(size=4)).as_matrix()
            axis = rng.normal(size=3)
            # Relative turns of at most 20 degrees keep every ray well ahead of view B
            turn = axis / np.linalg.norm(axis) * math.radians(rng.uniform(0.0, 20.0))
            offset = Rotation.from_rotvec(turn).as_matrix()
            view_a = VirtualView.from_fov("cam0", rotation_a, rng.uniform(40.0, 70.0), 64)
            view_b = VirtualView.from_fov("cam0", rotation_a @ offset, rng.uniform(40.0, 70.0), 64)
            expected = map_point(grid, view_a.intrinsics, view_b.intrinsics, view_a.rotation, view_b.rotation)
            mapped = apply_homography(rectilinear_homography(view_a, view_b), grid)
            np.testing.assert_allclose(mapped, expected, rtol=0.0, atol=1e-9)


class TestFocusView:
    def test_principal_point_target_gives_identity(self, equidistant):
        base = VirtualView.from_fov("cam0", rotation_from_euler(30.0), 90.0, 64)
        focused = focus_view(base, equidistant.center, equidistant)
        np.testing.assert_allclose(focused.rotation, np.eye(3), atol=1e-12)

    def test_optical_axis_points_at_target(self):
        cam = CameraIntrinsics(LensModel(LensKind.EQUIDISTANT, 100.0), (320.0, 240.0), (640, 480))
        target = np.array([320.0 + 100.0 * math.pi / 4, 240.0])
        focused = focus_view(VirtualView.from_fov("cam0", np.eye(3), 90.0, 64), target, cam)
        np.testing.assert_allclose(focused.optical_axis, [math.sin(math.pi / 4), 0.0, math.cos(math.pi / 4)], atol=1e-9)

    def test_gravity_keeps_view_upright(self, equidistant):
        gravity = np.array([0.0, 0.0, 1.0])
        target = np.array([420.0, 300.0])
        focused = focus_view(VirtualView.from_fov("cam0", np.eye(3), 90.0, 64), target, equidistant, gravity)
        x_axis, y_axis, z_axis = focused.rotation.T
        assert np.dot(x_axis, gravity) == pytest.approx(0.0, abs=1e-12)
        assert np.dot(y_axis, gravity) > 0.0
        np.testing.assert_allclose(z_axis, unproject_many(target, equidistant)[0], atol=1e-12)

    def test_gravity_parallel_to_ray_falls_back(self, equidistant):
        focused = focus_view(VirtualView.from_fov("cam0", np.eye(3), 90.0, 64), equidistant.center, equidistant,
                             np.array([0.0, 0.0, 1.0]))
        np.testing.assert_allclose(focused.rotation, np.eye(3), atol=1e-12)

    def test_view_parent_round_trip(self, equidistant):
        view = focus_view(VirtualView.from_fov("cam0", np.eye(3), 90.0, 200), np.array([400.0, 200.0]), equidistant)
        points = np.array([[100.0, 100.0], [10.0, 180.0], [199.0, 0.0]])
        back = parent_to_view(view_to_parent(points, view, equidistant), view, equidistant)
        np.testing.assert_allclose(back, points, atol=1e-8)
        np.testing.assert_allclose(parent_to_view([400.0, 200.0], view, equidistant), [100.0, 100.0], atol=1e-9)


class TestLookupMapCache:
    def test_cached_instance_is_reused(self, equidistant):
        view = VirtualView.from_fov("cam0", rotation_from_euler(10.0), 90.0, 32)
        first = get_lookup_map(view, equidistant)
        nearby = VirtualView.from_fov("cam0", rotation_from_euler(10.0 + 1e-9), 90.0, 32)
        assert get_lookup_map(nearby, equidistant) is first
        other = VirtualView.from_fov("cam1", rotation_from_euler(10.0), 90.0, 32)
        assert get_lookup_map(other, equidistant) is not first

    def test_disk_cache_round_trip(self, equidistant, tmp_path):
        view = VirtualView.from_fov("cam0", rotation_from_euler(40.0, 10.0), 100.0, 40, 30)
        built = get_lookup_map(view, equidistant, str(tmp_path))
        files = list(tmp_path.glob("*.flkm"))
        assert len(files) == 1
        loaded = load_lookup_map(files[0], equidistant.resolution)
        assert loaded.size == (40, 30)
        np.testing.assert_allclose(loaded.map_x, built.map_x, atol=1e-3, equal_nan=True)
        np.testing.assert_array_equal(loaded.valid, built.valid)

    def test_least_recently_used_map_is_evicted(self, equidistant, monkeypatch):
        monkeypatch.setattr("utils.view_synthesis.MAP_CACHE_CAPACITY", 2)
        views = [VirtualView.from_fov("cam0", rotation_from_euler(yaw), 90.0, 16) for yaw in (0.0, 10.0, 20.0)]
        first = get_lookup_map(views[0], equidistant)
        second = get_lookup_map(views[1], equidistant)
        assert get_lookup_map(views[0], equidistant) is first
        get_lookup_map(views[2], equidistant)
        assert get_lookup_map(views[0], equidistant) is first
        assert get_lookup_map(views[1], equidistant) is not second

    def test_save_writes_header_and_float32_pairs(self, tmp_path):
        lookup = _identity_map(3, 2)
        path = tmp_path / "map.flkm"
        save_lookup_map(path, lookup)
        raw = path.read_bytes()
        assert raw[:4] == b"FLKM"
        assert int.from_bytes(raw[4:8], "little") == 3
        assert int.from_bytes(raw[8:12], "little") == 2
        assert len(raw) == 12 + 3 * 2 * 2 * 4

    def test_corrupt_file_is_rejected(self, tmp_path):
        path = tmp_path / "bad.flkm"
        path.write_bytes(b"NOPE" + bytes(8))
        with pytest.raises(InputError):
            load_lookup_map(path, (4, 4))


def test_image_io_round_trip(tmp_path, rng):
    image = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
    write_image(tmp_path / "img.png", image)
    np.testing.assert_array_equal(read_image(tmp_path / "img.png"), image)
    with pytest.raises(InputError):
        read_image(tmp_path / "missing.png")
