import math

import numpy as np
import pytest

from dynloc.geometry import (
    INSIDE,
    OUTSIDE,
    Point2,
    Polygon,
    Pose,
    RigidMotion,
    compose,
    contains,
    ray_cast,
    validate,
)
from dynloc.simworld import (
    Obstacle,
    Scene,
    make_trial,
    measure_dynamic,
    random_obstacles,
    random_polygon,
    sample_free_pose,
    static_trajectory,
)

SQUARE = Polygon([(0, 0), (10, 0), (10, 10), (0, 10)])


def unit_square_at(cx, cy):
    shape = Polygon([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])
    return Obstacle(shape, static_trajectory(RigidMotion(Point2(cx, cy), 0.0)))


class TestMeasureDynamic:
    def test_empty_scene_matches_static_raycast(self):
        scene = Scene(SQUARE)
        q = Pose(Point2(5, 5), 0.3)
        d, hit_static = measure_dynamic(scene, 0.0, q)
        assert hit_static
        assert d == pytest.approx(ray_cast(SQUARE, q.position, q.theta))

    def test_obstacle_blocks_ray(self):
        # Unit square centered at (7.5, 5): near face at x=7, ray from (5,5)
        # heading 0 hits it at distance 2.
        scene = Scene(SQUARE, [unit_square_at(7.5, 5.0)])
        d, hit_static = measure_dynamic(scene, 0.0, Pose(Point2(5, 5), 0.0))
        assert d == pytest.approx(2.0)
        assert not hit_static

    def test_obstacle_behind_sensor_is_ignored(self):
        scene = Scene(SQUARE, [unit_square_at(2.0, 5.0)])
        d, hit_static = measure_dynamic(scene, 0.0, Pose(Point2(5, 5), 0.0))
        assert d == pytest.approx(5.0)
        assert hit_static

    def test_pose_inside_obstacle_raises(self):
        scene = Scene(SQUARE, [unit_square_at(5.0, 5.0)])
        with pytest.raises(ValueError):
            measure_dynamic(scene, 0.0, Pose(Point2(5, 5), 0.0))

    def test_pose_outside_workspace_raises(self):
        scene = Scene(SQUARE)
        with pytest.raises(ValueError):
            measure_dynamic(scene, 0.0, Pose(Point2(11, 5), 0.0))

    def test_dynamic_distance_never_exceeds_static(self):
        rng = np.random.default_rng(8)
        scene = Scene(
            SQUARE, [unit_square_at(3.0, 7.0), unit_square_at(6.5, 2.5)]
        )
        for _ in range(200):
            q = Pose(
                Point2(rng.uniform(0.6, 9.4), rng.uniform(0.6, 9.4)),
                rng.uniform(0, 2 * math.pi),
            )
            try:
                d, hit_static = measure_dynamic(scene, 0.0, q)
            except ValueError:
                continue
            ds = ray_cast(SQUARE, q.position, q.theta)
            assert d <= ds + 1e-9
            if hit_static:
                assert d == pytest.approx(ds)

    def test_moving_obstacle_uses_time(self):
        shape = Polygon([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])

        def traj(t):
            return RigidMotion(Point2(7.5 + t, 5.0), 0.0)

        scene = Scene(SQUARE, [Obstacle(shape, traj)])
        q = Pose(Point2(5, 5), 0.0)
        d0, _ = measure_dynamic(scene, 0.0, q)
        d1, _ = measure_dynamic(scene, 1.0, q)
        assert d0 == pytest.approx(2.0)
        assert d1 == pytest.approx(3.0)


class TestMakeTrial:
    def test_rotation_increments_and_sparsity(self):
        scene = Scene(SQUARE, [unit_square_at(7.5, 5.0)])
        trial = make_trial(scene, Pose(Point2(5, 5), 0.0), 4)
        assert len(trial.measurements) == 4
        for i, m in enumerate(trial.measurements):
            assert m.g.rotation == pytest.approx(2 * math.pi * i / 4)
            assert m.g.translation.x == 0 and m.g.translation.y == 0
        # Only the first ray (heading 0) hits the obstacle.
        assert trial.static_flags == [False, True, True, True]
        assert trial.sparsity == 3

    def test_clean_scene_full_sparsity(self):
        trial = make_trial(Scene(SQUARE), Pose(Point2(4, 6), 1.0), 10)
        assert trial.sparsity == 10
        for m, flag in zip(trial.measurements, trial.static_flags):
            assert flag
            o = compose(trial.ground_truth, m.g)
            assert m.d == pytest.approx(ray_cast(SQUARE, o.position, o.theta))


class TestRandomPolygon:
    def test_deterministic_and_valid(self):
        p1 = random_polygon(42, 12, 5.0, 0.3)
        p2 = random_polygon(42, 12, 5.0, 0.3)
        assert np.array_equal(p1.outer, p2.outer)
        assert validate(p1) is None
        assert len(p1.outer) == 12

    def test_zero_jitter_is_inscribed(self):
        poly = random_polygon(7, 4, 3.0, 0.0)
        radii = np.hypot(poly.outer[:, 0], poly.outer[:, 1])
        assert np.allclose(radii, 3.0)

    def test_radii_within_jitter_band(self):
        poly = random_polygon(11, 30, 5.0, 0.4)
        radii = np.hypot(poly.outer[:, 0], poly.outer[:, 1])
        assert np.all(radii >= 5.0 * 0.6 - 1e-12)
        assert np.all(radii <= 5.0 * 1.4 + 1e-12)

    def test_parameter_errors(self):
        with pytest.raises(ValueError):
            random_polygon(0, 2, 5.0, 0.3)
        with pytest.raises(ValueError):
            random_polygon(0, 5, 5.0, 1.0)


class TestRandomObstacles:
    def test_deterministic_count_and_containment(self):
        w = random_polygon(3, 16, 5.0, 0.3)
        obs1 = random_obstacles(5, w, 8)
        obs2 = random_obstacles(5, w, 8)
        assert len(obs1) == 8
        for o1, o2 in zip(obs1, obs2):
            assert np.array_equal(o1.placed(0.0).outer, o2.placed(0.0).outer)
        for o in obs1:
            placed = o.placed(0.0)
            assert validate(placed) is None
            for v in placed.outer:
                assert contains(w, Point2(float(v[0]), float(v[1]))) == INSIDE

    def test_sizes_respect_range(self):
        w = SQUARE
        diam = math.hypot(10, 10)
        for o in random_obstacles(9, w, 6, size_range=(0.01, 0.03)):
            r = np.hypot(o.shape.outer[:, 0], o.shape.outer[:, 1]).max()
            assert 0.01 * diam - 1e-9 <= r <= 0.03 * diam + 1e-9

    def test_zero_count(self):
        assert random_obstacles(1, SQUARE, 0) == []

    def test_negative_count_raises(self):
        with pytest.raises(ValueError):
            random_obstacles(1, SQUARE, -1)


class TestSampleFreePose:
    def test_inside_free_region(self):
        scene = Scene(SQUARE, [unit_square_at(5.0, 5.0)])
        q = sample_free_pose(17, scene, 0.0, 0.0)
        assert contains(SQUARE, q.position) == INSIDE
        assert contains(scene.obstacles[0].placed(0.0), q.position) == OUTSIDE

    def test_clearance_bounds_position(self):
        for seed in range(10):
            q = sample_free_pose(seed, Scene(SQUARE), 0.0, 1.0)
            assert 1.0 <= q.position.x <= 9.0
            assert 1.0 <= q.position.y <= 9.0

    def test_deterministic(self):
        scene = Scene(random_polygon(2, 14, 5.0, 0.3))
        assert sample_free_pose(5, scene, 0.0, 0.5) == sample_free_pose(
            5, scene, 0.0, 0.5
        )

    def test_impossible_clearance_raises(self):
        with pytest.raises(ValueError):
            sample_free_pose(1, Scene(SQUARE), 0.0, 20.0)

    def test_negative_clearance_raises(self):
        with pytest.raises(ValueError):
            sample_free_pose(1, Scene(SQUARE), 0.0, -0.1)
