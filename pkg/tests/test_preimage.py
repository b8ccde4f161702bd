import math

import numpy as np
import pytest

from dynloc.geometry import (
    Point2,
    Polygon,
    Pose,
    RigidMotion,
    aabb,
    compose,
    contains,
    ray_cast,
    rotation_motion,
)
from dynloc.preimage import (
    MeasurementSpec,
    PreimageParams,
    agreement_residual,
    compute_preimage,
    near_visibility_event,
    slice_slack,
)
from dynloc.simworld import random_polygon, sample_free_pose, Scene
from dynloc.voxelgrid import locate, make_spec, voxel_center

SQUARE = Polygon([(0, 0), (10, 0), (10, 10), (0, 10)])
IDENTITY = RigidMotion(Point2(0, 0), 0.0)


def spec_for(poly, n):
    return make_spec(aabb(poly), n)


class TestSliceSlack:
    def test_formula_arithmetic(self):
        spec = spec_for(SQUARE, 10)
        m = MeasurementSpec(IDENTITY, 5.0)
        want = 0.5 * math.hypot(1, 1) + 5.0 * (2 * math.pi / 10) / 2
        assert slice_slack(spec, m) == pytest.approx(want)
        assert slice_slack(spec, m) == pytest.approx(2.2779, abs=1e-4)

    def test_zero_cell_limit(self):
        tiny = make_spec((Point2(0, 0), Point2(1e-9, 1e-9)), 2)
        # Angular term still contributes; compare against eps_meas alone when
        # the distance is also zero.
        m = MeasurementSpec(IDENTITY, 0.0, eps_meas=0.25)
        assert slice_slack(tiny, m) == pytest.approx(0.25, abs=1e-6)

    def test_doubling_resolution_halves_slack(self):
        m = MeasurementSpec(IDENTITY, 5.0)
        s32 = slice_slack(spec_for(SQUARE, 32), m)
        s64 = slice_slack(spec_for(SQUARE, 64), m)
        assert 0.45 <= s64 / s32 <= 0.55

    def test_translation_magnitude_enters(self):
        spec = spec_for(SQUARE, 10)
        m0 = MeasurementSpec(IDENTITY, 5.0)
        m1 = MeasurementSpec(RigidMotion(Point2(3, 4), 0.0), 5.0)
        assert slice_slack(spec, m1) == pytest.approx(
            slice_slack(spec, m0) + 5.0 * (2 * math.pi / 10) / 2
        )


class TestComputePreimage:
    def test_unreachable_distance_is_empty(self):
        spec = spec_for(SQUARE, 16)
        mask = compute_preimage(SQUARE, MeasurementSpec(IDENTITY, 100.0), spec)
        assert mask.count() == 0

    def test_known_pose_voxel_set(self):
        n = 10
        spec = spec_for(SQUARE, n)
        mask = compute_preimage(SQUARE, MeasurementSpec(IDENTITY, 5.0), spec)
        q = Pose(Point2(5, 5), math.pi / n)  # slice-center heading
        ix, iy, it = locate(spec, q)
        assert mask.bits[ix, iy, it]

    def test_containment_oracle(self):
        # Synthesize distances from the static map; the generating pose's
        # voxel must be set almost always, failures only near visibility
        # events.
        poly = random_polygon(77, 14, 5.0, 0.4)
        n = 32
        spec = spec_for(poly, n)
        scene = Scene(poly)
        rng = np.random.default_rng(6)
        fails = 0
        trials = 300
        for i in range(trials):
            q = sample_free_pose(
                int(rng.integers(1 << 30)), scene, 0.0, 2 * spec.xy_diagonal()
            )
            g = rotation_motion(rng.uniform(0, 2 * math.pi))
            o = compose(q, g)
            d = ray_cast(poly, o.position, o.theta)
            m = MeasurementSpec(g, d)
            ix, iy, it = locate(spec, q)
            mask = compute_preimage(poly, m, spec, theta_slices=[it])
            if not mask.bits[ix, iy, it]:
                fails += 1
                qc = voxel_center(spec, ix, iy, it)
                assert near_visibility_event(
                    poly, q, m, slice_slack(spec, m), toward=qc
                )
        assert fails / trials <= 0.01

    def test_slack_extra_monotone(self):
        spec = spec_for(SQUARE, 16)
        m = MeasurementSpec(IDENTITY, 4.0)
        base = compute_preimage(SQUARE, m, spec, PreimageParams())
        fat = compute_preimage(SQUARE, m, spec, PreimageParams(slack_extra=0.5))
        assert np.all(fat.bits | ~base.bits)  # base implies fat

    def test_restricted_slices_match_full_mask(self):
        spec = spec_for(SQUARE, 16)
        m = MeasurementSpec(RigidMotion(Point2(0.5, 0.2), 1.0), 4.0)
        full = compute_preimage(SQUARE, m, spec)
        for it in (0, 7, 15):
            part = compute_preimage(SQUARE, m, spec, theta_slices=[it])
            assert np.array_equal(part.bits[:, :, it], full.bits[:, :, it])
            assert part.bits.sum() == part.bits[:, :, it].sum()

    def test_pure_rotation_shifts_theta_axis(self):
        # A pure-rotation motion by a whole number of angular cells must
        # reproduce the identity-motion mask shifted along the heading axis.
        n = 16
        spec = spec_for(SQUARE, n)
        j = 3
        m_id = MeasurementSpec(IDENTITY, 4.0)
        m_rot = MeasurementSpec(rotation_motion(j * 2 * math.pi / n), 4.0)
        mask_id = compute_preimage(SQUARE, m_id, spec)
        mask_rot = compute_preimage(SQUARE, m_rot, spec)
        assert np.array_equal(mask_rot.bits, np.roll(mask_id.bits, -j, axis=2))

    def test_resolution_refines_masks(self):
        # Median distance from a synthesized pose to the nearest set voxel
        # center shrinks when the resolution doubles.
        poly = random_polygon(99, 10, 5.0, 0.3)
        scene = Scene(poly)
        rng = np.random.default_rng(31)
        meds = {}
        cases = []
        for i in range(40):
            q = sample_free_pose(int(rng.integers(1 << 30)), scene, 0.0, 0.5)
            g = rotation_motion(rng.uniform(0, 2 * math.pi))
            o = compose(q, g)
            cases.append((q, MeasurementSpec(g, ray_cast(poly, o.position, o.theta))))
        for n in (16, 32):
            spec = spec_for(poly, n)
            dists = []
            for q, m in cases:
                mask = compute_preimage(poly, m, spec)
                idx = np.argwhere(mask.bits)
                xs = spec.origin.x + (idx[:, 0] + 0.5) * spec.cell_dx
                ys = spec.origin.y + (idx[:, 1] + 0.5) * spec.cell_dy
                dists.append(
                    float(
                        np.min(np.hypot(xs - q.position.x, ys - q.position.y))
                    )
                )
            meds[n] = float(np.median(dists))
        assert meds[32] < meds[16]


class TestAgreementResidual:
    def test_exact_agreement(self):
        q = Pose(Point2(5, 5), 0.0)
        assert agreement_residual(SQUARE, q, MeasurementSpec(IDENTITY, 5.0)) == 0.0

    def test_offset(self):
        q = Pose(Point2(5, 5), 0.0)
        assert agreement_residual(
            SQUARE, q, MeasurementSpec(IDENTITY, 4.3)
        ) == pytest.approx(0.7)

    def test_origin_outside_is_none(self):
        q = Pose(Point2(9.5, 5), 0.0)
        m = MeasurementSpec(RigidMotion(Point2(5, 0), 0.0), 1.0)
        assert agreement_residual(SQUARE, q, m) is None

    def test_synthesized_measurements_have_zero_residual(self):
        rng = np.random.default_rng(14)
        for i in range(30):
            poly = random_polygon(i, 10, 5.0, 0.4)
            scene = Scene(poly)
            q = sample_free_pose(i, scene, 0.0, 0.1)
            g = RigidMotion(
                Point2(*rng.uniform(-0.05, 0.05, 2)), rng.uniform(0, 2 * math.pi)
            )
            o = compose(q, g)
            if contains(poly, o.position) != "inside":
                continue
            d = ray_cast(poly, o.position, o.theta)
            res = agreement_residual(poly, q, MeasurementSpec(g, d))
            assert res == pytest.approx(0.0, abs=1e-9)


class TestParams:
    def test_invalid_measurement(self):
        with pytest.raises(ValueError):
            MeasurementSpec(IDENTITY, -1.0)
        with pytest.raises(ValueError):
            MeasurementSpec(IDENTITY, 1.0, eps_meas=-0.5)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            PreimageParams(slack_extra=-1.0)
        with pytest.raises(ValueError):
            PreimageParams(n=1)

    def test_params_n_must_match_spec(self):
        spec = spec_for(SQUARE, 16)
        with pytest.raises(ValueError):
            compute_preimage(
                SQUARE, MeasurementSpec(IDENTITY, 5.0), spec, PreimageParams(n=32)
            )
