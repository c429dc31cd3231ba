import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab.cloud import ParticleCloud
from vortexlab.kernel import (BlobSpec, TreecodeParams, biot_savart,
                              lipschitz_farfield_bound, velocity_bound,
                              velocity_direct, velocity_tree)

TWO_PI = 2.0 * math.pi

coord = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False,
                  allow_infinity=False)


def make_cloud(pos, w, h=0.01, delta=0.01):
    pos = np.asarray(pos, dtype=np.float64).reshape(-1, 2)
    w = np.asarray(w, dtype=np.float64)
    return ParticleCloud(pos, w, np.zeros(len(w), dtype=np.int64),
                         w / h**2, h, delta)


class TestBiotSavart:
    def test_unit_x(self):
        u = biot_savart([1.0, 0.0], BlobSpec.singular())
        assert np.allclose(u, [0.0, 1.0 / TWO_PI], atol=1e-16)

    def test_y_axis(self):
        u = biot_savart([0.0, 2.0], BlobSpec.singular())
        assert np.allclose(u, [-1.0 / (4.0 * math.pi), 0.0], atol=1e-16)

    def test_blob_halves_at_delta_one(self):
        u = biot_savart([1.0, 0.0], BlobSpec.blob(1.0))
        assert np.allclose(u, [0.0, 1.0 / (4.0 * math.pi)], atol=1e-16)

    def test_singular_origin_rejected(self):
        with pytest.raises(ValueError):
            biot_savart([0.0, 0.0], BlobSpec.singular())

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            biot_savart([np.nan, 1.0], BlobSpec.singular())

    def test_blob_vanishes_at_origin(self):
        assert np.array_equal(biot_savart([0.0, 0.0], BlobSpec.blob(0.2)),
                              [0.0, 0.0])

    @given(zx=coord, zy=coord)
    @settings(max_examples=200, deadline=None)
    def test_antisymmetry_exact(self, zx, zy):
        if math.hypot(zx, zy) < 1e-12:
            return
        for spec in (BlobSpec.singular(), BlobSpec.blob(0.3)):
            k = biot_savart([zx, zy], spec)
            k_neg = biot_savart([-zx, -zy], spec)
            assert np.array_equal(k_neg, -k)

    @given(zx=coord, zy=coord)
    @settings(max_examples=200, deadline=None)
    def test_orthogonality(self, zx, zy):
        if math.hypot(zx, zy) < 1e-12:
            return
        for spec in (BlobSpec.singular(), BlobSpec.blob(0.3)):
            k = biot_savart([zx, zy], spec)
            denom = math.hypot(zx, zy) * math.hypot(*k)
            if denom > 0:
                assert abs(zx * k[0] + zy * k[1]) <= 1e-14 * denom

    def test_blob_singular_consistency_rate(self):
        # |K_blob - K_sing| = (1/2pi) delta^2 / (|z| (|z|^2 + delta^2)),
        # so halving delta shrinks the gap by a factor approaching 4
        z = np.array([0.7, -0.4])
        ks = biot_savart(z, BlobSpec.singular())
        gaps = []
        for delta in (0.1, 0.05, 0.025):
            gaps.append(np.hypot(*(biot_savart(z, BlobSpec.blob(delta)) - ks)))
        assert gaps[0] / gaps[1] >= 3.5
        assert gaps[1] / gaps[2] >= 3.5


class TestVelocityDirect:
    def test_single_source(self):
        cloud = make_cloud([[0.0, 0.0]], [TWO_PI])
        u = velocity_direct(cloud, [[1.0, 0.0]], BlobSpec.singular())
        assert np.allclose(u, [[0.0, 1.0]], atol=1e-15)

    def test_two_sources_hand_sum(self):
        # +2pi at (1,0) contributes (0,-1) at the origin, -2pi at (-1,0)
        # contributes another (0,-1): total (0,-2)
        cloud = make_cloud([[1.0, 0.0], [-1.0, 0.0]], [TWO_PI, -TWO_PI])
        u = velocity_direct(cloud, [[0.0, 0.0]], BlobSpec.singular())
        assert np.allclose(u, [[0.0, -2.0]], atol=1e-14)

    def test_empty_sources(self):
        cloud = make_cloud(np.zeros((0, 2)), np.zeros(0))
        u = velocity_direct(cloud, [[1.0, 2.0], [0.5, 0.5]], BlobSpec.singular())
        assert np.array_equal(u, np.zeros((2, 2)))

    def test_coincident_target_rejected(self):
        cloud = make_cloud([[0.5, 0.5]], [1.0])
        with pytest.raises(ValueError, match="coincides"):
            velocity_direct(cloud, [[0.5, 0.5]], BlobSpec.singular())

    def test_matches_python_reference(self):
        rng = np.random.default_rng(7)
        pos = rng.random((40, 2))
        w = rng.uniform(-1, 1, 40)
        cloud = make_cloud(pos, w)
        targets = rng.random((25, 2)) + 2.0
        for spec in (BlobSpec.singular(), BlobSpec.blob(0.05)):
            u = velocity_direct(cloud, targets, spec)
            ref = np.zeros_like(u)
            for wi, xi in zip(w, pos):
                ref += wi * biot_savart(targets - xi, spec)
            assert np.allclose(u, ref, rtol=1e-13, atol=1e-15)

    def test_serial_parallel_bitwise(self):
        rng = np.random.default_rng(11)
        pos = rng.random((500, 2))
        w = rng.uniform(-1, 1, 500)
        cloud = make_cloud(pos, w)
        a = velocity_direct(cloud, pos, BlobSpec.blob(0.02), serial=True)
        b = velocity_direct(cloud, pos, BlobSpec.blob(0.02), serial=False)
        assert np.array_equal(a, b)

    def test_self_interaction_cancellation(self):
        rng = np.random.default_rng(3)
        pos = rng.random((300, 2))
        w = rng.uniform(-1, 1, 300)
        cloud = make_cloud(pos, w)
        u = velocity_direct(cloud, pos, BlobSpec.blob(0.05))
        total = w @ u
        scale = np.abs(w).sum() * np.max(np.hypot(u[:, 0], u[:, 1]))
        assert np.hypot(*total) <= 1e-12 * scale


class TestVelocityTree:
    def test_leaf_bit_exact(self):
        rng = np.random.default_rng(5)
        pos = rng.random((50, 2))
        w = rng.uniform(-1, 1, 50)
        cloud = make_cloud(pos, w)
        spec = BlobSpec.blob(0.03)
        params = TreecodeParams(max_leaf_size=64)
        targets = rng.random((80, 2))
        assert np.array_equal(velocity_tree(cloud, targets, spec, params),
                              velocity_direct(cloud, targets, spec))

    def test_large_cloud_accuracy(self):
        rng = np.random.default_rng(1)
        n = 10_000
        pos = rng.random((n, 2))
        w = rng.uniform(-1, 1, n) / n
        cloud = make_cloud(pos, w, h=0.01, delta=0.01)
        spec = BlobSpec.blob(0.01)
        params = TreecodeParams(opening_angle=0.5, max_leaf_size=64,
                                expansion_order=6)
        ud = velocity_direct(cloud, pos, spec, serial=False)
        ut = velocity_tree(cloud, pos, spec, params, serial=False)
        err = np.max(np.hypot(*(ut - ud).T)) / np.max(np.hypot(*ud.T))
        assert err < 1e-4

    def test_theta_monotonicity_two_clusters(self):
        rng = np.random.default_rng(9)
        a = rng.normal(0.0, 0.1, (400, 2))
        b = rng.normal(0.0, 0.1, (400, 2)) + [3.0, 0.0]
        pos = np.vstack([a, b])
        w = rng.uniform(0.5, 1.0, 800) / 800
        cloud = make_cloud(pos, w, delta=0.02)
        spec = BlobSpec.blob(0.02)
        ud = velocity_direct(cloud, pos, spec)
        scale = np.max(np.hypot(*ud.T))
        errs = []
        for theta in (0.8, 0.5, 0.3):
            params = TreecodeParams(opening_angle=theta, max_leaf_size=8,
                                    expansion_order=3)
            ut = velocity_tree(cloud, pos, spec, params)
            errs.append(np.max(np.hypot(*(ut - ud).T)) / scale)
        assert errs[0] >= errs[1] >= errs[2]
        assert errs[0] > errs[2] > 0.0

    def test_rejects_singular(self):
        cloud = make_cloud([[0.0, 0.0]], [1.0])
        with pytest.raises(ValueError, match="blob"):
            velocity_tree(cloud, [[1.0, 0.0]], BlobSpec.singular(),
                          TreecodeParams())

    def test_duplicate_positions(self):
        # coincident particles force the depth cap; the degenerate cluster
        # has zero radius, so its expansion is the exact monopole and the
        # tree matches the direct sum to rounding
        pos = np.tile([[0.25, 0.75]], (100, 1))
        pos = np.vstack([pos, [[0.8, 0.1]]])
        w = np.linspace(0.5, 1.5, 101)
        cloud = make_cloud(pos, w)
        spec = BlobSpec.blob(0.05)
        params = TreecodeParams(max_leaf_size=4)
        targets = np.array([[0.0, 0.0], [0.25, 0.75], [2.0, 2.0]])
        ut = velocity_tree(cloud, targets, spec, params)
        ud = velocity_direct(cloud, targets, spec)
        assert np.allclose(ut, ud, rtol=1e-13, atol=1e-14)

    def test_empty_targets(self):
        cloud = make_cloud([[0.0, 0.0]], [1.0])
        out = velocity_tree(cloud, np.zeros((0, 2)), BlobSpec.blob(0.1),
                            TreecodeParams())
        assert out.shape == (0, 2)

    def test_error_within_documented_tol(self):
        spec = BlobSpec.blob(0.02)
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            n = 2000
            pos = rng.random((n, 2))
            w = rng.uniform(-1, 1, n) / n
            cloud = make_cloud(pos, w, delta=0.02)
            params = TreecodeParams(opening_angle=0.6, max_leaf_size=16,
                                    expansion_order=4)
            ud = velocity_direct(cloud, pos, spec)
            ut = velocity_tree(cloud, pos, spec, params)
            err = np.max(np.hypot(*(ut - ud).T)) / np.max(np.hypot(*ud.T))
            assert err <= params.tol()

    def test_param_validation(self):
        with pytest.raises(ValueError):
            TreecodeParams(opening_angle=0.0)
        with pytest.raises(ValueError):
            TreecodeParams(opening_angle=1.5)
        with pytest.raises(ValueError):
            TreecodeParams(expansion_order=0)
        with pytest.raises(ValueError):
            TreecodeParams(max_leaf_size=0)


class TestVelocityBound:
    def test_zero_mass(self):
        assert velocity_bound(0.0, 0.0, 4.0) == 0.0

    def test_unit_disk_oracle(self):
        # for the indicator of the unit disk the speed at the center is
        # (1/2pi) * integral over the disk of 1/|y| = 1 exactly, so the
        # bound evaluated at (l1, l4) = (pi, pi^(1/4)) must be at least 1
        assert velocity_bound(math.pi, math.pi ** 0.25, 4.0) >= 1.0

    def test_homogeneity_exact_power_of_two(self):
        b = velocity_bound(0.7, 1.3, 4.0)
        assert velocity_bound(1.4, 2.6, 4.0) == 2.0 * b

    @given(lam=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=50, deadline=None)
    def test_homogeneity(self, lam):
        b = velocity_bound(0.7, 1.3, 3.0)
        assert velocity_bound(lam * 0.7, lam * 1.3, 3.0) == pytest.approx(
            lam * b, rel=1e-12)

    def test_q_domain(self):
        with pytest.raises(ValueError):
            velocity_bound(1.0, 1.0, 2.0)
        with pytest.raises(ValueError):
            velocity_bound(1.0, 0.0, 4.0)

    def test_discrete_cloud_bounded(self):
        # nonnegative resolved fields: sampled speeds stay under the bound
        for seed in (0, 1, 2):
            rng = np.random.default_rng(400 + seed)
            h = 0.025
            k = 20
            idx = np.arange(-k, k + 1) * h
            ox, oy = np.meshgrid(idx, idx, indexing="ij")
            pos = np.column_stack([ox.ravel(), oy.ravel()])
            f = np.exp(-(pos[:, 0] ** 2 + pos[:, 1] ** 2)
                       / (2 * rng.uniform(0.1, 0.2) ** 2))
            w = f * h * h
            cloud = make_cloud(pos, w, h=h, delta=2 * h)
            u = velocity_direct(cloud, pos, BlobSpec.blob(2 * h), serial=False)
            l1 = w.sum()
            l4 = (np.sum(f ** 4) * h * h) ** 0.25
            assert np.max(np.hypot(*u.T)) <= velocity_bound(l1, l4, 4.0)


class TestLipschitzFarfieldBound:
    def test_zero(self):
        assert lipschitz_farfield_bound(0.0, 1.0) == 0.0

    def test_doubling_separation_quarters(self):
        b1 = lipschitz_farfield_bound(2.5, 0.3)
        b2 = lipschitz_farfield_bound(2.5, 0.6)
        assert b2 == pytest.approx(b1 / 4.0, rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            lipschitz_farfield_bound(1.0, 0.0)
        with pytest.raises(ValueError):
            lipschitz_farfield_bound(-1.0, 1.0)

    def test_finite_difference_oracle(self):
        # unit-circulation blob of radius delta/4, gradient finite-differenced
        # at distances >= delta stays below the bound
        delta = 0.8
        h = delta / 40.0
        k = int(delta / 4 / h)
        idx = np.arange(-k, k + 1) * h
        ox, oy = np.meshgrid(idx, idx, indexing="ij")
        pos = np.column_stack([ox.ravel(), oy.ravel()])
        keep = np.hypot(pos[:, 0], pos[:, 1]) <= delta / 4
        pos = pos[keep]
        w = np.full(len(pos), 1.0 / len(pos))
        cloud = make_cloud(pos, w, h=h, delta=h)
        bound = lipschitz_farfield_bound(1.0, delta)
        fd = 1e-6
        spec = BlobSpec.singular()
        for r in (delta, 1.5 * delta, 3 * delta):
            for ang in np.linspace(0.0, TWO_PI, 8, endpoint=False):
                x = r * np.array([math.cos(ang), math.sin(ang)])
                pts = np.array([x + [fd, 0], x - [fd, 0],
                                x + [0, fd], x - [0, fd]])
                u = velocity_direct(cloud, pts, spec)
                jac = np.column_stack([(u[0] - u[1]) / (2 * fd),
                                       (u[2] - u[3]) / (2 * fd)])
                assert np.linalg.norm(jac, 2) <= bound
