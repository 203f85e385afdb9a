import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberscope import fiber as fb
from fiberscope.arrangement import SpaceTag, f_values, membership, random_z
from fiberscope.polysys import AffineSystem, eval_S


@pytest.fixture
def z3():
    return np.array([1, 2], dtype=complex)


class TestBranchValues:
    def test_sixth_roots_of_unity(self, z3):
        bvs = fb.branch_values(z3)
        vals = [b.value for b in bvs if b.finite and b.kind != fb.ZERO]
        sixth = np.exp(1j * np.pi * np.arange(6) / 3)
        dist = np.abs(np.subtract.outer(vals, sixth))
        assert np.all(np.sort(dist.min(axis=1)) <= 1e-14)
        assert sorted(np.argmin(dist, axis=1)) == list(range(6))
        assert [b.kind for b in bvs[-2:]] == [fb.ZERO, fb.INFINITY]
        assert bvs[-2].value == 0 and bvs[-1].value is None

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_count_distinctness_and_cubes(self, n):
        rng = np.random.default_rng(n)
        z = random_z(rng, n)
        bvs = [b for b in fb.branch_values(z) if b.finite and b.kind != fb.ZERO]
        assert len(bvs) == 3 * (n - 1)
        vals = np.array([b.value for b in bvs])
        assert np.min(np.abs(np.subtract.outer(vals, vals)) + np.eye(vals.size)) > 0
        for b in bvs:
            target = z[0] if b.kind == fb.CUBE_ROOT_Z1 else z[0] - z[b.index - 1]
            assert abs(b.value**3 - target) <= 1e-10 * max(1, abs(target))

    def test_labels(self, z3):
        labels = [b.label for b in fb.branch_values(z3)]
        assert labels == ["cbrt(z1)#0", "cbrt(z1)#1", "cbrt(z1)#2",
                          "cbrt(z1-z2)#0", "cbrt(z1-z2)#1", "cbrt(z1-z2)#2", "zero", "infinity"]

    def test_rejects_z_outside(self):
        with pytest.raises(ValueError):
            fb.branch_values([1, 1])

    def test_proximity_radius(self, z3):
        # nearest pair among sixth roots of unity and 0 is at distance 1
        assert fb.proximity_radius(fb.branch_values(z3)) == pytest.approx(0.05)


class TestFiber:
    def test_example(self, z3):
        pts = fb.fiber_at(z3, 2)
        sq45, sq35 = np.sqrt(4.5), np.sqrt(3.5)
        expected = [[2, sq45, sq35], [2, sq45, -sq35], [2, -sq45, sq35], [2, -sq45, -sq35]]
        np.testing.assert_allclose([p.y for p in pts], expected, atol=1e-14)
        assert [p.sheet for p in pts] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        assert all(p.base_y1 == 2 for p in pts)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_cardinality_membership_and_image(self, n):
        rng = np.random.default_rng(10 + n)
        z = random_z(rng, n)
        sys = AffineSystem(n, z)
        for _ in range(5):
            y1 = complex(*rng.uniform(-2, 2, size=2))
            try:
                pts = fb.fiber_at(z, y1)
            except fb.BranchProximityError:
                continue
            assert len(pts) == 2 ** (n - 1)
            ys = np.array([p.y for p in pts])
            assert len({tuple(np.round(y, 12)) for y in ys}) == len(pts)
            for p in pts:
                assert membership(SpaceTag.Y, p.y)
                assert np.max(np.abs(eval_S(sys, p.y))) <= 1e-10 * max(1, abs(y1) ** 3)
                np.testing.assert_allclose(f_values(p.y), z, atol=1e-10 * max(1, abs(y1) ** 3))

    def test_deterministic_order(self, z3):
        a = fb.fiber_at(z3, 1.5 + 0.5j)
        b = fb.fiber_at(z3, 1.5 + 0.5j)
        assert [p.sheet for p in a] == [p.sheet for p in b]
        np.testing.assert_array_equal([p.y for p in a], [p.y for p in b])

    def test_proximity_error(self, z3):
        with pytest.raises(fb.BranchProximityError):
            fb.fiber_at(z3, 1.01)
        with pytest.raises(fb.BranchProximityError):
            fb.fiber_at(z3, 0.01j)
        fb.fiber_at(z3, 1.01, tau=0.001)

    @given(st.integers(3, 7), st.integers(0, 2**6 - 1))
    def test_sheet_index_round_trip(self, n, k):
        k %= 2 ** (n - 1)
        signs = fb.sheet_signs(n, k)
        assert fb.sheet_index(signs) == k
        assert tuple(fb.sign_vectors(n)[k]) == signs

    def test_sheet_bits(self):
        # a minus at position k of (eps_2..eps_n) sets bit 2^(n-2-k)
        assert fb.sheet_index((1, 1, -1)) == 1
        assert fb.sheet_index((-1, 1, 1)) == 4


class TestLocalModel:
    @pytest.mark.parametrize("n", [3, 5])
    def test_sqrt_collision_rate(self, n):
        rng = np.random.default_rng(n)
        z = random_z(rng, n)
        for b in fb.branch_values(z):
            if not b.finite or b.kind == fb.ZERO:
                continue
            pos = b.index - 2
            a = b.value
            # local expansion of y_i^2 around a is 3a t
            gaps = []
            for r in 1e-4 * 0.25 ** np.arange(4):
                pts = fb.fiber_array(z, a + r)
                gap = abs(pts[0, 1 + pos] - (-pts[0, 1 + pos]))
                assert gap == pytest.approx(2 * abs(np.sqrt(3 * a * r)), rel=1e-3)
                gaps.append(gap)
            np.testing.assert_allclose(np.array(gaps[:-1]) / gaps[1:], 2, rtol=1e-3)

    def test_other_coordinates_stay_apart(self, z3):
        a = fb.branch_values(z3)[0].value
        pts = fb.fiber_array(z3, a + 1e-6)
        assert abs(pts[0, 1]) > 1


class TestBasePoint:
    def test_n3_radius(self, z3):
        base = fb.base_point(z3)
        assert abs(base) == pytest.approx(4)
        vals = np.array([b.value for b in fb.branch_values(z3) if b.finite])
        assert np.min(np.abs(vals - base)) >= 3

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_far_and_in_widest_gap(self, n):
        rng = np.random.default_rng(20 + n)
        z = random_z(rng, n)
        base = fb.base_point(z)
        vals = np.array([b.value for b in fb.branch_values(z) if b.finite and b.kind != fb.ZERO])
        R = abs(base)
        assert R == pytest.approx(2 * (1 + np.max(np.abs(vals))))
        assert np.min(np.abs(vals - base)) >= R - np.max(np.abs(vals)) - 1e-12
        # brute-force oracle for the angle that maximizes the minimum angular distance
        thetas = np.linspace(0, 2 * np.pi, 20001)
        diff = np.abs(np.angle(np.exp(1j * (thetas[:, None] - np.angle(vals)[None, :]))))
        best = np.max(diff.min(axis=1))
        got = np.min(np.abs(np.angle(np.exp(1j * (np.angle(base) - np.angle(vals))))))
        assert got == pytest.approx(best, abs=1e-3)

    def test_deterministic(self, z3):
        assert fb.base_point(z3) == fb.base_point(z3)


class TestRamification:
    def test_example(self, z3):
        a = fb.branch_values(z3)[0]
        assert a.value == pytest.approx(1)
        pts = fb.ramification_points(z3, a)
        np.testing.assert_allclose([p.y for p in pts], [[1, np.sqrt(2), 0], [1, -np.sqrt(2), 0]],
                                   atol=1e-14)
        assert [p.signs for p in pts] == [(1, 0), (-1, 0)]

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_counts_and_stratum(self, n):
        rng = np.random.default_rng(30 + n)
        z = random_z(rng, n)
        sys = AffineSystem(n, z)
        for b in fb.branch_values(z):
            if not b.finite or b.kind == fb.ZERO:
                continue
            pts = fb.ramification_points(z, b)
            assert len(pts) == 2 ** (n - 2)
            for p in pts:
                assert p.y[b.index - 1] == 0
                assert sum(abs(c) == 0 for c in p.y) == 1
                assert fb.in_boundary_stratum(p.y)
                assert np.max(np.abs(eval_S(sys, p.y))) <= 1e-10

    def test_rejects_zero_and_infinity(self, z3):
        for b in fb.branch_values(z3)[-2:]:
            with pytest.raises(ValueError):
                fb.ramification_points(z3, b)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 3), st.floats(-np.pi, np.pi))
def test_fiber_points_solve_system(r, theta):
    z = np.array([1, 2j, -1.5 + 0.5j])
    y1 = r * np.exp(1j * theta)
    try:
        pts = fb.fiber_at(z, y1)
    except fb.BranchProximityError:
        return
    sys = AffineSystem(4, z)
    for p in pts:
        assert np.max(np.abs(eval_S(sys, p.y))) <= 1e-10 * max(1, r**3)
