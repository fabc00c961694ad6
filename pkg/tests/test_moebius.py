import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spherewalk.errors import SingularMatrix
from spherewalk.moebius import (
    CP1Point, E1, E2, MoebiusMap, cartan, chordal_circle, chordal_distance,
    contraction_data, normalize, operator_norm, spherical_derivative,
)

RNG = np.random.default_rng(12345)


def random_map(rng=RNG):
    while True:
        ent = rng.uniform(-10, 10, size=8)
        a, b, c, d = ent[0] + 1j * ent[1], ent[2] + 1j * ent[3], ent[4] + 1j * ent[5], ent[6] + 1j * ent[7]
        if abs(a * d - b * c) > 1e-6:
            return MoebiusMap(a, b, c, d)


def random_point(rng=RNG):
    v = rng.standard_normal(4)
    return CP1Point(v[0] + 1j * v[1], v[2] + 1j * v[3])


def random_unitary(rng=RNG):
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    z = z / np.linalg.norm(z)
    return MoebiusMap(z[0], -z[1].conjugate(), z[1], z[0].conjugate())


class TestNormalize:
    def test_scalar_multiple_of_identity(self):
        g = normalize(2, 0, 0, 2)
        assert np.allclose(g.matrix, np.eye(2))

    def test_already_unimodular(self):
        g = normalize(1, 1, 0, 1)
        assert np.allclose(g.matrix, [[1, 1], [0, 1]])

    def test_divide_by_sqrt_det(self):
        # oracle: det(2,0,0,1) = 2, entries / sqrt(2)
        g = normalize(2, 0, 0, 1)
        r2 = math.sqrt(2)
        assert np.allclose(np.abs(g.matrix), [[r2, 0], [0, 1 / r2]])
        assert abs(g.a * g.d - g.b * g.c - 1) < 1e-12

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrix):
            normalize(1, 1, 1, 1)

    def test_sign_convention_deterministic(self):
        g = normalize(-3, 0, 0, -1 / 3)
        h = normalize(3, 0, 0, 1 / 3)
        assert np.allclose(g.matrix, h.matrix)


class TestApply:
    def test_identity_action(self):
        p = random_point()
        assert MoebiusMap.identity().apply(p) == p

    def test_hand_product(self):
        # diag(2, 1/2) [1:1] = [2 : 1/2] = [4:1]
        g = MoebiusMap.diagonal(2.0)
        assert g.apply(CP1Point(1, 1)) == CP1Point(4, 1)

    def test_inverse_roundtrip(self):
        for _ in range(20):
            g, p = random_map(), random_point()
            assert chordal_distance(g.apply(g.inverse().apply(p)), p) < 1e-10


class TestChordal:
    def test_basis_points(self):
        assert chordal_distance(E1, E2) == pytest.approx(1.0)

    def test_same_point(self):
        p = random_point()
        assert chordal_distance(p, p) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        # |1*0 - 1*1| / (sqrt(2) * 1) = 1/sqrt(2)
        assert chordal_distance(CP1Point(1, 1), E1) == pytest.approx(1 / math.sqrt(2))

    def test_antipodal_extreme(self):
        for _ in range(10):
            p = random_point()
            assert chordal_distance(p, p.antipode()) == pytest.approx(1.0)

    def test_unitary_invariance(self):
        for _ in range(20):
            k, p, q = random_unitary(), random_point(), random_point()
            assert chordal_distance(k.apply(p), k.apply(q)) == pytest.approx(
                chordal_distance(p, q), abs=1e-10)


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(MoebiusMap.identity()) == pytest.approx(1.0)

    def test_diagonal(self):
        assert operator_norm(MoebiusMap.diagonal(2.0)) == pytest.approx(2.0)

    def test_shear_golden_ratio(self):
        # eigenvalues of A^H A for (1,1,0,1) give s1 = (1+sqrt(5))/2
        g = MoebiusMap(1, 1, 0, 1)
        assert operator_norm(g) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-12)

    def test_against_numpy_svd(self):
        for _ in range(50):
            g = random_map()
            assert operator_norm(g) == pytest.approx(
                np.linalg.svd(g.matrix, compute_uv=False)[0], rel=1e-10)


class TestSphericalDerivative:
    def test_identity_everywhere(self):
        for _ in range(10):
            assert spherical_derivative(MoebiusMap.identity(), random_point()) == pytest.approx(1.0)

    def test_unitary_isometry(self):
        for _ in range(20):
            assert spherical_derivative(random_unitary(), random_point()) == pytest.approx(1.0, abs=1e-10)

    def test_norm_identity_at_maximizer(self):
        # sup_z |(g^-1)'(z)| = ||g||^2, attained where the Cartan frame says
        g = MoebiusMap.diagonal(2.0)
        got = max(spherical_derivative(g.inverse(), CP1Point.from_affine(z))
                  for z in [0, 1e9])
        assert got == pytest.approx(operator_norm(g) ** 2, rel=1e-8)

    def test_norm_identity_grid(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            g = random_map(rng)
            ginv = g.inverse()
            alpha, y, z, _ = contraction_data(g)
            best = spherical_derivative(ginv, z)  # analytic maximizer: z = k[e1]
            zs = np.tan(np.pi / 2 * rng.uniform(0, 1, 400)) * np.exp(
                2j * np.pi * rng.uniform(0, 1, 400))
            grid = max(spherical_derivative(ginv, CP1Point.from_affine(w)) for w in zs)
            assert max(best, grid) == pytest.approx(operator_norm(g) ** 2, rel=1e-6)

    def test_infinity_chart(self):
        g = MoebiusMap(1, 1, 0, 1)
        val = spherical_derivative(g, CP1Point.infinity())
        # z -> z+1 fixes infinity; derivative there is 1 in the spherical metric
        assert val == pytest.approx(1.0, rel=1e-10)


class TestCartan:
    def test_identity(self):
        t = cartan(MoebiusMap.identity())
        assert abs(t.alpha) == pytest.approx(1.0)
        assert np.allclose(t.reconstruct(), np.eye(2)) or np.allclose(t.reconstruct(), -np.eye(2))

    def test_diagonal(self):
        t = cartan(MoebiusMap.diagonal(2.0))
        assert abs(t.alpha) == pytest.approx(2.0)
        for m in (t.k.matrix, t.kprime.matrix):
            assert abs(m[0, 1]) < 1e-12 and abs(m[1, 0]) < 1e-12

    def test_shear(self):
        t = cartan(MoebiusMap(1, 1, 0, 1))
        assert abs(t.alpha) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-12)

    @staticmethod
    def check_triple(g, t):
        rec = t.reconstruct()
        ok = np.allclose(rec, g.matrix, atol=1e-10) or np.allclose(rec, -g.matrix, atol=1e-10)
        assert ok, f"reconstruction failed for {g}"
        assert t.k.is_unitary() and t.kprime.is_unitary()
        assert abs(t.alpha) == pytest.approx(operator_norm(g), rel=1e-10, abs=1e-10)
        assert abs(t.alpha) >= 1.0 - 1e-12

    def test_random_maps(self):
        for _ in range(200):
            g = random_map()
            self.check_triple(g, cartan(g))

    @settings(max_examples=200, deadline=None)
    @given(st.tuples(*[st.floats(-10, 10) for _ in range(8)]))
    def test_property_reconstruction(self, ent):
        a, b, c, d = ent[0] + 1j * ent[1], ent[2] + 1j * ent[3], ent[4] + 1j * ent[5], ent[6] + 1j * ent[7]
        if abs(a * d - b * c) < 1e-6:
            return
        g = MoebiusMap(a, b, c, d)
        self.check_triple(g, cartan(g))


class TestContractionData:
    def test_diagonal(self):
        alpha, y, z, degenerate = contraction_data(MoebiusMap.diagonal(2.0))
        assert abs(alpha) == pytest.approx(2.0)
        assert y == E2 and z == E1
        assert not degenerate

    def test_degenerate_flag(self):
        _, _, _, degenerate = contraction_data(MoebiusMap.identity())
        assert degenerate

    @pytest.mark.parametrize("n", [10_000])
    def test_diag_lemma_grid(self, n):
        # |alpha| = 2: complement of D([e2], 1/2) maps into D([e1], 1/2),
        # and D([e2], 1/4) maps out of D([e1], 1/2)
        a = MoebiusMap.diagonal(2.0)
        rng = np.random.default_rng(99)
        radii_out = rng.uniform(0.5, 1.0, n)
        for r, th in zip(radii_out, rng.uniform(0, 2 * np.pi, n)):
            w = r / math.sqrt(1 - r ** 2 + 1e-300) * np.exp(1j * th)
            p = CP1Point(w, 1.0)  # d(p, e2) = r >= 1/2
            assert chordal_distance(a.apply(p), E1) <= 0.5 + 1e-12
        radii_in = rng.uniform(0.0, 0.25, n)
        for r, th in zip(radii_in, rng.uniform(0, 2 * np.pi, n)):
            w = r / math.sqrt(1 - r ** 2) * np.exp(1j * th)
            p = CP1Point(w, 1.0)  # d(p, e2) = r <= 1/4
            assert chordal_distance(a.apply(p), E1) >= 0.5 - 1e-12

    def test_generic_map_containments(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            g = random_map(rng)
            alpha, y, z, degenerate = contraction_data(g)
            if degenerate:
                continue
            aa = abs(alpha)
            for p in chordal_circle(y, min(1 / aa * 1.0000001, 0.999), 50):
                assert chordal_distance(g.apply(p), z) <= 1 / aa * (1 + 1e-8)
            if 1 / aa ** 2 < 0.999:
                for p in chordal_circle(y, 1 / aa ** 2 * 0.9999999, 50):
                    assert chordal_distance(g.apply(p), z) >= 0.5 - 1e-8


class TestGroupLaws:
    def test_composition(self):
        for _ in range(50):
            g, h, p = random_map(), random_map(), random_point()
            assert chordal_distance((g @ h).apply(p), g.apply(h.apply(p))) < 1e-10

    def test_chordal_circle_exact(self):
        for _ in range(10):
            c = random_point()
            r = float(RNG.uniform(0.05, 0.95))
            for p in chordal_circle(c, r, 16):
                assert chordal_distance(p, c) == pytest.approx(r, abs=1e-12)
