"""Tests for developing maps, monodromy, and representation classification."""

import cmath
import math

import numpy as np
import pytest

from spherewalk.errors import (
    BranchPoint, OutsideDisc, PunctureHit, UnknownSymbol,
)
from spherewalk.fls import build_gamma2_model
from spherewalk.moebius import CP1Point, MoebiusMap, chordal_distance
from spherewalk.structures import (
    DevelopingStructure, classify_representation, continue_along,
    elementarity_verdict, equivariance_residual, evaluate, fixed_points,
    germ_compose, monodromy_of, structure_from_descriptor,
)

FUCH = DevelopingStructure("identity_fuchsian")
TWIST_G = MoebiusMap(1.1, 0.2 + 0.1j, 0.2 - 0.1j, 1.1)
TWISTED = DevelopingStructure("moebius_twisted", twist=TWIST_G)
LOG = DevelopingStructure("puncture_log")


def disc_points(rng, size):
    r = 0.85 * np.sqrt(rng.random(size))
    th = 2.0 * math.pi * rng.random(size)
    return r * np.exp(1j * th)


class TestConstruction:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            DevelopingStructure("grafted")

    def test_twist_required(self):
        with pytest.raises(ValueError):
            DevelopingStructure("moebius_twisted")

    def test_perturbation_order_required(self):
        with pytest.raises(ValueError):
            DevelopingStructure("puncture_log_perturbed", n=0)

    def test_domains(self):
        assert FUCH.domain == "disc"
        assert LOG.domain == "punctured_disc"

    def test_descriptor_round_trip(self):
        for dev in (FUCH, TWISTED, LOG,
                    DevelopingStructure("puncture_log_perturbed", n=3)):
            back = structure_from_descriptor(dev.descriptor)
            assert back.kind == dev.kind
            assert back.n == dev.n
            if dev.twist is not None:
                assert np.allclose(back.twist.matrix, dev.twist.matrix)


class TestEvaluate:
    def test_inclusion_at_zero(self):
        assert evaluate(FUCH, 0.0) == CP1Point.from_affine(0.0)

    def test_inclusion_generic(self):
        z = 0.3 - 0.4j
        assert abs(evaluate(FUCH, z).to_affine() - z) < 1e-15

    def test_twisted_post_composes(self):
        z = 0.25 + 0.1j
        expect = TWIST_G.apply_affine(z)
        assert abs(evaluate(TWISTED, z).to_affine() - expect) < 1e-12

    def test_log_principal_value(self):
        val = evaluate(LOG, math.exp(-2.0 * math.pi)).to_affine()
        assert abs(val - 1j) < 1e-12

    def test_log_winding_shifts_by_one(self):
        z = 0.2 + 0.3j
        v0 = evaluate(LOG, z, winding=0).to_affine()
        v1 = evaluate(LOG, z, winding=1).to_affine()
        assert abs(v1 - v0 - 1.0) < 1e-12

    def test_perturbed_is_log_plus_reciprocal(self):
        dev = DevelopingStructure("puncture_log_perturbed", n=1)
        z = 0.3 + 0.2j
        diff = evaluate(dev, z).to_affine() - evaluate(LOG, z).to_affine()
        assert abs(diff - 1.0 / z) < 1e-12

    def test_puncture_guard(self):
        with pytest.raises(PunctureHit):
            evaluate(LOG, 1e-13)

    def test_perturbed_diverges_radially(self):
        dev = DevelopingStructure("puncture_log_perturbed", n=2)
        theta = 0.7
        radii = np.logspace(-1, -5, 9)
        mags = [abs(evaluate(dev, r * cmath.exp(1j * theta)).to_affine())
                for r in radii]
        assert all(b > a for a, b in zip(mags, mags[1:]))
        assert mags[-1] > 1e9


class TestContinuation:
    def loop(self, rounds=1.0, n=400, r=0.5):
        th = np.linspace(0.0, 2.0 * math.pi * rounds, n)
        return r * np.exp(1j * th)

    def test_full_loop_adds_one(self):
        pts = self.loop()
        vals, w = continue_along(LOG, pts)
        assert w == 1
        assert abs(vals[-1] - vals[0] - 1.0) < 1e-12

    def test_m_loops_add_m(self):
        for m in (2, 3):
            vals, w = continue_along(LOG, self.loop(rounds=m, n=400 * m))
            assert w == m
            assert abs(vals[-1] - vals[0] - m) < 1e-12

    def test_reverse_loop_subtracts_one(self):
        vals, w = continue_along(LOG, np.conj(self.loop()))
        assert w == -1
        assert abs(vals[-1] - vals[0] + 1.0) < 1e-12

    def test_no_crossing_no_winding(self):
        th = np.linspace(-1.0, 1.0, 50)
        vals, w = continue_along(LOG, 0.4 * np.exp(1j * th))
        assert w == 0

    def test_continuation_is_continuous(self):
        pts = self.loop(rounds=2.5, n=2000)
        vals, _ = continue_along(LOG, pts)
        steps = np.abs(np.diff(np.asarray(vals)))
        assert steps.max() < 0.05

    def test_perturbed_monodromy_relation(self):
        dev = DevelopingStructure("puncture_log_perturbed", n=1)
        vals, w = continue_along(dev, self.loop())
        assert w == 1
        # 1/z is single valued, so the shift is still exactly 1
        assert abs(vals[-1] - vals[0] - 1.0) < 1e-12

    def test_disc_kind_rejected(self):
        with pytest.raises(ValueError):
            continue_along(FUCH, [0.1, 0.2])


class TestMonodromy:
    def test_empty_word_identity(self):
        for dev in (FUCH, LOG):
            m = monodromy_of(dev, "").matrix
            assert np.allclose(m, np.eye(2)) or np.allclose(m, -np.eye(2))

    def test_puncture_loop_is_translation(self):
        m = monodromy_of(LOG, "L").matrix
        assert np.allclose(m, [[1, 1], [0, 1]]) or \
            np.allclose(m, [[-1, -1], [0, -1]])

    def test_puncture_word_counts_loops(self):
        m = monodromy_of(LOG, "LLl").matrix
        tgt = np.array([[1, 1], [0, 1]], dtype=complex)
        assert np.allclose(m, tgt) or np.allclose(m, -tgt)

    def test_fuchsian_word_is_generator_product(self):
        model = build_gamma2_model(0)
        expect = (model.generators["T"] @ model.generators["S"]).matrix
        got = monodromy_of(FUCH, "TS").matrix
        assert np.allclose(got, expect) or np.allclose(got, -expect)

    def test_twisted_conjugates(self):
        base = monodromy_of(FUCH, "TsS" "T")
        got = monodromy_of(TWISTED, "TsST")
        expect = (TWIST_G @ base @ TWIST_G.inverse()).matrix
        assert np.allclose(got.matrix, expect) or \
            np.allclose(got.matrix, -expect)

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbol):
            monodromy_of(FUCH, "TX")
        with pytest.raises(UnknownSymbol):
            monodromy_of(LOG, "T")


class TestEquivariance:
    def pairs(self, rng, count):
        letters = np.array(list("TtSs"))
        out = []
        for z in disc_points(rng, count):
            k = int(rng.integers(1, 5))
            out.append(("".join(rng.choice(letters, size=k)), z))
        return out

    def test_identity_fuchsian_thousand_pairs(self):
        rng = np.random.default_rng(11)
        assert equivariance_residual(FUCH, self.pairs(rng, 1000)) < 1e-8

    def test_twisted_thousand_pairs(self):
        rng = np.random.default_rng(12)
        assert equivariance_residual(TWISTED, self.pairs(rng, 1000)) < 1e-8

    def test_puncture_kinds(self):
        rng = np.random.default_rng(13)
        for dev in (LOG, DevelopingStructure("puncture_log_perturbed", n=1)):
            pairs = []
            for z in disc_points(rng, 200):
                word = "".join(
                    np.random.default_rng(int(abs(z) * 1e6)).choice(
                        ["L", "l"], size=3))
                pairs.append((word, 0.1 + 0.5 * z))
            assert equivariance_residual(dev, pairs) < 1e-8


class TestFixedPoints:
    def test_identity_has_none(self):
        assert fixed_points(MoebiusMap.identity()) == []
        assert fixed_points(MoebiusMap(-1, 0, 0, -1)) == []

    def test_diagonal(self):
        pts = fixed_points(MoebiusMap(2, 0, 0, 0.5))
        affine = {p.to_affine() if not p.is_infinity else None for p in pts}
        assert affine == {0.0, None}

    def test_parabolic_single_point(self):
        pts = fixed_points(MoebiusMap(1, 1, 0, 1))
        assert len(pts) == 1 and pts[0].is_infinity

    def test_generic_pair_is_fixed(self):
        g = MoebiusMap(2, 1j, 0.5, 1 + 1j)
        for p in fixed_points(g):
            assert chordal_distance(g.apply(p), p) < 1e-9


class TestClassification:
    def test_gamma2_cusps_parabolic_nonelementary(self):
        rep = classify_representation(FUCH, ["T", "S", "Ts"])
        for _, tr2, verdict in rep.parabolic_cusps:
            assert verdict == "parabolic"
            assert abs(tr2 - 4.0) < 1e-8
        assert rep.elementary_verdict == "nonelementary"

    def test_non_parabolic_word_reported(self):
        rep = classify_representation(FUCH, ["TS"])
        _, tr2, verdict = rep.parabolic_cusps[0]
        assert verdict == "non_parabolic"
        assert abs(tr2 - 36.0) < 1e-8

    def test_identity_word_not_parabolic(self):
        rep = classify_representation(FUCH, ["Tt"])
        assert rep.parabolic_cusps[0][2] == "identity"

    def test_common_fixed_points(self):
        assert elementarity_verdict(
            [MoebiusMap(2, 0, 0, 0.5), MoebiusMap(3, 0, 0, 1 / 3)]) == \
            "common_fixed_points"

    def test_finite_orbit_two_points(self):
        swap = MoebiusMap(0, 1, 1, 0)
        assert elementarity_verdict(
            [MoebiusMap(2, 0, 0, 0.5), swap]) == "finite_orbit_leq2"

    def test_two_rotations_psu2(self):
        r1 = MoebiusMap(cmath.exp(0.3j), 0, 0, cmath.exp(-0.3j))
        c, s = math.cos(0.4), math.sin(0.4)
        r2 = MoebiusMap(c, s, -s, c)
        assert elementarity_verdict([r1, r2]) == "psu2_conjugate"

    def test_trivial_group_inconclusive(self):
        assert elementarity_verdict([MoebiusMap.identity()]) == "inconclusive"

    def test_conjugation_covariance(self):
        rng = np.random.default_rng(21)
        cases = [
            [MoebiusMap(2, 0, 0, 0.5), MoebiusMap(3, 0, 0, 1 / 3)],
            [MoebiusMap(2, 0, 0, 0.5), MoebiusMap(0, 1, 1, 0)],
            [MoebiusMap(cmath.exp(0.3j), 0, 0, cmath.exp(-0.3j)),
             MoebiusMap(math.cos(0.4), math.sin(0.4),
                        -math.sin(0.4), math.cos(0.4))],
            [monodromy_of(FUCH, "T"), monodromy_of(FUCH, "S")],
        ]
        for gens in cases:
            base = elementarity_verdict(gens)
            for _ in range(3):
                e = rng.standard_normal(8)
                g = MoebiusMap(complex(e[0], e[1]), complex(e[2], e[3]),
                               complex(e[4], e[5]), complex(1 + e[6], e[7]))
                conj = [g @ h @ g.inverse() for h in gens]
                assert elementarity_verdict(conj) == base

    def test_report_json(self):
        rep = classify_representation(FUCH, ["T"])
        import json
        data = json.loads(rep.to_json())
        assert data["elementary_verdict"] == "nonelementary"
        assert data["parabolic_cusps"][0]["word"] == "T"


class TestGerms:
    def test_identity_pair(self):
        germ = germ_compose(FUCH, FUCH, 0.2 + 0.1j)
        z = 0.2 + 0.1j
        assert abs(germ(z) - z) < 1e-14
        assert germ.radius > 0.0

    def test_twisted_gives_twist(self):
        germ = germ_compose(FUCH, TWISTED, 0.1)
        for dz in (0.0, 0.01, 0.01j):
            z = 0.1 + dz
            assert abs(germ(z) - TWIST_G.apply_affine(z)) < 1e-12

    def test_inverse_direction(self):
        germ = germ_compose(TWISTED, FUCH, 0.1)
        expect = TWIST_G.inverse().apply_affine(0.1)
        assert abs(germ(0.1) - expect) < 1e-12

    def test_out_of_image(self):
        far = DevelopingStructure("moebius_twisted",
                                  twist=MoebiusMap(1, 5, 0, 1))
        with pytest.raises(OutsideDisc):
            germ_compose(far, FUCH, 0.0)

    def test_base_point_in_open_disc(self):
        with pytest.raises(OutsideDisc):
            germ_compose(FUCH, FUCH, 1.0)

    def test_validity_radius_enforced(self):
        germ = germ_compose(FUCH, FUCH, 0.0)
        with pytest.raises(OutsideDisc):
            germ(germ.center + 2.0 * germ.radius)

    def test_puncture_kind_rejected(self):
        with pytest.raises(BranchPoint):
            germ_compose(LOG, FUCH, 0.1)

    def test_pole_is_branch_point(self):
        # twist with a pole inside the disc makes D0^{-1} o D1 singular
        pole = DevelopingStructure("moebius_twisted",
                                   twist=MoebiusMap(0.5, 1, 1, 0.5).inverse())
        with pytest.raises((BranchPoint, OutsideDisc)):
            germ_compose(pole, FUCH, -0.5)
