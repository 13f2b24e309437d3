import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multifinsler.finsler import TangentSample
from multifinsler.measure import (
    DegeneratePairError,
    EllipticPair,
    busemann_hausdorff,
    complete_elliptic,
    complete_elliptic_e,
    complete_elliptic_k,
    elliptic_e_quadrature,
    elliptic_k_quadrature,
    holmes_thompson,
    indicatrix_reduction_check,
    lambda_pair,
    pencil_integrals,
)

from conftest import const_field, field, random_spd, space_of

# frozen from the defining-integral quadrature oracle
K_SQRT3_2 = 2.1565156474996432
E_SQRT3_2 = 1.2110560275684594

ORIGIN = [0.0, 0.0]


class TestLambdaPair:
    def test_identity_vs_diagonal(self):
        p = lambda_pair(np.eye(2), np.diag([4.0, 1.0]))
        assert p.lam_plus == pytest.approx(1.0, rel=1e-14)
        assert p.lam_minus == pytest.approx(0.25, rel=1e-14)

    def test_equal_matrices(self):
        a = np.array([[2.0, 0.3], [0.3, 1.0]])
        p = lambda_pair(a, a)
        assert p.lam_plus == pytest.approx(1.0, rel=1e-12)
        assert p.lam_minus == pytest.approx(1.0, rel=1e-12)
        assert p.modulus == pytest.approx(0.0, abs=1e-7)

    def test_swap_inverts_roots(self):
        p = lambda_pair(np.eye(2), np.diag([4.0, 1.0]))
        q = lambda_pair(np.diag([4.0, 1.0]), np.eye(2))
        assert q.lam_plus == pytest.approx(4.0, rel=1e-14)
        assert q.lam_minus == pytest.approx(1.0, rel=1e-14)
        assert q.lam_minus / q.lam_plus == pytest.approx(p.lam_minus / p.lam_plus, rel=1e-12)

    def test_pencil_determinant_vanishes(self):
        rng = np.random.default_rng(40)
        for _ in range(50):
            a, b = random_spd(rng), random_spd(rng)
            p = lambda_pair(a, b)
            scale = abs(np.linalg.det(a))
            assert abs(np.linalg.det(a - p.lam_plus * b)) <= 1e-10 * scale * (1 + p.lam_plus**2)
            assert abs(np.linalg.det(a - p.lam_minus * b)) <= 1e-10 * scale * (1 + p.lam_minus**2)

    def test_second_display_form_agrees(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            a, b = random_spd(rng), random_spd(rng)
            p = lambda_pair(a, b)
            x = np.linalg.solve(b, a)
            e1 = float(np.trace(x))
            e2 = float(0.5 * (e1 * e1 - np.trace(x @ x)))
            disc = math.sqrt(max(0.0, e1 * e1 - 4 * e2))
            lp, lm = (e1 + disc) / 2.0, (e1 - disc) / 2.0
            assert lp == pytest.approx(p.lam_plus, rel=1e-12)
            assert lm == pytest.approx(p.lam_minus, rel=1e-12)

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            EllipticPair(1.0, 2.0)

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            lambda_pair(np.eye(3), np.eye(3))


class TestCompleteElliptic:
    def test_zero_modulus(self):
        k, e = complete_elliptic(0.0)
        assert abs(k - math.pi / 2) <= 1e-14
        assert abs(e - math.pi / 2) <= 1e-14

    def test_unit_modulus_second_kind(self):
        assert abs(complete_elliptic_e(1.0) - 1.0) <= 1e-14

    def test_unit_modulus_first_kind_rejected(self):
        with pytest.raises(ValueError):
            complete_elliptic_k(1.0)

    def test_frozen_values(self):
        k, e = complete_elliptic(math.sqrt(3) / 2)
        assert k == pytest.approx(K_SQRT3_2, abs=1e-14)
        assert e == pytest.approx(E_SQRT3_2, abs=1e-14)

    @pytest.mark.parametrize("k", [0.0, 0.1, 0.5, math.sqrt(3) / 2, 0.99, 0.99999])
    def test_agm_matches_defining_integrals(self, k):
        kk, ee = complete_elliptic(k)
        assert abs(kk - elliptic_k_quadrature(k)) <= 1e-12
        assert abs(ee - elliptic_e_quadrature(k)) <= 1e-12

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            complete_elliptic_k(-0.1)
        with pytest.raises(ValueError):
            complete_elliptic_e(1.1)

    @given(st.floats(min_value=0.0, max_value=0.999))
    @settings(max_examples=80, deadline=None, derandomize=True)
    def test_monotonicity_property(self, k):
        # K grows and E shrinks with the modulus
        kk, ee = complete_elliptic(k)
        assert kk >= math.pi / 2 - 1e-15
        assert 1.0 - 1e-15 <= ee <= math.pi / 2 + 1e-15


class TestPencilIntegrals:
    def test_equal_matrices_reduce_to_circle(self):
        a = np.array([[2.0, 0.5], [0.5, 1.5]])
        first, second = pencil_integrals(a, a, "closed")
        assert first == pytest.approx(math.pi / math.sqrt(np.linalg.det(a)), rel=1e-12)

    def test_reference_pair(self):
        first, second = pencil_integrals(np.eye(2), np.diag([4.0, 1.0]), "closed")
        assert first == pytest.approx(K_SQRT3_2, rel=1e-13)
        assert second == pytest.approx(E_SQRT3_2, rel=1e-13)

    def test_closed_vs_quadrature_random(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(100):
            a, b = random_spd(rng), random_spd(rng)
            fc, sc = pencil_integrals(a, b, "closed")
            fq, sq = pencil_integrals(a, b, "quadrature")
            worst = max(worst, abs(fc - fq) / fc, abs(sc - sq) / sc)
        assert worst <= 1e-9

    def test_first_integral_symmetric(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            a, b = random_spd(rng), random_spd(rng)
            f1, _ = pencil_integrals(a, b, "closed")
            f2, _ = pencil_integrals(b, a, "closed")
            assert abs(f1 - f2) <= 1e-12 * f1

    def test_second_display_of_second_integral(self):
        rng = np.random.default_rng(44)
        for _ in range(30):
            a, b = random_spd(rng), random_spd(rng)
            p = lambda_pair(a, b)
            _, second = pencil_integrals(a, b, "closed")
            alt = 2.0 * math.sqrt(p.lam_plus / np.linalg.det(b)) * complete_elliptic_e(p.modulus)
            assert abs(second - alt) <= 1e-12 * second

    def test_degenerate_continuity(self):
        # B -> A: closed forms approach the circle values, matching quadrature
        a = np.array([[1.4, 0.2], [0.2, 0.9]])
        det_a = float(np.linalg.det(a))
        for s in (1e-2, 1e-4, 1e-6):
            b = a + s * np.array([[0.5, -0.1], [-0.1, 0.3]])
            fc, sc = pencil_integrals(a, b, "closed")
            fq, sq = pencil_integrals(a, b, "quadrature")
            assert abs(fc - fq) <= 1e-7 * fc
            assert abs(sc - sq) <= 1e-7 * sc
        assert fc == pytest.approx(math.pi / math.sqrt(det_a), rel=1e-4)


class TestHolmesThompson:
    def test_single_metric_is_volume_density(self):
        a = np.array([[2.0, 0.4], [0.4, 1.5]])
        sp = space_of(const_field("a", a))
        rep = holmes_thompson(sp, ORIGIN, "closed")
        assert rep.value == pytest.approx(math.sqrt(np.linalg.det(a)), rel=1e-12)
        assert rep.cross_terms == ()

    def test_doubled_identity(self):
        sp = space_of(const_field("a", np.eye(2)), const_field("b", np.eye(2)))
        for mode in ("closed", "disc_oracle"):
            assert holmes_thompson(sp, ORIGIN, mode).value == pytest.approx(4.0, rel=1e-10)

    def test_reference_bimetric_anchor(self, bi_const):
        # disc oracle fixes the anchor; closed form must match it and the
        # elliptic expression 3 + (8/pi) E(sqrt(3)/2)
        closed = holmes_thompson(bi_const, ORIGIN, "closed")
        disc = holmes_thompson(bi_const, ORIGIN, "disc_oracle")
        anchor = 3.0 + (8.0 / math.pi) * E_SQRT3_2
        assert disc.value == pytest.approx(anchor, rel=1e-10)
        assert closed.value == pytest.approx(disc.value, rel=1e-10)

    def test_three_modes_agree(self, bi_x):
        x = [0.4, -0.2]
        vals = [holmes_thompson(bi_x, x, m).value for m in ("closed", "disc_oracle", "circle_oracle")]
        scale = abs(vals[0])
        assert abs(vals[0] - vals[1]) / scale < 1e-6
        assert abs(vals[0] - vals[2]) / scale < 1e-6

    def test_trimetric_modes_agree(self, tri_space):
        x = [0.1, 0.3]
        closed = holmes_thompson(tri_space, x, "closed").value
        disc = holmes_thompson(tri_space, x, "disc_oracle").value
        assert abs(closed - disc) / closed < 1e-6

    def test_breakdown_sums_to_total(self, bi_const):
        rep = holmes_thompson(bi_const, ORIGIN, "closed")
        total = sum(rep.diagonal_terms) + sum(t["term"] for t in rep.cross_terms)
        assert abs(total - rep.value) <= 1e-14 * abs(rep.value)

    def test_proportional_pair_reduces_to_riemannian(self, prop_space):
        x = [0.6, -0.1]
        phi = 1.0 + x[0] ** 2
        expect = (1.0 + math.sqrt(phi)) ** 2  # det alpha = 1
        ht = holmes_thompson(prop_space, x, "closed").value
        assert ht == pytest.approx(expect, rel=1e-8)
        assert busemann_hausdorff(prop_space, x).value == pytest.approx(expect, rel=1e-8)


class TestBusemannHausdorff:
    def test_single_metric(self):
        a = np.array([[2.0, 0.4], [0.4, 1.5]])
        sp = space_of(const_field("a", a))
        rep = busemann_hausdorff(sp, ORIGIN)
        assert rep.value == pytest.approx(math.sqrt(np.linalg.det(a)), rel=1e-12)

    def test_equal_pair_degenerates_and_falls_back(self):
        sp = space_of(const_field("a", np.eye(2)), const_field("b", np.eye(2)))
        with pytest.raises(DegeneratePairError):
            busemann_hausdorff(sp, ORIGIN, "closed_bimetric")
        rep = busemann_hausdorff(sp, ORIGIN, "auto")
        assert rep.fallback
        assert rep.value == pytest.approx(4.0, rel=1e-12)

    def test_singular_difference_routes_to_quadrature(self, bi_const):
        # alpha - beta = diag(-3, 0) is singular: the closed split diverges
        with pytest.raises(DegeneratePairError):
            busemann_hausdorff(bi_const, ORIGIN, "closed_bimetric")
        rep = busemann_hausdorff(bi_const, ORIGIN, "auto")
        assert rep.fallback and rep.value > 0

    def test_closed_vs_quadrature_definite_pairs(self):
        rng = np.random.default_rng(45)
        checked = 0
        worst = 0.0
        while checked < 30:
            a = random_spd(rng)
            b = a + random_spd(rng)  # b - a positive definite
            sp = space_of(const_field("a", a), const_field("b", b))
            try:
                c = busemann_hausdorff(sp, ORIGIN, "closed_bimetric").value
            except DegeneratePairError:
                continue
            q = busemann_hausdorff(sp, ORIGIN, "quadrature").value
            worst = max(worst, abs(c - q) / q)
            checked += 1
        assert worst < 1e-6

    def test_breakdown_consistency(self):
        a = np.array([[5.0, 1.0], [1.0, 4.0]])
        sp = space_of(const_field("a", a), const_field("b", np.eye(2)))
        rep = busemann_hausdorff(sp, ORIGIN, "closed_bimetric")
        assert 1.0 / rep.value == pytest.approx(rep.parts["indicatrix_area_over_pi"], rel=1e-14)
        assert rep.parts["trace_part"] + rep.parts["elliptic_part"] == pytest.approx(
            rep.parts["indicatrix_area_over_pi"], rel=1e-14
        )

    def test_proportional_with_x_dependent_factor(self, prop_space):
        x = [0.5, 0.2]
        rep = busemann_hausdorff(prop_space, x, "auto")
        expect = (1.0 + math.sqrt(1.0 + 0.25)) ** 2
        assert rep.fallback
        assert rep.value == pytest.approx(expect, rel=1e-10)


class TestIndicatrixReduction:
    def test_riemannian_unit_weight(self):
        a = np.array([[2.0, 0.4], [0.4, 1.5]])
        sp = space_of(const_field("a", a))
        r = indicatrix_reduction_check(sp, ORIGIN, "one")
        expect = math.pi / math.sqrt(np.linalg.det(a))
        assert r["circle"] == pytest.approx(expect, rel=1e-10)
        assert r["residual"] <= 1e-8 * (1.0 + abs(r["circle"]))

    def test_doubled_identity_with_det_weight(self):
        sp = space_of(const_field("a", np.eye(2)), const_field("b", np.eye(2)))
        r = indicatrix_reduction_check(sp, ORIGIN, "det")
        assert r["disc"] == pytest.approx(4.0 * math.pi, rel=1e-9)
        assert r["residual"] <= 1e-8 * (1.0 + abs(r["circle"]))

    @pytest.mark.parametrize("weight", ["one", "det"])
    def test_bimetric(self, bi_const, weight):
        r = indicatrix_reduction_check(bi_const, ORIGIN, weight)
        assert r["residual"] <= 1e-8 * (1.0 + abs(r["circle"]))

    def test_unit_circle_norm_identity(self, bi_const):
        # per-sector circle integral of 1/F_mu^2 equals pi / sqrt(det a_mu)
        from scipy import integrate

        a_mu, _, a_det = bi_const.metric_values(np.array(ORIGIN))
        for k in range(2):
            val, _ = integrate.quad(
                lambda th: 1.0
                / float(np.array([math.cos(th), math.sin(th)]) @ a_mu[k] @ np.array([math.cos(th), math.sin(th)])),
                0.0, 2.0 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=300,
            )
            assert 0.5 * val == pytest.approx(math.pi / math.sqrt(a_det[k]), rel=1e-10)


def test_circle_norm_weighted_integral_vs_closed_form():
    # integral over the unit circle of F_nu / F_mu^3 against the elliptic form
    from scipy import integrate

    rng = np.random.default_rng(46)
    worst = 0.0
    for _ in range(20):
        a_mu, a_nu = random_spd(rng), random_spd(rng)

        def integrand(th):
            u = np.array([math.cos(th), math.sin(th)])
            return math.sqrt(float(u @ a_nu @ u)) / float(u @ a_mu @ u) ** 1.5

        quad_val, _ = integrate.quad(integrand, 0.0, 2.0 * math.pi,
                                     epsabs=1e-12, epsrel=1e-12, limit=300)
        quad_val *= 0.5
        pair = lambda_pair(a_nu, a_mu)
        closed = 2.0 * math.sqrt(pair.lam_plus / np.linalg.det(a_mu)) * complete_elliptic_e(pair.modulus)
        worst = max(worst, abs(quad_val - closed))
    assert worst <= 1e-8
