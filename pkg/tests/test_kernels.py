from fractions import Fraction

import numpy as np
import pytest

from fiberthomae.abel import random_points
from fiberthomae.curve import point_on_sheet, group_elements
from fiberthomae.divisors import BetaVector, enumerate_admissible
from fiberthomae.errors import CoincidentPoints, InvalidInput
from fiberthomae.kernels import (FractionalPowerProduct, fay_bilinear_check, szego_algebraic, szego_c2_exact,
                                 szego_expansion_fit, szego_theta_genus1, theta_side_gradcheck, xi_expansion_fit,
                                 xi_form)

from conftest import bench_for


def admissible(nm, k=3):
    return list(enumerate_admissible(bench_for(*nm).curve))[:k]


def test_exponents_are_quarter_valued_and_balanced(bench22):
    for b in enumerate_admissible(bench22.curve):
        for v in group_elements(2):
            ex = FractionalPowerProduct(b, v).exponents
            assert set(ex) <= {Fraction(1, 4), Fraction(-1, 4)}
            assert sum(ex) == 0


@pytest.mark.parametrize("nm", [(1, 3), (2, 2)])
def test_expansion_contract(nm):
    b = bench_for(*nm)
    pts = random_points(b.curve, np.random.default_rng(42), 5)
    for beta in admissible(nm):
        for P in pts:
            fit = szego_expansion_fit(b.curve, beta, P)
            assert abs(fit.c0 - 1) < 1e-8
            assert abs(fit.c1) < 1e-8
            exact = szego_c2_exact(b.curve, beta, P.x)
            assert abs(fit.c2 - exact) < 1e-6 * abs(exact)


def test_c2_readings_adjudicated(bench13):
    P = random_points(bench13.curve, np.random.default_rng(0), 1)[0]
    beta = admissible((1, 3), 1)[0]
    fit = szego_expansion_fit(bench13.curve, beta, P).c2
    off = szego_c2_exact(bench13.curve, beta, P.x, "offdiagonal")
    assert szego_c2_exact(bench13.curve, beta, P.x, "double_sum") == 0
    assert abs(fit) > 1e-3
    assert abs(fit - off) > 1e-2 * abs(fit)


def test_regular_on_same_fiber():
    for nm in [(1, 3), (2, 2)]:
        b = bench_for(*nm)
        x = 1.3 + 2.1j
        P = point_on_sheet(b.curve, x)
        others = [point_on_sheet(b.curve, x, g) for g in group_elements(b.curve.n)[1:]]
        for beta in admissible(nm, 2):
            for Q in others:
                val = szego_algebraic(b.curve, beta, P, Q)
                assert np.isfinite(val)
                # approaching the fiber point gives the same finite value
                near = [abs(szego_algebraic(b.curve, beta, P, point_on_sheet(b.curve, x + d, Q_bits(b, Q))))
                        for d in (1e-3, 1e-5)]
                assert max(near) < 10 * (abs(val) + 1)


def Q_bits(b, Q):
    ref = np.sqrt(b.curve.f(Q.x))
    return tuple(0 if np.real(np.conj(r) * y) >= 0 else 1 for r, y in zip(ref, Q.y))


def test_diagonal_pole_has_unit_residue(bench13):
    beta = admissible((1, 3), 1)[0]
    P = point_on_sheet(bench13.curve, 0.7 + 1.9j)
    for d in (1e-4, -1e-4j):
        Q = point_on_sheet(bench13.curve, P.x + d)
        # (x_2 - x_1) F(P_1, P_2) -> 1 from either side
        assert szego_algebraic(bench13.curve, beta, Q, P) * (-d) == pytest.approx(1, abs=1e-3)
        assert szego_algebraic(bench13.curve, beta, P, Q) * d == pytest.approx(1, abs=1e-3)
    with pytest.raises(CoincidentPoints):
        szego_algebraic(bench13.curve, beta, P, P)


def test_automorphism_preserves_modulus(bench22):
    curve = bench22.curve
    P = point_on_sheet(curve, 0.4 + 1.6j, (0, 1))
    Q = point_on_sheet(curve, -1.1 - 0.8j, (1, 1))
    for beta in admissible((2, 2), 2):
        ref = abs(szego_algebraic(curve, beta, P, Q))
        for g in group_elements(2):
            gP = type(P)(P.x, tuple(-y if s else y for y, s in zip(P.y, g)))
            gQ = type(Q)(Q.x, tuple(-y if s else y for y, s in zip(Q.y, g)))
            assert abs(abs(szego_algebraic(curve, beta, gP, gQ)) - ref) < 1e-9 * ref


def test_genus_one_theta_oracle(bench12):
    curve = bench12.curve
    P = point_on_sheet(curve, 0.5 + 1.2j)
    Q = point_on_sheet(curve, -0.8 - 0.6j, (1,))
    for beta in enumerate_admissible(curve):
        F = szego_algebraic(curve, beta, P, Q)
        S2 = szego_theta_genus1(curve, bench12.periods, beta, P, Q, abel=bench12.abel)
        assert abs(F * F - S2) < 1e-6 * abs(S2)


def test_genus_one_oracle_needs_genus_one(bench13):
    P = point_on_sheet(bench13.curve, 0.5 + 1.2j)
    with pytest.raises(InvalidInput):
        szego_theta_genus1(bench13.curve, bench13.periods, admissible((1, 3), 1)[0], P, P)


def test_inadmissible_beta_rejected(bench13):
    P = point_on_sheet(bench13.curve, 0.5 + 1.2j)
    Q = point_on_sheet(bench13.curve, 1.5 + 1.2j)
    with pytest.raises(InvalidInput):
        szego_algebraic(bench13.curve, [[1, 1, 1, 1, 0, 0]], P, Q)


def test_theta_gradient_vanishes(bench13):
    for beta in enumerate_admissible(bench13.curve):
        assert theta_side_gradcheck(bench13.curve, bench13.periods, beta, abel=bench13.abel) < 1e-6


def test_xi_expansion(bench22):
    P = point_on_sheet(bench22.curve, 0.3 - 1.7j, (1, 0))
    fit = xi_expansion_fit(bench22.curve, P)
    assert abs(fit.c0 - 1) < 1e-8
    assert abs(fit.c1) < 1e-8


def test_xi_regular_on_same_fiber(bench22):
    x = 0.3 - 1.7j
    P = point_on_sheet(bench22.curve, x)
    for g in group_elements(2)[1:]:
        assert np.isfinite(xi_form(bench22.curve, P, point_on_sheet(bench22.curve, x, g)))
    with pytest.raises(CoincidentPoints):
        xi_form(bench22.curve, P, P)


def test_fay_product_genus_two(bench13):
    for beta in admissible((1, 3)):
        for P in random_points(bench13.curve, np.random.default_rng(9), 3):
            r = fay_bilinear_check(bench13.curve, bench13.periods, beta, P, abel=bench13.abel)
            assert r["residual_c0"] < 1e-8 and r["residual_c1"] < 1e-8
            assert r["residual_c2"] < 1e-6


def test_fay_product_pair_sum_is_off_by_two_to_the_one_minus_n(bench22):
    # the product of the two expansions has c2 = 2 * c2(F); the literal pair
    # sum with unnormalized q is 2^(n-1) times that
    for beta in admissible((2, 2), 2):
        for P in random_points(bench22.curve, np.random.default_rng(1), 2):
            r = fay_bilinear_check(bench22.curve, bench22.periods, beta, P, abel=bench22.abel)
            assert abs(r["c2"] / r["c2_exact"] - 0.5) < 1e-9
            fit = szego_expansion_fit(bench22.curve, beta, P)
            assert abs(r["c2"] - 2 * fit.c2) < 1e-9 * abs(r["c2"])


def test_complement_realizes_minus_e(bench22):
    beta = BetaVector.from_any(bench22.curve, admissible((2, 2), 1)[0])
    P = point_on_sheet(bench22.curve, 0.3 - 1.7j)
    r = fay_bilinear_check(bench22.curve, bench22.periods, beta, P, abel=bench22.abel)
    assert r["complement_lattice_distance"] < 1e-10
