import itertools
import math

import numpy as np
import pytest

from fiberthomae.curve import (AutomorphismElement, DifferentialIndex, branch_local_coefficient,
                               enumerate_differential_basis, evaluate_differential, genus,
                               group_elements, point_on_sheet, validate_curve)
from fiberthomae.errors import (BadShape, BranchPointEvaluation, DuplicateBranchPoint,
                                InvalidCurve, UnsupportedFactor)


def test_elliptic_curve_is_valid_with_genus_one():
    c = validate_curve(1, 2, [[-1, 1, -2, 2]])
    assert c.genus() == 1


def test_duplicate_branch_point_rejected():
    with pytest.raises(DuplicateBranchPoint):
        validate_curve(1, 2, [[-1, 1, 1, 2]])


def test_duplicate_across_factors_rejected():
    with pytest.raises(DuplicateBranchPoint):
        validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1, 1.5, 3]])


def test_two_factor_curve_has_genus_five():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    assert c.genus() == 5


def test_bad_shape_lists_every_problem():
    with pytest.raises(BadShape) as exc:
        validate_curve(2, 2, [[1, 2, 3], [4, 5, 6, 7, 8]])
    assert len(exc.value.violations) == 2


def test_non_numeric_and_huge_branch_points_rejected():
    with pytest.raises(InvalidCurve):
        validate_curve(1, 1, [["a", 1]])
    with pytest.raises(BadShape):
        validate_curve(1, 1, [[0, 1e9]])


@pytest.mark.parametrize("n,m,g", [(1, 3, 2), (2, 2, 5), (1, 1, 0), (1, 2, 1), (3, 2, 17)])
def test_genus_formula(n, m, g):
    c = validate_curve(n, m, np.arange(2 * m * n).reshape(n, 2 * m) + 0.5j)
    assert genus(c) == g


def test_basis_for_genus_two():
    c = validate_curve(1, 3, [[1, 2, 3, 4, 5, 6]])
    assert enumerate_differential_basis(c) == [DifferentialIndex((1,), 0), DifferentialIndex((1,), 1)]


def test_basis_for_two_factors_in_counter_order():
    c = validate_curve(2, 2, [[1, 2, 3, 4], [5, 6, 7, 8]])
    got = [(d.v, d.l) for d in enumerate_differential_basis(c)]
    # binary-counter order with the first factor as the lowest bit
    assert got == [((1, 0), 0), ((0, 1), 0), ((1, 1), 0), ((1, 1), 1), ((1, 1), 2)]


def test_rational_case_has_empty_basis():
    assert enumerate_differential_basis(validate_curve(1, 1, [[0, 1]])) == []


def test_basis_count_identity_exhaustive():
    for n in range(1, 5):
        for m in range(1, 6):
            lhs = sum(math.comb(n, s) * (m * s - 1) for s in range(1, n + 1))
            assert lhs == (m * n - 2) * 2 ** (n - 1) + 1


def test_basis_size_equals_genus():
    rng = np.random.default_rng(3)
    for n, m in itertools.product(range(1, 4), range(1, 4)):
        c = validate_curve(n, m, rng.normal(size=(n, 2 * m)))
        assert len(enumerate_differential_basis(c)) == c.genus()


def test_points_satisfy_the_equations():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    for sheet in group_elements(2):
        assert point_on_sheet(c, 0.3 + 0.7j, sheet).on_curve(c)


def test_automorphisms_are_commuting_involutions():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    p = point_on_sheet(c, 0.4 - 0.2j)
    elems = [AutomorphismElement(g) for g in group_elements(2)]
    for a in elems:
        assert a.apply(a.apply(p)) == p
        for b in elems:
            assert a.apply(b.apply(p)) == b.apply(a.apply(p))
            assert a.compose(b) == b.compose(a)


def test_evaluate_differential_at_regular_point():
    c = validate_curve(1, 2, [[-1, 1, -2, 2]])
    p = point_on_sheet(c, 0)
    d = DifferentialIndex((1,), 0)
    assert evaluate_differential(c, d, p) == pytest.approx(1 / p.y[0], rel=1e-15)
    # f(0) = 4, so the value is real: 1/2
    assert evaluate_differential(c, d, p) == pytest.approx(0.5, rel=1e-15)


def test_sheet_flip_negates_differential():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    p = point_on_sheet(c, 0.3 + 0.1j)
    for d in enumerate_differential_basis(c):
        for j in range(2):
            flip = AutomorphismElement(tuple(int(k == j) for k in range(2)))
            sign = -1 if d.v[j] else 1
            assert evaluate_differential(c, d, flip.apply(p)) == pytest.approx(
                sign * evaluate_differential(c, d, p), rel=1e-14)


def test_evaluation_at_branch_point_raises():
    c = validate_curve(1, 2, [[-1, 1, -2, 2]])
    with pytest.raises(BranchPointEvaluation):
        evaluate_differential(c, DifferentialIndex((1,), 0), point_on_sheet(c, 1.0))


def test_branch_local_coefficient_matches_sampled_fit():
    c = validate_curve(1, 2, [[-1, 1, -2, 2]])
    d = DifferentialIndex((1,), 0)
    lam = 1.0
    c0 = branch_local_coefficient(c, d, (0, 1))
    # omega = x^l dx / y = (2 t x^l / y) dt with x = lam + t^2 and y = t sqrt(f/(x - lam))
    t = 1e-3 * np.exp(2j * np.pi * np.arange(16) / 16)
    x = lam + t ** 2
    red = np.prod([x - r for r in (-1, -2, 2)], axis=0)
    # red is close to -6; this root is continuous there and principal at lam
    y = t * 1j * np.sqrt(-red)
    coef = 2 * t / y
    assert np.mean(coef) == pytest.approx(c0, rel=1e-6)


def test_branch_local_coefficients_nonzero_in_support():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    for d in enumerate_differential_basis(c):
        for bid in range(8):
            j, i = c.branch_pair(bid)
            if d.v[j]:
                val = branch_local_coefficient(c, d, (j, i))
                assert np.isfinite(val) and abs(val) > 0


def test_sheets_over_branch_point_differ_by_group_sign():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    d = DifferentialIndex((1, 1), 1)
    a = branch_local_coefficient(c, d, (0, 2), sheet=(0, 0))
    b = branch_local_coefficient(c, d, (0, 2), sheet=(0, 1))
    assert b == pytest.approx(-a, rel=1e-15)


def test_unsupported_factor_at_branch_point():
    c = validate_curve(2, 2, [[-2, -1, 1, 2], [-3, -1.5, 1.5, 3]])
    with pytest.raises(UnsupportedFactor):
        branch_local_coefficient(c, DifferentialIndex((0, 1), 0), (0, 0))


def test_decay_at_infinity():
    c = validate_curve(1, 3, [[-1.3, -0.6, 0.1, 0.7, 1.4, 0.3]])
    for d in enumerate_differential_basis(c):
        vals = [abs(evaluate_differential(c, d, point_on_sheet(c, r * np.exp(0.3j)))) for r in (1e3, 1e4)]
        slope = math.log10(vals[1] / vals[0])
        assert abs(slope - (d.l - c.m * d.s)) < 0.1
