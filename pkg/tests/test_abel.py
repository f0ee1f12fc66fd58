import itertools

import numpy as np
import pytest

from fiberthomae.abel import abel_map, divisor_to_e, random_points, riemann_constant
from fiberthomae.curve import SurfacePoint, group_elements, point_on_sheet
from fiberthomae.divisors import enumerate_admissible, r_minus_D
from fiberthomae.errors import ClearanceViolation
from fiberthomae.abel import AbelMap
from fiberthomae.periods import lattice_distance
from fiberthomae.theta import theta_at_point


def test_base_point_maps_to_zero(bench13):
    am = bench13.abel
    assert np.max(np.abs(am(am.z0).value)) == 0
    assert np.max(np.abs(abel_map(bench13.curve, bench13.periods, am.z0, am.z0).value)) == 0


def test_base_point_must_be_regular(bench12):
    lam = bench12.curve.branch_points[0]
    with pytest.raises(ClearanceViolation):
        AbelMap(bench12.curve, bench12.periods, SurfacePoint(lam, (0j,)))


@pytest.mark.parametrize("nm", [(1, 3), (2, 2)])
def test_path_independence(nm):
    from conftest import bench_for

    b = bench_for(*nm)
    am, per = b.abel, b.periods
    z0 = am.z0
    targets = [2.1 + 1.7j, -1.9 - 1.4j]
    detours = [-2.5 + 2.5j, 2.5 - 2.5j, 0.05 - 2.6j]
    for x in targets:
        for d in detours:
            W, y_end = am._integrate([z0.x, d, x], np.asarray(z0.y))
            P = SurfacePoint(x, tuple(y_end))
            diff = per.normalize(W) - am(P, reduce=False).value
            assert lattice_distance(per.tau, diff) < 1e-9


@pytest.mark.parametrize("nm", [(1, 2), (2, 2)])
def test_fiber_sums_are_constant(nm):
    from conftest import bench_for

    b = bench_for(*nm)
    am, per = b.abel, b.periods
    sums = []
    for x in (1.7 + 1.1j, -0.4 - 1.9j, 2.6 - 0.2j):
        s = sum(am(point_on_sheet(b.curve, x, g), reduce=False).value for g in group_elements(b.curve.n))
        sums.append(s)
    for s in sums[1:]:
        assert lattice_distance(per.tau, s - sums[0]) < 1e-9
    # the fiber over infinity belongs to the same class
    assert lattice_distance(per.tau, per.normalize(am.raw_infinity()) - sums[0]) < 1e-9


def test_genus_one_riemann_constant(bench12):
    per = bench12.periods
    K = riemann_constant(bench12.curve, per).value
    assert lattice_distance(per.tau, K - (1 + per.tau[0]) / 2) < 1e-10


def test_riemann_vanishing_at_single_points(bench13):
    am, ctx = bench13.abel, bench13.ctx
    K = am.riemann_constant().value
    for P in random_points(bench13.curve, np.random.default_rng(5), 6):
        assert abs(theta_at_point(ctx, am(P).value + K).value) < 1e-10


def test_riemann_constant_is_a_theta_characteristic(bench22):
    per = bench22.periods
    K = bench22.abel.riemann_constant().value
    # 2K is the class of the canonical divisor
    K2 = -(bench22.curve.m * bench22.curve.n - 2) * per.normalize(bench22.abel.raw_infinity())
    assert lattice_distance(per.tau, 2 * K - K2) < 1e-10


@pytest.mark.parametrize("nm", [(1, 3), (2, 2)])
def test_admissible_e_nonvanishing(nm):
    from conftest import bench_for

    b = bench_for(*nm)
    vals = [abs(theta_at_point(b.ctx, b.abel.e_beta(beta).value).value)
            for beta in enumerate_admissible(b.curve)]
    assert min(vals) > 1e-3 * max(vals)


def test_special_degree_g_minus_1_divisors_vanish(bench22):
    curve, am, ctx = bench22.curve, bench22.abel, bench22.ctx
    scale = max(abs(theta_at_point(ctx, am.e_beta(b).value).value) for b in enumerate_admissible(curve))
    rows = [(1, 0, 0, 0), (1, 1, 1, 0), (0, 0, 0, 0), (1, 1, 1, 1), (0, 1, 0, 0), (0, 1, 1, 1)]
    for r0, r1 in [(rows[0], rows[1]), (rows[1], rows[4]), (rows[2], rows[3]), (rows[3], rows[2])]:
        beta = [list(r0), list(r1)]
        assert r_minus_D(curve, beta) > 0
        assert abs(theta_at_point(ctx, am.e_beta(beta).value).value) < 1e-6 * scale


@pytest.mark.parametrize("nm", [(1, 3), (2, 2)])
def test_e_is_a_half_period_and_complement_is_its_negative(nm):
    from conftest import bench_for

    b = bench_for(*nm)
    tau = b.periods.tau
    for beta in itertools.islice(enumerate_admissible(b.curve), 6):
        e = b.abel.e_beta(beta).value
        comp = 1 - np.array(beta.entries)
        assert lattice_distance(tau, 2 * e) < 1e-10
        assert lattice_distance(tau, e + b.abel.e_beta(comp).value) < 1e-10


def test_e_independent_of_entry_format(bench13):
    beta = [[1, 0, 1, 1, 0, 0]]
    a = divisor_to_e(bench13.curve, bench13.periods, beta).value
    b = bench13.abel.e_beta(np.array(beta)).value
    assert np.allclose(a, b, atol=1e-14)


def test_e_independent_of_base_point(bench13):
    curve, per = bench13.curve, bench13.periods
    other = AbelMap(curve, per, point_on_sheet(curve, 0.9 - 2.2j, (1,)))
    for beta in itertools.islice(enumerate_admissible(curve), 5):
        diff = other.e_beta(beta).value - bench13.abel.e_beta(beta).value
        assert lattice_distance(per.tau, diff) < 1e-9
