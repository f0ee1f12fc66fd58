import json

import numpy as np
import pytest

from fiberthomae.curve import point_on_sheet, validate_curve
from fiberthomae.errors import BasisJump, ClearanceViolation, RankDeficiency
from fiberthomae.homology import homology_basis
from fiberthomae.oracles import quartic_tau, reduce_modular, symmetric_quartic_tau
from fiberthomae.paths import continue_sheets, monodromy
from fiberthomae.periods import (JacobianPoint, compute_periods, lattice_reduce, periods_from_json,
                                 reduce_point)
from fiberthomae.variational import (dtau_dlambda_fd, local_normalized, richardson_estimate,
                                     variational_prediction)

from conftest import bench_for


def circle(c, r, k=48):
    pts = [c + r * np.exp(2j * np.pi * t / k) for t in range(k + 1)]
    pts[-1] = pts[0]
    return pts


# ---------------------------------------------------------------- continuation


def test_contractible_loop_returns_to_start(bench13):
    curve = bench13.curve
    loop = circle(2.5 + 1.0j, 0.5)
    tr = continue_sheets(curve, loop, point_on_sheet(curve, loop[0]))
    assert np.max(np.abs(tr.y_tracks[-1] - tr.y_tracks[0])) < 1e-10


def test_loop_around_one_branch_point_negates_its_factor(bench22):
    curve = bench22.curve
    for bid in (0, 5):
        lam = curve.branch_points[bid]
        j = curve.factor_of(bid)
        r = 0.3 * curve.min_separation()
        start = point_on_sheet(curve, lam + r)
        tr = continue_sheets(curve, circle(lam, r), start)
        expect = np.array(start.y)
        expect[j] *= -1
        assert np.max(np.abs(tr.y_tracks[-1] - expect)) < 1e-10


def test_loop_around_two_branch_points_of_one_factor():
    curve = validate_curve(2, 2, [[-2, -1.8, 1, 2], [0.5j, -0.5j, 3j, -3j]])
    loop = circle(-1.9, 0.5)
    start = point_on_sheet(curve, loop[0])
    tr = continue_sheets(curve, loop, start)
    assert np.max(np.abs(tr.y_tracks[-1] - np.array(start.y))) < 1e-10


def test_continuation_contract_holds_along_track(bench13):
    curve = bench13.curve
    tr = continue_sheets(curve, [2 + 2j, -2 + 2j, -2 - 2j], point_on_sheet(curve, 2 + 2j))
    steps = np.abs(np.diff(tr.y_tracks, axis=0))
    gap = 2 * np.abs(tr.y_tracks[:-1])  # distance between y and -y
    assert np.all(steps < 0.5 * gap)


def test_clearance_violation(bench12):
    curve = bench12.curve
    lam = curve.branch_points[0]
    with pytest.raises(ClearanceViolation):
        continue_sheets(curve, [lam + 0.5j, lam - 0.5j], point_on_sheet(curve, lam + 0.5j))


def test_path_must_start_at_start_point(bench12):
    with pytest.raises(ValueError):
        continue_sheets(bench12.curve, [5j, 6j], point_on_sheet(bench12.curve, 4j))


# ---------------------------------------------------------------- monodromy


def test_monodromy_hyperelliptic(bench12):
    rep = monodromy(bench12.curve, 0.3 + 0.7j)
    assert len(rep.generators) == 4
    assert all(p == (1, 0) for p in rep.generators.values())
    assert rep.product() == (0, 1)


def test_monodromy_fiber_product(bench22):
    curve = bench22.curve
    rep = monodromy(curve, 0.1 + 2.3j)
    for bid, perm in rep.generators.items():
        bit = 1 << curve.factor_of(bid)
        assert perm == tuple(s ^ bit for s in range(4))
    assert rep.product() == (0, 1, 2, 3)


def test_monodromy_base_at_branch_point(bench12):
    with pytest.raises(ClearanceViolation):
        monodromy(bench12.curve, bench12.curve.branch_points[1])


# ---------------------------------------------------------------- homology


def test_homology_torus(bench12):
    hb = bench12.periods.basis
    assert hb.intersection.tolist() == [[0, 1], [-1, 0]]


@pytest.mark.parametrize("nm", [(1, 3), (2, 2)])
def test_homology_symplectic(nm):
    hb = bench_for(*nm).periods.basis
    g = bench_for(*nm).curve.genus()
    J = np.block([[np.zeros((g, g)), np.eye(g)], [-np.eye(g), np.zeros((g, g))]])
    assert np.array_equal(hb.intersection, J)
    assert hb.K.dtype.kind == "i"
    assert np.array_equal(hb.K, -hb.K.T)


def test_homology_accepts_valid_monodromy(bench12):
    curve = bench12.curve
    hb = homology_basis(curve, monodromy(curve, 0.3 + 0.7j))
    assert hb.fingerprint == bench12.periods.basis.fingerprint


def test_homology_rejects_broken_monodromy(bench12):
    curve = bench12.curve
    rep = monodromy(curve, 0.3 + 0.7j)
    gens = dict(rep.generators)
    gens[0] = (0, 1)
    with pytest.raises(RankDeficiency):
        homology_basis(curve, type(rep)(rep.base_x, rep.branch_order, gens))


def test_transport_detects_jump(bench12):
    curve = bench12.curve
    # move a branch point across another cycle
    moved = curve.with_branch_point(0, 0.6 + 0.1j)
    with pytest.raises(BasisJump):
        compute_periods(moved, reference=bench12.periods)


# ---------------------------------------------------------------- periods


def test_legendre_instance_matches_agm(bench12):
    tau = bench12.periods.tau[0, 0]
    assert abs(tau.real) < 1e-8
    oracle = symmetric_quartic_tau(1 / 3)
    assert abs(reduce_modular(tau) - oracle) < 1e-8 * abs(oracle)
    assert tau.imag == pytest.approx(1.2792615711710067, rel=1e-10)


def test_random_quartic_matches_agm():
    rng = np.random.default_rng(3)
    lam = rng.normal(size=4) + 1j * rng.normal(size=4)
    per = compute_periods(validate_curve(1, 2, [lam]))
    oracle = quartic_tau(lam)
    assert abs(reduce_modular(per.tau[0, 0]) - oracle) < 1e-8 * abs(oracle)


@pytest.mark.parametrize("nm", [(1, 2), (1, 3), (2, 2)])
def test_riemann_relations(nm):
    per = bench_for(*nm).periods
    assert np.max(np.abs(per.tau - per.tau.T)) < 1e-8
    assert np.linalg.eigvalsh(per.tau.imag).min() > 0
    assert per.detC == pytest.approx(np.linalg.det(per.A), rel=1e-14)
    assert np.allclose(per.tau @ per.A, per.B, rtol=0, atol=1e-10 * np.abs(per.B).max())


def test_periods_json_roundtrip(bench13):
    per = bench13.periods
    data = json.loads(json.dumps(per.to_json()))
    A, B, tau = periods_from_json(data)
    assert np.array_equal(A, per.A) and np.array_equal(tau, per.tau)
    assert set(data["diagnostics"]) == {"symmetry_residual", "min_eig_im_tau", "cond_A"}
    assert len(data["fingerprint"]) == 64


def test_periods_deterministic(bench12):
    again = compute_periods(bench12.curve)
    assert np.array_equal(again.tau, bench12.periods.tau)
    assert again.basis.fingerprint == bench12.periods.basis.fingerprint


def test_lattice_reduction_idempotent(bench13):
    per = bench13.periods
    rng = np.random.default_rng(0)
    z = rng.normal(size=2) * 3 + 1j * rng.normal(size=2) * 3
    p = reduce_point(per, JacobianPoint(z))
    assert p.reduced
    assert np.allclose(reduce_point(per, p).value, p.value, atol=1e-14)
    shift = per.tau @ np.array([2, -1]) + np.array([1, 3])
    assert np.allclose(lattice_reduce(per.tau, z + shift), p.value, atol=1e-12)


# ---------------------------------------------------------------- variational


def test_variational_symmetric(bench13):
    for bid in range(6):
        P = variational_prediction(bench13.curve, bench13.periods, bid)
        assert np.allclose(P, P.T, atol=1e-15 * np.abs(P).max())


def test_variational_sign_of_local_coordinate_cancels(bench22):
    v = local_normalized(bench22.curve, bench22.periods, 2)
    flip = v * np.array([[-1.0], [1.0]])
    assert np.allclose(flip.T @ flip, v.T @ v, atol=0)


def test_variational_matches_agm_derivative(bench12):
    curve = bench12.curve
    lam = curve.branch_points.copy()
    h = 1e-5
    for bid in range(4):
        up, dn = lam.copy(), lam.copy()
        up[bid] += h
        dn[bid] -= h
        fd = (quartic_tau(up) - quartic_tau(dn)) / (2 * h)
        pred = variational_prediction(curve, bench12.periods, bid)[0, 0]
        assert abs(fd - pred) < 1e-4 * abs(pred)


@pytest.mark.parametrize("nm", [(1, 3), (2, 2)])
def test_variational_matches_finite_differences(nm):
    b = bench_for(*nm)
    for bid in range(b.curve.num_branch_points):
        fd = dtau_dlambda_fd(b.curve, bid, 1e-5, b.periods)
        assert np.max(np.abs(fd - fd.T)) < 1e-6 * np.abs(fd).max()
        pred = variational_prediction(b.curve, b.periods, bid)
        assert np.linalg.norm(fd - pred) < 1e-4 * np.linalg.norm(pred)


def test_richardson_ratio(bench13):
    e1 = richardson_estimate(bench13.curve, 1, 1e-2, bench13.periods)
    e2 = richardson_estimate(bench13.curve, 1, 5e-3, bench13.periods)
    assert 3.0 < e1 / e2 < 5.0
