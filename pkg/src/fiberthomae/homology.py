"""Canonical homology basis from lifted ellipse loops.

For every pair of branch points ``(a, b)`` whose connecting segment is well
separated from the other branch points we take the ellipse with foci
``a, b``.  Going once around it flips ``y_j`` for every factor owning an odd
number of ``{a, b}``; a same-factor pair therefore lifts to closed cycles
after one turn and a cross-factor pair after two.  Lifting from every sheet
gives a generating family of cycles whose pairwise intersection numbers are
read off from crossings of the base ellipses.  An integer symplectic
reduction of that skew form yields the canonical basis.

Each lift is integrated with the trapezoid rule in the ellipse angle; the
integrand is periodic and analytic in a strip, so the rule converges
geometrically and the grid is doubled until two successive values agree.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass

import numpy as np

from .curve import (
    FiberProductCurve,
    basis_arrays,
    differential_values,
    enumerate_differential_basis,
    group_elements,
)
from .errors import BasisJump, QuadratureFailure, RankDeficiency, StepUnderflow
from .paths import MonodromyRepresentation, sign_track

#: loops thinner than this (elliptic radius) are not used
MU_MIN = 0.02
MU_MAX = 1.0
N_START = 64
N_MAX = 1 << 17
PERIOD_TOL = 1e-13


@dataclass(frozen=True)
class EllipseLoop:
    pair: tuple[int, int]
    center: complex
    half_focal: complex  # h * exp(i phi)
    mu: float
    turns: int

    def x(self, theta):
        return self.center + self.half_focal * np.cosh(self.mu + 1j * theta)

    def dx(self, theta):
        return 1j * self.half_focal * np.sinh(self.mu + 1j * theta)


def elliptic_radius(a: complex, b: complex, p) -> np.ndarray:
    """``Re arccosh`` of ``p`` in the elliptic coordinates with foci a, b."""
    w = (np.asarray(p) - (a + b) / 2) / ((b - a) / 2)
    return np.abs(np.arccosh(w.astype(complex)).real)


def ellipse_loops(curve: FiberProductCurve, mu_min: float = MU_MIN) -> list[EllipseLoop]:
    bp = curve.branch_points
    loops = []
    for a, b in itertools.combinations(range(len(bp)), 2):
        others = np.delete(bp, [a, b])
        mu = MU_MAX
        if others.size:
            mu = min(MU_MAX, 0.5 * float(elliptic_radius(bp[a], bp[b], others).min()))
        if mu < mu_min:
            continue
        turns = 1 if curve.factor_of(a) == curve.factor_of(b) else 2
        loops.append(EllipseLoop((a, b), (bp[a] + bp[b]) / 2, (bp[b] - bp[a]) / 2, mu, turns))
    return loops


@dataclass
class CycleLift:
    loop: EllipseLoop
    sheet: tuple[int, ...]
    y0: np.ndarray
    N: int = 0
    periods: np.ndarray | None = None  # (g,) integrals of the differential basis
    y_track: np.ndarray | None = None  # (n, turns * N + 1)

    def polygon(self) -> np.ndarray:
        th = 2 * np.pi * np.arange(self.N + 1) / self.N
        return self.loop.x(th)


def integrate_lift(curve, lift: CycleLift, V, L, tol: float = PERIOD_TOL, n_start: int = N_START):
    loop = lift.loop
    N, prev = n_start, None
    while N <= N_MAX:
        th = 2 * np.pi * np.arange(loop.turns * N + 1) / N
        x = loop.x(th)
        try:
            Y = sign_track(curve.f(x), lift.y0)
        except StepUnderflow:
            N *= 2
            continue
        if np.any(np.abs(Y[:, -1] - lift.y0) > 1e-8 * (1 + np.abs(lift.y0))):
            raise QuadratureFailure(f"lift of loop {loop.pair} from sheet {lift.sheet} does not close")
        vals = differential_values(V, L, x[:-1], Y[:, :-1]) * loop.dx(th[:-1])
        P = vals.sum(axis=1) * (2 * np.pi / N)
        if prev is not None and np.max(np.abs(P - prev)) <= tol * max(1.0, np.max(np.abs(P))):
            lift.N, lift.periods, lift.y_track = N, P, Y
            return lift
        prev = P
        N *= 2
    raise QuadratureFailure(f"trapezoid rule on loop {loop.pair} did not converge (N > {N_MAX})")


def _segment_crossings(p: np.ndarray, q: np.ndarray, chunk: int = 32):
    """All proper crossings of polylines ``p`` and ``q``.

    Returns a list of ``(k, l, point, dp, dq)`` with ``k``/``l`` the segment
    indices.
    """
    out = []

    def boxes(z):
        nseg = len(z) - 1
        starts = np.arange(0, nseg, chunk)
        bx = []
        for s in starts:
            seg = z[s:min(s + chunk, nseg) + 1]
            bx.append((seg.real.min(), seg.real.max(), seg.imag.min(), seg.imag.max()))
        return starts, np.array(bx)

    sp, bp_ = boxes(p)
    sq, bq = boxes(q)
    ov = ((bp_[:, None, 0] <= bq[None, :, 1]) & (bq[None, :, 0] <= bp_[:, None, 1])
          & (bp_[:, None, 2] <= bq[None, :, 3]) & (bq[None, :, 2] <= bp_[:, None, 3]))
    for i, j in zip(*np.nonzero(ov)):
        a0 = sp[i]
        a1 = min(a0 + chunk, len(p) - 1)
        b0 = sq[j]
        b1 = min(b0 + chunk, len(q) - 1)
        P0, dP = p[a0:a1], np.diff(p[a0:a1 + 1])
        Q0, dQ = q[b0:b1], np.diff(q[b0:b1 + 1])
        w = Q0[None, :] - P0[:, None]
        den = np.imag(np.conj(dP)[:, None] * dQ[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.imag(np.conj(w) * dQ[None, :]) / den
            t = np.imag(np.conj(w) * dP[:, None]) / den
        hit = (den != 0) & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
        for k, l in zip(*np.nonzero(hit)):
            out.append((a0 + k, b0 + l, P0[k] + s[k, l] * dP[k], dP[k], dQ[l]))
    return out


def _align_grids(curve, lifts) -> None:
    """Give all lifts of one loop the same angular grid (needed to compare
    their sheets at crossings)."""
    best: dict = {}
    for lf in lifts:
        best[lf.loop.pair] = max(best.get(lf.loop.pair, 0), lf.N)
    for lf in lifts:
        N = best[lf.loop.pair]
        if lf.N != N:
            th = 2 * np.pi * np.arange(lf.loop.turns * N + 1) / N
            lf.y_track = sign_track(curve.f(lf.loop.x(th)), lf.y0)
            lf.N = N


def _sign_bits(curve, xc, y) -> tuple:
    ref = np.sqrt(curve.f(xc))
    return tuple(bool(np.real(np.conj(r) * v) >= 0) for r, v in zip(ref, y))


def intersection_matrix(curve, lifts: list[CycleLift]) -> np.ndarray:
    """Skew integer matrix of intersection numbers between the lifts."""
    M = len(lifts)
    K = np.zeros((M, M), dtype=np.int64)
    by_loop: dict = {}
    for idx, lf in enumerate(lifts):
        by_loop.setdefault(lf.loop.pair, []).append(idx)
    groups = list(by_loop.values())
    polys = {lifts[g[0]].loop.pair: lifts[g[0]].polygon() for g in groups}
    for g1, g2 in itertools.combinations(groups, 2):
        L1, L2 = lifts[g1[0]], lifts[g2[0]]
        for k, l, xc, d1, d2 in _segment_crossings(polys[L1.loop.pair], polys[L2.loop.pair]):
            sgn = int(np.sign(np.imag(np.conj(d1) * d2)))
            if sgn == 0:
                continue
            # sheet labels of every passage of every lift through the crossing
            pass1 = [(i, _sign_bits(curve, xc, lifts[i].y_track[:, k + p * lifts[i].N]))
                     for i in g1 for p in range(L1.loop.turns)]
            pass2 = [(i, _sign_bits(curve, xc, lifts[i].y_track[:, l + p * lifts[i].N]))
                     for i in g2 for p in range(L2.loop.turns)]
            for i, s1 in pass1:
                for j, s2 in pass2:
                    if s1 == s2:
                        K[i, j] += sgn
                        K[j, i] -= sgn
    return K


@dataclass(frozen=True)
class SymplecticReduction:
    T: np.ndarray  # (M, M) unimodular, rows are new cycles in terms of lifts
    blocks: tuple  # (p, q, d) with <e_p, e_q> = d > 0


def symplectic_reduction(K: np.ndarray) -> SymplecticReduction:
    """Integer change of basis bringing a skew form to blocks ``[[0, d], [-d, 0]]``."""
    K = np.array(K, dtype=np.int64)
    M = K.shape[0]
    T = np.eye(M, dtype=np.int64)
    active = list(range(M))
    blocks = []
    while True:
        idx = np.array(active, dtype=int)
        if idx.size < 2:
            break
        sub = np.abs(K[np.ix_(idx, idx)])
        if not sub.any():
            break
        masked = np.where(sub > 0, sub, np.iinfo(np.int64).max)
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        p, q = int(idx[i]), int(idx[j])
        if K[p, q] < 0:
            p, q = q, p
        d = int(K[p, q])
        clean = True
        for k in active:
            if k in (p, q):
                continue
            c = int(K[p, k]) // d
            if c:
                T[k] -= c * T[q]
                K[k, :] -= c * K[q, :]
                K[:, k] -= c * K[:, q]
            c = int(K[q, k]) // d
            if c:
                T[k] += c * T[p]
                K[k, :] += c * K[p, :]
                K[:, k] += c * K[:, p]
            if K[p, k] or K[q, k]:
                clean = False
        if np.abs(T).max() > 2 ** 40:
            raise RankDeficiency("coefficient growth in symplectic reduction")
        if clean:
            blocks.append((p, q, d))
            active.remove(p)
            active.remove(q)
    return SymplecticReduction(T, tuple(blocks))


@dataclass
class HomologyBasis:
    lifts: list
    K: np.ndarray  # raw lift intersection matrix (crossing convention)
    a_coeffs: np.ndarray  # (g, M) integer
    b_coeffs: np.ndarray  # (g, M) integer
    orientation: int  # +1 if the crossing convention agrees with a.b = +1
    intersection: np.ndarray  # (2g, 2g) in the standard convention
    differentials: tuple = ()
    fingerprint: str = ""

    @property
    def a_cycles(self):
        return [dict((k, int(c)) for k, c in enumerate(row) if c) for row in self.a_coeffs]

    @property
    def b_cycles(self):
        return [dict((k, int(c)) for k, c in enumerate(row) if c) for row in self.b_coeffs]

    def cycle_periods(self) -> np.ndarray:
        return np.array([lf.periods for lf in self.lifts])


def _fingerprint(loops, lifts, K, a, b) -> str:
    data = {
        "loops": [[lp.pair[0], lp.pair[1], lp.turns] for lp in loops],
        "lifts": [[lf.loop.pair[0], lf.loop.pair[1], list(lf.sheet)] for lf in lifts],
        "K": K.tolist(),
        "a": np.asarray(a).tolist(),
        "b": np.asarray(b).tolist(),
    }
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


def _make_lifts(curve, loops, reference=None):
    lifts = []
    if reference is None:
        for lp in loops:
            x0 = lp.x(0.0)
            P0 = np.sqrt(curve.f(x0))
            mask = tuple(int(curve.factor_of(lp.pair[0]) == j) ^ int(curve.factor_of(lp.pair[1]) == j)
                         for j in range(curve.n))
            for s in group_elements(curve.n):
                partner = tuple(a ^ b for a, b in zip(s, mask))
                # a double loop from s and from its partner is the same cycle
                if lp.turns == 2 and partner < s:
                    continue
                y0 = P0 * np.array([-1.0 if b else 1.0 for b in s])
                lifts.append(CycleLift(lp, s, y0))
        return lifts
    pairs_ref = [lf.loop.pair for lf in reference.lifts]
    lp_by = {lp.pair: lp for lp in loops}
    if any(p not in lp_by for p in pairs_ref):
        raise BasisJump("the set of usable loops changed under perturbation")
    for lf in reference.lifts:
        lp = lp_by[lf.loop.pair]
        P0 = np.sqrt(curve.f(lp.x(0.0)))
        # pick the sheet continuous with the reference start values
        y0 = np.where(np.real(np.conj(P0) * lf.y0) >= 0, 1.0, -1.0) * P0
        lifts.append(CycleLift(lp, lf.sheet, y0))
    return lifts


def homology_basis(curve: FiberProductCurve, monodromy: MonodromyRepresentation | None = None,
                   differentials=None, reference: HomologyBasis | None = None,
                   tol: float = PERIOD_TOL) -> HomologyBasis:
    """Canonical homology basis together with the lift periods.

    Parameters
    ----------
    monodromy : MonodromyRepresentation, optional
        If given, its involution and product invariants are verified; the
        construction itself only relies on the ramification pattern.
    reference : HomologyBasis, optional
        Basis of a nearby curve.  The same loops and sheets are reused and
        the reduction is transported; :class:`BasisJump` is raised if the
        intersection data differ.
    """
    if monodromy is not None:
        ident = tuple(range(2 ** curve.n))
        for b, perm in monodromy.generators.items():
            if tuple(perm[p] for p in perm) != ident or perm == ident:
                raise RankDeficiency(f"generator of branch point {b} is not a non-trivial involution")
        if monodromy.product() != ident:
            raise RankDeficiency("product of monodromy generators is not the identity")
    basis = list(differentials) if differentials is not None else enumerate_differential_basis(curve)
    V, L = basis_arrays(basis)
    g = curve.genus()
    if reference is not None:
        pairs = sorted({lf.loop.pair for lf in reference.lifts})
        loops = [lp for lp in ellipse_loops(curve, mu_min=0.0) if lp.pair in pairs]
    else:
        loops = ellipse_loops(curve)
    lifts = _make_lifts(curve, loops, reference)
    for lf in lifts:
        integrate_lift(curve, lf, V, L, tol)
    _align_grids(curve, lifts)
    K = intersection_matrix(curve, lifts)
    if reference is not None:
        if not np.array_equal(K, reference.K):
            raise BasisJump("intersection numbers changed under perturbation; use a smaller step")
        a, b, orient = reference.a_coeffs, reference.b_coeffs, reference.orientation
    else:
        red = symplectic_reduction(K)
        bad = [d for _, _, d in red.blocks if d != 1]
        if len(red.blocks) != g or bad:
            raise RankDeficiency(
                f"cycle lattice has {len(red.blocks)} symplectic blocks (genus {g}), "
                f"non-unit invariants {bad}"
            )
        a = np.array([red.T[p] for p, _, _ in red.blocks]).reshape(g, len(lifts))
        b = np.array([red.T[q] for _, q, _ in red.blocks]).reshape(g, len(lifts))
        P = np.array([lf.periods for lf in lifts])
        A, B = a @ P, b @ P
        tau = np.linalg.solve(A.T, B.T).T
        orient = 1
        if np.linalg.eigvalsh((tau.imag + tau.imag.T) / 2).max() < 0:
            b, orient = -b, -1
    ab = np.vstack([a, b])
    inter = orient * (ab @ K @ ab.T)
    J = np.block([[np.zeros((g, g), int), np.eye(g, dtype=int)], [-np.eye(g, dtype=int), np.zeros((g, g), int)]])
    if not np.array_equal(inter, J):
        raise RankDeficiency("reduced intersection matrix is not canonical")
    return HomologyBasis(lifts, K, a, b, orient, inter, tuple(basis), _fingerprint(loops, lifts, K, a, b))
