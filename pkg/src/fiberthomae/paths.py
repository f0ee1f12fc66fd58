"""Sheet-tracked analytic continuation along polygonal paths in the x-plane.

The ``y_j`` are continued by choosing, at each sample, the sign of the
principal square root of ``f_j(x)`` closest to the previous value.  Samples
are graded by the distance to the nearest branch point so that consecutive
values satisfy ``|dy_j| < CONTRACT * |y_j|``; ``y_j = -y_j`` is the only
competing branch, so any ratio below 1 already rules out sheet jumps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import FiberProductCurve, SurfacePoint, group_elements, point_on_sheet
from .errors import ClearanceViolation, StepUnderflow

CONTRACT = 0.25
#: clearance as a fraction of the minimal branch-point separation
CLEARANCE_FRACTION = 1e-3
#: quadrature pieces have length <= PIECE_FRACTION * (distance to nearest branch point)
PIECE_FRACTION = 0.3
GL_NODES = 20
MIN_STEP = 1e-13

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_NODES)


@dataclass(frozen=True)
class SheetTrackedPath:
    waypoints: np.ndarray  # (N,) complex samples along the path
    y_tracks: np.ndarray  # (N, n)
    max_step: float
    tol: float = CONTRACT

    @property
    def start(self) -> SurfacePoint:
        return SurfacePoint(complex(self.waypoints[0]), tuple(self.y_tracks[0]))

    @property
    def end(self) -> SurfacePoint:
        return SurfacePoint(complex(self.waypoints[-1]), tuple(self.y_tracks[-1]))


def clearance(curve: FiberProductCurve) -> float:
    return CLEARANCE_FRACTION * curve.min_separation()


def _dist_to_segment(p: np.ndarray, a: complex, b: complex) -> np.ndarray:
    d = b - a
    if d == 0:
        return np.abs(p - a)
    t = np.clip(((p - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(p - (a + t * d))


def _bp_distance(curve, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.min(np.abs(x[..., None] - curve.branch_points), axis=-1)


def check_clearance(curve, path, delta=None, allow_end_branch=False) -> None:
    """Raise :class:`ClearanceViolation` if the polyline comes within ``delta``
    of a branch point."""
    delta = clearance(curve) if delta is None else delta
    path = np.asarray(path, dtype=complex)
    bp = curve.branch_points
    for k in range(len(path) - 1):
        d = _dist_to_segment(bp, path[k], path[k + 1])
        if allow_end_branch and k == len(path) - 2:
            hit = np.abs(bp - path[-1]) < delta
            d = np.where(hit, np.inf, d)
        if d.min() < delta:
            j = int(np.argmin(d))
            raise ClearanceViolation(
                f"segment {k} passes {d[j]:.3e} from branch point {bp[j]} (clearance {delta:.3e})"
            )


def graded_samples(curve, a: complex, b: complex, frac: float = PIECE_FRACTION) -> np.ndarray:
    """Points ``a = s_0, ..., s_K = b`` on the segment with
    ``|s_{k+1} - s_k| <= frac * dist(s_k, branch points)``."""
    L = abs(b - a)
    if L == 0:
        return np.array([a])
    u = (b - a) / L
    ts = [0.0]
    t = 0.0
    while t < L:
        step = frac * float(_bp_distance(curve, a + t * u))
        if step < MIN_STEP * max(1.0, L):
            raise StepUnderflow(f"step {step:.2e} near x={a + t * u}")
        t = min(L, t + step)
        ts.append(t)
    return a + np.array(ts) * u


def sign_track(F: np.ndarray, y0: np.ndarray) -> np.ndarray:
    """Continue ``sqrt(F)`` along samples (columns of ``F``) starting at ``y0``.

    Returns ``(n, N)`` values and raises if the continuation contract fails.
    """
    P = np.sqrt(F)
    rel = np.real(np.conj(P[:, :-1]) * P[:, 1:])
    r = np.where(rel >= 0, 1.0, -1.0)
    s0 = np.where(np.real(np.conj(P[:, 0]) * y0) >= 0, 1.0, -1.0)
    s = np.concatenate([s0[:, None], s0[:, None] * np.cumprod(r, axis=1)], axis=1)
    Y = s * P
    mis = np.abs(Y[:, 0] - y0) > 1e-6 * (1 + np.abs(y0))
    if mis.any():
        raise ValueError("start values are not on the curve above the first sample")
    if Y.shape[1] > 1:
        jump = np.abs(np.diff(Y, axis=1))
        scale = np.minimum(np.abs(Y[:, 1:]), np.abs(Y[:, :-1]))
        if np.any(jump >= CONTRACT * scale):
            raise StepUnderflow("continuation contract violated; samples too coarse")
    return Y


def continue_sheets(curve: FiberProductCurve, path, start: SurfacePoint,
                    delta: float | None = None) -> SheetTrackedPath:
    """Continue ``start`` along the polyline ``path`` (first vertex = start.x)."""
    path = [complex(p) for p in path]
    if abs(path[0] - start.x) > 1e-12 * max(1.0, abs(start.x)):
        raise ValueError("path must start at the x-coordinate of the start point")
    check_clearance(curve, path, delta)
    xs = [np.array([path[0]])]
    for a, b in zip(path[:-1], path[1:]):
        xs.append(graded_samples(curve, a, b, frac=0.5)[1:])
    x = np.concatenate(xs)
    frac = 0.5
    for _ in range(8):
        try:
            Y = sign_track(curve.f(x), np.asarray(start.y, dtype=complex))
            break
        except StepUnderflow:
            frac /= 2
            xs = [np.array([path[0]])]
            for a, b in zip(path[:-1], path[1:]):
                xs.append(graded_samples(curve, a, b, frac=frac)[1:])
            x = np.concatenate(xs)
    else:
        raise StepUnderflow("continuation failed to meet its contract after refinement")
    step = float(np.max(np.abs(np.diff(x)))) if len(x) > 1 else 0.0
    return SheetTrackedPath(x, Y.T.copy(), step)


# ----------------------------------------------------------------------
# quadrature along polylines


@dataclass(frozen=True)
class PathQuadrature:
    """Nodes, weights (``dx`` included) and tracked ``y`` along a path."""

    x: np.ndarray
    w: np.ndarray
    y: np.ndarray  # (n, K)

    @property
    def end_y(self) -> np.ndarray:
        return self.y[:, -1]


def path_quadrature(curve, path, y0, delta=None) -> tuple[PathQuadrature, np.ndarray]:
    """Gauss-Legendre nodes on graded pieces of ``path`` with tracked sheets.

    Returns the quadrature and the ``y`` vector continued to the last vertex.
    """
    path = [complex(p) for p in path]
    check_clearance(curve, path, delta)
    frac = PIECE_FRACTION
    y0 = np.asarray(y0, dtype=complex)
    for _ in range(6):
        xs, ws = [], []
        for a, b in zip(path[:-1], path[1:]):
            s = graded_samples(curve, a, b, frac)
            lo, hi = s[:-1], s[1:]
            mid, half = (lo + hi) / 2, (hi - lo) / 2
            nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
            xs.append(np.concatenate([nodes, hi[:, None]], axis=1).reshape(-1))
            ws.append(np.concatenate([half[:, None] * _GL_W[None, :],
                                      np.zeros((len(lo), 1))], axis=1).reshape(-1))
        x = np.concatenate([[path[0]]] + xs)
        w = np.concatenate([[0.0]] + ws)
        try:
            Y = sign_track(curve.f(x), y0)
        except StepUnderflow:
            frac /= 2
            continue
        keep = w != 0
        return PathQuadrature(x[keep], w[keep], Y[:, keep]), Y[:, -1]
    raise StepUnderflow("path quadrature failed to meet the continuation contract")


def route(curve, xa: complex, xb: complex, depth: int = 0) -> list[complex]:
    """Polyline from ``xa`` to ``xb`` keeping away from branch points.

    Each branch point ``lam`` gets a keep-out disc of radius
    ``0.3 * dist(lam, other branch points)`` (shrunk if an endpoint lies
    inside); segments crossing a disc are bent around it on the left.
    """
    bp = curve.branch_points
    d = np.abs(bp[:, None] - bp[None, :])
    np.fill_diagonal(d, np.inf)
    radius = 0.3 * d.min(axis=1)
    radius = np.minimum(radius, 0.9 * np.abs(bp - xa))
    radius = np.minimum(radius, 0.9 * np.abs(bp - xb))
    dist = _dist_to_segment(bp, xa, xb)
    bad = np.nonzero(dist < radius)[0]
    if bad.size == 0 or depth > 12:
        return [complex(xa), complex(xb)]
    # detour around the obstacle closest to xa along the segment
    u = (xb - xa) / abs(xb - xa)
    along = ((bp[bad] - xa) * np.conj(u)).real
    k = bad[int(np.argmin(along))]
    side = 1j * u
    off = (bp[k] - xa) * np.conj(u)
    if off.imag > 0:
        side = -side
    via = bp[k] + 1.5 * radius[k] * side
    left = route(curve, xa, via, depth + 1)
    right = route(curve, via, xb, depth + 1)
    return left + right[1:]


# ----------------------------------------------------------------------
# monodromy


@dataclass(frozen=True)
class MonodromyRepresentation:
    base_x: complex
    branch_order: tuple[int, ...]  # loop order (branch ids sorted by angle)
    generators: dict  # branch id -> tuple permutation of sheet indices

    def product(self) -> tuple[int, ...]:
        n_sheets = len(next(iter(self.generators.values())))
        perm = tuple(range(n_sheets))
        for b in self.branch_order:
            g = self.generators[b]
            perm = tuple(g[p] for p in perm)
        return perm


def _sheet_index(y, ref) -> int:
    bits = [0 if np.real(np.conj(r) * v) >= 0 else 1 for v, r in zip(y, ref)]
    return sum(b << j for j, b in enumerate(bits))


def loop_around(curve, base_x: complex, bid: int) -> list[complex]:
    """Closed polyline from ``base_x`` encircling branch point ``bid`` once
    counter-clockwise and no other branch point."""
    bp = curve.branch_points
    lam = bp[bid]
    others = np.delete(bp, bid)
    r = 0.4 * float(np.min(np.abs(others - lam)))
    r = min(r, 0.5 * abs(base_x - lam))
    entry = lam + r * (base_x - lam) / abs(base_x - lam)
    approach = route(curve, base_x, entry)
    circle = [lam + (entry - lam) * np.exp(2j * np.pi * k / 32) for k in range(1, 33)]
    circle[-1] = entry
    return approach + circle + approach[::-1][1:]


def monodromy(curve: FiberProductCurve, base_x: complex) -> MonodromyRepresentation:
    base_x = complex(base_x)
    bp = curve.branch_points
    if np.min(np.abs(bp - base_x)) <= clearance(curve):
        raise ClearanceViolation(f"base point {base_x} is a branch point")
    ref = np.sqrt(curve.f(base_x))
    order = tuple(int(k) for k in np.argsort(np.angle(bp - base_x), kind="stable"))
    gens = {}
    for b in range(len(bp)):
        loop = loop_around(curve, base_x, b)
        perm = []
        for s in group_elements(curve.n):
            start = point_on_sheet(curve, base_x, s)
            tr = continue_sheets(curve, loop, start)
            perm.append(_sheet_index(tr.y_tracks[-1], ref))
        gens[b] = tuple(perm)
    return MonodromyRepresentation(base_x, order, gens)
