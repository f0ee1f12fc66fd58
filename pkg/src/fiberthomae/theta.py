r"""Riemann theta function with ellipsoidal truncation.

.. math::

    \theta(z, \tau) = \sum_{n \in \mathbb{Z}^g}
        \exp\left(\pi i\, n^T \tau n + 2 \pi i\, n^T z\right)

and, for a characteristic :math:`\eta = (\eta', \eta'')`,

.. math::

    \theta[\eta](z) = \sum_{n} \exp\left(\pi i (n + \eta')^T \tau (n + \eta')
        + 2 \pi i (n + \eta')^T (z + \eta'')\right).

A point ``e`` of :math:`\mathbb{C}^g` is identified with the characteristic
solving ``e = eta'' + tau @ eta'`` with real ``eta', eta''``; the modulus of
``theta[e](0)`` is then invariant under lattice translations of ``e``.

The truncation radius follows the tail bounds of Deconinck, Heil, Bobenko,
van Hoeij and Schmies (Math. Comp. 73, 2004), inflated per derivative order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import NearVanishing, NotPositiveDefinite, TruncationOverflow

MAX_RADIUS = 40.0
MAX_POINTS = 5_000_000


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    grad: np.ndarray | None = None
    hessian: np.ndarray | None = None
    error: float = 0.0


def _tail_bound(g: int, rho: float, R: float, order: int, a: float, b: float) -> float:
    """Bound on the neglected part of the normalized sum (and its derivatives)."""
    if R <= rho / 2:
        return math.inf
    x = (R - rho / 2) ** 2
    pref = (g / 2) * (2 / rho) ** g
    total = 0.0
    for k in range(order + 1):
        gam = special.gammaincc((g + k) / 2, x) * special.gamma((g + k) / 2)
        total += math.comb(order, k) * a ** k * b ** (order - k) * gam
    return pref * (2 * math.pi) ** order * total


class ThetaContext:
    """Period matrix plus truncation policy; immutable after construction.

    Parameters
    ----------
    tau : (g, g) complex array
        Symmetric with positive definite imaginary part.
    eps : float
        Target absolute error on the normalized (oscillatory) sum.
    """

    def __init__(self, tau, eps: float = 1e-14, symmetry_tol: float = 1e-8):
        tau = np.array(tau, dtype=complex)
        if tau.ndim == 0:
            tau = tau.reshape(1, 1)
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
            raise NotPositiveDefinite(f"tau must be square, got shape {tau.shape}")
        asym = np.max(np.abs(tau - tau.T)) / max(1.0, np.max(np.abs(tau)))
        if asym > symmetry_tol:
            raise NotPositiveDefinite(f"tau is not symmetric (residual {asym:.2e})")
        tau = (tau + tau.T) / 2
        Y = tau.imag
        try:
            L = np.linalg.cholesky(Y)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("Im(tau) is not positive definite") from exc
        self.tau = tau
        self.g = tau.shape[0]
        self.eps = float(eps)
        self.Y = Y
        self.Yinv = np.linalg.inv(Y)
        # exp(-pi w^T Y w) = exp(-|Q w|^2)
        self.Q = math.sqrt(math.pi) * L.T
        self.Qinv = np.linalg.inv(self.Q)
        self._radius_cache: dict[int, float] = {}

    @cached_property
    def rho(self) -> float:
        """Length of the shortest nonzero vector of the lattice ``Q Z^g``."""
        cols = np.linalg.norm(self.Q, axis=0)
        r = float(cols.min()) * (1 + 1e-9)
        pts = self._enumerate(np.zeros(self.g), r)
        norms = np.linalg.norm(pts @ self.Q.T, axis=1)
        norms = norms[norms > 1e-12]
        return float(norms.min()) if norms.size else r

    def radius(self, order: int = 0) -> float:
        if order not in self._radius_cache:
            g, rho = self.g, self.rho
            a = float(np.linalg.norm(self.Qinv, 2))
            b = math.sqrt(g)
            R = max((math.sqrt(g) + rho) / 2, rho / 2 + 0.5)
            while _tail_bound(g, rho, R, order, a, b) > self.eps:
                R += 0.05
                if R > MAX_RADIUS:
                    raise TruncationOverflow(
                        f"ellipsoid radius exceeds {MAX_RADIUS} (tau too close to the boundary)"
                    )
            self._radius_cache[order] = R
        return self._radius_cache[order]

    def tail_bound(self, order: int, R: float | None = None) -> float:
        R = self.radius(order) if R is None else R
        a = float(np.linalg.norm(self.Qinv, 2))
        return _tail_bound(self.g, self.rho, R, order, a, math.sqrt(self.g))

    def _enumerate(self, center: np.ndarray, R: float) -> np.ndarray:
        """Integer vectors ``n`` with ``|Q (n - center)| < R``."""
        g, Q = self.g, self.Q
        # level-by-level expansion from the last coordinate (Q is upper triangular)
        pts = np.zeros((1, 0), dtype=np.int64)
        partial = np.zeros(1)
        for i in range(g - 1, -1, -1):
            if pts.shape[1]:
                tail = (pts - center[i + 1:]) @ Q[i, i + 1:]
            else:
                tail = np.zeros(len(pts))
            rem = np.maximum(R * R - partial, 0.0)
            half = np.sqrt(rem) / Q[i, i]
            mid = center[i] - tail / Q[i, i]
            lo = np.ceil(mid - half).astype(np.int64)
            hi = np.floor(mid + half).astype(np.int64)
            counts = np.maximum(hi - lo + 1, 0)
            total = int(counts.sum())
            if total > MAX_POINTS:
                raise TruncationOverflow(f"ellipsoid holds more than {MAX_POINTS} points")
            idx = np.repeat(np.arange(len(pts)), counts)
            offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            ni = lo[idx] + offs
            contrib = (Q[i, i] * (ni - center[i]) + tail[idx]) ** 2
            partial = partial[idx] + contrib
            pts = np.column_stack([ni, pts[idx]]) if pts.shape[1] else ni[:, None]
        return pts

    # ------------------------------------------------------------------
    def _sum(self, shift, w, order: int, R: float | None = None):
        """Normalized sum over ``m in Z^g + shift`` with weights
        ``exp(pi i m.tau.m + 2 pi i m.w)``.

        Returns ``(S0, S1, S2, log_scale)``; the true values are
        ``exp(log_scale) * S_k``.
        """
        shift = np.asarray(shift, dtype=float)
        w = np.asarray(w, dtype=complex)
        y = w.imag
        c = self.Yinv @ y
        R = self.radius(order) if R is None else R
        n = self._enumerate(-(shift + c), R)
        m = n + shift
        quad = np.einsum("ki,ij,kj->k", m, self.tau, m)
        expo = 1j * math.pi * quad + 2j * math.pi * (m @ w)
        log_scale = math.pi * float(y @ c)
        terms = np.exp(expo - log_scale)
        S0 = terms.sum()
        S1 = S2 = None
        if order >= 1:
            S1 = (2j * math.pi) * (terms[:, None] * m).sum(axis=0)
        if order >= 2:
            S2 = (2j * math.pi) ** 2 * np.einsum("k,ki,kj->ij", terms, m, m)
        return S0, S1, S2, log_scale

    def evaluate(self, z, order: int = 0, shift=None, offset=None) -> ThetaValue:
        g = self.g
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        shift = np.zeros(g) if shift is None else np.asarray(shift, dtype=float)
        offset = np.zeros(g) if offset is None else np.asarray(offset, dtype=float)
        S0, S1, S2, ls = self._sum(shift, z + offset, order)
        scale = math.exp(ls)
        err = self.tail_bound(order) * scale
        return ThetaValue(
            complex(S0 * scale),
            None if S1 is None else S1 * scale,
            None if S2 is None else S2 * scale,
            err,
        )

    def characteristic(self, e) -> tuple[np.ndarray, np.ndarray]:
        """Real ``(eta', eta'')`` with ``e = eta'' + tau @ eta'``."""
        e = np.atleast_1d(np.asarray(e, dtype=complex))
        ep = self.Yinv @ e.imag
        epp = (e - self.tau @ ep).real
        return ep, epp


def theta(ctx: ThetaContext, z) -> ThetaValue:
    return ctx.evaluate(z, 0)


def theta_grad(ctx: ThetaContext, z) -> ThetaValue:
    return ctx.evaluate(z, 1)


def theta_derivatives(ctx: ThetaContext, z) -> ThetaValue:
    return ctx.evaluate(z, 2)


def theta_char(ctx: ThetaContext, eta_p, eta_pp, z=None, order: int = 0) -> ThetaValue:
    z = np.zeros(ctx.g, dtype=complex) if z is None else z
    return ctx.evaluate(z, order, shift=eta_p, offset=eta_pp)


def theta_at_point(ctx: ThetaContext, e, z=None, order: int = 0) -> ThetaValue:
    """``theta[e](z)`` in characteristic form."""
    ep, epp = ctx.characteristic(e)
    return theta_char(ctx, ep, epp, z, order)


def theta_scale(ctx: ThetaContext, e) -> float:
    """``sum |term|`` of the series for ``theta[e](0)``.

    The natural yardstick for deciding whether ``theta[e](0)`` vanishes: a
    value far below it can only come from cancellation.
    """
    ep, epp = ctx.characteristic(e)
    m = ctx._enumerate(-ep, ctx.radius(0)) + ep
    quad = np.einsum("ki,ij,kj->k", m, ctx.tau, m)
    return float(np.sum(np.exp(-math.pi * quad.imag)))


def theta_hessian_log(ctx: ThetaContext, e, threshold: float | None = None) -> np.ndarray:
    """Hessian of ``log theta[e]`` at ``z = 0``."""
    tv = theta_at_point(ctx, e, order=2)
    thr = 1e3 * ctx.eps if threshold is None else threshold
    if abs(tv.value) < thr:
        raise NearVanishing(f"|theta[e](0)| = {abs(tv.value):.3e} below {thr:.1e}")
    gr = tv.grad / tv.value
    H = tv.hessian / tv.value - np.outer(gr, gr)
    return (H + H.T) / 2
