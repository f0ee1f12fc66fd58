r"""Algebraic Szego kernel, its expansion, the xi bidifferential and the
Fay-product check.

For an admissible ``beta`` and ``v`` in ``Z_2^n`` let

.. math::

    f_{\beta,v}(x) = \prod_{j,i} (x - \lambda_{ji})^{\{(\beta_{ji} + v_j)/2\} - 1/4}.

Per factor the exponents are ``+-1/4``, so ``f_{beta,v} = prod_j h_j^{(-1)^v_j / 2}``
with ``h_j = B_j / y_j`` and ``B_j = prod_{beta_ji = 1} (x - lam_ji)``; writing
``y_j`` instead of ``f_j^{1/2}`` is what makes the kernel a function on
``X x X``.  Summing over ``v`` factorizes:

.. math::

    F_\beta(P, Q) = \frac{1}{2^n} \sum_v \frac{f_{\beta,v}(x_1)}{f_{\beta,v}(x_2)}
        \frac{1}{x_2 - x_1}
      = \frac{\prod_j \cosh \varphi_j}{x_2 - x_1},
    \qquad \varphi_j = \tfrac12 \log \frac{h_j(P)}{h_j(Q)},

with the logarithm continued along a sheet-tracked path from ``Q`` to ``P``.
When the continued ``y_j`` arrives at ``-y_j(P)`` the convention
``log(-1) = +i pi`` is used; it only fixes an overall sign.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curve import FiberProductCurve, SurfacePoint, group_elements
from .divisors import BetaVector, is_admissible, q_pair_sum
from .errors import CoincidentPoints, FitDiverged, InvalidInput, PathClearance, ClearanceViolation
from .paths import continue_sheets, route
from .periods import PeriodData, lattice_distance
from .theta import ThetaContext, theta_at_point

FIT_SAMPLES = 64
FIT_RADIUS = 0.05  # fraction of the distance to the nearest branch point
FIT_TOL = 1e-9


@dataclass(frozen=True)
class FractionalPowerProduct:
    beta: BetaVector
    v: tuple[int, ...]
    cut: str = "continued-log"

    @property
    def exponents(self) -> tuple[Fraction, ...]:
        out = []
        for j, row in enumerate(self.beta.entries):
            for b in row:
                out.append(Fraction((b + self.v[j]) % 2, 2) - Fraction(1, 4))
        return tuple(out)

    def log_derivative(self, curve: FiberProductCurve, x) -> complex:
        e = np.array([float(c) for c in self.exponents])
        return complex(np.sum(e / (x - curve.branch_points)))


@dataclass(frozen=True)
class ExpansionFit:
    c0: complex
    c1: complex
    c2: complex
    residual: float
    radius: float


def _ones_mask(curve, beta: BetaVector) -> np.ndarray:
    return np.array(beta.entries, dtype=bool)


def _log_h_increments(curve, mask, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """``sum_k log(h_j(x_{k+1}) / h_j(x_k))`` per factor (principal steps)."""
    lam = curve.lambdas
    out = np.zeros(curve.n, complex)
    for j in range(curve.n):
        num = np.zeros(len(x) - 1, complex)
        for lj in lam[j][mask[j]]:
            num += np.log((x[1:] - lj) / (x[:-1] - lj))
        out[j] = np.sum(num - np.log(Y[j, 1:] / Y[j, :-1]))
    return out


def _check_beta(curve, beta) -> BetaVector:
    b = BetaVector.from_any(curve, beta)
    if not is_admissible(curve, b):
        raise InvalidInput(f"beta {b} is not admissible (needs exactly m ones per factor)")
    return b


def _phi(curve, b: BetaVector, P: SurfacePoint, Q: SurfacePoint) -> np.ndarray:
    """Continued ``phi_j`` from ``Q`` to ``P``."""
    mask = _ones_mask(curve, b)
    if P.x == Q.x:
        inc = np.zeros(curve.n, complex)
        y_end = np.asarray(Q.y)
    else:
        try:
            tr = continue_sheets(curve, route(curve, Q.x, P.x), Q)
        except ClearanceViolation as exc:
            raise PathClearance(str(exc)) from exc
        inc = _log_h_increments(curve, mask, tr.waypoints, tr.y_tracks.T)
        y_end = tr.y_tracks[-1]
    flip = np.real(np.conj(y_end) * np.asarray(P.y)) < 0
    return 0.5 * inc + np.where(flip, 0.5j * np.pi, 0.0)


def _circle(curve, x0: complex, radius: float | None, K: int):
    d = float(np.min(np.abs(curve.branch_points - x0)))
    r = FIT_RADIUS * d if radius is None else radius
    th = 2 * np.pi * np.arange(K) / K
    return r, x0 + r * np.exp(1j * th), th


def _radial_track(curve, P: SurfacePoint, xs: np.ndarray):
    """Values of ``y`` at each ``xs`` continued radially from ``P`` (inside a
    branch-point-free disc)."""
    Fx = curve.f(xs)
    P0 = np.asarray(P.y)[:, None]
    ratio = np.sqrt(Fx / curve.f(P.x)[:, None])  # ~1 inside the disc
    return P0 * ratio


def _G_near(curve, mask, P: SurfacePoint, xs: np.ndarray, Q: SurfacePoint | None = None) -> np.ndarray:
    """``prod_j cosh(phi_j)`` for points near ``P`` (radially continued) against ``Q``
    (default ``P``)."""
    Y = _radial_track(curve, P, xs)
    lam = curve.lambdas
    G = np.ones(len(xs), complex)
    base = np.zeros(curve.n, complex) if Q is None else _phi(curve, BetaVector(tuple(tuple(int(b) for b in r) for r in mask)), P, Q)
    for j in range(curve.n):
        lh = np.zeros(len(xs), complex)
        for lj in lam[j][mask[j]]:
            lh += np.log((xs - lj) / (P.x - lj))
        lh -= np.log(Y[j] / P.y[j])
        G *= np.cosh(base[j] + 0.5 * lh)
    return G


def szego_algebraic(curve: FiberProductCurve, beta, P: SurfacePoint, Q: SurfacePoint) -> complex:
    """``F_beta(P, Q)`` relative to ``sqrt(dx_1) sqrt(dx_2)``.

    Raises
    ------
    CoincidentPoints
        If ``P == Q``.
    PathClearance
        If the continuation path cannot keep clear of branch points.
    """
    b = _check_beta(curve, beta)
    same_y = np.allclose(P.y, Q.y, rtol=1e-12, atol=1e-14)
    if P.x == Q.x and same_y:
        raise CoincidentPoints("F has a pole on the diagonal")
    if P.x == Q.x:
        # regular there; value = mean over a small circle (Cauchy)
        mask = _ones_mask(curve, b)
        r, xs, _ = _circle(curve, P.x, None, FIT_SAMPLES)
        G = _G_near(curve, mask, P, xs, Q)
        return complex(np.mean(G / (Q.x - xs)))
    phi = _phi(curve, b, P, Q)
    return complex(np.prod(np.cosh(phi)) / (Q.x - P.x))


def szego_expansion_fit(curve: FiberProductCurve, beta, P: SurfacePoint,
                        radius: float | None = None, samples: int = FIT_SAMPLES) -> ExpansionFit:
    """Taylor coefficients of ``(x_2 - x_1) F(P_1, P)`` in ``x_1 - x_2``.

    Coefficients are discrete Fourier coefficients on a circle of radius
    ``radius`` around ``x_2 = x(P)``; ``residual`` is the size of the top
    retained coefficients, a proxy for aliasing.
    """
    b = _check_beta(curve, beta)
    return _fit(_G_near(curve, _ones_mask(curve, b), P, _circle(curve, P.x, radius, samples)[1]),
                _circle(curve, P.x, radius, samples)[0])


def _fit(G: np.ndarray, r: float) -> ExpansionFit:
    K = len(G)
    c = np.fft.fft(G) / K
    coeff = c * r ** (-np.arange(K, dtype=float))
    tail = float(np.max(np.abs(c[K // 2 - 4:K // 2 + 4])))
    if not np.all(np.isfinite(c)) or tail > FIT_TOL:
        raise FitDiverged(f"expansion fit tail {tail:.2e} exceeds {FIT_TOL:.0e}")
    return ExpansionFit(complex(coeff[0]), complex(coeff[1]), complex(coeff[2]), tail, r)


def szego_c2_exact(curve: FiberProductCurve, beta, x: complex, reading: str = "normalized") -> complex:
    """Second-order coefficient predicted from the ``q`` table.

    ``reading`` selects how the pair sum is interpreted:

    ``"normalized"``
        ``1/2 sum_{i,j} (q_ij / 2^n) / ((x - lam_i)(x - lam_j))`` over ordered
        pairs, diagonal included (``q`` from the single sum over ``v``).
        This is the expansion of ``prod_j cosh(phi_j)``.
    ``"offdiagonal"``
        ``1/2 sum_{i != j} q_ij / (...)``: unnormalized, diagonal dropped.
    ``"double_sum"``
        ``q`` as a double sum over ``v_1, v_2``; it factorizes to zero.
    """
    b = BetaVector.from_any(curve, beta)
    N = curve.num_branch_points
    d = 1.0 / (x - curve.branch_points)
    if reading == "double_sum":
        return 0j
    total = 0j
    for i in range(N):
        for j in range(N):
            if reading == "offdiagonal" and i == j:
                continue
            q = float(q_pair_sum(curve, b, i, j))
            if reading == "normalized":
                q /= 2 ** curve.n
            total += q * d[i] * d[j]
    return 0.5 * total


def fay_product_c2_exact(curve: FiberProductCurve, beta, x: complex) -> complex:
    """``1/2 sum_{i,j} q(beta_i, beta_j) / ((x - lam_i)(x - lam_j))``, all
    ordered pairs with the diagonal, ``q`` the single sum over ``v``."""
    b = BetaVector.from_any(curve, beta)
    N = curve.num_branch_points
    d = 1.0 / (x - curve.branch_points)
    Q = np.array([[float(q_pair_sum(curve, b, i, j)) for j in range(N)] for i in range(N)])
    return complex(0.5 * d @ Q @ d)


def theta_side_gradcheck(curve, periods: PeriodData, beta, z0=None, abel=None) -> float:
    """``|grad theta[e_beta](0)| / |theta[e_beta](0)|`` for admissible ``beta``."""
    from .abel import AbelMap

    b = _check_beta(curve, beta)
    am = abel if abel is not None else AbelMap(curve, periods, z0)
    ctx = ThetaContext((periods.tau + periods.tau.T) / 2)
    tv = theta_at_point(ctx, am.e_beta(b).value, order=1)
    return float(np.linalg.norm(tv.grad) / abs(tv.value))


def xi_form(curve: FiberProductCurve, P: SurfacePoint, Q: SurfacePoint) -> complex:
    """``xi(P, Q)`` relative to ``dz(x) dz(y)`` with ``P_v`` truncated to
    ``A_0 + A_1 (z - w)``, ``A_0 = prod_{v_j = 1} f_j(w)``, ``A_1 = A_0' / 2``."""
    if P.x == Q.x:
        if np.allclose(P.y, Q.y, rtol=1e-12, atol=1e-14):
            raise CoincidentPoints("xi has a double pole on the diagonal")
        r, xs, _ = _circle(curve, P.x, None, FIT_SAMPLES)
        Y = _radial_track(curve, P, xs)
        return complex(np.mean([_xi_value(curve, xs[k], Y[:, k], Q) for k in range(len(xs))]))
    return _xi_value(curve, P.x, np.asarray(P.y), Q)


def _xi_value(curve, z, yz, Q: SurfacePoint) -> complex:
    w = Q.x
    yw = np.asarray(Q.y)
    dlogf = np.array([np.sum(1.0 / (w - lam)) for lam in curve.lambdas])
    total = 0j
    for v in group_elements(curve.n):
        sel = np.array(v, dtype=bool)
        A0 = complex(np.prod(yw[sel] ** 2)) if sel.any() else 1.0
        A1 = 0.5 * A0 * float(0) if not sel.any() else 0.5 * A0 * complex(np.sum(dlogf[sel]))
        sz = complex(np.prod(yz[sel])) if sel.any() else 1.0
        sw = complex(np.prod(yw[sel])) if sel.any() else 1.0
        total += (A0 + A1 * (z - w)) / (sz * sw * (z - w) ** 2)
    return total / 2 ** curve.n


def xi_expansion_fit(curve, P: SurfacePoint, radius=None, samples: int = FIT_SAMPLES) -> ExpansionFit:
    """Laurent coefficients of ``xi(P_1, P)`` times ``(z_1 - z)^2``."""
    r, xs, _ = _circle(curve, P.x, radius, samples)
    Y = _radial_track(curve, P, xs)
    vals = np.array([_xi_value(curve, xs[k], Y[:, k], P) for k in range(len(xs))])
    return _fit(vals * (xs - P.x) ** 2, r)


def fay_bilinear_check(curve, periods: PeriodData, beta, P: SurfacePoint, abel=None,
                       radius=None) -> dict:
    """Expansion of ``F_beta(P_1, P) F_beta'(P_1, P)`` with ``beta'`` the
    complement, against the pair sum of :func:`fay_product_c2_exact`.

    Before comparing, ``e_beta'`` is checked to be ``-e_beta`` modulo the
    lattice; otherwise the result carries ``skipped`` with a reason.
    """
    from .abel import AbelMap

    b = _check_beta(curve, beta)
    bc = b.complement()
    am = abel if abel is not None else AbelMap(curve, periods)
    e1 = am.e_beta(b).value
    e2 = am.e_beta(bc).value
    dist = lattice_distance(periods.tau, e1 + e2)
    if dist > 1e-8:
        return {"skipped": f"e of the complement is not -e (lattice distance {dist:.2e})"}
    mask1, mask2 = _ones_mask(curve, b), _ones_mask(curve, bc)
    r, xs, _ = _circle(curve, P.x, radius, FIT_SAMPLES)
    G = _G_near(curve, mask1, P, xs) * _G_near(curve, mask2, P, xs)
    fit = _fit(G, r)
    exact = fay_product_c2_exact(curve, b, P.x)
    return {
        "c0": fit.c0,
        "c1": fit.c1,
        "c2": fit.c2,
        "c2_exact": exact,
        "complement_lattice_distance": dist,
        "residual_c0": abs(fit.c0 - 1),
        "residual_c1": abs(fit.c1),
        "residual_c2": abs(fit.c2 - exact) / max(abs(exact), 1e-300),
    }


def szego_theta_genus1(curve, periods: PeriodData, beta, P: SurfacePoint, Q: SurfacePoint,
                       abel=None) -> complex:
    """Square of the theta-side Szego kernel at genus one, relative to
    ``dx_1 dx_2``:

    ``S^2 = (theta[e](z) theta_1'(0) / (theta[e](0) theta_1(z)))^2 v(P) v(Q)``

    with ``z = u(P) - u(Q)``, ``theta_1`` the odd theta function and ``v`` the
    normalized differential.
    """
    from .abel import AbelMap

    if periods.g != 1:
        raise InvalidInput("the closed-form oracle needs genus 1")
    b = _check_beta(curve, beta)
    am = abel if abel is not None else AbelMap(curve, periods)
    ctx = ThetaContext(periods.tau)
    e = am.e_beta(b).value
    z = am(P, reduce=False).value - am(Q, reduce=False).value
    odd = np.array([0.5]), np.array([0.5])
    th_e = theta_at_point(ctx, e, z).value
    th_e0 = theta_at_point(ctx, e).value
    th1 = ctx.evaluate(z, 0, shift=odd[0], offset=odd[1]).value
    th1p = ctx.evaluate(np.zeros(1), 1, shift=odd[0], offset=odd[1]).grad[0]
    a = periods.Ainv[0, 0]
    vP = a / P.y[0]
    vQ = a / Q.y[0]
    return complex((th_e * th1p / (th_e0 * th1)) ** 2 * vP * vQ)
