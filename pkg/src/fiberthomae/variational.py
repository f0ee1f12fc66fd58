"""Dependence of the period matrix on a branch point.

With differentials normalized by ``oint_{a_k} v_j = 2 pi i delta_jk`` (the
normalization under which the variational formula reads
``dT/dlam_i = 1/2 sum_Q v(Q) v(Q)^T`` for ``T = 2 pi i tau``), the
derivative of the standard ``tau`` is that expression divided by ``2 pi i``.
``v(Q)`` is the ``dt`` coefficient at ``Q`` in the local coordinate
``t = (x - lam_i)^(1/2)``; its sign ambiguity cancels in the product.
"""
from __future__ import annotations

import numpy as np

from .curve import FiberProductCurve, local_coefficient_matrix
from .errors import BasisJump
from .periods import PeriodData, compute_periods

TWO_PI_I = 2j * np.pi


def local_normalized(curve: FiberProductCurve, periods: PeriodData, bid: int) -> np.ndarray:
    """``dt`` coefficients of the ``2 pi i``-normalized differentials at the
    points over ``bid``; shape ``(2^(n-1), g)``."""
    C = local_coefficient_matrix(curve, list(periods.basis.differentials), bid)
    return TWO_PI_I * (C @ periods.Ainv)


def variational_prediction(curve: FiberProductCurve, periods: PeriodData, bid: int) -> np.ndarray:
    """``d tau / d lam_bid`` from ``1/2 sum_Q v(Q) v(Q)^T`` (see module doc)."""
    v = local_normalized(curve, periods, bid)
    return 0.5 * (v.T @ v) / TWO_PI_I


def dtau_dlambda_fd(curve: FiberProductCurve, bid: int, h: float = 1e-5,
                    periods: PeriodData | None = None, direction: complex = 1.0) -> np.ndarray:
    """Central difference of ``tau`` in ``lam_bid`` along ``direction``.

    The homology basis of ``periods`` (computed if omitted) is transported to
    both perturbed curves.

    Raises
    ------
    BasisJump
        If the intersection data change between the perturbed runs.
    """
    base = compute_periods(curve) if periods is None else periods
    lam = curve.branch_points[bid]
    step = h * direction
    plus = compute_periods(curve.with_branch_point(bid, lam + step), reference=base)
    minus = compute_periods(curve.with_branch_point(bid, lam - step), reference=base)
    if plus.basis.fingerprint != minus.basis.fingerprint:
        raise BasisJump("perturbed homology bases differ")
    return (plus.tau - minus.tau) / (2 * step)


def richardson_estimate(curve, bid: int, h: float = 1e-5, periods: PeriodData | None = None) -> float:
    """Difference between steps ``h`` and ``h/2`` (relative); second order
    differences make the true error about a third of it."""
    d1 = dtau_dlambda_fd(curve, bid, h, periods)
    d2 = dtau_dlambda_fd(curve, bid, h / 2, periods)
    return float(np.max(np.abs(d1 - d2)) / np.max(np.abs(d2)))
