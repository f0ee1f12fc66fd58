"""Independent closed-form references used to validate the numerics."""
from __future__ import annotations

import math

import numpy as np


def agm(a: float, b: float, tol: float = 1e-16) -> float:
    """Arithmetic-geometric mean of two positive reals."""
    if a <= 0 or b <= 0:
        raise ValueError("agm needs positive arguments")
    for _ in range(64):
        a, b = (a + b) / 2, math.sqrt(a * b)
        if abs(a - b) <= tol * a:
            break
    return (a + b) / 2


def ellipk_agm(k: float) -> float:
    """Complete elliptic integral ``K(k)`` (modulus ``k``) as ``pi / (2 agm(1, k'))``."""
    return math.pi / (2 * agm(1.0, math.sqrt(1 - k * k)))


def legendre_tau(k: float) -> complex:
    """Period ratio of ``dx / sqrt((1 - x^2)(1 - k^2 x^2))``.

    The period lattice is spanned by ``4K`` and ``2iK'``, hence
    ``tau = i K' / (2K)``.
    """
    return 1j * ellipk_agm(math.sqrt(1 - k * k)) / (2 * ellipk_agm(k))


def agm_complex(a: complex, b: complex, tol: float = 1e-16) -> complex:
    """AGM with the optimal square root at each step (``|a' - b'| <= |a' + b'|``).

    Any choice of roots yields a period of the curve; the optimal one gives
    the standard branch, which matches the real AGM on positive reals.
    """
    a, b = complex(a), complex(b)
    for _ in range(64):
        a1 = (a + b) / 2
        b1 = np.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if abs(a - b) <= tol * abs(a):
            break
    return (a + b) / 2


def ellipk_param(mpar: complex) -> complex:
    """``K`` as a function of the parameter ``m = k^2``, complex allowed."""
    return np.pi / (2 * agm_complex(1.0, np.sqrt(1 - complex(mpar))))


def quartic_tau(roots) -> complex:
    """Reduced ``tau`` for ``y^2 = prod (x - r_i)`` over four distinct roots.

    A Moebius map sends the roots to ``0, 1, oo, L`` with ``L`` their cross
    ratio; ``y^2 = x (x - 1)(x - L)`` has ``tau = i K(1 - L) / K(L)``.  The
    value is only meaningful modulo SL(2, Z), hence the reduction.
    """
    r1, r2, r3, r4 = (complex(r) for r in roots)
    L = (r4 - r1) * (r2 - r3) / ((r4 - r3) * (r2 - r1))
    return reduce_modular(1j * ellipk_param(1 - L) / ellipk_param(L))


def reduce_modular(tau: complex, max_iter: int = 200) -> complex:
    """Representative of ``tau`` in the standard fundamental domain of SL(2, Z)."""
    tau = complex(tau)
    for _ in range(max_iter):
        tau = tau - math.floor(tau.real + 0.5)
        if abs(tau) < 1 - 1e-15:
            tau = -1 / tau
        else:
            break
    return tau


def symmetric_quartic_tau(k: float) -> complex:
    """``tau`` (reduced) for ``y^2 = (x^2 - 1)(x^2 - k^2)``, ``0 < k < 1``.

    Scaling ``x = k s`` turns it into Legendre form with modulus ``k``.
    """
    return reduce_modular(legendre_tau(k))
