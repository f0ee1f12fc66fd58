"""Fiber products of hyperelliptic curves over the Riemann sphere.

A curve is given by ``n`` polynomials ``f_j(x) = prod_i (x - lam[j, i])`` of
even degree ``2m`` with pairwise distinct roots.  Points are tuples
``(x, y_1, ..., y_n)`` with ``y_j**2 = f_j(x)``; the group ``Z_2^n`` acts by
sign changes of the ``y_j``.

Branch points are addressed either by ``(j, i)`` (factor, index) or by the flat
id ``j * 2m + i``.  Bit vectors ``v`` in ``Z_2^n`` are stored as tuples of 0/1
with ``v[j]`` referring to factor ``j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadShape,
    BranchPointEvaluation,
    DuplicateBranchPoint,
    UnsupportedFactor,
)

#: Relative tolerance defining curve membership.
MEMBERSHIP_TOL = 1e-10
#: Branch points above this modulus are rejected (quadrature conditioning).
MAX_BRANCH_MODULUS = 1e8
#: Pairwise distance below which two branch points are considered equal.
DUPLICATE_TOL = 1e-12


def bits_of(k: int, n: int) -> tuple[int, ...]:
    """Binary-counter bits of ``k``; bit ``j`` belongs to factor ``j``."""
    return tuple((k >> j) & 1 for j in range(n))


def group_elements(n: int) -> list[tuple[int, ...]]:
    """All of ``Z_2^n`` in binary-counter order, identity first."""
    return [bits_of(k, n) for k in range(2 ** n)]


def character(v: Sequence[int], g: Sequence[int]) -> int:
    """``(-1)^(v . g)``: the sign by which ``g`` acts on ``1 / y_v``."""
    return -1 if sum(a & b for a, b in zip(v, g)) % 2 else 1


@dataclass(frozen=True)
class HyperellipticFactor:
    index: int
    branch_points: tuple[complex, ...]

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.ones_like(x)
        for lam in self.branch_points:
            out = out * (x - lam)
        return out

    def reduced(self, x, i: int):
        """``f_j(x) / (x - lam_i)`` evaluated without cancellation."""
        x = np.asarray(x, dtype=complex)
        out = np.ones_like(x)
        for k, lam in enumerate(self.branch_points):
            if k != i:
                out = out * (x - lam)
        return out


@dataclass(frozen=True)
class FiberProductCurve:
    n: int
    m: int
    factors: tuple[HyperellipticFactor, ...]

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([f.branch_points for f in self.factors], dtype=complex)

    @property
    def branch_points(self) -> np.ndarray:
        """Flat array of all ``2mn`` branch points, factor-major."""
        return self.lambdas.reshape(-1)

    @property
    def num_branch_points(self) -> int:
        return 2 * self.m * self.n

    def branch_id(self, j: int, i: int) -> int:
        return j * 2 * self.m + i

    def branch_pair(self, bid: int) -> tuple[int, int]:
        return divmod(bid, 2 * self.m)

    def factor_of(self, bid: int) -> int:
        return bid // (2 * self.m)

    def genus(self) -> int:
        return genus(self)

    def f(self, x) -> np.ndarray:
        """Stack of ``f_j(x)``, shape ``(n,) + x.shape``."""
        return np.stack([fac(x) for fac in self.factors])

    def with_branch_point(self, bid: int, value: complex) -> "FiberProductCurve":
        lam = self.lambdas.copy()
        j, i = self.branch_pair(bid)
        lam[j, i] = value
        return validate_curve(self.n, self.m, lam)

    def with_lambdas(self, lam) -> "FiberProductCurve":
        return validate_curve(self.n, self.m, lam)

    def min_separation(self) -> float:
        b = self.branch_points
        d = np.abs(b[:, None] - b[None, :])
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    def to_json(self) -> list:
        return [{"lambda": [[float(z.real), float(z.imag)] for z in fac.branch_points]}
                for fac in self.factors]


def validate_curve(n: int, m: int, branch_points) -> FiberProductCurve:
    """Build a curve after checking every invariant.

    Raises
    ------
    BadShape
        Wrong number of factors or of branch points per factor, or a
        non-finite / oversized branch point.
    DuplicateBranchPoint
        Two branch points coincide (within ``DUPLICATE_TOL``).
    """
    problems = []
    if not isinstance(n, (int, np.integer)) or n < 1:
        problems.append(f"n must be a positive integer, got {n!r}")
    if not isinstance(m, (int, np.integer)) or m < 1:
        problems.append(f"m must be a positive integer, got {m!r}")
    if problems:
        raise BadShape(problems)
    rows = [list(r) for r in branch_points]
    if len(rows) != n:
        problems.append(f"expected {n} factors, got {len(rows)}")
    for j, row in enumerate(rows):
        if len(row) != 2 * m:
            problems.append(f"factor {j + 1}: expected {2 * m} branch points, got {len(row)}")
    flat = []
    for j, row in enumerate(rows):
        for i, z in enumerate(row):
            try:
                z = complex(z)
            except (TypeError, ValueError):
                problems.append(f"factor {j + 1}, point {i + 1}: not a number ({z!r})")
                continue
            if not np.isfinite(z):
                problems.append(f"factor {j + 1}, point {i + 1}: not finite")
            elif abs(z) > MAX_BRANCH_MODULUS:
                problems.append(f"factor {j + 1}, point {i + 1}: |lambda| > {MAX_BRANCH_MODULUS:g}")
            flat.append(((j, i), z))
    if problems:
        raise BadShape(problems)
    dups = []
    for (a, za), (b, zb) in itertools.combinations(flat, 2):
        if abs(za - zb) <= DUPLICATE_TOL * max(1.0, abs(za)):
            dups.append(f"lambda{a[0] + 1},{a[1] + 1} == lambda{b[0] + 1},{b[1] + 1} ({za})")
    if dups:
        raise DuplicateBranchPoint(dups)
    factors = tuple(
        HyperellipticFactor(j + 1, tuple(complex(z) for z in row)) for j, row in enumerate(rows)
    )
    return FiberProductCurve(int(n), int(m), factors)


def genus(curve: FiberProductCurve) -> int:
    return (curve.m * curve.n - 2) * 2 ** (curve.n - 1) + 1


# --------------------------------------------------------------------------
# points and automorphisms


@dataclass(frozen=True)
class SurfacePoint:
    x: complex
    y: tuple[complex, ...]
    is_branch: bool = False
    factor_of_branch: int | None = None

    def on_curve(self, curve: FiberProductCurve, tol: float = MEMBERSHIP_TOL) -> bool:
        fx = curve.f(self.x)
        y = np.asarray(self.y)
        return bool(np.all(np.abs(y ** 2 - fx) <= tol * (1 + np.abs(fx))))


def point_on_sheet(curve: FiberProductCurve, x: complex, sheet=None) -> SurfacePoint:
    """The point above ``x`` whose ``y_j`` is ``(-1)^sheet[j]`` times the
    principal square root of ``f_j(x)``."""
    sheet = (0,) * curve.n if sheet is None else tuple(sheet)
    fx = curve.f(complex(x))
    y = np.sqrt(fx) * np.array([-1 if s else 1 for s in sheet])
    hit = np.isclose(curve.branch_points, x, rtol=0, atol=DUPLICATE_TOL * max(1, abs(x)))
    if hit.any():
        j = curve.factor_of(int(np.argmax(hit)))
        return SurfacePoint(complex(x), tuple(complex(v) for v in y), True, j)
    return SurfacePoint(complex(x), tuple(complex(v) for v in y))


@dataclass(frozen=True)
class AutomorphismElement:
    bits: tuple[int, ...]

    def apply(self, p: SurfacePoint) -> SurfacePoint:
        y = tuple(-yj if b else yj for yj, b in zip(p.y, self.bits))
        return SurfacePoint(p.x, y, p.is_branch, p.factor_of_branch)

    def compose(self, other: "AutomorphismElement") -> "AutomorphismElement":
        return AutomorphismElement(tuple(a ^ b for a, b in zip(self.bits, other.bits)))


# --------------------------------------------------------------------------
# holomorphic differentials


@dataclass(frozen=True)
class DifferentialIndex:
    """The differential ``x^l dx / prod_{j : v_j = 1} y_j``."""

    v: tuple[int, ...]
    l: int

    @property
    def s(self) -> int:
        return sum(self.v)


def enumerate_differential_basis(curve: FiberProductCurve) -> list[DifferentialIndex]:
    """Basis of holomorphic differentials, ``0 <= l <= m*|v| - 2``.

    Ordered by ``v`` in binary-counter order, then ``l`` ascending.
    """
    basis = []
    for k in range(1, 2 ** curve.n):
        v = bits_of(k, curve.n)
        s = sum(v)
        basis.extend(DifferentialIndex(v, l) for l in range(curve.m * s - 1))
    return basis


def basis_arrays(basis: Sequence[DifferentialIndex]) -> tuple[np.ndarray, np.ndarray]:
    """``(V, L)``: support bits ``(g, n)`` and exponents ``(g,)``."""
    V = np.array([d.v for d in basis], dtype=int).reshape(len(basis), -1)
    L = np.array([d.l for d in basis], dtype=int)
    return V, L


def differential_values(V: np.ndarray, L: np.ndarray, x, y) -> np.ndarray:
    """Coefficients w.r.t. ``dx`` of all basis differentials.

    ``x`` has shape ``(N,)`` and ``y`` shape ``(n, N)``; returns ``(g, N)``.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    inv = 1.0 / y
    out = np.empty((len(L), x.size), dtype=complex)
    for k in range(len(L)):
        val = x ** L[k]
        for j in np.nonzero(V[k])[0]:
            val = val * inv[j]
        out[k] = val
    return out


def evaluate_differential(curve: FiberProductCurve, d: DifferentialIndex, p: SurfacePoint) -> complex:
    """``x^l / y_v`` at a regular point ``p``."""
    for j, b in enumerate(d.v):
        if b and (p.y[j] == 0 or (p.is_branch and p.factor_of_branch == j)):
            raise BranchPointEvaluation(
                f"y_{j + 1} vanishes at x={p.x}; use branch_local_coefficient"
            )
    val = complex(p.x) ** d.l
    for j, b in enumerate(d.v):
        if b:
            val /= p.y[j]
    return val


def branch_local_coefficient(curve: FiberProductCurve, d: DifferentialIndex, branch, sheet=None) -> complex:
    """Leading coefficient ``c0`` of ``d`` in the local coordinate at a
    ramification point.

    The coordinate is ``t`` with ``x = lam + t^2`` and
    ``y_j = t * sqrt(f_j(x) / (x - lam))`` (principal root at ``x = lam``).
    ``sheet`` gives the signs (0/1 bits) of the other ``y_k`` relative to the
    principal root of ``f_k(lam)``; bit ``j`` is ignored.
    """
    j, i = branch
    if not d.v[j]:
        raise UnsupportedFactor(
            f"differential {d} has v_{j + 1} = 0: no dt^0 term at a branch point of factor {j + 1}"
        )
    c = _local_coefficient(curve, d.v, d.l, j, i, sheet)
    return complex(c)


def _local_coefficient(curve, v, l, j, i, sheet):
    n = curve.n
    sheet = (0,) * n if sheet is None else tuple(sheet)
    lam = curve.lambdas[j, i]
    val = 2 * lam ** l
    if v[j]:
        val /= np.sqrt(curve.factors[j].reduced(lam, i))
    else:
        return 0j
    for k in range(n):
        if k != j and v[k]:
            yk = np.sqrt(curve.factors[k](lam)) * (-1 if sheet[k] else 1)
            val /= yk
    return val


def local_coefficient_matrix(curve: FiberProductCurve, basis, bid: int) -> np.ndarray:
    """Leading ``dt`` coefficients of every basis differential at every point
    of the fiber over branch point ``bid``; shape ``(2^(n-1), g)``.

    Differentials with ``v_j = 0`` contribute exact zeros.
    """
    j, i = curve.branch_pair(bid)
    rows = []
    for g_bits in group_elements(curve.n):
        if g_bits[j]:
            continue
        rows.append([_local_coefficient(curve, d.v, d.l, j, i, g_bits) for d in basis])
    return np.array(rows, dtype=complex)
