"""Exact combinatorics of branch-point divisors labelled by 0/1 vectors.

A labelling ``beta`` (shape ``n x 2m``) defines the divisor
``D = sum beta_ji * (reduced fiber over lam_ji) - (sum of the points over oo)``.
Everything here is exact: integers and :class:`fractions.Fraction`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .curve import FiberProductCurve, group_elements
from .errors import SamePoint, ShapeMismatch

QUARTER = Fraction(1, 4)


@dataclass(frozen=True)
class BetaVector:
    entries: tuple[tuple[int, ...], ...]

    @classmethod
    def from_any(cls, curve: FiberProductCurve, beta) -> "BetaVector":
        if isinstance(beta, BetaVector):
            rows = beta.entries
        else:
            arr = np.asarray(beta)
            if arr.ndim == 1 and curve.n == 1:
                arr = arr[None, :]
            rows = tuple(tuple(int(b) for b in row) for row in arr.tolist()) if arr.ndim == 2 else ()
        if len(rows) != curve.n or any(len(r) != 2 * curve.m for r in rows):
            raise ShapeMismatch(
                f"beta must have shape ({curve.n}, {2 * curve.m}), got {np.shape(beta)}"
            )
        if any(b not in (0, 1) for r in rows for b in r):
            raise ShapeMismatch("beta entries must be 0 or 1")
        return cls(tuple(tuple(r) for r in rows))

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(b for row in self.entries for b in row)

    def complement(self) -> "BetaVector":
        return BetaVector(tuple(tuple(1 - b for b in row) for row in self.entries))

    def __str__(self) -> str:
        return "|".join("".join(map(str, r)) for r in self.entries)


TauProfile = dict  # v (bit tuple) -> int


def tau_profile(curve: FiberProductCurve, beta) -> TauProfile:
    """``tau_v = mn - sum_{j,i} ((beta_ji + v_j) mod 2)`` for every ``v``."""
    b = BetaVector.from_any(curve, beta)
    mn = curve.m * curve.n
    out = {}
    for v in group_elements(curve.n):
        odd = sum((bji + v[j]) % 2 for j, row in enumerate(b.entries) for bji in row)
        out[v] = mn - odd
    return out


def tau_profile_array(n: int, m: int, betas) -> np.ndarray:
    """Vectorized :func:`tau_profile` for a stack of labellings.

    ``betas`` has shape ``(K, n, 2m)``; the result has shape ``(K, 2^n)``,
    columns in the order of :func:`group_elements`.
    """
    B = np.asarray(betas, dtype=np.int64)
    ones = B.sum(axis=2)  # (K, n)
    out = []
    for v in group_elements(n):
        vv = np.asarray(v, dtype=np.int64)
        # entries flipped by v_j count as 1 - beta
        odd = np.where(vv == 1, 2 * m - ones, ones).sum(axis=1)
        out.append(m * n - odd)
    return np.stack(out, axis=1)


def all_labellings(n: int, m: int) -> np.ndarray:
    """Every 0/1 array of shape ``(n, 2m)``, stacked in counting order."""
    N = n * 2 * m
    k = np.arange(2 ** N, dtype=np.int64)
    bits = (k[:, None] >> np.arange(N - 1, -1, -1)) & 1
    return bits.reshape(-1, n, 2 * m).astype(np.int8)


def r_minus_D(curve: FiberProductCurve, beta) -> int:
    return sum(max(0, t) for t in tau_profile(curve, beta).values())


def is_admissible(curve: FiberProductCurve, beta) -> bool:
    return all(t == 0 for t in tau_profile(curve, beta).values())


def enumerate_admissible(curve: FiberProductCurve) -> Iterator[BetaVector]:
    """Admissible labellings (exactly ``m`` ones per factor), lexicographic."""
    m = curve.m
    rows = [r for r in itertools.product((0, 1), repeat=2 * m) if sum(r) == m]
    for combo in itertools.product(rows, repeat=curve.n):
        yield BetaVector(tuple(combo))


def enumerate_all(curve: FiberProductCurve) -> Iterator[BetaVector]:
    N = 2 * curve.m
    for flat in itertools.product((0, 1), repeat=N * curve.n):
        yield BetaVector(tuple(flat[j * N:(j + 1) * N] for j in range(curve.n)))


def divisor_degree(curve: FiberProductCurve, beta) -> int:
    b = BetaVector.from_any(curve, beta)
    return 2 ** (curve.n - 1) * sum(b.flat) - 2 ** curve.n


def _check_pair(curve, p1: int, p2: int):
    N = curve.num_branch_points
    if not (0 <= p1 < N and 0 <= p2 < N):
        raise ShapeMismatch(f"branch ids must lie in [0, {N}), got {p1}, {p2}")
    if p1 == p2:
        raise SamePoint(f"q and gamma need two distinct branch points, got {p1} twice")


def _parity_shift(beta_value: int, vj: int) -> Fraction:
    # fractional part of (beta + v)/2, minus 1/4; always +-1/4
    return Fraction((beta_value + vj) % 2, 2) - QUARTER


def q_pair_sum(curve: FiberProductCurve, beta: BetaVector, p1: int, p2: int) -> Fraction:
    """Unchecked single-sum ``q``; also defined for ``p1 == p2``."""
    flat = beta.flat
    j1, j2 = curve.factor_of(p1), curve.factor_of(p2)
    return sum(
        (_parity_shift(flat[p1], v[j1]) * _parity_shift(flat[p2], v[j2]) for v in group_elements(curve.n)),
        Fraction(0),
    )


def q_exponent(curve: FiberProductCurve, beta, p1: int, p2: int) -> Fraction:
    """``sum_v ({(b1 + v_j1)/2} - 1/4) * ({(b2 + v_j2)/2} - 1/4)``."""
    b = BetaVector.from_any(curve, beta)
    _check_pair(curve, p1, p2)
    return q_pair_sum(curve, b, p1, p2)


def gamma_exponent(curve: FiberProductCurve, p1: int, p2: int) -> Fraction:
    _check_pair(curve, p1, p2)
    return Fraction(1, 8) if curve.factor_of(p1) == curve.factor_of(p2) else Fraction(1, 16)


@dataclass(frozen=True)
class ExponentTable:
    q: dict
    gamma: dict

    def pairs(self):
        return sorted(self.q)


def exponent_table(curve: FiberProductCurve, beta) -> ExponentTable:
    b = BetaVector.from_any(curve, beta)
    q, gam = {}, {}
    for p1, p2 in itertools.combinations(range(curve.num_branch_points), 2):
        q[(p1, p2)] = q_pair_sum(curve, b, p1, p2)
        gam[(p1, p2)] = gamma_exponent(curve, p1, p2)
    return ExponentTable(q, gam)


def q_matrix(curve: FiberProductCurve, beta) -> np.ndarray:
    """Full ``q`` table as floats, diagonal included (single-sum formula)."""
    b = BetaVector.from_any(curve, beta)
    N = curve.num_branch_points
    out = np.zeros((N, N))
    for p1 in range(N):
        for p2 in range(p1, N):
            out[p1, p2] = out[p2, p1] = float(q_pair_sum(curve, b, p1, p2))
    return out


def gamma_matrix(curve: FiberProductCurve) -> np.ndarray:
    N = curve.num_branch_points
    fac = np.arange(N) // (2 * curve.m)
    out = np.where(fac[:, None] == fac[None, :], 1 / 8, 1 / 16)
    np.fill_diagonal(out, 0.0)
    return out
