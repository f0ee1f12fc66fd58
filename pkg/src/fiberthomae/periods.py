"""Period matrices and points of the Jacobian.

``A[i, k]`` is the integral of the ``k``-th basis differential over the
``i``-th a-cycle (rows = cycles), likewise ``B``.  The normalized
differentials are ``v = omega @ inv(A)``, so ``tau = B @ inv(A)`` in this
row convention; it equals the transpose of ``inv(A') @ B'`` for the
column-oriented matrices ``A' = A.T``, ``B' = B.T``, and is symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import FiberProductCurve
from .errors import IllConditioned
from .homology import PERIOD_TOL, HomologyBasis, homology_basis

COND_MAX = 1e12


@dataclass
class PeriodData:
    A: np.ndarray
    B: np.ndarray
    tau: np.ndarray
    detC: complex
    diagnostics: dict
    basis: HomologyBasis | None = None
    curve: FiberProductCurve | None = None

    @property
    def g(self) -> int:
        return self.A.shape[0]

    @property
    def Ainv(self) -> np.ndarray:
        return np.linalg.inv(self.A)

    def normalize(self, raw) -> np.ndarray:
        """Raw integrals of the basis differentials -> normalized coordinates."""
        return np.asarray(raw) @ self.Ainv

    def to_json(self) -> dict:
        def mat(M):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(M)]

        return {
            "A": mat(self.A),
            "B": mat(self.B),
            "tau": mat(self.tau),
            "detC": [float(self.detC.real), float(self.detC.imag)],
            "diagnostics": {k: float(v) for k, v in self.diagnostics.items()},
            "fingerprint": self.basis.fingerprint if self.basis is not None else "",
        }


def period_matrices(curve: FiberProductCurve, basis: HomologyBasis, differentials=None) -> PeriodData:
    """Combine lift periods into ``A``, ``B`` and ``tau``.

    Raises
    ------
    IllConditioned
        If ``cond(A)`` exceeds ``COND_MAX``.
    """
    if differentials is not None and tuple(differentials) != tuple(basis.differentials):
        basis = homology_basis(curve, differentials=differentials, reference=basis)
    P = basis.cycle_periods()
    A = basis.a_coeffs @ P
    B = basis.b_coeffs @ P
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_MAX:
        raise IllConditioned(f"cond(A) = {cond:.3e} exceeds {COND_MAX:.0e}")
    tau = np.linalg.solve(A.T, B.T).T
    sym = float(np.max(np.abs(tau - tau.T)))
    min_eig = float(np.linalg.eigvalsh((tau.imag + tau.imag.T) / 2).min())
    diag = {"symmetry_residual": sym, "min_eig_im_tau": min_eig, "cond_A": cond}
    return PeriodData(A, B, tau, complex(np.linalg.det(A)), diag, basis, curve)


def compute_periods(curve: FiberProductCurve, reference: PeriodData | None = None,
                    tol: float = PERIOD_TOL) -> PeriodData:
    """Homology basis and period matrices; ``reference`` transports the basis
    of a nearby curve."""
    ref = reference.basis if reference is not None else None
    hb = homology_basis(curve, reference=ref, tol=tol)
    return period_matrices(curve, hb)


def periods_from_json(data: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    def arr(M):
        return np.array([[complex(re, im) for re, im in row] for row in M])

    return arr(data["A"]), arr(data["B"]), arr(data["tau"])


# ----------------------------------------------------------------------
# Jacobian points


@dataclass(frozen=True)
class JacobianPoint:
    value: np.ndarray
    reduced: bool = False

    def __post_init__(self):
        object.__setattr__(self, "value", np.atleast_1d(np.asarray(self.value, dtype=complex)))


def lattice_reduce(tau, z) -> np.ndarray:
    """Representative of ``z`` modulo ``Z^g + tau Z^g`` with real and
    tau-coordinates in ``[-1/2, 1/2)``."""
    tau = np.atleast_2d(tau)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    k = np.floor(np.linalg.solve(tau.imag, z.imag) + 0.5)
    z = z - tau @ k
    return z - np.floor(z.real + 0.5)


def reduce_point(periods: PeriodData, p) -> JacobianPoint:
    val = p.value if isinstance(p, JacobianPoint) else p
    return JacobianPoint(lattice_reduce(periods.tau, val), True)


def lattice_distance(tau, z) -> float:
    """Sup-norm distance of ``z`` to the period lattice."""
    tau = np.atleast_2d(tau)
    r = lattice_reduce(tau, z)
    g = len(r)
    best = np.inf
    # the reduced point may sit next to any corner of the fundamental cell
    for kk in np.ndindex(*(3,) * g):
        w = r - tau @ (np.array(kk) - 1)
        w = w - np.round(w.real)
        best = min(best, float(np.max(np.abs(w))))
    return best
