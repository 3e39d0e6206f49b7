"""Model definition and closed-form eigenvalue formulas.

The dissipative XXZ Richardson-Gaudin Liouvillian acts on L spin-1 sites
with level amplitudes omega_j, collective gain/loss coupling g, dephasing
g0 and uniform field Omega.  Everything downstream (ED oracle, EVB solver,
rapidity extraction) consumes the ModelSpec defined here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "ModelSpec",
    "SpectrumRecord",
    "picket_fence",
    "homogeneous_model",
    "eigenvalue_from_rapidities",
    "eigenvalue_from_charges",
    "charges_from_rapidities",
    "homogeneous_spectrum",
    "homogeneous_ratio",
    "multiplicity_of_total_spin",
    "sector_dimension",
    "sector_shift",
]


class SingularInputError(ValueError):
    """Input hits a pole (coinciding levels or rapidities)."""


@dataclass(frozen=True)
class ModelSpec:
    """One Liouvillian symmetry sector.

    L sites with spin-1 (occupations n_j in {0,1,2}), N total excitations,
    so the sector carries S^z = N - L.
    """

    L: int
    omega: tuple
    g: float
    N: int
    g0: float = 0.0
    Omega: float = 0.0
    homogeneous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        if self.L < 1:
            raise ValueError(f"L must be positive, got {self.L}")
        if len(self.omega) != self.L:
            raise ValueError(f"need {self.L} levels, got {len(self.omega)}")
        if any(w <= 0 for w in self.omega):
            raise ValueError("all omega_j must be strictly positive")
        if self.homogeneous:
            if len(set(self.omega)) != 1:
                raise ValueError("homogeneous spec requires all omega_j equal")
        elif len(set(self.omega)) != self.L:
            raise SingularInputError(
                "omega_j must be distinct (flag homogeneous=True for equal levels)")
        if not 0 <= self.N <= 2 * self.L:
            raise ValueError(f"N must lie in [0, {2 * self.L}], got {self.N}")
        if self.g < 0 or self.g0 < 0:
            raise ValueError("g and g0 must be nonnegative")

    @property
    def sz(self):
        """Total S^z eigenvalue of the sector."""
        return self.N - self.L

    @property
    def omega_arr(self):
        return np.asarray(self.omega, dtype=float)

    def with_g(self, g):
        return ModelSpec(self.L, self.omega, g, self.N, self.g0, self.Omega,
                         self.homogeneous)

    def with_N(self, N):
        return ModelSpec(self.L, self.omega, self.g, N, self.g0, self.Omega,
                         self.homogeneous)


@dataclass
class SpectrumRecord:
    """One eigenvalue with its bookkeeping."""

    gamma: complex
    occupation: tuple
    sector: int
    source: str  # "EVB" | "ED" | "HOMOGENEOUS"
    residual: float = 0.0
    charge_eigs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.source not in ("EVB", "ED", "HOMOGENEOUS"):
            raise ValueError(f"unknown source {self.source!r}")
        if self.occupation and sum(self.occupation) != self.sector + len(self.occupation):
            raise ValueError("occupation label inconsistent with sector")


def picket_fence(L, N, g, g0=0.0, Omega=0.0):
    """Evenly spaced levels omega_j = j, j = 1...L."""
    return ModelSpec(L, tuple(range(1, L + 1)), g, N, g0, Omega)


def homogeneous_model(L, omega, g, N, g0=0.0, Omega=0.0):
    """All levels equal to omega; only usable with the closed-form spectrum."""
    return ModelSpec(L, (omega,) * L, g, N, g0, Omega, homogeneous=True)


def sector_shift(spec):
    """Additive eigenvalue shift i*Omega*(N-L) - g0*(N-L)^2.

    The solver core always works at g0 = Omega = 0; nonzero values only
    shift every eigenvalue of the sector by this constant.
    """
    sz = spec.sz
    return 1j * spec.Omega * sz - spec.g0 * sz ** 2


def eigenvalue_from_rapidities(spec, v):
    """Liouvillian eigenvalue gamma from a full set of N rapidities."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (spec.N,):
        raise ValueError(f"expected {spec.N} rapidities, got {v.shape}")
    return complex((spec.g + 1j) * (v.sum() - spec.omega_arr.sum()) + sector_shift(spec))


def eigenvalue_from_charges(spec, q):
    """Liouvillian eigenvalue from the L conserved-charge eigenvalues q_j.

    gamma = sum_j omega_j (q_j - 2 g), valid at g0 = Omega = 0; the g0/Omega
    shift is reapplied on top.
    """
    q = np.asarray(q, dtype=complex)
    if q.shape != (spec.L,):
        raise ValueError(f"expected {spec.L} charge eigenvalues, got {q.shape}")
    return complex(np.sum(spec.omega_arr * (q - 2 * spec.g)) + sector_shift(spec))


def charges_from_rapidities(spec, v):
    """Charge eigenvalues q_j for the Bethe state with rapidities v.

    q_j = (g - i) + 2g sum_a v_a/(omega_j - v_a)
                  - 2g sum_{k != j} omega_k/(omega_j - omega_k).

    The relative signs of the two sums are fixed by the N = 0 state (direct
    action of the charge operators on the vacuum) and the exactly solvable
    L = N = 1 case; both are enforced in the test suite against dense ED.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (spec.N,):
        raise ValueError(f"expected {spec.N} rapidities, got {v.shape}")
    w = spec.omega_arr
    diff = w[:, None] - v[None, :]
    if v.size and np.min(np.abs(diff)) < 1e-12 * max(1.0, np.max(np.abs(w))):
        raise SingularInputError("rapidity coincides with a level omega_j")
    g = spec.g
    wdiff = w[:, None] - w[None, :]
    np.fill_diagonal(wdiff, np.inf)
    level_sum = np.sum(w[None, :] / wdiff, axis=1)
    rap_sum = np.sum(v[None, :] / diff, axis=1) if v.size else np.zeros(spec.L)
    return (g - 1j) + 2 * g * rap_sum - 2 * g * level_sum


@lru_cache(maxsize=None)
def _spin_multiplicity_table(L):
    """d[l][S] = number of total-spin-S multiplets in l coupled spin-1's."""
    d = {1: {1: 1}}
    for l in range(1, L):
        nxt = {}
        for S in range(0, l + 2):
            total = d[l].get(S - 1, 0) + d[l].get(S + 1, 0)
            if S >= 1:
                # s (x) 1 contains s only for s >= 1
                total += d[l].get(S, 0)
            if total:
                nxt[S] = total
        d[l + 1] = nxt
    return d[L]


def multiplicity_of_total_spin(L, S):
    """Number of distinct spin-S multiplets in the L-fold spin-1 product.

    For S = 0 these are the Riordan numbers.  Exact integer recursion.
    """
    if not 0 <= S <= L:
        raise ValueError(f"S must lie in [0, {L}], got {S}")
    return _spin_multiplicity_table(L).get(S, 0)


def sector_dimension(L, N):
    """Number of occupation labels [n_1...n_L], n_j in {0,1,2}, sum = N."""
    if not 0 <= N <= 2 * L:
        raise ValueError(f"N must lie in [0, {2 * L}], got {N}")
    # coefficient of x^N in (1 + x + x^2)^L
    coeffs = np.array([1], dtype=object)
    for _ in range(L):
        coeffs = np.convolve(coeffs, np.array([1, 1, 1], dtype=object))
    return int(coeffs[N])


def homogeneous_spectrum(L, omega, g, g0=0.0, Omega=0.0):
    """Closed-form spectrum of the homogeneous model.

    Returns a list of (S, M, gamma, degeneracy) over all multiplets
    S = 0...L, M = -S...S, with
        gamma_{S,M} = i omega M - g omega [S(S+1) - M^2] + i Omega M - g0 M^2.
    """
    out = []
    for S in range(0, L + 1):
        deg = multiplicity_of_total_spin(L, S)
        if deg == 0:
            continue
        for M in range(-S, S + 1):
            gamma = (1j * omega * M - g * omega * (S * (S + 1) - M ** 2)
                     + 1j * Omega * M - g0 * M ** 2)
            out.append((S, M, complex(gamma), deg))
    return out


def homogeneous_ratio(S, M, g=None):
    """Decay-to-oscillation ratio g*Im(gamma)/Re(gamma) = -M/(S(S+1) - M^2).

    Independent of both omega and g.  The g argument is accepted for
    interface symmetry with the measured ratios.
    """
    denom = S * (S + 1) - M ** 2
    if denom == 0:
        raise ValueError("ratio undefined for S = M = 0 (zero eigenvalue)")
    return -M / denom
