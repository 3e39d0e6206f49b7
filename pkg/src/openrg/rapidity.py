"""Rapidity extraction, Bethe-equation verification, Laguerre asymptotics.

Every eigenstate is parametrized by N complex rapidities v_a.  The charge
eigenvalues determine the sampled logarithmic derivative
Lambda(omega_j) = sum_a 1/(omega_j - v_a) of the polynomial with the
rapidities as roots, so the rapidities are recovered by linear algebra
instead of solving the singular Bethe equations directly.  At strong
coupling the large rapidities approach scaled roots of associated
Laguerre polynomials, which quantizes the decay-to-oscillation ratio of
the eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SingularInputError

__all__ = [
    "RapiditySet",
    "UnsupportedExtractionError",
    "lambda_values_from_charges",
    "rapidities_from_lambda",
    "rapidities_from_state",
    "verify_bethe_equations",
    "classify_large",
    "laguerre_roots",
    "large_rapidity_asymptotics",
    "quantized_ratio_prediction",
]

_MAX_LAGUERRE_DEGREE = 32
_COND_WARN = 1e12


class UnsupportedExtractionError(ValueError):
    """Rapidity extraction is not available for this sector."""


@dataclass(frozen=True)
class RapiditySet:
    """N rapidities of one Bethe state, with the large ones flagged.

    residual is the least-squares misfit of the polynomial reconstruction
    (zero when the set was planted directly); conditioning is the condition
    number of the reconstruction matrix, with ill_conditioned set above
    1e12.
    """

    values: tuple
    large_mask: tuple
    threshold_used: float
    residual: float = 0.0
    conditioning: float = 1.0

    def __post_init__(self):
        if len(self.values) != len(self.large_mask):
            raise ValueError("large_mask length must match values")

    @property
    def p(self):
        return sum(self.large_mask)

    @property
    def q(self):
        return len(self.values) - self.p

    @property
    def ill_conditioned(self):
        return self.conditioning > _COND_WARN

    @property
    def values_arr(self):
        return np.asarray(self.values, dtype=complex)

    @property
    def large_values(self):
        return tuple(v for v, m in zip(self.values, self.large_mask) if m)

    @property
    def finite_values(self):
        return tuple(v for v, m in zip(self.values, self.large_mask) if not m)


def lambda_values_from_charges(spec, q_vec):
    """Sampled rapidity sums Lambda(omega_j) = sum_a 1/(omega_j - v_a).

    Inverts the linear relation between the charge eigenvalues and the
    rapidity polynomial: with the shifted charge eigenvalue
    gamma_j = q_j + g + 2g sum_{k!=j} omega_j/(omega_j - omega_k),

        Lambda(omega_j) = (gamma_j + i - 2g(L - N)) / (2 g omega_j).
    """
    if spec.g == 0:
        raise ZeroDivisionError("Lambda inversion requires g > 0")
    q_vec = np.asarray(q_vec, dtype=complex)
    if q_vec.shape != (spec.L,):
        raise ValueError(f"expected {spec.L} charge eigenvalues, got {q_vec.shape}")
    w = spec.omega_arr
    wdiff = w[:, None] - w[None, :]
    np.fill_diagonal(wdiff, np.inf)
    c = w * np.sum(1.0 / wdiff, axis=1)
    gamma = q_vec + spec.g + 2 * spec.g * c
    return (gamma + 1j - 2 * spec.g * (spec.L - spec.N)) / (2 * spec.g * w)


def rapidities_from_lambda(spec, lambda_vals, N=None, ratio_threshold=10.0):
    """Recover the N rapidities from Lambda sampled at the L levels.

    The monic polynomial P(x) = prod_a (x - v_a) satisfies
    P'(omega_j) = Lambda(omega_j) P(omega_j) at every level, which is
    linear in the N unknown lower coefficients of P.  The system has L
    equations, so N <= L is required; the least-squares residual and the
    condition number are recorded on the returned set.
    """
    N = spec.N if N is None else int(N)
    lam = np.asarray(lambda_vals, dtype=complex)
    if lam.shape != (spec.L,):
        raise ValueError(f"expected {spec.L} Lambda values, got {lam.shape}")
    if N > spec.L:
        raise UnsupportedExtractionError(
            f"{N} rapidities cannot be recovered from {spec.L} sample "
            "points; verify such states through their charges instead")
    if N == 0:
        return RapiditySet((), (), float(ratio_threshold))
    w = spec.omega_arr.astype(complex)
    # columns m = 0...N-1 multiply the unknown coefficient of x^m
    m = np.arange(N)
    pw = w[:, None] ** np.maximum(m[None, :] - 1, 0)
    A = m[None, :] * pw - lam[:, None] * w[:, None] ** m[None, :]
    b = lam * w ** N - N * w ** (N - 1)
    coeffs, _, _, sv = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.max(np.abs(A @ coeffs - b)))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    v = np.roots(np.concatenate(([1.0], coeffs[::-1])))
    mask = _large_mask(v, spec, ratio_threshold)
    return RapiditySet(tuple(v), mask, float(ratio_threshold), resid, cond)


def rapidities_from_state(state, spec, ratio_threshold=10.0):
    """Extraction pipeline charges -> Lambda -> rapidities for one state."""
    from .evb import charges_from_state

    lam = lambda_values_from_charges(spec, charges_from_state(state, spec))
    return rapidities_from_lambda(spec, lam, state.N, ratio_threshold)


def verify_bethe_equations(spec, v):
    """Residuals of the Bethe equations for a trial rapidity set.

    residual_a = -(g+i)/(2g) + sum_j omega_j/(omega_j - v_a)
                 - sum_{b!=a} v_b/(v_b - v_a)
    """
    if spec.g == 0:
        raise ZeroDivisionError("Bethe equations require g > 0")
    v = np.asarray(v, dtype=complex)
    w = spec.omega_arr
    scale = max(1.0, float(np.max(np.abs(w))))
    if v.size == 0:
        return np.zeros(0, dtype=complex)
    wv = w[None, :] - v[:, None]
    if np.min(np.abs(wv)) < 1e-12 * scale:
        raise SingularInputError("rapidity coincides with a level omega_j")
    vv = v[None, :] - v[:, None]
    if v.size > 1:
        off = vv[~np.eye(v.size, dtype=bool)]
        if np.min(np.abs(off)) < 1e-12 * max(scale, float(np.max(np.abs(v)))):
            raise SingularInputError("two rapidities coincide")
    np.fill_diagonal(vv, np.inf)
    level_sum = np.sum(w[None, :] / wv, axis=1)
    pair_sum = np.sum(v[None, :] / vv, axis=1)
    return -(spec.g + 1j) / (2 * spec.g) + level_sum - pair_sum


def _large_mask(v, spec, ratio_threshold):
    cut = float(ratio_threshold) * float(np.max(spec.omega_arr))
    return tuple(bool(abs(x) > cut) for x in v)


def classify_large(v, spec, ratio_threshold=10.0):
    """Split rapidities into finite ones and large ones.

    A rapidity counts as large when its magnitude exceeds
    ratio_threshold times the largest level; the count p of large
    rapidities sets the quantized ratio 1/(2p+1).
    """
    v = tuple(complex(x) for x in np.atleast_1d(np.asarray(v, dtype=complex)))
    return RapiditySet(v, _large_mask(v, spec, ratio_threshold),
                       float(ratio_threshold))


def laguerre_roots(p, alpha):
    """Roots of the associated Laguerre polynomial L_p^alpha(z).

    Built from the explicit coefficients
    L_p^alpha(z) = sum_k (-1)^k binom(p+alpha, p-k) z^k / k!
    and solved as a companion-matrix eigenproblem, then polished with one
    Newton step each.  Supports complex alpha (here alpha = i/g).
    """
    p = int(p)
    if p == 0:
        return []
    if p < 0:
        raise ValueError("degree must be nonnegative")
    if p > _MAX_LAGUERRE_DEGREE:
        raise ValueError(f"degree {p} exceeds supported maximum "
                         f"{_MAX_LAGUERRE_DEGREE}")
    alpha = complex(alpha)
    if alpha + 1 == 0:
        raise SingularInputError("alpha = -1 degenerates the root set")
    # binom(p+alpha, p-k) = prod_{m=k+1}^{p} (alpha+m) / (p-k)!
    coeffs = np.empty(p + 1, dtype=complex)  # coeffs[k] multiplies z^k
    from math import factorial

    for k in range(p + 1):
        binom = np.prod([alpha + m for m in range(k + 1, p + 1)]) / \
            factorial(p - k)
        coeffs[k] = (-1) ** k * binom / factorial(k)
    z = np.roots(coeffs[::-1])
    # one Newton polish per root
    dcoeffs = coeffs[1:] * np.arange(1, p + 1)
    num = np.polyval(coeffs[::-1], z)
    den = np.polyval(dcoeffs[::-1], z)
    good = np.abs(den) > 0
    z[good] -= num[good] / den[good]
    return sorted((complex(x) for x in z), key=lambda x: (x.real, x.imag))


def large_rapidity_asymptotics(p, Delta, g):
    """Strong-coupling positions of the p large rapidities.

    w_a = -2 Delta / z_a with z_a the roots of L_p^{i/g}, where Delta is
    the sum of the levels minus the sum of the finite rapidities.  The
    Laguerre sum rule sum_a 1/z_a = p/(1+alpha) makes
    sum_a w_a = -2 Delta p / (1 + i/g) hold identically.
    """
    Delta = complex(Delta)
    if Delta == 0:
        raise SingularInputError("Delta = 0 collapses all large rapidities")
    z = np.asarray(laguerre_roots(p, 1j / g), dtype=complex)
    return [complex(w) for w in -2 * Delta / z]


def quantized_ratio_prediction(p, g=None):
    """Strong-coupling ratio g*Im(gamma)/Re(gamma) = 1/(2p+1) for p large
    rapidities; independent of g at leading order."""
    p = int(p)
    if p < 0:
        raise ValueError("p must be nonnegative")
    return 1.0 / (2 * p + 1)
