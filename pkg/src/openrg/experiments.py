"""Headline computations built on the sector solver.

Spectral flows across a coupling grid, leading decay modes and their
logarithmic finite-size scaling, decay-to-oscillation ratio quantization
at strong coupling, and the map of exceptional points where conjugate
pairs collapse onto the real axis.  Everything here emits plain tabular
data; serialization and plotting live elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import evb
from .model import SingularInputError, SpectrumRecord, picket_fence, sector_shift
from .rapidity import UnsupportedExtractionError, quantized_ratio_prediction, \
    rapidities_from_state

__all__ = [
    "GapScalingResult",
    "TransitionRecord",
    "conjugate_label",
    "spectral_flow",
    "sector_records",
    "full_spectrum",
    "leading_mode",
    "targeted_leading_mode",
    "gap_scaling",
    "ratio_quantization",
    "transition_map",
    "charge_trace",
]

_ZERO_TOL = 1e-8  # |gamma| below this counts as the steady state


@dataclass(frozen=True)
class GapScalingResult:
    """Leading decay rates over system size with their logarithmic fit.

    gap_values holds |Re gamma| of the leading nontrivial mode per L;
    is_complex_pair marks the sizes where that mode carries a nonzero
    imaginary part.  The fit gap = slope*log(L) + intercept uses natural
    logarithms and only the sizes L >= 10; fit_rms is the root mean
    square of its residuals (nan when fewer than two such sizes exist).
    """

    L_values: tuple
    gap_values: tuple
    g: float
    fit_slope: float
    fit_intercept: float
    fit_rms: float
    is_complex_pair: tuple = ()

    def __post_init__(self):
        if not (len(self.L_values) == len(self.gap_values)
                == len(self.is_complex_pair)):
            raise ValueError("per-size fields must have equal lengths")


@dataclass(frozen=True)
class TransitionRecord:
    """One conjugate pair with the coupling g_star where it turns real.

    g_star is None when the pair has no transition inside the searched
    range.  trace rows are (g, label, j, Re q_j, Re q_j / g, Im q_j) for
    both partners on a grid spanning the transition.
    """

    label_a: tuple
    label_b: tuple
    g_star: float | None
    gamma_star: complex | None
    trace: tuple = ()


def conjugate_label(occ):
    """Spin-inversion partner of an occupation label.

    Inversion maps the N sector to the 2L - N sector and conjugates every
    eigenvalue, so within N = L the labels (occ, conjugate_label(occ))
    continue to a real-or-conjugate pair.
    """
    return tuple(2 - int(n) for n in occ)


def _row(spec, g, label, gamma, res):
    over = gamma.real / g if g > 0 else math.nan
    return (float(g), tuple(label), float(gamma.real), float(over),
            float(gamma.imag), float(res))


def spectral_flow(spec_base, g_grid, settings=None):
    """Continuation of every sector label across an ascending g grid.

    Returns rows (g, label, Re gamma, Re gamma / g, Im gamma, residual)
    sorted by (g, label).  Labels whose continuation fails are annotated
    with nan eigenvalues and an infinite residual at the couplings they
    could not reach.
    """
    if spec_base.homogeneous:
        raise SingularInputError(
            "flows need distinct omega_j; use the closed-form spectrum")
    gs = [float(g) for g in g_grid]
    if not gs or any(g < 0 for g in gs) or sorted(gs) != gs \
            or len(set(gs)) != len(gs):
        raise ValueError("g_grid must be ascending and nonnegative")
    labels = evb.enumerate_sector(spec_base.L, spec_base.N)
    w = spec_base.omega_arr
    rows = []
    if gs[0] == 0:
        for occ in labels:
            gamma = complex(1j * np.sum(w * (np.array(occ) - 1))
                            + sector_shift(spec_base))
            rows.append(_row(spec_base, 0.0, occ, gamma, 0.0))
    pos = [g for g in gs if g > 0]
    if pos:
        spec_t = spec_base.with_g(pos[-1])
        try:
            states, snaps = evb.sweep_sector(spec_t, settings,
                                             snapshot_g=pos[:-1])
            snaps[pos[-1]] = np.array([st.gammas for st in states])
            for g in pos:
                spec_g = spec_base.with_g(g)
                for i, occ in enumerate(labels):
                    st = evb.EvbState(snaps[g][i], occ, g, spec_base.N)
                    res = float(np.max(np.abs(evb.residual(st, spec_g))))
                    gamma = evb.eigenvalue_of_state(st, spec_g)
                    rows.append(_row(spec_g, g, occ, gamma, res))
        except evb.NonConvergenceError:
            # per-label fallback: slower, but isolates the failing labels
            for occ in labels:
                for g in pos:
                    spec_g = spec_base.with_g(g)
                    try:
                        st = evb.continue_in_g(occ, spec_g, settings)
                        gamma = evb.eigenvalue_of_state(st, spec_g)
                        res = st.residual_norm
                    except evb.NonConvergenceError:
                        gamma, res = complex(math.nan, math.nan), math.inf
                    rows.append(_row(spec_g, g, occ, gamma, res))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _symmetrize_pairs(labels, gammas, tol):
    """Enforce the real-or-conjugate-pair structure inside an N = L slice.

    Pairs closer than tol to exact conjugacy are snapped onto it; values
    closer than tol to the real axis are made exactly real.  Anything
    further off (a genuine symmetry defect) is left untouched.
    """
    index = {occ: i for i, occ in enumerate(labels)}
    out = list(gammas)
    for i, occ in enumerate(labels):
        j = index[conjugate_label(occ)]
        if j == i or abs(out[i].imag) < tol:
            if abs(out[i].imag) < tol:
                out[i] = complex(out[i].real, 0.0)
            continue
        if j > i and abs(out[j] - out[i].conjugate()) < tol:
            out[j] = out[i].conjugate()
    return out


def sector_records(spec, settings=None):
    """Solve one sector and return SpectrumRecords in label order.

    In the spin-inversion-symmetric N = L sector the real-or-conjugate
    pair structure is enforced exactly on the returned eigenvalues.
    """
    states = evb.solve_sector(spec, settings)
    gammas = [evb.eigenvalue_of_state(st, spec) for st in states]
    labels = [st.occupation for st in states]
    if spec.N == spec.L:
        tol = 1e-6 * (1.0 + max(abs(z) for z in gammas))
        gammas = _symmetrize_pairs(labels, gammas, tol)
    return [SpectrumRecord(z, occ, spec.sz, "EVB", st.residual_norm,
                           charge_eigs=evb.charges_from_state(st, spec))
            for z, occ, st in zip(gammas, labels, states)]


def full_spectrum(spec_base, settings=None):
    """SpectrumRecords of all 2L + 1 sectors at one coupling.

    Only the sectors N <= L are solved; each N < L sector's spin-inversion
    image supplies the 2L - N sector, which makes the full table exactly
    closed under complex conjugation.
    """
    rows = []
    for N in range(0, spec_base.L + 1):
        spec = spec_base.with_N(N)
        recs = sector_records(spec, settings)
        rows.extend(recs)
        if N < spec_base.L:
            rows.extend(
                SpectrumRecord(r.gamma.conjugate(),
                               conjugate_label(r.occupation), -r.sector,
                               r.source, r.residual)
                for r in recs)
    rows.sort(key=lambda r: (r.sector, r.occupation))
    return rows


_FULL_SECTOR_MAX = 1500  # sector dimension up to which the scan is exhaustive


def targeted_leading_mode(spec, settings=None):
    """Strong-coupling leading mode reached without scanning the sector.

    The dissipative part of the model is the free-level term with an
    imaginary coefficient, so along the -i axis of complex coupling the
    model reduces to its Hermitian interaction part, whose ground state
    descends from the alternating seed [2, 0, 2, 0, ...] and is kept
    isolated by level repulsion.  Continuing that seed down the -i axis,
    around a quarter circle at strong coupling, and back to the real axis
    lands on the state that carries the spectral gap everywhere past the
    weak-coupling regime (roughly g >= 0.25 for the picket fence),
    including through the exceptional point where it joins its conjugate
    partner.  This is what makes sizes up to L = 50 reachable.
    """
    if spec.N != spec.L or spec.L % 2:
        raise ValueError("the targeted mode lives in the N = L sector "
                         "with even L")
    alternating = tuple(2 if j % 2 == 0 else 0 for j in range(spec.L))
    st = evb.continue_along(alternating, spec, settings,
                            waypoints=evb.leading_mode_path(spec.g))
    gamma = evb.eigenvalue_of_state(st, spec)
    return SpectrumRecord(gamma, st.occupation, 0, "EVB", st.residual_norm)


def leading_mode(spec, settings=None):
    """Leading nontrivial decay mode of the N = L sector.

    The spectral gap is |Re gamma| of this mode.  Small sectors are
    scanned exhaustively; larger ones are handled by targeted_leading_mode,
    which is reliable away from the weak-coupling regime.
    """
    if spec.homogeneous:
        w = spec.omega[0]
        gamma = complex(1j * (w + spec.Omega) - spec.g * w - spec.g0)
        return SpectrumRecord(gamma, (), 0, "HOMOGENEOUS")
    if spec.N != spec.L:
        raise ValueError("the spectral gap is defined in the N = L sector")
    if spec.g <= 0:
        raise ValueError("leading mode needs g > 0")
    from .model import sector_dimension

    if sector_dimension(spec.L, spec.L) > _FULL_SECTOR_MAX:
        return targeted_leading_mode(spec, settings)
    states = evb.solve_sector(spec, settings)
    best = None
    for st in states:
        gamma = evb.eigenvalue_of_state(st, spec)
        if abs(gamma) < _ZERO_TOL:
            continue
        if best is None or abs(gamma.real) < abs(best[0].real):
            best = (gamma, st)
    if best is None:
        raise evb.NonConvergenceError("no nonzero mode found")
    gamma, st = best
    return SpectrumRecord(gamma, st.occupation, 0, "EVB", st.residual_norm)


def _leading_mode_task(task):
    L, g, settings = task
    return leading_mode(picket_fence(L, L, g), settings)


def gap_scaling(L_list, g, settings=None, workers=None):
    """Spectral gap versus system size with its logarithmic fit.

    Even sizes in [4, 50] only (the strong-coupling seed alternates);
    the fit gap = a*log(L) + b is restricted to L >= 10.  The sizes are
    independent tasks, mapped over `workers` processes when more than one
    is requested; the aggregation is ordered by L either way.
    """
    L_list = [int(L) for L in L_list]
    if not L_list or sorted(L_list) != L_list or len(set(L_list)) != len(L_list):
        raise ValueError("L_list must be ascending without repeats")
    if any(L < 4 or L > 50 or L % 2 for L in L_list):
        raise ValueError("sizes must be even and within [4, 50]")
    tasks = [(L, g, settings) for L in L_list]
    if workers is not None and workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            recs = list(pool.map(_leading_mode_task, tasks))
    else:
        recs = [_leading_mode_task(t) for t in tasks]
    gaps = [abs(rec.gamma.real) for rec in recs]
    pairs = [abs(rec.gamma.imag) > 1e-6 for rec in recs]
    fit_L = [L for L in L_list if L >= 10]
    if len(fit_L) >= 2:
        x = np.log(fit_L)
        y = np.array([gaps[L_list.index(L)] for L in fit_L])
        slope, intercept = np.polyfit(x, y, 1)
        rms = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    else:
        slope = intercept = rms = math.nan
    return GapScalingResult(tuple(L_list), tuple(gaps), float(g),
                            float(slope), float(intercept), rms,
                            tuple(pairs))


def ratio_quantization(spec, g_large, settings=None, ratio_threshold=1.5):
    """Decay-to-oscillation ratios of one sector against 1/(2p + 1).

    Solves the sector at coupling g_large (>= 2), extracts each state's
    rapidities and counts the large ones (p), then compares the measured
    g*Im(gamma)/Re(gamma) with the predicted magnitude 1/(2p + 1).
    Returns rows (label, p, measured, predicted, relative deviation); the
    measured ratio keeps its sign (conjugate partners realize both signs
    of a quantized slope), the deviation compares magnitudes.  States
    with |gamma| ~ 0 or a failed extraction carry p = -1 and nan entries.

    The p large rapidities sit at -2*Delta/z_a with z_a the roots of an
    associated Laguerre polynomial, whose largest root pushes the
    smallest member of the ladder down towards the level scale; the
    default threshold of 1.5 times the largest level keeps that member
    classified as large while staying above the finite rapidities.
    """
    if spec.homogeneous:
        raise SingularInputError(
            "quantization measurement needs distinct omega_j")
    g_large = float(g_large)
    if g_large < 2:
        raise ValueError("ratio quantization needs g >= 2")
    spec = spec.with_g(g_large)
    rows = []
    for st in evb.solve_sector(spec, settings):
        gamma = evb.eigenvalue_of_state(st, spec)
        if abs(gamma) < _ZERO_TOL or gamma.real == 0:
            rows.append((st.occupation, -1, math.nan, math.nan, math.nan))
            continue
        measured = g_large * gamma.imag / gamma.real
        try:
            p = rapidities_from_state(st, spec, ratio_threshold).p
        except (UnsupportedExtractionError, np.linalg.LinAlgError):
            rows.append((st.occupation, -1, measured, math.nan, math.nan))
            continue
        predicted = quantized_ratio_prediction(p)
        rows.append((st.occupation, p, measured, predicted,
                     abs(abs(measured) - predicted) / predicted))
    return rows


def charge_trace(occ_pair, spec_base, g_grid, settings=None):
    """Charge eigenvalues of both partners along a coupling grid.

    Rows (g, label, j, Re q_j, Re q_j / g, Im q_j); at a transition the
    two partners' full charge vectors become identical.
    """
    rows = []
    for g in g_grid:
        g = float(g)
        if g <= 0:
            raise ValueError("trace couplings must be positive")
        spec = spec_base.with_g(g)
        for occ in occ_pair:
            st = evb.continue_in_g(occ, spec, settings)
            for j, q in enumerate(evb.charges_from_state(st, spec)):
                rows.append((g, tuple(occ), j, float(q.real),
                             float(q.real / g), float(q.imag)))
    return rows


def transition_map(spec_base, g_range, settings=None, trace_points=21,
                   trace_halfwidth=0.25):
    """Exceptional points of every conjugate pair in the N = L sector.

    For each pair (occ, conjugate_label(occ)) the coupling g_star where
    its eigenvalues collapse onto the real axis is located by bisection
    inside g_range; pairs that stay complex throughout the range get
    g_star = None.  Each located transition carries a charge_trace on a
    grid spanning g_star.  The homogeneous model has no transitions.
    """
    if spec_base.homogeneous:
        return []
    if spec_base.N != spec_base.L:
        raise ValueError("transitions are mapped in the N = L sector")
    lo, hi = (float(g_range[0]), float(g_range[1]))
    if not 0 <= lo < hi:
        raise ValueError(f"invalid coupling range ({lo}, {hi})")
    out = []
    for occ in evb.enumerate_sector(spec_base.L, spec_base.N):
        partner = conjugate_label(occ)
        if occ >= partner:
            continue
        spec_hi = spec_base.with_g(hi)
        try:
            g_star, gamma_star, _ = evb.locate_exceptional_point(
                (occ, partner), spec_hi, settings, g_bracket=(lo, hi))
        except ValueError:
            out.append(TransitionRecord(occ, partner, None, None))
            continue
        span = hi - lo
        half = min(trace_halfwidth, span / 2)
        t0 = min(max(lo + 1e-6 * span, g_star - half), hi - 2 * half)
        grid = np.linspace(max(t0, 1e-6 * span), min(t0 + 2 * half, hi),
                           trace_points)
        trace = tuple(charge_trace((occ, partner), spec_base, grid, settings))
        out.append(TransitionRecord(occ, partner, float(g_star),
                                    complex(gamma_star), trace))
    return out
