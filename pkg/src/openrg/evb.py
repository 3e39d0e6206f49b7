"""Eigenvalue-based solver for the coupled cubic charge equations.

Works in the shifted charge eigenvalues gamma_j = q_j + g + 2g sum_{k!=j}
omega_j/(omega_j - omega_k), which satisfy L coupled cubics free of the
pole singularities of the Bethe equations.  At g = 0 the cubics decouple,
gamma_j (gamma_j^2 + 1) = 0, and each occupation label [n_1...n_L] seeds
one solution gamma_j = i (n_j - 1).  Solutions at finite g are reached by
damped Newton iteration with homotopy continuation in g, detouring into
complex coupling around exceptional points on the real-g axis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .model import ModelSpec, SingularInputError, eigenvalue_from_charges, sector_shift

__all__ = [
    "EvbState",
    "ContinuationSettings",
    "NonConvergenceError",
    "ExceptionalPointSuspectedError",
    "seed_from_occupation",
    "residual",
    "jacobian",
    "newton_solve",
    "continue_in_g",
    "continue_along",
    "leading_mode_path",
    "solve_sector",
    "sweep_sector",
    "sweep_labels",
    "enumerate_sector",
    "charges_from_state",
    "eigenvalue_of_state",
    "locate_exceptional_point",
]


class NonConvergenceError(RuntimeError):
    """Newton iteration or continuation failed to converge."""

    def __init__(self, msg, last_good_g=None):
        super().__init__(msg)
        self.last_good_g = last_good_g


class ExceptionalPointSuspectedError(NonConvergenceError):
    """Jacobian became singular: two solutions are likely coalescing."""


@dataclass
class ContinuationSettings:
    g_step_initial: float = 0.01
    g_step_min: float = 1e-6
    newton_tol: float = 1e-12
    newton_max_iter: int = 200
    ep_detour_epsilon: float = 1e-4
    # relative height of the continuation ray above the real-g axis; keeps
    # branches that collide at real-axis exceptional points well separated
    path_epsilon: float = 1e-2

    def __post_init__(self):
        if min(self.g_step_initial, self.g_step_min, self.newton_tol,
               self.ep_detour_epsilon, self.path_epsilon) <= 0 \
                or self.newton_max_iter <= 0:
            raise ValueError("all continuation settings must be positive")
        if self.g_step_min > self.g_step_initial:
            raise ValueError("g_step_min must not exceed g_step_initial")


@dataclass
class EvbState:
    """Solution candidate of the coupled cubics at coupling g_current.

    The coupling may be complex while on an exceptional-point detour; all
    delivered states have real g_current.
    """

    gammas: np.ndarray
    occupation: tuple
    g_current: complex
    N: int
    residual_norm: float = np.inf

    @property
    def beta(self):
        L = len(self.gammas)
        return 1 + 2j * self.g_current * (L - self.N)


@lru_cache(maxsize=None)
def _geometry(omega):
    """Cached level-difference arrays for one set of omega_j."""
    w = np.asarray(omega, dtype=float)
    L = w.size
    diff = w[:, None] - w[None, :]
    if np.min(np.abs(diff + np.eye(L))) == 0:
        raise SingularInputError("EVB equations are singular for repeated omega_j")
    np.fill_diagonal(diff, np.inf)
    inv = 1.0 / diff
    inv2 = inv ** 2
    r1 = inv.sum(axis=1)
    # c_j = sum_{k != j} omega_j / (omega_j - omega_k)
    return w, inv, inv2, r1, inv2.sum(axis=1), w * r1


def enumerate_sector(L, N):
    """All occupation labels [n_1...n_L] with sum N, lexicographic."""
    if not 0 <= N <= 2 * L:
        raise ValueError(f"N must lie in [0, {2 * L}], got {N}")
    return [occ for occ in itertools.product(range(3), repeat=L) if sum(occ) == N]


def seed_from_occupation(occ):
    """Exact g = 0 solution for one occupation label: gamma_j = i (n_j - 1)."""
    occ = tuple(int(n) for n in occ)
    if any(n not in (0, 1, 2) for n in occ):
        raise ValueError(f"occupation entries must be 0, 1 or 2: {occ}")
    gammas = 1j * (np.array(occ, dtype=float) - 1)
    return EvbState(gammas, occ, 0.0, sum(occ), residual_norm=0.0)


def _residual_terms(gammas, beta, g, geom):
    w, inv, inv2, r1, r2, c = geom
    T = gammas * r1 - inv @ gammas
    U = gammas * r2 - inv2 @ gammas
    quad = gammas ** 2 + beta ** 2
    A = gammas - 2 * g * c
    B = quad - 4 * g * w * T
    F = A * B - g * quad + 4 * g ** 2 * w ** 2 * U
    return F, A, B, quad


def residual_scale(gammas, beta):
    """Magnitude of the cubic terms; the convergence test is relative to
    this, since max|F| cannot beat machine epsilon times the term size."""
    m = max(1.0, float(np.max(np.abs(gammas))), abs(beta))
    return m ** 3

def residual(state, spec, g=None):
    """Residual vector F_j of the coupled cubic equations."""
    geom = _geometry(spec.omega)
    g = state.g_current if g is None else g
    beta = 1 + 2j * g * (spec.L - state.N)
    return _residual_terms(state.gammas, beta, g, geom)[0]


def jacobian(state, spec, g=None):
    """Closed-form Jacobian J_jk = dF_j/dgamma_k."""
    geom = _geometry(spec.omega)
    w, inv, inv2, r1, r2, c = geom
    g = state.g_current if g is None else g
    beta = 1 + 2j * g * (spec.L - state.N)
    gammas = state.gammas
    _, A, B, _ = _residual_terms(gammas, beta, g, geom)
    J = (A * 4 * g * w)[:, None] * inv - (4 * g ** 2 * w ** 2)[:, None] * inv2
    diag = (B + A * (2 * gammas - 4 * g * w * r1)
            - 2 * g * gammas + 4 * g ** 2 * w ** 2 * r2)
    J[np.diag_indices_from(J)] = diag
    return J


def newton_solve(state, spec, settings=None, g=None):
    """Damped Newton iteration at fixed coupling.

    Full steps are halved (up to 60 times) whenever they increase the max
    residual.  Raises ExceptionalPointSuspectedError on a singular Jacobian
    and NonConvergenceError at the iteration cap.
    """
    settings = settings or ContinuationSettings()
    g = state.g_current if g is None else g
    geom = _geometry(spec.omega)
    beta = 1 + 2j * g * (spec.L - state.N)
    gammas = state.gammas.copy()
    F = _residual_terms(gammas, beta, g, geom)[0]
    fnorm = np.max(np.abs(F))
    tol = settings.newton_tol * residual_scale(gammas, beta)
    for _ in range(settings.newton_max_iter):
        if fnorm < tol:
            return EvbState(gammas, state.occupation, g, state.N, fnorm)
        J = jacobian(EvbState(gammas, state.occupation, g, state.N), spec, g=g)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise ExceptionalPointSuspectedError(
                f"singular Jacobian at g = {g}", last_good_g=None)
        scale = 1.0
        for _ in range(60):
            trial = gammas + scale * step
            Ft = _residual_terms(trial, beta, g, geom)[0]
            ftn = np.max(np.abs(Ft))
            if ftn < fnorm or ftn < tol:
                gammas, F, fnorm = trial, Ft, ftn
                tol = settings.newton_tol * residual_scale(gammas, beta)
                break
            scale *= 0.5
        else:
            break
    # near-singular Jacobians (close solution clusters) put a floor under
    # the reachable residual; a stalled iterate that is still tiny is the
    # solution to the accuracy double precision permits there
    if fnorm < 1e4 * tol:
        return EvbState(gammas, state.occupation, g, state.N, fnorm)
    raise NonConvergenceError(
        f"damped Newton stalled at g = {g} (residual {fnorm:.2e})")


def _constrained_polish(gammas, N, z, spec, settings):
    """Gauss-Newton on the cubics augmented with the charge sum rule.

    Near-defective regions admit adjacent spurious solutions whose charge
    sum is slightly off; the plain Jacobian cannot tell them apart, but
    the augmented least-squares system pulls the iterate back onto the
    physical branch.  Returns (gammas, residual_norm, sum_deviation).
    """
    geom = _geometry(spec.omega)
    L = spec.L
    beta = 1 + 2j * z * (L - N)
    want = 1j * (N - L) + z * ((N - L) ** 2 + L ** 2)
    G = gammas.copy()
    ones = np.ones((1, L), dtype=complex)
    F = _batch_terms(G[None], beta, z, geom)[0][0]
    best = np.max(np.abs(F)) + abs(G.sum() - want)
    for _ in range(50):
        F, A, B = _batch_terms(G[None], beta, z, geom)
        J = _batch_jacobian(G[None], A, B, z, geom)[0]
        r = np.concatenate([F[0], [G.sum() - want]])
        d = np.linalg.lstsq(np.vstack([J, ones]), -r, rcond=None)[0]
        sc = 1.0
        for _ in range(30):
            cand = G + sc * d
            Fc = _batch_terms(cand[None], beta, z, geom)[0][0]
            m = np.max(np.abs(Fc)) + abs(cand.sum() - want)
            if m < best:
                G, best = cand, m
                break
            sc *= 0.5
        else:
            break
    F = _batch_terms(G[None], beta, z, geom)[0][0]
    return G, float(np.max(np.abs(F))), float(abs(G.sum() - want))


def _walk(state, spec, settings, g_path_end, step0):
    """Adaptive continuation along the straight segment from state.g_current
    to g_path_end (either may be complex).  Returns the state at the end or
    raises with the last good state attached."""
    g = state.g_current
    total = g_path_end - g
    span = abs(total)
    if span == 0:
        return state
    direction = total / span
    s = 0.0  # arclength progressed
    step = min(step0, span)
    step_max = max(0.05, step0)
    prev = None  # (s, gammas) for the secant predictor
    cur = state
    easy_streak = 0
    rate = None  # max|dgamma/ds| estimate from the last accepted step
    while s < span - 1e-15:
        step = min(step, span - s)
        s_try = s + step
        g_try = g + direction * s_try
        if prev is not None and prev[0] < s:
            guess = cur.gammas + (cur.gammas - prev[1]) * (s_try - s) / (s - prev[0])
        else:
            guess = cur.gammas
        try:
            nxt = newton_solve(
                EvbState(guess, cur.occupation, g_try, cur.N), spec, settings)
            # branch-jump guard: reject convergence far from the predicted point
            moved = float(np.max(np.abs(nxt.gammas - guess)))
            allowed = 0.01 * (1.0 + float(np.max(np.abs(nxt.gammas))))
            if rate is not None:
                allowed = max(allowed, 3.0 * rate * step)
            if moved > allowed:
                raise NonConvergenceError(
                    f"suspicious Newton jump ({moved:.2e}) at g = {g_try}")
            # the charge sum rule sum gamma_j = i(N-L) + g[(N-L)^2 + L^2]
            # is analytic in g, so it holds at every point of the path; a
            # violation beyond what the local conditioning permits means
            # Newton slid onto a spurious branch
            want = 1j * (cur.N - spec.L) + g_try * ((cur.N - spec.L) ** 2
                                                    + spec.L ** 2)
            base = 1e-6 * (1.0 + abs(want))
            if abs(nxt.gammas.sum() - want) > base:
                scl3 = residual_scale(nxt.gammas, nxt.beta)
                cand, fc, sd = _constrained_polish(nxt.gammas, nxt.N, g_try,
                                                   spec, settings)
                if fc < 1e4 * settings.newton_tol * scl3 and sd <= base:
                    nxt = EvbState(cand, nxt.occupation, g_try, nxt.N, fc)
                else:
                    raise NonConvergenceError(
                        f"sum-rule violation at g = {g_try}")
        except NonConvergenceError as exc:
            if step / 2 < settings.g_step_min:
                exc.last_good_g = g + direction * s
                exc.last_good_state = cur
                raise
            step /= 2
            easy_streak = 0
            continue
        rate = float(np.max(np.abs(nxt.gammas - cur.gammas))) / step
        prev = (s, cur.gammas)
        cur = nxt
        s = s_try
        easy_streak += 1
        if easy_streak >= 2:
            step = min(step * 1.5, step_max)
    return cur


def continue_in_g(occ, spec, settings=None, detour_sign=1):
    """Continue the g = 0 seed of one occupation label to spec.g.

    The path runs along the ray g (1 + i sign eps) lifted slightly off the
    real axis, then descends vertically to the real target.  Real-axis
    exceptional points are square-root branch points, so on the lifted ray
    the coalescing solutions stay separated by O(sqrt(eps)) and Newton
    tracking never has to cross a singularity.  detour_sign picks the half
    plane; the two choices land on the two branches that meet at an
    intervening exceptional point.  On an obstruction (a genuinely complex
    branch point near the ray) the lift height is rescaled and the whole
    path rerun.
    """
    settings = settings or ContinuationSettings()
    target = float(spec.g)
    if target < 0:
        raise ValueError("target g must be nonnegative")
    if sum(occ) != spec.N:
        raise ValueError(f"occupation {occ} does not lie in the N = {spec.N} sector")
    seed = seed_from_occupation(occ)
    if target == 0:
        return seed
    last_exc = None
    for lift in (1.0, 3.0, 0.3, 10.0):
        eps = detour_sign * settings.path_epsilon * lift
        apex = target * (1 + 1j * eps)
        try:
            state = _walk(seed, spec, settings, apex, settings.g_step_initial)
            state = _walk(state, spec, settings, complex(target),
                          settings.g_step_initial)
            state.g_current = target
            return state
        except NonConvergenceError as exc:
            last_exc = exc
    raise NonConvergenceError(
        f"continuation for {occ} failed to reach g = {target} "
        f"(last good g = {getattr(last_exc, 'last_good_g', None)})",
        last_good_g=getattr(last_exc, "last_good_g", None)) from last_exc


def _walk_leg(state, spec, settings, target, detour_sign, max_detours):
    """Walk one straight segment in the complex g plane, detouring
    sideways around points where the continuation stalls."""
    target = complex(target)
    for _ in range(max_detours):
        if complex(state.g_current) == target:
            return state
        try:
            state = _walk(state, spec, settings, target,
                          settings.g_step_initial)
            state.g_current = target
            return state
        except NonConvergenceError as exc:
            stuck = getattr(exc, "last_good_state", None)
            if stuck is None:
                raise
            base = complex(stuck.g_current)
            span = target - base
            if span == 0:
                raise
            u = span / abs(span)
            for radius in (3e-4, 1e-3, 3e-3, 1e-2, 3e-2):
                r = radius * (1.0 + abs(base))
                side = 1j * detour_sign * u * r
                ahead = base + u * min(2 * r, abs(span))
                try:
                    s = _walk(stuck, spec, settings, base + side,
                              settings.g_step_initial)
                    s = _walk(s, spec, settings, ahead + side,
                              settings.g_step_initial)
                    state = _walk(s, spec, settings, ahead,
                                  settings.g_step_initial)
                    break
                except NonConvergenceError:
                    continue
            else:
                raise NonConvergenceError(
                    f"detour around g = {base} failed",
                    last_good_g=base) from exc
    raise NonConvergenceError(f"leg toward g = {target} exceeded "
                              f"{max_detours} detours")


def continue_along(occ, spec, settings=None, waypoints=(), detour_sign=1,
                   max_detours=60):
    """Continue the g = 0 seed of one occupation label through a piecewise
    straight path of complex couplings, ending at spec.g.

    Unlike continue_in_g, whose lifted ray picks up monodromy from every
    branch point passing below it, the branch reached here is the analytic
    continuation along the chosen path.  A path up the imaginary axis
    tracks the Hermitian reduction of the model (the spectrum rotated by
    i), where level repulsion keeps branches separated; arcing back to the
    real axis at strong coupling then targets the strong-coupling states
    directly.  Where a leg stalls (an exceptional point on or next to the
    path) the walk steps sideways into the detour_sign half plane relative
    to the direction of travel, crosses the obstruction, and returns, with
    the detour radius escalated on failure.
    """
    settings = settings or ContinuationSettings()
    if sum(occ) != spec.N:
        raise ValueError(f"occupation {occ} does not lie in the "
                         f"N = {spec.N} sector")
    path = [complex(w) for w in waypoints]
    if not path or path[-1] != complex(spec.g):
        path.append(complex(spec.g))
    state = seed_from_occupation(occ)
    for point in path:
        state = _walk_leg(state, spec, settings, point, detour_sign,
                          max_detours)
    state.g_current = float(np.real(state.g_current))
    return state


def leading_mode_path(g, radius_min=2.0, arc_points=8):
    """Waypoints targeting the strong-coupling leading mode: down the -i
    axis, where the model reduces to its Hermitian part and level
    repulsion keeps the continued ground state isolated, then around a
    quarter circle at strong coupling and along the real axis to g."""
    g = float(g)
    if g <= 0:
        raise ValueError("leading-mode path requires g > 0")
    r = max(g, float(radius_min))
    arc = [r * np.exp(1j * t)
           for t in np.linspace(-np.pi / 2, 0.0, arc_points + 1)]
    return [-1j * r] + [complex(z) for z in arc[1:]] + [complex(g)]


def states_equal(a, b, tol=1e-8):
    """Solution identity used for deduplication."""
    scale = 1.0 + float(np.max(np.abs(a.gammas)))
    return float(np.max(np.abs(a.gammas - b.gammas))) < tol * scale


def _batch_terms(G, beta, g, geom):
    """Residual F (rows = solution candidates) and the A, B factors."""
    w, inv, inv2, r1, r2, c = geom
    T = G * r1 - G @ inv.T
    U = G * r2 - G @ inv2.T
    quad = G ** 2 + beta ** 2
    A = G - 2 * g * c
    B = quad - 4 * g * w * T
    return A * B - g * quad + 4 * g ** 2 * w ** 2 * U, A, B


def _batch_jacobian(G, A, B, g, geom):
    w, inv, inv2, r1, r2, c = geom
    J = (4 * g * w * A)[:, :, None] * inv - ((4 * g ** 2 * w ** 2)[:, None] * inv2)
    d = B + A * (2 * G - 4 * g * w * r1) - 2 * g * G + 4 * g ** 2 * w ** 2 * r2
    idx = np.arange(G.shape[1])
    J[:, idx, idx] = d
    return J


def _batch_newton(G, N, spec, settings, g):
    """Damped Newton on every row at fixed coupling g.

    Returns (G_new, residual_norms, failed) where failed marks rows that
    stalled, hit the iteration cap, or had a singular Jacobian.
    """
    geom = _geometry(spec.omega)
    beta = 1 + 2j * g * (spec.L - N)
    G = G.copy()
    M = G.shape[0]
    failed = np.zeros(M, dtype=bool)
    stalled = np.zeros(M, dtype=bool)
    F, A, B = _batch_terms(G, beta, g, geom)
    fn = np.max(np.abs(F), axis=1)
    scale = np.maximum(1.0, np.max(np.abs(G), axis=1))
    tol = settings.newton_tol * np.maximum(scale, abs(beta)) ** 3
    for _ in range(settings.newton_max_iter):
        act = np.flatnonzero(~failed & ~stalled & (fn >= tol))
        if act.size == 0:
            break
        J = _batch_jacobian(G[act], A[act], B[act], g, geom)
        try:
            step = np.linalg.solve(J, -F[act][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.full_like(F[act], np.nan)
            for r in range(act.size):
                try:
                    step[r] = np.linalg.solve(J[r], -F[act[r]])
                except np.linalg.LinAlgError:
                    failed[act[r]] = True
            act = act[~failed[act]]
            step = step[~np.isnan(step[:, 0])]
            if act.size == 0:
                continue
        pend = np.ones(act.size, dtype=bool)
        sc = np.ones(act.size)
        for _ in range(60):
            rows = act[pend]
            if rows.size == 0:
                break
            trial = G[rows] + sc[pend, None] * step[pend]
            Ft, At, Bt = _batch_terms(trial, beta, g, geom)
            ftn = np.max(np.abs(Ft), axis=1)
            good = (ftn < fn[rows]) | (ftn < tol[rows])
            gi = rows[good]
            G[gi], F[gi], A[gi], B[gi], fn[gi] = (
                trial[good], Ft[good], At[good], Bt[good], ftn[good])
            ns = np.maximum(1.0, np.max(np.abs(G[gi]), axis=1))
            tol[gi] = settings.newton_tol * np.maximum(ns, abs(beta)) ** 3
            keep = pend.copy()
            keep[np.flatnonzero(pend)[good]] = False
            pend = keep
            sc[pend] *= 0.5
        stalled[act[pend]] = True
    # stalled rows whose residual is still tiny hit the conditioning floor
    # of double precision near a close solution cluster; accept them
    failed |= fn >= 1e4 * tol
    return G, fn, failed


def _collision_groups(G, tol=1e-6):
    """Indices of rows that have (numerically) merged onto one solution."""
    scale = 1.0 + float(np.max(np.abs(G)))
    q = np.round(G / (scale * tol)) + 0.0  # +0.0 folds -0.0 into +0.0
    keys = {}
    for i in range(G.shape[0]):
        keys.setdefault(q[i].tobytes(), []).append(i)
    return [v for v in keys.values() if len(v) > 1]


def _repair_group(idxs, G_prev, z_prev, z_cur, labels, N, spec, settings,
                  delta):
    """Re-walk collided rows from z_prev to z_cur around the local branch
    point, each on its own side/height, so they land on distinct sheets."""
    mid = 0.5 * (z_prev + z_cur)
    out = {}
    for rank, i in enumerate(idxs):
        sign = 1 if rank % 2 == 0 else -1
        off = 1j * sign * (rank // 2 + 1) * delta
        st = EvbState(G_prev[i].copy(), labels[i], z_prev, N)
        st = _walk(st, spec, settings, mid + off, settings.g_step_initial)
        st = _walk(st, spec, settings, z_cur, settings.g_step_initial)
        out[i] = st.gammas
    return out


def _row_separations(G):
    """Per row, 2-norm distance to the nearest other row."""
    if G.shape[0] == 1:
        return np.array([np.inf])
    gram = G @ G.conj().T
    sq = np.real(np.diag(gram)).copy()
    d2 = sq[:, None] + sq[None, :] - 2 * np.real(gram)
    np.fill_diagonal(d2, np.inf)
    return np.sqrt(np.maximum(d2.min(axis=1), 0.0))


def _batch_walk(G, labels, N, spec, settings, z0, z1, repair=True):
    """Synchronized continuation of all rows along the segment z0 -> z1.

    Every row advances with the same adaptive step.  A row failure, a
    charge sum-rule violation, or a Newton correction that is not small
    against the row's distance to its nearest neighbour (the scale on
    which branches can be confused) halves the global step; rows that
    still merge onto one solution (a branch point adjacent to the path)
    are re-walked locally around it on distinct sides.
    """
    span = abs(z1 - z0)
    if span == 0:
        return G
    u = (z1 - z0) / span
    L = spec.L
    s = 0.0
    step = min(settings.g_step_initial, span)
    step_max = max(0.05, settings.g_step_initial)
    prev = None
    rate = None
    easy = 0
    sep = _row_separations(G)
    while s < span - 1e-15:
        step = min(step, span - s)
        s_try = s + step
        z = z0 + u * s_try
        if prev is not None and prev[0] < s:
            guess = G + (G - prev[1]) * ((s_try - s) / (s - prev[0]))
        else:
            guess = G
        Gn, fn, failed = _batch_newton(guess, N, spec, settings, z)
        ok = not failed.any()
        if ok:
            moved = np.max(np.abs(Gn - guess), axis=1)
            allowed = 0.01 * (1.0 + np.max(np.abs(Gn), axis=1))
            if rate is not None:
                allowed = np.maximum(allowed, 3.0 * rate * step)
            # guard against silent branch swaps, but only between rows
            # whose separation is actually resolvable; unresolvably close
            # rows are handled by the collision repair when they merge
            resolvable = sep > 1e-4 * (1.0 + np.max(np.abs(Gn), axis=1))
            allowed = np.where(resolvable,
                               np.minimum(allowed, 0.3 * sep), allowed)
            want = 1j * (N - L) + z * ((N - L) ** 2 + L ** 2)
            base = 1e-6 * (1.0 + abs(want))
            sums = np.abs(Gn.sum(axis=1) - want)
            bad = np.flatnonzero(sums > base)
            still = []
            for i in bad:
                beta = 1 + 2j * z * (L - N)
                scl3 = max(1.0, float(np.max(np.abs(Gn[i]))), abs(beta)) ** 3
                cand, fc, sd = _constrained_polish(Gn[i], N, z, spec,
                                                  settings)
                if fc < 1e4 * settings.newton_tol * scl3 and sd <= base:
                    Gn[i], fn[i] = cand, fc
                else:
                    still.append(i)
            ok = bool(np.all(moved <= allowed) and not still)
        if not ok:
            if step / 2 < settings.g_step_min:
                if failed.any():
                    why = f"rows failed: {np.flatnonzero(failed)[:5]}"
                else:
                    viol = np.flatnonzero(moved > allowed)
                    why = (f"jump rows {viol[:5]} moved {moved[viol][:3]} "
                           f"allowed {allowed[viol][:3]} sep {sep[viol][:3]} "
                           f"sum rows {still[:5]}")
                raise NonConvergenceError(
                    f"synchronized continuation stalled at g = {z} ({why})",
                    last_good_g=z0 + u * s)
            step /= 2
            easy = 0
            continue
        if repair:
            for attempt in range(4):
                groups = _collision_groups(Gn)
                if not groups:
                    break
                delta = 2.0 * step * 3.0 ** attempt
                try:
                    for idxs in groups:
                        fixed = _repair_group(idxs, G, z0 + u * s, z, labels,
                                              N, spec, settings, delta)
                        for i, row in fixed.items():
                            Gn[i] = row
                except NonConvergenceError:
                    continue
            else:
                groups = _collision_groups(Gn)
                if groups:
                    raise NonConvergenceError(
                        f"could not separate colliding solutions at g = {z} "
                        f"(labels {[labels[i] for i in groups[0]]})",
                        last_good_g=z0 + u * s)
        rate = np.max(np.abs(Gn - G), axis=1) / step
        prev = (s, G)
        G = Gn
        s = s_try
        easy += 1
        sep = _row_separations(G)
        if easy >= 2:
            step = min(step * 1.5, step_max)
        # pre-emptive limit: no row should travel a large fraction of its
        # (resolvable) separation from the nearest other row in one step
        floor = 1e-4 * (1.0 + np.max(np.abs(G), axis=1))
        safe = np.min(np.maximum(0.2 * sep, floor) / np.maximum(rate, 1e-12))
        step = max(min(step, safe), settings.g_step_min)
    return G


def sweep_labels(labels, spec, settings=None, snapshot_g=(), detour_sign=1):
    """Continue the g = 0 seeds of the given occupation labels to spec.g
    in one synchronized sweep along the lifted ray.

    snapshot_g is an ascending sequence of real couplings in (0, spec.g];
    at each one a copy of the whole set is dropped to the real axis and
    recorded, which makes a full spectral flow cost a single sweep.
    Returns (states, snapshots) with snapshots a dict {g: gamma matrix}.
    """
    settings = settings or ContinuationSettings()
    target = float(spec.g)
    if target < 0:
        raise ValueError("target g must be nonnegative")
    labels = [tuple(int(n) for n in l) for l in labels]
    if any(sum(l) != spec.N for l in labels):
        raise ValueError(f"all labels must lie in the N = {spec.N} sector")
    N = spec.N
    G = np.array([1j * (np.array(l, dtype=float) - 1) for l in labels])
    snapshot_g = [float(g) for g in snapshot_g]
    if any(g <= 0 or g > target for g in snapshot_g) or \
            sorted(snapshot_g) != snapshot_g:
        raise ValueError("snapshot couplings must be ascending and in (0, g]")
    if target == 0:
        return [seed_from_occupation(l) for l in labels], {}
    eps = detour_sign * settings.path_epsilon
    snapshots = {}
    g_ray = 0.0
    for g_r in snapshot_g:
        G = _batch_walk(G, labels, N, spec, settings,
                        g_ray * (1 + 1j * eps), g_r * (1 + 1j * eps))
        snapshots[g_r] = _batch_walk(G.copy(), labels, N, spec, settings,
                                     g_r * (1 + 1j * eps), complex(g_r),
                                     repair=False)
        g_ray = g_r
    G = _batch_walk(G, labels, N, spec, settings,
                    g_ray * (1 + 1j * eps), target * (1 + 1j * eps))
    G = _batch_walk(G, labels, N, spec, settings,
                    target * (1 + 1j * eps), complex(target))
    geom = _geometry(spec.omega)
    beta = 1 + 2j * target * (spec.L - N)
    fn = np.max(np.abs(_batch_terms(G, beta, target, geom)[0]), axis=1)
    # final polish with the sum rule enforced, down to the residual floor;
    # the walk tolerances are relative and leave large-gamma rows and rows
    # that crossed ill-conditioned stretches with reduced accuracy
    want = 1j * (N - spec.L) + target * ((N - spec.L) ** 2 + spec.L ** 2)
    for i in range(G.shape[0]):
        sd = abs(G[i].sum() - want)
        cand, fc, sdc = _constrained_polish(G[i], N, complex(target),
                                            spec, settings)
        if fc <= fn[i] or sdc <= sd:
            G[i], fn[i] = cand, fc
    states = [EvbState(G[i], labels[i], target, N, float(fn[i]))
              for i in range(len(labels))]
    return states, snapshots


def sweep_sector(spec, settings=None, snapshot_g=(), detour_sign=1):
    """Synchronized sweep over every occupation label of the (L, N)
    sector, in lexicographic label order."""
    return sweep_labels(enumerate_sector(spec.L, spec.N), spec, settings,
                        snapshot_g, detour_sign)


def solve_sector(spec, settings=None):
    """All solutions of the (L, N) sector at spec.g, one per occupation
    label, in lexicographic label order."""
    return sweep_sector(spec, settings)[0]


def charges_from_state(state, spec):
    """Undo the shift: q_j = gamma_j - g - 2g sum_{k!=j} omega_j/(omega_j - omega_k)."""
    _, _, _, _, _, c = _geometry(spec.omega)
    g = float(np.real(state.g_current))
    return state.gammas - g - 2 * g * c


def eigenvalue_of_state(state, spec):
    """Liouvillian eigenvalue of a solved state, including the g0/Omega shift."""
    return eigenvalue_from_charges(spec, charges_from_state(state, spec))


def _pair_eigs(occ_pair, spec, g, settings):
    s = spec.with_g(g)
    states = [continue_in_g(occ, s, settings) for occ in occ_pair]
    return states, [eigenvalue_of_state(st, s) for st in states]


def locate_exceptional_point(occ_pair, spec, settings=None, g_bracket=(0.0, None),
                             im_tol=1e-6, g_tol=1e-10):
    """Bisect for the coupling g* where a conjugate pair coalesces.

    The pair must be a complex-conjugate pair at the lower bracket end and
    two distinct real eigenvalues at the upper end.  The bisection result
    is refined by minimizing the pair splitting |gamma_a - gamma_b|, which
    grows as sqrt|g - g*| on both sides and therefore pins g* far more
    sharply than the real/complex classification alone.  Returns
    (g_star, gamma_star, states) with |Im gamma| < im_tol at g_star.
    """
    settings = settings or ContinuationSettings()
    if spec.homogeneous:
        raise SingularInputError("homogeneous model has no exceptional points here")
    lo, hi = g_bracket
    hi = spec.g if hi is None else hi

    def is_real(g):
        _, eigs = _pair_eigs(occ_pair, spec, g, settings)
        return max(abs(e.imag) for e in eigs) < im_tol, eigs

    lo_real, _ = is_real(lo) if lo > 0 else (False, None)
    hi_real, _ = is_real(hi)
    if lo_real or not hi_real:
        raise ValueError(
            f"invalid bracket ({lo}, {hi}): pair must be complex at the lower "
            "end and real at the upper end")
    while hi - lo > g_tol:
        mid = 0.5 * (lo + hi)
        real, _ = is_real(mid)
        if real:
            hi = mid
        else:
            lo = mid
    # refine: the pair splitting obeys |gamma_a - gamma_b|^2 = 4b^2 (g - g*)
    # just above the coalescence, so two samples on the real side - where
    # the continuation is well conditioned - extrapolate linearly to g*,
    # beating the noise-limited classification boundary by orders of
    # magnitude
    def split2(g):
        _, eigs = _pair_eigs(occ_pair, spec, g, settings)
        return abs(eigs[0] - eigs[1]) ** 2

    g_star = hi
    delta = max(1e4 * g_tol, 1e-6 * (1 + hi))
    y1, y2 = split2(hi + delta), split2(hi + 2 * delta)
    if y2 > y1 > 0:
        cand = hi + delta - y1 * delta / (y2 - y1)
        if lo - delta < cand < hi + delta:
            g_star = float(cand)
    # near the coalescence the Jacobian is nearly singular, so the final
    # evaluation needs the full Newton tolerance rather than the cheaper
    # default used while bracketing
    tight = replace(settings, newton_tol=min(settings.newton_tol, 1e-14))
    states, eigs = _pair_eigs(occ_pair, spec, g_star, tight)
    # the partners coalesce at g*; their midpoint cancels the residual
    # antisymmetric sqrt-splitting error
    gamma_star = 0.5 * (eigs[0] + eigs[1])
    if abs(gamma_star.imag) >= im_tol:
        g_star = hi
        states, eigs = _pair_eigs(occ_pair, spec, g_star, tight)
        gamma_star = 0.5 * (eigs[0] + eigs[1])
    return g_star, gamma_star, states
