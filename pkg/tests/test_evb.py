"""Eigenvalue-based solver: continuation, sector sweeps, exceptional points."""

import numpy as np
import pytest

from _helpers import multiset_err
from openrg import ed, evb
from openrg.model import picket_fence, sector_dimension


def test_seed_is_exact_at_g_zero():
    st = evb.seed_from_occupation((2, 0, 1))
    spec = picket_fence(3, 3, 0.0)
    assert np.max(np.abs(evb.residual(st, spec))) < 1e-14
    with pytest.raises(ValueError):
        evb.seed_from_occupation((3, 0, 0))


def test_newton_recovers_perturbed_solution():
    spec = picket_fence(3, 3, 0.4)
    st = evb.continue_in_g((1, 1, 1), spec)
    jittered = evb.EvbState(st.gammas + 1e-4 * (1 + 1j), st.occupation,
                            st.g_current, st.N)
    polished = evb.newton_solve(jittered, spec, evb.ContinuationSettings())
    assert np.max(np.abs(polished.gammas - st.gammas)) < 1e-8


def test_charge_sum_rule_holds_after_continuation():
    for L, N, g in ((3, 3, 0.7), (4, 2, 1.3), (4, 6, 0.9)):
        spec = picket_fence(L, N, g)
        for occ in evb.enumerate_sector(L, N):
            st = evb.continue_in_g(occ, spec)
            target = 1j * (N - L) + g * ((N - L) ** 2 + L ** 2)
            assert abs(np.sum(st.gammas) - target) < 1e-8 * (1 + abs(target))


def test_solve_sector_counts_and_matches_ed():
    for L, N, g in ((2, 2, 0.5), (3, 3, 1.0), (4, 3, 0.8), (4, 5, 1.2)):
        spec = picket_fence(L, N, g)
        states = evb.solve_sector(spec)
        assert len(states) == sector_dimension(L, N)
        eigs = [evb.eigenvalue_of_state(st, spec) for st in states]
        vals, _, _ = ed.diagonalize(
            ed.build_liouvillian(spec, sector_restricted=True))
        assert multiset_err(eigs, vals) < 1e-9


def test_sector_multiset_closed_under_conjugation():
    # pseudo-Hermiticity: the N = L eigenvalue multiset is its own
    # complex conjugate (individual labels may swap within a pair)
    spec = picket_fence(3, 3, 0.45)
    eigs = [evb.eigenvalue_of_state(st, spec)
            for st in evb.solve_sector(spec)]
    assert multiset_err(eigs, np.conj(eigs)) < 1e-9


def test_sweep_labels_subset():
    spec = picket_fence(3, 3, 0.6)
    labels = [(1, 1, 1), (2, 0, 1)]
    states, snaps = evb.sweep_labels(labels, spec, snapshot_g=(0.3,))
    assert [st.occupation for st in states] == labels
    assert set(snaps) == {0.3}
    full = {st.occupation: evb.eigenvalue_of_state(st, spec)
            for st in evb.solve_sector(spec)}
    for st in states:
        assert evb.eigenvalue_of_state(st, spec) \
            == pytest.approx(full[st.occupation], abs=1e-9)
    with pytest.raises(ValueError):
        evb.sweep_labels([(2, 0, 0)], spec)


def test_continue_along_matches_sector_spectrum():
    # the Hermitian-arc path must land on an actual eigenvalue
    g = 1.5
    spec = picket_fence(4, 4, g)
    st = evb.continue_along((2, 0, 2, 0), spec,
                            waypoints=evb.leading_mode_path(g))
    gamma = evb.eigenvalue_of_state(st, spec)
    vals, _, _ = ed.diagonalize(
        ed.build_liouvillian(spec, sector_restricted=True))
    assert np.min(np.abs(vals - gamma)) < 1e-8
    assert np.max(np.abs(evb.residual(st, spec))) < 1e-7


def test_leading_mode_path_shape():
    path = evb.leading_mode_path(0.25, radius_min=2.0)
    assert path[0] == -2.0j
    assert path[-1] == 0.25 + 0j
    assert all(abs(abs(z) - 2.0) < 1e-12 for z in path[:-1])
    with pytest.raises(ValueError):
        evb.leading_mode_path(0.0)


def test_locate_exceptional_point_l3():
    g_hi = 2.0
    spec = picket_fence(3, 3, g_hi)
    g_star, gamma_star, states = evb.locate_exceptional_point(
        ((0, 1, 2), (2, 1, 0)), spec, g_bracket=(0.0, g_hi))
    assert 0 < g_star < g_hi
    assert abs(gamma_star.imag) < 1e-6
    # both partners carry (numerically) identical charge vectors at g*
    qa = evb.charges_from_state(states[0], spec.with_g(g_star))
    qb = evb.charges_from_state(states[1], spec.with_g(g_star))
    assert np.max(np.abs(qa - qb)) < 1e-4


def test_locate_exceptional_point_invalid_bracket():
    spec = picket_fence(3, 3, 0.1)
    with pytest.raises(ValueError):
        evb.locate_exceptional_point(((0, 1, 2), (2, 1, 0)), spec,
                                     g_bracket=(0.0, 0.1))


def test_nonconvergence_error_carries_last_good_g():
    err = evb.NonConvergenceError("stuck", last_good_g=0.42)
    assert err.last_good_g == 0.42
