"""Headline computations: flows, leading modes, quantization, transitions."""

import numpy as np
import pytest

from _helpers import multiset_err
from openrg import ed, evb, experiments
from openrg.model import homogeneous_model, picket_fence, sector_dimension


def test_conjugate_label():
    assert experiments.conjugate_label((0, 1, 2)) == (2, 1, 0)
    assert experiments.conjugate_label((1, 1)) == (1, 1)


def test_spectral_flow_rows_and_free_limit():
    spec = picket_fence(3, 3, 1.0)
    grid = [0.0, 0.5, 1.0]
    rows = experiments.spectral_flow(spec, grid)
    assert len(rows) == len(grid) * sector_dimension(3, 3)
    w = spec.omega_arr
    for g, occ, re, over, im, res in rows:
        if g == 0.0:
            assert re == 0.0 and np.isnan(over)
            assert im == pytest.approx(np.sum(w * (np.array(occ) - 1)))
        else:
            assert over == pytest.approx(re / g)
            assert res < 1e-8


def test_spectral_flow_matches_ed_along_grid():
    spec = picket_fence(3, 3, 1.0)
    rows = experiments.spectral_flow(spec, [0.3, 1.0])
    for g in (0.3, 1.0):
        eigs = [complex(re, im) for gg, _, re, _, im, _ in rows if gg == g]
        vals, _, _ = ed.diagonalize(
            ed.build_liouvillian(spec.with_g(g), sector_restricted=True))
        assert multiset_err(eigs, vals) < 1e-9


def test_spectral_flow_validation():
    spec = picket_fence(3, 3, 1.0)
    with pytest.raises(ValueError):
        experiments.spectral_flow(spec, [1.0, 0.5])
    with pytest.raises(Exception):
        experiments.spectral_flow(homogeneous_model(3, 1.0, 1.0, 3), [0.5])


def test_full_spectrum_closure_and_count():
    spec = picket_fence(3, 3, 0.8)
    recs = experiments.full_spectrum(spec)
    assert len(recs) == 3 ** 3
    eigs = [r.gamma for r in recs]
    assert sorted((z.real, z.imag) for z in eigs) \
        == sorted((z.real, -z.imag) for z in eigs)
    # conjugate sectors carry conjugate multisets
    by_sector = {}
    for r in recs:
        by_sector.setdefault(r.sector, []).append(r.gamma)
    for s in by_sector:
        assert multiset_err(by_sector[s], np.conj(by_sector[-s])) < 1e-12


def test_sector_records_symmetrized():
    spec = picket_fence(4, 4, 0.6)
    recs = experiments.sector_records(spec)
    eigs = [r.gamma for r in recs]
    # symmetrization makes the N = L multiset exactly self-conjugate
    assert multiset_err(eigs, np.conj(eigs)) == 0.0
    assert all(r.charge_eigs is not None for r in recs)


def test_leading_mode_homogeneous_closed_form():
    spec = homogeneous_model(6, 1.5, 0.8, 6, g0=0.1, Omega=0.2)
    rec = experiments.leading_mode(spec)
    assert rec.source == "HOMOGENEOUS"
    # gamma_{S=1,M=1} = i(omega + Omega) - g omega - g0
    assert rec.gamma == pytest.approx(1j * 1.7 - 0.8 * 1.5 - 0.1)


def test_targeted_matches_exhaustive_leading_mode():
    for g in (0.5, 2.0):
        spec = picket_fence(6, 6, g)
        exhaustive = experiments.leading_mode(spec)
        targeted = experiments.targeted_leading_mode(spec)
        assert abs(abs(targeted.gamma.real) - abs(exhaustive.gamma.real)) \
            < 1e-7
    with pytest.raises(ValueError):
        experiments.targeted_leading_mode(picket_fence(5, 5, 1.0))
    with pytest.raises(ValueError):
        experiments.targeted_leading_mode(picket_fence(6, 5, 1.0))


def test_gap_scaling_validation_and_workers():
    with pytest.raises(ValueError):
        experiments.gap_scaling([10, 8], 2.0)
    with pytest.raises(ValueError):
        experiments.gap_scaling([7], 2.0)
    with pytest.raises(ValueError):
        experiments.gap_scaling([], 2.0)
    serial = experiments.gap_scaling([10, 14], 2.0)
    parallel = experiments.gap_scaling([10, 14], 2.0, workers=2)
    assert serial.gap_values == parallel.gap_values
    assert not np.isnan(serial.fit_rms)


def test_ratio_quantization_near_polarized():
    spec = picket_fence(6, 1, 5.0)
    rows = experiments.ratio_quantization(spec, 5.0)
    assert len(rows) == sector_dimension(6, 1)
    for occ, p, measured, predicted, dev in rows:
        if p == 1:
            assert abs(abs(measured) - 1 / 3) < 0.05
    with pytest.raises(ValueError):
        experiments.ratio_quantization(spec, 1.0)


def test_charge_trace_shapes():
    spec = picket_fence(3, 3, 1.0)
    pair = ((0, 1, 2), (2, 1, 0))
    rows = experiments.charge_trace(pair, spec, [0.5, 1.0])
    assert len(rows) == 2 * 2 * 3
    with pytest.raises(ValueError):
        experiments.charge_trace(pair, spec, [0.0])


def test_transition_map_homogeneous_empty():
    assert experiments.transition_map(homogeneous_model(3, 1.0, 1.0, 3),
                                      (0.0, 2.0)) == []


def test_transition_map_l3():
    spec = picket_fence(3, 3, 1.0)
    recs = experiments.transition_map(spec, (0.0, 2.0))
    assert len(recs) == 3  # conjugate pairs in the 7-state sector
    found = {r for r in recs if r.g_star is not None}
    assert len(found) == 3
    for r in found:
        assert 0 < r.g_star < 2.0
        assert abs(r.gamma_star.imag) < 1e-6
        assert r.trace


def test_transition_stability_under_tighter_tolerance():
    spec = picket_fence(3, 3, 2.0)
    pair = ((0, 2, 1), (2, 0, 1))
    g1, _, _ = evb.locate_exceptional_point(pair, spec, g_bracket=(0.0, 2.0))
    g2, _, _ = evb.locate_exceptional_point(pair, spec, g_bracket=(0.0, 2.0),
                                            im_tol=5e-7, g_tol=5e-11)
    assert abs(g1 - g2) < 1e-5
