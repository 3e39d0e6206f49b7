"""Dense oracle: operator construction and diagonalization."""

import numpy as np
import pytest

from _helpers import multiset_err
from openrg import ed
from openrg.model import picket_fence


def test_basis_sizes():
    assert len(ed.full_basis(3)) == 27
    assert len(ed.sector_basis(3, 3)) == 7
    assert sum(len(ed.sector_basis(3, N)) for N in range(7)) == 27


def test_spin_inversion_squares_to_identity():
    P = ed.build_spin_inversion(3)
    assert np.allclose(P.entries @ P.entries, np.eye(27), atol=1e-14)


def test_sz_diagonal():
    sz = ed.build_sz(2)
    basis = ed.full_basis(2)
    expected = np.diag([sum(occ) - 2 for occ in basis]).astype(float)
    assert np.allclose(sz.entries, expected, atol=1e-14)


def test_sector_blocks_match_full_operator():
    spec = picket_fence(3, 2, 0.8)
    full = ed.build_liouvillian(spec)
    sector = ed.build_liouvillian(spec, sector_restricted=True)
    basis = ed.full_basis(3)
    idx = [i for i, occ in enumerate(basis) if sum(occ) == 2]
    assert np.allclose(full.entries[np.ix_(idx, idx)], sector.entries,
                       atol=1e-14)
    # the Liouvillian never mixes sectors
    other = [i for i in range(27) if i not in idx]
    assert np.max(np.abs(full.entries[np.ix_(idx, other)])) == 0


def test_free_limit_spectrum():
    # g = 0: diagonal with eigenvalues i sum_j omega_j (n_j - 1)
    spec = picket_fence(3, 3, 0.0)
    op = ed.build_liouvillian(spec, sector_restricted=True)
    vals, _, _ = ed.diagonalize(op)
    basis = ed.sector_basis(3, 3)
    w = spec.omega_arr
    expected = [1j * np.sum(w * (np.array(occ) - 1)) for occ in basis]
    assert multiset_err(vals, expected) < 1e-12


def test_defectiveness_flag_on_jordan_block():
    op = ed.DenseOperator(2, np.array([[1.0, 1.0], [0.0, 1.0 + 1e-14]],
                                      dtype=complex), [])
    _, _, defective = ed.diagonalize(op)
    assert defective
    op = ed.DenseOperator(2, np.diag([1.0 + 0j, 2.0]), [])
    _, _, defective = ed.diagonalize(op)
    assert not defective


def test_resource_guard():
    with pytest.raises(ed.ResourceLimitError):
        ed.build_liouvillian(picket_fence(12, 6, 1.0))


def test_pseudo_hermiticity_at_random_coupling():
    spec = picket_fence(3, 3, 1.37)
    liou = ed.build_liouvillian(spec)
    P = ed.build_spin_inversion(3)
    lhs = P.entries.conj().T @ liou.entries @ P.entries
    assert np.allclose(lhs, liou.entries.conj().T, atol=1e-12)
