"""Dense exact-diagonalization oracle on the spin-1 chain.

Builds the Liouvillian, the commuting charges and the spin-inversion
operator as explicit complex matrices, either on the full 3^L product
space or restricted to one excitation sector, and diagonalizes them with
LAPACK.  Ground truth for all small-L checks.

Basis conventions: states are occupation vectors (n_1...n_L) with
n_j in {0, 1, 2} (spin projection m_j = n_j - 1), ordered lexicographically.
Single-site spin-1 matrices are given in the S^z eigenbasis ordered
(m = +1, 0, -1).
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig

from .model import ModelSpec, SingularInputError, SpectrumRecord, sector_dimension

__all__ = [
    "DenseOperator",
    "SP1", "SM1", "SZ1", "SX1", "SY1",
    "full_basis", "sector_basis",
    "build_liouvillian", "build_charge", "build_sz", "build_spin_inversion",
    "diagonalize", "sector_spectrum", "bethe_vector",
]

SQ2 = np.sqrt(2.0)

# spin-1 matrices, basis order (m = +1, 0, -1)
SP1 = np.array([[0, SQ2, 0], [0, 0, SQ2], [0, 0, 0]], dtype=complex)
SM1 = SP1.T.conj()
SZ1 = np.diag([1.0, 0.0, -1.0]).astype(complex)
SX1 = (SP1 + SM1) / 2
SY1 = (SP1 - SM1) / 2j

_FULL_DIM_MAX = 3 ** 8
_SECTOR_DIM_MAX = 3000


class ResourceLimitError(RuntimeError):
    """Requested operator exceeds the dense-oracle size guard."""


@dataclass
class DenseOperator:
    """Complex matrix together with its occupation basis."""

    dim: int
    entries: np.ndarray
    basis: list  # occupation tuples, lexicographic

    def dump(self, path):
        """Binary debug dump: dim as int64, then row-major (re, im) float64
        pairs, all little-endian."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<q", self.dim))
            inter = np.empty((self.dim, self.dim, 2))
            inter[..., 0] = self.entries.real
            inter[..., 1] = self.entries.imag
            fh.write(inter.astype("<f8").tobytes())

    @classmethod
    def load(cls, path, basis=None):
        with open(path, "rb") as fh:
            (dim,) = struct.unpack("<q", fh.read(8))
            flat = np.frombuffer(fh.read(), dtype="<f8").reshape(dim, dim, 2)
        entries = flat[..., 0] + 1j * flat[..., 1]
        return cls(dim, entries, basis if basis is not None else [])


def full_basis(L):
    """All 3^L occupation vectors, lexicographic."""
    return [occ for occ in itertools.product(range(3), repeat=L)]


def sector_basis(L, N):
    """Occupation vectors with sum n_j = N, lexicographic."""
    return [occ for occ in itertools.product(range(3), repeat=L) if sum(occ) == N]


def _check_size(dim, full):
    if full and dim > _FULL_DIM_MAX:
        raise ResourceLimitError(f"full-space dim {dim} exceeds {_FULL_DIM_MAX}")
    if not full and dim > _SECTOR_DIM_MAX:
        raise ResourceLimitError(f"sector dim {dim} exceeds {_SECTOR_DIM_MAX}")


def _hop_amp(occ, j, k):
    """Amplitude and target for S_j^+ S_k^- acting on |occ>, or None.

    S^+|m> = sqrt(2 - m(m+1)) |m+1> in terms of m = n - 1; for spin-1 both
    allowed steps carry amplitude sqrt(2).
    """
    if occ[j] == 2 or occ[k] == 0:
        return None
    new = list(occ)
    new[j] += 1
    new[k] -= 1
    return tuple(new), 2.0  # sqrt(2) * sqrt(2)


def _basis_for(spec, sector_restricted):
    if sector_restricted:
        basis = sector_basis(spec.L, spec.N)
    else:
        basis = full_basis(spec.L)
    _check_size(len(basis), not sector_restricted)
    return basis


def build_liouvillian(spec, sector_restricted=False):
    """Dense matrix of the Liouvillian

    L = i sum_j (Omega + omega_j) S_j^z - g0 (sum_j S_j^z)^2
        - g sum_{j,k} sqrt(omega_j omega_k) (S_j^x S_k^x + S_j^y S_k^y),

    including the diagonal j = k interaction terms.
    """
    basis = _basis_for(spec, sector_restricted)
    index = {occ: i for i, occ in enumerate(basis)}
    dim = len(basis)
    w = spec.omega_arr
    g = spec.g
    mat = np.zeros((dim, dim), dtype=complex)
    for i, occ in enumerate(basis):
        m = np.array(occ) - 1
        # diagonal: field + dephasing + j = k interaction
        # (S_j^x)^2 + (S_j^y)^2 = 2 - (S_j^z)^2 on spin-1
        diag = (1j * np.sum((spec.Omega + w) * m)
                - spec.g0 * np.sum(m) ** 2
                - g * np.sum(w * (2.0 - m ** 2)))
        mat[i, i] += diag
        # off-diagonal hopping: (XX + YY)_{jk} = (S_j^+ S_k^- + S_j^- S_k^+)/2,
        # summed over ordered pairs j != k
        for j in range(spec.L):
            for k in range(spec.L):
                if j == k:
                    continue
                hop = _hop_amp(occ, j, k)
                if hop is None:
                    continue
                new, amp = hop
                i2 = index.get(new)
                if i2 is not None:
                    mat[i2, i] += -g * np.sqrt(w[j] * w[k]) * amp
    return DenseOperator(dim, mat, basis)


def build_charge(spec, j, sector_restricted=False):
    """Dense matrix of the conserved charge

    Q_j = i S_j^z + g (S_j^z)^2
          - 2g sum_{k != j} omega_k/(omega_j - omega_k) S_j^z S_k^z
          - 2g sum_{k != j} sqrt(omega_j omega_k)/(omega_j - omega_k)
                (S_j^x S_k^x + S_j^y S_k^y).
    """
    if spec.homogeneous:
        raise SingularInputError("charges are singular for equal omega_j")
    basis = _basis_for(spec, sector_restricted)
    index = {occ: i for i, occ in enumerate(basis)}
    dim = len(basis)
    w = spec.omega_arr
    g = spec.g
    mat = np.zeros((dim, dim), dtype=complex)
    others = [k for k in range(spec.L) if k != j]
    for i, occ in enumerate(basis):
        m = np.array(occ) - 1
        diag = 1j * m[j] + g * m[j] ** 2
        for k in others:
            diag += -2 * g * w[k] / (w[j] - w[k]) * m[j] * m[k]
        mat[i, i] += diag
        for k in others:
            pref = -2 * g * np.sqrt(w[j] * w[k]) / (w[j] - w[k])
            for (a, b) in ((j, k), (k, j)):
                hop = _hop_amp(occ, a, b)
                if hop is None:
                    continue
                new, amp = hop
                i2 = index.get(new)
                if i2 is not None:
                    mat[i2, i] += pref * amp / 2
    return DenseOperator(dim, mat, basis)


def build_sz(L, basis=None):
    """Dense matrix of total S^z."""
    if basis is None:
        basis = full_basis(L)
    diag = np.array([sum(occ) - L for occ in basis], dtype=complex)
    return DenseOperator(len(basis), np.diag(diag), basis)


def build_spin_inversion(L):
    """Spin inversion P = prod_j [1 - 2 (S_j^x)^2]: |1, m> -> -|1, -m>.

    Satisfies P^2 = 1, P S^z P = -S^z and P^dag L P = L^dag.
    """
    basis = full_basis(L)
    index = {occ: i for i, occ in enumerate(basis)}
    dim = len(basis)
    mat = np.zeros((dim, dim), dtype=complex)
    sign = (-1.0) ** L
    for i, occ in enumerate(basis):
        flipped = tuple(2 - n for n in occ)
        mat[index[flipped], i] = sign
    return DenseOperator(dim, mat, basis)


def diagonalize(op, defect_cond=1e10):
    """Full non-symmetric eigendecomposition.

    Returns (eigenvalues, right-eigenvector matrix, defective) where
    `defective` flags an eigenvector-matrix condition number above
    `defect_cond` (exceptional-point indicator).
    """
    vals, vecs = eig(op.entries)
    cond = np.linalg.cond(vecs)
    return vals, vecs, bool(cond > defect_cond)


def sector_spectrum(spec):
    """ED eigenvalues of the N-excitation sector as SpectrumRecords."""
    op = build_liouvillian(spec, sector_restricted=True)
    vals, _, _ = diagonalize(op)
    return [SpectrumRecord(complex(v), (), spec.sz, "ED") for v in vals]


def bethe_vector(spec, v, basis=None):
    """State vector of the Bethe state prod_a (sum_j sqrt(omega_j)/(omega_j - v_a) S_j^+) |vac>.

    Small-L eigenvector cross-check only; amplitudes built by repeated
    application of the generalized raising operators.
    """
    if basis is None:
        basis = full_basis(spec.L)
    index = {occ: i for i, occ in enumerate(basis)}
    w = spec.omega_arr
    psi = np.zeros(len(basis), dtype=complex)
    vac = tuple([0] * spec.L)
    psi[index[vac]] = 1.0
    for va in np.asarray(v, dtype=complex):
        nxt = np.zeros_like(psi)
        coeff = np.sqrt(w) / (w - va)
        for i, amp in enumerate(psi):
            if amp == 0:
                continue
            occ = basis[i]
            for j in range(spec.L):
                if occ[j] == 2:
                    continue
                new = list(occ)
                new[j] += 1
                i2 = index.get(tuple(new))
                if i2 is not None:
                    nxt[i2] += amp * coeff[j] * SQ2
        psi = nxt
    return psi
