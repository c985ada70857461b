"""Pauli strings, dense/diagonal operator assembly, eigensolves and parity blocks.

Conventions used throughout the package:

* bit ``i`` of a basis-state index is spin ``i`` (site 0 is the least
  significant bit);
* bit value 0 is spin up (sigma^z = +1), bit value 1 is spin down;
* classical Hamiltonians are 1-D float arrays of length ``2**n`` holding the
  energy of each bit string;
* driver Hamiltonians are dense ``(2**n, 2**n)`` arrays;
* state vectors are complex 1-D arrays.

The global spin flip X...X maps index ``z`` to ``dim - 1 - z``, i.e. it
reverses the index order. Parity blocks use the orbit representatives
``z < 2**(n-1)`` (top bit clear).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    NotFlipSymmetricError,
    NotHermitianError,
    ResourceLimitError,
)

MAX_N = 14
SAFE_DENSE_N = 12
HERMITIAN_RTOL = 1e-12
FLIP_TOL = 1e-10

# process-wide override of the large-system gate (set by the CLI flag)
_LARGE_ALLOWED = False


def allow_large_systems(flag: bool = True) -> None:
    global _LARGE_ALLOWED
    _LARGE_ALLOWED = bool(flag)


def large_systems_allowed() -> bool:
    return _LARGE_ALLOWED

_AXES = "xyz"


@dataclass(frozen=True)
class PauliString:
    """Real-weighted product of single-site Pauli operators."""

    sites: tuple[int, ...]
    axes: str
    coeff: float = 1.0

    def __post_init__(self):
        sites = tuple(int(i) for i in self.sites)
        object.__setattr__(self, "sites", sites)
        if len(sites) != len(self.axes):
            raise ValueError("axes and sites must have equal length")
        if any(a not in _AXES for a in self.axes):
            raise ValueError(f"axis labels must be in 'xyz', got {self.axes!r}")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise ValueError(f"sites must be strictly increasing, got {sites}")
        if sites and sites[0] < 0:
            raise ValueError("site indices must be non-negative")
        if not np.isfinite(self.coeff):
            raise ValueError("coefficient must be finite")

    @property
    def flip_mask(self) -> int:
        """Bits flipped by the string (sites carrying x or y)."""
        return sum(1 << i for i, a in zip(self.sites, self.axes) if a != "z")

    @property
    def phase_mask(self) -> int:
        """Bits whose value contributes a sign (sites carrying y or z)."""
        return sum(1 << i for i, a in zip(self.sites, self.axes) if a != "x")


def check_size(n: int, allow_large: bool = False, max_n: int = MAX_N, copies: int = 2) -> None:
    """Gate dense ``2**n`` work on size and available memory."""
    if n > max_n:
        raise ResourceLimitError(f"n={n} exceeds the configured maximum {max_n}")
    if n > SAFE_DENSE_N and not (allow_large or _LARGE_ALLOWED):
        raise ResourceLimitError(
            f"dense work at n={n} needs the large-system flag (--max-n-unsafe)"
        )
    need = copies * 16 * 4**n
    try:
        avail = os.sysconf("SC_PHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return
    if need > avail:
        raise ResourceLimitError(
            f"dense work at n={n} needs ~{need / 2**30:.1f} GiB, only {avail / 2**30:.1f} GiB present"
        )


def walsh_hadamard(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    ``out[..., z] = sum_m a[..., m] * (-1)**popcount(z & m)``
    """
    a = np.array(a, copy=True)
    dim = a.shape[-1]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError("last axis length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < dim:
        v = a.reshape(*lead, dim // (2 * h), 2, h)
        lo = v[..., 0, :].copy()
        hi = v[..., 1, :]
        v[..., 0, :] += hi
        lo -= hi
        v[..., 1, :] = lo
        h *= 2
    return a


def assemble_dense(
    terms: Iterable[PauliString],
    n: int,
    allow_large: bool = False,
    max_n: int = MAX_N,
) -> np.ndarray:
    """Dense matrix of ``sum_k c_k P_k`` on ``n`` spins.

    A Pauli string acts as ``P|z> = i**n_y (-1)**popcount(z & phase) |z ^ flip>``,
    so all strings sharing a flip mask fill the same generalized diagonal;
    the signs for every phase mask are summed at once with a Walsh-Hadamard
    transform. Cost is ``O(n 4**n)`` regardless of the number of terms.
    """
    check_size(n, allow_large, max_n, copies=3)
    dim = 1 << n
    flips, phases, coeffs = [], [], []
    for t in terms:
        if t.sites and t.sites[-1] >= n:
            raise ValueError(f"site {t.sites[-1]} out of range for n={n}")
        flips.append(t.flip_mask)
        phases.append(t.phase_mask)
        coeffs.append(t.coeff)
    out = np.zeros((dim, dim), dtype=complex)
    if not coeffs:
        return out
    flips = np.asarray(flips, dtype=np.int64)
    phases = np.asarray(phases, dtype=np.int64)
    acc = np.zeros((dim, dim), dtype=complex)
    n_y = np.bitwise_count(flips & phases)
    np.add.at(acc, (flips, phases), np.asarray(coeffs) * (1j) ** n_y)
    used = np.unique(flips)
    diag = walsh_hadamard(acc[used])
    z = np.arange(dim)
    out[used[:, None] ^ z[None, :], z[None, :]] = diag
    return out


def apply(
    diag: np.ndarray | None,
    dense_parts: Sequence[tuple[float, np.ndarray]],
    psi: np.ndarray,
) -> np.ndarray:
    """``(diag + sum_k s_k M_k) @ psi``."""
    psi = np.asarray(psi)
    out = np.zeros(psi.shape, dtype=np.result_type(psi, complex))
    if diag is not None:
        if len(diag) != len(psi):
            raise DimensionMismatchError(f"diagonal has {len(diag)} entries, state {len(psi)}")
        out += diag * psi
    for weight, mat in dense_parts:
        if mat.shape != (len(psi), len(psi)):
            raise DimensionMismatchError(f"matrix {mat.shape} vs state of length {len(psi)}")
        if weight != 0:
            out += weight * (mat @ psi)
    return out


def check_hermitian(h: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if np.max(np.abs(h - h.conj().T), initial=0.0) > rtol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")


def eigensolve(h: np.ndarray, n_levels: int | None = None, vectors: bool = True):
    """Ascending eigenpairs of a Hermitian matrix.

    ``n_levels=None`` returns the full spectrum; otherwise only the lowest
    ``n_levels`` pairs are computed (LAPACK ``evr`` subset driver).
    Returns ``(eigenvalues, eigenvectors)`` or just eigenvalues when
    ``vectors=False``.
    """
    check_hermitian(h)
    dim = h.shape[0]
    subset = None
    if n_levels is not None:
        if not 1 <= n_levels <= dim:
            raise ValueError(f"n_levels must be in [1, {dim}], got {n_levels}")
        if n_levels < dim:
            subset = (0, n_levels - 1)
    result = scipy.linalg.eigh(
        h,
        eigvals_only=not vectors,
        subset_by_index=subset,
        driver="evr" if subset else None,
        check_finite=False,
    )
    return result


def flip_indices(n: int) -> np.ndarray:
    return np.arange((1 << n) - 1, -1, -1)


def flip_asymmetry(diag: np.ndarray | None, dense: np.ndarray | None) -> float:
    """Largest entry of ``[H, X...X]``; zero for flip-symmetric operators."""
    worst = 0.0
    if diag is not None:
        worst = max(worst, float(np.max(np.abs(diag - diag[::-1]))))
    if dense is not None:
        worst = max(worst, float(np.max(np.abs(dense - dense[::-1, ::-1]))))
    return worst


@dataclass(frozen=True)
class ParityBlock:
    """Restriction of a flip-symmetric operator to one spin-flip sector.

    Basis vector ``k`` is ``(|r_k> + sector |~r_k>) / sqrt(2)`` with
    ``r_k = basis[k]``.
    """

    sector: int
    basis: np.ndarray
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.basis).bit_length()

    def embed(self, vec: np.ndarray) -> np.ndarray:
        """Block-basis vector -> full computational-basis vector."""
        dim = 2 * len(self.basis)
        out = np.zeros(dim, dtype=np.result_type(vec, float))
        out[self.basis] = vec / np.sqrt(2)
        out[dim - 1 - self.basis] = self.sector * vec / np.sqrt(2)
        return out

    def project(self, psi: np.ndarray) -> np.ndarray:
        """Full vector -> block coordinates (component in this sector)."""
        dim = len(psi)
        return (psi[self.basis] + self.sector * psi[dim - 1 - self.basis]) / np.sqrt(2)


def parity_basis(n: int) -> np.ndarray:
    return np.arange(1 << (n - 1))


def build_parity_block(
    diag: np.ndarray | None,
    dense: np.ndarray | None,
    sector: int,
    tol: float = FLIP_TOL,
) -> ParityBlock:
    """Project ``diag + dense`` onto the ``sector`` eigenspace of X...X."""
    if sector not in (1, -1):
        raise ValueError("sector must be +1 or -1")
    if diag is None and dense is None:
        raise ValueError("need at least one operator part")
    dim = len(diag) if diag is not None else dense.shape[0]
    n = dim.bit_length() - 1
    if n < 1 or 1 << n != dim:
        raise DimensionMismatchError("parity blocks need a 2**n dimensional operator, n >= 1")
    if diag is not None and dense is not None and dense.shape != (dim, dim):
        raise DimensionMismatchError("diagonal and dense parts disagree in dimension")
    if flip_asymmetry(diag, dense) > tol:
        raise NotFlipSymmetricError("operator is not flip-symmetric")
    reps = parity_basis(n)
    partners = dim - 1 - reps
    if dense is not None:
        block = dense[np.ix_(reps, reps)] + sector * dense[np.ix_(reps, partners)]
    else:
        block = np.zeros((len(reps), len(reps)))
    if diag is not None:
        block = block + np.diag(diag[reps])
    return ParityBlock(sector=sector, basis=reps, matrix=block)
