"""Annealing schedules H(s) with the linear ramp s = t / T.

==========  =====================================================
TF          s H_C + (1 - s) H_X
S1          s H_C + (1 - s) H_D            (start in ground state of H_D)
S2          s H_C + (1 - s) H_X + 4 s (1 - s) H_D
TOY_S2      as S2 on two spins, H_D a toy driver (+XX, -XX, bSYK_2)
TOY_S1      as S1 on two spins, starting in (|uu> -/+ |dd>)/sqrt(2)
==========  =====================================================

``H_X = -sum_i sigma^x_i`` throughout.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import operators
from .drivers import DriverSpec, transverse_field
from .errors import DegenerateGroundStateError
from .problems import ClassicalSpectrum

KINDS = ("TF", "S1", "S2", "TOY_S1", "TOY_S2")
DEGENERACY_TOL = 1e-9
TIE_BREAKS = (None, "lowest", "project")


def schedule_weights(kind: str, s: float) -> tuple[float, list[float]]:
    """Classical weight and the weights of the non-classical pieces, in piece order."""
    if kind == "TF":
        return s, [1.0 - s]
    if kind in ("S1", "TOY_S1"):
        return s, [1.0 - s]
    if kind in ("S2", "TOY_S2"):
        return s, [1.0 - s, 4.0 * s * (1.0 - s)]
    raise ValueError(f"unknown schedule kind {kind!r}")


@dataclass(frozen=True, eq=False)
class ScheduleSpec:
    kind: str
    classical: ClassicalSpectrum
    driver: DriverSpec | None = None
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.T > 0:
            raise ValueError("anneal time T must be positive")
        if self.kind == "TF":
            if self.driver is not None:
                raise ValueError("TF schedule takes no extra driver")
        else:
            if self.driver is None:
                raise ValueError(f"{self.kind} needs a driver")
            if self.driver.kind == "transverse_field":
                raise ValueError(f"{self.kind} needs a non-TF driver; use kind='TF'")
            toy = self.kind.startswith("TOY_")
            if toy != self.driver.is_toy:
                raise ValueError(f"{self.kind} is incompatible with driver {self.driver.kind!r}")
            if toy and self.n != 2:
                raise ValueError("toy schedules act on two spins")

    @property
    def n(self) -> int:
        return self.classical.n

    @property
    def dim(self) -> int:
        return 1 << self.n

    def with_T(self, T: float) -> "ScheduleSpec":
        new = ScheduleSpec(self.kind, self.classical, self.driver, T)
        # share assembled matrices between anneal times
        for name in ("pieces", "piece_bounds", "_parity_cache"):
            if name in self.__dict__:
                new.__dict__[name] = self.__dict__[name]
        return new

    @cached_property
    def pieces(self) -> tuple[np.ndarray, ...]:
        """Static non-classical matrices, in the order of :func:`schedule_weights`."""
        out = []
        if self.kind in ("TF", "S2", "TOY_S2"):
            out.append(transverse_field(self.n))
        if self.driver is not None:
            out.append(self.driver.build(self.n))
        for m in out:
            m.flags.writeable = False
        return tuple(out)

    @cached_property
    def piece_bounds(self) -> tuple[tuple[float, float], ...]:
        """(min, max) eigenvalue of the classical part followed by each piece."""
        e = self.classical.energies
        bounds = [(float(e.min()), float(e.max()))]
        for m in self.pieces:
            ev = np.linalg.eigvalsh(m)
            bounds.append((float(ev[0]), float(ev[-1])))
        return tuple(bounds)

    @cached_property
    def _parity_cache(self) -> dict:
        return {}

    def weights(self, s: float) -> tuple[float, list[float]]:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s={s} outside [0, 1]")
        return schedule_weights(self.kind, s)

    def matrix(self, s: float) -> np.ndarray:
        wc, ws = self.weights(s)
        h = np.diag(wc * self.classical.energies).astype(np.result_type(*self.pieces, float))
        for w, m in zip(ws, self.pieces):
            h += w * m
        return h

    def apply(self, s: float, psi: np.ndarray) -> np.ndarray:
        wc, ws = self.weights(s)
        return operators.apply(wc * self.classical.energies, list(zip(ws, self.pieces)), psi)

    def spectral_bounds(self, s: float) -> tuple[float, float]:
        """Weyl bounds on the spectrum of H(s)."""
        wc, ws = self.weights(s)
        lo = hi = 0.0
        for w, (a, b) in zip([wc, *ws], self.piece_bounds):
            lo += min(w * a, w * b)
            hi += max(w * a, w * b)
        return lo, hi

    @property
    def flip_symmetric(self) -> bool:
        tol = operators.FLIP_TOL
        if operators.flip_asymmetry(self.classical.energies, None) > tol:
            return False
        return all(operators.flip_asymmetry(None, m) <= tol for m in self.pieces)

    def parity_pieces(self, sector: int) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
        """Sector blocks of the classical diagonal and of each piece.

        Blocks are linear in the operator, so H(s) restricted to a sector is
        the weighted sum of these with :meth:`weights`.
        """
        cache = self._parity_cache
        if sector not in cache:
            diag = self.classical.energies
            cblock = operators.build_parity_block(diag, None, sector)
            reps = cblock.basis
            blocks = tuple(
                operators.build_parity_block(None, m, sector).matrix for m in self.pieces
            )
            cache[sector] = (np.asarray(diag[reps], dtype=float), blocks)
        return cache[sector]

    def block_matrix(self, s: float, sector: int) -> np.ndarray:
        wc, ws = self.weights(s)
        cdiag, blocks = self.parity_pieces(sector)
        h = np.diag(wc * cdiag).astype(np.result_type(*blocks, float))
        for w, b in zip(ws, blocks):
            h += w * b
        return h

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(
            json.dumps(
                {"kind": self.kind, "T": self.T, "driver": self.driver.to_dict() if self.driver else None},
                sort_keys=True,
            ).encode()
        )
        h.update(np.ascontiguousarray(self.classical.energies).tobytes())
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "schedule": self.kind,
            "T": self.T,
            "driver": self.driver.to_dict() if self.driver else None,
        }


def hamiltonian_at(spec: ScheduleSpec, s: float):
    """``(classical weight, classical diagonal, [(weight, matrix), ...])`` at ``s``."""
    wc, ws = spec.weights(s)
    return wc, spec.classical.energies, list(zip(ws, spec.pieces))


def plus_state(n: int) -> np.ndarray:
    dim = 1 << n
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def driver_ground_state(spec: ScheduleSpec, tie_tol: float = DEGENERACY_TOL, tie_break: str | None = None):
    """Lowest eigenvector of the S1 driver and its gap ``E1 - E0``.

    A near-degenerate driver ground state raises unless a tie break is given:
    ``'lowest'`` takes the first eigenvector returned by the eigensolver,
    ``'project'`` projects ``|+...+>`` onto the degenerate ground space, which
    does not depend on the basis the eigensolver picks inside that space.
    bSYK drivers with even q on an odd number of spins are always at least
    two-fold degenerate (Kramers pairs under time reversal).
    """
    if tie_break not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    m = spec.pieces[-1]
    vals, vecs = operators.eigensolve(m, n_levels=min(4, m.shape[0]))
    gap = float(vals[1] - vals[0]) if len(vals) > 1 else float("inf")
    if gap >= tie_tol:
        return vecs[:, 0].astype(complex), gap
    if tie_break is None:
        raise DegenerateGroundStateError(
            f"driver ground state is degenerate (gap {gap:.3e}); pass tie_break='lowest' or 'project'"
        )
    if tie_break == "lowest":
        return vecs[:, 0].astype(complex), gap
    k = int(np.sum(vals - vals[0] < tie_tol))
    if k == len(vals) and k < m.shape[0]:
        vals, vecs = operators.eigensolve(m)
        k = int(np.sum(vals - vals[0] < tie_tol))
    ground = vecs[:, :k].astype(complex)
    psi = ground @ (ground.conj().T @ plus_state(spec.n))
    norm = np.linalg.norm(psi)
    if norm < 1e-8:
        raise DegenerateGroundStateError("|+...+> is orthogonal to the degenerate driver ground space")
    return psi / norm, gap


def initial_state(spec: ScheduleSpec, tie_break: str | None = None) -> np.ndarray:
    """Initial state of the anneal.

    TF, S2 and TOY_S2 start in ``|+...+>``; S1 in the numerically computed
    driver ground state; TOY_S1 in ``(|uu> + |dd>)/sqrt(2)`` for the -XX
    driver and ``(|uu> - |dd>)/sqrt(2)`` for +XX (a ground state of each
    degenerate driver).
    """
    if spec.kind in ("TF", "S2", "TOY_S2"):
        return plus_state(spec.n)
    if spec.kind == "TOY_S1" and spec.driver.kind in ("toy_xx_plus", "toy_xx_minus"):
        sign = 1.0 if spec.driver.kind == "toy_xx_minus" else -1.0
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1 / np.sqrt(2)  # up-up
        psi[3] = sign / np.sqrt(2)  # down-down
        return psi
    return driver_ground_state(spec, tie_break=tie_break)[0]
