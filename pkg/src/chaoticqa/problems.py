"""Classical optimization Hamiltonians: weighted MaxCut on regular graphs and LABS."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, ResourceLimitError
from .operators import MAX_N
from .rng import SeedStream, derive_seed

TIE_TOL = 1e-12


def spin_table(n: int) -> np.ndarray:
    """``(2**n, n)`` array of spins: +1 for bit 0 (up), -1 for bit 1 (down)."""
    z = np.arange(1 << n)
    bits = (z[:, None] >> np.arange(n)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    d: int
    seed: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        edges = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        object.__setattr__(self, "edges", edges)
        degree = np.zeros(self.n, dtype=int)
        seen = set()
        for i, j, w in edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < n")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weight {w} outside [0, 1]")
            seen.add((i, j))
            degree[i] += 1
            degree[j] += 1
        if np.any(degree != self.d):
            raise ValueError("graph is not d-regular")

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "seed": self.seed,
            "edges": [[i, j, w] for i, j, w in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        return cls(
            n=int(data["n"]),
            d=int(data["d"]),
            seed=int(data["seed"]),
            edges=tuple(tuple(e) for e in data["edges"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))


def random_regular_graph(n: int, d: int, seed: int, max_attempts: int = 1000) -> WeightedGraph:
    """Random simple ``d``-regular graph with i.i.d. uniform [0, 1] edge weights.

    Pairing (configuration) model: ``n*d`` stubs are shuffled and paired;
    pairings with self-loops or repeated edges are rejected and redrawn
    from the sub-seed ``derive_seed(seed, "pairing", attempt)``. Weights are
    drawn from the accepted attempt's stream in sorted-edge order.
    """
    if n < 1 or d < 1 or d >= n:
        raise ValueError(f"need 1 <= d < n, got n={n}, d={d}")
    if (n * d) % 2:
        raise ValueError(f"n*d must be even, got n={n}, d={d}")
    for attempt in range(max_attempts):
        stream = SeedStream(derive_seed(seed, "pairing", attempt))
        stubs = [v for v in range(n) for _ in range(d)]
        stream.shuffle(stubs)
        pairs = set()
        ok = True
        for a, b in zip(stubs[::2], stubs[1::2]):
            e = (min(a, b), max(a, b))
            if a == b or e in pairs:
                ok = False
                break
            pairs.add(e)
        if ok:
            edges = sorted(pairs)
            weights = stream.uniform(len(edges))
            return WeightedGraph(
                n=n,
                d=d,
                seed=seed,
                edges=tuple((i, j, float(w)) for (i, j), w in zip(edges, weights)),
            )
    raise RuntimeError(f"no simple {d}-regular pairing found after {max_attempts} attempts")


@dataclass(frozen=True, eq=False)
class ClassicalSpectrum:
    """Energies of every bit string plus the ground set."""

    energies: np.ndarray
    ground_energy: float = field(init=False)
    ground_set: np.ndarray = field(init=False)
    tie_tol: float = TIE_TOL

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        dim = len(e)
        if dim == 0 or dim & (dim - 1):
            raise ValueError("energies must have length 2**n")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        e.flags.writeable = False
        e0 = float(e.min())
        gs = np.flatnonzero(e - e0 <= self.tie_tol * max(1.0, abs(e0)))
        gs.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "ground_energy", e0)
        object.__setattr__(self, "ground_set", gs)

    @property
    def n(self) -> int:
        return len(self.energies).bit_length() - 1

    @property
    def degeneracy(self) -> int:
        return len(self.ground_set)

    def levels(self) -> np.ndarray:
        """Distinct energy levels (ascending), merged within the tie tolerance."""
        e = np.sort(self.energies)
        keep = np.ones(len(e), dtype=bool)
        keep[1:] = np.diff(e) > self.tie_tol * np.maximum(1.0, np.abs(e[1:]))
        return e[keep]

    def level_index(self) -> np.ndarray:
        """Index into :meth:`levels` for each bit string."""
        lv = self.levels()
        idx = np.searchsorted(lv, self.energies - self.tie_tol * np.maximum(1.0, np.abs(self.energies)))
        return np.minimum(idx, len(lv) - 1)

    def is_flip_symmetric(self) -> bool:
        return bool(np.array_equal(self.energies, self.energies[::-1]))


def maxcut_energies(g: WeightedGraph) -> ClassicalSpectrum:
    """``E(z) = sum_(i,j) w_ij s_i s_j``."""
    spins = spin_table(g.n)
    e = np.zeros(1 << g.n)
    for i, j, w in g.edges:
        e += w * (spins[:, i] * spins[:, j])
    return ClassicalSpectrum(e)


@lru_cache(maxsize=None)
def _labs_cached(n: int) -> ClassicalSpectrum:
    spins = spin_table(n).astype(np.int64)
    e = np.zeros(1 << n, dtype=np.int64)
    for j in range(1, n):
        c = np.sum(spins[:, : n - j] * spins[:, j:], axis=1)
        e += c * c
    return ClassicalSpectrum(e.astype(float))


def labs_energies(n: int, max_n: int = MAX_N) -> ClassicalSpectrum:
    """Sidelobe energy ``sum_j C(j)**2`` with ``C(j) = sum_i s_i s_(i+j)``."""
    if n < 2:
        raise ValueError("LABS needs n >= 2")
    if n > max_n:
        raise ResourceLimitError(f"n={n} exceeds the enumeration limit {max_n}")
    return _labs_cached(n)


def ground_population(psi: np.ndarray, spec: ClassicalSpectrum) -> float:
    """Total probability on the degenerate ground set."""
    if len(psi) != len(spec.energies):
        raise DimensionMismatchError(f"state has {len(psi)} amplitudes, spectrum {len(spec.energies)}")
    return float(np.sum(np.abs(psi[spec.ground_set]) ** 2))


def level_populations(psi: np.ndarray, spec: ClassicalSpectrum) -> dict[float, float]:
    """Probability on each distinct classical energy level."""
    if len(psi) != len(spec.energies):
        raise DimensionMismatchError(f"state has {len(psi)} amplitudes, spectrum {len(spec.energies)}")
    lv = spec.levels()
    pops = np.bincount(spec.level_index(), weights=np.abs(psi) ** 2, minlength=len(lv))
    return {float(e): float(p) for e, p in zip(lv, pops)}


def toy_classical(big: float = 1e3, small: float = 1e-1) -> ClassicalSpectrum:
    """Two-spin landscape ``-big s1 s2 + small (s1 + s2)``; ground state is down-down."""
    s = spin_table(2).astype(float)
    return ClassicalSpectrum(-big * s[:, 0] * s[:, 1] + small * (s[:, 0] + s[:, 1]))
