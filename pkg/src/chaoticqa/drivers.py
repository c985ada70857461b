"""Driver Hamiltonians: transverse field, bosonic SYK_q (dense or sparse) and two-spin toy drivers.

Sign convention: the transverse-field driver is ``-sum_i sigma^x_i`` so that
the uniform superposition ``|+...+>`` is its ground state (energy ``-n``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .operators import PauliString, assemble_dense, check_size
from .rng import SeedStream, derive_seed


def transverse_field(n: int) -> np.ndarray:
    """Dense ``-sum_i sigma^x_i`` (real symmetric)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    check_size(n, copies=1)
    dim = 1 << n
    z = np.arange(dim)
    h = np.zeros((dim, dim))
    for i in range(n):
        h[z ^ (1 << i), z] = -1.0
    return h


def bsyk_variance(n: int, q: int) -> float:
    """Coupling variance ``(q-1)! / n**(q-1)``."""
    return math.factorial(q - 1) / n ** (q - 1)


def bsyk_term_count(n: int, q: int) -> int:
    return math.comb(n, q) * 3**q


@dataclass(frozen=True, eq=False)
class BSYKInstance:
    """One realization of the bosonic SYK_q driver.

    Terms are stored column-wise: ``sites[k]`` (q site indices), ``axes[k]``
    (q-letter string) and ``coeffs[k]``. The dense ordering is lexicographic
    in the site subset, then in the axis tuple, which is also the order in
    which the Gaussian couplings are drawn.
    """

    n: int
    q: int
    seed: int
    sites: np.ndarray
    axes: tuple[str, ...]
    coeffs: np.ndarray
    sparse_k: int | None = None
    subseed: int | None = None
    indices: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    @property
    def terms(self) -> list[PauliString]:
        return [
            PauliString(tuple(s), a, float(c))
            for s, a, c in zip(self.sites, self.axes, self.coeffs)
        ]

    @cached_property
    def matrix(self) -> np.ndarray:
        m = assemble_dense(self.terms, self.n)
        m.flags.writeable = False
        return m

    def to_dict(self, materialized: bool = True) -> dict:
        data = {
            "n": self.n,
            "q": self.q,
            "seed": self.seed,
            "sparse_k": self.sparse_k,
            "subseed": self.subseed,
            "materialized": materialized,
        }
        if materialized:
            data["terms"] = [
                {"sites": [int(i) for i in s], "axes": a, "coeff": float(c)}
                for s, a, c in zip(self.sites, self.axes, self.coeffs)
            ]
        return data

    def to_json(self, materialized: bool = True) -> str:
        return json.dumps(self.to_dict(materialized), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "BSYKInstance":
        n, q, seed = int(data["n"]), int(data["q"]), int(data["seed"])
        if not data.get("materialized", "terms" in data):
            inst = sample_bsyk(n, q, seed)
            if data.get("sparse_k") is not None:
                inst = sparsify_bsyk(inst, int(data["sparse_k"]), int(data["subseed"]))
            return inst
        terms = data["terms"]
        return cls(
            n=n,
            q=q,
            seed=seed,
            sites=np.array([t["sites"] for t in terms], dtype=np.int64).reshape(len(terms), q),
            axes=tuple(t["axes"] for t in terms),
            coeffs=np.array([t["coeff"] for t in terms], dtype=float),
            sparse_k=data.get("sparse_k"),
            subseed=data.get("subseed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "BSYKInstance":
        return cls.from_dict(json.loads(text))


def sample_bsyk(n: int, q: int, seed: int) -> BSYKInstance:
    """Draw all ``C(n, q) * 3**q`` Gaussian couplings of a bSYK_q instance."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if q > n:
        raise ValueError(f"q={q} exceeds n={n}")
    subsets = list(itertools.combinations(range(n), q))
    axis_tuples = ["".join(a) for a in itertools.product("xyz", repeat=q)]
    sites = np.repeat(np.array(subsets, dtype=np.int64).reshape(len(subsets), q), len(axis_tuples), axis=0)
    axes = tuple(axis_tuples) * len(subsets)
    coeffs = SeedStream(seed).normal(len(axes)) * math.sqrt(bsyk_variance(n, q))
    return BSYKInstance(n=n, q=q, seed=seed, sites=sites, axes=axes, coeffs=coeffs)


def sparsify_bsyk(instance: BSYKInstance, k: int, subseed: int) -> BSYKInstance:
    """Keep a uniform random subset of ``k * n`` terms; coefficients unchanged."""
    keep = k * instance.n
    if k < 0 or keep > instance.n_terms:
        raise ValueError(f"k*n = {keep} exceeds the {instance.n_terms} available terms")
    stream = SeedStream(derive_seed(instance.seed, "sparse", subseed))
    idx = stream.sample_without_replacement(instance.n_terms, keep)
    return BSYKInstance(
        n=instance.n,
        q=instance.q,
        seed=instance.seed,
        sites=instance.sites[idx],
        axes=tuple(instance.axes[i] for i in idx),
        coeffs=instance.coeffs[idx],
        sparse_k=k,
        subseed=subseed,
        indices=idx,
    )


_SIGMA_XX = np.array(
    [[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float
)


def toy_drivers(variant: str, seed: int | None = None) -> np.ndarray:
    """Two-spin drivers: ``xx_plus`` = +XX, ``xx_minus`` = -XX, ``bsyk2`` = seeded bSYK_2 on two spins."""
    if variant == "xx_plus":
        return _SIGMA_XX.copy()
    if variant == "xx_minus":
        return -_SIGMA_XX
    if variant == "bsyk2":
        if seed is None:
            raise ValueError("bsyk2 needs a seed")
        return np.array(sample_bsyk(2, 2, seed).matrix)
    raise ValueError(f"unknown toy driver {variant!r}")


DRIVER_KINDS = ("transverse_field", "bsyk", "bsyk_sparse", "toy_xx_plus", "toy_xx_minus", "toy_bsyk2")

_REQUIRED = {
    "transverse_field": set(),
    "bsyk": {"q", "seed"},
    "bsyk_sparse": {"q", "seed", "k", "subseed"},
    "toy_xx_plus": set(),
    "toy_xx_minus": set(),
    "toy_bsyk2": {"seed"},
}


@dataclass(frozen=True)
class DriverSpec:
    kind: str
    q: int | None = None
    seed: int | None = None
    k: int | None = None
    subseed: int | None = None

    def __post_init__(self):
        if self.kind not in _REQUIRED:
            raise ValueError(f"unknown driver kind {self.kind!r}")
        given = {name for name in ("q", "seed", "k", "subseed") if getattr(self, name) is not None}
        if given != _REQUIRED[self.kind]:
            raise ValueError(
                f"driver {self.kind!r} takes parameters {sorted(_REQUIRED[self.kind])}, got {sorted(given)}"
            )

    @property
    def is_toy(self) -> bool:
        return self.kind.startswith("toy_")

    def instance(self, n: int) -> BSYKInstance | None:
        if self.kind == "bsyk":
            return sample_bsyk(n, self.q, self.seed)
        if self.kind == "bsyk_sparse":
            return sparsify_bsyk(sample_bsyk(n, self.q, self.seed), self.k, self.subseed)
        if self.kind == "toy_bsyk2":
            return sample_bsyk(2, 2, self.seed)
        return None

    def build(self, n: int) -> np.ndarray:
        if self.kind == "transverse_field":
            return transverse_field(n)
        if self.is_toy and n != 2:
            raise ValueError("toy drivers act on exactly two spins")
        if self.kind == "toy_xx_plus":
            return toy_drivers("xx_plus")
        if self.kind == "toy_xx_minus":
            return toy_drivers("xx_minus")
        return np.array(self.instance(n).matrix)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "DriverSpec":
        return cls(**{k: data.get(k) for k in ("kind", "q", "seed", "k", "subseed")})
