"""Experiment configuration: JSON schema, validation and canonical fingerprint.

A config file looks like::

    {
      "problem": {"kind": "maxcut", "n": 8, "d": 3, "n_graphs": 200, "seed": 7},
      "schedule": "S2",
      "drivers": [{"kind": "bsyk", "q": 4, "n_seeds": 12, "seed": 11}],
      "T": {"min": 10, "max": 20000, "points_per_decade": 12},
      "integrator": {"method": "magnus4", "rtol": 1e-8, "atol": 1e-8, "max_step": 1.0},
      "gap": {"threshold": 0.01, "n_points": 201},
      "tstar": {"p_target": 0.9, "cap": 20000}
    }

``problem.kind`` is ``maxcut``, ``labs`` (with ``sizes``) or ``toy``. Driver
entries either list ``seeds`` explicitly or give ``n_seeds`` and a base
``seed`` from which the seeds are derived; the resolved list is written to
the manifest so persisted runs never depend on entropy.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..drivers import DriverSpec
from ..dynamics import IntegratorConfig
from ..errors import ConfigError, ResourceLimitError
from ..operators import MAX_N
from ..rng import derive_seed
from ..schedules import KINDS

PROBLEM_KINDS = ("maxcut", "labs", "toy")

DEFAULTS = {
    "schedule": "S2",
    "drivers": [],
    "T": {"min": 10.0, "max": 2e4, "points_per_decade": 12},
    "integrator": {},
    "gap": {"threshold": 1e-2, "n_points": 201, "dense_points": 1001, "dense_below": 5e-2, "bins_per_decade": 5},
    "anneal": {"instances": "hard"},
    "tstar": {
        "p_target": 0.9,
        "cap": 2e4,
        "rel_precision": 0.05,
        "points_per_decade": 12,
        "stop_after": None,
        "max_instances": None,
        "cyclic": None,
    },
    "labs": {"T_grid": [1.0, 3.0, 10.0, 30.0]},
    "toy": {"T_grid": [1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0], "n_bsyk2": 4, "seed": 1, "n_points": 401},
    "max_n": MAX_N,
    "jobs": 1,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class DriverEntry:
    """One driver family of a config with its resolved seed list."""

    kind: str
    q: int | None
    seeds: tuple[int, ...]
    k: int | None = None
    subseed: int | None = None

    def specs(self) -> list[DriverSpec]:
        if self.kind in ("toy_xx_plus", "toy_xx_minus"):
            return [DriverSpec(self.kind)]
        if self.kind == "toy_bsyk2":
            return [DriverSpec(self.kind, seed=s) for s in self.seeds]
        if self.kind == "bsyk_sparse":
            return [DriverSpec(self.kind, q=self.q, seed=s, k=self.k, subseed=self.subseed) for s in self.seeds]
        return [DriverSpec(self.kind, q=self.q, seed=s) for s in self.seeds]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "q": self.q, "seeds": list(self.seeds)}
        if self.k is not None:
            d["k"] = self.k
            d["subseed"] = self.subseed
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    schedule: str
    drivers: tuple[DriverEntry, ...]
    T: dict
    integrator: IntegratorConfig
    gap: dict
    anneal: dict
    tstar: dict
    labs: dict
    toy: dict
    max_n: int = MAX_N
    jobs: int = 1
    out: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def kind(self) -> str:
        return self.problem["kind"]

    @property
    def largest_n(self) -> int:
        """Largest spin count the config will simulate."""
        if self.kind == "maxcut":
            return self.problem["n"]
        if self.kind == "labs":
            return max(self.problem["sizes"])
        return 2

    def T_grid(self) -> list[float]:
        t = self.T
        if "grid" in t:
            return [float(x) for x in t["grid"]]
        lo, hi, ppd = float(t["min"]), float(t["max"]), float(t["points_per_decade"])
        n = max(2, int(math.ceil(ppd * math.log10(hi / lo) - 1e-9)) + 1)
        return [float(x) for x in np.geomspace(lo, hi, n)]

    @property
    def window(self) -> tuple[float, float]:
        grid = self.T_grid()
        return grid[0], grid[-1]

    def driver_specs(self) -> list[DriverSpec]:
        return [s for entry in self.drivers for s in entry.specs()]

    def graph_seeds(self) -> list[int]:
        p = self.problem
        if "graph_seeds" in p:
            return [int(s) for s in p["graph_seeds"]]
        return [derive_seed(p["seed"], "graph", i) for i in range(p["n_graphs"])]

    def canonical(self) -> dict:
        """Resolved, entropy-free form written next to the results."""
        return {
            "problem": self.problem,
            "schedule": self.schedule,
            "drivers": [d.to_dict() for d in self.drivers],
            "T": self.T,
            "integrator": self.integrator.to_dict(),
            "gap": self.gap,
            "anneal": self.anneal,
            "tstar": self.tstar,
            "labs": self.labs,
            "toy": self.toy,
            "max_n": self.max_n,
        }

    def fingerprint(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _int(v, name) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    return int(v)


def _resolve_driver(d: dict, idx: int) -> DriverEntry:
    _require(isinstance(d, dict) and "kind" in d, f"drivers[{idx}] needs a 'kind'")
    kind = d["kind"]
    _require(kind in ("bsyk", "bsyk_sparse", "toy_xx_plus", "toy_xx_minus", "toy_bsyk2"),
             f"drivers[{idx}]: unsupported driver kind {kind!r}")
    q = d.get("q")
    if kind in ("bsyk", "bsyk_sparse"):
        _require(q is not None, f"drivers[{idx}]: '{kind}' needs q")
        q = _int(q, f"drivers[{idx}].q")
    if kind in ("toy_xx_plus", "toy_xx_minus"):
        return DriverEntry(kind, None, ())
    if "seeds" in d:
        seeds = tuple(_int(s, f"drivers[{idx}].seeds") for s in d["seeds"])
    else:
        _require("n_seeds" in d and "seed" in d, f"drivers[{idx}] needs 'seeds' or both 'n_seeds' and 'seed'")
        base, count = _int(d["seed"], "seed"), _int(d["n_seeds"], "n_seeds")
        seeds = tuple(derive_seed(base, kind, q or 0, j) for j in range(count))
    _require(len(seeds) > 0, f"drivers[{idx}] resolves to no seeds")
    k = subseed = None
    if kind == "bsyk_sparse":
        _require("k" in d and "subseed" in d, f"drivers[{idx}]: sparse driver needs k and subseed")
        k, subseed = _int(d["k"], "k"), _int(d["subseed"], "subseed")
    return DriverEntry(kind, q if kind != "toy_bsyk2" else None, seeds, k, subseed)


def build_config(data: dict, out: str | None = None, jobs: int | None = None, seed: int | None = None) -> ExperimentConfig:
    """Validate a config dict, apply defaults and CLI overrides."""
    _require(isinstance(data, dict), "config must be a JSON object")
    unknown = set(data) - set(DEFAULTS) - {"problem", "out", "name"}
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    _require("problem" in data, "config needs a 'problem' section")
    merged = _merge(DEFAULTS, data)
    p = dict(merged["problem"])
    kind = p.get("kind")
    _require(kind in PROBLEM_KINDS, f"problem.kind must be one of {PROBLEM_KINDS}, got {kind!r}")
    max_n = _int(merged["max_n"], "max_n")
    if seed is not None:
        p["seed"] = int(seed)
    if kind == "maxcut":
        for key in ("n", "d", "seed"):
            _require(key in p, f"maxcut problem needs '{key}'")
            p[key] = _int(p[key], f"problem.{key}")
        if "graph_seeds" in p:
            p["graph_seeds"] = [_int(s, "graph_seeds") for s in p["graph_seeds"]]
            p["n_graphs"] = len(p["graph_seeds"])
        else:
            _require("n_graphs" in p, "maxcut problem needs 'n_graphs' or 'graph_seeds'")
            p["n_graphs"] = _int(p["n_graphs"], "problem.n_graphs")
        _require(p["n_graphs"] >= 1, "n_graphs must be >= 1")
        _require(1 <= p["d"] < p["n"] and (p["n"] * p["d"]) % 2 == 0, "need d < n and n*d even")
    elif kind == "labs":
        _require("sizes" in p and len(p["sizes"]) >= 1, "labs problem needs 'sizes'")
        p["sizes"] = sorted(_int(n, "sizes") for n in p["sizes"])
        _require(len(set(p["sizes"])) == len(p["sizes"]), "labs sizes must be distinct")
        _require(all(n >= 2 for n in p["sizes"]), "labs sizes must be >= 2")
    largest = p["n"] if kind == "maxcut" else max(p["sizes"]) if kind == "labs" else 2
    if largest > max_n:
        raise ResourceLimitError(f"problem size n={largest} exceeds max_n={max_n}")
    schedule = merged["schedule"]
    _require(schedule in KINDS, f"schedule must be one of {KINDS}")
    drivers = tuple(_resolve_driver(d, i) for i, d in enumerate(merged["drivers"]))
    if kind != "toy" and schedule in ("S1", "S2"):
        _require(len(drivers) > 0, f"schedule {schedule} needs at least one driver entry")
    t = merged["T"]
    if "grid" in t:
        grid = [float(x) for x in t["grid"]]
        _require(len(grid) >= 1 and all(x > 0 for x in grid), "T.grid must hold positive values")
        _require(all(b > a for a, b in zip(grid, grid[1:])), "T.grid must be strictly increasing")
        t = {"grid": grid}
    else:
        _require(0 < float(t["min"]) < float(t["max"]), "T window needs 0 < min < max")
    try:
        integrator = IntegratorConfig.from_dict(merged["integrator"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from exc
    jobs = int(jobs if jobs is not None else merged["jobs"])
    _require(jobs >= 1, "jobs must be >= 1")
    return ExperimentConfig(
        problem=p,
        schedule=schedule,
        drivers=drivers,
        T=t,
        integrator=integrator,
        gap=merged["gap"],
        anneal=merged["anneal"],
        tstar=merged["tstar"],
        labs=merged["labs"],
        toy=merged["toy"],
        max_n=max_n,
        jobs=jobs,
        out=out or merged.get("out"),
        raw=data,
    )


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return build_config(data, **overrides)
