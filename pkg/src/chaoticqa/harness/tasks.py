"""Top-level (picklable) work units executed by the batch runner.

Every task takes plain JSON-like parameters, rebuilds its inputs from them
and returns a JSON-like result, so tasks run identically in-process or in a
worker process.
"""

from __future__ import annotations

import numpy as np

from .. import analysis
from ..drivers import DriverSpec
from ..dynamics import IntegratorConfig, population_sweep, evolve
from ..errors import IntegrationError
from ..problems import ClassicalSpectrum, WeightedGraph, labs_energies, maxcut_energies, toy_classical
from ..rng import SeedStream, derive_seed
from ..schedules import ScheduleSpec


def classical_from_ref(ref: dict) -> ClassicalSpectrum:
    kind = ref["kind"]
    if kind == "maxcut":
        return maxcut_energies(WeightedGraph.from_dict(ref["graph"]))
    if kind == "labs":
        return labs_energies(int(ref["n"]))
    if kind == "toy":
        return toy_classical()
    raise ValueError(f"unknown problem reference {kind!r}")


def schedule_from(ref: dict, kind: str, driver: dict | None) -> ScheduleSpec:
    return ScheduleSpec(kind, classical_from_ref(ref), DriverSpec.from_dict(driver) if driver else None)


def integrator_for(spec: ScheduleSpec, integrator: dict, parity: bool) -> IntegratorConfig:
    cfg = IntegratorConfig.from_dict(integrator)
    if parity and cfg.sector is None and spec.kind == "TF" and spec.n > 1 and spec.flip_symmetric:
        # TF anneals start in |+...+>, which lies in the even sector
        cfg = IntegratorConfig.from_dict({**cfg.to_dict(), "sector": 1})
    return cfg


def task_gap(ref: dict, schedule: str, driver: dict | None, gap: dict, level_pair=None) -> dict:
    spec = schedule_from(ref, schedule, driver)
    rep = analysis.gap_scan(
        spec,
        level_pair=tuple(level_pair) if level_pair else None,
        n_points=int(gap.get("n_points", analysis.DEFAULT_GRID)),
        dense_points=int(gap.get("dense_points", analysis.DENSE_GRID)),
        dense_below=float(gap.get("dense_below", analysis.DENSE_BELOW)),
    )
    return rep.to_dict()


def task_spectrum(ref: dict, schedule: str, driver: dict | None, n_points: int, n_levels: int) -> dict:
    spec = schedule_from(ref, schedule, driver)
    sweep = analysis.instantaneous_spectrum(spec, np.linspace(0.0, 1.0, n_points), n_levels, None)
    return {"s": sweep.s_grid.tolist(), "levels": sweep.levels.tolist()}


def task_sweep(ref: dict, schedule: str, driver: dict | None, T_grid: list, integrator: dict, parity: bool = True) -> dict:
    spec = schedule_from(ref, schedule, driver)
    cfg = integrator_for(spec, integrator, parity)
    results = population_sweep(spec, T_grid, cfg)
    rows = []
    for r in results:
        rows.append({
            "T": r.T,
            "p_gs": r.p_gs,
            "norm_drift": r.norm_drift,
            "status": r.status,
            "n_steps": r.n_steps,
            "wall_time_s": r.wall_time_s,
            "populations": [[e, p] for e, p in r.population_by_level.items()],
            "error": r.error,
        })
    ok = [r for r in results if r.ok]
    bump = analysis.detect_diabatic_bump(ok) if len(ok) >= 3 else None
    return {"n": spec.n, "method": cfg.method, "sector": cfg.sector, "runs": rows,
            "bump": list(bump) if bump else None}


def task_tstar(ref: dict, schedule: str, driver: dict | None, integrator: dict, tstar: dict,
               window: list, parity: bool = True) -> dict:
    spec = schedule_from(ref, schedule, driver)
    cfg = integrator_for(spec, integrator, parity)
    rep = analysis.find_t_star(
        spec,
        p_target=float(tstar["p_target"]),
        window=(float(window[0]), float(window[1])),
        cfg=cfg,
        points_per_decade=int(tstar["points_per_decade"]),
        rel_precision=float(tstar["rel_precision"]),
        stop_after=tstar.get("stop_after"),
    )
    return rep.to_dict()


def sample_bitstring(psi: np.ndarray, stream: SeedStream) -> int:
    cdf = np.cumsum(np.abs(psi) ** 2)
    u = float(stream.uniform(1)[0]) * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))


def task_cyclic(ref: dict, instance_id: str, schedule: str, q: int, T: float, rounds: int, seed: int,
                integrator: dict) -> dict:
    """Repeated anneals with freshly drawn bSYK drivers; keeps the best measured bit string."""
    classical = classical_from_ref(ref)
    best_e, best_z, hit = None, None, None
    history = []
    for r in range(rounds):
        drv = DriverSpec("bsyk", q=q, seed=derive_seed(seed, instance_id, r))
        spec = ScheduleSpec(schedule, classical, drv, T)
        try:
            res = evolve(spec, IntegratorConfig.from_dict(integrator))
        except IntegrationError:
            history.append(None)
            continue
        z = sample_bitstring(res.final_state, SeedStream(derive_seed(seed, instance_id, r, "measure")))
        e = float(classical.energies[z])
        history.append(e)
        if best_e is None or e < best_e:
            best_e, best_z = e, z
        if hit is None and e <= classical.ground_energy + 1e-12 * max(1.0, abs(classical.ground_energy)):
            hit = r
    return {
        "rounds": rounds,
        "best_energy": best_e,
        "best_bitstring": None if best_z is None else format(best_z, f"0{classical.n}b")[::-1],
        "ground_energy": classical.ground_energy,
        "hit_round": hit,
        "energies": history,
    }
