"""Subcommand implementations: gen, gap-scan, anneal, tstar, labs-scale, toy, report.

Output layout below ``out``::

    config.json           resolved config (seeds explicit)
    manifest.json         instance list with seeds and files
    instances/            graph and bSYK JSON instances
    tasks/<stage>/        one JSON file per finished task (resume state)
    *.csv                 merged tables
    plots.json            declarative plot manifest
    runs/<command>.json   wall-clock and failure log of the last invocation
"""

from __future__ import annotations

import logging
import math
import time
from pathlib import Path

import numpy as np

from .. import __version__, analysis
from ..analysis import GapReport, TStarReport
from ..drivers import DriverSpec
from ..dynamics import LONG_ANNEAL
from ..errors import ConfigError
from ..problems import labs_energies, random_regular_graph, toy_classical
from ..rng import derive_seed
from .config import ExperimentConfig
from .runner import BatchOutcome, Task, read_csv, read_json, run_tasks, write_csv, write_json, write_atomic
from . import tasks as T

log = logging.getLogger("chaoticqa")

MATERIALIZE_LIMIT = 20_000

GAP_COLUMNS = ["instance_id", "schedule", "q", "seed", "delta", "s_min", "classical_gap"]
ANNEAL_COLUMNS = ["instance_id", "schedule", "N", "q", "seed", "T", "p_gs", "norm_drift", "wall_time_s", "status"]
TSTAR_COLUMNS = ["instance_id", "driver", "seed", "t_star", "status"]
SCALING_COLUMNS = ["driver", "N", "T", "p_gs", "tts"]


class Outcome:
    """Collects partial failures across the stages of one command."""

    def __init__(self, command: str):
        self.command = command
        self.failures: dict[str, str] = {}
        self.start = time.perf_counter()
        self.ran = 0
        self.skipped = 0

    def add(self, batch: BatchOutcome, stage: str) -> BatchOutcome:
        for k, v in batch.failures.items():
            self.failures[f"{stage}/{k}"] = v
        self.ran += batch.ran
        self.skipped += batch.skipped
        return batch

    @property
    def exit_code(self) -> int:
        return 3 if self.failures else 0

    def finish(self, out: Path) -> int:
        write_json(out / "runs" / f"{self.command}.json", {
            "command": self.command,
            "version": __version__,
            "wall_time_s": round(time.perf_counter() - self.start, 3),
            "tasks_run": self.ran,
            "tasks_skipped": self.skipped,
            "failures": self.failures,
        })
        write_plot_manifest(out)
        return self.exit_code


def _driver_label(d: DriverSpec | None) -> str:
    if d is None:
        return "TF"
    if d.kind in ("bsyk", "bsyk_sparse"):
        return f"bSYK{d.q}" + ("_sparse" if d.kind == "bsyk_sparse" else "")
    return d.kind


def _driver_id(d: DriverSpec | None) -> str:
    if d is None:
        return "tf"
    parts = [d.kind]
    if d.q is not None:
        parts.append(f"q{d.q}")
    if d.seed is not None:
        parts.append(f"s{d.seed}")
    if d.k is not None:
        parts.append(f"k{d.k}-{d.subseed}")
    return "_".join(parts)


def _write_config(cfg: ExperimentConfig, out: Path) -> None:
    write_json(out / "config.json", {**cfg.canonical(), "fingerprint": cfg.fingerprint()})


# ---------------------------------------------------------------- gen

def cmd_gen(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    outcome = Outcome("gen")
    out.mkdir(parents=True, exist_ok=True)
    _write_config(cfg, out)
    manifest = {"version": __version__, "fingerprint": cfg.fingerprint(), "problem": cfg.problem,
                "instances": [], "drivers": []}
    inst_dir = out / "instances"
    if cfg.kind == "maxcut":
        p = cfg.problem
        for i, seed in enumerate(cfg.graph_seeds()):
            g = random_regular_graph(p["n"], p["d"], seed)
            name = f"g{i:04d}"
            write_atomic(inst_dir / f"{name}.json", g.to_json() + "\n")
            manifest["instances"].append({"id": name, "seed": seed, "file": f"instances/{name}.json"})
        sizes = [p["n"]]
    elif cfg.kind == "labs":
        sizes = cfg.problem["sizes"]
        for n in sizes:
            spec = labs_energies(n, cfg.max_n)
            name = f"labs{n:02d}"
            write_json(inst_dir / f"{name}.json", {
                "n": n, "ground_energy": spec.ground_energy, "degeneracy": spec.degeneracy,
                "ground_set": spec.ground_set.tolist(),
            })
            manifest["instances"].append({"id": name, "n": n, "file": f"instances/{name}.json"})
    else:
        spec = toy_classical()
        write_json(inst_dir / "toy.json", {"n": 2, "energies": spec.energies.tolist()})
        manifest["instances"].append({"id": "toy", "file": "instances/toy.json"})
        sizes = [2]
    for d in cfg.driver_specs():
        for n in sizes:
            inst = d.instance(n)
            if inst is None:
                continue
            name = f"{_driver_id(d)}_n{n}"
            write_atomic(inst_dir / "drivers" / f"{name}.json",
                         inst.to_json(materialized=inst.n_terms <= MATERIALIZE_LIMIT) + "\n")
            manifest["drivers"].append({"id": name, **d.to_dict(), "n": n, "n_terms": inst.n_terms,
                                        "file": f"instances/drivers/{name}.json"})
    write_json(out / "manifest.json", manifest)
    return outcome.finish(out)


def _manifest(cfg: ExperimentConfig, out: Path) -> dict:
    path = out / "manifest.json"
    if not path.exists():
        cmd_gen(cfg, out)
    return read_json(path)


def _instance_refs(cfg: ExperimentConfig, out: Path) -> dict[str, dict]:
    man = _manifest(cfg, out)
    refs = {}
    for inst in man["instances"]:
        if cfg.kind == "maxcut":
            refs[inst["id"]] = {"kind": "maxcut", "graph": read_json(out / inst["file"])}
        elif cfg.kind == "labs":
            refs[inst["id"]] = {"kind": "labs", "n": inst["n"]}
        else:
            refs[inst["id"]] = {"kind": "toy"}
    return refs


# ---------------------------------------------------------------- gap-scan

def _tf_gaps(cfg, out, refs, outcome, force):
    tasks = [Task("gap_tf", iid, T.task_gap, {"ref": ref, "schedule": "TF", "driver": None, "gap": cfg.gap})
             for iid, ref in refs.items()]
    batch = outcome.add(run_tasks(tasks, out, cfg.jobs, force), "gap_tf")
    return {iid: GapReport(**{**r, "level_pair": tuple(r["level_pair"])}) for iid, r in batch.results.items()}


def _threshold(cfg) -> float:
    return float(cfg.gap.get("threshold", analysis.HARD_THRESHOLD))


def _hard_ids(cfg, out, refs, outcome, force) -> list[str]:
    tf = _tf_gaps(cfg, out, refs, outcome, force)
    ids = sorted(tf)
    hard_idx, _ = analysis.classify_hard([tf[i] for i in ids], _threshold(cfg))
    return [ids[i] for i in hard_idx]


def _log_hist(values, bins_per_decade):
    vals = np.asarray([v for v in values if v > 0 and math.isfinite(v)])
    if len(vals) == 0:
        return []
    lo = math.floor(math.log10(vals.min()))
    hi = max(lo + 1, math.ceil(math.log10(vals.max()) + 1e-12))
    edges = np.logspace(lo, hi, int((hi - lo) * bins_per_decade) + 1)
    counts, _ = np.histogram(vals, bins=edges)
    return [{"bin_lo": float(a), "bin_hi": float(b), "count": int(c)} for a, b, c in zip(edges[:-1], edges[1:], counts)]


def cmd_gap_scan(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    if cfg.kind != "maxcut":
        raise ConfigError("gap-scan runs on maxcut problems; use 'toy' for the two-spin model")
    outcome = Outcome("gap-scan")
    _write_config(cfg, out)
    refs = _instance_refs(cfg, out)
    tf = _tf_gaps(cfg, out, refs, outcome, force)
    ids = sorted(tf)
    threshold = _threshold(cfg)
    hard_idx, _ = analysis.classify_hard([tf[i] for i in ids], threshold)
    hard = [ids[i] for i in hard_idx]
    rows = [{"instance_id": i, "schedule": "TF", "q": None, "seed": None, "delta": tf[i].delta,
             "s_min": tf[i].s_min, "classical_gap": tf[i].classical_gap} for i in ids]
    if cfg.schedule in ("S1", "S2"):
        tasks = []
        for iid in hard:
            for d in cfg.driver_specs():
                tasks.append(Task("gap_drv", f"{iid}__{_driver_id(d)}", T.task_gap,
                                  {"ref": refs[iid], "schedule": cfg.schedule, "driver": d.to_dict(), "gap": cfg.gap}))
        batch = outcome.add(run_tasks(tasks, out, cfg.jobs, force), "gap_drv")
        for task in tasks:
            r = batch.results.get(task.task_id)
            if r is None:
                continue
            d = DriverSpec.from_dict(task.params["driver"])
            rows.append({"instance_id": task.task_id.split("__")[0], "schedule": cfg.schedule, "q": d.q,
                         "seed": d.seed, "delta": r["delta"], "s_min": r["s_min"],
                         "classical_gap": r["classical_gap"]})
    write_csv(out / "gaps.csv", GAP_COLUMNS, rows)
    write_csv(out / "gap_hist.csv", ["bin_lo", "bin_hi", "count"],
              _log_hist([tf[i].delta for i in ids], int(cfg.gap.get("bins_per_decade", 5))))
    seeds = {inst["id"]: inst["seed"] for inst in _manifest(cfg, out)["instances"]}
    write_csv(out / "hard.csv", ["instance_id", "seed", "delta", "s_min"],
              [{"instance_id": i, "seed": seeds[i], "delta": tf[i].delta, "s_min": tf[i].s_min} for i in hard])
    log.info("gap-scan: %d instances, %d hard (delta < %g)", len(ids), len(hard), threshold)
    return outcome.finish(out)


# ---------------------------------------------------------------- anneal

def _select(cfg, out, refs, outcome, force, key: str, limit=None) -> list[str]:
    sel = (cfg.anneal if key == "anneal" else cfg.tstar).get("instances", "hard")
    if cfg.kind != "maxcut":
        ids = sorted(refs)
    elif isinstance(sel, list):
        missing = [i for i in sel if i not in refs]
        if missing:
            raise ConfigError(f"unknown instance ids {missing}")
        ids = list(sel)
    elif sel == "all":
        ids = sorted(refs)
    elif sel == "hard":
        ids = _hard_ids(cfg, out, refs, outcome, force)
    else:
        raise ConfigError(f"instance selection must be 'hard', 'all' or a list, got {sel!r}")
    return ids[:limit] if limit else ids


def _schedules(cfg) -> list[tuple[str, DriverSpec | None]]:
    """TF baseline followed by the configured schedule for every driver spec."""
    out = [("TF", None)]
    if cfg.schedule != "TF":
        kind = cfg.schedule
        if cfg.kind == "toy" and not kind.startswith("TOY_"):
            kind = "TOY_" + kind if kind in ("S1", "S2") else kind
        out += [(kind, d) for d in cfg.driver_specs()]
    return out


def cmd_anneal(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    outcome = Outcome("anneal")
    _write_config(cfg, out)
    refs = _instance_refs(cfg, out)
    ids = _select(cfg, out, refs, outcome, force, "anneal")
    parity = bool(cfg.anneal.get("parity", True))
    integrator = cfg.integrator.to_dict()
    tasks = []
    for iid in ids:
        for kind, d in _schedules(cfg):
            tasks.append(Task("anneal", f"{iid}__{_driver_id(d)}", T.task_sweep, {
                "ref": refs[iid], "schedule": kind, "driver": d.to_dict() if d else None,
                "T_grid": cfg.T_grid(), "integrator": integrator, "parity": parity}))
    batch = outcome.add(run_tasks(tasks, out, cfg.jobs, force), "anneal")
    rows, level_rows, bump_rows = [], [], []
    for task in tasks:
        r = batch.results.get(task.task_id)
        if r is None:
            continue
        iid = task.task_id.split("__")[0]
        d = DriverSpec.from_dict(task.params["driver"]) if task.params["driver"] else None
        q = d.q if d else None
        seed = d.seed if d else None
        for run in r["runs"]:
            rows.append({"instance_id": iid, "schedule": task.params["schedule"], "N": r["n"], "q": q,
                         "seed": seed, "T": run["T"], "p_gs": run["p_gs"], "norm_drift": run["norm_drift"],
                         "wall_time_s": round(run["wall_time_s"], 6), "status": run["status"]})
            for e, p in run["populations"]:
                level_rows.append({"instance_id": iid, "schedule": task.params["schedule"], "seed": seed,
                                   "T": run["T"], "energy": e, "population": p})
        if r["bump"]:
            bump_rows.append({"instance_id": iid, "schedule": task.params["schedule"], "seed": seed,
                              "T_bump": r["bump"][0], "p_bump": r["bump"][1]})
    write_csv(out / "anneal.csv", ANNEAL_COLUMNS, rows)
    write_csv(out / "anneal_levels.csv", ["instance_id", "schedule", "seed", "T", "energy", "population"], level_rows)
    write_csv(out / "bumps.csv", ["instance_id", "schedule", "seed", "T_bump", "p_bump"], bump_rows)
    for row in rows:
        if row["status"] == "failed":
            outcome.failures[f"anneal/{row['instance_id']}@T={row['T']}"] = "integration failure"
    return outcome.finish(out)


# ---------------------------------------------------------------- tstar

def _report(r: dict) -> TStarReport:
    return TStarReport(t_star=r["t_star"], window=tuple(r["window"]),
                       bump=tuple(r["bump"]) if r["bump"] else None, p_target=r["p_target"],
                       status=r["status"])


def cmd_tstar(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    outcome = Outcome("tstar")
    _write_config(cfg, out)
    refs = _instance_refs(cfg, out)
    ids = _select(cfg, out, refs, outcome, force, "tstar", cfg.tstar.get("max_instances"))
    parity = bool(cfg.anneal.get("parity", True))
    integrator = cfg.integrator.to_dict()
    cap = float(cfg.tstar["cap"])
    window = list(cfg.window)
    tasks = []
    for iid in ids:
        for kind, d in _schedules(cfg):
            tasks.append(Task("tstar", f"{iid}__{_driver_id(d)}", T.task_tstar, {
                "ref": refs[iid], "schedule": kind, "driver": d.to_dict() if d else None,
                "integrator": integrator, "tstar": cfg.tstar, "window": window, "parity": parity}))
    batch = outcome.add(run_tasks(tasks, out, cfg.jobs, force), "tstar")
    rows, ratio_rows = [], []
    for iid in ids:
        tf_raw = batch.results.get(f"{iid}__tf")
        tf = _report(tf_raw) if tf_raw is not None else None
        if tf is not None:
            rows.append({"instance_id": iid, "driver": "TF", "seed": None, "t_star": tf.t_star, "status": tf.status})
        drv = []
        for kind, d in _schedules(cfg)[1:]:
            r = batch.results.get(f"{iid}__{_driver_id(d)}")
            if r is None:
                continue
            rep = _report(r)
            if rep.t_star is not None and rep.t_star >= cap:
                rep.status = "exceeded"
            drv.append(rep)
            rows.append({"instance_id": iid, "driver": _driver_label(d), "seed": d.seed,
                         "t_star": rep.t_star, "status": rep.status})
        if tf is not None and drv:
            ratio = analysis.success_ratio(drv, tf, cap)
            mean, se = analysis.mean_t_star(drv, cap)
            ratio_rows.append({
                "instance_id": iid, "tf_t_star": tf.t_star, "n_seeds": len(drv),
                "n_success": round(ratio * len(drv)), "ratio": ratio,
                "mean_t_star": None if math.isnan(mean) else mean, "stderr": se})
    write_csv(out / "tstar.csv", TSTAR_COLUMNS, rows)
    write_csv(out / "success.csv",
              ["instance_id", "tf_t_star", "n_seeds", "n_success", "ratio", "mean_t_star", "stderr"], ratio_rows)
    cyc = cfg.tstar.get("cyclic")
    if cyc:
        _cyclic(cfg, out, refs, ids, cyc, outcome, force)
    return outcome.finish(out)


def _cyclic(cfg, out, refs, ids, cyc, outcome, force):
    for key in ("rounds", "T", "seed", "q"):
        if key not in cyc:
            raise ConfigError(f"tstar.cyclic needs '{key}'")
    schedule = cfg.schedule if cfg.schedule in ("S1", "S2") else "S2"
    tasks = [Task("cyclic", iid, T.task_cyclic, {
        "ref": refs[iid], "instance_id": iid, "schedule": schedule, "q": int(cyc["q"]), "T": float(cyc["T"]),
        "rounds": int(cyc["rounds"]), "seed": int(cyc["seed"]), "integrator": cfg.integrator.to_dict()})
        for iid in ids]
    batch = outcome.add(run_tasks(tasks, out, cfg.jobs, force), "cyclic")
    rows = [{"instance_id": iid, **{k: v for k, v in r.items() if k != "energies"}}
            for iid, r in batch.results.items()]
    write_csv(out / "cyclic.csv",
              ["instance_id", "rounds", "best_energy", "best_bitstring", "ground_energy", "hit_round"], rows)


# ---------------------------------------------------------------- labs-scale

def scaling_table(p_by_driver: dict, Ts) -> tuple[list[dict], list[dict]]:
    """TTS rows and per-(driver, T) fits from ``{driver: {N: {T: p}}}``."""
    rows, fits = [], []
    for label, by_n in p_by_driver.items():
        for N in sorted(by_n):
            for t in Ts:
                p = by_n[N].get(t)
                if p is None:
                    continue
                rows.append({"driver": label, "N": N, "T": t, "p_gs": p, "tts": analysis.tts(t, max(p, 0.0))})
        for t in Ts:
            pts = [(N, analysis.tts(t, max(by_n[N][t], 0.0))) for N in sorted(by_n) if t in by_n[N]]
            finite = [(n, v) for n, v in pts if math.isfinite(v)]
            if len(finite) < len(pts):
                log.warning("labs-scale: %s at T=%g has infinite TTS; excluded from the fit", label, t)
                fits.append({"driver": label, "T": t, "b": None, "c": None, "stderr_b": None,
                             "n_points": len(finite), "excluded": True})
                continue
            fit = analysis.fit_scaling(finite)
            fits.append({"driver": label, "T": t, "b": fit.b, "c": fit.c, "stderr_b": fit.stderr_b,
                         "n_points": len(finite), "excluded": False})
    return rows, fits


def cmd_labs_scale(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    if cfg.kind != "labs":
        raise ConfigError("labs-scale needs a labs problem")
    if len(cfg.problem["sizes"]) < 2:
        raise ConfigError("labs-scale needs at least two sizes for a fit")
    outcome = Outcome("labs-scale")
    _write_config(cfg, out)
    refs = _instance_refs(cfg, out)
    Ts = [float(t) for t in cfg.labs["T_grid"]]
    parity = bool(cfg.anneal.get("parity", True))
    tasks = []
    for iid, ref in refs.items():
        for kind, d in _schedules(cfg):
            tasks.append(Task("labs", f"{iid}__{_driver_id(d)}", T.task_sweep, {
                "ref": ref, "schedule": kind, "driver": d.to_dict() if d else None, "T_grid": Ts,
                "integrator": cfg.integrator.to_dict(), "parity": parity}))
    batch = outcome.add(run_tasks(tasks, out, cfg.jobs, force), "labs")
    # p_gs per (driver family, N, T); bSYK seeds are averaged
    acc: dict = {}
    for task in tasks:
        r = batch.results.get(task.task_id)
        if r is None:
            continue
        d = DriverSpec.from_dict(task.params["driver"]) if task.params["driver"] else None
        label = _driver_label(d)
        for run in r["runs"]:
            if run["status"] == "failed":
                continue
            acc.setdefault(label, {}).setdefault(r["n"], {}).setdefault(run["T"], []).append(run["p_gs"])
    p_by_driver = {lab: {N: {t: float(np.mean(v)) for t, v in by_t.items()} for N, by_t in by_n.items()}
                   for lab, by_n in acc.items()}
    rows, fits = scaling_table(p_by_driver, Ts)
    write_csv(out / "scaling.csv", SCALING_COLUMNS, rows)
    write_csv(out / "scaling_fit.csv", ["driver", "T", "b", "c", "stderr_b", "n_points", "excluded"], fits)
    return outcome.finish(out)


# ---------------------------------------------------------------- toy

def toy_schedules(cfg: ExperimentConfig) -> list[tuple[str, str, DriverSpec | None]]:
    toy = cfg.toy
    out = [
        ("TF", "TF", None),
        ("-XX", "TOY_S2", DriverSpec("toy_xx_minus")),
        ("+XX", "TOY_S2", DriverSpec("toy_xx_plus")),
        ("S1-XX", "TOY_S1", DriverSpec("toy_xx_minus")),
        ("S1+XX", "TOY_S1", DriverSpec("toy_xx_plus")),
    ]
    for j in range(int(toy.get("n_bsyk2", 0))):
        seed = derive_seed(int(toy.get("seed", 1)), "toy_bsyk2", j)
        out.append((f"bSYK2-{j}", "TOY_S2", DriverSpec("toy_bsyk2", seed=seed)))
    return out


def cmd_toy(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    outcome = Outcome("toy")
    out.mkdir(parents=True, exist_ok=True)
    _write_config(cfg, out)
    ref = {"kind": "toy"}
    toy = cfg.toy
    integrator = toy.get("integrator") or LONG_ANNEAL.to_dict()
    n_points = int(toy.get("n_points", 401))
    gap_cfg = {"n_points": n_points, "dense_points": 10 * n_points, "dense_below": 1.0}
    tasks = []
    for label, kind, d in toy_schedules(cfg):
        drv = d.to_dict() if d else None
        tid = label.replace("+", "p").replace("-", "m")
        tasks.append(Task("toy_gap", tid, T.task_gap, {"ref": ref, "schedule": kind, "driver": drv,
                                                         "gap": gap_cfg, "level_pair": [0, 1]}))
        tasks.append(Task("toy_spectrum", tid, T.task_spectrum, {"ref": ref, "schedule": kind, "driver": drv,
                                                                   "n_points": n_points, "n_levels": 4}))
        tasks.append(Task("toy_sweep", tid, T.task_sweep, {"ref": ref, "schedule": kind, "driver": drv,
                                                             "T_grid": [float(t) for t in toy["T_grid"]],
                                                             "integrator": integrator, "parity": False}))
    by_stage: dict[str, list[Task]] = {}
    for t in tasks:
        by_stage.setdefault(t.stage, []).append(t)
    results = {stage: outcome.add(run_tasks(ts, out, cfg.jobs, force), stage).results
               for stage, ts in by_stage.items()}
    classical = toy_classical()
    excited = int(np.argsort(classical.energies)[1])
    gap_rows, spec_rows, pop_rows = [], [], []
    for label, kind, d in toy_schedules(cfg):
        tid = label.replace("+", "p").replace("-", "m")
        seed = d.seed if d else None
        g = results["toy_gap"].get(tid)
        if g:
            gap_rows.append({"label": label, "schedule": kind, "seed": seed, "delta": g["delta"], "s_min": g["s_min"]})
        sp = results["toy_spectrum"].get(tid)
        if sp:
            for s, lv in zip(sp["s"], sp["levels"]):
                spec_rows.append({"label": label, "s": s, **{f"E{k}": v for k, v in enumerate(lv)}})
        sw = results["toy_sweep"].get(tid)
        if sw:
            for run in sw["runs"]:
                pops = {e: p for e, p in run["populations"]}
                pop_rows.append({"label": label, "schedule": kind, "seed": seed, "T": run["T"], "p_gs": run["p_gs"],
                                 "p_excited": pops.get(float(classical.energies[excited])),
                                 "norm_drift": run["norm_drift"], "status": run["status"]})
    write_csv(out / "toy_gaps.csv", ["label", "schedule", "seed", "delta", "s_min"], gap_rows)
    write_csv(out / "toy_spectra.csv", ["label", "s", "E0", "E1", "E2", "E3"], spec_rows)
    write_csv(out / "toy_populations.csv",
              ["label", "schedule", "seed", "T", "p_gs", "p_excited", "norm_drift", "status"], pop_rows)
    return outcome.finish(out)


# ---------------------------------------------------------------- report

PLOTS = [
    ("gap_histogram", "gap_hist.csv", {"kind": "bar", "x": ["bin_lo", "bin_hi"], "y": "count", "xscale": "log",
                                        "title": "Minimum TF gap distribution"}),
    ("gap_comparison", "gaps.csv", {"kind": "scatter", "x": "delta", "y": "delta", "group": "schedule",
                                     "xscale": "log", "yscale": "log", "title": "TF vs bSYK minimum gaps",
                                     "pair_on": "instance_id"}),
    ("anneal_populations", "anneal.csv", {"kind": "line", "x": "T", "y": "p_gs", "group": ["instance_id", "schedule", "seed"],
                                          "xscale": "log", "title": "Final ground-state population"}),
    ("anneal_levels", "anneal_levels.csv", {"kind": "line", "x": "T", "y": "population", "group": ["instance_id", "seed", "energy"],
                                            "xscale": "log", "title": "Population by classical level"}),
    ("tstar", "tstar.csv", {"kind": "scatter", "x": "instance_id", "y": "t_star", "group": "driver",
                            "yscale": "log", "title": "T* per instance and driver"}),
    ("success_ratio", "success.csv", {"kind": "bar", "x": "instance_id", "y": "ratio", "title": "bSYK success ratio"}),
    ("tts", "scaling.csv", {"kind": "line", "x": "N", "y": "tts", "group": ["driver", "T"], "yscale": "log",
                            "title": "Time to solution"}),
    ("scaling_b", "scaling_fit.csv", {"kind": "errorbar", "x": "T", "y": "b", "yerr": "stderr_b", "group": "driver",
                                      "xscale": "log", "title": "Fitted base b(T)"}),
    ("toy_spectrum", "toy_spectra.csv", {"kind": "line", "x": "s", "y": ["E1", "E2", "E3"], "group": "label",
                                         "title": "Two-spin instantaneous spectrum"}),
    ("toy_populations", "toy_populations.csv", {"kind": "line", "x": "T", "y": ["p_gs", "p_excited"], "group": "label",
                                                "xscale": "log", "title": "Two-spin anneal populations"}),
]


def write_plot_manifest(out: Path) -> None:
    figures = [{"id": fid, "data": csv, **spec} for fid, csv, spec in PLOTS if (out / csv).exists()]
    write_json(out / "plots.json", {"version": __version__, "figures": figures})


def _num(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return None


def cmd_report(cfg: ExperimentConfig, out: Path, force: bool = False) -> int:
    outcome = Outcome("report")
    summary: dict = {"fingerprint": cfg.fingerprint(), "version": __version__}
    if (out / "gaps.csv").exists():
        rows = read_csv(out / "gaps.csv")
        tf = [_num(r["delta"]) for r in rows if r["schedule"] == "TF"]
        thr = _threshold(cfg)
        summary["gaps"] = {"n_instances": len(tf), "n_hard": sum(d < thr for d in tf), "threshold": thr,
                           "hard_fraction": sum(d < thr for d in tf) / len(tf) if tf else None}
        drv = [r for r in rows if r["schedule"] != "TF"]
        if drv:
            tf_by = {r["instance_id"]: _num(r["delta"]) for r in rows if r["schedule"] == "TF"}
            per = {}
            for r in drv:
                per.setdefault(r["instance_id"], []).append(_num(r["delta"]))
            summary["gap_widening"] = {iid: {"tf": tf_by.get(iid), "mean_driver": float(np.mean(v)), "n": len(v)}
                                       for iid, v in sorted(per.items())}
    if (out / "success.csv").exists():
        summary["success"] = {r["instance_id"]: _num(r["ratio"]) for r in read_csv(out / "success.csv")}
    if (out / "scaling_fit.csv").exists():
        summary["scaling"] = [{"driver": r["driver"], "T": _num(r["T"]), "b": _num(r["b"]),
                               "stderr_b": _num(r["stderr_b"])} for r in read_csv(out / "scaling_fit.csv")]
    if (out / "toy_gaps.csv").exists():
        summary["toy_gaps"] = {r["label"]: {"delta": _num(r["delta"]), "s_min": _num(r["s_min"])}
                               for r in read_csv(out / "toy_gaps.csv")}
    write_json(out / "summary.json", summary)
    for key, val in summary.items():
        print(f"{key}: {val}")
    return outcome.finish(out)


COMMANDS = {
    "gen": cmd_gen,
    "gap-scan": cmd_gap_scan,
    "anneal": cmd_anneal,
    "tstar": cmd_tstar,
    "labs-scale": cmd_labs_scale,
    "toy": cmd_toy,
    "report": cmd_report,
}
