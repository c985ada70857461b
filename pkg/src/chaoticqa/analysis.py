"""Spectral gaps, hard-instance classification, T*, time-to-solution and scaling fits.

Gap conventions: for the TF schedule on a flip-symmetric problem the gap is
``E1 - E0`` inside the even parity block (the sector of ``|+...+>``). For
schedules with a bSYK driver parity is broken, the classical ground doublet
is approached by the two lowest levels, and the relevant gap is ``E2 - E0``
in the full space. :func:`gap_convention` picks between these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.stats

from . import operators
from .dynamics import EvolutionResult, IntegratorConfig, evolve, failed_result
from .errors import IntegrationError, NotFlipSymmetricError
from .schedules import ScheduleSpec

HARD_THRESHOLD = 1e-2
BUMP_FLOOR = 1e-4
TTS_CLAMP = 1e-12
DEFAULT_GRID = 201
DENSE_GRID = 1001
DENSE_BELOW = 5e-2


@dataclass(frozen=True, eq=False)
class SpectrumSweep:
    """Lowest levels of H(s) on a grid, relative to the instantaneous ground energy.

    ``endpoint`` holds the relative levels of the classical diagonal at
    ``s = 1`` in the same space (full or sector), independent of the grid.
    """

    s_grid: np.ndarray
    levels: np.ndarray
    ground: np.ndarray
    sector: int | None
    endpoint: np.ndarray

    @property
    def n_levels(self) -> int:
        return self.levels.shape[1]

    def gap(self, k: int) -> np.ndarray:
        if not 1 <= k < self.n_levels:
            raise ValueError(f"level {k} not in sweep with {self.n_levels} levels")
        return self.levels[:, k]


@dataclass(frozen=True)
class GapReport:
    delta: float
    s_min: float
    level_pair: tuple[int, int]
    classical_gap: float
    sector: int | None = None
    method: str = "grid"

    @property
    def is_hard(self) -> bool:
        return self.delta < HARD_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "s_min": self.s_min,
            "level_pair": list(self.level_pair),
            "classical_gap": self.classical_gap,
            "sector": self.sector,
            "method": self.method,
        }


@dataclass
class TStarReport:
    t_star: float | None
    window: tuple[float, float]
    bump: tuple[float, float] | None = None
    p_target: float = 0.9
    scan: list[tuple[float, float]] = field(default_factory=list)
    n_evolutions: int = 0
    status: str = "found"

    @property
    def exceeded(self) -> bool:
        return self.t_star is None

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "status": self.status,
            "window": list(self.window),
            "bump": list(self.bump) if self.bump else None,
            "p_target": self.p_target,
            "scan": [list(x) for x in self.scan],
            "n_evolutions": self.n_evolutions,
        }


@dataclass(frozen=True)
class ScalingFit:
    b: float
    c: float
    stderr_b: float | None
    points: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {"b": self.b, "c": self.c, "stderr_b": self.stderr_b, "points": [list(p) for p in self.points]}


def gap_convention(spec: ScheduleSpec) -> tuple[int | None, tuple[int, int]]:
    """``(sector, level_pair)`` for the gap relevant to ``spec``."""
    if spec.kind == "TF" and spec.flip_symmetric:
        return 1, (0, 1)
    if spec.kind in ("S1", "S2") and spec.classical.is_flip_symmetric():
        return None, (0, 2)
    return None, (0, 1)


def _levels_at(spec: ScheduleSpec, s: float, n_levels: int, sector: int | None) -> np.ndarray:
    h = spec.matrix(s) if sector is None else spec.block_matrix(s, sector)
    return operators.eigensolve(h, n_levels=min(n_levels, h.shape[0]), vectors=False)


def instantaneous_spectrum(
    spec: ScheduleSpec,
    s_grid=None,
    n_levels: int = 4,
    sector: int | None = None,
) -> SpectrumSweep:
    """Eigensolve H(s) on ``s_grid`` (default: 201 uniform points on [0, 1])."""
    if sector is not None and not spec.flip_symmetric:
        raise NotFlipSymmetricError(f"{spec.kind} schedule is not flip-symmetric")
    s_grid = np.linspace(0.0, 1.0, DEFAULT_GRID) if s_grid is None else np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or len(s_grid) == 0:
        raise ValueError("s_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be strictly increasing")
    raw = np.array([_levels_at(spec, float(s), n_levels, sector) for s in s_grid])
    ground = raw[:, 0].copy()
    levels = raw - ground[:, None]
    if sector is None:
        diag = np.sort(spec.classical.energies)
    else:
        diag = np.sort(spec.parity_pieces(sector)[0])
    endpoint = (diag - diag[0])[: raw.shape[1]]
    for a in (s_grid, levels, ground, endpoint):
        a.flags.writeable = False
    return SpectrumSweep(s_grid=s_grid, levels=levels, ground=ground, sector=sector, endpoint=endpoint)


def _parabola_vertex(x, y):
    """Vertex of the parabola through three points (non-uniform spacing)."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom
    if a <= 0:
        return None
    xv = -b / (2 * a)
    return xv, c - b * b / (4 * a)


def minimum_gap(sweep: SpectrumSweep, level_pair: tuple[int, int] = (0, 1)) -> GapReport:
    """Grid minimum of ``E_k - E_0``, refined by a parabola through the bracketing points.

    Ties resolve to the smallest ``s``. The refinement is kept only when the
    vertex lies inside the bracket and below the grid minimum.
    """
    lo, k = level_pair
    if lo != 0:
        raise ValueError("gaps are measured from the ground level (level_pair[0] must be 0)")
    if k >= sweep.n_levels:
        raise ValueError(f"sweep holds {sweep.n_levels} levels, level {k} requested")
    g = sweep.gap(k)
    i = int(np.argmin(g))
    delta, s_min, method = float(g[i]), float(sweep.s_grid[i]), "grid"
    if 0 < i < len(g) - 1:
        vertex = _parabola_vertex(sweep.s_grid[i - 1 : i + 2], g[i - 1 : i + 2])
        if vertex is not None:
            xv, yv = vertex
            if sweep.s_grid[i - 1] < xv < sweep.s_grid[i + 1] and yv <= delta:
                delta, s_min, method = max(float(yv), 0.0), float(xv), "parabola"
    classical = float(sweep.endpoint[k]) if k < len(sweep.endpoint) else float("nan")
    return GapReport(delta=delta, s_min=s_min, level_pair=(0, k), classical_gap=classical,
                     sector=sweep.sector, method=method)


def gap_scan(
    spec: ScheduleSpec,
    level_pair: tuple[int, int] | None = None,
    sector: int | None | str = "auto",
    n_points: int = DEFAULT_GRID,
    dense_points: int = DENSE_GRID,
    dense_below: float = DENSE_BELOW,
    polish: bool = True,
) -> GapReport:
    """Minimum gap of ``spec`` with automatic grid refinement.

    A coarse uniform sweep is followed, when its minimum lies below
    ``dense_below``, by a sweep at the ``dense_points`` resolution over the
    two coarse cells around the minimum. ``polish`` finishes with a bounded
    Brent minimization of the gap on the final bracket.
    """
    auto_sector, auto_pair = gap_convention(spec)
    if sector == "auto":
        sector = auto_sector
    level_pair = level_pair or auto_pair
    n_levels = level_pair[1] + 1
    coarse = instantaneous_spectrum(spec, np.linspace(0.0, 1.0, n_points), n_levels, sector)
    report = minimum_gap(coarse, level_pair)
    i = int(np.argmin(coarse.gap(level_pair[1])))
    a = coarse.s_grid[max(i - 1, 0)]
    b = coarse.s_grid[min(i + 1, n_points - 1)]
    if report.delta < dense_below and dense_points > n_points:
        m = max(3, int(round((b - a) * (dense_points - 1))) + 1)
        fine = instantaneous_spectrum(spec, np.linspace(a, b, m), n_levels, sector)
        fine_report = minimum_gap(fine, level_pair)
        if fine_report.delta <= report.delta:
            report = GapReport(fine_report.delta, fine_report.s_min, fine_report.level_pair,
                               report.classical_gap, sector, "dense-" + fine_report.method)
            j = int(np.argmin(fine.gap(level_pair[1])))
            a = fine.s_grid[max(j - 1, 0)]
            b = fine.s_grid[min(j + 1, m - 1)]
    if polish and b > a:
        k = level_pair[1]
        f = lambda s: float(np.diff(_levels_at(spec, s, n_levels, sector)[[0, k]])[0])
        res = scipy.optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                             options={"xatol": 1e-9 * max(1.0, b - a)})
        if res.success and res.fun < report.delta + 1e-15:
            report = GapReport(max(float(res.fun), 0.0), float(res.x), report.level_pair,
                               report.classical_gap, sector, "brent")
        elif report.method.endswith("parabola"):
            # the parabola undershot; fall back to the exact value at its vertex
            report = GapReport(f(report.s_min), report.s_min, report.level_pair,
                               report.classical_gap, sector, report.method)
    return report


def classify_hard(gaps, threshold: float = HARD_THRESHOLD) -> tuple[list[int], list[int]]:
    """Indices of hard (``delta < threshold``) and easy reports."""
    hard, easy = [], []
    for i, g in enumerate(gaps):
        (hard if g.delta < threshold else easy).append(i)
    return hard, easy


def detect_diabatic_bump(sweep, floor: float = BUMP_FLOOR) -> tuple[float, float] | None:
    """First interior local maximum of ``p_gs(T)``.

    ``sweep`` is a sequence of :class:`EvolutionResult` or ``(T, p)`` pairs in
    increasing ``T``. A maximum counts only if ``p`` rises into it and later
    falls below it by more than ``floor`` before rising above it again.
    """
    pts = [(r.T, r.p_gs) if isinstance(r, EvolutionResult) else (float(r[0]), float(r[1])) for r in sweep]
    if len(pts) < 3:
        raise ValueError("bump detection needs at least 3 points")
    T = np.array([p[0] for p in pts])
    p = np.array([p[1] for p in pts])
    if np.any(np.diff(T) <= 0):
        raise ValueError("results must be ordered by increasing T")
    ok = np.isfinite(p)
    T, p = T[ok], p[ok]
    for i in range(1, len(p) - 1):
        if not (p[i] > p[i - 1] and p[i] >= p[i + 1]):
            continue
        for j in range(i + 1, len(p)):
            if p[j] > p[i]:
                break
            if p[i] - p[j] > floor:
                return float(T[i]), float(p[i])
    return None


def _log_grid(window, points_per_decade):
    lo, hi = window
    n = max(2, int(math.ceil(points_per_decade * math.log10(hi / lo) - 1e-9)) + 1)
    return np.geomspace(lo, hi, n)


def find_t_star(
    spec: ScheduleSpec,
    p_target: float = 0.9,
    window: tuple[float, float] = (10.0, 2e4),
    cfg: IntegratorConfig | None = None,
    points_per_decade: int = 12,
    rel_precision: float = 0.05,
    stop_after: int | None = None,
) -> TStarReport:
    """Smallest anneal time on the adiabatic branch with ``p_gs >= p_target``.

    A log-spaced scan locates the last upward crossing of ``p_target`` that
    still holds at the next grid point; crossings that fall back (a diabatic
    bump) are rejected. The bracket is then bisected in ``log T`` until
    ``hi / lo <= 1 + rel_precision`` and ``hi`` is reported. With
    ``stop_after = m`` the scan ends once ``m`` consecutive points are at or
    above the target.
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < T_min < T_max")
    if not 0 < p_target < 1:
        raise ValueError("p_target must lie in (0, 1)")
    if stop_after is not None and stop_after < 2:
        raise ValueError("stop_after must be >= 2 so the crossing can persist")
    cfg = cfg or IntegratorConfig()
    n_runs = 0

    def p_at(T):
        nonlocal n_runs
        n_runs += 1
        try:
            return evolve(spec.with_T(T), cfg).p_gs
        except IntegrationError:
            return float("nan")

    scan = []
    streak = 0
    for T in _log_grid((lo, hi), points_per_decade):
        p = p_at(float(T))
        scan.append((float(T), p))
        streak = streak + 1 if p >= p_target else 0
        if stop_after is not None and streak >= stop_after:
            break
    Ts = [t for t, _ in scan]
    ps = [p for _, p in scan]
    above = [p >= p_target for p in ps]  # nan compares False
    j_cross = None
    for j in range(len(ps)):
        starts = above[j] and (j == 0 or not above[j - 1])
        persists = j == len(ps) - 1 or above[j + 1]
        if starts and persists:
            j_cross = j
    bump = detect_diabatic_bump(scan) if len(scan) >= 3 else None
    if j_cross is None:
        return TStarReport(None, (lo, hi), bump, p_target, scan, n_runs, "exceeded")
    if j_cross == 0:
        return TStarReport(Ts[0], (lo, hi), bump, p_target, scan, n_runs, "found")
    a, b = Ts[j_cross - 1], Ts[j_cross]
    while b / a > 1 + rel_precision:
        mid = math.sqrt(a * b)
        if p_at(mid) >= p_target:
            b = mid
        else:
            a = mid
    return TStarReport(b, (lo, hi), bump, p_target, scan, n_runs, "found")


def tts(T: float, p_gs: float) -> float:
    """Time to solution ``T / |ln(1 - p)|``; ``inf`` for ``p = 0``."""
    if T <= 0:
        raise ValueError("T must be positive")
    if not 0 <= p_gs or math.isnan(p_gs):
        raise ValueError(f"p_gs={p_gs} outside [0, 1]")
    if p_gs == 0:
        return math.inf
    p = min(p_gs, 1.0 - TTS_CLAMP)
    return T / abs(math.log1p(-p))


def fit_scaling(points) -> ScalingFit:
    """Least-squares fit ``ln TTS = N ln b + ln c``.

    ``stderr_b`` propagates the slope standard error (``b * se``); it is
    ``None`` for two points.
    """
    pts = sorted((int(n), float(t)) for n, t in points)
    if len(pts) < 2:
        raise ValueError("scaling fit needs at least 2 points")
    ns = [n for n, _ in pts]
    if len(set(ns)) != len(ns):
        raise ValueError("sizes N must be distinct")
    if any(not math.isfinite(t) or t <= 0 for _, t in pts):
        raise ValueError("TTS must be finite and positive; exclude these points or use larger T")
    x = np.array(ns, dtype=float)
    y = np.log([t for _, t in pts])
    if len(pts) == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        intercept = y[0] - slope * x[0]
        se = None
    else:
        fit = scipy.stats.linregress(x, y)
        slope, intercept, se = fit.slope, fit.intercept, fit.stderr
    b = math.exp(slope)
    return ScalingFit(b=b, c=math.exp(intercept), stderr_b=None if se is None else b * float(se),
                      points=tuple(pts))


def success_ratio(tstar_bsyk, tstar_tf: TStarReport, cap: float = 2e4) -> float:
    """Fraction of bSYK reports with a T* below ``cap`` and below the TF T*."""
    reports = list(tstar_bsyk)
    if not reports:
        raise ValueError("no bSYK reports")
    tf = math.inf if tstar_tf.t_star is None else tstar_tf.t_star
    wins = sum(1 for r in reports if r.t_star is not None and r.t_star < cap and r.t_star < tf)
    return wins / len(reports)


def mean_t_star(reports, cap: float = 2e4) -> tuple[float, float | None]:
    """Mean T* and its standard error over reports with a T* below ``cap``."""
    vals = np.array([r.t_star for r in reports if r.t_star is not None and r.t_star < cap])
    if len(vals) == 0:
        return math.nan, None
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else None
    return float(vals.mean()), se


def evolve_safely(spec: ScheduleSpec, cfg: IntegratorConfig) -> EvolutionResult:
    try:
        return evolve(spec, cfg)
    except IntegrationError as exc:
        return failed_result(spec, cfg, exc)
