"""Experiment orchestration: convergence runs, sweeps and pattern export.

All tabular output is CSV.  Rows are ordered by cell key (scheme order of the
config, then seed) so serial and parallel executions produce the same bytes.
"""

from __future__ import annotations

import csv
import io
import time
import tracemalloc
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import run_scheme
from .config import SystemConfig, build_system
from .em_coupling import azimuth_cut, far_field_pattern
from .exceptions import RHSError
from .rhs_operator import coupled_operator

RUN_COLUMNS = ["iter", "scheme", "seed", "sum_rate_bps", "sum_se_bpshz", "J",
               "rhs_power_w", "lambda", "backtracks", "wall_ms", "config_hash"]
SWEEP_COLUMNS = ["axis", "value", "scheme", "seed", "sum_rate_bps", "sum_se_bpshz",
                 "J_final", "rhs_power_w", "status", "config_hash"]
TIMING_COLUMNS = ["axis", "value", "scheme", "seed", "wall_ms", "peak_kib"]
PATTERN_COLUMNS = ["angle_deg", "model", "gain_db"]

AXES = {"pbs": "P_BS", "xi_fs": "xi_fs", "rhs_size": "N"}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# ---------------------------------------------------------------------------
# Convergence runs
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    scheme: str
    seed: int
    config_hash: str
    rows: list = field(default_factory=list)
    metrics: object = None
    status: str = "ok"
    wall_ms: float = 0.0


def _run_cell(cfg: SystemConfig, scheme: str, seed: int) -> RunRecord:
    t0 = time.perf_counter()
    rec = RunRecord(scheme, seed, cfg.hash())
    try:
        system = build_system(cfg, seed)
        metrics, trace, _, _ = run_scheme(scheme, system)
        rec.rows, rec.metrics = trace.records, metrics
    except RHSError as exc:
        rec.status = f"failed:{type(exc).__name__}"
    rec.wall_ms = 1e3 * (time.perf_counter() - t0)
    return rec


def run_convergence(cfg: SystemConfig, schemes=None, seeds=None,
                    workers: int | None = None) -> list[RunRecord]:
    schemes = list(schemes or cfg.schemes)
    seeds = list(cfg.seeds if seeds is None else seeds)
    jobs = [(cfg, s, seed) for s in schemes for seed in seeds]
    return _map(_run_cell, jobs, workers or cfg.workers)


def convergence_csv(records: list[RunRecord], timing: bool = False) -> str:
    """Trace rows; ``wall_ms`` is left blank unless ``timing`` (keeps bytes stable)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for rec in records:
        if rec.status != "ok":
            w.writerow(["", rec.scheme, rec.seed, "", "", "", "", "", "",
                        "", rec.config_hash + ";" + rec.status])
            continue
        for r in rec.rows:
            w.writerow([r.iteration, rec.scheme, rec.seed, _fmt(r.sum_rate_bps),
                        _fmt(r.sum_se_bpshz), _fmt(r.J), _fmt(r.rhs_power), _fmt(r.lam),
                        r.backtracks, _fmt(r.wall_ms) if timing else "", rec.config_hash])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepCell:
    value: float
    scheme: str
    seed: int
    sum_rate_bps: float = float("nan")
    sum_se_bpshz: float = float("nan")
    J_final: float = float("nan")
    rhs_power: float = float("nan")
    status: str = "ok"
    wall_ms: float = 0.0
    peak_kib: float = 0.0


@dataclass
class SweepResult:
    axis: str
    values: list
    schemes: list
    seeds: list
    config_hash: str
    cells: list

    def means(self) -> list[SweepCell]:
        out = []
        for v in self.values:
            for s in self.schemes:
                group = [c for c in self.cells if c.value == v and c.scheme == s]
                ok = [c for c in group if c.status == "ok"]
                mean = SweepCell(v, s, -1)
                if ok:
                    for name in ("sum_rate_bps", "sum_se_bpshz", "J_final", "rhs_power"):
                        setattr(mean, name, float(np.mean([getattr(c, name) for c in ok])))
                mean.status = ("ok" if len(ok) == len(group)
                               else f"partial:{len(ok)}/{len(group)}" if ok else "failed")
                out.append(mean)
        return out

    def lookup(self, value, scheme: str, seed=None) -> SweepCell:
        pool = self.cells if seed is not None else self.means()
        for c in pool:
            if c.value == value and c.scheme == scheme and (seed is None or c.seed == seed):
                return c
        raise KeyError((value, scheme, seed))


def axis_config(cfg: SystemConfig, axis: str, value) -> SystemConfig:
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    name = AXES[axis]
    return cfg.replace(**{name: int(value) if name == "N" else float(value)})


def _sweep_cell(cfg: SystemConfig, axis: str, value, scheme: str, seed: int) -> SweepCell:
    cell = SweepCell(value, scheme, seed)
    tracemalloc.start()
    t0 = time.perf_counter()
    try:
        sub = axis_config(cfg, axis, value)
        metrics, _, _, _ = run_scheme(scheme, build_system(sub, seed))
        cell.sum_rate_bps, cell.sum_se_bpshz = metrics.sum_rate_bps, metrics.sum_se_bpshz
        cell.J_final, cell.rhs_power = metrics.J, metrics.rhs_power
    except RHSError as exc:
        cell.status = f"failed:{type(exc).__name__}"
    cell.wall_ms = 1e3 * (time.perf_counter() - t0)
    cell.peak_kib = tracemalloc.get_traced_memory()[1] / 1024.0
    tracemalloc.stop()
    return cell


def run_sweep(cfg: SystemConfig, axis: str, values=None, schemes=None, seeds=None,
              workers: int | None = None) -> SweepResult:
    values = list(cfg.sweep_values(axis) if values is None else values)
    schemes = list(schemes or cfg.schemes)
    seeds = list(cfg.seeds if seeds is None else seeds)
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    jobs = [(cfg, axis, v, s, seed) for v in values for s in schemes for seed in seeds]
    cells = _map(_sweep_cell, jobs, workers or cfg.workers)
    return SweepResult(axis, values, schemes, seeds, cfg.hash(), cells)


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    means = iter(result.means())
    for v in result.values:
        for s in result.schemes:
            rows = [c for c in result.cells if c.value == v and c.scheme == s]
            rows.append(next(means))
            for c in rows:
                w.writerow([result.axis, _fmt(v), s, "mean" if c.seed < 0 else c.seed,
                            _fmt(c.sum_rate_bps), _fmt(c.sum_se_bpshz), _fmt(c.J_final),
                            _fmt(c.rhs_power), c.status, result.config_hash])
    return buf.getvalue()


def timing_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMING_COLUMNS)
    for c in result.cells:
        w.writerow([result.axis, _fmt(c.value), c.scheme, c.seed,
                    f"{c.wall_ms:.3f}", f"{c.peak_kib:.1f}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

def pattern_operators(system, m, subband: int) -> dict:
    """Coupled operators of one subband for the three coupling models."""
    cp = system.coupling
    F = system.F[subband]
    models = {
        "none": np.zeros_like(cp.total[subband]),
        "fs": cp.fs[subband],
        "fs_sw": cp.total[subband],
    }
    return {name: coupled_operator(m, Xi, F).M for name, Xi in models.items()}


def export_pattern(cfg: SystemConfig, m, V, subband: int | None = None,
                   step_deg: float = 1.0, seed: int = 0, system=None) -> list[tuple]:
    """Normalized 90-degree azimuth cut for each coupling model.

    ``V`` is either the full (U, L, K) precoder stack or one (L, K) block.
    Returns rows ``(angle_deg, model, gain_db)``.
    """
    system = system or build_system(cfg, seed)
    u = cfg.U // 2 if subband is None else subband
    if not 0 <= u < cfg.U:
        raise ValueError(f"subband {u} out of range")
    V = np.asarray(V)
    Vu = V[u] if V.ndim == 3 else V
    grid = azimuth_cut(step_deg)
    angles = np.rad2deg(grid[:, 1])
    f = system.plan.centers[u]
    rows = []
    for name, M in pattern_operators(system, np.asarray(m, dtype=float), u).items():
        gain = far_field_pattern(M @ Vu, system.geometry, f, grid)
        rows.extend((float(a), name, float(g)) for a, g in zip(angles, gain))
    return rows


def pattern_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PATTERN_COLUMNS)
    for a, name, g in rows:
        w.writerow([_fmt(a), name, _fmt(g)])
    return buf.getvalue()
