"""Orchestration: run an engine over a barrier-height list and write reports."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import analytic as an
from . import ensemble as en
from . import potential as pot
from . import qsim, units
from .config import parse_config

CSV_HEADER = "U0_nK,U_eff_nK,T_eff_nK,eta_analytic,eta_engine,stderr,x_min_um"
COMPARE_HEADER = ("U0_nK,U_eff_nK,T_eff_nK,eta_analytic,eta_classical,stderr_classical,"
                  "eta_quantum,x_min_um")
WELL_HEADER = ("U0_nK,U_eff_nK,T_eff_nK,x_max_um,x_min_um,omega_rad_per_ms,frequency_Hz,"
               "level_spacing_nK,n_bound_states")


@dataclass
class CurveRow:
    U0: float
    U_eff: float
    T_eff: float
    eta_analytic: float
    eta_engine: float
    stderr: float | None
    x_min: float
    density: np.ndarray | None = None
    snapshots: list | None = None


def fmt(value):
    """Round-trip decimal text; empty for a missing value."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def cloud_of(cfg):
    return an.CloudSpec(cfg.r0, cfg.T0)


def base_of(cfg, U0):
    return pot.PotentialSpec(cfg.gradient, U0, cfg.w0)


def schedule_of(cfg, base):
    cloud = cloud_of(cfg)
    x_end = cfg.x_end if cfg.x_end is not None else cfg.x_start + 2.5 * cfg.r0
    speed = cfg.speed
    if speed is None:
        well = pot.well_analysis(base.at(x_end))
        scale = float(pot.critical_velocity(well.U_eff)) if well.exists else cloud.v0
        speed = cfg.speed_vc * scale
    return en.default_schedule(cloud, base, cfg.x_start, x_end, speed, cfg.dt, cfg.hold_periods)


def _well_row(cfg, U0):
    well = pot.well_analysis(base_of(cfg, U0))
    U_eff = well.U_eff if well.exists else 0.0
    x_min = well.x_localmin if well.exists else math.nan
    eta_a = an.eta_full(U_eff, cloud_of(cfg), cfg.gradient) if U_eff > 0 else 0.0
    return well, U_eff, x_min, eta_a


def engine_row(cfg, engine, U0):
    """One CurveRow for barrier height U0 with the named engine."""
    well, U_eff, x_min, eta_a = _well_row(cfg, U0)
    T_eff = 2.0 * U_eff
    if engine == "analytic":
        return CurveRow(U0, U_eff, T_eff, eta_a, eta_a, None, x_min)
    if engine.startswith("classical"):
        if not well.exists:
            return CurveRow(U0, U_eff, T_eff, eta_a, 0.0, 0.0, x_min)
        particles = en.sample_cloud(cloud_of(cfg), cfg.n_atoms, cfg.seed)
        base = base_of(cfg, U0)
        if engine == "classical-quasistatic":
            res = en.select_quasistatic(particles, base, well, cfg.x_start)
        else:
            res = en.simulate_sweep(particles, base, schedule_of(cfg, base))
        return CurveRow(U0, U_eff, T_eff, eta_a, res.eta, res.stderr, x_min)
    if engine == "quantum":
        x0 = cfg.x0 if not math.isnan(cfg.x0) else float(units.packet_width_from_temperature(cfg.T0))
        base = base_of(cfg, U0)
        qc = qsim.QuantumConfig(
            half_width=0.5 * (cfg.grid_max - cfg.grid_min), n_points=cfg.n_points,
            n_packets=cfg.n_packets, dt=cfg.quantum_dt, selection=cfg.selection,
            mode=cfg.mode, n_realizations=cfg.n_realizations)
        grid = qsim.Grid(cfg.grid_min, cfg.grid_max, cfg.n_points)
        sched = schedule_of(cfg, base)
        res = qsim.run_selection(cfg.r0, x0, base, sched, qc, seed=cfg.seed, grid=grid,
                                 snapshot_every=cfg.snapshot_every or None)
        return CurveRow(U0, U_eff, T_eff, eta_a, res.eta, None, x_min,
                        density=res.density, snapshots=res.diagnostics.get("snapshots"))
    raise ValueError(f"unknown engine {engine!r}")


def _row_job(args):
    return engine_row(*args)


def run_rows(cfg, engine, threads=1):
    jobs = [(cfg, engine, U0) for U0 in cfg.U0]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_row_job, jobs))
    return [_row_job(j) for j in jobs]


def curve_csv(rows):
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([fmt(r.U0), fmt(r.U_eff), fmt(r.T_eff), fmt(r.eta_analytic),
                               fmt(r.eta_engine), fmt(r.stderr), fmt(r.x_min)]))
    return "\n".join(lines) + "\n"


def density_text(x, rho):
    return "".join(f"{fmt(a)}  {fmt(b)}\n" for a, b in zip(x, rho))


def compare_rows(cfg, threads=1):
    classical = cfg.engine if cfg.engine.startswith("classical") else "classical-dynamic"
    c_rows = run_rows(cfg, classical, threads)
    q_rows = run_rows(cfg, "quantum", threads)
    return c_rows, q_rows


def compare_csv(c_rows, q_rows):
    lines = [COMPARE_HEADER]
    for c, q in zip(c_rows, q_rows):
        lines.append(",".join([fmt(c.U0), fmt(c.U_eff), fmt(c.T_eff), fmt(c.eta_analytic),
                               fmt(c.eta_engine), fmt(c.stderr), fmt(q.eta_engine),
                               fmt(c.x_min)]))
    return "\n".join(lines) + "\n"


def divergence_summary(c_rows, q_rows):
    """max and mean |d eta| between each pair of engines."""
    a = np.array([r.eta_analytic for r in c_rows])
    c = np.array([r.eta_engine for r in c_rows])
    q = np.array([r.eta_engine for r in q_rows])
    out = {}
    for name, d in (("quantum-classical", q - c), ("quantum-analytic", q - a),
                    ("classical-analytic", c - a)):
        d = np.abs(d)
        out[name] = {"max": float(d.max()), "mean": float(d.mean())}
    return out


def well_table(cfg):
    lines = [WELL_HEADER]
    for U0 in cfg.U0:
        spec = base_of(cfg, U0)
        w = pot.well_analysis(spec)
        n_bs = len(pot.bohr_sommerfeld_levels(spec, w)) if w.exists else 0
        lines.append(",".join(fmt(v) for v in (
            U0, w.U_eff, w.T_eff, w.x_localmax, w.x_localmin, w.omega, w.frequency_hz,
            w.level_spacing, n_bs)))
    return "\n".join(lines) + "\n"


def versions():
    import numba
    import scipy
    import sklearn
    return {"velsel": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "scikit-learn": sklearn.__version__}


class OutputSet:
    """Files written by one run; removed again if the run aborts."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = {}

    def write(self, name, text):
        path = os.path.join(self.out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def discard(self):
        for name in self.files:
            try:
                os.remove(os.path.join(self.out_dir, name))
            except FileNotFoundError:
                pass
        self.files = {}


def execute(command, cfg, config_text, out_dir, threads=1, log=print):
    """Run ``command`` and write its outputs plus a manifest into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    outputs = OutputSet(out_dir)
    t0 = time.perf_counter()
    header = ["# velsel " + command] + ["# " + line for line in cfg.echo()]
    try:
        summary = {}
        if command == "welldepth":
            text = well_table(cfg)
            outputs.write("welldepth.csv", text)
            log(text.rstrip())
        elif command == "compare":
            c_rows, q_rows = compare_rows(cfg, threads)
            outputs.write("compare.csv", compare_csv(c_rows, q_rows))
            summary = divergence_summary(c_rows, q_rows)
            _write_densities(outputs, cfg, q_rows)
            for name, d in summary.items():
                log(f"{name}: max |d eta| = {d['max']:.4g}, mean = {d['mean']:.4g}")
        else:
            engine = {"analytic": "analytic", "quantum": "quantum"}.get(command)
            if command == "classical":
                engine = cfg.engine if cfg.engine.startswith("classical") \
                    else "classical-quasistatic"
            rows = run_rows(cfg, engine, threads)
            outputs.write("curve.csv", curve_csv(rows))
            _write_densities(outputs, cfg, rows)
            for r in rows:
                log(f"U0={r.U0:.6g} nK  U_eff={r.U_eff:.6g} nK  eta={r.eta_engine:.6g}")
        report = "\n".join(header + [f"# {k}: {json.dumps(v)}" for k, v in summary.items()])
        outputs.write("report.txt", report + "\n")
        manifest = {
            "command": command, "seed": cfg.seed, "config_text": config_text,
            "config_echo": cfg.echo(), "versions": versions(),
            "wall_time_s": time.perf_counter() - t0, "outputs": dict(outputs.files),
        }
        with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BaseException:
        outputs.discard()
        raise
    return outputs.files


def _write_densities(outputs, cfg, rows):
    grid = qsim.Grid(cfg.grid_min, cfg.grid_max, cfg.n_points)
    for i, r in enumerate(rows):
        if r.density is None:
            continue
        outputs.write(f"density_{i:03d}.txt", density_text(grid.x, r.density))
        for j, (t, rho) in enumerate(r.snapshots or []):
            outputs.write(f"density_{i:03d}_snap{j:03d}.txt", density_text(grid.x, rho))


def rerun(manifest_path, out_dir, threads=1, log=print):
    """Regenerate the outputs recorded in a manifest."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = parse_config(manifest["config_text"])
    cfg.seed = manifest["seed"]
    return execute(manifest["command"], cfg, manifest["config_text"], out_dir, threads, log)
