"""Classical Monte Carlo selection engine.

Phase-space samples are stored as an ``(n, 2)`` float array of ``[x, v]``
rows (um, um/ms).  Two selection models are provided:

* :func:`select_quasistatic` applies the slow-sweep energy criterion to the
  initial samples directly;
* :func:`simulate_sweep` integrates every atom through the moving barrier
  with velocity Verlet and counts the atoms left bound in the final well.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from . import potential as pot
from .units import MASS_RB85


class NumericalError(RuntimeError):
    """Integrator or propagator failed a built-in stability check."""


@dataclass(frozen=True)
class SweepSchedule:
    x_start: float
    x_end: float
    speed: float       # um/ms
    dt: float          # ms
    hold_time: float = 0.0

    def __post_init__(self):
        if not self.x_end > self.x_start:
            raise ValueError("x_end must exceed x_start")
        if not self.speed > 0:
            raise ValueError("speed must be > 0")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.hold_time >= 0:
            raise ValueError("hold_time must be >= 0")

    @property
    def sweep_time(self):
        return (self.x_end - self.x_start) / self.speed

    @property
    def duration(self):
        return self.sweep_time + self.hold_time

    @property
    def n_steps(self):
        return int(math.ceil(self.duration / self.dt - 1e-9))

    def position(self, t):
        return np.minimum(self.x_start + self.speed * np.asarray(t), self.x_end)


@dataclass
class EnsembleResult:
    n_total: int
    n_selected: int
    eta: float
    stderr: float
    selected_temperature: float   # m <v^2> of the selected atoms, nK
    max_selected_energy: float    # largest selected energy above the well floor, nK
    mask: np.ndarray
    warning: str = ""
    final: np.ndarray | None = None   # phase space after the sweep (dynamic runs)


def _result(mask, v, energies, warning=""):
    n = mask.size
    k = int(mask.sum())
    eta = k / n
    if k:
        temp = float(MASS_RB85 * np.mean(v[mask] ** 2))
        e_max = float(energies[mask].max())
    else:
        temp, e_max = 0.0, 0.0
    return EnsembleResult(
        n_total=n, n_selected=k, eta=eta, stderr=math.sqrt(eta * (1 - eta) / n),
        selected_temperature=temp, max_selected_energy=e_max, mask=mask, warning=warning,
    )


def sample_cloud(cloud, n, seed):
    """Draw ``n`` atoms from the Gaussian cloud: x ~ N(0, r0^2), v ~ N(0, v0^2).

    Rows come in blocks of ``_BLOCK`` drawn from a stream keyed on
    (seed, block index), so row i depends only on (seed, i): workers that
    generate disjoint slices reproduce the serial ensemble exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return sample_block(cloud, seed, 0, n)


_BLOCK = 4096


def sample_block(cloud, seed, start, stop):
    """Rows ``start:stop`` of the ensemble :func:`sample_cloud` would draw."""
    out = np.empty((stop - start, 2))
    first, last = start // _BLOCK, (stop - 1) // _BLOCK
    for b in range(first, last + 1):
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        block = np.empty((_BLOCK, 2))
        block[:, 0] = rng.normal(0.0, cloud.r0, _BLOCK)
        block[:, 1] = rng.normal(0.0, cloud.v0, _BLOCK)
        lo, hi = max(start, b * _BLOCK), min(stop, (b + 1) * _BLOCK)
        out[lo - start:hi - start] = block[lo - b * _BLOCK:hi - b * _BLOCK]
    return out


def check_particles(particles):
    particles = np.asarray(particles, dtype=float)
    if particles.ndim != 2 or particles.shape[1] != 2:
        raise ValueError(f"particles must have shape (n, 2), got {particles.shape}")
    if not np.all(np.isfinite(particles)):
        raise ValueError("particles contain non-finite values")
    return particles


def select_quasistatic(particles, spec, well, x_start=0.0, mass=MASS_RB85):
    """Slow-sweep criterion on the initial samples.

    An atom is kept iff it starts ahead of the sweep (x > x_start) and
    g|x| + m v^2/2 < U_eff, energies counted from the trap minimum.
    """
    particles = check_particles(particles)
    x, v = particles[:, 0], particles[:, 1]
    energy = spec.gradient * np.abs(x) + 0.5 * mass * v * v
    if not well.exists:
        return _result(np.zeros(len(x), bool), v, energy,
                       warning="no well for these barrier parameters")
    mask = (x > x_start) & (energy < well.U_eff)
    return _result(mask, v, energy)


@numba.njit(cache=True, fastmath=False)
def _verlet(x, v, g, U0, w, x_start, x_end, speed, dt, n_steps, inv_m):
    inv_w2 = 1.0 / (w * w)
    n = x.shape[0]
    for i in range(n):
        xi = x[i]
        vi = v[i]
        t = 0.0
        xd = min(x_start, x_end)
        u = xi - xd
        a = -(g * np.sign(xi) - U0 * u * inv_w2 * math.exp(-0.5 * u * u * inv_w2)) * inv_m
        for k in range(n_steps):
            vi += 0.5 * dt * a
            xi += dt * vi
            t = (k + 1) * dt
            xd = min(x_start + speed * t, x_end)
            u = xi - xd
            a = -(g * np.sign(xi) - U0 * u * inv_w2 * math.exp(-0.5 * u * u * inv_w2)) * inv_m
            vi += 0.5 * dt * a
        x[i] = xi
        v[i] = vi


def integrate(particles, base, schedule, mass=MASS_RB85):
    """Velocity-Verlet trajectories through the swept barrier.

    The force at the end of each drift uses the barrier position at the end
    of the step, so each kick pairs the position and barrier at one instant.
    Returns the final ``(n, 2)`` phase-space array.
    """
    particles = check_particles(particles)
    x = np.ascontiguousarray(particles[:, 0]).copy()
    v = np.ascontiguousarray(particles[:, 1]).copy()
    _verlet(x, v, base.gradient, base.barrier_height, base.barrier_width,
            schedule.x_start, schedule.x_end, schedule.speed, schedule.dt,
            schedule.n_steps, 1.0 / mass)
    return np.column_stack([x, v])


def total_energy(spec, particles, mass=MASS_RB85):
    particles = np.asarray(particles)
    return pot.evaluate(spec, particles[:, 0]) + 0.5 * mass * particles[:, 1] ** 2


def check_step(base, schedule, mass=MASS_RB85):
    """Warn unless the largest force moves an atom only a sliver of w0 per step."""
    f_max = base.gradient + base.barrier_height / base.barrier_width * math.exp(-0.5)
    kick = f_max * schedule.dt**2 / mass
    if kick > 0.01 * base.barrier_width:
        warnings.warn(
            f"dt={schedule.dt} ms: force kick {kick:.3g} um per step is not small "
            f"against w0={base.barrier_width} um", RuntimeWarning)
    return kick


def drift_self_test(particles, base, schedule, n_probe=256, n_periods=5, mass=MASS_RB85):
    """Energy drift in the static final potential at the run's time step.

    Two probe sets: atoms at rest spread across the final well (max relative
    drift) and the first ``n_probe`` ensemble atoms (median relative drift;
    atoms crossing the |x| cusp pick up O(dt) errors individually).  Raises
    :class:`NumericalError` if either exceeds 10%.
    """
    final = base.at(schedule.x_end)
    well = pot.well_analysis(final)
    period = 2 * math.pi / well.omega if well.omega > 0 else 1.0
    duration = n_periods * period

    x_in = np.linspace(well.x_localmax, pot.outer_turning_point(final, well), 18)[1:-1]
    bound = np.column_stack([x_in, np.zeros_like(x_in)])
    probe = check_particles(particles)[:n_probe]
    drifts = []
    for pts in (bound, probe):
        end = static_run(pts, final, schedule.dt, duration, mass)
        e0 = total_energy(final, pts, mass) - well.U_min
        e1 = total_energy(final, end, mass) - well.U_min
        drifts.append(np.abs(e1 - e0) / np.maximum(np.abs(e0), 1e-12))
    worst = max(float(drifts[0].max()), float(np.median(drifts[1])))
    if worst > 0.1:
        raise NumericalError(
            f"energy drift {worst:.3g} in static self-test; reduce dt (now {schedule.dt} ms)")
    return worst


def static_run(particles, spec, dt, duration, mass=MASS_RB85):
    x = np.ascontiguousarray(particles[:, 0]).copy()
    v = np.ascontiguousarray(particles[:, 1]).copy()
    n_steps = int(math.ceil(duration / dt - 1e-9))  # roundoff must not add a step
    xd = spec.barrier_position
    _verlet(x, v, spec.gradient, spec.barrier_height, spec.barrier_width,
            xd, xd + 1.0, 0.0, dt, n_steps, 1.0 / mass)
    return np.column_stack([x, v])


def default_schedule(cloud, base, x_start=0.0, x_end=None, speed=None, dt=None,
                     hold_periods=5.0, mass=MASS_RB85):
    """Fill in unspecified sweep parameters.

    x_end defaults to x_start + 2.5 r0, speed to 0.1 v_c of the final well and
    hold_time to ``hold_periods`` oscillation periods of that well.  The
    default step resolves both the well period (1/400) and the time a
    3 v0 atom needs to cross the barrier width (1/10).
    """
    if x_end is None:
        x_end = x_start + 2.5 * cloud.r0
    well = pot.well_analysis(base.at(x_end))
    v_c = float(pot.critical_velocity(well.U_eff, mass)) if well.exists else 0.0
    if speed is None:
        speed = 0.1 * v_c if v_c > 0 else 0.1 * cloud.v0
    period = 2 * math.pi / well.omega if well.omega > 0 else 0.0
    if dt is None:
        dt = base.barrier_width / (10.0 * (3.0 * cloud.v0 + speed))
        if period > 0:
            dt = min(dt, period / 400.0)
    return SweepSchedule(x_start, x_end, speed, dt, hold_time=hold_periods * period)


def simulate_sweep(particles, base, schedule, mass=MASS_RB85, self_test=True):
    """Integrate the ensemble through the sweep and count atoms left in the well.

    After sweep and hold, an atom is selected iff it sits beyond the well's
    local maximum and its total energy is below the rim, U(x) + m v^2/2 < U_max.
    """
    particles = check_particles(particles)
    final_spec = base.at(schedule.x_end)
    well = pot.well_analysis(final_spec)
    check_step(base, schedule, mass)
    if self_test and well.exists:
        drift_self_test(particles, base, schedule, mass=mass)
    final = integrate(particles, base, schedule, mass)
    energy = total_energy(final_spec, final, mass)
    if not well.exists:
        return _result(np.zeros(len(final), bool), final[:, 1], energy,
                       warning="no well for these barrier parameters")
    mask = (final[:, 0] > well.x_localmax) & (energy < well.U_max)
    res = _result(mask, final[:, 1], energy - well.U_min)
    res.final = final
    return res


def _curve_point(args):
    U0, cloud, gradient, w0, mode, n, seed, sched_kw = args
    base = pot.PotentialSpec(gradient, U0, w0, 0.0)
    particles = sample_cloud(cloud, n, seed)
    x_start = sched_kw.get("x_start", 0.0)
    schedule = default_schedule(cloud, base, **sched_kw)
    well = pot.well_analysis(base.at(schedule.x_end))
    if mode == "quasistatic":
        res = select_quasistatic(particles, base.at(schedule.x_end), well, x_start)
    elif mode == "dynamic":
        res = simulate_sweep(particles, base, schedule) if well.exists else \
            select_quasistatic(particles, base, well, x_start)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return CurveRow(U0=U0, U_eff=well.U_eff, eta=res.eta, stderr=res.stderr,
                    x_localmin=well.x_localmin, well=well)


@dataclass
class CurveRow:
    U0: float
    U_eff: float
    eta: float
    stderr: float
    x_localmin: float
    well: pot.WellAnalysis


def efficiency_curve_classical(cloud, gradient, barrier_width, U0_list, mode="quasistatic",
                               n=100_000, seed=0, workers=1, **schedule_kw):
    """Selected fraction for each barrier height, rows ordered by U_eff.

    Each point reuses the same seeded ensemble.  ``workers > 1`` spreads the
    points over a process pool; results do not depend on the worker count.
    """
    jobs = [(float(U0), cloud, gradient, barrier_width, mode, n, seed, schedule_kw)
            for U0 in U0_list]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_curve_point, jobs))
    else:
        rows = [_curve_point(j) for j in jobs]
    return sorted(rows, key=lambda r: (r.U_eff, r.U0))
