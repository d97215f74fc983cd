"""Quantum engine: random-phase Gaussian-packet ensembles on a 1D grid.

The initial cloud is a mixture of minimum-uncertainty packets of rms width
x0 centred at x_n with Gaussian weights P_n.  Each packet (incoherent mode)
or each phase realization of the composite state (coherent mode) is
propagated with Strang splitting

    psi <- exp(-i T dt / 2hbar) exp(-i U(t + dt/2) dt / hbar) exp(-i T dt / 2hbar) psi

with the kinetic factor applied in momentum space.  Consecutive kinetic
half steps are merged inside a segment; every segment ends on a full step so
the leak monitor and snapshots see the true state.

Selection: the final-state wavefunction restricted to the well window
[x_localmax, x_turn].  ``mode="bound"`` (default) additionally projects the
window state onto the window eigenstates below the rim, which removes hot
atoms that happen to be passing through the window at t_f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft
from scipy.linalg import eigh_tridiagonal

from . import potential as pot
from .ensemble import NumericalError
from .units import HBAR, MASS_RB85, temperature_from_packet_width

INCOHERENT = "incoherent"
COHERENT = "coherent"


class BoundaryLeakError(NumericalError):
    """Population reached the grid edges."""


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two, got {n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def dx(self):
        return self.length / self.n_points

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n_points)

    def p(self, hbar=HBAR):
        """Momentum nodes in FFT order, spacing 2 pi hbar / L (nK ms / um)."""
        return 2 * math.pi * hbar * sfft.fftfreq(self.n_points, self.dx)

    def p_max(self, hbar=HBAR):
        return math.pi * hbar / self.dx

    def check_resolution(self, p_scale, factor=4.0, hbar=HBAR):
        if self.p_max(hbar) <= factor * p_scale:
            raise ValueError(
                f"grid too coarse: p_max={self.p_max(hbar):.4g} <= {factor} x {p_scale:.4g}; "
                f"use more points or a shorter box")


@dataclass
class WavepacketEnsemble:
    """Packets (incoherent) or composite realizations (coherent) on a grid.

    ``psi`` is (n_states, n_points) and ``weights`` the probability of each
    row: P_n in incoherent mode, 1/R for R coherent realizations.
    """
    grid: Grid
    psi: np.ndarray
    weights: np.ndarray
    centers: np.ndarray
    center_weights: np.ndarray
    phases: np.ndarray
    x0: float
    mode: str = INCOHERENT
    time: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_packets(self):
        return len(self.centers)

    def density(self):
        """Ensemble density sum_k w_k |psi_k|^2 in 1/um."""
        return self.weights @ (np.abs(self.psi) ** 2)

    def norms(self):
        return np.sum(np.abs(self.psi) ** 2, axis=1) * self.grid.dx

    def copy(self):
        return replace(self, psi=self.psi.copy(), diagnostics=dict(self.diagnostics))


def gaussian_packet(grid, center, x0, phase=0.0):
    """Normalized minimum-uncertainty packet exp(-(x-c)^2/4x0^2)."""
    psi = np.exp(-((grid.x - center) ** 2) / (4.0 * x0 * x0) + 1j * phase)
    return psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)


def packet_centers(r0, n_packets, sampling="stratified", rng=None):
    """Centers and weights of the ensemble.

    stratified: uniform grid over +-4 r0 with weights exp(-x^2/2r0^2).
    random: i.i.d. Normal(0, r0^2) draws with equal weights (the draw
    already carries the Gaussian envelope).
    """
    if n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    if sampling == "stratified":
        c = np.linspace(-4 * r0, 4 * r0, n_packets) if n_packets > 1 else np.zeros(1)
        w = np.exp(-c**2 / (2 * r0 * r0))
    elif sampling == "random":
        c = rng.normal(0.0, r0, n_packets)
        w = np.ones(n_packets)
    else:
        raise ValueError(f"unknown sampling {sampling!r}")
    return c, w / w.sum()


def build_ensemble(r0, x0, grid, n_packets, seed, mode=INCOHERENT, sampling="stratified",
                   n_realizations=1, mass=MASS_RB85, hbar=HBAR):
    """Random-phase packet ensemble for a cloud of rms radius r0.

    Packets must be resolved in momentum: p_max > 4 p0 with p0 = hbar/2x0.
    In coherent mode each of the ``n_realizations`` rows is a composite
    sum sqrt(P_n) e^{i phi_n} psi_n with its own phases, renormalized.
    """
    if not x0 > 0 or not r0 > 0:
        raise ValueError("x0 and r0 must be > 0")
    grid.check_resolution(hbar / (2 * x0), hbar=hbar)
    if mode not in (INCOHERENT, COHERENT):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    centers, P = packet_centers(r0, n_packets, sampling, rng)
    span = 4.0 * x0
    if centers.min() - span < grid.x_min or centers.max() + span > grid.x_max:
        raise ValueError("packet centers fall outside the grid; enlarge the grid")
    n_rows = 1 if mode == INCOHERENT else n_realizations
    phases = rng.uniform(0.0, 2 * math.pi, (n_rows, n_packets))
    packets = np.array([gaussian_packet(grid, c, x0) for c in centers])
    if mode == INCOHERENT:
        psi = packets * np.exp(1j * phases[0])[:, None]
        weights = P.copy()
    else:
        psi = (np.sqrt(P) * np.exp(1j * phases)) @ packets
        psi /= np.sqrt(np.sum(np.abs(psi) ** 2, axis=1) * grid.dx)[:, None]
        weights = np.full(n_rows, 1.0 / n_rows)
    return WavepacketEnsemble(grid, psi, weights, centers, P, phases, x0, mode)


def to_momentum(psi, grid, hbar=HBAR):
    """Continuum-normalized momentum amplitudes, sorted by p."""
    p = sfft.fftshift(grid.p(hbar))
    phase = np.exp(-1j * p * grid.x_min / hbar)
    amp = sfft.fftshift(sfft.fft(psi, axis=-1), axes=-1) * grid.dx / math.sqrt(2 * math.pi * hbar)
    return p, amp * phase


def momentum_spectrum(ens, hbar=HBAR):
    """(p, sum_k w_k |psi_k(p)|^2) with integral over p equal to the norm."""
    p, amp = to_momentum(ens.psi, ens.grid, hbar)
    return p, ens.weights @ (np.abs(amp) ** 2)


def kinetic_phase(grid, dt, mass=MASS_RB85, hbar=HBAR):
    p = grid.p(hbar)
    return np.exp(-1j * p * p / (2.0 * mass) * dt / hbar)


def split_step(psi, U, dt, grid, mass=MASS_RB85, hbar=HBAR):
    """One kinetic-potential-kinetic Strang step for potential samples U (nK)."""
    half = kinetic_phase(grid, 0.5 * dt, mass, hbar)
    psi = sfft.ifft(half * sfft.fft(psi, axis=-1), axis=-1)
    psi = psi * np.exp(-1j * U * dt / hbar)
    return sfft.ifft(half * sfft.fft(psi, axis=-1), axis=-1)


def evolve_static(psi, U, dt, n_steps, grid, mass=MASS_RB85, hbar=HBAR):
    """``n_steps`` Strang steps in a time-independent potential, half steps merged."""
    return _run_segment(psi, lambda i: U, dt, 0, n_steps, grid, mass, hbar)


def _run_segment(psi, potential_at_step, dt, i0, n, grid, mass, hbar, workers=None):
    half = kinetic_phase(grid, 0.5 * dt, mass, hbar)
    full = half * half
    psi = sfft.ifft(half * sfft.fft(psi, axis=-1, workers=workers), axis=-1, workers=workers)
    U_prev, V = None, None
    for k in range(n):
        U = potential_at_step(i0 + k)
        if U is not U_prev:
            V = np.exp(-1j * U * dt / hbar)
            U_prev = U
        psi *= V
        kin = half if k == n - 1 else full
        psi = sfft.ifft(kin * sfft.fft(psi, axis=-1, workers=workers), axis=-1, workers=workers)
    return psi


def edge_population(ens, fraction=0.02):
    """Weighted population in the outer ``fraction`` of the grid on each side."""
    m = max(1, int(ens.grid.n_points * fraction))
    rho = ens.density()
    return float((rho[:m].sum() + rho[-m:].sum()) * ens.grid.dx)


def propagate(ens, base, schedule, dt=None, check_every=1000, leak_tol=1e-6,
              snapshot_every=None, mass=MASS_RB85, hbar=HBAR, workers=None):
    """Evolve ``ens`` through the barrier sweep of ``schedule``.

    The barrier position is sampled at each step's midpoint.  Every
    ``check_every`` steps the population in the outer 2% of the grid is
    checked against ``leak_tol``.  Returns a new ensemble; snapshots of the
    density (if requested, every ``snapshot_every`` steps, rounded to a
    multiple of ``check_every``) are in ``diagnostics["snapshots"]``.
    """
    dt = schedule.dt if dt is None else dt
    if not dt > 0:
        raise ValueError("dt must be > 0")
    out = ens.copy()
    grid = ens.grid
    x = grid.x
    n_total = int(math.ceil(schedule.duration / dt - 1e-9))
    sweep_steps = int(math.floor(schedule.sweep_time / dt))
    U_end = pot.evaluate(base, x, schedule.x_end)

    def U_at(i):
        if i >= sweep_steps:
            return U_end
        return pot.evaluate(base, x, float(schedule.position((i + 0.5) * dt)))

    snaps = []
    step = max(1, int(check_every))
    if snapshot_every:
        step = min(step, int(snapshot_every))
    i = 0
    psi = out.psi
    worst = 0.0
    while i < n_total:
        n = min(step, n_total - i)
        psi = _run_segment(psi, U_at, dt, i, n, grid, mass, hbar, workers)
        i += n
        out.psi = psi
        leak = edge_population(out)
        worst = max(worst, leak)
        if not leak <= leak_tol:   # NaN counts as a leak
            raise BoundaryLeakError(
                f"edge population {leak:.3g} > {leak_tol:g} at t={i * dt:.4g} ms; "
                f"enlarge the grid (now [{grid.x_min}, {grid.x_max}] um)")
        if snapshot_every and (i % int(snapshot_every) == 0 or i == n_total):
            snaps.append((i * dt, out.density()))
    out.time = ens.time + n_total * dt
    norms = out.norms()
    out.diagnostics.update(
        n_steps=n_total, dt=dt, max_edge_population=worst,
        max_norm_error=float(np.max(np.abs(norms - 1.0))), snapshots=snaps)
    return out


@dataclass
class SelectedState:
    psi: np.ndarray          # (n_states, n_points), zero outside the window
    weights: np.ndarray
    region: tuple            # (x_lo, x_hi) in um
    mode: str
    eta_window: float
    bound_energies: np.ndarray = field(default_factory=lambda: np.array([]))


def window_region(spec, well):
    """[x_localmax, x_turn] with x_turn the outer turning point at the rim energy."""
    if not well.exists:
        raise ValueError("no well: nothing to select")
    return well.x_localmax, pot.outer_turning_point(spec, well)


def airy_length(gradient, mass=MASS_RB85, hbar=HBAR):
    """Decay length (hbar^2 / 2 m g)^(1/3) of a state's tail under a linear slope."""
    return (hbar * hbar / (2.0 * mass * gradient)) ** (1.0 / 3.0)


def bound_region(spec, well, mass=MASS_RB85, hbar=HBAR):
    """Eigenbasis domain: the window plus three Airy lengths on the outer side.

    A hard wall at the classical turning point clips the evanescent tail and
    pushes the top level up; the inner wall stays on the crest so that
    states on the barrier's inner flank do not enter the basis.
    """
    a, b = window_region(spec, well)
    return a, b + 3.0 * airy_length(spec.gradient, mass, hbar)


def window_eigenstates(grid, U, region, E_cut, mass=MASS_RB85, hbar=HBAR):
    """Eigenstates of the window Hamiltonian below ``E_cut``.

    Three-point finite differences with hard walls just outside the window.
    Returns (indices, energies, vectors) with vectors normalized so that
    sum |phi|^2 dx = 1.
    """
    idx = np.flatnonzero((grid.x >= region[0]) & (grid.x <= region[1]))
    if len(idx) < 3:
        return idx, np.array([]), np.zeros((len(idx), 0))
    t = hbar * hbar / (2.0 * mass * grid.dx**2)
    diag = 2.0 * t + U[idx]
    off = np.full(len(idx) - 1, -t)
    if U[idx].min() >= E_cut:
        return idx, np.array([]), np.zeros((len(idx), 0))
    E, vec = eigh_tridiagonal(diag, off, select="v", select_range=(-np.inf, E_cut))
    return idx, E, vec / math.sqrt(grid.dx)


def project_selected(ens, spec, well, mode="bound", region=None, mass=MASS_RB85, hbar=HBAR):
    """Select the part of the final state held by the well.

    ``mode="window"`` keeps psi on [x_localmax, x_turn]; ``mode="bound"``
    keeps only its components on eigenstates below U_max of the
    ``bound_region`` Hamiltonian.
    """
    grid = ens.grid
    region_default = region is None
    if region_default:
        region = window_region(spec, well)
    inside = (grid.x >= region[0]) & (grid.x <= region[1])
    psi_w = ens.psi * inside
    eta_window = float(ens.weights @ (np.sum(np.abs(psi_w) ** 2, axis=1) * grid.dx))
    if mode == "window":
        return SelectedState(psi_w, ens.weights, tuple(region), mode, eta_window)
    if mode != "bound":
        raise ValueError(f"unknown mode {mode!r}")
    U = pot.evaluate(spec, grid.x)
    basis = bound_region(spec, well, mass, hbar) if region_default else region
    idx, E, phi = window_eigenstates(grid, U, basis, well.U_max, mass, hbar)
    psi_b = np.zeros_like(ens.psi)
    if len(E):
        coef = ens.psi[:, idx] @ phi * grid.dx
        psi_b[:, idx] = coef @ phi.T
    return SelectedState(psi_b, ens.weights, tuple(region), mode, eta_window, E - well.U_min)


@dataclass
class QuantumResult:
    density: np.ndarray
    eta: float
    PE_s: float
    KE_s: float
    selected_region: tuple
    selected_rms_width: float
    eta_window: float = math.nan
    mode: str = "bound"
    n_bound_states: int = 0
    diagnostics: dict = field(default_factory=dict)


def selected_observables(selected, grid, U, U_min, density=None, mass=MASS_RB85, hbar=HBAR):
    """Per-atom energies and width of the selected state.

    ``U`` is the final potential sampled on the grid; PE is measured from
    ``U_min``.  Energies are NaN when eta < 1e-12.
    """
    w = selected.weights
    rho = np.abs(selected.psi) ** 2
    eta = float(w @ rho.sum(axis=1) * grid.dx)
    nan = math.nan
    PE = KE = width = nan
    if eta >= 1e-12:
        rho_s = w @ rho
        PE = float(np.sum(rho_s * (U - U_min)) * grid.dx / eta)
        p, amp = to_momentum(selected.psi, grid, hbar)
        dp = p[1] - p[0]
        KE = float(np.sum((w @ np.abs(amp) ** 2) * p * p / (2 * mass)) * dp / eta)
        mean = float(np.sum(rho_s * grid.x) * grid.dx / eta)
        width = math.sqrt(max(0.0, float(np.sum(rho_s * (grid.x - mean) ** 2) * grid.dx / eta)))
    return QuantumResult(
        density=density, eta=min(max(eta, 0.0), 1.0), PE_s=PE, KE_s=KE,
        selected_region=selected.region, selected_rms_width=width,
        eta_window=selected.eta_window, mode=selected.mode,
        n_bound_states=len(selected.bound_energies))


def ground_state(grid, U, dtau=0.01, tol=1e-12, max_steps=200000, mass=MASS_RB85, hbar=HBAR):
    """Imaginary-time relaxation to the lowest state of U (nK on the grid)."""
    p = grid.p(hbar)
    half = np.exp(-p * p / (2 * mass) * 0.5 * dtau / hbar)
    V = np.exp(-(U - U.min()) * dtau / hbar)
    i0 = int(np.argmin(U))
    psi = np.exp(-((grid.x - grid.x[i0]) ** 2)).astype(complex)
    E_old = math.inf
    for k in range(max_steps):
        psi = sfft.ifft(half * sfft.fft(psi))
        psi *= V
        psi = sfft.ifft(half * sfft.fft(psi))
        psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
        if k % 100 == 0:
            E = energy(psi, grid, U, mass, hbar)
            if abs(E - E_old) < tol * max(1.0, abs(E)):
                break
            E_old = E
    return psi


def energy(psi, grid, U, mass=MASS_RB85, hbar=HBAR):
    """<H> of a single normalized state."""
    p = grid.p(hbar)
    amp = sfft.fft(psi)
    ke = np.sum(np.abs(amp) ** 2 * p * p / (2 * mass)) / np.sum(np.abs(amp) ** 2)
    pe = np.sum(np.abs(psi) ** 2 * U) * grid.dx
    return float(ke + pe)


@dataclass(frozen=True)
class QuantumConfig:
    """Numerical defaults for wavepacket runs."""
    half_width: float = 400.0     # um
    n_points: int = 8192
    n_packets: int = 32
    dt: float = 0.01              # ms
    selection: str = "bound"
    sampling: str = "stratified"
    leak_tol: float = 1e-6
    mode: str = INCOHERENT
    n_realizations: int = 32      # phase realizations in coherent mode

    def grid(self):
        return Grid(-self.half_width, self.half_width, self.n_points)


def run_selection(r0, x0, base, schedule, config=QuantumConfig(), seed=0, workers=None,
                  snapshot_every=None, grid=None, mass=MASS_RB85, hbar=HBAR):
    """Build, propagate and select; the whole quantum pipeline for one barrier.

    Without a well nothing can be selected and the propagation is skipped.
    """
    grid = config.grid() if grid is None else grid
    final_spec = base.at(schedule.x_end)
    well = pot.well_analysis(final_spec, mass, hbar)
    T0 = float(temperature_from_packet_width(x0, mass, hbar))
    if not well.exists:
        return QuantumResult(None, 0.0, math.nan, math.nan, (math.nan, math.nan), math.nan,
                             eta_window=0.0, mode=config.selection,
                             diagnostics={"U_eff": 0.0, "level_spacing": 0.0, "T0": T0})
    grid.check_resolution(math.sqrt(2 * mass * well.U_eff), hbar=hbar)
    ens = build_ensemble(r0, x0, grid, config.n_packets, seed, mode=config.mode,
                         sampling=config.sampling, n_realizations=config.n_realizations,
                         mass=mass, hbar=hbar)
    out = propagate(ens, base, schedule, dt=config.dt, leak_tol=config.leak_tol,
                    snapshot_every=snapshot_every, mass=mass, hbar=hbar, workers=workers)
    rho = out.density()
    sel = project_selected(out, final_spec, well, config.selection, mass=mass, hbar=hbar)
    U = pot.evaluate(final_spec, grid.x)
    res = selected_observables(sel, grid, U, well.U_min, rho, mass, hbar)
    res.diagnostics = dict(out.diagnostics, U_eff=well.U_eff,
                           level_spacing=well.level_spacing, T0=T0,
                           bound_energies=sel.bound_energies)
    return res


@dataclass
class QuantumRow:
    U0: float
    U_eff: float
    T_eff: float
    x_min: float
    level_spacing: float
    result: QuantumResult


def efficiency_curve_quantum(r0, x0, gradient, barrier_width, U0_list, schedule_for,
                             config=QuantumConfig(), seed=0, workers=None, mass=MASS_RB85,
                             hbar=HBAR):
    """One propagation per barrier height; rows sorted by U_eff.

    ``schedule_for(base)`` returns the sweep schedule for a PotentialSpec so
    callers control how speed and hold scale with the well.
    """
    rows = []
    for U0 in U0_list:
        base = pot.PotentialSpec(gradient, float(U0), barrier_width)
        sched = schedule_for(base)
        well = pot.well_analysis(base.at(sched.x_end), mass, hbar)
        res = run_selection(r0, x0, base, sched, config, seed, workers, mass=mass, hbar=hbar)
        rows.append(QuantumRow(float(U0), well.U_eff, well.T_eff, well.x_localmin,
                               well.level_spacing, res))
    rows.sort(key=lambda r: (r.U_eff, r.U0))
    return rows
