"""Time integration of the incompressible flow on the torus.

The scheme is integrating-factor RK4: the viscous multiplier exp(-|xi|^2 dt)
is applied exactly, so only the dealiased, Leray-projected advection term is
integrated explicitly and the step size is limited by advection alone.
Alongside the snapshots the run accumulates the dissipation integral
int_0^t |grad u|^2 by composite trapezoid on the step grid, so every
trajectory carries its own energy ledger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, IntegrationError
from .spectral import (Grid, SpectralVelocity, _advect_same, make_grid,
                       make_initial_data, norm_l2, to_physical)


@dataclass(frozen=True)
class Trajectory:
    """Snapshots (t_i, u(t_i)) plus the running dissipation accumulator.

    max_step_defect is the largest one-step energy creation,
    max over steps of 0.5|u_new|^2 + trapezoid increment - 0.5|u_old|^2,
    clipped at zero; it bounds how far any single step strays from the
    discrete dissipation inequality.
    """

    times: list[float]
    fields: list[SpectralVelocity]
    dissipation: list[float]
    grad_sq: list[float]
    dt: float
    config_echo: dict | None = None
    max_step_defect: float = 0.0

    @property
    def u0(self) -> SpectralVelocity:
        return self.fields[0]


@dataclass(frozen=True)
class EnergyLedger:
    """Residuals r(t_i) = 0.5|u(t_i)|^2 + D(t_i) - 0.5|u0|^2."""

    times: np.ndarray
    residuals: np.ndarray
    max_abs: float


def cfl_limit(u: SpectralVelocity) -> float:
    """Advective step bound 0.5 / (k_cut * max |u|)."""
    U1, U2 = to_physical(u)
    umax = float(np.max(np.sqrt(U1 * U1 + U2 * U2)))
    return 0.5 / (u.grid.k_cut * max(umax, 1e-14))


def _step_half(grid: Grid, uh, dt: float, e_half, e_full, mask):
    """One integrating-factor RK4 step on a (2, n, hc) rfft-layout stack."""
    a = _advect_same(grid, uh * mask)
    b = _advect_same(grid, (e_half * (uh + (0.5 * dt) * a)) * mask)
    c = _advect_same(grid, (e_half * uh + (0.5 * dt) * b) * mask)
    d = _advect_same(grid, (e_full * uh + (dt * e_half) * c) * mask)
    return e_full * uh + (dt / 6.0) * (e_full * a + (2.0 * e_half) * (b + c) + d)


def _half_exponents(grid: Grid, dt: float):
    hc = grid.half_cols
    ksq = grid.k_sq[:, :hc]
    return np.exp(-0.5 * dt * ksq), np.exp(-dt * ksq)


def step(u: SpectralVelocity, dt: float, t: float | None = None) -> SpectralVelocity:
    """Advance one step of size dt > 0.

    Raises IntegrationError if the result is not finite.  The caller is
    responsible for the CFL bound (see cfl_limit); run() enforces it.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    g = u.grid
    e_half, e_full = _half_exponents(g, dt)
    mask = g.dealias[:, :g.half_cols]
    uh = np.stack([g.half(u.u1), g.half(u.u2)])
    r = _step_half(g, uh, dt, e_half, e_full, mask)
    if not np.isfinite(r).all():
        where = "" if t is None else f" at t={t!r}"
        raise IntegrationError(f"non-finite state after step{where} with dt={dt!r}")
    full1 = g.full_from_half(r[0])
    full2 = g.full_from_half(r[1])
    full1[0, 0] = 0.0
    full2[0, 0] = 0.0
    return SpectralVelocity(g, full1, full2)


def _snapshot_steps(dt: float, t_end: float, snapshot_times, n_steps: int) -> dict[int, float]:
    if snapshot_times is None:
        snapshot_times = [0.0, t_end] if t_end > 0 else [0.0]
    out: dict[int, float] = {}
    for s in snapshot_times:
        idx = round(s / dt)
        if abs(idx * dt - s) > 1e-9 * max(dt, abs(s), 1.0):
            raise ConfigurationError(
                f"snapshot time {s!r} is not an integer multiple of dt={dt!r}")
        if idx < 0 or idx > n_steps:
            raise ConfigurationError(f"snapshot time {s!r} outside [0, {t_end}]")
        out[idx] = idx * dt
    out.setdefault(0, 0.0)
    return out


def integrate(u0: SpectralVelocity, dt: float, t_end: float,
              snapshot_times=None, enforce_cfl: bool = True,
              config_echo: dict | None = None) -> Trajectory:
    """Integrate from u0 to t_end, recording snapshots and the dissipation ledger.

    Snapshot times must be integer multiples of dt (no interpolation, so the
    derivative recursion always sees exact solver states).  The CFL bound is
    checked at t = 0 and re-checked at every snapshot unless enforce_cfl is
    False.  Deterministic for fixed inputs.
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise ConfigurationError(f"t_end must be >= 0, got {t_end}")
    n_steps = round(t_end / dt)
    if abs(n_steps * dt - t_end) > 1e-9 * max(dt, t_end, 1.0):
        raise ConfigurationError(f"t_end={t_end!r} is not an integer multiple of dt={dt!r}")
    snaps = _snapshot_steps(dt, t_end, snapshot_times, n_steps)

    g = u0.grid
    e_half, e_full = _half_exponents(g, dt)
    mask = g.dealias[:, :g.half_cols]

    def check_cfl(u: SpectralVelocity, t: float) -> None:
        if not enforce_cfl:
            return
        bound = cfl_limit(u)
        if dt > bound:
            raise IntegrationError(
                f"dt={dt!r} exceeds advective stability bound {bound:.3e} at t={t!r}")

    check_cfl(u0, 0.0)
    uh = np.stack([g.half(u0.u1), g.half(u0.u2)])

    def materialize(h) -> SpectralVelocity:
        f1, f2 = g.full_from_half(h[0]), g.full_from_half(h[1])
        f1[0, 0] = 0.0
        f2[0, 0] = 0.0
        return SpectralVelocity(g, f1, f2)

    times, fields, diss, grads = [], [], [], []
    hc = g.half_cols
    ksqh = g.k_sq[:, :hc]
    col_w = np.full(hc, 2.0)
    col_w[0] = 1.0
    col_w[-1] = 1.0  # Nyquist column (zero anyway)
    gw = col_w * ksqh
    lw = col_w * np.ones_like(ksqh)
    four_pi_sq = (2.0 * np.pi) ** 2

    def weighted_sq(h, w) -> float:
        return four_pi_sq * float(np.sum(w * (h.real * h.real + h.imag * h.imag)))

    D = 0.0
    g_prev = weighted_sq(uh, gw)
    e_prev = 0.5 * weighted_sq(uh, lw)
    step_defect = 0.0
    if 0 in snaps:
        times.append(0.0)
        fields.append(u0)
        diss.append(0.0)
        grads.append(g_prev)
    for i in range(1, n_steps + 1):
        uh = _step_half(g, uh, dt, e_half, e_full, mask)
        g_new = weighted_sq(uh, gw)
        if not np.isfinite(g_new):
            raise IntegrationError(f"non-finite state at t={i * dt!r} with dt={dt!r}")
        inc = 0.5 * dt * (g_prev + g_new)
        D += inc
        e_new = 0.5 * weighted_sq(uh, lw)
        step_defect = max(step_defect, e_new + inc - e_prev)
        e_prev = e_new
        g_prev = g_new
        if i in snaps:
            u_snap = materialize(uh)
            check_cfl(u_snap, i * dt)
            times.append(i * dt)
            fields.append(u_snap)
            diss.append(D)
            grads.append(g_new)
    return Trajectory(times=times, fields=fields, dissipation=diss,
                      grad_sq=grads, dt=dt, config_echo=config_echo,
                      max_step_defect=step_defect)


def run(config) -> Trajectory:
    """Run a trajectory described by a RunConfig (see gevrey_ns.config)."""
    grid = make_grid(config.n)
    u0 = make_initial_data(grid, config.initial_data)
    return integrate(u0, dt=config.dt, t_end=config.t_end,
                     snapshot_times=config.resolved_snapshots(),
                     enforce_cfl=config.enforce_cfl,
                     config_echo=config.to_dict())


def ledger_tolerance(dt: float, tol_energy: float = 1e-7, dt_ref: float = 1e-4) -> float:
    """Energy-ledger tolerance: tol_energy at dt_ref, scaled with dt^2.

    The ledger defect is trapezoid quadrature error, second order in the
    step size, so a single base tolerance is meaningful only relative to a
    reference step.
    """
    return tol_energy * (dt / dt_ref) ** 2


def energy_ledger(traj: Trajectory) -> EnergyLedger:
    """Residual series of the discrete energy balance.

    r(t_i) = 0.5 |u(t_i)|^2 + D(t_i) - 0.5 |u0|^2, where D is the trapezoid
    dissipation accumulator; max |r| is the ledger defect.
    """
    if not traj.times:
        raise ConfigurationError("empty trajectory")
    e0 = 0.5 * norm_l2(traj.u0) ** 2
    times = np.asarray(traj.times)
    res = np.asarray([0.5 * norm_l2(u) ** 2 + d - e0
                      for u, d in zip(traj.fields, traj.dissipation)])
    return EnergyLedger(times=times, residuals=res, max_abs=float(np.max(np.abs(res))))
