"""Direct simulation of the rescaled population model in log-density variables.

The density n = exp(u / eps) spans hundreds of orders of magnitude, so the
solver advances u, which obeys

    u_t = R(x, t/eps, I(t)) + |grad u|^2 + eps * Lap u,

with the resource integral I(t) = integral of psi * exp(u/eps) evaluated by
shifted exponentials each substep (explicit coupling, lagged by one step).
The gradient term uses the monotone Godunov flux from grid.py and the time
step obeys a combined advection/diffusion monotonicity bound plus the
oscillation-resolution cap dt <= eps / substeps_per_period.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import cell
from .errors import BlowUpError, ConfigurationError, DomainError
from .grid import TraitGrid, argmax_refined, laplacian, second_diff_range, upwind_gradient_sq
from .model import GrowthModel, InitialDatum, initial_field


@dataclass
class SimHistory:
    """Uniformly sampled observable traces of one run."""

    t: np.ndarray
    I: np.ndarray
    xbar: np.ndarray       # (n, dim), sub-grid refined
    rho: np.ndarray        # I / psi(xbar)
    max_u: np.ndarray      # node maximum of u
    d2_min: np.ndarray     # second-difference range where u >= max u - 1
    d2_max: np.ndarray
    F: Optional[np.ndarray] = None  # consumption-weighted fitness ratio

    @property
    def cadence(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0


@dataclass
class SimState:
    """Field state of the direct solver; histories attach after run()."""

    u: np.ndarray
    t: float
    eps: float
    grid: TraitGrid
    history: Optional[SimHistory] = None
    dt: float = 0.0


def resource_integral(u: np.ndarray, grid: TraitGrid, eps: float, model: GrowthModel) -> float:
    """I = integral of psi * exp(u/eps) via a shifted exponential sum."""
    m = float(np.max(u))
    w = np.exp((u - m) / eps)
    total = float(np.sum(model.psi(grid.coords()) * w)) * grid.h**grid.dim
    return float(np.exp(m / eps) * total)


def fitness_ratio(u: np.ndarray, grid: TraitGrid, eps: float, model: GrowthModel) -> float:
    """F = integral(b psi n) / integral(psi n), shift-invariant form."""
    if model.b is None:
        raise DomainError(f"family {model.family!r} has no consumption-weighted ratio")
    m = float(np.max(u))
    w = model.psi(grid.coords()) * np.exp((u - m) / eps)
    return float(np.sum(model.b(grid.coords()) * w) / np.sum(w))


def _stability_dt(grid: TraitGrid, eps: float, slope_bound: float, substeps: int,
                  cfl: float) -> float:
    h = grid.h
    coef = 4.0 * grid.dim * slope_bound / h + 2.0 * grid.dim * eps / h**2
    return min(eps / substeps, cfl / coef)


def step(state: SimState, model: GrowthModel, dt: float) -> SimState:
    """One explicit substep; returns a new state (functional form for tests)."""
    grid, eps = state.grid, state.eps
    I = resource_integral(state.u, grid, eps, model)
    s = (state.t / eps) % 1.0
    H, pmax = upwind_gradient_sq(state.u, grid.h)
    coef = dt * (4.0 * grid.dim * pmax / grid.h + 2.0 * grid.dim * eps / grid.h**2)
    if coef > 1.0:
        raise ConfigurationError(
            f"CFL violation at t={state.t:.6g}: monotonicity coefficient {coef:.3f} > 1"
        )
    rate = model.rate(grid.coords(), s, I)
    u_new = state.u + dt * (rate + H + eps * laplacian(state.u, grid.h))
    if not np.all(np.isfinite(u_new)):
        raise BlowUpError(f"field became non-finite at t={state.t + dt:.6g}")
    return replace(state, u=u_new, t=state.t + dt, dt=dt)


def run(model: GrowthModel, datum: InitialDatum, grid: TraitGrid, eps: float, T: float,
        cadence: Optional[float] = None, substeps_per_period: int = 64,
        cfl: float = 0.4, record_f: Optional[bool] = None) -> SimState:
    """Integrate to time T recording observables every cadence.

    The time step is fixed up front from the initial slopes (with head room)
    and a per-step monotonicity monitor turns any violation into a
    configuration error rather than silently losing stability.
    """
    if T <= 0:
        raise ConfigurationError("horizon T must be positive")
    u, _ = initial_field(datum, grid, eps, model)
    coords = grid.coords()
    psi = model.psi(coords)
    h = grid.h

    _, p0 = upwind_gradient_sq(u, h)
    dt_stable = _stability_dt(grid, eps, 2.0 * p0 + 1.0, substeps_per_period, cfl)
    if cadence is None:
        cadence = eps / 10.0
    # snap dt to an exact divisor of the cadence: records then fall at exact
    # multiples of the requested spacing, so period-aligned averaging windows
    # cancel the fast oscillation instead of aliasing it
    every = max(1, int(np.ceil(cadence / dt_stable)))
    dt = cadence / every
    n_steps = int(np.ceil(T / dt))

    if record_f is None:
        record_f = model.is_separable
    if record_f and model.b is None:
        raise DomainError(f"family {model.family!r} has no consumption-weighted ratio")

    rec = {k: [] for k in ("t", "I", "xbar", "rho", "max_u", "d2_min", "d2_max", "F")}
    u_cur = u.copy()
    edge_cap_fail = None

    def boundary_max(field):
        if grid.dim == 1:
            return max(float(field[0]), float(field[-1]))
        return max(float(np.max(field[0])), float(np.max(field[-1])),
                   float(np.max(field[:, 0])), float(np.max(field[:, -1])))

    for k in range(n_steps + 1):
        t = k * dt
        I = resource_integral(u_cur, grid, eps, model)
        if k % every == 0 or k == n_steps:
            if not np.all(np.isfinite(u_cur)):
                raise BlowUpError(f"field became non-finite at t={t:.6g}")
            m = float(np.max(u_cur))
            if boundary_max(u_cur) > m - 20.0 * eps:
                edge_cap_fail = t
                break
            xbar, _, _ = argmax_refined(u_cur, grid)
            lo, hi = second_diff_range(u_cur, grid, u_cur >= m - 1.0)
            rec["t"].append(t)
            rec["I"].append(I)
            rec["xbar"].append(xbar)
            rec["rho"].append(I / float(model.psi(xbar)))
            rec["max_u"].append(m)
            rec["d2_min"].append(lo)
            rec["d2_max"].append(hi)
            rec["F"].append(fitness_ratio(u_cur, grid, eps, model) if record_f else np.nan)
        if k == n_steps:
            break
        s = (t / eps) % 1.0
        H, pmax = upwind_gradient_sq(u_cur, h)
        coef = dt * (4.0 * grid.dim * pmax / h + 2.0 * grid.dim * eps / h**2)
        if coef > 1.0:
            raise ConfigurationError(
                f"CFL violation at t={t:.6g}: monotonicity coefficient {coef:.3f} > 1; "
                "slopes outgrew the initial estimate"
            )
        u_cur += dt * (model.rate(coords, s, I) + H + eps * laplacian(u_cur, h))

    if edge_cap_fail is not None:
        raise ConfigurationError(
            f"domain too small: boundary value within 20*eps of the peak at t={edge_cap_fail:.6g}"
        )

    hist = SimHistory(
        t=np.asarray(rec["t"]), I=np.asarray(rec["I"]), xbar=np.asarray(rec["xbar"]),
        rho=np.asarray(rec["rho"]), max_u=np.asarray(rec["max_u"]),
        d2_min=np.asarray(rec["d2_min"]), d2_max=np.asarray(rec["d2_max"]),
        F=np.asarray(rec["F"]) if record_f else None,
    )
    return SimState(u=u_cur, t=n_steps * dt, eps=eps, grid=grid, history=hist, dt=dt)


# ---------------------------------------------------------------------------
# observable post-processing
# ---------------------------------------------------------------------------

def running_average(times: np.ndarray, values: np.ndarray, window: float) -> np.ndarray:
    """Centered moving average with truncated windows near the ends.

    Endpoint samples carry half weight (trapezoid), so a window spanning an
    integer number of oscillation periods cancels the oscillation exactly
    instead of aliasing it at the sampling cadence.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        raise ConfigurationError("need at least two samples to average")
    dt = float(times[1] - times[0])
    if window < dt:
        raise ConfigurationError(f"window {window} smaller than the sampling cadence {dt}")
    k = max(1, int(round(window / (2.0 * dt))))
    csum = np.concatenate([[0.0], np.cumsum(values)])
    n = len(values)
    idx = np.arange(n)
    lo = np.maximum(idx - k, 0)
    hi = np.minimum(idx + k, n - 1)
    inner = csum[hi + 1] - csum[lo]
    trap = inner - 0.5 * (values[lo] + values[hi])
    return trap / (hi - lo)


def oscillation_peak(times: np.ndarray, values: np.ndarray,
                     detrend_window: Optional[float] = None):
    """Dominant nonzero frequency of a uniformly sampled trace.

    Returns (peak_frequency, bin_width).  The trace is detrended (moving
    average when a window is given, otherwise the mean) and Hann-windowed
    to keep the slow envelope out of the spectrum.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 8:
        raise ConfigurationError("trace too short for a spectrum")
    dt = float(times[1] - times[0])
    if detrend_window is not None:
        sig = values - running_average(times, values, detrend_window)
    else:
        sig = values - float(np.mean(values))
    sig = sig * np.hanning(len(sig))
    amp = np.abs(np.fft.rfft(sig))
    freqs = np.fft.rfftfreq(len(sig), dt)
    j = 1 + int(np.argmax(amp[1:]))  # skip the zero-frequency bin
    return float(freqs[j]), float(freqs[1] - freqs[0])


def monotone_dips(values: np.ndarray) -> float:
    """Largest drawdown below the running maximum (0 for a monotone trace)."""
    values = np.asarray(values, dtype=float)
    return float(np.max(np.maximum.accumulate(values) - values))


def log_resource_residual(model: GrowthModel, history: SimHistory, eps: float,
                          t_lo: float, t_hi: float, ms: int = 2048) -> float:
    """sup over recorded t in [t_lo, t_hi] of |ln I(t) - ln I_orbit(xbar(t), t/eps)|.

    Orbits along the recorded trait path are warm-started sequentially.
    """
    sel = (history.t >= t_lo) & (history.t <= t_hi)
    if not np.any(sel):
        raise ConfigurationError("no records inside the residual window")
    worst = 0.0
    hint = None
    for t, I_val, xb in zip(history.t[sel], history.I[sel], history.xbar[sel]):
        orb = cell.solve_orbit(model, xb, ms=ms, seed_hint=hint)
        hint = orb.alpha
        pred = float(orb.at_phase(t / eps))
        if pred <= 0 or I_val <= 0:
            raise DomainError(f"nonpositive resource in residual at t={t}")
        worst = max(worst, abs(np.log(I_val) - np.log(pred)))
    return worst
