"""Constrained limit Hamilton-Jacobi dynamics and the canonical trait equation.

The limit field solves u_t = R_eff(x, xbar(t)) + |grad u|^2 with the fittest
trait xbar(t) recomputed each step as the sub-grid argmax of u.  Because the
effective fitness vanishes on the diagonal, the refined peak value should
stay at zero; its drift is tracked as a correctness signal and a hard
failure, never renormalized away.

The dominant trait also obeys the closed canonical equation

    dxbar/dt = (-D2 u(xbar, t))^{-1} . grad_1 R_eff(xbar, xbar),

integrated here with RK4 either against the grid Hessian (coupled mode) or
against a prescribed curvature ansatz.  A rotating-fitness construction with
an exact quadratic solution is included for regression testing; it shows the
fittest trait need not settle as t grows.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, SolverError
from .grid import TraitGrid, argmax_refined, hessian_at, upwind_gradient_sq
from .model import InitialDatum, trait_point
from . import cell


@dataclass
class HjResult:
    """Trajectory records of one constrained HJ run."""

    t: np.ndarray
    xbar: np.ndarray        # (n, dim), argmax tracker
    max_u: np.ndarray       # refined peak value (constraint drift signal)
    M: np.ndarray           # (n, dim, dim) grid Hessian at the argmax
    rho: np.ndarray         # mean orbit resource / psi at xbar (nan without orbits)
    xbar_ode: np.ndarray    # (n, dim), canonical-equation tracker
    drift_max: float
    u: np.ndarray           # final field
    grid: TraitGrid
    dt: float


def _negdef_inverse(M: np.ndarray) -> np.ndarray:
    vals = np.linalg.eigvalsh(M)
    if np.any(vals >= 0):
        raise SolverError(f"curvature matrix not negative definite: eigenvalues {vals}")
    return np.linalg.inv(-M)


def canonical_step(ef, xbar, M, dt: float, mode: str = "coupled",
                   F: Optional[Callable] = None) -> np.ndarray:
    """One RK4 step of the canonical equation.

    coupled: M is the externally supplied curvature, frozen over the step.
    ansatz:  M = -2 F(x) Id re-evaluated at every stage (exact for the
             rotating-fitness construction).
    """
    x = np.atleast_1d(np.asarray(xbar, dtype=float))

    if mode == "coupled":
        inv = _negdef_inverse(np.asarray(M, dtype=float))

        def f(z):
            return inv @ ef.d1(z, z)
    elif mode == "ansatz":
        if F is None:
            raise ConfigurationError("ansatz mode needs the curvature profile F")

        def f(z):
            fz = float(F(z))
            if fz <= 0:
                raise SolverError(f"curvature ansatz not positive at {z}")
            return ef.d1(z, z) / (2.0 * fz)
    else:
        raise ConfigurationError(f"unknown canonical mode {mode!r}")

    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def hj_run(ef, datum: InitialDatum, grid: TraitGrid, T: float, dt: Optional[float] = None,
           cadence: Optional[float] = None, s_stride: int = 8, cfl: float = 0.4,
           drift_fail: float = 1e-2, canonical_dt: Optional[float] = None,
           canonical_mode: str = "coupled", canonical_F: Optional[Callable] = None,
           space_order: int = 2, on_record: Optional[Callable] = None) -> HjResult:
    """Explicit upwind integration of the constrained limit problem.

    The gradient flux defaults to the second-order one-sided Godunov
    variant: the plain monotone flux drags the moving argmax by O(h) per
    unit time, which wrecks the long-horizon trait trajectory this module
    exists to produce.  The canonical tracker advances alongside the field
    on its own coarser RK4 grid; both trait estimates are recorded for
    cross-checking.
    """
    if T <= 0:
        raise ConfigurationError("horizon T must be positive")
    x0 = trait_point(datum.x0, grid.dim)
    if hasattr(ef, "model"):
        label, mu = cell.in_x(ef.model, x0)
        if label == "outside":
            raise DomainError(f"initial trait {x0} outside the viability set (margin {mu:.3e})")
    coords = grid.coords()
    u = datum.profile(coords)
    h = grid.h

    _, p0 = upwind_gradient_sq(u, h, order=space_order)
    if dt is None:
        dt = cfl / (4.0 * grid.dim * (2.0 * p0 + 1.0) / h)
    if cadence is None:
        cadence = max(dt, T / 4000.0)
    every = max(1, int(round(cadence / dt)))
    if canonical_dt is None:
        canonical_dt = max(dt, min(0.01, T / 100.0))
    every_ode = max(1, int(round(canonical_dt / dt)))
    n_steps = int(np.ceil(T / dt))

    rec = {k: [] for k in ("t", "xbar", "max_u", "M", "rho", "xbar_ode")}
    x_ode = x0.copy()
    drift_max = 0.0
    has_orbits = hasattr(ef, "mean_resource")
    psi = ef.model.psi if hasattr(ef, "model") else None

    for k in range(n_steps + 1):
        t = k * dt
        xbar, peak, idx = argmax_refined(u, grid)
        M = hessian_at(u, grid, idx)
        drift_max = max(drift_max, abs(peak))
        if drift_max > drift_fail:
            raise SolverError(
                f"constraint drift |max u| = {drift_max:.3e} exceeded {drift_fail:.1e} "
                f"at t={t:.6g}: broken effective fitness or too-coarse grid"
            )
        if k % every == 0 or k == n_steps:
            rec["t"].append(t)
            rec["xbar"].append(xbar)
            rec["max_u"].append(peak)
            rec["M"].append(M)
            if has_orbits:
                rec["rho"].append(ef.mean_resource(xbar) / float(psi(xbar)))
            else:
                rec["rho"].append(np.nan)
            rec["xbar_ode"].append(x_ode.copy())
            if on_record is not None:
                on_record(t, u)
        if k == n_steps:
            break
        H, pmax = upwind_gradient_sq(u, h, order=space_order)
        if dt * 4.0 * grid.dim * pmax / h > 1.0:
            raise ConfigurationError(
                f"CFL violation at t={t:.6g}: slopes outgrew the time-step budget"
            )
        u += dt * (ef.surface(coords, xbar, s_stride=s_stride) + H)
        if not np.all(np.isfinite(u)):
            raise SolverError(f"field became non-finite at t={t + dt:.6g}")
        if k % every_ode == 0:
            x_ode = canonical_step(ef, x_ode, M, every_ode * dt,
                                   mode=canonical_mode, F=canonical_F)

    return HjResult(
        t=np.asarray(rec["t"]), xbar=np.asarray(rec["xbar"]),
        max_u=np.asarray(rec["max_u"]), M=np.asarray(rec["M"]),
        rho=np.asarray(rec["rho"]), xbar_ode=np.asarray(rec["xbar_ode"]),
        drift_max=drift_max, u=u, grid=grid, dt=dt,
    )


# ---------------------------------------------------------------------------
# rotating-fitness construction with an exact solution
# ---------------------------------------------------------------------------

class CounterexampleFitness:
    """Closed-form effective fitness

        R(x, y) = -(DF(y).G(y) + 4 F(y)^2) |x - y|^2 + 2 F(y) G(y).(x - y)

    built from a positive profile F and a vector field G whose flow carries
    the fittest trait.  Vanishes at x = y, is concave in x whenever
    DF.G + 4 F^2 > 0, and u(x, t) = -F(xbar(t)) |x - xbar(t)|^2 solves the
    constrained problem exactly with dxbar/dt = G(xbar).
    """

    def __init__(self, F: Callable, G: Callable, dF: Optional[Callable] = None, dim: int = 2):
        self.F = F
        self.G = G
        self.dim = dim
        if dF is None:
            def dF(y, _h=1e-6):
                y = np.asarray(y, dtype=float)
                out = np.empty(dim)
                for d in range(dim):
                    e = np.zeros(dim)
                    e[d] = _h
                    out[d] = (float(F(y + e)) - float(F(y - e))) / (2 * _h)
                return out
        self.dF = dF

    def _coeffs(self, y):
        y = np.asarray(y, dtype=float)
        fy = float(self.F(y))
        gy = np.asarray(self.G(y), dtype=float)
        quad = float(np.dot(self.dF(y), gy)) + 4.0 * fy * fy
        return quad, 2.0 * fy * gy

    def value(self, x, y) -> float:
        quad, lin = self._coeffs(y)
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return float(-quad * np.dot(d, d) + np.dot(lin, d))

    def surface(self, X, y, s_stride: Optional[int] = None) -> np.ndarray:
        quad, lin = self._coeffs(y)
        d = np.asarray(X, dtype=float) - np.asarray(y, dtype=float)
        return -quad * np.sum(d * d, axis=-1) + d @ lin

    def d1(self, x, y) -> np.ndarray:
        quad, lin = self._coeffs(y)
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return -2.0 * quad * d + lin

    def hessian1(self, y) -> np.ndarray:
        quad, _ = self._coeffs(y)
        return -2.0 * quad * np.eye(self.dim)


def counterexample_fitness(F: Callable, G: Callable, dF: Optional[Callable] = None,
                           dim: int = 2) -> CounterexampleFitness:
    return CounterexampleFitness(F, G, dF=dF, dim=dim)


def rotation_counterexample():
    """The standard instance: F = 1, G = (-x2, x1), unit-circle trait orbit.

    Returns (fitness, exact_xbar(t), exact_u(x, t)) for the start (1, 0).
    """
    def F(y):
        return 1.0

    def G(y):
        y = np.asarray(y, dtype=float)
        return np.array([-y[1], y[0]])

    def dF(y):
        return np.zeros(2)

    ef = CounterexampleFitness(F, G, dF=dF, dim=2)

    def exact_xbar(t):
        return np.array([np.cos(t), np.sin(t)])

    def exact_u(coords, t):
        d = np.asarray(coords, dtype=float) - exact_xbar(t)
        return -np.sum(d * d, axis=-1)

    return ef, exact_xbar, exact_u


def period_estimate(result: HjResult) -> float:
    """Return time of closest return to the initial trait in the second half."""
    x0 = result.xbar[0]
    sel = result.t > 0.5 * result.t[-1]
    dist = np.linalg.norm(result.xbar[sel] - x0, axis=-1)
    return float(result.t[sel][int(np.argmin(dist))])
