"""Long-time limits: evolutionary stable distributions and fluctuation benefit.

The stable state of the homogenized dynamics is a trait where the effective
fitness against itself vanishes and is simultaneously maximal in the mutant
argument.  It is located by damping the best-response map A(x) = argmax of
R_eff(., x); multiple stable states may exist, so non-convergence is a
reported status, not a failure.

For the separable families the limit has closed structure: the trait
maximizes b, the fitness ratio converges to max b, and the limit mass is the
cycle average of the F-anchored resource orbit.  Comparing that mass against
the time-averaged model quantifies the benefit of environmental fluctuation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import bisect

from . import cell
from .cell import EffectiveFitness, simpson_weights
from .errors import ConfigurationError, DomainError
from .grid import TraitGrid
from .model import GrowthModel, trait_point


@dataclass
class EsdResult:
    xbar_inf: np.ndarray
    rho_inf: float
    residuals: dict
    trace: list
    converged: bool
    iterations: int

    def as_dict(self):
        return {
            "xbar_inf": [float(v) for v in np.atleast_1d(self.xbar_inf)],
            "rho_inf": float(self.rho_inf),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }


@dataclass
class FluctuationReport:
    x_star: np.ndarray
    rho_star: float
    rho_av: float
    gap: float
    identity_residuals: tuple
    cs_slack: float
    d1_av: float
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "x_star": [float(v) for v in np.atleast_1d(self.x_star)],
            "rho_star": float(self.rho_star),
            "rho_av": float(self.rho_av),
            "gap": float(self.gap),
            "identity_residuals": [float(v) for v in self.identity_residuals],
            "cs_slack": float(self.cs_slack),
            "d1_av": float(self.d1_av),
        }


# ---------------------------------------------------------------------------
# best-response map and fixed point
# ---------------------------------------------------------------------------

def _fd_jacobian(fun, z, h):
    dim = z.size
    J = np.empty((dim, dim))
    for d in range(dim):
        e = np.zeros(dim)
        e[d] = h
        J[:, d] = (fun(z + e) - fun(z - e)) / (2.0 * h)
    return J


def a_map(ef, x, grid: TraitGrid, tol: float = 1e-8, max_newton: int = 60):
    """Best response A(x): maximizer of R_eff(., x) over the grid box.

    Grid argmax followed by Newton on the mutant gradient; on Newton
    failure the grid argmax is returned with a warning flag.
    Returns (A(x), info dict).
    """
    xv = trait_point(x, grid.dim)
    coords = grid.coords()
    vals = ef.surface(coords, xv)
    flat = int(np.argmax(vals))
    idx = np.unravel_index(flat, vals.shape)
    z = coords[idx + (slice(None),)].astype(float)

    def g(w):
        return np.asarray(ef.d1(w, xv), dtype=float)

    fd_h = max(1e-6, 0.05 * grid.h)
    converged = False
    for it in range(1, max_newton + 1):
        gz = g(z)
        if np.linalg.norm(gz, ord=np.inf) <= tol:
            converged = True
            break
        J = _fd_jacobian(g, z, fd_h)
        try:
            dz = np.linalg.solve(J, -gz)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dz)) or np.linalg.norm(dz) > 4.0 * grid.half_width:
            break
        z = z + dz
    if not converged:
        z = coords[idx + (slice(None),)].astype(float)
    info = {"converged": converged, "iterations": it,
            "grad_norm": float(np.linalg.norm(g(z), ord=np.inf))}
    return z, info


def esd_fixed_point(ef, x_init, grid: TraitGrid, gamma: float = 0.5,
                    tol: float = 1e-8, max_iter: int = 200) -> EsdResult:
    """Damped iteration x <- x + gamma (A(x) - x) toward a stable state.

    Non-convergence (the best-response map may rotate forever) returns the
    trace with converged=False rather than raising.
    """
    x = trait_point(x_init, grid.dim)
    trace = [x.copy()]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        ax, _ = a_map(ef, x, grid)
        gap = float(np.linalg.norm(ax - x, ord=np.inf))
        x = x + gamma * (ax - x)
        trace.append(x.copy())
        if not grid.contains(x):
            raise DomainError(f"fixed-point iterate left the search box at {x}")
        if hasattr(ef, "model"):
            label, _ = cell.in_x(ef.model, x)
            if label == "outside":
                raise DomainError(f"fixed-point iterate left the viability set at {x}")
        if gap <= tol:
            converged = True
            break

    ax, info = a_map(ef, x, grid)
    coords = grid.coords()
    residuals = {
        "diag_fitness": abs(ef.value(x, x)),
        "grid_max_fitness": float(np.max(ef.surface(coords, x))),
        "best_response_gap": float(np.linalg.norm(ax - x, ord=np.inf)),
    }
    if hasattr(ef, "mean_resource"):
        rho = ef.mean_resource(x) / float(ef.model.psi(x))
    else:
        rho = np.nan
    return EsdResult(xbar_inf=x, rho_inf=rho, residuals=residuals,
                     trace=trace, converged=converged, iterations=it)


# ---------------------------------------------------------------------------
# separable-family limits
# ---------------------------------------------------------------------------

def _maximize_b(model: GrowthModel, grid: TraitGrid):
    coords = grid.coords()
    bvals = model.b(coords)
    flat = np.argsort(bvals.ravel())[::-1]
    idx0 = np.unravel_index(int(flat[0]), bvals.shape)
    # assumption guard: a second grid maximum away from the first one
    top = bvals.ravel()[flat[0]]
    near_top = flat[bvals.ravel()[flat] >= top - 1e-9]
    pts = coords.reshape(-1, grid.dim)[near_top]
    if np.max(np.linalg.norm(pts - pts[0], axis=-1)) > 3.0 * grid.h:
        raise DomainError("non-unique maximizer of b detected on the grid")
    z = coords[idx0 + (slice(None),)].astype(float)
    # Newton refinement on the gradient of b (finite differences)
    hh = max(1e-7, 0.01 * grid.h)

    def gradb(w):
        out = np.empty(grid.dim)
        for d in range(grid.dim):
            e = np.zeros(grid.dim)
            e[d] = hh
            out[d] = (float(model.b(w + e)) - float(model.b(w - e))) / (2 * hh)
        return out

    for _ in range(50):
        gz = gradb(z)
        if np.linalg.norm(gz, ord=np.inf) <= 1e-10:
            break
        J = _fd_jacobian(gradb, z, hh)
        try:
            dz = np.linalg.solve(J, -gz)
        except np.linalg.LinAlgError:
            break
        if np.linalg.norm(dz) > grid.h:
            dz = dz / np.linalg.norm(dz) * grid.h
        z = z + dz
    return z


def separable_limit(model: GrowthModel, grid: Optional[TraitGrid] = None, ms: int = 2048):
    """Limit state of a separable-structure family: (x_star, F_star, rho_star)."""
    if not model.is_separable:
        raise DomainError(f"family {model.family!r} is not separable")
    if grid is None:
        grid = TraitGrid(model.validation_half_width, 257, model.dim)
    x_star = _maximize_b(model, grid)
    f_star = float(model.b(x_star))
    orbit = cell.solve_f_orbit(model, f_star, ms=ms)
    rho_star = orbit.mean / float(model.psi(x_star))
    return x_star, f_star, rho_star


def fluctuation_compare(model: GrowthModel, ms: int = 2048,
                        grid: Optional[TraitGrid] = None) -> FluctuationReport:
    """Mass under oscillation vs mass of the time-averaged model.

    Verifies the two cycle-average identities satisfied by the limit orbit
    and reports the Cauchy-Schwarz slack that controls the sign of the gap.
    """
    if model.family != "fluctuation-example":
        raise DomainError("fluctuation comparison needs the mortality-oscillation family")
    x_star, f_star, rho_star = separable_limit(model, grid=grid, ms=ms)
    orbit = cell.solve_f_orbit(model, f_star, ms=ms)
    w = simpson_weights(ms)
    s = orbit.s
    d1s = model.D1(s)
    d2I = model.D2(orbit.I)
    d1_av = float(w @ d1s)
    ident1 = float(w @ (d1s * d2I)) - f_star
    ident2 = float(w @ d2I) * f_star - float(w @ (d1s * d2I**2))

    lo = model.constants["Itilde_m"] / 2.0
    hi = 2.0 * model.constants["Itilde_M"]

    def g(rho):
        return f_star - d1_av * float(model.D2(rho))

    if g(lo) * g(hi) > 0:
        raise ConfigurationError(
            f"averaged-model root not bracketed on [{lo:.4g}, {hi:.4g}]"
        )
    rho_av = float(bisect(g, lo, hi, xtol=1e-10))
    cs_slack = d1_av * float(w @ d2I) - f_star
    return FluctuationReport(
        x_star=x_star, rho_star=rho_star, rho_av=rho_av, gap=rho_star - rho_av,
        identity_residuals=(abs(ident1), abs(ident2)), cs_slack=cs_slack, d1_av=d1_av,
        details={"F_star": f_star, "orbit_mean": orbit.mean},
    )
