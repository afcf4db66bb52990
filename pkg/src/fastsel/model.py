"""Growth-rate model families, uptake, initial data and assumption validation.

A GrowthModel bundles the per-capita growth rate R(x, s, I) of trait x at
phase s of the fast environmental cycle under total resource consumption I,
together with the uptake coefficient psi and the analytic derivatives the
solvers want.  Rates are 1-periodic in s.

Shipped families
----------------
figure1            R = (2 + sin 2 pi s)(2 - x^2)/(I + 0.5) - 0.5
concave-quadratic  R = (2 + sin 2 pi s)(a - |x|^2)/(I + gamma) - delta
separable          R = b(x) B(s, I) - D(s, I), b = b0 - |x - xb|^2,
                   B = (1 + aB sin 2 pi s)/(1 + I),
                   D = d0 (1 + aD sin 2 pi s)(1 + I)
fluctuation        R = b(x) - D1(s) D2(I), D1 = 1 + a sin 2 pi s,
                   D2(I) = I or I^p with p < 1
custom             caller-supplied callables

Each preset also exposes scalar kernels (module-level functions taking a
packed parameter vector) that the cell-problem integrator can JIT-compile.
All closures are over plain floats, so models are immutable and safe to
share between workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, ModelDefinitionError
from .grid import TraitGrid

TAU = 2.0 * np.pi


def trait_point(x, dim: int) -> np.ndarray:
    """Coerce a scalar or sequence to a finite trait vector of length dim."""
    arr = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if arr.size != dim:
        raise ConfigurationError(f"trait point has {arr.size} coords, model has dim {dim}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"non-finite trait point {arr}")
    return arr


# ---------------------------------------------------------------------------
# scalar kernels (JIT-compilable: plain loops and numpy scalar math only)
# ---------------------------------------------------------------------------

def _kern_concave_quad(x, s, I, p):
    # p = [a, gamma, delta]
    s = np.mod(s, 1.0)
    sq = 0.0
    for d in range(x.shape[0]):
        sq += x[d] * x[d]
    return (2.0 + np.sin(TAU * s)) * (p[0] - sq) / (I + p[1]) - p[2]


def _kern_concave_quad_di(x, s, I, p):
    s = np.mod(s, 1.0)
    sq = 0.0
    for d in range(x.shape[0]):
        sq += x[d] * x[d]
    return -(2.0 + np.sin(TAU * s)) * (p[0] - sq) / (I + p[1]) ** 2


def _kern_separable(x, s, I, p):
    # p = [b0, aB, aD, d0, xb...]
    osc = np.sin(TAU * np.mod(s, 1.0))
    b = p[0]
    for d in range(x.shape[0]):
        diff = x[d] - p[4 + d]
        b -= diff * diff
    return b * (1.0 + p[1] * osc) / (1.0 + I) - p[3] * (1.0 + p[2] * osc) * (1.0 + I)


def _kern_separable_di(x, s, I, p):
    osc = np.sin(TAU * np.mod(s, 1.0))
    b = p[0]
    for d in range(x.shape[0]):
        diff = x[d] - p[4 + d]
        b -= diff * diff
    return -b * (1.0 + p[1] * osc) / (1.0 + I) ** 2 - p[3] * (1.0 + p[2] * osc)


def _kern_separable_f(f, s, I, p):
    # anchor f = [F]; same p layout as _kern_separable
    osc = np.sin(TAU * np.mod(s, 1.0))
    return f[0] * (1.0 + p[1] * osc) / (1.0 + I) - p[3] * (1.0 + p[2] * osc) * (1.0 + I)


def _kern_fluct(x, s, I, p):
    # p = [b0, a, pexp, xb...]
    b = p[0]
    for d in range(x.shape[0]):
        diff = x[d] - p[3 + d]
        b -= diff * diff
    return b - (1.0 + p[1] * np.sin(TAU * np.mod(s, 1.0))) * I ** p[2]


def _kern_fluct_di(x, s, I, p):
    if p[2] == 1.0:
        d2p = 1.0
    else:
        d2p = p[2] * I ** (p[2] - 1.0)
    return -(1.0 + p[1] * np.sin(TAU * np.mod(s, 1.0))) * d2p


def _kern_fluct_f(f, s, I, p):
    return f[0] - (1.0 + p[1] * np.sin(TAU * np.mod(s, 1.0))) * I ** p[2]


# ---------------------------------------------------------------------------
# model container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthModel:
    """Immutable growth-rate model; all callables are pure.

    rate/rate_dx/rate_dI take x with trailing trait axis (..., dim) and
    s, I broadcastable against the leading shape.  rate_dx returns an
    array with a trailing (dim,) axis.
    """

    dim: int
    family: str
    rate: Callable
    rate_dx: Callable
    rate_dI: Callable
    psi: Callable
    psi_bounds: tuple
    constants: dict = field(default_factory=dict)
    validation_half_width: float = 2.0
    name: str = ""
    # scalar kernels for the sequential cell-problem integrator
    kernel: Optional[Callable] = None
    kernel_dI: Optional[Callable] = None
    kernel_params: Optional[np.ndarray] = None
    # structure of separable-type families
    b: Optional[Callable] = None
    B: Optional[Callable] = None
    D: Optional[Callable] = None
    D1: Optional[Callable] = None
    D2: Optional[Callable] = None
    D2_dI: Optional[Callable] = None
    f_kernel: Optional[Callable] = None
    f_kernel_dI: Optional[Callable] = None
    # optional tensor decomposition R = sum_j c_j(x) * phi_j(s, I); lets the
    # effective-fitness surface collapse the trait-grid quadrature into a
    # handful of scalar cycle averages
    rate_terms: Optional[tuple] = None

    @property
    def is_separable(self) -> bool:
        return self.family in ("separable", "fluctuation-example")


def eval_rate(model: GrowthModel, x, s, I) -> float:
    """R(x, s mod 1, I) with contract checks; deterministic scalar path."""
    xv = trait_point(x, model.dim)
    if I < 0:
        raise ConfigurationError(f"resource must be nonnegative, got {I}")
    val = float(model.rate(xv, float(s) % 1.0, float(I)))
    if not np.isfinite(val):
        raise ModelDefinitionError(f"rate returned {val} at x={xv}, s={s}, I={I}")
    return val


def _psi_const(value=1.0):
    def psi(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], value) if x.ndim > 1 else np.asarray(value, dtype=float)

    return psi


def _sumsq(x):
    return np.sum(np.square(np.asarray(x, dtype=float)), axis=-1)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def concave_quadratic_model(a=2.0, gamma=0.5, delta=0.5, dim=1, family="concave-quadratic",
                            name=None) -> GrowthModel:
    if a <= 0 or gamma <= 0 or delta <= 0:
        raise ConfigurationError("concave-quadratic needs a, gamma, delta > 0")
    i_max = 3.0 * a / delta - gamma  # zero level of max_{x,s} R
    if i_max <= 0:
        raise ConfigurationError("parameters give no positive saturation resource")
    # assumption box: keep a - |x|^2 bounded away from 0 so D_I R stays negative
    vhw = np.sqrt(a) * 0.85 / np.sqrt(dim)

    def rate(x, s, I):
        return (2.0 + np.sin(TAU * np.mod(np.asarray(s), 1.0))) * (a - _sumsq(x)) / (np.asarray(I) + gamma) - delta

    def rate_dx(x, s, I):
        x = np.asarray(x, dtype=float)
        coef = -2.0 * (2.0 + np.sin(TAU * np.mod(np.asarray(s), 1.0))) / (np.asarray(I) + gamma)
        return np.asarray(coef)[..., None] * x

    def rate_dI(x, s, I):
        return -(2.0 + np.sin(TAU * np.mod(np.asarray(s), 1.0))) * (a - _sumsq(x)) / (np.asarray(I) + gamma) ** 2

    k1 = 6.0 / gamma
    k2 = 2.0 / (i_max + gamma)
    consts = {
        "I_M": i_max,
        "K1": k1,
        "K2": k2,
        "K5": 3.0 * a / gamma**2,
        "K6": (a - dim * vhw**2) / (i_max + gamma) ** 2,
    }
    terms = (
        (lambda x: a - _sumsq(x),
         lambda s, I: (2.0 + np.sin(TAU * np.mod(np.asarray(s), 1.0))) / (np.asarray(I) + gamma)),
        (lambda x: np.ones(np.asarray(x).shape[:-1]),
         lambda s, I: np.broadcast_to(-delta, np.broadcast(np.asarray(s), np.asarray(I)).shape)),
    )
    return GrowthModel(
        dim=dim, family=family, rate=rate, rate_dx=rate_dx, rate_dI=rate_dI,
        psi=_psi_const(), psi_bounds=(1.0, 1.0), constants=consts,
        validation_half_width=float(vhw), name=name or family,
        kernel=_kern_concave_quad, kernel_dI=_kern_concave_quad_di,
        kernel_params=np.array([a, gamma, delta]), rate_terms=terms,
    )


def figure1_model() -> GrowthModel:
    """The 1-d showcase rate (2 + sin 2 pi s)(2 - x^2)/(I + 0.5) - 0.5."""
    return concave_quadratic_model(a=2.0, gamma=0.5, delta=0.5, dim=1,
                                   family="figure1", name="figure1")


def separable_model(b0=2.0, xb=0.0, aB=0.3, aD=0.5, d0=1.0, dim=1, name=None) -> GrowthModel:
    if not (0 <= aB < 1 and 0 <= aD < 1):
        raise ConfigurationError("oscillation amplitudes must lie in [0, 1)")
    if d0 <= 0 or b0 <= 0:
        raise ConfigurationError("separable needs b0, d0 > 0")
    xbv = trait_point(xb, dim)
    # assumption box: the weakest trait must still grow at zero resource in
    # the worst phase, min_x b > d0 (1 + aD)/(1 + aB), or no floor resource
    # level exists
    b_floor = 1.1 * d0 * (1.0 + aD) / (1.0 + aB)
    if b_floor >= b0:
        raise ConfigurationError("mortality dominates growth everywhere; no viable trait box")
    off = float(np.max(np.abs(xbv)))
    vhw = min(np.sqrt(b0) * 0.7 / np.sqrt(dim),
              np.sqrt((b0 - b_floor) / dim) - off)
    if vhw <= off:
        raise ConfigurationError("growth peak too close to the edge of the viable trait box")

    def b_fn(x):
        return b0 - _sumsq(np.asarray(x, dtype=float) - xbv)

    def B_fn(s, I):
        return (1.0 + aB * np.sin(TAU * np.mod(np.asarray(s), 1.0))) / (1.0 + np.asarray(I))

    def D_fn(s, I):
        return d0 * (1.0 + aD * np.sin(TAU * np.mod(np.asarray(s), 1.0))) * (1.0 + np.asarray(I))

    def rate(x, s, I):
        return b_fn(x) * B_fn(s, I) - D_fn(s, I)

    def rate_dx(x, s, I):
        x = np.asarray(x, dtype=float)
        return np.asarray(-2.0 * B_fn(s, I))[..., None] * (x - xbv)

    def rate_dI(x, s, I):
        osc = np.sin(TAU * np.mod(np.asarray(s), 1.0))
        return -b_fn(x) * (1.0 + aB * osc) / (1.0 + np.asarray(I)) ** 2 - d0 * (1.0 + aD * osc)

    corners = b0 - dim * (vhw + np.max(np.abs(xbv))) ** 2
    b_m = max(corners, 1e-12)
    params = np.concatenate([[b0, aB, aD, d0], xbv])
    consts = {"b_m": float(b_m), "b_M": float(b0)}
    consts.update(_separable_resource_levels(b_m, b0, B_fn, D_fn))
    consts["a1"] = (1.0 - aB) / (1.0 + 2.0 * consts["Itilde_M"]) ** 2 * b_m * 0.99
    consts["a2"] = d0 * (1.0 - aD) * 0.99
    terms = (
        (b_fn, B_fn),
        (lambda x: np.ones(np.asarray(x).shape[:-1]), lambda s, I: -D_fn(s, I)),
    )
    return GrowthModel(
        dim=dim, family="separable", rate=rate, rate_dx=rate_dx, rate_dI=rate_dI,
        psi=_psi_const(), psi_bounds=(1.0, 1.0), constants=consts,
        validation_half_width=float(vhw), name=name or "separable",
        kernel=_kern_separable, kernel_dI=_kern_separable_di, kernel_params=params,
        b=b_fn, B=B_fn, D=D_fn,
        f_kernel=_kern_separable_f, f_kernel_dI=_kern_separable_di_f_wrap(params),
        rate_terms=terms,
    )


def _kern_separable_di_f_wrap(params):
    # D_I of the F-anchored phase rate; b is replaced by F in the B term
    def kern(f, s, I, p):
        osc = np.sin(TAU * np.mod(s, 1.0))
        return -f[0] * (1.0 + p[1] * osc) / (1.0 + I) ** 2 - p[3] * (1.0 + p[2] * osc)

    return kern


def _separable_resource_levels(b_m, b_M, B_fn, D_fn):
    """Solve max_{s,x} R(x,s,I) = 0 and min_{s,x} R(x,s,I) = 0 for I."""
    from scipy.optimize import brentq

    s = np.linspace(0.0, 1.0, 257)

    def top(I):
        return float(np.max(b_M * B_fn(s, I) - D_fn(s, I)))

    def bot(I):
        return float(np.min(b_m * B_fn(s, I) - D_fn(s, I)))

    hi = 1.0
    while top(hi) > 0:
        hi *= 2.0
        if hi > 1e8:
            raise ConfigurationError("no finite saturation resource for separable model")
    i_M = brentq(top, 1e-12, hi, xtol=1e-12)
    lo = i_M
    while bot(lo) < 0 and lo > 1e-14:
        lo *= 0.5
    if bot(lo) < 0:
        raise ConfigurationError("no positive floor resource for separable model")
    i_m = brentq(bot, lo, i_M, xtol=1e-14)
    return {"Itilde_m": float(i_m), "Itilde_M": float(i_M)}


def fluctuation_model(b0=2.0, xb=0.0, a=0.8, power=1.0, dim=1, name=None) -> GrowthModel:
    """Rate b(x) - D1(s) D2(I) with D1 = 1 + a sin 2 pi s and D2(I) = I**power."""
    if not 0 <= a < 1:
        raise ConfigurationError("D1 amplitude must lie in [0, 1)")
    if not 0 < power <= 1:
        raise ConfigurationError("D2 exponent must lie in (0, 1]")
    xbv = trait_point(xb, dim)
    vhw = np.sqrt(b0) * 0.7 / np.sqrt(dim)

    def b_fn(x):
        return b0 - _sumsq(np.asarray(x, dtype=float) - xbv)

    def D1_fn(s):
        return 1.0 + a * np.sin(TAU * np.mod(np.asarray(s), 1.0))

    def D2_fn(I):
        I = np.asarray(I, dtype=float)
        return I if power == 1.0 else I**power

    def D2_dI_fn(I):
        I = np.asarray(I, dtype=float)
        return np.ones_like(I) if power == 1.0 else power * I ** (power - 1.0)

    def D_fn(s, I):
        return D1_fn(s) * D2_fn(I)

    def rate(x, s, I):
        return b_fn(x) - D_fn(s, I)

    def rate_dx(x, s, I):
        x = np.asarray(x, dtype=float)
        lead = np.broadcast(np.asarray(s), np.asarray(I)).shape
        coef = np.full(lead, -2.0) if lead else np.asarray(-2.0)
        return np.asarray(coef)[..., None] * (x - xbv)

    def rate_dI(x, s, I):
        return -D1_fn(s) * D2_dI_fn(I)

    corners = b0 - dim * (vhw + np.max(np.abs(xbv))) ** 2
    b_m = max(corners, 1e-12)
    i_M = (b0 / (1.0 - a)) ** (1.0 / power)
    i_m = (b_m / (1.0 + a)) ** (1.0 / power)
    params = np.concatenate([[b0, a, power], xbv])
    consts = {
        "b_m": float(b_m), "b_M": float(b0),
        "Itilde_m": float(i_m), "Itilde_M": float(i_M),
        "a2": float((1.0 - a) * np.min(D2_dI_fn(np.array([i_m / 2, 2 * i_M])))),
    }
    terms = (
        (b_fn, lambda s, I: np.ones(np.broadcast(np.asarray(s), np.asarray(I)).shape)),
        (lambda x: np.ones(np.asarray(x).shape[:-1]), lambda s, I: -D_fn(s, I)),
    )
    return GrowthModel(
        dim=dim, family="fluctuation-example", rate=rate, rate_dx=rate_dx, rate_dI=rate_dI,
        psi=_psi_const(), psi_bounds=(1.0, 1.0), constants=consts,
        validation_half_width=float(vhw), name=name or "fluctuation-example",
        kernel=_kern_fluct, kernel_dI=_kern_fluct_di, kernel_params=params,
        b=b_fn, D=D_fn, D1=D1_fn, D2=D2_fn, D2_dI=D2_dI_fn,
        f_kernel=_kern_fluct_f, rate_terms=terms,
    )


def custom_model(rate, dim=1, rate_dx=None, rate_dI=None, psi=None, psi_bounds=(1.0, 1.0),
                 constants=None, validation_half_width=2.0, name="custom",
                 kernel=None, kernel_dI=None, kernel_params=None) -> GrowthModel:
    """Wrap caller-supplied callables; missing derivatives fall back to
    central finite differences with relative step 1e-5."""
    if rate_dx is None:
        rate_dx = _fd_dx(rate, dim)
    if rate_dI is None:
        rate_dI = _fd_dI(rate)
    return GrowthModel(
        dim=dim, family="custom", rate=rate, rate_dx=rate_dx, rate_dI=rate_dI,
        psi=psi or _psi_const(), psi_bounds=psi_bounds, constants=constants or {},
        validation_half_width=validation_half_width, name=name,
        kernel=kernel, kernel_dI=kernel_dI,
        kernel_params=None if kernel_params is None else np.asarray(kernel_params, dtype=float),
    )


def _fd_dx(rate, dim, rel=1e-5):
    def dx(x, s, I):
        x = np.asarray(x, dtype=float)
        out = []
        for d in range(dim):
            h = rel * max(1.0, abs(float(np.take(x, d, axis=-1).flat[0])))
            e = np.zeros(dim)
            e[d] = h
            out.append((rate(x + e, s, I) - rate(x - e, s, I)) / (2 * h))
        return np.stack(np.broadcast_arrays(*out), axis=-1)

    return dx


def _fd_dI(rate, rel=1e-5):
    def dI(x, s, I):
        h = rel * max(1.0, abs(float(np.asarray(I).flat[0])))
        return (rate(x, s, np.asarray(I) + h) - rate(x, s, np.maximum(np.asarray(I) - h, 0.0))) / (
            2 * h if np.all(np.asarray(I) >= h) else h
        )

    return dI


PRESETS = {
    "figure1": figure1_model,
    "concave-quadratic": concave_quadratic_model,
    "separable": separable_model,
    "fluctuation-example": fluctuation_model,
}


def make_preset(name: str, **params) -> GrowthModel:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](**params)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialDatum:
    """Concentrated concave-quadratic initial state -L|x - x0|^2 + c.

    The additive constant c is fixed per grid and epsilon so the initial
    resource integral hits rho0 * psi(x0).
    """

    x0: np.ndarray
    L: float
    rho0: float

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if self.L <= 0 or self.rho0 <= 0:
            raise ConfigurationError("InitialDatum needs L > 0 and rho0 > 0")

    def profile(self, coords: np.ndarray) -> np.ndarray:
        return -self.L * np.sum(np.square(coords - self.x0), axis=-1)


def initial_field(datum: InitialDatum, grid: TraitGrid, eps: float, model: GrowthModel):
    """u0 on the grid, normalized so the discrete resource equals
    rho0 * psi(x0) to 1e-8 relative.  Returns (u0, c)."""
    if eps <= 0:
        raise ConfigurationError("eps must be positive")
    if datum.x0.size != grid.dim:
        raise ConfigurationError("initial center dimension does not match grid")
    if not grid.contains(datum.x0, margin=grid.h):
        raise ConfigurationError("grid does not cover the initial center")
    coords = grid.coords()
    base = datum.profile(coords)
    target = datum.rho0 * float(model.psi(datum.x0))
    weights = model.psi(coords) * np.exp(base / eps)
    s = float(np.sum(weights)) * grid.h**grid.dim
    if not np.isfinite(s) or s <= 0.0:
        raise ConfigurationError("initial mass target unattainable on this grid")
    c = eps * np.log(target / s)
    u0 = base + c
    # far-field containment: the boundary must sit well below the peak
    edge_gap = datum.L * (grid.half_width - float(np.max(np.abs(datum.x0)))) ** 2
    if edge_gap < 20.0 * eps:
        raise ConfigurationError(
            f"domain too small: boundary only {edge_gap:.3g} below the peak, need {20 * eps:.3g}"
        )
    i0 = target
    lo, hi = _resource_bounds(model)
    if lo is not None and not (lo <= i0 <= hi):
        raise ConfigurationError(
            f"initial resource {i0:.3g} outside the admissible band [{lo:.3g}, {hi:.3g}]"
        )
    return u0, float(c)


def _resource_bounds(model: GrowthModel):
    c = model.constants
    if model.is_separable and "Itilde_m" in c:
        return c["Itilde_m"], c["Itilde_M"]
    if "I_M" in c:
        return 0.0, c["I_M"]
    return None, None


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------

@dataclass
class AssumptionCheck:
    name: str
    applicable: bool
    passed: bool
    margin: float = np.nan
    location: Optional[tuple] = None
    note: str = ""

    def as_dict(self):
        return {
            "name": self.name,
            "applicable": self.applicable,
            "passed": bool(self.passed),
            "margin": None if np.isnan(self.margin) else float(self.margin),
            "location": None if self.location is None else [float(v) for v in self.location],
            "note": self.note,
        }


@dataclass
class ValidationReport:
    model: str
    family: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.applicable)

    def check(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {
            "model": self.model,
            "family": self.family,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


def _sample_axes(model, half_width, nx, ns, ni, i_max):
    ax = np.linspace(-half_width, half_width, nx)
    if model.dim == 1:
        X = ax[:, None]
    else:
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        X = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    s = np.linspace(0.0, 1.0, ns, endpoint=False)
    I = np.linspace(0.0, i_max, ni)
    return X, s, I


def validate_assumptions(model: GrowthModel, datum: Optional[InitialDatum] = None,
                         half_width: Optional[float] = None, nx: int = 101,
                         ns: int = 64, ni: int = 25, tol: float = 1e-7) -> ValidationReport:
    """Sampled pass/fail report for the standing assumptions of the model
    family on the validation box.  Failures are report entries, never
    exceptions."""
    hw = float(half_width if half_width is not None else model.validation_half_width)
    consts = model.constants
    checks = []

    i_top = consts.get("I_M", consts.get("Itilde_M", 1.0))
    X, s_grid, I_grid = _sample_axes(model, hw, nx if model.dim == 1 else 33, ns, ni, i_top)
    Xs = X[:, None, :]  # broadcast trait x phase

    # viability: some trait has positive cycle-averaged growth at I = 0
    mu = np.mean(model.rate(Xs, s_grid[None, :], 0.0), axis=-1)
    k = int(np.argmax(mu))
    checks.append(AssumptionCheck(
        "X_nonempty", True, bool(mu[k] > 0.0), float(mu[k]), tuple(X[k]),
        note="max over sampled traits of the cycle-averaged growth at zero resource",
    ))

    # saturation level: R(x, s, I_top) <= 0 everywhere, with the level attained
    r_top = model.rate(Xs, s_grid[None, :], i_top)
    m_top = float(np.max(r_top))
    checks.append(AssumptionCheck(
        "saturation_level", "I_M" in consts or "Itilde_M" in consts,
        m_top <= 1e-3 and m_top >= -0.5, m_top,
        note=f"max R at saturation resource {i_top:.6g}",
    ))

    concave = model.family in ("figure1", "concave-quadratic")
    if concave:
        # trait concavity band via second differences
        hstep = 1e-3 * hw
        r0 = model.rate(Xs[..., None, :], s_grid[None, :, None], I_grid[None, None, :])
        worst_lo, worst_hi = np.inf, -np.inf
        for d in range(model.dim):
            e = np.zeros(model.dim)
            e[d] = hstep
            rp = model.rate((X + e)[:, None, None, :], s_grid[None, :, None], I_grid[None, None, :])
            rm = model.rate((X - e)[:, None, None, :], s_grid[None, :, None], I_grid[None, None, :])
            d2 = (rp - 2.0 * r0 + rm) / hstep**2
            worst_lo = min(worst_lo, float(np.min(d2)))
            worst_hi = max(worst_hi, float(np.max(d2)))
        k1, k2 = consts.get("K1"), consts.get("K2")
        ok = worst_hi < 0.0
        if k1 is not None:
            ok = ok and worst_lo >= -k1 - tol * k1 and worst_hi <= -k2 + tol * max(k2, 1.0)
        checks.append(AssumptionCheck(
            "trait_concavity", True, ok, worst_hi,
            note=f"sampled D2_x R in [{worst_lo:.4g}, {worst_hi:.4g}]"
                 + (f", declared band [-{k1:.4g}, -{k2:.4g}]" if k1 else ""),
        ))

        # resource monotonicity band
        di = model.rate_dI(Xs[..., None, :], s_grid[None, :, None], I_grid[None, None, :])
        di_max, di_min = float(np.max(di)), float(np.min(di))
        k5, k6 = consts.get("K5"), consts.get("K6")
        ok = di_max < 0.0
        if k5 is not None:
            ok = ok and di_min >= -k5 * (1 + tol) and di_max <= -k6 * (1 - tol)
        checks.append(AssumptionCheck(
            "resource_monotonicity", True, ok, di_max,
            note=f"sampled D_I R in [{di_min:.4g}, {di_max:.4g}]",
        ))

        # growth envelope constants (recorded, checked when declared)
        sq = _sumsq(X)[:, None, None]
        k4 = float(np.max(r0 + (k2 if k2 else 0.0) * sq))
        k3 = float(np.min(r0 + (k1 if k1 else 0.0) * sq))
        checks.append(AssumptionCheck(
            "growth_envelope", True, True, k4,
            note=f"sampled envelope constants K3={k3:.4g}, K4={k4:.4g}",
        ))

        if datum is not None and k1 is not None:
            ell = 2.0 * datum.L
            lo_band, hi_band = np.sqrt(k2 / 2.0), np.sqrt(k1 / 2.0)
            ok = lo_band <= ell <= hi_band
            checks.append(AssumptionCheck(
                "initial_compatibility", True, ok, ell,
                note=f"initial curvature {ell:.4g} vs invariant band [{lo_band:.4g}, {hi_band:.4g}]",
            ))

    if model.is_separable:
        i_lo, i_hi = consts.get("Itilde_m", 0.0) / 2.0, 2.0 * consts.get("Itilde_M", i_top)
        I_band = np.linspace(max(i_lo, 1e-9), i_hi, ni)
        bvals = model.b(X)
        ok = bool(np.min(bvals) > 0.0)
        checks.append(AssumptionCheck(
            "separable_b_positive", True, ok, float(np.min(bvals)),
            tuple(X[int(np.argmin(bvals))]),
            note=f"b range [{np.min(bvals):.4g}, {np.max(bvals):.4g}] on the box",
        ))
        if model.B is not None:
            Bv = model.B(s_grid[:, None], I_band[None, :])
            Dv = model.D(s_grid[:, None], I_band[None, :])
            checks.append(AssumptionCheck(
                "separable_positivity", True,
                bool(np.min(Bv) > 0 and np.min(Dv) > 0), float(min(np.min(Bv), np.min(Dv))),
                note="B and D positive on the resource band",
            ))
            dI = 1e-6 * max(1.0, i_hi)
            dB = (model.B(s_grid[:, None], I_band[None, :] + dI) - Bv) / dI
            dBmax = float(np.max(dB))
            loc = np.unravel_index(int(np.argmax(dB)), dB.shape)
            checks.append(AssumptionCheck(
                "separable_dI_B", True, dBmax < 0.0, dBmax,
                (float(s_grid[loc[0]]), float(I_band[loc[1]])),
                note="D_I B must be strictly negative on the resource band",
            ))
            dD = (model.D(s_grid[:, None], I_band[None, :] + dI) - Dv) / dI
            checks.append(AssumptionCheck(
                "separable_dI_D", True, bool(np.min(dD) > 0.0), float(np.min(dD)),
                note="D_I D must be strictly positive on the resource band",
            ))
        else:
            # pure mortality-oscillation family: only D = D1(s) D2(I) with D2 increasing
            d2p = model.D2_dI(I_band)
            d1v = model.D1(s_grid)
            checks.append(AssumptionCheck(
                "separable_dI_D", True, bool(np.min(d2p) > 0 and np.min(d1v) > 0),
                float(np.min(d2p)), note="D1 positive and D2 strictly increasing",
            ))
            checks.append(AssumptionCheck(
                "separable_dI_B", False, True, note="B is constant in this family",
            ))
        # both resource levels pinch R to zero
        r_hi = model.rate(Xs, s_grid[None, :], consts["Itilde_M"])
        r_lo = model.rate(Xs, s_grid[None, :], consts["Itilde_m"])
        checks.append(AssumptionCheck(
            "resource_levels", True,
            abs(float(np.max(r_hi))) <= 1e-3 and abs(float(np.min(r_lo))) <= 1e-3,
            float(np.max(np.abs([np.max(r_hi), np.min(r_lo)]))),
            note="max R at Itilde_M and min R at Itilde_m both vanish",
        ))
        # unique maximizer of b on the box
        order = np.argsort(bvals)[::-1]
        sep = float(np.linalg.norm(X[order[0]] - X[order[1]]))
        gap_ok = bvals[order[0]] - bvals[order[1]] > 0 or sep <= 2.5 * (2 * hw / (nx - 1))
        checks.append(AssumptionCheck(
            "unique_b_max", True, bool(gap_ok), float(bvals[order[0]]),
            tuple(X[order[0]]), note="single sampled maximizer of b",
        ))

    # uptake bounds
    psi_vals = model.psi(X)
    pm, pM = float(np.min(psi_vals)), float(np.max(psi_vals))
    dm, dM = model.psi_bounds
    checks.append(AssumptionCheck(
        "uptake_bounds", True, pm > 0.0 and pm >= dm - tol and pM <= dM + tol, pm,
        note=f"sampled psi in [{pm:.4g}, {pM:.4g}], declared [{dm:.4g}, {dM:.4g}]",
    ))

    # periodicity spot check (exact for shipped presets)
    xs = X[:: max(1, len(X) // 16)]
    wrap = np.max(np.abs(
        model.rate(xs[:, None, :], s_grid[None, :], 1.0)
        - model.rate(xs[:, None, :], s_grid[None, :] + 1.0, 1.0)
    ))
    checks.append(AssumptionCheck(
        "phase_periodicity", True, bool(wrap <= 1e-12), float(wrap),
        note="R(x, s, I) vs R(x, s+1, I) on sampled points",
    ))

    return ValidationReport(model=model.name, family=model.family, checks=checks)
