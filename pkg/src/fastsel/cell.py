"""Periodic resource orbits and the homogenized (effective) fitness.

For a resident trait y inside the viability set, the fast resource cycle
settles on the unique positive 1-periodic solution of

    dI/ds = I * R(y, s, I),

integrated here in log variables J = ln I with classical RK4 on a fixed
s-grid.  The period map alpha -> J(1; alpha) is a contraction because R is
strictly decreasing in I; its fixed point is found by damped iteration with
an optional Newton acceleration that uses the analytically available map
derivative exp(integral of D_I R * I ds).

The effective fitness of a mutant x against resident y is the cycle average
of R(x, s, .) along the resident orbit; it vanishes identically on the
diagonal, which the quadrature reproduces to the period-map residual.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, SolverError
from .model import GrowthModel, trait_point

try:
    import numba

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

X_TOL = 1e-9  # sign tolerance for the viability margin


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_SIMPSON_CACHE: dict = {}


def simpson_weights(ms: int) -> np.ndarray:
    """Composite Simpson weights for ms intervals on [0, 1] (ms even)."""
    if ms % 2 or ms < 4:
        raise ConfigurationError(f"sample count per period must be even and >= 4, got {ms}")
    w = _SIMPSON_CACHE.get(ms)
    if w is None:
        w = np.ones(ms + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w /= 3.0 * ms
        w.setflags(write=False)
        _SIMPSON_CACHE[ms] = w
    return w


# ---------------------------------------------------------------------------
# sequential period pass, with optional JIT
# ---------------------------------------------------------------------------

def _rk4_pass(kernel, anchor, params, alpha, ms, out_j):
    """Integrate dJ/ds = R(anchor, s, exp(J)) over one period; fills out_j."""
    h = 1.0 / ms
    j = alpha
    out_j[0] = j
    for k in range(ms):
        s = k * h
        k1 = kernel(anchor, s, np.exp(j), params)
        k2 = kernel(anchor, s + 0.5 * h, np.exp(j + 0.5 * h * k1), params)
        k3 = kernel(anchor, s + 0.5 * h, np.exp(j + 0.5 * h * k2), params)
        k4 = kernel(anchor, s + h, np.exp(j + h * k3), params)
        j = j + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out_j[k + 1] = j
    return j


_rk4_pass_jit = numba.njit(_rk4_pass) if _HAVE_NUMBA else None
_KERNEL_JIT: dict = {}


def _jitted_kernel(fn):
    if fn is None or not _HAVE_NUMBA:
        return None
    disp = _KERNEL_JIT.get(fn)
    if disp is None:
        try:
            disp = numba.njit(cache=True)(fn)
        except Exception:
            disp = False
        _KERNEL_JIT[fn] = disp
    return disp or None


@dataclass
class PeriodicOrbit:
    """One period of the resource cycle anchored at a trait (or at F)."""

    anchor: np.ndarray
    s: np.ndarray
    I: np.ndarray
    mean: float
    alpha: float
    residual: float
    iterations: int
    margin: float

    @property
    def max_I(self) -> float:
        return float(np.max(self.I))

    def at_phase(self, phase):
        """Resource value at arbitrary phase(s), periodic interpolation."""
        return np.interp(np.mod(phase, 1.0), self.s, self.I)


def _zero_orbit(anchor, ms, margin):
    s = np.linspace(0.0, 1.0, ms + 1)
    return PeriodicOrbit(anchor=np.atleast_1d(np.asarray(anchor, dtype=float)), s=s,
                         I=np.zeros(ms + 1), mean=0.0, alpha=-np.inf,
                         residual=0.0, iterations=0, margin=margin)


def _solve_periodic(phase_rate, phase_dI, kernel, anchor, params, margin, ms,
                    seed, method, damping, max_iter, tol):
    """Fixed point of the period map in log variables.

    Returns (J_samples, alpha, residual, iterations, alpha_trace).
    """
    s_grid = np.linspace(0.0, 1.0, ms + 1)
    w = simpson_weights(ms)
    out = np.empty(ms + 1)
    anchor = np.ascontiguousarray(np.atleast_1d(np.asarray(anchor, dtype=float)))
    params = np.ascontiguousarray(params if params is not None else np.zeros(1))

    jit = _jitted_kernel(kernel)
    if jit is not None and _rk4_pass_jit is not None:
        def one_pass(a):
            return _rk4_pass_jit(jit, anchor, params, a, ms, out)
    elif kernel is not None:
        def one_pass(a):
            return _rk4_pass(kernel, anchor, params, a, ms, out)
    else:
        def scalar_kernel(_anchor, s, I, _params):
            return float(phase_rate(s, I))

        def one_pass(a):
            return _rk4_pass(scalar_kernel, anchor, params, a, ms, out)

    alpha = float(seed)
    trace = [alpha]
    for it in range(1, max_iter + 1):
        end = one_pass(alpha)
        g = end - alpha
        if abs(g) <= tol:
            return out.copy(), alpha, abs(g), it, trace
        step = None
        if method in ("auto", "newton"):
            I_s = np.exp(out)
            q = float(w @ (phase_dI(s_grid, np.maximum(I_s, 1e-300)) * I_s))
            dmap = np.expm1(q)  # derivative of the period map minus one
            if np.isfinite(dmap) and dmap < -1e-14:
                step = -g / dmap
                if not np.isfinite(step) or abs(step) > 8.0:
                    step = None
        if step is None or method == "picard":
            step = damping * g
        alpha += step
        trace.append(alpha)
    raise SolverError(
        f"period map fixed point not reached after {max_iter} iterations, "
        f"last residual {abs(g):.3e} at anchor {anchor}"
    )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def viability_margin(model: GrowthModel, x, ms: int = 2048) -> float:
    """Cycle-averaged growth at zero resource, mu(x) = integral of R(x, s, 0)."""
    xv = trait_point(x, model.dim)
    s = np.linspace(0.0, 1.0, ms + 1)
    return float(simpson_weights(ms) @ model.rate(xv, s, 0.0))


def in_x(model: GrowthModel, x, ms: int = 2048, tol: float = X_TOL):
    """Classify a trait against the viability set; returns (label, margin)."""
    mu = viability_margin(model, x, ms)
    if mu > tol:
        return "inside", mu
    if mu < -tol:
        return "outside", mu
    return "boundary", mu


def _default_seed(model: GrowthModel) -> float:
    c = model.constants
    guess = min(c.get("I_M", np.inf), max(c.get("Itilde_m", 0.0), 1.0))
    return float(np.log(guess)) if np.isfinite(guess) and guess > 0 else 0.0


def solve_orbit(model: GrowthModel, anchor, ms: int = 2048, seed_hint: Optional[float] = None,
                method: str = "auto", damping: float = 0.8, max_iter: int = 200,
                tol: float = 1e-10) -> PeriodicOrbit:
    """Positive 1-periodic resource orbit for a resident trait.

    Boundary traits (zero viability margin) return the identically zero
    orbit by continuity; traits outside the closed viability set raise
    DomainError.
    """
    xv = trait_point(anchor, model.dim)
    label, mu = in_x(model, xv, ms)
    if label == "outside":
        raise DomainError(f"anchor {xv} lies outside the viability set (margin {mu:.3e})")
    if label == "boundary":
        return _zero_orbit(xv, ms, mu)

    def phase_rate(s, I):
        return model.rate(xv, s, I)

    def phase_dI(s, I):
        return model.rate_dI(xv, s, I)

    seed = _default_seed(model) if seed_hint is None else float(seed_hint)
    J, alpha, res, iters, _ = _solve_periodic(
        phase_rate, phase_dI, model.kernel, xv, model.kernel_params, mu, ms,
        seed, method, damping, max_iter, tol,
    )
    I_s = np.exp(J)
    orbit = PeriodicOrbit(anchor=xv, s=np.linspace(0.0, 1.0, ms + 1), I=I_s,
                          mean=float(simpson_weights(ms) @ I_s), alpha=alpha,
                          residual=res, iterations=iters, margin=mu)
    i_cap = model.constants.get("I_M")
    if i_cap is not None and orbit.max_I > i_cap + 1e-6:
        raise SolverError(f"orbit exceeds the saturation resource: {orbit.max_I} > {i_cap}")
    return orbit


def solve_f_orbit(model: GrowthModel, F: float, ms: int = 2048,
                  seed_hint: Optional[float] = None, method: str = "auto",
                  damping: float = 0.8, max_iter: int = 200, tol: float = 1e-10) -> PeriodicOrbit:
    """Resource orbit of the consumption-weighted problem dI/ds = I (F B - D).

    Available for the separable-structure families, parameterized by the
    population fitness ratio F in [b_m, b_M].
    """
    if not model.is_separable:
        raise DomainError(f"family {model.family!r} has no F-parameterized cycle")
    F = float(F)
    c = model.constants
    if "b_m" in c and not (c["b_m"] - 1e-9 <= F <= c["b_M"] + 1e-9):
        raise DomainError(f"F = {F} outside [{c['b_m']}, {c['b_M']}]")

    if model.B is not None:
        def phase_rate(s, I):
            return F * model.B(s, I) - model.D(s, I)
    else:
        def phase_rate(s, I):
            return F - model.D(s, I)

    def phase_dI(s, I, _h=1e-7 * max(1.0, c.get("Itilde_M", 1.0))):
        return (phase_rate(s, I + _h) - phase_rate(s, np.maximum(I - _h, 0.0))) / (
            _h + np.minimum(I, _h)
        )

    s_chk = np.linspace(0.0, 1.0, 513)
    mu = float(simpson_weights(512) @ phase_rate(s_chk, np.zeros_like(s_chk)))
    if mu <= X_TOL:
        if mu < -X_TOL:
            raise DomainError(f"F = {F} gives negative zero-resource growth {mu:.3e}")
        return _zero_orbit([F], ms, mu)

    seed = float(np.log(max(c.get("Itilde_m", 1.0), 1e-6))) if seed_hint is None else float(seed_hint)
    J, alpha, res, iters, _ = _solve_periodic(
        phase_rate, phase_dI, model.f_kernel, np.array([F]), model.kernel_params, mu, ms,
        seed, method, damping, max_iter, tol,
    )
    I_s = np.exp(J)
    orbit = PeriodicOrbit(anchor=np.array([F]), s=np.linspace(0.0, 1.0, ms + 1), I=I_s,
                          mean=float(simpson_weights(ms) @ I_s), alpha=alpha,
                          residual=res, iterations=iters, margin=mu)
    if "Itilde_m" in c and (orbit.max_I > c["Itilde_M"] + 1e-6
                            or float(np.min(orbit.I)) < c["Itilde_m"] - 1e-6):
        raise SolverError(
            f"F-orbit left the admissible band [{c['Itilde_m']:.4g}, {c['Itilde_M']:.4g}]"
        )
    return orbit


def picard_trace(model: GrowthModel, anchor, ms: int = 2048, damping: float = 0.8,
                 max_iter: int = 200, tol: float = 1e-10):
    """Alpha iterates of the pure damped fixed-point iteration (diagnostics)."""
    xv = trait_point(anchor, model.dim)
    _, mu = in_x(model, xv, ms)

    def phase_rate(s, I):
        return model.rate(xv, s, I)

    def phase_dI(s, I):
        return model.rate_dI(xv, s, I)

    _, _, _, _, trace = _solve_periodic(
        phase_rate, phase_dI, model.kernel, xv, model.kernel_params, mu, ms,
        _default_seed(model), "picard", damping, max_iter, tol,
    )
    return np.asarray(trace)


def boundary_decay_check(model: GrowthModel, anchors, ms: int = 2048):
    """max_s I along a path of anchors ordered by decreasing viability margin."""
    margins = [viability_margin(model, a, ms) for a in anchors]
    if any(m <= X_TOL for m in margins):
        raise DomainError("all path anchors must lie strictly inside the viability set")
    if any(m2 >= m1 for m1, m2 in zip(margins, margins[1:])):
        raise ConfigurationError("anchors must be ordered by strictly decreasing margin")
    peaks = []
    hint = None
    for a in anchors:
        orb = solve_orbit(model, a, ms=ms, seed_hint=hint)
        hint = orb.alpha
        peaks.append(orb.max_I)
    return peaks


# ---------------------------------------------------------------------------
# effective fitness
# ---------------------------------------------------------------------------

class EffectiveFitness:
    """Cycle-averaged fitness R_eff(x, y) with a bounded orbit cache.

    Anchors are quantized to 1e-6 before caching; a small LRU cap bounds
    memory when the resident trait sweeps a continuous path, and each new
    solve warm-starts from the nearest cached fixed point.  Reads are pure;
    cache writes are idempotent, so results do not depend on call order.
    """

    QUANTUM = 1e-6

    def __init__(self, model: GrowthModel, ms: int = 2048, cache_size: int = 256):
        self.model = model
        self.ms = int(ms)
        self.weights = simpson_weights(self.ms)
        self.s_grid = np.linspace(0.0, 1.0, self.ms + 1)
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = int(cache_size)
        self._last: Optional[PeriodicOrbit] = None

    @property
    def dim(self) -> int:
        return self.model.dim

    def _key(self, y: np.ndarray):
        return tuple(np.round(np.asarray(y, dtype=float) / self.QUANTUM).astype(np.int64))

    def _warm_seed(self, y: np.ndarray) -> Optional[float]:
        if self._last is not None and np.isfinite(self._last.alpha):
            return self._last.alpha
        best, dist = None, np.inf
        for key, orb in self._cache.items():
            d = float(np.linalg.norm(orb.anchor - y))
            if d < dist and np.isfinite(orb.alpha):
                best, dist = orb.alpha, d
        return best

    def orbit(self, y) -> PeriodicOrbit:
        yv = trait_point(y, self.dim)
        key = self._key(yv)
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        orb = solve_orbit(self.model, yv, ms=self.ms, seed_hint=self._warm_seed(yv))
        self._cache[key] = orb
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        self._last = orb
        return orb

    def value(self, x, y) -> float:
        """R_eff(x, y), full-resolution Simpson quadrature along the orbit."""
        orb = self.orbit(y)
        xv = trait_point(x, self.dim)
        return float(self.weights @ self.model.rate(xv, self.s_grid, orb.I))

    def surface(self, X, y, s_stride: Optional[int] = None) -> np.ndarray:
        """R_eff(., y) over an array of trait points, shape X.shape[:-1].

        s_stride subsamples the orbit for the quadrature (the integrand is
        smooth and periodic, so modest strides cost nothing measurable);
        it must divide the sample count and keep an even interval count.
        """
        orb = self.orbit(y)
        X = np.asarray(X, dtype=float)
        if self.model.rate_terms is not None:
            out = np.zeros(X.shape[:-1])
            for c_fn, phi_fn in self.model.rate_terms:
                coeff = float(self.weights @ np.broadcast_to(
                    phi_fn(self.s_grid, orb.I), self.s_grid.shape))
                out = out + coeff * c_fn(X)
            return out
        if s_stride is None or s_stride <= 1:
            s, I, w = self.s_grid, orb.I, self.weights
        else:
            if self.ms % s_stride or (self.ms // s_stride) % 2:
                raise ConfigurationError("s_stride must divide the sample count evenly")
            s, I = self.s_grid[::s_stride], orb.I[::s_stride]
            w = simpson_weights(self.ms // s_stride)
        lead = X.shape[:-1]
        flat = X.reshape(-1, self.dim)
        out = np.empty(flat.shape[0])
        block = max(1, 2**18 // (len(s) + 1))
        for start in range(0, flat.shape[0], block):
            chunk = flat[start:start + block]
            vals = self.model.rate(chunk[:, None, :], s[None, :], I[None, :])
            out[start:start + chunk.shape[0]] = vals @ w
        return out.reshape(lead)

    def d1(self, x, y) -> np.ndarray:
        """Gradient of R_eff in the mutant argument, shape (dim,)."""
        orb = self.orbit(y)
        xv = trait_point(x, self.dim)
        g = self.model.rate_dx(xv, self.s_grid, orb.I)  # (ms + 1, dim)
        return np.asarray(self.weights @ g, dtype=float).reshape(self.dim)

    def mean_resource(self, y) -> float:
        return self.orbit(y).mean


def effective_fitness(ef: EffectiveFitness, x, y) -> float:
    return ef.value(x, y)


def effective_fitness_d1(ef: EffectiveFitness, x, y) -> np.ndarray:
    return ef.d1(x, y)
