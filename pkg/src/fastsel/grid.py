"""Uniform trait-space grids and the finite-difference stencils used on them.

The trait space is a symmetric box [-half_width, half_width]^dim with the
same node count per dimension.  Fields live on the nodes; all stencils are
dimension-agnostic for dim in {1, 2}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class TraitGrid:
    half_width: float
    n: int
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError(f"grid dim must be 1 or 2, got {self.dim}")
        if self.n < 64:
            raise ConfigurationError(f"need at least 64 nodes per dimension, got {self.n}")
        if self.half_width <= 0:
            raise ConfigurationError("grid half_width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (n,)*dim + (dim,)."""
        ax = self.axis()
        if self.dim == 1:
            return ax[:, None]
        xx, yy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    def contains(self, x, margin: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(x, dtype=float)) <= self.half_width - margin))


def _quadratic_peak(um, u0, up, h):
    """Vertex of the parabola through (-h, um), (0, u0), (h, up).

    Returns (offset, gain): peak position relative to the center node and
    the peak value minus u0.  Falls back to the node on flat stencils.
    """
    denom = 2.0 * u0 - um - up
    if denom <= 0.0:
        return 0.0, 0.0
    offset = 0.5 * h * (up - um) / denom
    gain = (up - um) ** 2 / (8.0 * denom)
    # a plateau neighbour can push the vertex outside the stencil; clamp
    offset = float(np.clip(offset, -h, h))
    return offset, gain


def argmax_refined(u: np.ndarray, grid: TraitGrid):
    """Sub-grid argmax of a field by per-dimension 3-point quadratic fit.

    Returns (xbar, peak_value, node_index).  Ties broken toward the
    lexicographically smallest node (np.argmax convention).  Raises
    DomainError when the maximum sits on the box edge, where no centered
    refinement exists.
    """
    flat = int(np.argmax(u))
    idx = np.unravel_index(flat, u.shape)
    if any(i == 0 or i == grid.n - 1 for i in idx):
        raise DomainError(f"field maximum reached the box boundary at node {idx}")
    ax = grid.axis()
    h = grid.h
    xbar = np.empty(grid.dim)
    peak = float(u[idx])
    for d in range(grid.dim):
        lo = list(idx)
        hi = list(idx)
        lo[d] -= 1
        hi[d] += 1
        um, u0, up = float(u[tuple(lo)]), float(u[idx]), float(u[tuple(hi)])
        off, gain = _quadratic_peak(um, u0, up, h)
        xbar[d] = ax[idx[d]] + off
        peak += gain
    return xbar, peak, idx


def hessian_at(u: np.ndarray, grid: TraitGrid, idx) -> np.ndarray:
    """Centered second differences of u at an interior node, (dim, dim)."""
    h = grid.h
    d = grid.dim
    M = np.empty((d, d))
    for a in range(d):
        lo = list(idx)
        hi = list(idx)
        lo[a] -= 1
        hi[a] += 1
        M[a, a] = (u[tuple(hi)] - 2.0 * u[idx] + u[tuple(lo)]) / h**2
    if d == 2:
        i, j = idx
        M[0, 1] = M[1, 0] = (
            u[i + 1, j + 1] + u[i - 1, j - 1] - u[i + 1, j - 1] - u[i - 1, j + 1]
        ) / (4.0 * h**2)
    return M


def second_diff_range(u: np.ndarray, grid: TraitGrid, mask: np.ndarray, edge_margin: int = 3):
    """(min, max) of per-dimension second differences over masked interior nodes.

    A few nodes next to each box edge are excluded: the one-sided boundary
    treatment distorts the stencil there and does not represent the PDE's
    second derivative.
    """
    h2 = grid.h**2
    m = max(1, int(edge_margin))
    lo, hi = np.inf, -np.inf
    inner = tuple(slice(m, -m) for _ in range(grid.dim))
    for axis in range(grid.dim):
        d2 = (np.roll(u, -1, axis) - 2.0 * u + np.roll(u, 1, axis)) / h2
        sel = mask[inner]
        vals = d2[inner][sel]
        if vals.size:
            lo = min(lo, float(vals.min()))
            hi = max(hi, float(vals.max()))
    return lo, hi


def _edge_padded_slopes(u: np.ndarray, h: float, axis: int):
    """Backward/forward difference pair along one axis.

    The missing one-sided slope at each box edge is replaced by the interior
    slope, which makes the edge stencil the consistent outflow discretization.
    """
    du = np.diff(u, axis=axis) / h
    first = np.take(du, [0], axis=axis)
    last = np.take(du, [-1], axis=axis)
    pm = np.concatenate([first, du], axis=axis)
    pp = np.concatenate([du, last], axis=axis)
    return pm, pp


def _one_sided_slopes_2(u: np.ndarray, h: float, axis: int):
    """Second-order one-sided difference pair along one axis.

    p-[i] = (3 u[i] - 4 u[i-1] + u[i-2]) / 2h,  p+[i] mirrored.  Ghost
    values extrapolate linearly, which degrades the two edge nodes to the
    plain one-sided slope.
    """
    n = u.shape[axis]
    u0 = np.take(u, [0], axis=axis)
    u1 = np.take(u, [1], axis=axis)
    ue0 = np.take(u, [n - 1], axis=axis)
    ue1 = np.take(u, [n - 2], axis=axis)
    lo = np.concatenate([3.0 * u0 - 2.0 * u1, 2.0 * u0 - u1], axis=axis)
    hi = np.concatenate([2.0 * ue0 - ue1, 3.0 * ue0 - 2.0 * ue1], axis=axis)
    up = np.concatenate([lo, u, hi], axis=axis)  # padded: index i+2 is u[i]

    def seg(a, b):
        sl = [slice(None)] * u.ndim
        sl[axis] = slice(a, b)
        return up[tuple(sl)]

    uc, um1, um2 = seg(2, n + 2), seg(1, n + 1), seg(0, n)
    up1, up2 = seg(3, n + 3), seg(4, n + 4)
    pm = (3.0 * uc - 4.0 * um1 + um2) / (2.0 * h)
    pp = (-3.0 * uc + 4.0 * up1 - up2) / (2.0 * h)
    return pm, pp


def upwind_gradient_sq(u: np.ndarray, h: float, order: int = 1):
    """Godunov discretization of |grad u|^2 for u_t = |grad u|^2 + ...

    Per dimension max(min(p-, 0)^2, max(p+, 0)^2) with p-/p+ one-sided
    differences; the orientation keeps a discrete maximum stationary and
    lets a discrete minimum fill in, matching the viscosity solution of the
    expanding-front sign convention.  order=1 uses plain differences and is
    provably monotone; order=2 uses second-order one-sided slopes, trading
    formal monotonicity for an O(h^2) peak-transport error (the moving
    argmax of a smooth concave profile acquires an O(h) drift per unit time
    under the first-order flux).

    Returns (H, max_abs_slope) with max_abs_slope the largest one-sided
    slope magnitude, used for CFL monitoring.
    """
    total = np.zeros_like(u)
    pmax = 0.0
    for axis in range(u.ndim):
        if order == 1:
            pm, pp = _edge_padded_slopes(u, h, axis)
        elif order == 2:
            pm, pp = _one_sided_slopes_2(u, h, axis)
        else:
            raise ConfigurationError(f"unsupported spatial order {order}")
        total += np.maximum(np.minimum(pm, 0.0) ** 2, np.maximum(pp, 0.0) ** 2)
        pmax = max(pmax, float(np.max(np.abs(pm))), float(np.max(np.abs(pp))))
    return total, pmax


def laplacian(u: np.ndarray, h: float) -> np.ndarray:
    """Centered Laplacian; zero second difference imposed on the box edges."""
    out = np.zeros_like(u)
    h2 = h**2
    for axis in range(u.ndim):
        d2 = (np.roll(u, -1, axis) - 2.0 * u + np.roll(u, 1, axis)) / h2
        sl = [slice(None)] * u.ndim
        sl[axis] = slice(1, -1)
        interior = tuple(sl)
        tmp = np.zeros_like(u)
        tmp[interior] = d2[interior]
        out += tmp
    return out
