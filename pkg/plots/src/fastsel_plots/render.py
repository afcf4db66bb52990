"""Render publication-style figures from experiment artifact directories.

Reads only the documented CSV/JSON artifact files (never the simulation
package itself) and writes PNG (default) or SVG.  Rendering is headless and
deterministic: repeated renders of the same inputs produce identical bytes.

Figure kinds
------------
resource-trace    resource trace I_eps(t) from history.csv, overlaid with
                  the running average and the homogenized prediction when
                  prediction.csv sits next to it
trait-trajectory  dominant-trait paths from trajectory.csv (argmax tracker
                  and canonical-equation tracker), plus the direct-run trait
                  from history.csv when present
eps-decay         log-log residual ladder from decay.csv with a sqrt(eps)
                  reference slope
fitness-surface   heat map of R_eff(x, y) from surface.csv
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fastsel-plots"

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("resource-trace", "trait-trajectory", "eps-decay", "fitness-surface")


class PlotDataError(Exception):
    """Artifact files missing, malformed, or degenerate."""


@dataclass
class FigureSpec:
    kind: str
    indir: Path
    outfile: Path
    title: Optional[str] = None
    xlim: Optional[tuple] = None
    ylim: Optional[tuple] = None
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotDataError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        self.indir = Path(self.indir)
        self.outfile = Path(self.outfile)


def read_csv(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise PlotDataError(f"missing artifact file: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise PlotDataError(f"malformed CSV {path}: {exc}") from None
    if data.size == 0 or data.shape[0] < 2:
        raise PlotDataError(f"empty series in {path}")
    return {name: data[:, j] for j, name in enumerate(header)}


def need(data: dict, column: str, path) -> np.ndarray:
    if column not in data:
        raise PlotDataError(f"missing column {column!r} in {path}")
    return data[column]


def _save(fig, spec: FigureSpec):
    spec.outfile.parent.mkdir(parents=True, exist_ok=True)
    fmt = spec.outfile.suffix.lstrip(".").lower() or "png"
    if fmt not in ("png", "svg"):
        raise PlotDataError(f"unsupported image format {fmt!r} (png or svg)")
    # strip volatile metadata so re-renders are byte-stable
    metadata = {"Software": None} if fmt == "png" else {"Date": None}
    fig.savefig(spec.outfile, dpi=spec.dpi, format=fmt, metadata=metadata)
    plt.close(fig)
    return spec.outfile


def _finish(ax, spec: FigureSpec, xlabel, ylabel, default_title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(spec.title or default_title)
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)


def _render_resource_trace(spec: FigureSpec):
    hist_path = spec.indir / "history.csv"
    hist = read_csv(hist_path)
    t = need(hist, "t", hist_path)
    I = need(hist, "I_eps", hist_path)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(t, I, lw=0.6, color="#7f7f7f", label="resource trace")
    pred_path = spec.indir / "prediction.csv"
    if pred_path.exists():
        pred = read_csv(pred_path)
        tp = need(pred, "t", pred_path)
        ax.plot(tp, need(pred, "I_avg", pred_path), lw=1.8, color="#1f77b4",
                label="running average")
        ax.plot(tp, need(pred, "I_pred", pred_path), lw=1.8, ls="--", color="#d62728",
                label="cycle-orbit prediction")
    ax.legend(loc="lower right", frameon=False)
    _finish(ax, spec, "t", "total consumption", "resource trace with homogenized envelope")
    return _save(fig, spec)


def _render_trait_trajectory(spec: FigureSpec):
    traj_path = spec.indir / "trajectory.csv"
    traj = read_csv(traj_path)
    t = need(traj, "t", traj_path)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    d = 0
    while f"xbar_{d}" in traj:
        ax.plot(t, traj[f"xbar_{d}"], lw=1.6, label=f"limit trait [{d}]")
        if f"xbar_ode_{d}" in traj:
            ax.plot(t, traj[f"xbar_ode_{d}"], lw=1.2, ls="--",
                    label=f"canonical tracker [{d}]")
        d += 1
    if d == 0:
        raise PlotDataError(f"missing column 'xbar_0' in {traj_path}")
    hist_path = spec.indir / "history.csv"
    if hist_path.exists():
        hist = read_csv(hist_path)
        ax.plot(need(hist, "t", hist_path), need(hist, "xbar_0", hist_path),
                lw=0.8, color="#7f7f7f", label="direct run")
    ax.legend(frameon=False)
    _finish(ax, spec, "t", "dominant trait", "dominant-trait trajectories")
    return _save(fig, spec)


def _render_eps_decay(spec: FigureSpec):
    decay_path = spec.indir / "decay.csv"
    decay = read_csv(decay_path)
    eps = need(decay, "eps", decay_path)
    r = need(decay, "r_eps", decay_path)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    ax.loglog(eps, r, "o-", color="#1f77b4", label="measured residual")
    ref = r[0] * np.sqrt(eps / eps[0])
    ax.loglog(eps, ref, ls="--", color="#7f7f7f", label=r"$\sqrt{\epsilon}$ slope")
    ax.legend(frameon=False)
    _finish(ax, spec, "scale parameter", "residual", "oscillation-residual decay")
    return _save(fig, spec)


def _render_fitness_surface(spec: FigureSpec):
    surf_path = spec.indir / "surface.csv"
    surf = read_csv(surf_path)
    x = need(surf, "x", surf_path)
    y = need(surf, "y", surf_path)
    r = need(surf, "R_eff", surf_path)
    xs, ys = np.unique(x), np.unique(y)
    if len(xs) * len(ys) != len(r):
        raise PlotDataError(f"surface grid in {surf_path} is not a full product grid")
    order = np.lexsort((x, y))
    grid = r[order].reshape(len(ys), len(xs))
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="RdBu_r",
                         vmin=-np.max(np.abs(r)), vmax=np.max(np.abs(r)))
    ax.plot(xs, xs, color="k", lw=0.7, ls=":")
    fig.colorbar(mesh, ax=ax, label="effective fitness")
    _finish(ax, spec, "mutant trait", "resident trait", "effective-fitness surface")
    return _save(fig, spec)


_RENDERERS = {
    "resource-trace": _render_resource_trace,
    "trait-trajectory": _render_trait_trajectory,
    "eps-decay": _render_eps_decay,
    "fitness-surface": _render_fitness_surface,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written path."""
    return _RENDERERS[spec.kind](spec)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fastsel-render", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="indir", required=True,
                        help="artifact directory of the producing experiment")
    parser.add_argument("--out", dest="outfile", required=True,
                        help="output image path (.png or .svg)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, indir=args.indir, outfile=args.outfile,
                          title=args.title, dpi=args.dpi)
        out = render(spec)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
