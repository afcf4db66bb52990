"""Experiment runner: named reproducible experiments over JSON configs.

Every experiment writes a manifest before computing (left with status
"incomplete" if interrupted), the artifact files documented per module, and
a summary with the experiment's built-in checks.  All floating-point CSV
output carries 17 significant digits so reruns are byte-comparable.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""
from __future__ import annotations

import argparse
import copy
import datetime
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, cell, direct, esd, hjlimit
from .errors import ConfigurationError, FastselError
from .grid import TraitGrid
from .model import InitialDatum, make_preset
from .cell import EffectiveFitness

EXPERIMENTS = (
    "cell-orbit", "effective-surface", "direct-sim", "eps-sweep", "hj-limit",
    "canonical", "counterexample", "esd", "separable", "fluctuation", "figure1",
)

_DEFAULTS = {
    "experiment": None,
    "model": {"preset": "figure1", "params": {}},
    "datum": {"x0": [1.0], "L": 0.5, "rho0": 1.0},
    "grid": {"half_width": 2.0, "n": 1024, "dim": 1},
    "eps": [0.01],
    "T": 2.0,
    "cadence": None,
    "substeps_per_period": 64,
    "ms": 2048,
    "out": "out",
    "seed": 0,
    "workers": 1,
    "anchor": [0.0],
    "x_init": [1.0],
    "residual_window": [0.5, None],
    "cfl": 0.4,
    "tolerances": {},
}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    raw: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.raw[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def tol(self, name, default):
        return float(self.raw.get("tolerances", {}).get(name, default))

    @classmethod
    def load(cls, config_path=None, overrides=None):
        cfg = copy.deepcopy(_DEFAULTS)
        if config_path is not None:
            with open(config_path) as fh:
                user = json.load(fh)
            for key, val in user.items():
                if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                    cfg[key].update(val)
                else:
                    cfg[key] = val
        for key, val in (overrides or {}).items():
            if val is not None:
                cfg[key] = val
        return cls(raw=cfg)

    def validate(self):
        exp = self.raw.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        eps = self.raw.get("eps")
        if not isinstance(eps, (list, tuple)) or len(eps) == 0:
            raise ConfigurationError("eps list must be nonempty")
        if any(e <= 0 for e in eps):
            raise ConfigurationError("eps values must be positive")
        if any(t <= 0 for t in self.raw.get("tolerances", {}).values()):
            raise ConfigurationError("tolerances must be positive")
        if self.raw["model"].get("preset") not in (
                "figure1", "concave-quadratic", "separable", "fluctuation-example"):
            raise ConfigurationError(
                f"unknown model preset {self.raw['model'].get('preset')!r}"
            )
        if self.raw.get("T", 0) <= 0:
            raise ConfigurationError("horizon T must be positive")

    def model(self):
        return make_preset(self.raw["model"]["preset"], **self.raw["model"].get("params", {}))

    def datum(self):
        d = self.raw["datum"]
        return InitialDatum(x0=np.asarray(d["x0"], dtype=float), L=float(d["L"]),
                            rho0=float(d["rho0"]))

    def grid(self):
        g = self.raw["grid"]
        return TraitGrid(float(g["half_width"]), int(g["n"]), int(g.get("dim", 1)))


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header, columns):
    """Write columns (sequence of 1-d arrays) under a comma-separated header."""
    cols = [np.atleast_1d(np.asarray(c)) for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ConfigurationError("CSV columns must share a length")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in cols) + "\n")


def read_csv(path):
    """Read a CSV written by write_csv back into {column: array}."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, j] for j, name in enumerate(header)}


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


class Manifest:
    def __init__(self, outdir: Path, config: ExperimentConfig):
        self.path = outdir / "manifest.json"
        self.body = {
            "config": config.raw,
            "package_version": __version__,
            "started_at": _now(),
            "finished_at": None,
            "status": "incomplete",
            "checks": [],
        }
        write_json(self.path, self.body)

    def finish(self, checks, status="complete"):
        self.body["checks"] = checks
        self.body["status"] = status if all(c["pass"] for c in checks) or status != "complete" \
            else "complete"
        self.body["finished_at"] = _now()
        write_json(self.path, self.body)


def _check(name, value, tolerance, ok):
    return {"name": name, "pass": bool(ok), "value": float(value),
            "tolerance": None if tolerance is None else float(tolerance)}


def _history_columns(hist, dim):
    header = ["t", "I_eps"] + [f"xbar_{d}" for d in range(dim)] + \
             ["rho", "max_u", "d2u_min", "d2u_max"]
    cols = [hist.t, hist.I] + [hist.xbar[:, d] for d in range(dim)] + \
           [hist.rho, hist.max_u, hist.d2_min, hist.d2_max]
    if hist.F is not None:
        header.append("F_eps")
        cols.append(hist.F)
    return header, cols


def write_history(path, hist, dim):
    header, cols = _history_columns(hist, dim)
    write_csv(path, header, cols)


def write_trajectory(path, res: hjlimit.HjResult):
    dim = res.xbar.shape[1]
    header = ["t"] + [f"xbar_{d}" for d in range(dim)] + ["max_u"] + \
             [f"M_{a}{b}" for a in range(dim) for b in range(dim)] + ["rho"] + \
             [f"xbar_ode_{d}" for d in range(dim)]
    cols = [res.t] + [res.xbar[:, d] for d in range(dim)] + [res.max_u] + \
           [res.M[:, a, b] for a in range(dim) for b in range(dim)] + [res.rho] + \
           [res.xbar_ode[:, d] for d in range(dim)]
    write_csv(path, header, cols)


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def _exp_cell_orbit(cfg, outdir):
    model = cfg.model()
    orbit = cell.solve_orbit(model, np.asarray(cfg["anchor"], dtype=float), ms=cfg["ms"])
    write_csv(outdir / "orbit.csv", ["s", "I"], [orbit.s, orbit.I])
    tol = cfg.tol("orbit_residual", 1e-10)
    checks = [_check("period_map_residual", orbit.residual, tol, orbit.residual <= tol)]
    metrics = {"mean": orbit.mean, "alpha": orbit.alpha, "iterations": orbit.iterations,
               "margin": orbit.margin}
    return checks, metrics


def _exp_effective_surface(cfg, outdir):
    model = cfg.model()
    if model.dim != 1:
        raise ConfigurationError("surface export is a 1-d experiment")
    ef = EffectiveFitness(model, ms=cfg["ms"])
    hw = model.validation_half_width
    n = min(int(cfg["grid"]["n"]), 257)
    ys = np.linspace(-hw, hw, n)
    xs = np.linspace(-cfg["grid"]["half_width"], cfg["grid"]["half_width"], n)
    rows_x, rows_y, rows_r = [], [], []
    worst_diag = 0.0
    for y in ys:
        label, _ = cell.in_x(model, y)
        if label == "outside":
            continue
        vals = ef.surface(xs[:, None], [y])
        rows_x.append(xs)
        rows_y.append(np.full_like(xs, y))
        rows_r.append(vals)
        worst_diag = max(worst_diag, abs(ef.value([y], [y])))
    write_csv(outdir / "surface.csv", ["x", "y", "R_eff"],
              [np.concatenate(rows_x), np.concatenate(rows_y), np.concatenate(rows_r)])
    tol = cfg.tol("diag_fitness", 1e-8)
    return [_check("diagonal_fitness", worst_diag, tol, worst_diag <= tol)], {}


def _run_direct(cfg, eps, record_f=None):
    model = cfg.model()
    return direct.run(model, cfg.datum(), cfg.grid(), eps, cfg["T"],
                      cadence=cfg.get("cadence"),
                      substeps_per_period=cfg["substeps_per_period"],
                      cfl=cfg["cfl"], record_f=record_f), model


def _exp_direct_sim(cfg, outdir):
    eps = float(cfg["eps"][0])
    state, model = _run_direct(cfg, eps)
    write_history(outdir / "history.csv", state.history, model.dim)
    coords = state.grid.coords()
    header = [f"x_{d}" for d in range(model.dim)] + ["u"]
    cols = [coords[..., d].ravel() for d in range(model.dim)] + [state.u.ravel()]
    write_csv(outdir / "snapshot_final.csv", header, cols)
    i_hi = model.constants.get("I_M", model.constants.get("Itilde_M", np.inf))
    imax = float(np.max(state.history.I))
    imin = float(np.min(state.history.I))
    c_fit = max(0.0, (imax - i_hi) / eps)
    checks = [
        _check("resource_positive", imin, 0.0, imin > 0.0),
        _check("resource_bounded", imax, i_hi + 1.0 * eps, imax <= i_hi + 1.0 * eps),
    ]
    return checks, {"I_max": imax, "I_min": imin, "C_fitted": c_fit, "dt": state.dt}


def _sweep_worker(args):
    raw, eps = args
    cfg = ExperimentConfig(raw=raw)
    state, model = _run_direct(cfg, eps)
    out = Path(raw["out"])
    write_history(out / f"history_eps{eps:g}.csv", state.history, model.dim)
    return eps


def _exp_eps_sweep(cfg, outdir):
    eps_list = sorted((float(e) for e in cfg["eps"]), reverse=True)
    jobs = [(cfg.raw, e) for e in eps_list]
    workers = int(cfg.get("workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_sweep_worker, jobs))
    else:
        for job in jobs:
            _sweep_worker(job)

    model = cfg.model()
    t_lo, t_hi = cfg["residual_window"]
    t_hi = cfg["T"] if t_hi is None else t_hi
    residuals = []
    for e in eps_list:
        data = read_csv(outdir / f"history_eps{e:g}.csv")
        hist = _history_from_csv(data, model.dim)
        residuals.append(direct.log_resource_residual(model, hist, e, t_lo, t_hi,
                                                      ms=cfg["ms"]))
    write_csv(outdir / "decay.csv", ["eps", "r_eps"], [np.asarray(eps_list),
                                                       np.asarray(residuals)])
    decreasing = all(b < a for a, b in zip(residuals, residuals[1:]))
    checks = [_check("residual_strictly_decreasing", float(residuals[-1]), None, decreasing)]
    if len(residuals) >= 2:
        ratio = residuals[-1] / residuals[0]
        checks.append(_check("residual_ratio", ratio, 1.0, 0.0 < ratio < 1.0))
    return checks, {"eps": eps_list, "r_eps": residuals}


def _history_from_csv(data, dim):
    xbar = np.stack([data[f"xbar_{d}"] for d in range(dim)], axis=-1)
    return direct.SimHistory(
        t=data["t"], I=data["I_eps"], xbar=xbar, rho=data["rho"], max_u=data["max_u"],
        d2_min=data["d2u_min"], d2_max=data["d2u_max"], F=data.get("F_eps"),
    )


def _exp_hj_limit(cfg, outdir, canonical_mode="coupled"):
    model = cfg.model()
    ef = EffectiveFitness(model, ms=cfg["ms"])
    res = hjlimit.hj_run(ef, cfg.datum(), cfg.grid(), cfg["T"], cfl=cfg["cfl"],
                         canonical_mode=canonical_mode)
    write_trajectory(outdir / "trajectory.csv", res)
    tol = cfg.tol("drift", 1e-3)
    gap = float(np.max(np.linalg.norm(res.xbar - res.xbar_ode, axis=-1)))
    checks = [
        _check("constraint_drift", res.drift_max, tol, res.drift_max <= tol),
        _check("tracker_consistency", gap, 5 * cfg.grid().h, gap <= 5 * cfg.grid().h),
    ]
    return checks, {"xbar_final": res.xbar[-1].tolist(), "dt": res.dt}


def _exp_canonical(cfg, outdir):
    return _exp_hj_limit(cfg, outdir, canonical_mode="coupled")


def _exp_counterexample(cfg, outdir):
    ef, exact_xbar, exact_u = hjlimit.rotation_counterexample()
    g = cfg.raw["grid"]
    grid = TraitGrid(float(g.get("half_width", 2.2)), int(g.get("n", 128)), 2)
    datum = InitialDatum(x0=np.array([1.0, 0.0]), L=1.0, rho0=1.0)
    T = float(cfg.get("T", 2 * np.pi))
    res = hjlimit.hj_run(ef, datum, grid, T, cfl=min(cfg["cfl"], 0.25),
                         canonical_mode="ansatz", canonical_F=ef.F)
    write_trajectory(outdir / "trajectory.csv", res)
    sup_err = float(np.max(np.abs(res.u - exact_u(grid.coords(), res.t[-1]))))
    ret = float(np.linalg.norm(res.xbar[-1] - exact_xbar(T)))
    period = hjlimit.period_estimate(res)
    h = grid.h
    tol_drift = cfg.tol("drift", 1e-3)
    report = {
        "sup_norm_error": sup_err, "drift": res.drift_max, "period_estimate": period,
        "return_distance": ret, "h": h,
    }
    write_json(outdir / "error_report.json", report)
    checks = [
        _check("sup_norm_error", sup_err, 5 * h, sup_err <= 5 * h),
        _check("return_distance", ret, 2 * h, ret <= 2 * h),
        _check("constraint_drift", res.drift_max, tol_drift, res.drift_max <= tol_drift),
    ]
    return checks, report


def _exp_esd(cfg, outdir):
    model = cfg.model()
    ef = EffectiveFitness(model, ms=cfg["ms"])
    grid = TraitGrid(model.validation_half_width, max(257, min(int(cfg["grid"]["n"]), 1025)),
                     model.dim)
    result = esd.esd_fixed_point(ef, np.asarray(cfg["x_init"], dtype=float), grid)
    write_json(outdir / "esd.json", result.as_dict())
    tol = cfg.tol("esd_residual", 1e-6)
    worst = max(result.residuals["diag_fitness"], result.residuals["grid_max_fitness"])
    checks = [
        _check("converged", float(result.converged), None, result.converged),
        _check("stationarity_residuals", worst, tol, worst <= tol),
    ]
    return checks, result.as_dict()


def _exp_separable(cfg, outdir):
    eps = float(cfg["eps"][0])
    state, model = _run_direct(cfg, eps, record_f=True)
    write_history(outdir / "history.csv", state.history, model.dim)
    x_star, f_star, rho_star = esd.separable_limit(model, ms=cfg["ms"])
    dips = direct.monotone_dips(state.history.F)
    final_gap = abs(state.history.F[-1] - f_star)
    h = cfg.grid().h
    checks = [
        _check("F_dips", dips, 5 * eps, dips <= 5 * eps),
        _check("F_limit", final_gap, 2 * h, final_gap <= 2 * h),
    ]
    return checks, {"F_star": f_star, "x_star": x_star.tolist(), "rho_star": rho_star,
                    "F_final": float(state.history.F[-1])}


def _exp_fluctuation(cfg, outdir):
    model = cfg.model()
    report = esd.fluctuation_compare(model, ms=cfg["ms"])
    write_json(outdir / "fluctuation.json", report.as_dict())
    tol_id = cfg.tol("identity", 1e-8)
    worst_id = max(report.identity_residuals)
    checks = [
        _check("identity_residuals", worst_id, tol_id, worst_id <= tol_id),
        _check("gap_nonnegative", report.gap, None, report.gap >= -1e-12),
    ]
    return checks, report.as_dict()


def _exp_figure1(cfg, outdir):
    eps = float(cfg["eps"][0])
    cadence = cfg.get("cadence") or eps / 10.0
    raw = copy.deepcopy(cfg.raw)
    raw["cadence"] = cadence
    cfg = ExperimentConfig(raw=raw)
    state, model = _run_direct(cfg, eps)
    hist = state.history
    write_history(outdir / "history.csv", hist, model.dim)

    window = 10 * eps
    avg = direct.running_average(hist.t, hist.I, window)
    sel = hist.t >= 2.0 * window
    f_peak, f_bin = direct.oscillation_peak(hist.t[sel], hist.I[sel], detrend_window=window)
    # truncated end windows cover non-integer period counts and alias the
    # oscillation; envelope statements hold on the fully-windowed interior
    k = max(1, int(round(window / (2.0 * hist.cadence))))
    interior = np.zeros(len(hist.t), dtype=bool)
    interior[k:len(hist.t) - k] = True
    dips = direct.monotone_dips(avg[interior & (hist.t >= 0.1)])

    ef = EffectiveFitness(model, ms=cfg["ms"])
    hj = hjlimit.hj_run(ef, cfg.datum(), cfg.grid(), cfg["T"], cfl=cfg["cfl"])
    write_trajectory(outdir / "trajectory.csv", hj)
    pred = np.array([ef.mean_resource(np.interp(t, hj.t, hj.xbar[:, 0]))
                     for t in hist.t])
    write_csv(outdir / "prediction.csv", ["t", "I_avg", "I_pred"], [hist.t, avg, pred])
    cmp_sel = interior & (hist.t >= 0.2)
    rel_dev = float(np.max(np.abs(avg[cmp_sel] / pred[cmp_sel] - 1.0)))

    checks = [
        _check("oscillation_frequency", f_peak, f_bin,
               abs(f_peak - 1.0 / eps) <= f_bin + 1e-12),
        _check("envelope_monotone", dips, cfg.tol("envelope_dips", 1e-3),
               dips <= cfg.tol("envelope_dips", 1e-3)),
        _check("homogenized_agreement", rel_dev, 0.05, rel_dev <= 0.05),
    ]
    return checks, {"oscillation_period": 1.0 / f_peak, "rel_deviation": rel_dev}


_RUNNERS = {
    "cell-orbit": _exp_cell_orbit,
    "effective-surface": _exp_effective_surface,
    "direct-sim": _exp_direct_sim,
    "eps-sweep": _exp_eps_sweep,
    "hj-limit": _exp_hj_limit,
    "canonical": _exp_canonical,
    "counterexample": _exp_counterexample,
    "esd": _exp_esd,
    "separable": _exp_separable,
    "fluctuation": _exp_fluctuation,
    "figure1": _exp_figure1,
}


def run_experiment(config: ExperimentConfig) -> int:
    try:
        config.validate()
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(outdir, config)
    try:
        checks, metrics = _RUNNERS[config["experiment"]](config, outdir)
    except ConfigurationError as exc:
        manifest.finish([], status="failed")
        write_json(outdir / "summary.json", {"error": str(exc), "kind": "configuration"})
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FastselError as exc:
        manifest.finish([], status="failed")
        write_json(outdir / "summary.json", {"error": str(exc), "kind": type(exc).__name__})
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    manifest.finish(checks)
    write_json(outdir / "summary.json", {
        "experiment": config["experiment"], "checks": checks, "metrics": metrics,
        "passed": all(c["pass"] for c in checks),
    })
    return 0


# ---------------------------------------------------------------------------
# pipeline comparison
# ---------------------------------------------------------------------------

def compare_histories(model, histories: dict, hj: hjlimit.HjResult, eps_window,
                      ms: int = 2048, avg_window_factor: float = 10.0):
    """Residual table between direct runs and the homogenized prediction.

    histories maps eps -> SimHistory; hj supplies the limit trait path.
    Returns a dict with per-eps log-resource residuals, trait sup-distances
    and running-average deviations.
    """
    t_lo, t_hi = eps_window
    out = {"eps": [], "r_eps": [], "trait_sup": [], "avg_dev": []}
    for e in sorted(histories, reverse=True):
        hist = histories[e]
        out["eps"].append(e)
        out["r_eps"].append(direct.log_resource_residual(model, hist, e, t_lo, t_hi, ms=ms))
        xhj = np.stack([np.interp(hist.t, hj.t, hj.xbar[:, d])
                        for d in range(hj.xbar.shape[1])], axis=-1)
        out["trait_sup"].append(float(np.max(np.linalg.norm(hist.xbar - xhj, axis=-1))))
        window = avg_window_factor * e
        avg = direct.running_average(hist.t, hist.I, window)
        ef = EffectiveFitness(model, ms=ms)
        sel = (hist.t >= t_lo) & (hist.t <= t_hi)
        pred = np.array([ef.mean_resource(xhj[i]) for i in np.nonzero(sel)[0]])
        out["avg_dev"].append(float(np.max(np.abs(avg[sel] / pred - 1.0))))
    return out


def compare_artifacts(direct_dir, hj_dir, out_dir) -> int:
    """CLI-level comparison of an eps-sweep artifact set with an hj run."""
    direct_dir, hj_dir = Path(direct_dir), Path(hj_dir)
    out_dir = Path(out_dir)
    try:
        man_d = json.loads((direct_dir / "manifest.json").read_text())
        man_h = json.loads((hj_dir / "manifest.json").read_text())
    except FileNotFoundError as exc:
        print(f"error: missing manifest: {exc}", file=sys.stderr)
        return 2
    cd, ch = man_d["config"], man_h["config"]
    if cd["model"] != ch["model"] or cd["T"] != ch["T"]:
        print("error: mismatched configs between artifact sets", file=sys.stderr)
        return 2
    cfg = ExperimentConfig(raw=cd)
    model = cfg.model()
    traj = read_csv(hj_dir / "trajectory.csv")
    dim = model.dim
    n = len(traj["t"])
    hj = hjlimit.HjResult(
        t=traj["t"], xbar=np.stack([traj[f"xbar_{d}"] for d in range(dim)], -1),
        max_u=traj["max_u"],
        M=np.stack([traj[f"M_{a}{b}"] for a in range(dim) for b in range(dim)], -1
                   ).reshape(n, dim, dim),
        rho=traj["rho"],
        xbar_ode=np.stack([traj[f"xbar_ode_{d}"] for d in range(dim)], -1),
        drift_max=float(np.max(np.abs(traj["max_u"]))), u=np.empty(0),
        grid=cfg.grid(), dt=0.0,
    )
    histories = {}
    for e in cd["eps"]:
        data = read_csv(direct_dir / f"history_eps{float(e):g}.csv")
        histories[float(e)] = _history_from_csv(data, dim)
    t_lo, t_hi = cd.get("residual_window", [0.5, None])
    t_hi = cd["T"] if t_hi is None else t_hi
    table = compare_histories(model, histories, hj, (t_lo, t_hi), ms=cd.get("ms", 2048))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "decay.csv", ["eps", "r_eps", "trait_sup", "avg_dev"],
              [np.asarray(table["eps"]), np.asarray(table["r_eps"]),
               np.asarray(table["trait_sup"]), np.asarray(table["avg_dev"])])
    write_json(out_dir / "comparison.json", table)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fastsel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a named experiment")
    runp.add_argument("--config", type=str, default=None, help="JSON config path")
    runp.add_argument("--experiment", type=str, default=None,
                      help=f"one of {', '.join(EXPERIMENTS)}")
    runp.add_argument("--out", type=str, default=None, help="output directory")
    runp.add_argument("--eps", type=str, default=None,
                      help="comma-separated scale parameters, e.g. 0.04,0.02,0.01")
    runp.add_argument("--seed", type=int, default=None)

    cmpp = sub.add_parser("compare", help="compare a direct sweep with an hj run")
    cmpp.add_argument("--direct", type=str, required=True)
    cmpp.add_argument("--hj", type=str, required=True)
    cmpp.add_argument("--out", type=str, required=True)

    args = parser.parse_args(argv)
    if args.command == "compare":
        return compare_artifacts(args.direct, args.hj, args.out)

    overrides = {"experiment": args.experiment, "out": args.out, "seed": args.seed}
    if args.eps is not None:
        try:
            overrides["eps"] = [float(tok) for tok in args.eps.split(",") if tok]
        except ValueError:
            print(f"error: malformed eps list {args.eps!r}", file=sys.stderr)
            return 2
    try:
        config = ExperimentConfig.load(args.config, overrides)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return 2
    return run_experiment(config)


if __name__ == "__main__":
    sys.exit(main())
