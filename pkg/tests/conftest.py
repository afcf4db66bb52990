import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import fastsel as fs
from fastsel import direct, hjlimit
from fastsel.grid import TraitGrid
from fastsel.model import InitialDatum

ARTIFACTS = Path(__file__).resolve().parent.parent / "artifacts" / "acceptance"

# wall-time of each shared fixture, attributed to the criteria that need it
FIXTURE_SECONDS = {}


def _timed(name, fn):
    t0 = time.perf_counter()
    out = fn()
    FIXTURE_SECONDS[name] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def fig1_model():
    return fs.figure1_model()


@pytest.fixture(scope="session")
def fig1_ef(fig1_model):
    return fs.EffectiveFitness(fig1_model)


@pytest.fixture(scope="session")
def fig1_datum():
    return InitialDatum(x0=np.array([1.0]), L=0.5, rho0=1.0)


@pytest.fixture(scope="session")
def fig1_direct(fig1_model, fig1_datum):
    """Reproduction run: caption rate, eps = 0.01, 1024 nodes on [-2, 2]."""
    grid = TraitGrid(2.0, 1024, 1)
    state = _timed("fig1_direct", lambda: direct.run(
        fig1_model, fig1_datum, grid, 0.01, T=2.0, cadence=0.001))
    return state


@pytest.fixture(scope="session")
def fig1_sweep(fig1_model, fig1_datum):
    """Direct runs over the eps ladder; wider box for the 20 eps edge rule."""
    grid = TraitGrid(2.5, 1024, 1)

    def build():
        return {e: direct.run(fig1_model, fig1_datum, grid, e, T=2.0, cadence=0.001)
                for e in (0.04, 0.02, 0.01)}

    return _timed("fig1_sweep", build)


@pytest.fixture(scope="session")
def fig1_hj(fig1_ef, fig1_datum):
    grid = TraitGrid(2.0, 1024, 1)
    return _timed("fig1_hj", lambda: hjlimit.hj_run(
        fig1_ef, fig1_datum, grid, T=2.0))


@pytest.fixture(scope="session")
def fig1_hj_long(fig1_ef, fig1_datum):
    grid = TraitGrid(2.0, 256, 1)
    return _timed("fig1_hj_long", lambda: hjlimit.hj_run(
        fig1_ef, fig1_datum, grid, T=20.0))


@pytest.fixture(scope="session")
def fig1_direct_long(fig1_model, fig1_datum):
    grid = TraitGrid(2.0, 1024, 1)
    return _timed("fig1_direct_long", lambda: direct.run(
        fig1_model, fig1_datum, grid, 0.01, T=5.0, cadence=0.001))


@pytest.fixture(scope="session")
def counterexample_run():
    ef, exact_xbar, exact_u = hjlimit.rotation_counterexample()
    grid = TraitGrid(2.2, 128, 2)
    datum = InitialDatum(x0=np.array([1.0, 0.0]), L=1.0, rho0=1.0)
    coords = grid.coords()
    sup_err = {"value": 0.0}

    def probe(t, u):
        err = float(np.max(np.abs(u - exact_u(coords, t))))
        sup_err["value"] = max(sup_err["value"], err)

    res = _timed("counterexample", lambda: hjlimit.hj_run(
        ef, datum, grid, 2.0 * np.pi, cfl=0.25,
        canonical_mode="ansatz", canonical_F=ef.F, on_record=probe))
    return ef, exact_xbar, exact_u, grid, res, sup_err["value"]


@pytest.fixture(scope="session")
def separable_run():
    model = fs.separable_model()
    grid = TraitGrid(2.0, 256, 1)
    datum = InitialDatum(x0=np.array([1.0]), L=0.5, rho0=0.3)
    state = _timed("separable", lambda: direct.run(
        model, datum, grid, 0.01, T=5.0, cadence=0.001, record_f=True))
    return model, grid, state
