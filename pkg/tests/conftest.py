"""Shared fixtures: meshes, patches, scans, and solver runs that several test
modules (and the acceptance gate) reuse.  Everything heavy is session-scoped
and timed so the acceptance tests can assert their runtime budgets.
"""

import time

import numpy as np
import pytest

from lap3d.dyadic import (
    build_profile,
    flat_patch,
    graph_patch,
    kernel_estimate_scan,
    strichartz_scan,
)
from lap3d.extension import ExponentPair, opnorm_scan
from lap3d.fields import GridField
from lap3d.geometry import check_assumptions
from lap3d.mesh import decay_scan, mesh_level_set
from lap3d.solver import build_partition, limiting_absorption
from lap3d.symbols import cossum_symbol, sphere_symbol, torus_quartic_symbol

from fractions import Fraction

ES_PATCH_POINT = (2.122, 0.780, 0.778)
ES_LEVEL = 0.9
HELMHOLTZ_N = 128
HELMHOLTZ_L = 16.0 * np.pi
HELMHOLTZ_RHS_WIDTH = 5.0


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def profile():
    return build_profile()


@pytest.fixture(scope="session")
def profile_wide():
    # longer sample range pushes the transform's truncation tail below 1e-8
    return build_profile(umax=400.0)


@pytest.fixture(scope="session")
def sphere_mesh():
    return mesh_level_set(sphere_symbol(), 0.0, [[-1.3, 1.3]] * 3, 2.6 / 40)


@pytest.fixture(scope="session")
def sphere_mesh_fine():
    # resolves the anti-aliasing cap pi/(2h) > 128 needed for R up to 128
    return mesh_level_set(sphere_symbol(), 0.0, [[-1.3, 1.3]] * 3, 0.012)


@pytest.fixture(scope="session")
def sphere_decay(sphere_mesh_fine):
    rep, elapsed = timed(
        decay_scan, sphere_mesh_fine, directions=64, rmin=4.0, rmax=128.0
    )
    return {"report": rep, "elapsed": elapsed}


@pytest.fixture(scope="session")
def torus_mesh():
    return mesh_level_set(
        torus_quartic_symbol(2.0, 1.0), 0.0, [[-3.3, 3.3]] * 3, 0.05
    )


@pytest.fixture(scope="session")
def sphere_report():
    return check_assumptions(sphere_symbol(), [[-2, 2]] * 3, (-0.2, 0.2), 20)


@pytest.fixture(scope="session")
def torus_report():
    return check_assumptions(
        torus_quartic_symbol(2.0, 1.0), [[-3.3, 3.3]] * 3, (-0.4, 0.4), 24
    )


@pytest.fixture(scope="session")
def cossum_patch_report():
    x0 = np.asarray(ES_PATCH_POINT)
    box = np.stack([x0 - 0.7, x0 + 0.7], axis=1)
    return check_assumptions(cossum_symbol(), box, (0.85, 0.95), 20)


@pytest.fixture(scope="session")
def es_patch():
    return graph_patch(cossum_symbol(), ES_PATCH_POINT, 0.7, level=ES_LEVEL)


@pytest.fixture(scope="session")
def sphere_patch():
    return graph_patch(sphere_symbol(), (0.0, 0.0, 1.0), 0.4)


@pytest.fixture(scope="session")
def es_kernel_scan(es_patch):
    scan, elapsed = timed(
        kernel_estimate_scan,
        es_patch,
        2.0 ** -np.arange(8, 12),
        x3_samples=10,
        nodes_cap=3000,
        single_precision=True,
    )
    return {"scan": scan, "elapsed": elapsed}


@pytest.fixture(scope="session")
def sphere_kernel_scan(sphere_patch):
    scan, elapsed = timed(
        kernel_estimate_scan,
        sphere_patch,
        2.0 ** -np.arange(7, 11),
        x3_samples=16,
        nodes_cap=900,
    )
    return {"scan": scan, "elapsed": elapsed}


@pytest.fixture(scope="session")
def es_strichartz(es_patch, profile):
    return strichartz_scan(es_patch, profile, j_list=range(2, 9))


@pytest.fixture(scope="session")
def flat_strichartz(profile):
    return strichartz_scan(flat_patch(0.7), profile, j_list=range(2, 9))


@pytest.fixture(scope="session")
def helmholtz():
    w = HELMHOLTZ_RHS_WIDTH
    f = GridField.centered_box(
        lambda P: np.exp(-np.sum(P**2, axis=-1) / (2 * w * w)),
        HELMHOLTZ_N,
        HELMHOLTZ_L,
    )
    run, elapsed = timed(
        limiting_absorption, sphere_symbol(), f,
        delta0=0.125, steps=6, sign=-1, keep_iterates=False,
    )
    return {"f": f, "run": run, "elapsed": elapsed}


@pytest.fixture(scope="session")
def helmholtz_partition(helmholtz):
    return build_partition(sphere_symbol(), helmholtz["f"], 0.3)


@pytest.fixture(scope="session")
def opnorm_rows(sphere_mesh):
    pair = ExponentPair(Fraction(3, 4), Fraction(3, 20))
    rows = {}
    for trials in (50, 100):
        rows[trials] = opnorm_scan(
            sphere_mesh, None, [pair], trials=trials,
            symbol=sphere_symbol(), seed=2024,
        )[0]
    return rows
