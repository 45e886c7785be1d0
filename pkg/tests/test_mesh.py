"""Level-set triangulation quality, surface-measure Fourier transforms, and
decay-exponent scans."""

import numpy as np
import pytest

from lap3d.mesh import (
    EmptySurface,
    ResolutionCap,
    decay_scan,
    load_mesh,
    mesh_level_set,
    save_mesh,
    surface_fourier,
    surface_fourier_many,
)
from lap3d.symbols import Symbol, sphere_symbol, torus_quartic_symbol


class TestMeshQuality:
    def test_sphere_area(self, sphere_mesh):
        assert abs(sphere_mesh.area - 4 * np.pi) <= 0.001 * 4 * np.pi

    def test_sphere_vertices_on_level_set(self, sphere_mesh):
        r2 = np.sum(sphere_mesh.vertices**2, axis=1)
        assert np.max(np.abs(r2 - 1.0)) <= 1e-8

    def test_sphere_normals_outward(self, sphere_mesh):
        dots = np.sum(sphere_mesh.normals * sphere_mesh.vertices, axis=1)
        assert np.min(dots) > 0.999999

    def test_torus_area(self, torus_mesh):
        # surface area of the torus with R = 2, r = 1 is 4 pi^2 R r
        assert abs(torus_mesh.area - 8 * np.pi**2) <= 0.005 * 8 * np.pi**2

    def test_quadrature_order(self):
        # halving h should cut the sphere-area error at least 3.5x
        errs = []
        for h in (0.13, 0.065):
            m = mesh_level_set(sphere_symbol(), 0.0, [[-1.3, 1.3]] * 3, h)
            errs.append(abs(m.area - 4 * np.pi))
        assert errs[0] / errs[1] >= 3.5

    def test_density_moment(self, sphere_mesh):
        # int_{S^2} z^2 dsigma = 4 pi / 3
        m = sphere_mesh.with_density(lambda v: v[:, 2] ** 2)
        assert abs(m.mass() - 4 * np.pi / 3) <= 0.005 * 4 * np.pi / 3

    def test_weights_sum_to_area(self, sphere_mesh):
        assert sphere_mesh.weights.sum() == pytest.approx(sphere_mesh.area)
        assert np.all(sphere_mesh.weights > 0)

    def test_step_cap(self):
        with pytest.raises(ValueError):
            mesh_level_set(sphere_symbol(), 0.0, [[-1.3, 1.3]] * 3, 0.3)

    def test_empty_surface(self):
        with pytest.raises(EmptySurface):
            mesh_level_set(sphere_symbol(), 10.0, [[-1.3, 1.3]] * 3, 2.6 / 40)

    def test_save_load_round_trip(self, sphere_mesh, tmp_path):
        path = str(tmp_path / "mesh.npz")
        save_mesh(sphere_mesh, path)
        m = load_mesh(path)
        assert m.a == sphere_mesh.a
        assert m.h == sphere_mesh.h
        assert np.array_equal(m.vertices, sphere_mesh.vertices)
        assert np.array_equal(m.triangles, sphere_mesh.triangles)
        assert np.array_equal(m.weights, sphere_mesh.weights)
        assert np.array_equal(m.normals, sphere_mesh.normals)
        assert np.array_equal(m.density, sphere_mesh.density)


class TestSurfaceFourier:
    def test_zero_frequency_is_mass(self, sphere_mesh):
        mu0 = surface_fourier(sphere_mesh, (0.0, 0.0, 0.0))
        assert mu0.real == pytest.approx(sphere_mesh.mass(), rel=1e-14)
        assert mu0.imag == 0.0

    def test_sphere_sinc(self, sphere_mesh_fine):
        # mu-hat(t e) = 4 pi sin(t)/t for the unit sphere; compare against
        # the envelope 4 pi / t since the target passes through zero
        ts = np.linspace(1.0, 40.0, 40)
        e = np.array([0.3, -0.5, 0.81])
        e /= np.linalg.norm(e)
        vals = surface_fourier_many(sphere_mesh_fine, np.outer(ts, e))
        target = 4 * np.pi * np.sin(ts) / ts
        err = np.abs(vals - target)
        assert np.max(err / (4 * np.pi / ts)) <= 0.01

    def test_conjugate_symmetry(self, sphere_mesh):
        rng = np.random.default_rng(9)
        for _ in range(10):
            x = rng.uniform(-5, 5, 3)
            a = surface_fourier(sphere_mesh, x)
            b = surface_fourier(sphere_mesh, -x)
            assert abs(a - np.conj(b)) <= 1e-12 * max(1.0, abs(a))

    def test_rotation_invariance(self, sphere_mesh):
        # rotating the mesh rotates mu-hat: mu_R-hat(x) = mu-hat(R^T x)
        th = 0.73
        rot = np.array([
            [np.cos(th), -np.sin(th), 0.0],
            [np.sin(th), np.cos(th), 0.0],
            [0.0, 0.0, 1.0],
        ])
        rotated = sphere_mesh.rotated(rot)
        rng = np.random.default_rng(10)
        for _ in range(10):
            x = rng.uniform(-5, 5, 3)
            a = surface_fourier(rotated, x)
            b = surface_fourier(sphere_mesh, rot.T @ x)
            assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    def test_many_matches_scalar(self, sphere_mesh):
        rng = np.random.default_rng(11)
        xs = rng.uniform(-8, 8, (20, 3))
        vals = surface_fourier_many(sphere_mesh, xs)
        for x, v in zip(xs, vals):
            assert abs(v - surface_fourier(sphere_mesh, x)) <= 1e-10


class TestDecayScan:
    def test_sphere_curvature_exponent(self, sphere_decay):
        # positive curvature gives |mu-hat| ~ R^-1 in every direction
        rep = sphere_decay["report"]
        assert abs(rep.alpha_min - 1.0) <= 0.1
        assert np.all(np.abs(rep.alpha_per_direction - 1.0) <= 0.15)

    def test_radii_are_dyadic_ladder(self, sphere_decay):
        r = sphere_decay["report"].radii
        assert r[0] == 4.0 and r[-1] == 128.0
        assert np.allclose(r[1:] / r[:-1], 2.0)

    def test_rows_shape(self, sphere_decay):
        rep = sphere_decay["report"]
        rows = list(rep.rows())
        assert len(rows) == len(rep.directions) * len(rep.radii)
        assert all(len(r) == 6 for r in rows)

    def test_alpha_stabilizes_as_rmax_grows(self, sphere_mesh_fine):
        # widening the fit window must not let the exponent drift down
        alphas = []
        for rmax in (16.0, 32.0, 64.0, 128.0):
            rep = decay_scan(sphere_mesh_fine, directions=32, rmin=4.0,
                             rmax=rmax)
            alphas.append(rep.alpha_min)
        for a0, a1 in zip(alphas, alphas[1:]):
            assert a1 >= a0 - 0.05

    def test_torus_localized_flat_band_decays_slower(self):
        # density concentrated near the zero-curvature circles: the decay
        # exponent along the axis drops well below the curved-case 1
        s = torus_quartic_symbol(2.0, 1.0)

        def density(v):
            rho = np.linalg.norm(v[:, :2], axis=1)
            dp = (rho - 2.0) ** 2 + (v[:, 2] - 1.0) ** 2
            dm = (rho - 2.0) ** 2 + (v[:, 2] + 1.0) ** 2
            return np.exp(-8 * dp) + np.exp(-8 * dm)

        mesh = mesh_level_set(s, 0.0, [[-3.3, 3.3]] * 3, 0.045,
                              density=density)
        rep = decay_scan(mesh, directions=64, rmin=4.0, rmax=32.0)
        assert np.isfinite(rep.alpha_min)
        assert rep.alpha_min < 0.9

    def test_flat_plane_no_decay(self):
        # a flat graph patch: mu-hat along the normal is exactly the mass
        s = Symbol("polynomial", {(0, 0, 1): 1.0})
        mesh = mesh_level_set(
            s, 0.0, [[-1.6, 1.6], [-1.6, 1.6], [-0.2, 0.2]], 0.02,
            density=lambda v: np.exp(-4 * (v[:, 0] ** 2 + v[:, 1] ** 2)),
        )
        ts = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
        vals = surface_fourier_many(
            mesh, np.outer(ts, np.array([0.0, 0.0, 1.0]))
        )
        assert np.max(np.abs(vals - mesh.mass())) <= 1e-10 * mesh.mass()
        # scan directions are never exactly normal, but the flat band still
        # pulls the minimum exponent well below the curved-surface value 1
        rep = decay_scan(mesh, directions=32, rmin=4.0, rmax=64.0)
        assert rep.alpha_min < 0.9

    def test_anti_aliasing_cap(self, sphere_mesh):
        with pytest.raises(ResolutionCap, match="anti-aliasing cap"):
            decay_scan(sphere_mesh, directions=32, rmin=4.0, rmax=128.0)

    def test_direction_floor(self, sphere_mesh):
        with pytest.raises(ValueError, match="32 scan directions"):
            decay_scan(sphere_mesh, directions=16, rmin=4.0, rmax=16.0)
