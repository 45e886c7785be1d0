"""Type-1 nonuniform FFT against direct summation."""

import numpy as np
import pytest

from lap3d.nufft import FrequencyOutOfRange, nufft_field, nufft_type1


def direct_type1(points, strengths, n_modes):
    kk = np.arange(-(n_modes // 2), n_modes - n_modes // 2)
    k1, k2, k3 = np.meshgrid(kk, kk, kk, indexing="ij")
    out = np.zeros((n_modes,) * 3, dtype=complex)
    for x, c in zip(points, strengths):
        out += c * np.exp(1j * (k1 * x[0] + k2 * x[1] + k3 * x[2]))
    return out


class TestType1:
    def test_matches_direct_summation(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-np.pi, np.pi * 0.999, (200, 3))
        c = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        fast = nufft_type1(pts, c, 16)
        slow = direct_type1(pts, c, 16)
        scale = np.abs(c).sum()
        assert np.max(np.abs(fast - slow)) <= 1e-9 * scale

    def test_single_point_is_pure_phase(self):
        x = np.array([[0.4, -1.1, 2.0]])
        f = nufft_type1(x, np.array([1.0]), 16)
        kk = np.arange(-8, 8)
        k1, k2, k3 = np.meshgrid(kk, kk, kk, indexing="ij")
        expected = np.exp(1j * (k1 * 0.4 - k2 * 1.1 + k3 * 2.0))
        assert np.max(np.abs(f - expected)) <= 1e-9
        assert np.max(np.abs(np.abs(f) - 1.0)) <= 1e-9

    def test_point_at_origin_gives_constant(self):
        f = nufft_type1(np.zeros((1, 3)), np.array([2.5 + 0j]), 16)
        assert np.max(np.abs(f - 2.5)) <= 1e-9

    def test_linearity(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(-3, 3, (50, 3))
        c1 = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        c2 = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        combo = nufft_type1(pts, c1 + 2j * c2, 16)
        parts = nufft_type1(pts, c1, 16) + 2j * nufft_type1(pts, c2, 16)
        assert np.max(np.abs(combo - parts)) <= 1e-9 * np.abs(c1).sum()

    def test_points_out_of_range(self):
        with pytest.raises(FrequencyOutOfRange):
            nufft_type1(np.array([[4.0, 0.0, 0.0]]), np.array([1.0]), 8)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nufft_type1(np.zeros((2, 3)), np.ones(3), 8)


class TestField:
    def test_matches_direct_exponential_sum(self):
        rng = np.random.default_rng(2)
        verts = rng.uniform(-1, 1, (60, 3))
        amps = rng.standard_normal(60) + 1j * rng.standard_normal(60)
        n, L = 16, 6.0
        vals, spacing = nufft_field(verts, amps, n, L)
        assert spacing == pytest.approx(2 * L / n)
        kk = np.arange(-(n // 2), n - n // 2)
        xs = kk * spacing
        direct = np.zeros((n, n, n), dtype=complex)
        for v, a in zip(verts, amps):
            ph = (xs[:, None, None] * v[0] + xs[None, :, None] * v[1]
                  + xs[None, None, :] * v[2])
            direct += a * np.exp(1j * ph)
        assert np.max(np.abs(vals - direct)) <= 1e-9 * np.abs(amps).sum()

    def test_vertex_frequency_cap(self):
        verts = np.array([[10.0, 0.0, 0.0]])
        with pytest.raises(FrequencyOutOfRange):
            nufft_field(verts, np.array([1.0]), 16, 12.0)
