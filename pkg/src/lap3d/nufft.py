"""Type-1 nonuniform FFT: f_k = sum_j c_j exp(i k . x_j) for k on a centered
integer cube, via Kaiser-Bessel spreading onto a 2x oversampled grid.

Used to evaluate surface sums sum_v a_v exp(i x . v) on large output grids
where direct summation is too slow; accuracy is set by the spreading width
(about one decimal digit per point of width).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


class FrequencyOutOfRange(ValueError):
    pass


@njit(cache=True)
def _spread(grid_re, grid_im, s, c_re, c_im, width, beta, n):
    half = width // 2
    for j in range(s.shape[0]):
        # per-axis kernel samples at the width nearest grid points
        k0 = np.empty(width)
        k1 = np.empty(width)
        k2 = np.empty(width)
        i0 = int(math.floor(s[j, 0])) - half + 1
        i1 = int(math.floor(s[j, 1])) - half + 1
        i2 = int(math.floor(s[j, 2])) - half + 1
        for t in range(width):
            z = 2.0 * (i0 + t - s[j, 0]) / width
            k0[t] = math.exp(beta * (math.sqrt(1.0 - min(z * z, 1.0)) - 1.0))
            z = 2.0 * (i1 + t - s[j, 1]) / width
            k1[t] = math.exp(beta * (math.sqrt(1.0 - min(z * z, 1.0)) - 1.0))
            z = 2.0 * (i2 + t - s[j, 2]) / width
            k2[t] = math.exp(beta * (math.sqrt(1.0 - min(z * z, 1.0)) - 1.0))
        for a in range(width):
            ia = (i0 + a) % n
            for b in range(width):
                ib = (i1 + b) % n
                w_ab = k0[a] * k1[b]
                for d in range(width):
                    ic = (i2 + d) % n
                    w = w_ab * k2[d]
                    grid_re[ia, ib, ic] += w * c_re[j]
                    grid_im[ia, ib, ic] += w * c_im[j]


def _kernel_transform(k: np.ndarray, width: int, beta: float, n: int) -> np.ndarray:
    """ghat(k) = int_{-w/2}^{w/2} exp(beta(sqrt(1-(2t/w)^2)-1)) cos(2 pi k t/n) dt
    by Gauss-Legendre quadrature (the kernel has no closed-form transform)."""
    nodes, wts = np.polynomial.legendre.leggauss(240)
    z = nodes  # t = (w/2) z
    g = np.exp(beta * (np.sqrt(1.0 - z * z) - 1.0))
    xi = (math.pi * width / n) * np.asarray(k, dtype=float)
    return (width / 2.0) * (np.cos(np.outer(xi, z)) @ (wts * g))


def nufft_type1(
    points: np.ndarray,
    strengths: np.ndarray,
    n_modes: int,
    width: int = 12,
    oversample: int = 2,
) -> np.ndarray:
    """f_k = sum_j strengths_j exp(i k . points_j) for integer modes k in
    [-n_modes/2, n_modes/2)^3, returned in increasing-k (centered) order.
    Points must lie in [-pi, pi)^3.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    strengths = np.asarray(strengths, dtype=complex).ravel()
    if len(strengths) != len(points):
        raise ValueError("strengths and points length mismatch")
    if np.any(np.abs(points) > math.pi):
        raise FrequencyOutOfRange("points must lie in [-pi, pi)^3")
    n = oversample * n_modes
    if n < 2 * width:
        raise ValueError("mode count too small for the spreading width")
    beta = 2.30 * width
    s = (points + math.pi) * (n / (2 * math.pi))
    grid_re = np.zeros((n, n, n))
    grid_im = np.zeros((n, n, n))
    _spread(grid_re, grid_im, s, np.ascontiguousarray(strengths.real),
            np.ascontiguousarray(strengths.imag), width, beta, n)
    # sum_m tau(m) e^{+2 pi i k m / n} = n^3 ifftn(tau)
    big = np.fft.ifftn(grid_re + 1j * grid_im) * n**3
    kk = np.arange(-(n_modes // 2), n_modes - n_modes // 2)
    big = big[np.ix_(kk % n, kk % n, kk % n)]
    # e^{i k x} = e^{2 pi i k s / n} e^{-i pi k}; deconvolve the spreading
    corr = np.exp(-1j * math.pi * kk) / _kernel_transform(kk, width, beta, n)
    return big * corr[:, None, None] * corr[None, :, None] * corr[None, None, :]


def nufft_field(vertices, amplitudes, n: int, half_length: float,
                width: int = 12):
    """sum_v a_v exp(i x . v) on the centered cube grid [-L, L)^3 with n
    points per axis: mode k corresponds to x = k * (2L/n) after rescaling the
    vertices into [-pi, pi).  Returns (values array, spacing)."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    scale = half_length * 2.0 / n  # x = k * scale
    pts = vertices * scale
    if np.any(np.abs(pts) > math.pi):
        raise FrequencyOutOfRange(
            "half_length * max|v| * 2 / n exceeds pi; refine the output grid"
        )
    vals = nufft_type1(pts, amplitudes, n, width=width)
    return vals, scale
