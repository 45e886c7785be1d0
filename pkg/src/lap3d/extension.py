"""Restriction-extension machinery: the exact exponent-region predicate for
the L^p -> L^q mapping pentagon, the extension operator
Ef(x) = sum_v w_v beta_v fhat(v) e^{ix.v} on FFT grids, and empirical
operator-norm scans over a fixed trial family.

Empirical bounds are lower bounds only: a scan reports the best ratio
witnessed, never a certified operator norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fields import GridField, lebesgue_norm, lorentz_norm
from .mesh import SurfaceMesh, surface_fourier_many
from .nufft import FrequencyOutOfRange, nufft_type1


# --- exponent region -------------------------------------------------------------

_F = Fraction
VERTEX_A = (_F(1), _F(0))
VERTEX_B = (_F(7, 10), _F(9, 70))
VERTEX_C = (_F(7, 10), _F(0))
VERTEX_B_PRIME = (_F(61, 70), _F(3, 10))
VERTEX_C_PRIME = (_F(1), _F(3, 10))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("exponent coordinates must be exact rationals, not floats")
    return Fraction(x)


@dataclass(frozen=True)
class ExponentPair:
    inv_p: Fraction
    inv_q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "inv_p", _as_fraction(self.inv_p))
        object.__setattr__(self, "inv_q", _as_fraction(self.inv_q))
        if not (0 <= self.inv_p <= 1 and 0 <= self.inv_q <= 1):
            raise ValueError("(1/p, 1/q) must lie in the unit square")

    @property
    def p(self) -> Fraction | float:
        return math.inf if self.inv_p == 0 else 1 / self.inv_p

    @property
    def q(self) -> Fraction | float:
        return math.inf if self.inv_q == 0 else 1 / self.inv_q


@dataclass(frozen=True)
class RegionVerdict:
    classification: str  # strong | weak_I | weak_II | restricted_weak | outside
    witness: str


def classify_exponents(e: ExponentPair) -> RegionVerdict:
    """Exact classification of (1/p, 1/q) against the mapping pentagon.

    Strong bounds hold on 1/p > 7/10, 1/q < 3/10, 1/p - 1/q >= 4/7; the
    endpoint segments carry weak or restricted-weak bounds: weak_I on
    (B', C'], weak_II on (B, C], restricted weak exactly at B and B'.
    """
    ip, iq = e.inv_p, e.inv_q
    if (ip, iq) in (VERTEX_B, VERTEX_B_PRIME):
        return RegionVerdict("restricted_weak", "vertex B or B'")
    if iq == _F(3, 10) and VERTEX_B_PRIME[0] < ip <= 1:
        return RegionVerdict("weak_I", "segment (B', C']")
    if ip == _F(7, 10) and 0 <= iq < VERTEX_B[1]:
        return RegionVerdict("weak_II", "segment (B, C]")
    if ip > _F(7, 10) and iq < _F(3, 10) and ip - iq >= _F(4, 7):
        return RegionVerdict(
            "strong", "1/p > 7/10, 1/q < 3/10, 1/p - 1/q >= 4/7"
        )
    return RegionVerdict("outside", "no pentagon condition met")


def norms_for(classification: str):
    """(target_norm, source_norm) callables for a classification."""
    if classification == "strong":
        return (lambda g, pair: lebesgue_norm(g, float(pair.q)),
                lambda g, pair: lebesgue_norm(g, float(pair.p)))
    if classification == "weak_I":
        return (lambda g, pair: lorentz_norm(g, float(pair.q), np.inf),
                lambda g, pair: lebesgue_norm(g, float(pair.p)))
    if classification == "weak_II":
        return (lambda g, pair: lebesgue_norm(g, float(pair.q)),
                lambda g, pair: lorentz_norm(g, float(pair.p), 1))
    if classification == "restricted_weak":
        return (lambda g, pair: lorentz_norm(g, float(pair.q), np.inf),
                lambda g, pair: lorentz_norm(g, float(pair.p), 1))
    raise ValueError(f"no norm pairing for classification {classification!r}")


# --- extension operator ----------------------------------------------------------


def _fft_spectrum(f: GridField):
    """fhat on the grid's frequency lattice: fhat(xi) = sum f(x) e^{-ix.xi} dV,
    returned with fftshifted (monotone) frequency axes."""
    vals = np.fft.fftn(f.values) * f.cell_volume
    freqs = [
        np.fft.fftshift(2 * math.pi * np.fft.fftfreq(f.dims[i], d=f.spacing[i]))
        for i in range(3)
    ]
    vals = np.fft.fftshift(vals)
    phase_axes = [
        np.exp(-1j * np.asarray(freqs[i]) * f.origin[i]) for i in range(3)
    ]
    vals = vals * phase_axes[0][:, None, None] * phase_axes[1][None, :, None] \
        * phase_axes[2][None, None, :]
    return freqs, vals


def _trilinear(freqs, table: np.ndarray, pts: np.ndarray) -> np.ndarray:
    out = np.ones(len(pts), dtype=complex)
    idx = []
    frac = []
    for i in range(3):
        ax = freqs[i]
        if pts[:, i].min() < ax[0] or pts[:, i].max() > ax[-1]:
            raise FrequencyOutOfRange(
                f"surface exits the FFT band on axis {i}: "
                f"[{pts[:, i].min():.3f}, {pts[:, i].max():.3f}] vs "
                f"[{ax[0]:.3f}, {ax[-1]:.3f}]"
            )
        t = (pts[:, i] - ax[0]) / (ax[1] - ax[0])
        i0 = np.clip(np.floor(t).astype(int), 0, len(ax) - 2)
        idx.append(i0)
        frac.append(t - i0)
    out = np.zeros(len(pts), dtype=complex)
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                w = (
                    (frac[0] if a else 1 - frac[0])
                    * (frac[1] if b else 1 - frac[1])
                    * (frac[2] if c else 1 - frac[2])
                )
                out += w * table[idx[0] + a, idx[1] + b, idx[2] + c]
    return out


def extend(mesh: SurfaceMesh, beta, f: GridField, method: str = "auto") -> GridField:
    """Ef(x) = sum_v w_v beta(v) fhat(v) e^{ix.v} on f's grid.

    fhat comes from the FFT of f and is sampled at the mesh vertices by
    trilinear interpolation (second-order in the grid spacing, dominated by
    the surface quadrature error).  The output sum runs through a type-1
    nonuniform FFT unless the problem is small enough for direct summation.
    """
    freqs, table = _fft_spectrum(f)
    fhat_v = _trilinear(freqs, table, mesh.vertices)
    beta_v = mesh.with_density(beta).density if beta is not None else mesh.density
    amps = mesh.weights * beta_v * fhat_v
    n_out = int(np.prod(f.dims))
    if method == "direct" or (method == "auto" and n_out * len(amps) <= 2 * 10**8):
        pts = f.points().reshape(-1, 3)
        out = np.empty(n_out, dtype=complex)
        chunk = max(1, 2 * 10**7 // max(len(amps), 1))
        for lo in range(0, n_out, chunk):
            hi = min(lo + chunk, n_out)
            out[lo:hi] = np.exp(1j * (pts[lo:hi] @ mesh.vertices.T)) @ amps
        return f.copy_with(out.reshape(f.dims))
    if len(set(f.dims)) != 1 or len(set(f.spacing)) != 1:
        raise ValueError("nonuniform-FFT path needs a cubic output grid")
    n = f.dims[0]
    h = f.spacing[0]
    scaled = mesh.vertices * h
    if np.any(np.abs(scaled) > math.pi):
        raise FrequencyOutOfRange("output grid too coarse for the mesh band")
    # x = origin + k h with k = 0..n-1; recenter to k' = k - n//2
    shift = f.origin + (n // 2) * h
    amps = amps * np.exp(1j * (mesh.vertices @ shift))
    vals = nufft_type1(scaled, amps, n)
    return f.copy_with(vals)


# --- trial family and operator-norm scan -------------------------------------------

TRIAL_FAMILY_VERSION = "opnorm-v1"


def _principal_frames(s, mesh: SurfaceMesh, count: int, rng: np.random.Generator):
    """Frames (t1, t2, nu) with principal directions at spread-out vertices."""
    from .geometry import curvature_at

    picks = rng.choice(len(mesh.vertices), size=min(count, len(mesh.vertices)),
                       replace=False)
    frames = []
    for i in picks:
        cd = curvature_at(s, mesh.vertices[i])
        frames.append((mesh.vertices[i], cd.dirs[0], cd.dirs[1], cd.nu))
    return frames


def opnorm_trials(mesh: SurfaceMesh, symbol=None, trials: int = 50,
                  seed: int = 2024) -> list[dict]:
    """Fixed deterministic trial family (version opnorm-v1): isotropic
    Gaussians, modulated wave packets at surface points, Knapp-type slabs
    aligned with principal frames, and characteristic functions of tubes.
    All trials are described in frequency space and sampled onto f's grid.
    """
    rng = np.random.default_rng(seed)
    out = []
    center = mesh.vertices.mean(axis=0)
    for w in (0.25, 0.5, 1.0, 2.0):
        out.append({"kind": "gaussian", "center": center, "width": w})
    verts = mesh.vertices[rng.choice(len(mesh.vertices), size=12, replace=False)]
    for v in verts:
        for w in (0.3, 0.8):
            out.append({"kind": "gaussian", "center": v, "width": w})
    if symbol is not None:
        frames = _principal_frames(symbol, mesh, 6, rng)
        for (v, t1, t2, nu) in frames:
            for aniso in (2.0, 4.0, 8.0):
                w_t = 1.0 / math.sqrt(aniso)
                out.append({
                    "kind": "slab", "center": v, "axes": (t1, t2, nu),
                    "widths": (w_t, w_t, 1.0 / aniso),
                })
    for _ in range(max(0, trials - len(out))):
        v = mesh.vertices[rng.integers(len(mesh.vertices))]
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        out.append({"kind": "tube", "direction": d, "radius": rng.uniform(0.5, 2.0),
                    "modulation": v})
    return out[:trials] if trials <= len(out) else out


def _trial_field(trial: dict, dims, box) -> GridField:
    kind = trial["kind"]
    if kind == "gaussian":
        c = np.asarray(trial["center"])
        w = trial["width"]

        def fn(pts):
            # spatial Gaussian modulated to frequency center c
            r2 = np.sum(pts**2, axis=-1)
            return np.exp(-(w**2) * r2 / 2.0) * np.exp(1j * (pts @ c))

        return GridField.from_function(fn, dims, box)
    if kind == "slab":
        c = np.asarray(trial["center"])
        t1, t2, nu = (np.asarray(a) for a in trial["axes"])
        w1, w2, w3 = trial["widths"]

        def fn(pts):
            # spatial extents reciprocal to the frequency slab widths
            a = (pts @ t1) * w1
            b = (pts @ t2) * w2
            d = (pts @ nu) * w3
            return np.exp(-(a**2 + b**2 + d**2) / 2.0) * np.exp(1j * (pts @ c))

        return GridField.from_function(fn, dims, box)
    if kind == "tube":
        d = np.asarray(trial["direction"])
        r = trial["radius"]
        m = np.asarray(trial["modulation"])

        def fn(pts):
            along = pts @ d
            perp2 = np.sum(pts**2, axis=-1) - along**2
            return np.where(perp2 <= r * r, 1.0, 0.0) * np.exp(1j * (pts @ m))

        return GridField.from_function(fn, dims, box)
    raise ValueError(f"unknown trial kind {kind!r}")


@dataclass
class OpnormRow:
    pair: ExponentPair
    classification: str
    best_ratio: float
    trial_id: int
    ratios: np.ndarray = field(repr=False, default=None)


def opnorm_scan(
    mesh: SurfaceMesh,
    beta,
    pairs,
    trials: int = 50,
    symbol=None,
    dims: int = 48,
    half_length: float = 24.0,
    seed: int = 2024,
) -> list[OpnormRow]:
    """Best ratio target-norm(Ef)/source-norm(f) over the trial family.

    The norm pairing follows the classification (strong: L^q/L^p, weak_I:
    L^{q,inf}/L^p, weak_II: L^q/L^{p,1}, restricted weak: L^{q,inf}/L^{p,1});
    reported ratios are empirical lower bounds on the operator norm.
    """
    if trials < 50:
        raise ValueError("need at least 50 trials")
    family = opnorm_trials(mesh, symbol=symbol, trials=trials, seed=seed)
    box = [[-half_length, half_length]] * 3
    fields = []
    extensions = []
    for trial in family:
        f = _trial_field(trial, (dims, dims, dims), box)
        fields.append(f)
        extensions.append(extend(mesh, beta, f))
    rows = []
    for pair in pairs:
        verdict = classify_exponents(pair)
        if verdict.classification == "outside":
            tgt = lambda g, pr: lebesgue_norm(g, float(pr.q))
            src = lambda g, pr: lebesgue_norm(g, float(pr.p))
        else:
            tgt, src = norms_for(verdict.classification)
        ratios = np.zeros(len(family))
        for i, (f, ef) in enumerate(zip(fields, extensions)):
            denom = src(f, pair)
            ratios[i] = tgt(ef, pair) / denom if denom > 0 else 0.0
        best = int(np.argmax(ratios))
        rows.append(OpnormRow(
            pair=pair,
            classification=verdict.classification,
            best_ratio=float(ratios[best]),
            trial_id=best,
            ratios=ratios,
        ))
    return rows
