"""Dyadic delta decomposition along a graph patch: the band-limited profile
phi, the localized slab operators T_delta, the kernels K_delta, and the
summation calculator for combining two geometric operator bounds.

The profile phi is the inverse transform of a smooth even bump supported in
{1/2 <= |t| <= 2} whose dyadic dilates form a partition of unity of R \\ {0},
so sum_j 2^j phi(2^j u) acts as a delta at u = 0 when paired against smooth
test functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.interpolate import CubicSpline

from .symbols import Symbol, eval_jet
from .fields import GridField


class VerificationFailed(RuntimeError):
    pass


class ResolutionCap(RuntimeError):
    pass


# --- smooth bump machinery ----------------------------------------------------


def _smooth_ramp(x):
    """C-infinity ramp: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


def _theta(t):
    """1 for |t| <= 1, 0 for |t| >= 2, C-infinity in between."""
    return _smooth_ramp(2.0 - np.abs(t))


def band_bump(t):
    """Even bump supported in 1/2 <= |t| <= 2; its dyadic dilates
    bump(t/2^j) sum to 1 for every t != 0."""
    return _theta(t) - _theta(2.0 * t)


# --- the profile ----------------------------------------------------------------


@dataclass
class DyadicProfile:
    """phi given by dense samples + cubic interpolation; even, real,
    transform supported in the band [1/2, 2]."""

    u: np.ndarray  # sample abscissae, [0, umax]
    samples: np.ndarray  # phi(u)
    j_range: tuple[int, int]
    tolerance: float
    _spline: CubicSpline = field(repr=False, default=None)

    def __post_init__(self):
        if self._spline is None:
            self._spline = CubicSpline(self.u, self.samples, extrapolate=False)

    @property
    def umax(self) -> float:
        return float(self.u[-1])

    def __call__(self, v):
        v = np.abs(np.asarray(v, dtype=float))
        out = self._spline(np.minimum(v, self.umax))
        return np.where(v > self.umax, 0.0, out)

    def transform(self, t):
        """phi-hat(t) = int phi(u) e^{-iut} du, real and even; recomputed by
        quadrature on the stored samples (verification aid)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = np.gradient(self.u)
        vals = 2.0 * np.cos(np.outer(t, self.u)) @ (w * self.samples)
        vals -= w[0] * self.samples[0]  # u=0 sample counted once
        return vals if vals.size > 1 else float(vals[0])

    def pair_with_delta(self, f, j_range: tuple[int, int] | None = None) -> float:
        """sum_j 2^j int phi(2^j u) f(u) du over the truncated j range,
        evaluated per scale as int phi(v) f(2^-j v) dv on the sample grid."""
        jlo, jhi = j_range if j_range is not None else self.j_range
        total = 0.0
        for j in range(jlo, jhi + 1):
            scale = 2.0 ** (-j)
            # refine near v = 0 where f(scale * v) varies on scale 2^j
            vfine = min(self.umax, 30.0 * 2.0**j)
            v = np.union1d(self.u, np.linspace(0.0, vfine, 4001))
            phi = self(v)
            fv = np.asarray(f(v * scale)) + np.asarray(f(-v * scale))
            total += float(np.trapezoid(phi * fv, v))
        return total


def build_profile(
    j_range: tuple[int, int] = (-10, 20),
    umax: float = 200.0,
    du: float = 0.005,
    quad_nodes: int = 1200,
    tolerance: float = 5e-4,
) -> DyadicProfile:
    """Construct phi = inverse transform of the band bump and verify the
    resolution-of-identity invariant against a Gaussian before returning.

    The truncation floor of the identity at j_range (-10, 20) is ~4e-4 for a
    unit Gaussian (the uncovered band |t| < 2^-11 of its transform), so the
    default tolerance is 5e-4.
    """
    jlo, jhi = int(j_range[0]), int(j_range[1])
    if not (jlo <= -4 and jhi >= 4):
        raise ValueError("j_range must contain [-4, 4]")
    nodes, wts = np.polynomial.legendre.leggauss(quad_nodes)
    t = 0.5 * (nodes + 1.0) * 1.5 + 0.5  # [1/2, 2]
    wts = wts * 0.75
    bump = band_bump(t)
    u = np.arange(0.0, umax + du / 2, du)
    samples = (np.cos(np.outer(u, t)) @ (wts * bump)) / math.pi
    prof = DyadicProfile(u=u, samples=samples, j_range=(jlo, jhi), tolerance=tolerance)
    value = prof.pair_with_delta(lambda v: np.exp(-np.asarray(v) ** 2))
    if abs(value - 1.0) > tolerance:
        raise VerificationFailed(
            f"resolution of identity missed: got {value!r}, tolerance {tolerance}"
        )
    return prof


# --- graph patches --------------------------------------------------------------


@dataclass
class GraphPatch:
    """A level-set piece in an adapted frame: xi = center + frame @ (xi', psi).

    ``frame`` columns are (t1, t2, nu(center)), so grad psi(0) = 0 and the
    patch is a graph over the disc |xi'| <= radius.
    """

    symbol: Symbol | None
    level: float
    center: np.ndarray
    frame: np.ndarray  # 3x3 orthonormal, third column = normal at center
    radius: float
    flat: bool = False
    beta_inner: float = 0.5  # beta == 1 on |xi'| <= beta_inner * radius

    def psi(self, xi_prime: np.ndarray) -> np.ndarray:
        xp = np.asarray(xi_prime, dtype=float).reshape(-1, 2)
        if self.flat:
            return np.zeros(len(xp))
        out = np.zeros(len(xp))
        pts = self.center + xp @ self.frame[:, :2].T
        nu = self.frame[:, 2]
        for _ in range(60):
            cur = pts + out[:, None] * nu
            r = self.symbol.eval_many(cur) - self.level
            if np.max(np.abs(r)) < 1e-12:
                break
            dz = (self.symbol.grad_many(cur) * nu).sum(axis=1)
            out -= r / dz
        return out

    def grad_psi(self, xi_prime: np.ndarray) -> np.ndarray:
        xp = np.asarray(xi_prime, dtype=float).reshape(-1, 2)
        if self.flat:
            return np.zeros((len(xp), 2))
        z = self.psi(xp)
        pts = self.center + xp @ self.frame[:, :2].T + z[:, None] * self.frame[:, 2]
        g = self.symbol.grad_many(pts)
        g1 = g @ self.frame[:, 0]
        g2 = g @ self.frame[:, 1]
        g3 = g @ self.frame[:, 2]
        return np.stack([-g1 / g3, -g2 / g3], axis=1)

    def beta(self, xi_prime: np.ndarray) -> np.ndarray:
        """Radial C-infinity cutoff, 1 on the inner disc, 0 outside radius."""
        xp = np.asarray(xi_prime, dtype=float).reshape(-1, 2)
        r = np.linalg.norm(xp, axis=1)
        r0 = self.beta_inner * self.radius
        return _smooth_ramp((self.radius - r) / (self.radius - r0))

    def max_grad(self, n: int = 33) -> float:
        ax = np.linspace(-self.radius, self.radius, n)
        xp = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
        xp = xp[np.linalg.norm(xp, axis=1) <= self.radius]
        return float(np.linalg.norm(self.grad_psi(xp), axis=1).max())


def graph_patch(s: Symbol, point, radius: float, level: float | None = None) -> GraphPatch:
    """Adapted graph patch of the level set of p through ``point``."""
    point = np.asarray(point, dtype=float)
    jet = eval_jet(s, point, 1)
    a = jet.value if level is None else float(level)
    g = jet.gradient
    nu = g / np.linalg.norm(g)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(nu)))] = 1.0
    t1 = np.cross(nu, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(nu, t1)
    frame = np.stack([t1, t2, nu], axis=1)
    return GraphPatch(symbol=s, level=a, center=point, frame=frame, radius=radius)


def flat_patch(radius: float) -> GraphPatch:
    """psi == 0 control patch (no curvature)."""
    return GraphPatch(
        symbol=None, level=0.0, center=np.zeros(3), frame=np.eye(3),
        radius=radius, flat=True,
    )


# --- kernel scan ----------------------------------------------------------------


def _patch_quadrature(patch: GraphPatch, xmax: float, nodes_cap: int = 360):
    """Tensor grid on supp(beta) resolving oscillations up to |x| = xmax."""
    span = 2.0 * patch.radius
    need = int(np.ceil(span * xmax * (1.0 + patch.max_grad()) / (2 * math.pi) * 5)) + 16
    n = min(need, nodes_cap)
    if need > nodes_cap:
        raise ResolutionCap(
            f"|x| = {xmax} needs {need} quadrature nodes per axis (cap {nodes_cap})"
        )
    ax = np.linspace(-patch.radius, patch.radius, n)
    d = ax[1] - ax[0]
    xp = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    keep = np.linalg.norm(xp, axis=1) <= patch.radius
    xp = xp[keep]
    return xp, patch.beta(xp) * d * d, patch.psi(xp)


def patch_extension_values(patch: GraphPatch, xs: np.ndarray, nodes_cap: int = 360,
                           chunk: int = 128) -> np.ndarray:
    """E(x) = int exp(i(x'.xi' + x3 psi(xi'))) beta(xi') dxi' at (m,3) points
    given in patch coordinates (x1, x2, x3)."""
    xs = np.asarray(xs, dtype=float).reshape(-1, 3)
    xmax = float(np.abs(xs).max())
    xp, w, psi = _patch_quadrature(patch, xmax, nodes_cap)
    out = np.empty(len(xs), dtype=complex)
    for lo in range(0, len(xs), chunk):
        hi = min(lo + chunk, len(xs))
        phase = xs[lo:hi, :2] @ xp.T + np.outer(xs[lo:hi, 2], psi)
        out[lo:hi] = np.exp(1j * phase) @ w
    return out


@dataclass
class KernelScan:
    deltas: np.ndarray
    max_abs: np.ndarray  # max |K_delta| over the transverse cone slab
    exponent: float  # log-log fitted
    cone_constant: float
    meta: dict = field(default_factory=dict)


def kernel_estimate_scan(
    patch: GraphPatch,
    deltas,
    cone_constant: float | None = None,
    x3_samples: int = 24,
    nodes_cap: int = 360,
    single_precision: bool = False,
) -> KernelScan:
    """Scan max |K_delta| over {|x'| <= c |x3|, |x3| in [0.25/delta, 4/delta]}
    across dyadic deltas and fit the decay exponent.

    The xi3 integral is closed-form: K_delta(x) = delta * bump(delta |x3|) *
    E(x', x3), so the kernel is exactly supported in |x3| in [1/(2 delta),
    2/delta] and only the 2D oscillatory factor E needs quadrature.  Candidate
    maxima are taken at the stationary offsets x' = -x3 grad psi(xi') inside
    the cone, plus x' = 0.
    """
    deltas = np.sort(np.asarray(deltas, dtype=float))[::-1]
    if len(deltas) < 4:
        raise ValueError("need at least 4 dyadic deltas")
    mg = patch.max_grad()
    c = cone_constant
    if c is None:
        c = min(0.5 / mg, 1.0) if mg > 1e-9 else 1.0

    # E(., x3) is a 2D Fourier transform of beta * exp(i x3 psi); the DFT is
    # exact in x', so the grid only needs to resolve the x3 psi oscillation.
    x3max = 2.2 / deltas.min()
    need = int(np.ceil(2.0 * patch.radius * x3max * max(mg, 0.05) / (2 * math.pi) * 5)) + 16
    n = min(need, nodes_cap)
    if need > nodes_cap:
        raise ResolutionCap(
            f"delta = {deltas.min()} needs {need} quadrature nodes per axis (cap {nodes_cap})"
        )
    ax = np.linspace(-patch.radius, patch.radius, n)
    dxi = ax[1] - ax[0]
    xp = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    amp = (patch.beta(xp) * dxi * dxi).reshape(n, n)
    psi = patch.psi(xp).reshape(n, n)
    if single_precision:
        amp = amp.astype(np.float32)
        psi = psi.astype(np.float32)
    nfft = 1 << max(int(np.ceil(np.log2(4 * patch.radius / dxi))), int(np.ceil(np.log2(n))) + 1)
    freqs = (2 * math.pi * np.fft.fftfreq(nfft, d=dxi)).astype(np.float32)
    rad2 = freqs[:, None] ** 2 + freqs[None, :] ** 2

    max_abs = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        x3s = np.geomspace(0.4 / d, 2.2 / d, x3_samples)
        best = 0.0
        for x3 in x3s:
            osc = amp * np.exp(1j * (np.float32(x3) if single_precision else x3) * psi)
            e_vals = np.fft.fft2(osc, s=(nfft, nfft))
            inside = rad2 <= (c * x3) ** 2
            peak = float(np.abs(e_vals[inside]).max())
            best = max(best, d * band_bump(d * x3) * peak)
        max_abs[i] = best

    slope = np.polyfit(np.log(deltas), np.log(max_abs), 1)[0]
    return KernelScan(
        deltas=deltas,
        max_abs=max_abs,
        exponent=float(slope),
        cone_constant=float(c),
        meta={"x3_samples": x3_samples, "quad_nodes": n, "fft_size": nfft},
    )


def kernel_slab_field(patch: GraphPatch, delta: float, n1: int = 33, n3: int = 33,
                      x1_halfwidth: float | None = None, nodes_cap: int = 360) -> GridField:
    """K_delta sampled on a slab around |x3| ~ 1/delta (diagnostic export)."""
    if x1_halfwidth is None:
        x1_halfwidth = 1.0 / delta
    x1 = np.linspace(-x1_halfwidth, x1_halfwidth, n1)
    x3 = np.linspace(0.25 / delta, 4.0 / delta, n3)
    pts = np.stack(np.meshgrid(x1, x1, x3, indexing="ij"), axis=-1).reshape(-1, 3)
    e = patch_extension_values(patch, pts, nodes_cap)
    k = delta * band_bump(delta * pts[:, 2]) * e
    return GridField(
        (n1, n1, n3),
        (x1[1] - x1[0], x1[1] - x1[0], x3[1] - x3[0]),
        k.reshape(n1, n1, n3),
        np.array([x1[0], x1[0], x3[0]]),
    )


# --- Strichartz scan -------------------------------------------------------------

TRIAL_FAMILY_VERSION = "strichartz-v1"


def _strichartz_trials(patch: GraphPatch, j_list) -> list[dict]:
    """Fixed, versioned family of Gaussian wave packets in the patch frame.

    Widths span the dyadic scales of j_list (tangential ~ 2^{-j/2}, normal
    ~ 2^{-j}) so the per-j sup can realize the operator's scaling.
    """
    rho = patch.radius
    centers = [np.zeros(2), np.array([0.3 * rho, 0.0]), np.array([0.0, -0.3 * rho])]
    trials = []
    for c in centers:
        trials.append({"center": c, "widths": (rho / 3, rho / 3, rho / 3)})
    for j in sorted(set(int(j) for j in j_list)):
        wt = min(rho / 3, 2.0 ** (-j / 2))
        wn = 2.0 ** (-j)
        trials.append({"center": np.zeros(2), "widths": (wt, wt, wn)})
        trials.append({"center": np.zeros(2), "widths": (rho / 3, wt, wn)})
        trials.append({"center": np.array([0.25 * rho, 0.1 * rho]), "widths": (wt, wt, wn)})
        # surface-following cap packet: tangentially wide, confined to the
        # delta-collar of the graph, so the full extension field contributes
        trials.append({"center": np.zeros(2), "widths": (rho / 3, rho / 3, wn),
                       "curved": True})
    return trials


def _packet_spectrum(patch: GraphPatch, trial: dict, xi1, xi2, xi3,
                     psi_grid: np.ndarray | None = None) -> np.ndarray:
    """Gaussian packet spectrum in surface-adapted axes at the trial center.

    Trials marked ``curved`` follow the graph: the normal Gaussian is centered
    at psi(xi') pointwise instead of at the tangent plane.
    """
    c2 = np.asarray(trial["center"], dtype=float)
    if trial.get("curved"):
        w1, w2, wn = trial["widths"]
        if psi_grid is None:
            psi_grid = patch.psi(
                np.stack(np.meshgrid(xi1, xi2, indexing="ij"), axis=-1).reshape(-1, 2)
            ).reshape(len(xi1), len(xi2))
        d1 = (xi1 - c2[0])[:, None, None]
        d2 = (xi2 - c2[1])[None, :, None]
        dn = xi3[None, None, :] - psi_grid[:, :, None]
        return np.exp(-((d1 / w1) ** 2 + (d2 / w2) ** 2 + (dn / wn) ** 2))
    z = float(patch.psi(c2[None, :])[0])
    g = patch.grad_psi(c2[None, :])[0]
    n = np.array([-g[0], -g[1], 1.0])
    n /= np.linalg.norm(n)
    t1 = np.array([1.0, 0.0, g[0]])
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    w1, w2, wn = trial["widths"]
    d1 = (xi1 - c2[0])[:, None, None]
    d2 = (xi2 - c2[1])[None, :, None]
    d3 = (xi3 - z)[None, None, :]
    a1 = d1 * t1[0] + d2 * t1[1] + d3 * t1[2]
    a2 = d1 * t2[0] + d2 * t2[1] + d3 * t2[2]
    an = d1 * n[0] + d2 * n[1] + d3 * n[2]
    return np.exp(-((a1 / w1) ** 2 + (a2 / w2) ** 2 + (an / wn) ** 2))


@dataclass
class StrichartzScan:
    j_list: np.ndarray
    ratios: np.ndarray  # per-j sup over trials of ||T f||_q / ||f||_2
    best_trial: np.ndarray  # trial index attaining the sup
    slope: float  # fitted d log2(ratio) / dj
    q: float
    trial_family: str = TRIAL_FAMILY_VERSION
    meta: dict = field(default_factory=dict)


def strichartz_scan(
    patch: GraphPatch,
    profile: DyadicProfile,
    j_list=range(2, 9),
    trials: int | None = None,
    q: float = 14.0 / 3.0,
    nxi_prime: int = 48,
    dxi3_factor: float = 2.5,
) -> StrichartzScan:
    """Per-j sup over the wave-packet family of ||T_{2^-j} f||_q / ||f||_2.

    T_delta multiplies the spectrum by beta(xi') phi((xi3 - psi(xi'))/delta)
    and is evaluated with an FFT on a j-adapted frequency grid.
    """
    j_list = np.array(sorted(set(int(j) for j in j_list)))
    family = _strichartz_trials(patch, j_list)
    if trials is not None:
        if trials > len(family):
            raise ValueError(f"trial family {TRIAL_FAMILY_VERSION} has {len(family)} members")
        family = family[:trials]
    rho = patch.radius
    ax = np.linspace(-1.1 * rho, 1.1 * rho, nxi_prime)
    d1 = ax[1] - ax[0]
    xp = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    beta = patch.beta(xp).reshape(nxi_prime, nxi_prime)
    psi = patch.psi(xp).reshape(nxi_prime, nxi_prime)
    psi_lo, psi_hi = float(psi.min()), float(psi.max())

    ratios = np.zeros(len(j_list))
    best = np.zeros(len(j_list), dtype=int)
    for ji, j in enumerate(j_list):
        delta = 2.0 ** (-j)
        pad = profile.umax * delta + 0.1
        lo, hi = psi_lo - pad, psi_hi + pad
        d3 = math.pi * delta / dxi3_factor
        n3 = int(2 ** math.ceil(math.log2((hi - lo) / d3 + 1)))
        xi3 = lo + (hi - lo) * np.arange(n3) / n3
        d3 = xi3[1] - xi3[0]
        mult = beta[:, :, None] * profile((xi3[None, None, :] - psi[:, :, None]) / delta)
        dx_cell = (2 * math.pi) ** 3 / (d1 * d1 * d3) / (nxi_prime * nxi_prime * n3)
        for ti, trial in enumerate(family):
            spec = _packet_spectrum(patch, trial, ax, ax, xi3, psi_grid=psi)
            tf = np.fft.ifftn(mult * spec) * (nxi_prime * nxi_prime * n3) * (d1 * d1 * d3)
            num = (np.sum(np.abs(tf) ** q) * dx_cell) ** (1.0 / q)
            f_l2 = math.sqrt(np.sum(spec**2) * d1 * d1 * d3) / (2 * math.pi) ** 1.5
            r = num / f_l2
            if r > ratios[ji]:
                ratios[ji] = r
                best[ji] = ti
    slope = float(np.polyfit(j_list, np.log2(ratios), 1)[0])
    return StrichartzScan(
        j_list=j_list,
        ratios=ratios,
        best_trial=best,
        slope=slope,
        q=q,
        meta={"trials": len(family), "nxi_prime": nxi_prime},
    )


# --- Bourgain summation calculator ------------------------------------------------


@dataclass(frozen=True)
class SummationResult:
    theta: Fraction
    inv_p: Fraction
    inv_q: Fraction
    bound: float
    mode: str  # weak | strong-restricted | weak-unrestricted


def _inv(exponent) -> Fraction:
    if exponent in (math.inf, np.inf, "inf"):
        return Fraction(0)
    f = Fraction(exponent) if not isinstance(exponent, float) else Fraction(exponent).limit_denominator(10**9)
    if f < 1:
        raise ValueError("Lebesgue exponents must be >= 1")
    return 1 / f


def bourgain_combine(M1, M2, eps1, eps2, p1, q1, p2, q2) -> SummationResult:
    """Combine ||T_j f||_{q1} <= M1 2^{eps1 j} ||f||_{p1} (j < 0 side) with
    ||T_j f||_{q2} <= M2 2^{-eps2 j} ||f||_{p2} at theta = eps2/(eps1+eps2).

    The interpolated pair is the convex combination of (1/p1, 1/q1) and
    (1/p2, 1/q2); the mode follows the case split: equal target exponents give
    a strong bound from a restricted (L^{p,1}) source, equal source exponents
    give a weak (L^{q,inf}) bound from the full L^p, and otherwise the
    restricted weak form holds.
    """
    eps1, eps2 = Fraction(eps1), Fraction(eps2)
    if eps1 <= 0 or eps2 <= 0:
        raise ValueError("both geometric rates must be positive")
    theta = eps2 / (eps1 + eps2)
    if not 0 < theta < 1:
        raise ValueError("interpolation parameter out of (0, 1)")
    ip1, iq1, ip2, iq2 = _inv(p1), _inv(q1), _inv(p2), _inv(q2)
    inv_p = theta * ip1 + (1 - theta) * ip2
    inv_q = theta * iq1 + (1 - theta) * iq2
    if iq1 == iq2:
        mode = "strong-restricted"
    elif ip1 == ip2:
        mode = "weak-unrestricted"
    else:
        mode = "weak"
    bound = float(M1) ** float(theta) * float(M2) ** float(1 - theta)
    return SummationResult(theta=theta, inv_p=inv_p, inv_q=inv_q, bound=bound, mode=mode)
