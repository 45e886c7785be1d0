"""Real symbols p(xi) on R^3: dense multi-index representation, exact jets,
principal parts, and sampling-based ellipticity / growth diagnostics.

Two kinds are supported.  A ``polynomial`` symbol is a finite sum
``sum_alpha a_alpha xi^alpha``.  A ``trigonometric`` symbol reuses the same
term map with each factor ``xi_i**k`` replaced by ``cos(xi_i)**k``; it hosts
lattice-dispersion-type test surfaces such as ``cos x + cos y + cos z``.

All derivative formulas are closed-form (term by term, factor by factor), so
jets are exact up to floating round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

MAX_DEGREE = 16

MultiIndex = tuple[int, int, int]


class SymbolError(ValueError):
    pass


def multi_order(alpha: MultiIndex) -> int:
    return alpha[0] + alpha[1] + alpha[2]


def _validate_terms(terms: Mapping[MultiIndex, float]) -> dict[MultiIndex, float]:
    clean: dict[MultiIndex, float] = {}
    for alpha, coeff in terms.items():
        a = (int(alpha[0]), int(alpha[1]), int(alpha[2]))
        if min(a) < 0:
            raise SymbolError(f"negative multi-index {alpha}")
        if multi_order(a) > MAX_DEGREE:
            raise SymbolError(f"degree of {alpha} exceeds the cap {MAX_DEGREE}")
        c = float(coeff)
        if c != 0.0:
            clean[a] = clean.get(a, 0.0) + c
    return {a: c for a, c in sorted(clean.items()) if c != 0.0}


@dataclass(frozen=True)
class Symbol:
    """Immutable symbol; ``terms`` maps a multi-index to a real coefficient."""

    kind: str
    terms: dict[MultiIndex, float]

    def __post_init__(self):
        if self.kind not in ("polynomial", "trigonometric"):
            raise SymbolError(f"unknown symbol kind {self.kind!r}")
        object.__setattr__(self, "terms", _validate_terms(self.terms))
        if not self.terms:
            raise SymbolError("symbol has no nonzero terms")

    @property
    def degree(self) -> int:
        if self.kind != "polynomial":
            raise SymbolError("degree is defined for polynomial symbols only")
        return max(multi_order(a) for a in self.terms)

    def __call__(self, xi) -> float:
        return eval_jet(self, xi, 0).value

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation at an (..., 3) array of points."""
        pts = np.asarray(pts, dtype=float)
        x = _factor_values(self.kind, pts)
        out = np.zeros(pts.shape[:-1])
        for alpha, coeff in self.terms.items():
            term = np.full(pts.shape[:-1], coeff)
            for i in range(3):
                if alpha[i]:
                    term = term * x[..., i] ** alpha[i]
            out += term
        return out

    def grad_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized gradient at an (..., 3) array of points."""
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape)
        for axis in range(3):
            for alpha, coeff in self.terms.items():
                term = np.full(pts.shape[:-1], coeff)
                for i in range(3):
                    term = term * _factor_derivative_many(
                        self.kind, pts[..., i], alpha[i], 1 if i == axis else 0
                    )
                out[..., axis] += term
        return out

    def key(self) -> tuple:
        return (self.kind, tuple(self.terms.items()))


@dataclass(frozen=True)
class Jet:
    """Value and derivatives of a symbol at a point.

    The Hessian is computed once per unique entry and mirrored, so it is
    symmetric to exact bit equality.  ``third`` is present for order-3 jets.
    """

    value: float
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None
    third: np.ndarray | None = None


def _factor_values(kind: str, pts: np.ndarray) -> np.ndarray:
    return np.cos(pts) if kind == "trigonometric" else pts


def _monomial_derivative(x: float, k: int, n: int) -> float:
    if n > k:
        return 0.0
    c = 1.0
    for j in range(n):
        c *= k - j
    return c * x ** (k - n)


def _cos_power_derivative(x: float, k: int, n: int) -> float:
    # cos^k x = 2^{1-k} sum_j C(k,j) cos((k-2j)x), middle binomial halved;
    # differentiating cos(mx) n times gives m^n cos(mx + n pi/2).
    if k == 0:
        return 1.0 if n == 0 else 0.0
    total = 0.0
    scale = 2.0 ** (1 - k)
    for j in range(k // 2 + 1):
        m = k - 2 * j
        w = math.comb(k, j) * scale
        if m == 0:
            w *= 0.5
            if n > 0:
                continue
        total += w * m**n * math.cos(m * x + n * math.pi / 2)
    return total


def _factor_derivative(kind: str, x: float, k: int, n: int) -> float:
    if kind == "trigonometric":
        return _cos_power_derivative(x, k, n)
    return _monomial_derivative(x, k, n)


def _factor_derivative_many(kind: str, x: np.ndarray, k: int, n: int) -> np.ndarray:
    if kind == "polynomial":
        if n > k:
            return np.zeros_like(x)
        c = 1.0
        for j in range(n):
            c *= k - j
        return c * x ** (k - n)
    if k == 0:
        return np.ones_like(x) if n == 0 else np.zeros_like(x)
    total = np.zeros_like(x)
    scale = 2.0 ** (1 - k)
    for j in range(k // 2 + 1):
        m = k - 2 * j
        w = math.comb(k, j) * scale
        if m == 0:
            if n > 0:
                continue
            w *= 0.5
        total = total + w * m**n * np.cos(m * x + n * math.pi / 2)
    return total


def derivative(s: Symbol, xi, alpha: MultiIndex) -> float:
    """Exact partial derivative d^alpha p(xi); each factor is univariate."""
    xi = np.asarray(xi, dtype=float)
    parts = []
    for beta, coeff in s.terms.items():
        t = coeff
        for i in range(3):
            t *= _factor_derivative(s.kind, xi[i], beta[i], alpha[i])
            if t == 0.0:
                break
        parts.append(t)
    return math.fsum(parts)


def eval_jet(s: Symbol, xi, order: int = 2) -> Jet:
    """Analytic jet of p at xi up to the requested order (0..3)."""
    if not 0 <= order <= 3:
        raise SymbolError("jet order must be in 0..3")
    xi = np.asarray(xi, dtype=float)
    value = derivative(s, xi, (0, 0, 0))
    gradient = hessian = third = None
    if order >= 1:
        gradient = np.array([derivative(s, xi, _unit(i)) for i in range(3)])
    if order >= 2:
        hessian = np.empty((3, 3))
        for i in range(3):
            for j in range(i, 3):
                a = [0, 0, 0]
                a[i] += 1
                a[j] += 1
                hessian[i, j] = derivative(s, xi, tuple(a))
                hessian[j, i] = hessian[i, j]
    if order >= 3:
        third = np.empty((3, 3, 3))
        for i in range(3):
            for j in range(i, 3):
                for k in range(j, 3):
                    a = [0, 0, 0]
                    a[i] += 1
                    a[j] += 1
                    a[k] += 1
                    v = derivative(s, xi, tuple(a))
                    for perm in _permutations3(i, j, k):
                        third[perm] = v
    return Jet(value, gradient, hessian, third)


def _unit(i: int) -> MultiIndex:
    a = [0, 0, 0]
    a[i] = 1
    return tuple(a)


def _permutations3(i, j, k):
    return {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}


def principal_part(s: Symbol) -> Symbol:
    """Degree-N homogeneous part p_N of a polynomial symbol."""
    if s.kind != "polynomial":
        raise SymbolError("trigonometric symbols have no principal part")
    n = s.degree
    top = {a: c for a, c in s.terms.items() if multi_order(a) == n}
    return Symbol("polynomial", top)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic quasi-uniform sample of S^2 (golden-angle spiral)."""
    i = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * (math.pi * (3.0 - math.sqrt(5.0)))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


@dataclass(frozen=True)
class EllipticityReport:
    verdict: str  # elliptic_positive | elliptic_negative | not_elliptic
    margin: float  # min |p_N| over the sphere sample
    samples: int


def check_ellipticity(s: Symbol, samples: int = 2048, tol: float = 1e-12) -> EllipticityReport:
    """Classify the sign of p_N on a Fibonacci sample of S^2.

    Sampling-based: a pass is a necessary condition only, a sign change or a
    value below ``tol`` falsifies ellipticity.
    """
    if samples < 100:
        raise SymbolError("need at least 100 sphere samples")
    pn = principal_part(s)
    vals = pn.eval_many(fibonacci_sphere(samples))
    margin = float(np.min(np.abs(vals)))
    if margin <= tol or vals.min() < 0.0 < vals.max():
        return EllipticityReport("not_elliptic", margin, samples)
    verdict = "elliptic_positive" if vals[0] > 0 else "elliptic_negative"
    return EllipticityReport(verdict, margin, samples)


def growth_radius(
    s: Symbol,
    c: float,
    directions: int = 256,
    shells: int = 64,
    radial_per_shell: int = 32,
    max_radius: float = 2.0**16,
) -> float:
    """Smallest sampled R >= 1 with |p(xi)| >= c |xi|^N on every sampled
    |xi| in [R, 4R] (dyadic radial grid, Fibonacci directions).
    """
    rep = check_ellipticity(s)
    if rep.verdict == "not_elliptic":
        raise SymbolError("growth radius requires an elliptic symbol")
    if not 0.0 < c < rep.margin:
        raise SymbolError("growth constant must lie in (0, ellipticity margin)")
    n = s.degree
    dirs = fibonacci_sphere(directions)
    radii = np.concatenate(
        [
            2.0**j * np.linspace(1.0, 2.0, radial_per_shell, endpoint=False)
            for j in range(shells)
        ]
    )
    radii = radii[radii <= 4.0 * max_radius]
    pts = radii[:, None, None] * dirs[None, :, :]
    ok = np.abs(s.eval_many(pts)) >= c * radii[:, None] ** n
    ok_radius = ok.all(axis=1)
    for idx in range(len(radii)):
        r = radii[idx]
        if r < 1.0 or r > max_radius:
            continue
        window = (radii >= r) & (radii <= 4.0 * r)
        if ok_radius[window].all():
            return float(r)
    raise SymbolError(f"no growth radius found below {max_radius}")


def c_norm(s: Symbol, box: np.ndarray, order: int = 5, resolution: int = 12) -> float:
    """Sampled C^order norm of p over an axis box (max over all |alpha| <= order).

    A sampling estimate; reported together with the sample count elsewhere.
    """
    box = np.asarray(box, dtype=float).reshape(3, 2)
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    best = 0.0
    for alpha in _multi_indices_up_to(order):
        for pt in grid:
            best = max(best, abs(derivative(s, pt, alpha)))
    return best


def _multi_indices_up_to(order: int) -> Iterable[MultiIndex]:
    for a in range(order + 1):
        for b in range(order + 1 - a):
            for c in range(order + 1 - a - b):
                yield (a, b, c)


# --- config-file literal syntax ---------------------------------------------


def parse_symbol(text: str) -> Symbol:
    """Parse the symbol literal syntax.

    Lines ``coeff a1 a2 a3 value`` build a polynomial; lines
    ``cos-sum c1 c2 c3`` build the trigonometric kind.  Values are parsed as
    exact decimals.  Blank lines and ``#`` comments are ignored.
    """
    poly: dict[MultiIndex, float] = {}
    trig: dict[MultiIndex, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "coeff":
            if len(fields) != 5:
                raise SymbolError(f"line {lineno}: expected 'coeff a1 a2 a3 value'")
            alpha = tuple(int(v) for v in fields[1:4])
            coeff = float(Fraction(fields[4]))
            poly[alpha] = poly.get(alpha, 0.0) + coeff
        elif fields[0] == "cos-sum":
            if len(fields) != 4:
                raise SymbolError(f"line {lineno}: expected 'cos-sum c1 c2 c3'")
            for i, v in enumerate(fields[1:4]):
                coeff = float(Fraction(v))
                if coeff:
                    alpha = _unit(i)
                    trig[alpha] = trig.get(alpha, 0.0) + coeff
        else:
            raise SymbolError(f"line {lineno}: unknown directive {fields[0]!r}")
    if poly and trig:
        raise SymbolError("cannot mix polynomial and trigonometric lines")
    if poly:
        return Symbol("polynomial", poly)
    if trig:
        return Symbol("trigonometric", trig)
    raise SymbolError("empty symbol definition")


def format_symbol(s: Symbol) -> str:
    if s.kind == "polynomial":
        lines = [f"coeff {a[0]} {a[1]} {a[2]} {c!r}" for a, c in s.terms.items()]
        return "\n".join(lines) + "\n"
    coeffs = [s.terms.get(_unit(i), 0.0) for i in range(3)]
    if _validate_terms({_unit(i): coeffs[i] for i in range(3)}) != s.terms:
        raise SymbolError("only pure cos-sum trigonometric symbols serialize")
    return f"cos-sum {coeffs[0]!r} {coeffs[1]!r} {coeffs[2]!r}\n"


# --- stock symbols -----------------------------------------------------------


def sphere_symbol() -> Symbol:
    """p(xi) = |xi|^2 - 1 (Helmholtz)."""
    return Symbol(
        "polynomial",
        {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0, (0, 0, 0): -1.0},
    )


def torus_quartic_symbol(R: float = 2.0, r: float = 1.0) -> Symbol:
    """p(xi) = (|xi|^2 + R^2 - r^2)^2 - 4 R^2 (xi1^2 + xi2^2); zero set is the
    torus of radii (R, r) around the xi3-axis.
    """
    k = R * R - r * r
    terms: dict[MultiIndex, float] = {}

    def add(alpha, c):
        terms[alpha] = terms.get(alpha, 0.0) + c

    # (x^2+y^2+z^2 + k)^2
    quad = [(2, 0, 0), (0, 2, 0), (0, 0, 2)]
    for a in quad:
        for b in quad:
            add((a[0] + b[0], a[1] + b[1], a[2] + b[2]), 1.0)
    for a in quad:
        add(a, 2.0 * k)
    add((0, 0, 0), k * k)
    add((2, 0, 0), -4.0 * R * R)
    add((0, 2, 0), -4.0 * R * R)
    return Symbol("polynomial", terms)


def cossum_symbol() -> Symbol:
    """p(xi) = cos xi1 + cos xi2 + cos xi3."""
    return Symbol(
        "trigonometric", {(1, 0, 0): 1.0, (0, 1, 0): 1.0, (0, 0, 1): 1.0}
    )


def quartic_radial_symbol() -> Symbol:
    """p(xi) = |xi|^4 - 1."""
    terms: dict[MultiIndex, float] = {}
    quad = [(2, 0, 0), (0, 2, 0), (0, 0, 2)]
    for a in quad:
        for b in quad:
            key = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
            terms[key] = terms.get(key, 0.0) + 1.0
    terms[(0, 0, 0)] = -1.0
    return Symbol("polynomial", terms)
