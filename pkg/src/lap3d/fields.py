"""Complex scalar fields on uniform periodic grids and their function-space
metrology: Lebesgue, weak, and Lorentz norms via decreasing rearrangement.

Norm conventions: all norms weight |values| by the cell volume; the Lorentz
integral is un-normalized, so L^{p,1}(chi_E) = p |E|^{1/p}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass
class GridField:
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    values: np.ndarray  # complex, shape dims, row-major
    origin: np.ndarray  # physical coordinate of values[0,0,0]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(self.dims)
        self.origin = np.asarray(self.origin, dtype=float)
        if min(self.spacing) <= 0:
            raise ValueError("grid spacing must be positive")

    @property
    def cell_volume(self) -> float:
        return float(self.spacing[0] * self.spacing[1] * self.spacing[2])

    def axes(self) -> list[np.ndarray]:
        return [
            self.origin[i] + self.spacing[i] * np.arange(self.dims[i])
            for i in range(3)
        ]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def copy_with(self, values: np.ndarray) -> "GridField":
        return GridField(self.dims, self.spacing, values, self.origin)

    @classmethod
    def from_function(cls, fn, dims, box) -> "GridField":
        """Sample fn on a uniform grid of the box (endpoint-exclusive, as a
        period of the torus)."""
        box = np.asarray(box, dtype=float).reshape(3, 2)
        dims = tuple(int(d) for d in dims)
        spacing = tuple((box[i, 1] - box[i, 0]) / dims[i] for i in range(3))
        g = cls(dims, spacing, np.zeros(dims, dtype=complex), box[:, 0])
        g.values = np.asarray(fn(g.points()), dtype=complex)
        return g

    @classmethod
    def centered_box(cls, fn, n: int, half_length: float) -> "GridField":
        return cls.from_function(fn, (n, n, n), [[-half_length, half_length]] * 3)


def _as_exponent(p) -> float:
    if p in ("inf", "Inf", np.inf):
        return np.inf
    if isinstance(p, str):
        return float(Fraction(p))
    return float(p)


def lebesgue_norm(g: GridField, p) -> float:
    """Discrete L^p norm (sum |g|^p cellvol)^{1/p}; max for p = inf."""
    p = _as_exponent(p)
    a = np.abs(g.values)
    if np.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError("Lebesgue exponent must be >= 1")
    return float((np.sum(a**p) * g.cell_volume) ** (1.0 / p))


@dataclass
class Rearrangement:
    """Decreasing rearrangement of |g| as a right-continuous step function:
    value levels[i] on measure interval (measures[i-1], measures[i]]."""

    levels: np.ndarray  # nonincreasing
    measures: np.ndarray  # cumulative cell volume, increasing

    @classmethod
    def of(cls, g: GridField) -> "Rearrangement":
        flat = np.abs(g.values).ravel()
        # stable sort keeps array order among ties, fixed for determinism
        order = np.argsort(-flat, kind="stable")
        levels = flat[order]
        measures = g.cell_volume * np.arange(1, flat.size + 1)
        return cls(levels, measures)

    def lebesgue(self, p) -> float:
        p = _as_exponent(p)
        if np.isinf(p):
            return float(self.levels[0]) if len(self.levels) else 0.0
        widths = np.diff(self.measures, prepend=0.0)
        return float((np.sum(self.levels**p * widths)) ** (1.0 / p))


def lorentz_norm(g: GridField, p, q) -> float:
    """Lorentz norm via rearrangement: L^{p,inf} = sup t^{1/p} g*(t),
    L^{p,1} = int t^{1/p} g*(t) dt/t, both exact on the step function."""
    p = _as_exponent(p)
    if not 1.0 < p < np.inf:
        raise ValueError("Lorentz primary exponent must be in (1, inf)")
    r = Rearrangement.of(g)
    nz = r.levels > 0
    if not nz.any():
        return 0.0
    levels = r.levels[nz]
    upper = r.measures[nz]
    lower = np.concatenate([[0.0], r.measures[:-1]])[nz]
    if q in (np.inf, "inf", "Inf"):
        # g* is constant on (lower, upper], and t^{1/p} increases
        return float(np.max(levels * upper ** (1.0 / p)))
    if q == 1:
        return float(np.sum(levels * p * (upper ** (1.0 / p) - lower ** (1.0 / p))))
    raise ValueError("secondary Lorentz exponent must be 1 or inf")


def parse_norm_spec(spec: str):
    """Norm selection strings: 'Lp:2', 'Lp:inf', 'Lorentz:14/3,inf',
    'Lorentz:7/5,1'.  Returns a callable GridField -> float."""
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "lp":
        p = arg.strip()
        return lambda g: lebesgue_norm(g, p)
    if kind == "lorentz":
        ps, qs = (t.strip() for t in arg.split(","))
        q = np.inf if qs in ("inf", "Inf") else int(qs)
        p = ps
        return lambda g: lorentz_norm(g, _as_exponent(p), q)
    raise ValueError(f"unknown norm spec {spec!r}")
