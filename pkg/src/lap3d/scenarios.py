"""Scenario registry: named symbol/domain bundles with desk-scale defaults
for the pipeline stages (geometry scan, decay scan, dyadic scans, operator
norms, limiting-absorption solve).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .symbols import (
    Symbol,
    cossum_symbol,
    quartic_radial_symbol,
    sphere_symbol,
    torus_quartic_symbol,
)


class UnknownScenario(KeyError):
    pass


@dataclass(frozen=True)
class Scenario:
    """A symbol with the domain boxes and resolutions its stages run at.

    ``box`` bounds the frequency-space geometry scans, ``level`` selects the
    surface p = level, ``patch_point``/``patch_radius`` define the graph patch
    used by the dyadic scans (None where no validated patch exists), and the
    solve stage runs on a centered grid of ``grid`` points per axis over
    [-half_length, half_length]^3.
    """

    name: str
    symbol: Symbol
    level: float
    box: tuple  # ((lo, hi),) * 3 in frequency space
    interval: tuple  # level interval for the assumption scan
    resolution: int  # geometry scan resolution
    mesh_h: float
    patch_point: tuple | None
    patch_radius: float
    grid: int = 128
    half_length: float = 16.0 * np.pi
    delta0: float = 0.125
    steps: int = 6
    rhs_width: float = 5.0
    probe_width: float = 0.5  # Gaussian width for the uniformity-in-delta probe
    expected: dict = field(default_factory=dict)


def _make_registry() -> dict[str, Scenario]:
    scenarios = [
        Scenario(
            name="sphere",
            symbol=sphere_symbol(),
            level=0.0,
            box=((-1.3, 1.3),) * 3,
            interval=(-0.2, 0.2),
            resolution=20,
            mesh_h=2.6 / 40,
            patch_point=(0.0, 0.0, 1.0),
            patch_radius=0.4,
            expected={"alpha_min": 1.0, "kernel_exponent": 2.0,
                      "residual_slope": 1.0, "assumption4": "pass"},
        ),
        Scenario(
            name="torus-quartic",
            symbol=torus_quartic_symbol(2.0, 1.0),
            level=0.0,
            box=((-3.3, 3.3),) * 3,
            interval=(-0.4, 0.4),
            resolution=24,
            mesh_h=6.6 / 56,
            patch_point=None,
            patch_radius=0.0,
            expected={"assumption4": "fail", "alpha_min_below": 1.0},
        ),
        Scenario(
            name="cossum",
            symbol=cossum_symbol(),
            level=0.9,
            box=((0.2, 2.9),) * 3,
            interval=(0.85, 0.95),
            resolution=20,
            mesh_h=2.7 / 44,
            patch_point=(2.122, 0.780, 0.778),
            patch_radius=0.7,
            expected={"kernel_exponent": 1.75, "assumption4": "pass"},
        ),
        Scenario(
            name="quartic-radial",
            symbol=quartic_radial_symbol(),
            level=0.0,
            box=((-1.3, 1.3),) * 3,
            interval=(-0.2, 0.2),
            resolution=20,
            mesh_h=2.6 / 40,
            patch_point=(0.0, 0.0, 1.0),
            patch_radius=0.4,
            expected={"assumption4": "pass"},
        ),
    ]
    reg = {}
    for sc in scenarios:
        if sc.name in reg:
            raise ValueError(f"duplicate scenario name {sc.name!r}")
        reg[sc.name] = sc
    return reg


REGISTRY = _make_registry()


def get_scenario(name: str) -> Scenario:
    try:
        return REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise UnknownScenario(
            f"unknown scenario {name!r}; available: {known}"
        ) from None


def patch_box(sc: Scenario) -> np.ndarray:
    """Box around the scenario's validated patch, clipped to the scan box."""
    if sc.patch_point is None:
        raise ValueError(f"scenario {sc.name!r} has no validated patch")
    p = np.asarray(sc.patch_point)
    box = np.asarray(sc.box)
    lo = np.maximum(p - sc.patch_radius, box[:, 0])
    hi = np.minimum(p + sc.patch_radius, box[:, 1])
    return np.stack([lo, hi], axis=1)
