"""Numerical laboratory for constant-coefficient elliptic symbols p(xi) on
R^3: level-set geometry and curvature assumptions, surface-measure Fourier
decay, dyadic kernel and Strichartz scans, restriction-extension operator
probes, and limiting-absorption solvers on FFT grids.
"""

__version__ = "0.1.0"

from .dyadic import (
    DyadicProfile,
    GraphPatch,
    band_bump,
    bourgain_combine,
    build_profile,
    flat_patch,
    graph_patch,
    kernel_estimate_scan,
    kernel_slab_field,
    strichartz_scan,
)
from .extension import (
    VERTEX_A,
    VERTEX_B,
    VERTEX_B_PRIME,
    VERTEX_C,
    VERTEX_C_PRIME,
    ExponentPair,
    classify_exponents,
    extend,
    opnorm_scan,
    opnorm_trials,
)
from .fields import GridField, Rearrangement, lebesgue_norm, lorentz_norm, parse_norm_spec
from .geometry import (
    AssumptionReport,
    check_assumptions,
    curvature_at,
    gaussian_curvature,
    trace_degenerate_curve,
)
from .mesh import SurfaceMesh, decay_scan, mesh_level_set, surface_fourier
from .nufft import nufft_field, nufft_type1
from .scenarios import REGISTRY, Scenario, get_scenario
from .solver import (
    AbsorptionRun,
    apply_resolvent,
    bessel_regime_check,
    bessel_region,
    build_partition,
    limiting_absorption,
    split_operators,
)
from .symbols import (
    Symbol,
    check_ellipticity,
    cossum_symbol,
    eval_jet,
    format_symbol,
    parse_symbol,
    quartic_radial_symbol,
    sphere_symbol,
    torus_quartic_symbol,
)

__all__ = [
    "__version__",
    "DyadicProfile", "GraphPatch", "band_bump", "bourgain_combine",
    "build_profile", "flat_patch", "graph_patch", "kernel_estimate_scan",
    "kernel_slab_field", "strichartz_scan",
    "VERTEX_A", "VERTEX_B", "VERTEX_B_PRIME", "VERTEX_C", "VERTEX_C_PRIME",
    "ExponentPair", "classify_exponents", "extend", "opnorm_scan",
    "opnorm_trials",
    "GridField", "Rearrangement", "lebesgue_norm", "lorentz_norm",
    "parse_norm_spec",
    "AssumptionReport", "check_assumptions", "curvature_at",
    "gaussian_curvature", "trace_degenerate_curve",
    "SurfaceMesh", "decay_scan", "mesh_level_set", "surface_fourier",
    "nufft_field", "nufft_type1",
    "REGISTRY", "Scenario", "get_scenario",
    "AbsorptionRun", "apply_resolvent", "bessel_regime_check", "bessel_region",
    "build_partition", "limiting_absorption", "split_operators",
    "Symbol", "check_ellipticity", "cossum_symbol", "eval_jet",
    "format_symbol", "parse_symbol", "quartic_radial_symbol", "sphere_symbol",
    "torus_quartic_symbol",
]
