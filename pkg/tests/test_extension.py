"""Exponent-region classification, the surface extension operator, and the
empirical operator-norm scans."""

import math
from fractions import Fraction

import numpy as np
import pytest

from lap3d.extension import (
    VERTEX_A,
    VERTEX_B,
    VERTEX_B_PRIME,
    VERTEX_C,
    VERTEX_C_PRIME,
    ExponentPair,
    classify_exponents,
    extend,
    norms_for,
    opnorm_scan,
)
from lap3d.fields import GridField, lebesgue_norm
from lap3d.geometry import curvature_at
from lap3d.mesh import mesh_level_set, surface_fourier_many
from lap3d.symbols import cossum_symbol, sphere_symbol

F = Fraction


class TestExponentPair:
    def test_rejects_floats(self):
        with pytest.raises(TypeError, match="exact rationals"):
            ExponentPair(0.7, F(1, 10))
        with pytest.raises(TypeError):
            ExponentPair(F(7, 10), 0.1)

    def test_rejects_outside_unit_square(self):
        with pytest.raises(ValueError):
            ExponentPair(F(11, 10), F(0))
        with pytest.raises(ValueError):
            ExponentPair(F(1, 2), F(-1, 10))

    def test_exponent_properties(self):
        e = ExponentPair(F(3, 4), F(3, 20))
        assert e.p == F(4, 3) and e.q == F(20, 3)
        assert ExponentPair(F(1), F(0)).q == math.inf

    def test_accepts_integers_and_strings(self):
        e = ExponentPair(1, "3/10")
        assert e.inv_p == 1 and e.inv_q == F(3, 10)


CLASSIFICATION_TABLE = [
    (F(3, 4), F(3, 20), "strong"),
    (F(1), F(0), "strong"),           # vertex A
    (F(7, 10), F(9, 70), "restricted_weak"),  # vertex B
    (F(61, 70), F(3, 10), "restricted_weak"),  # vertex B'
    (F(7, 10), F(0), "weak_II"),      # vertex C
    (F(1), F(3, 10), "weak_I"),       # vertex C'
    (F(7, 10), F(1, 10), "weak_II"),
    (F(7, 10), F(1, 8), "weak_II"),
    (F(9, 10), F(3, 10), "weak_I"),
    (F(31, 35), F(3, 10), "weak_I"),
    (F(1), F(1, 5), "strong"),
    (F(4, 5), F(1, 5), "strong"),
    (F(5, 7), F(1, 7), "strong"),     # on the diagonal edge 1/p - 1/q = 4/7
    (F(29, 40), F(9, 70), "strong"),
    (F(4, 5), F(1, 4), "outside"),    # violates the diagonal constraint
    (F(7, 10), F(1, 7), "outside"),   # above B on the critical line
    (F(7, 10), F(1, 5), "outside"),
    (F(1, 2), F(1, 4), "outside"),
    (F(0), F(0), "outside"),
    (F(1), F(1), "outside"),
    (F(71, 100), F(3, 10), "outside"),  # 1/q = 3/10 but left of B'
]


def classification_oracle(ip: Fraction, iq: Fraction) -> str:
    """Integer-arithmetic restatement of the pentagon conditions: clear the
    denominators against 70 and 7 instead of comparing fractions."""
    def gt(x: Fraction, num, den):
        return x.numerator * den > num * x.denominator

    def lt(x: Fraction, num, den):
        return x.numerator * den < num * x.denominator

    def eq(x: Fraction, num, den):
        return x.numerator * den == num * x.denominator

    at_b = eq(ip, 7, 10) and eq(iq, 9, 70)
    at_bp = eq(ip, 61, 70) and eq(iq, 3, 10)
    if at_b or at_bp:
        return "restricted_weak"
    if eq(iq, 3, 10) and gt(ip, 61, 70) and not gt(ip, 1, 1):
        return "weak_I"
    if eq(ip, 7, 10) and lt(iq, 9, 70) and not lt(iq, 0, 1):
        return "weak_II"
    diff = ip - iq
    if gt(ip, 7, 10) and lt(iq, 3, 10) and not lt(diff, 4, 7):
        return "strong"
    return "outside"


class TestClassification:
    @pytest.mark.parametrize("ip,iq,expected", CLASSIFICATION_TABLE)
    def test_reference_table(self, ip, iq, expected):
        verdict = classify_exponents(ExponentPair(ip, iq))
        assert verdict.classification == expected
        assert verdict.witness

    def test_named_vertices(self):
        assert classify_exponents(ExponentPair(*VERTEX_A)).classification == \
            "strong"
        assert classify_exponents(ExponentPair(*VERTEX_B)).classification == \
            "restricted_weak"
        assert classify_exponents(ExponentPair(*VERTEX_B_PRIME)) \
            .classification == "restricted_weak"
        assert classify_exponents(ExponentPair(*VERTEX_C)).classification == \
            "weak_II"
        assert classify_exponents(ExponentPair(*VERTEX_C_PRIME)) \
            .classification == "weak_I"

    def test_random_rationals_against_oracle(self):
        rng = np.random.default_rng(17)
        dens = [7, 10, 14, 20, 35, 40, 70, 100, 140]
        for _ in range(10_000):
            dp = int(rng.choice(dens))
            dq = int(rng.choice(dens))
            ip = F(int(rng.integers(0, dp + 1)), dp)
            iq = F(int(rng.integers(0, dq + 1)), dq)
            got = classify_exponents(ExponentPair(ip, iq)).classification
            assert got == classification_oracle(ip, iq), (ip, iq)

    def test_norms_for_rejects_outside(self):
        with pytest.raises(ValueError):
            norms_for("outside")

    def test_norms_for_returns_callables(self):
        g = GridField.centered_box(
            lambda p: np.exp(-np.sum(p**2, axis=-1)), 16, 4.0
        )
        pair = ExponentPair(F(7, 10), F(9, 70))
        for cls in ("strong", "weak_I", "weak_II", "restricted_weak"):
            tgt, src = norms_for(cls)
            assert tgt(g, pair) > 0 and src(g, pair) > 0


def delta_field(n=16, half=8.0):
    """Grid delta at the origin: fhat == 1 on the whole frequency lattice."""
    g = GridField.centered_box(lambda p: np.zeros(p.shape[:-1]), n, half)
    vals = np.zeros(g.dims, dtype=complex)
    vals[n // 2, n // 2, n // 2] = 1.0 / g.cell_volume
    return g.copy_with(vals)


class TestExtend:
    def test_delta_input_reproduces_surface_transform(self, sphere_mesh):
        # with fhat == 1 the extension is exactly the surface-measure
        # transform sampled on the grid
        f = delta_field()
        ef = extend(sphere_mesh, None, f)
        pts = f.points().reshape(-1, 3)
        target = surface_fourier_many(sphere_mesh, pts).reshape(f.dims)
        scale = sphere_mesh.mass()
        assert np.max(np.abs(ef.values - target)) <= 1e-10 * scale

    def test_value_at_origin_is_mass(self, sphere_mesh):
        f = delta_field()
        ef = extend(sphere_mesh, None, f)
        v0 = ef.values[8, 8, 8]
        assert abs(v0 - sphere_mesh.mass()) <= 1e-10 * sphere_mesh.mass()

    def test_linearity(self, sphere_mesh):
        rng = np.random.default_rng(23)
        g = GridField.centered_box(
            lambda p: np.exp(-np.sum(p**2, axis=-1) / 8), 16, 8.0
        )
        f1 = g.copy_with(g.values * np.exp(1j * g.points()[..., 0]))
        f2 = g.copy_with(rng.standard_normal(g.dims) * g.values)
        alpha = 1.7 - 0.4j
        combo = extend(sphere_mesh, None, f1.copy_with(alpha * f1.values
                                                       + f2.values))
        parts = extend(sphere_mesh, None, f1)
        parts2 = extend(sphere_mesh, None, f2)
        lhs = combo.values
        rhs = alpha * parts.values + parts2.values
        scale = np.abs(rhs).max()
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    def test_scalar_homogeneity(self, sphere_mesh):
        g = GridField.centered_box(
            lambda p: np.exp(-np.sum(p**2, axis=-1) / 8), 16, 8.0
        )
        e1 = extend(sphere_mesh, None, g)
        e3 = extend(sphere_mesh, None, g.copy_with(3.0 * g.values))
        assert np.max(np.abs(e3.values - 3.0 * e1.values)) <= \
            1e-12 * np.abs(e1.values).max()

    def test_nufft_path_matches_direct(self, sphere_mesh):
        f = delta_field(n=24, half=12.0)
        direct = extend(sphere_mesh, None, f, method="direct")
        fast = extend(sphere_mesh, None, f, method="nufft")
        scale = sphere_mesh.mass()
        assert np.max(np.abs(fast.values - direct.values)) <= 1e-8 * scale


class TestBoundedFrequencyGrowth:
    def test_l2_growth_rate_over_balls(self, sphere_mesh):
        # ||Ef||_{L^2(|x| <= T)}^2 grows linearly in T for an extension from
        # a curved surface: (1/T) * that integral stays within a factor 2
        # across T = 16, 32, 64
        f = GridField.centered_box(
            lambda p: np.exp(-np.sum(p**2, axis=-1) / 8.0), 96, 72.0
        )
        ef = extend(sphere_mesh, None, f)
        r2 = np.sum(ef.points() ** 2, axis=-1)
        consts = []
        for T in (16.0, 32.0, 64.0):
            mask = r2 <= T * T
            consts.append(
                float(np.sum(np.abs(ef.values[mask]) ** 2)) * ef.cell_volume / T
            )
        assert max(consts) / min(consts) <= 2.0


class TestKnappDivergence:
    def test_anisotropic_slabs_blow_up_outside_region(self):
        # at (1/p, 1/q) = (1/2, 1/2), outside the pentagon, slab trials
        # aligned with the principal frame at a degenerate-curve point make
        # the L2/L2 ratio grow without bound; two aspect-ratio doublings
        # must at least double it
        s = cossum_symbol()
        x0 = np.array([2.122, 0.780, 0.778])
        box = np.stack([x0 - 0.7, x0 + 0.7], axis=1)
        mesh = mesh_level_set(s, 0.9, box, 1.4 / 40)
        cd = curvature_at(s, x0)
        t1, t2, nu = cd.dirs[0], cd.dirs[1], cd.nu
        ratios = []
        for a in (2.0, 8.0, 32.0):
            w1 = w2 = a ** -0.5
            w3 = 1.0 / a

            def fn(pts):
                u = (pts @ t1) * w1
                v = (pts @ t2) * w2
                w = (pts @ nu) * w3
                return np.exp(-(u**2 + v**2 + w**2) / 2.0) * \
                    np.exp(1j * (pts @ x0))

            f = GridField.centered_box(fn, 64, 32.0)
            ef = extend(mesh, None, f)
            ratios.append(lebesgue_norm(ef, 2) / lebesgue_norm(f, 2))
        assert ratios[2] / ratios[0] >= 2.0
        assert ratios[1] > ratios[0]


class TestOpnormScan:
    def test_trial_floor(self, sphere_mesh):
        with pytest.raises(ValueError, match="at least 50 trials"):
            opnorm_scan(sphere_mesh, None,
                        [ExponentPair(F(3, 4), F(3, 20))], trials=10,
                        symbol=sphere_symbol())

    def test_row_fields(self, opnorm_rows):
        row = opnorm_rows[50]
        assert row.classification == "strong"
        assert row.best_ratio > 0
        assert 0 <= row.trial_id < 50
        assert len(row.ratios) == 50
        assert row.best_ratio == pytest.approx(row.ratios[row.trial_id])

    def test_no_single_trial_dominates(self, opnorm_rows):
        # canary against a degenerate family: the best trial must not exceed
        # 50x the family median
        row = opnorm_rows[50]
        assert row.best_ratio <= 50.0 * np.median(row.ratios)

    def test_stable_under_family_growth(self, opnorm_rows):
        r50 = opnorm_rows[50].best_ratio
        r100 = opnorm_rows[100].best_ratio
        assert abs(r100 - r50) <= 0.1 * r50
