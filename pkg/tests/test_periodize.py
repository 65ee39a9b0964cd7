"""Unit tests for the periodization maps (tent, quartic spline, cosine)."""

import numpy as np
import pytest

from latticeuq.periodize import KINDS, PeriodizationMap, ProductPeriodization, fold_half

INTERVALS = [(0.0, 1.0), (-1.0, 1.0), (-2.5, 0.75)]


def all_maps():
    return [PeriodizationMap(kind, a, b) for kind in KINDS for (a, b) in INTERVALS]


class TestForward:
    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_endpoints(self, m):
        assert m.forward(0.0) == pytest.approx(m.alpha, abs=1e-14)
        assert m.forward(0.5) == pytest.approx(m.beta, abs=1e-14)
        assert m.forward(1.0) == pytest.approx(m.alpha, abs=1e-14)

    def test_cosine_quarter_point(self):
        m = PeriodizationMap("cosine", -1.0, 1.0)
        assert m.forward(0.25) == pytest.approx(0.0, abs=1e-15)

    def test_spline_quarter_point(self):
        # left cubic piece at x = 1/4: -32 x^3 + 24 x^2 - 1 on [-1, 1]
        m = PeriodizationMap("spline4", -1.0, 1.0)
        x = 0.25
        assert m.forward(x) == pytest.approx(-32 * x**3 + 24 * x**2 - 1, abs=1e-14)

    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_symmetry_about_half(self, m):
        xs = np.linspace(0.0, 0.5, 1000)
        scale = abs(m.beta - m.alpha)
        left = np.asarray(m.forward(0.5 - xs))
        right = np.asarray(m.forward(0.5 + xs))
        assert np.max(np.abs(left - right)) <= 1e-14 * max(scale, 1.0)

    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_range_and_monotone(self, m):
        xs = np.linspace(0.0, 0.5, 2001)
        vals = np.asarray(m.forward(xs))
        assert np.all(vals >= m.alpha - 1e-12)
        assert np.all(vals <= m.beta + 1e-12)
        assert np.all(np.diff(vals) > -1e-13)

    def test_tent_closed_form(self):
        m = PeriodizationMap("tent", 0.0, 1.0)
        xs = np.linspace(0, 1, 101)
        expect = 1.0 - np.abs(2.0 * (0.5 - xs))
        assert np.allclose(m.forward(xs), expect, atol=1e-15)


class TestDerivative:
    def test_tent_constant_slope(self):
        m = PeriodizationMap("tent", -1.0, 1.0)
        assert m.derivative(0.3) == pytest.approx(4.0)
        assert m.derivative(0.7) == pytest.approx(-4.0)

    def test_tent_kink_policy_total(self):
        m = PeriodizationMap("tent", 0.0, 1.0)
        for x in (0.0, 0.5, 1.0):
            v = m.derivative(x)
            assert np.isfinite(v) and abs(v) == pytest.approx(2.0)

    def test_cosine_quarter_point(self):
        m = PeriodizationMap("cosine", -1.0, 1.0)
        assert m.derivative(0.25) == pytest.approx(2 * np.pi, rel=1e-14)

    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_finite_difference_oracle(self, m):
        rng = np.random.default_rng(42)
        scale = abs(m.beta - m.alpha)
        h = 1e-7
        count = 0
        while count < 200:
            x = rng.random()
            # skip the tent kinks where the two-sided difference is undefined
            if m.kind == "tent" and min(abs(x - 0.5), x, 1 - x) < 10 * h:
                continue
            count += 1
            fd = (m.forward(x + h) - m.forward(x - h)) / (2 * h)
            assert m.derivative(x) == pytest.approx(fd, rel=1e-6, abs=1e-6 * scale)

    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_positive_on_first_half_and_antisymmetric(self, m):
        xs = np.linspace(1e-3, 0.5 - 1e-3, 500)
        d = np.asarray(m.derivative(xs))
        assert np.all(d > 0)
        mirrored = np.asarray(m.derivative(1.0 - xs))
        assert np.allclose(mirrored, -d, atol=1e-10 * max(abs(m.beta - m.alpha), 1.0))

    def test_spline_c2_across_half(self):
        # one-sided second derivatives from exact quadratic fits of the
        # piecewise-quadratic derivative agree at x = 1/2
        for a, b in INTERVALS:
            m = PeriodizationMap("spline4", a, b)
            h = 1e-2
            second = []
            for side in (-1.0, +1.0):
                u = side * h * np.arange(3.0)
                vander = np.vander(u, 3, increasing=True)
                coeffs = np.linalg.solve(vander, np.asarray(m.derivative(0.5 + u)))
                second.append(coeffs[1])  # d(phi')/dx at 1/2 from that side
            assert abs(second[0] - second[1]) < 1e-9 * max(abs(b - a), 1.0)


class TestInverse:
    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_boundary_values(self, m):
        assert m.inverse(m.alpha) == pytest.approx(0.0, abs=1e-14)
        assert m.inverse(m.beta) == pytest.approx(0.5, abs=1e-14)

    def test_tent_midpoint(self):
        m = PeriodizationMap("tent", -1.0, 1.0)
        assert m.inverse(0.0) == pytest.approx(0.25)

    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_forward_of_inverse(self, m):
        rng = np.random.default_rng(3)
        ts = m.alpha + (m.beta - m.alpha) * rng.random(1000)
        xs = np.asarray(m.inverse(ts))
        assert np.all((xs >= 0.0) & (xs <= 0.5))
        back = np.asarray(m.forward(xs))
        assert np.max(np.abs(back - ts)) < 1e-12 * max(abs(m.beta - m.alpha), 1.0)

    @pytest.mark.parametrize("m", all_maps(), ids=str)
    def test_inverse_of_forward(self, m):
        xs = np.linspace(0.0, 0.5, 777)
        ts = np.asarray(m.forward(xs))
        back = np.asarray(m.inverse(np.clip(ts, m.alpha, m.beta)))
        assert np.max(np.abs(back - xs)) < 1e-10

    def test_domain_violation(self):
        m = PeriodizationMap("tent", 0.0, 1.0)
        with pytest.raises(ValueError):
            m.inverse(1.5)


class TestConstruction:
    def test_alpha_must_precede_beta(self):
        with pytest.raises(ValueError):
            PeriodizationMap("tent", 1.0, 0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PeriodizationMap("sawtooth", 0.0, 1.0)


class TestProduct:
    def test_componentwise_roundtrip(self):
        prod = ProductPeriodization(
            (PeriodizationMap("tent", -1, 1), PeriodizationMap("cosine", 0, 2))
        )
        rng = np.random.default_rng(5)
        ys = rng.random((50, 2)) * 0.5
        ts = prod.forward(ys)
        assert ts.shape == (50, 2)
        back = prod.inverse(ts)
        assert np.max(np.abs(prod.forward(back) - ts)) < 1e-12

    def test_jacobian_is_product_of_derivatives(self):
        prod = ProductPeriodization(
            (PeriodizationMap("cosine", -1, 1), PeriodizationMap("spline4", 0, 1))
        )
        rng = np.random.default_rng(6)
        ys = rng.uniform(0.05, 0.45, size=(20, 2))
        jac = prod.jacobian_abs(ys)
        expect = np.abs(np.asarray(prod.maps[0].derivative(ys[:, 0]))) * np.abs(
            np.asarray(prod.maps[1].derivative(ys[:, 1]))
        )
        assert np.allclose(jac, expect, rtol=1e-13)

    def test_from_bounds(self):
        bounds = np.array([[-1.0, 1.0], [0.0, 3.0]])
        prod = ProductPeriodization.from_bounds("tent", bounds)
        assert [m.kind for m in prod.maps] == ["tent", "tent"]
        assert prod.maps[1].beta == 3.0

    def test_tent_uniform_weight_cancellation(self):
        # uniform density times |phi'| for tent maps on [-1,1]^d is the
        # constant 2^d: each factor contributes |2(b-a)| * 1/(b-a) = 2,
        # so the moment integrand's outer 2^{-d} scaling cancels it exactly
        prod = ProductPeriodization.from_bounds("tent", [[-1, 1]] * 3)
        ys = np.random.default_rng(7).uniform(0.01, 0.49, size=(40, 3))
        rho = 1.0 / 8.0  # uniform density on [-1,1]^3
        weight = rho * prod.jacobian_abs(ys)
        assert np.allclose(weight, 2.0**3, rtol=1e-13)
        assert np.allclose(weight * 2.0**-3, 1.0, rtol=1e-13)


class TestFoldHalf:
    def test_fold_reflects_second_half(self):
        xs = np.array([0.0, 0.2, 0.5, 0.7, 0.95])
        folded = fold_half(xs)
        assert np.allclose(folded, [0.0, 0.2, 0.5, 0.3, 0.05])
