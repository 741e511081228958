"""Expected array response: series route against the quadrature oracle."""

import math

import numpy as np
import pytest

from robusthp.errorstats import (
    ExpectedResponseParams,
    expected_array_response,
    expected_element,
    quadrature_expected_element,
    series_coefficients,
)
from robusthp.geometry import ArrayGeometry, steering_vector

BETA_2DEG = math.radians(2.0)


class TestSeriesCoefficients:
    def test_first_element_has_no_phase_rate(self):
        c = series_coefficients(1, math.radians(45.0))
        assert c.a == 0 and c.b == 0
        assert c.terms[0] == 1.0
        assert c.terms[1] == 0.0
        assert c.terms[2] == 0.0

    def test_second_element_broadside(self):
        c = series_coefficients(2, math.radians(90.0))
        assert c.a == pytest.approx(0.0, abs=1e-15)
        assert c.b == pytest.approx(1j * math.pi, abs=1e-15)
        assert c.terms[1] == pytest.approx(-1j * math.pi, abs=1e-12)
        assert c.terms[2] == pytest.approx(-math.pi**2 / 2.0, abs=1e-12)

    def test_second_element_endfire_odd_terms_vanish(self):
        c = series_coefficients(2, 0.0)
        assert c.b == pytest.approx(0.0, abs=1e-15)
        assert c.terms[1] == pytest.approx(0.0, abs=1e-15)
        assert c.terms[3] == pytest.approx(0.0, abs=1e-15)

    def test_rejects_bad_element_index(self):
        with pytest.raises(ValueError):
            series_coefficients(0, 0.0)


class TestExpectedElement:
    def test_zero_width_reduces_to_nominal_phase(self):
        for m, angle in [(1, 30.0), (3, 60.0), (7, 120.0)]:
            params = ExpectedResponseParams(angle, 0.0, 8)
            nominal = np.exp(1j * np.pi * (m - 1) * np.cos(math.radians(angle)))
            assert expected_element(m, params) == pytest.approx(nominal, abs=1e-12)

    def test_first_element_unaffected_by_error(self):
        params = ExpectedResponseParams(60.0, BETA_2DEG, 8)
        assert expected_element(1, params) == pytest.approx(1.0, abs=1e-12)

    def test_second_element_broadside_attenuation(self):
        # Independent oracle value: converged quadrature gives ~0.99800 + 0j.
        params = ExpectedResponseParams(90.0, BETA_2DEG, 8)
        series = expected_element(2, params)
        oracle = quadrature_expected_element(2, params)
        assert abs(series - oracle) < 1e-4
        assert oracle.real == pytest.approx(0.99800, abs=5e-5)
        assert oracle.imag == pytest.approx(0.0, abs=1e-6)


class TestQuadratureOracle:
    def test_zero_width_is_exact(self):
        params = ExpectedResponseParams(45.0, 0.0, 16)
        nominal = np.exp(1j * np.pi * 4 * np.cos(math.radians(45.0)))
        assert quadrature_expected_element(5, params) == pytest.approx(nominal, abs=1e-12)

    def test_first_element_is_one_for_any_width(self):
        for beta in (0.0, BETA_2DEG, math.radians(10.0)):
            params = ExpectedResponseParams(75.0, beta, 4)
            assert quadrature_expected_element(1, params) == pytest.approx(1.0, abs=1e-12)

    def test_node_doubling_self_certification(self):
        params = ExpectedResponseParams(60.0, BETA_2DEG, 64)
        for m in (2, 17, 64):
            v96 = quadrature_expected_element(m, params, node_count=96)
            v192 = quadrature_expected_element(m, params, node_count=192)
            assert abs(v96 - v192) < 1e-10

    def test_rejects_tiny_node_count(self):
        params = ExpectedResponseParams(60.0, BETA_2DEG, 4)
        with pytest.raises(ValueError):
            quadrature_expected_element(2, params, node_count=1)


class TestExpectedArrayResponse:
    def test_zero_width_equals_steering_vector(self):
        params = ExpectedResponseParams(70.0, 0.0, 16)
        for backend in ("series", "quadrature"):
            v = expected_array_response(params, backend=backend)
            np.testing.assert_allclose(
                v, steering_vector(70.0, ArrayGeometry(16)), atol=1e-12
            )

    def test_single_element_array(self):
        params = ExpectedResponseParams(70.0, BETA_2DEG, 1)
        np.testing.assert_allclose(expected_array_response(params), [1.0], atol=1e-12)

    def test_series_matches_quadrature_at_small_arrays(self):
        params = ExpectedResponseParams(60.0, BETA_2DEG, 8)
        series = expected_array_response(params, backend="series")
        quad = expected_array_response(params, backend="quadrature")
        np.testing.assert_allclose(series, quad, atol=1e-3)

    def test_unknown_backend_rejected(self):
        params = ExpectedResponseParams(60.0, BETA_2DEG, 8)
        with pytest.raises(ValueError):
            expected_array_response(params, backend="exact")

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ExpectedResponseParams(60.0, math.pi, 8)
        with pytest.raises(ValueError):
            ExpectedResponseParams(60.0, 0.1, 0)
