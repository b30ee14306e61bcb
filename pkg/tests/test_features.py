import math

import numpy as np
import pytest

from curveshift import (
    FeatureVector,
    InvalidConfig,
    NegativeRadicand,
    ScaleConfig,
    build_features,
    scale_features,
    sd_scaling_factor,
)
from curveshift.features import feature_matrix, scale_matrix


def test_build_features_negative_error(small_dataset):
    record = small_dataset[0]
    z = build_features(record)
    assert z.w_err == record.w_actual - record.w_forecast
    assert z.w_err_neg == max(-z.w_err, 0.0)
    assert z.s_err_neg == max(-z.s_err, 0.0)
    assert z.w_actual == record.w_actual


def test_negative_part_examples():
    z = FeatureVector.from_errors(w_err=-100.0, s_err=200.0, w_actual=900.0, s_actual=10.0)
    assert (z.w_err_neg, z.w_err) == (100.0, -100.0)
    assert (z.s_err_neg, z.s_err) == (0.0, 200.0)


def test_perfect_forecast_vector():
    z = FeatureVector.from_errors(0.0, 0.0, 5000.0, 1200.0)
    assert z.as_array().tolist() == [0.0, 0.0, 0.0, 0.0, 5000.0, 1200.0]


def test_inconsistent_vector_rejected():
    with pytest.raises(InvalidConfig):
        FeatureVector(w_err_neg=5.0, w_err=1.0, s_err_neg=0.0, s_err=0.0,
                      w_actual=0.0, s_actual=0.0)


class TestScaling:
    def test_identity(self):
        z = FeatureVector.from_errors(-120.0, 40.0, 800.0, 300.0)
        assert scale_features(z, ScaleConfig()) == z

    def test_closed_form_factors(self):
        z = FeatureVector.from_errors(-100.0, -10.0, 1000.0, 500.0)
        out = scale_features(z, ScaleConfig(gamma_w=1.0, rho_w=0.0))
        assert out.w_err == pytest.approx(-100.0 * math.sqrt(2.0), rel=1e-12)
        assert out.w_err_neg == pytest.approx(100.0 * math.sqrt(2.0), rel=1e-12)
        assert out.w_actual == 2000.0
        assert out.s_err == -10.0  # other technology untouched

    def test_large_gamma_rho(self):
        factor = sd_scaling_factor(5.0, 0.8)
        assert factor == pytest.approx(math.sqrt(34.0), rel=1e-12)
        z = FeatureVector.from_errors(-50.0, 0.0, 0.0, 0.0)
        out = scale_features(z, ScaleConfig(gamma_w=5.0, rho_w=0.8))
        # negative-part consistency survives the shared factor
        assert out.w_err_neg == max(-out.w_err, 0.0)

    def test_negative_part_consistency_random(self, rng):
        for _ in range(200):
            z = FeatureVector.from_errors(*(rng.normal(size=2) * 500),
                                          *np.abs(rng.normal(size=2)) * 3000)
            cfg = ScaleConfig(gamma_w=float(rng.uniform(0, 5)),
                              gamma_s=float(rng.uniform(0, 5)),
                              rho_w=float(rng.uniform(-1, 1)),
                              rho_s=float(rng.uniform(-1, 1)))
            out = scale_features(z, cfg)  # constructor re-validates the identity
            assert out.w_err_neg == max(-out.w_err, 0.0)
            assert out.s_err_neg == max(-out.s_err, 0.0)

    def test_matrix_path_matches_scalar(self, small_dataset, rng):
        records = list(small_dataset)[:48]
        z = feature_matrix(records)
        cfg = ScaleConfig(gamma_w=1.0, rho_w=0.5, gamma_s=0.1, rho_s=0.8)
        scaled = scale_matrix(z, cfg)
        for i, record in enumerate(records):
            expected = scale_features(build_features(record), cfg)
            assert np.array_equal(scaled[i], expected.as_array())


class TestSdScalingFactor:
    def test_gamma_zero(self):
        for rho in (-1.0, -0.3, 0.0, 0.8, 1.0):
            assert sd_scaling_factor(0.0, rho) == 1.0

    def test_boundary_exactly_one(self):
        for gamma in (0.1, 1.0, 5.0, 2.7):
            assert sd_scaling_factor(gamma, -gamma / 2.0) == 1.0

    def test_negative_radicand(self):
        with pytest.raises(NegativeRadicand):
            sd_scaling_factor(1.0, -1.5)

    def test_monotone_in_rho_and_gamma(self):
        rhos = np.linspace(-0.4, 1.0, 15)
        factors = [sd_scaling_factor(1.0, r) for r in rhos]
        assert all(a <= b for a, b in zip(factors, factors[1:]))
        gammas = np.linspace(0.0, 5.0, 15)
        factors = [sd_scaling_factor(g, 0.5) for g in gammas]
        assert all(a <= b for a, b in zip(factors, factors[1:]))


def test_invalid_configs():
    with pytest.raises(InvalidConfig):
        ScaleConfig(gamma_w=-0.1)
    with pytest.raises(InvalidConfig):
        ScaleConfig(rho_w=1.5)
