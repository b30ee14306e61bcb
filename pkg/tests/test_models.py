import numpy as np
import pytest

from curveshift import (
    DimensionMismatch,
    FeatureVector,
    InelasticDemand,
    MissingConstituent,
    ModelFit,
    ModelSpec,
    RankDeficient,
    StepCurve,
    SynthConfig,
    fit_model,
    generate_synthetic,
    predict_cm,
    predict_dataset,
    predict_lm1,
    predict_lm2,
    predict_mixture,
    predict_naive,
    predict_nlm,
    predict_qlm,
    predict_record,
    to_inelastic,
    transform_records,
)
from curveshift.features import feature_matrix
from curveshift.models import BETA_LENGTH, shift_sizes

from oracles import brute_force_equilibrium


def make_fit(model_id, beta):
    return ModelFit(model_id, np.asarray(beta, dtype=float))


@pytest.fixture(scope="module")
def market():
    sup = StepCurve.from_breakpoints(
        [(8000, 10.0), (20000, 30.0), (26000, 42.0), (30000, 180.0)], "supply")
    dem = StepCurve.from_breakpoints(
        [(15000, 3000.0), (21000, 35.0), (24000, -500.0)], "demand")
    return to_inelastic(sup, dem)


@pytest.fixture(scope="module")
def z_example():
    return FeatureVector.from_errors(w_err=-800.0, s_err=150.0,
                                     w_actual=9500.0, s_actual=2000.0)


class TestScalarPredictors:
    def test_naive(self, small_dataset):
        record = small_dataset[0]
        assert predict_naive(record) == record.p_da

    def test_lm1_zero_beta_is_naive(self, z_example):
        fit = make_fit("lm1", np.zeros(7))
        assert predict_lm1(fit, z_example, 51.25) == 51.25

    def test_lm1_intercept(self, z_example):
        fit = make_fit("lm1", [1.0, 0, 0, 0, 0, 0, 0])
        assert predict_lm1(fit, z_example, 10.0) == 11.0

    def test_lm2_manual_dot(self, rng, z_example):
        beta = rng.normal(size=8)
        fit = make_fit("lm2", beta)
        expected = beta[0] + beta[1:7] @ z_example.as_array() + beta[7] * 40.0
        assert predict_lm2(fit, z_example, 40.0) == pytest.approx(expected, rel=1e-12)

    def test_qlm_square_contribution(self):
        beta = np.zeros(15)
        beta[9] = 1.0  # weight on the squared signed wind error
        z = FeatureVector.from_errors(w_err=2.0, s_err=0.0, w_actual=0.0, s_actual=0.0)
        fit = make_fit("qlm", beta)
        assert predict_qlm(fit, z, 0.0) == 4.0

    def test_qlm_manual(self, rng, z_example):
        beta = rng.normal(size=15) * 1e-3
        fit = make_fit("qlm", beta)
        arr = z_example.as_array()
        expected = (beta[0] + beta[1:7] @ arr + beta[7] * 35.0
                    + beta[8:14] @ (arr * arr) + beta[14] * 35.0 ** 2)
        assert predict_qlm(fit, z_example, 35.0) == pytest.approx(expected, rel=1e-10)

    def test_nlm_zero_shift(self, market, z_example):
        supply, demand = market
        zero = FeatureVector.from_errors(0.0, 0.0, 0.0, 0.0)
        fit = make_fit("nlm", np.zeros(7))
        res = predict_nlm(fit, zero, supply, demand)
        assert res.price == supply.price_at(demand.volume)[0]

    def test_nlm_shift_directions(self, market):
        supply, demand = market
        zero = FeatureVector.from_errors(0, 0, 0, 0)
        shortfall = FeatureVector.from_errors(-4000.0, 0, 0, 0)
        # a positive weight on the negative part alone pushes the shift up,
        # i.e. the curve right and the price weakly down
        neg_only = make_fit("nlm", [0.0, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0])
        assert shift_sizes(neg_only.beta, shortfall.as_array()) > 0
        assert predict_nlm(neg_only, shortfall, supply, demand).price <= \
            predict_nlm(neg_only, zero, supply, demand).price
        # with the signed-error weight dominating (as in fitted models) a
        # wind shortfall shifts the curve left and the price weakly up
        fitted_like = make_fit("nlm", [0.0, 0.3, 0.45, 0.0, 0.0, 0.0, 0.0])
        assert shift_sizes(fitted_like.beta, shortfall.as_array()) < 0
        assert predict_nlm(fitted_like, shortfall, supply, demand).price >= \
            predict_nlm(fitted_like, zero, supply, demand).price

    def test_nlm_matches_brute_force_shift(self, market, rng):
        supply, demand = market
        for _ in range(20):
            beta = np.concatenate([[rng.uniform(-500, 500)], rng.normal(size=6) * 0.05])
            z = FeatureVector.from_errors(*(rng.normal(size=2) * 2000),
                                          *np.abs(rng.normal(size=2)) * 8000)
            fit = make_fit("nlm", beta)
            got = predict_nlm(fit, z, supply, demand)
            shift = float(shift_sizes(beta, z.as_array()))
            shifted = StepCurve(supply.volumes + shift, supply.prices, "supply")
            oracle = brute_force_equilibrium(
                shifted, InelasticDemand(demand.volume).as_step_curve())
            if not got.clamped and oracle is not None:
                assert got.price == oracle[0]

    def test_nlm_monotone_in_positive_weight_features(self, market):
        # raising a feature with a positive shift weight moves the curve
        # right, so the price is monotone non-increasing in that feature
        supply, demand = market
        fit = make_fit("nlm", [0.0, 0.5, 0.4, 0.9, 0.3, 0.02, 0.01])
        for volume in np.linspace(0, 6000, 25):
            a = predict_nlm(fit, FeatureVector.from_errors(volume, 0, 8000, 2000),
                            supply, demand)
            b = predict_nlm(fit, FeatureVector.from_errors(volume + 500, 0, 8000, 2000),
                            supply, demand)
            assert b.price <= a.price
        prices = [predict_nlm(fit, FeatureVector.from_errors(0, 0, w, 2000),
                              supply, demand).price
                  for w in np.linspace(0, 30000, 40)]
        assert all(x >= y for x, y in zip(prices, prices[1:]))

    def test_cm_composition(self, market, rng, z_example):
        supply, demand = market
        beta = np.concatenate([rng.normal(size=8) * 0.01, rng.normal(size=7) * 0.05, [0.6]])
        fit = make_fit("cm", beta)
        nlm_price = predict_nlm(make_fit("nlm", beta[8:15]), z_example, supply, demand).price
        expected = (beta[0] + beta[1:7] @ z_example.as_array() + beta[7] * 45.0
                    + beta[15] * nlm_price)
        assert predict_cm(fit, z_example, 45.0, supply, demand).price == \
            pytest.approx(expected, rel=1e-12)


class TestNestingIdentities:
    """The reductions hold exactly, not just approximately."""

    def test_lm1_equals_lm2_with_unit_weight(self, rng, z_example):
        beta = rng.normal(size=7)
        lm1 = make_fit("lm1", beta)
        lm2 = make_fit("lm2", np.append(beta, 1.0))
        for p_da in (0.0, 51.25, -12.87):
            assert predict_lm1(lm1, z_example, p_da) == predict_lm2(lm2, z_example, p_da)

    def test_lm2_equals_qlm_with_zero_quadratics(self, rng, z_example):
        beta = rng.normal(size=8)
        lm2 = make_fit("lm2", beta)
        qlm = make_fit("qlm", np.concatenate([beta, np.zeros(7)]))
        assert predict_lm2(lm2, z_example, 33.3) == predict_qlm(qlm, z_example, 33.3)

    def test_lm2_equals_cm_with_zero_curve_weight(self, market, rng, z_example):
        supply, demand = market
        beta = rng.normal(size=8)
        lm2 = make_fit("lm2", beta)
        cm = make_fit("cm", np.concatenate([beta, rng.normal(size=7), [0.0]]))
        assert predict_lm2(lm2, z_example, 28.0) == \
            predict_cm(cm, z_example, 28.0, supply, demand).price

    def test_nlm_equals_cm_with_unit_curve_weight(self, market, rng, z_example):
        supply, demand = market
        curve_beta = rng.normal(size=7) * 0.05
        nlm = make_fit("nlm", curve_beta)
        cm = make_fit("cm", np.concatenate([np.zeros(8), curve_beta, [1.0]]))
        assert predict_nlm(nlm, z_example, supply, demand).price == \
            predict_cm(cm, z_example, 33.0, supply, demand).price

    def test_mixture_is_exact_mean(self, small_dataset):
        record = small_dataset[0]
        fits = {m: fit_model(m, small_dataset[:72]) for m in ("lm2", "qlm")}
        mix = predict_mixture(ModelSpec.for_id("mlq"), fits, record)
        a = predict_record(fits["lm2"], record).price
        b = predict_record(fits["qlm"], record).price
        assert mix.price == 0.5 * a + 0.5 * b
        same = predict_mixture(ModelSpec.for_id("mlq"), {"lm2": fits["lm2"],
                                                         "qlm": fits["lm2"]}, record)
        assert same.price == a

    def test_mixture_requires_constituents(self, small_dataset):
        record = small_dataset[0]
        with pytest.raises(MissingConstituent):
            predict_mixture(ModelSpec.for_id("mnq"), {}, record)


class TestModelSpecAndFitTypes:
    def test_beta_lengths(self):
        assert BETA_LENGTH == {"naive": 0, "lm1": 7, "lm2": 8, "qlm": 15,
                               "nlm": 7, "cm": 16}
        with pytest.raises(DimensionMismatch):
            make_fit("lm2", np.zeros(3))

    def test_mixture_spec_validation(self):
        spec = ModelSpec.for_id("mnq")
        assert spec.components == (("qlm", 0.5), ("nlm", 0.5))
        from curveshift import InvalidConfig
        with pytest.raises(InvalidConfig):
            ModelSpec("mnq", (("qlm", 0.7), ("nlm", 0.5)))
        with pytest.raises(InvalidConfig):
            ModelSpec("bogus")

    def test_fit_round_trip_json(self, small_dataset):
        fit = fit_model("mnq", small_dataset)
        payload = fit.to_dict()
        back = ModelFit.from_dict(payload)
        assert back.model_id == "mnq"
        assert set(back.constituents) == {"qlm", "nlm"}
        assert np.array_equal(back.constituents["qlm"].beta,
                              fit.constituents["qlm"].beta)


class TestFitModel:
    def test_lm2_exact_recovery_on_noiseless_data(self):
        cfg = SynthConfig(days=30, noise_sd=0.0, true_model="lm2")
        ds = generate_synthetic(cfg, seed=13)
        fit = fit_model("lm2", ds)
        assert np.allclose(fit.beta, cfg.resolved_beta(), atol=1e-8)

    def test_lm1_fits_price_difference(self, noisy_dataset):
        fit = fit_model("lm1", noisy_dataset)
        z = feature_matrix(list(noisy_dataset))
        design = np.column_stack([np.ones(len(z)), z])
        target = np.array([r.p_id - r.p_da for r in noisy_dataset])
        from oracles import ols_normal_equations
        assert np.allclose(fit.beta, ols_normal_equations(design, target), atol=1e-6)

    def test_nlm_noiseless_recovery(self):
        cfg = SynthConfig(days=40, noise_sd=0.0)
        ds = generate_synthetic(cfg, seed=14)
        fit = fit_model("nlm", ds)
        assert fit.meta["objective"] <= 1e-6
        pred, _ = predict_dataset(fit, list(ds))
        assert np.max(np.abs(pred - [r.p_id for r in ds])) <= 0.02

    def test_rank_deficient_window_reported(self):
        # all solar errors positive -> the negative-part column is all zero
        ds = generate_synthetic(SynthConfig(days=5, true_model="lm2"), seed=2)
        records = []
        for r in ds:
            forecast = max(r.s_actual - 10.0, 0.0)
            records.append(type(r)(
                timestamp=r.timestamp, p_da=r.p_da, p_id=r.p_id,
                w_forecast=r.w_forecast, w_actual=r.w_actual,
                s_forecast=forecast, s_actual=r.s_actual,
                supply_curve=r.supply_curve, demand_curve=r.demand_curve))
        with pytest.raises(RankDeficient):
            fit_model("lm2", records)

    def test_mixture_fit_reuses_constituents(self, noisy_dataset):
        mix = fit_model("mcq", noisy_dataset[: 30 * 24])
        assert set(mix.constituents) == {"cm", "qlm"}
        records = list(noisy_dataset)[30 * 24:]
        pred, _ = predict_dataset(mix, records)
        a, _ = predict_dataset(mix.constituents["cm"], records)
        b, _ = predict_dataset(mix.constituents["qlm"], records)
        assert np.array_equal(pred, 0.5 * a + 0.5 * b)

    def test_vectorized_matches_scalar(self, noisy_dataset):
        records = list(noisy_dataset)[:48]
        panel = transform_records(records)
        for model in ("naive", "lm1", "lm2", "qlm", "nlm", "cm", "mnq"):
            fit = fit_model(model, noisy_dataset[: 20 * 24])
            pred, clamp = predict_dataset(fit, records, panel=panel)
            for i, record in enumerate(records):
                scalar = predict_record(fit, record)
                assert pred[i] == scalar.price
                assert clamp[i] == scalar.clamped
