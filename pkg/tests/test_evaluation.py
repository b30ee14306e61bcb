import math

import numpy as np
import pytest

from curveshift import (
    BacktestConfig,
    EmptyInput,
    InsufficientData,
    InvalidConfig,
    SynthConfig,
    dm_test,
    generate_synthetic,
    mae,
    rmse,
    run_backtest,
)


class TestMetrics:
    def test_zero_residuals(self):
        r = np.zeros((4, 24))
        assert mae(r) == 0.0 and rmse(r) == 0.0

    def test_constant_residuals(self):
        r = np.full((3, 24), -2.5)
        assert mae(r) == 2.5
        assert rmse(r) == 2.5

    def test_sign_flip_and_permutation_invariance(self, rng):
        r = rng.normal(size=(5, 24))
        flipped = -r
        shuffled = rng.permutation(r.ravel()).reshape(r.shape)
        assert mae(r) == mae(flipped)
        assert rmse(r) == pytest.approx(rmse(shuffled), rel=1e-12)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            mae(np.empty((0, 24)))
        with pytest.raises(EmptyInput):
            rmse(np.empty(0))


class TestDmTest:
    def test_hand_computed_example(self):
        # |a| - |b| = five zeros and five ones: mean 1/2, sample sd
        # sqrt(5/18), so t = 0.5 / (sqrt(5/18)/sqrt(10)) = 3 exactly
        a = [1, 2, 1, 3, 2, 1, 2, 3, 1, 2]
        b = [1, 1, 1, 2, 2, 1, 1, 2, 1, 1]
        res = dm_test(a, b, phi=1)
        assert abs(res.t - 3.0) < 1e-10
        assert res.p == pytest.approx(math.erfc(3.0 / math.sqrt(2.0)), rel=1e-12)
        # squared losses, against a looped reimplementation
        res2 = dm_test(a, b, phi=2)
        d = [abs(x) ** 2 - abs(y) ** 2 for x, y in zip(a, b)]
        mean = sum(d) / 10
        sd = math.sqrt(sum((x - mean) ** 2 for x in d) / 9)
        assert res2.t == pytest.approx(mean / (sd / math.sqrt(10)), abs=1e-10)

    def test_antisymmetry_exact(self, rng):
        for _ in range(30):
            a = rng.normal(size=80)
            b = rng.normal(size=80)
            for phi in (1, 2):
                fwd = dm_test(a, b, phi)
                rev = dm_test(b, a, phi)
                assert fwd.t == -rev.t

    def test_identical_models_degenerate(self):
        a = np.array([1.0, -2.0, 3.0, 1.5])
        res = dm_test(a, a.copy(), phi=1)
        assert res.degenerate
        assert math.isnan(res.t)

    def test_positive_t_favors_b(self, rng):
        noise = rng.normal(size=364) * 0.3
        b = rng.normal(size=364)
        a = np.abs(b) + 1.0 + noise  # A uniformly worse by ~1
        res = dm_test(a, b, phi=1)
        assert res.t > 1.96
        half = dm_test(a[:91], b[:91], phi=1)
        assert res.t > half.t  # grows with the sample

    def test_hac_reserved(self):
        with pytest.raises(InvalidConfig):
            dm_test([1, 2, 3], [1, 2, 2], phi=1, variance="hac")


@pytest.fixture(scope="module")
def lm2_backtest():
    cfg = SynthConfig(days=16, noise_sd=1.0, true_model="lm2")
    dataset = generate_synthetic(cfg, seed=31)
    report = run_backtest(dataset, ["naive", "lm2"],
                          BacktestConfig(in_sample_days=10, out_sample_days=6, step=24))
    return dataset, report


class TestBacktest:
    def test_shapes_and_naive_predictions(self, lm2_backtest):
        dataset, report = lm2_backtest
        assert report.actual.shape == (6, 24)
        assert np.array_equal(report.predictions["naive"], report.day_ahead)
        assert len(report.coefficients["lm2"]) == 6
        assert report.metrics["lm2"]["rmse"] < report.metrics["naive"]["rmse"]

    def test_dm_rows_cover_hours_and_norms(self, lm2_backtest):
        _, report = lm2_backtest
        frame = report.dm_frame()
        assert len(frame) == 24 * 2  # one pair, both norms
        assert set(frame.hour) == set(range(24))
        assert set(frame.phi) == {1, 2}

    def test_single_day_run_emits_24_predictions(self):
        dataset = generate_synthetic(SynthConfig(days=11, true_model="lm2"), seed=8)
        report = run_backtest(dataset, ["naive"],
                              BacktestConfig(in_sample_days=10, out_sample_days=1))
        assert report.actual.shape == (1, 24)
        assert len(report.predictions_frame()) == 24

    def test_sub_daily_step_refits(self):
        dataset = generate_synthetic(SynthConfig(days=12, true_model="lm2"), seed=9)
        report = run_backtest(dataset, ["lm2"],
                              BacktestConfig(in_sample_days=10, out_sample_days=2, step=12))
        assert len(report.coefficients["lm2"]) == 4  # two refits per day
        assert not np.isnan(report.predictions["lm2"]).any()

    def test_insufficient_data(self):
        dataset = generate_synthetic(SynthConfig(days=5, true_model="lm2"), seed=10)
        with pytest.raises(InsufficientData):
            run_backtest(dataset, ["naive"],
                         BacktestConfig(in_sample_days=5, out_sample_days=1))

    def test_incomplete_day_rejected(self):
        dataset = generate_synthetic(SynthConfig(days=6, true_model="lm2"), seed=10)
        broken = list(dataset)[:-1]  # drop the final hour

        class Shim:
            def __init__(self, records):
                self.records = records

            def days(self):
                groups = {}
                for r in self.records:
                    groups.setdefault(r.timestamp.date(), []).append(r)
                return [(d, tuple(v)) for d, v in groups.items()]

            def __iter__(self):
                return iter(self.records)

        with pytest.raises(InsufficientData, match="complete"):
            run_backtest(Shim(broken), ["naive"],
                         BacktestConfig(in_sample_days=4, out_sample_days=1))

    def test_fit_failure_excludes_day(self):
        # zero out solar errors over one training window to break lm2 there
        dataset = generate_synthetic(SynthConfig(days=8, true_model="lm2"), seed=44)
        records = []
        for i, r in enumerate(dataset):
            if i < 6 * 24:
                records.append(type(r)(
                    timestamp=r.timestamp, p_da=r.p_da, p_id=r.p_id,
                    w_forecast=r.w_forecast, w_actual=r.w_actual,
                    s_forecast=r.s_actual, s_actual=r.s_actual,
                    supply_curve=r.supply_curve, demand_curve=r.demand_curve))
            else:
                records.append(r)
        from curveshift import Dataset, Provenance
        broken = Dataset(tuple(records), Provenance("synthetic", 44))
        report = run_backtest(broken, ["naive", "lm2"],
                              BacktestConfig(in_sample_days=6, out_sample_days=2))
        assert any(model == "lm2" for model, _, _ in report.failures)
        assert np.isnan(report.predictions["lm2"][0]).all()
        assert report.metrics["lm2"]["days_used"] < 2
        assert report.metrics["naive"]["days_used"] == 2

    def test_deterministic_and_parallel_identical(self):
        dataset = generate_synthetic(SynthConfig(days=13, true_model="lm2"), seed=3)
        cfg = BacktestConfig(in_sample_days=10, out_sample_days=3)
        a = run_backtest(dataset, ["naive", "lm2"], cfg)
        b = run_backtest(dataset, ["naive", "lm2"], cfg)
        c = run_backtest(dataset, ["naive", "lm2"], cfg, jobs=2)
        for report in (b, c):
            assert np.array_equal(a.predictions["lm2"], report.predictions["lm2"])
            assert a.metrics == report.metrics

    def test_config_validation(self):
        with pytest.raises(InvalidConfig):
            BacktestConfig(step=7)
        with pytest.raises(InvalidConfig):
            BacktestConfig(in_sample_days=0)
