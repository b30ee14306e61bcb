"""Rolling-window backtests, loss metrics, and forecast comparison tests.

The protocol refits every model on a sliding in-sample window and predicts
the following block of hours, stepping forward by ``step`` hours until the
out-of-sample span is covered.  Per-hour model comparisons use the
standardized mean loss differential (Diebold-Mariano style) with a plain
i.i.d. standard error; ``variance`` currently accepts only "iid" and
reserves room for a HAC variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import CurveShiftError, EmptyInput, InsufficientData, InvalidConfig
from .models import (
    CURVE_BASED,
    FitOptions,
    ModelSpec,
    _arrays,
    _predict_arrays,
    fit_model,
    transform_records,
)

HOURS_PER_DAY = 24


@dataclass(frozen=True)
class BacktestConfig:
    in_sample_days: int = 365
    out_sample_days: int = 364
    step: int = 24  # hours between refits; must divide 24

    def __post_init__(self):
        if self.in_sample_days <= 0 or self.out_sample_days <= 0 or self.step <= 0:
            raise InvalidConfig("window sizes must be positive")
        if HOURS_PER_DAY % self.step != 0:
            raise InvalidConfig("step must divide 24 hours")


def mae(residuals: np.ndarray) -> float:
    """Mean absolute residual over all day/hour cells."""
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size == 0:
        raise EmptyInput("no residuals to aggregate")
    return float(np.mean(np.abs(residuals)))


def rmse(residuals: np.ndarray) -> float:
    """Root mean squared residual over all day/hour cells."""
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size == 0:
        raise EmptyInput("no residuals to aggregate")
    return float(math.sqrt(np.mean(residuals * residuals)))


@dataclass(frozen=True)
class DmResult:
    """Standardized mean loss differential of model A against model B.

    Positive statistics favor model B (its losses are smaller).  When the
    differential series is constant the result is flagged degenerate
    instead of reporting an infinite statistic.
    """

    t: float
    p: float
    n: int
    mean_differential: float
    degenerate: bool = False


def dm_test(residuals_a: Sequence[float], residuals_b: Sequence[float],
            phi: int = 1, variance: str = "iid") -> DmResult:
    """Loss-differential test between two residual series at one hour.

    ``phi`` selects absolute (1) or squared (2) loss.  The statistic is
    mean(d) / (sd(d) / sqrt(n)) with the sample standard deviation, and a
    two-sided p-value from the standard normal.
    """
    if variance != "iid":
        raise InvalidConfig(f"variance {variance!r} not implemented (only 'iid')")
    if phi not in (1, 2):
        raise InvalidConfig("phi must be 1 or 2")
    a = np.asarray(residuals_a, dtype=float)
    b = np.asarray(residuals_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidConfig("residual series must be 1-D and equally long")
    if a.size < 2:
        raise EmptyInput("need at least two observations")
    d = np.abs(a) ** phi - np.abs(b) ** phi
    n = d.size
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return DmResult(t=float("nan"), p=float("nan"), n=n,
                        mean_differential=mean, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = math.erfc(abs(t) / math.sqrt(2.0))
    return DmResult(t=float(t), p=float(p), n=n, mean_differential=mean)


@dataclass(frozen=True)
class BacktestReport:
    """Everything a rolling study produced, ready for CSV export."""

    model_ids: tuple[str, ...]
    dates: tuple[str, ...]
    timestamps: tuple[str, ...]
    actual: np.ndarray          # (days, 24)
    day_ahead: np.ndarray       # (days, 24)
    predictions: dict           # model -> (days, 24), NaN where the fit failed
    clamped: dict               # model -> (days, 24) bool
    coefficients: dict          # model -> list[(window_start_iso, beta array)]
    failures: tuple[tuple[str, str, str], ...]  # (model, date, reason)
    metrics: dict = field(default_factory=dict)   # model -> {"mae": .., "rmse": ..}
    dm: tuple = ()              # rows: (hour, model_a, model_b, phi, t, p, n, degenerate)

    def residuals(self, model_id: str) -> np.ndarray:
        return self.actual - self.predictions[model_id]

    def metrics_frame(self) -> pd.DataFrame:
        rows = [{"model_id": m, "mae": v["mae"], "rmse": v["rmse"]}
                for m, v in self.metrics.items()]
        return pd.DataFrame(rows, columns=["model_id", "mae", "rmse"])

    def dm_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            list(self.dm),
            columns=["hour", "model_a", "model_b", "phi", "t", "p", "n_days", "degenerate"])

    def coefficients_frame(self) -> pd.DataFrame:
        rows = []
        for model_id, entries in self.coefficients.items():
            for window_start, beta in entries:
                for index, value in enumerate(beta):
                    rows.append({"date": window_start, "model_id": model_id,
                                 "beta_index": index, "value": float(value)})
        return pd.DataFrame(rows, columns=["date", "model_id", "beta_index", "value"])

    def predictions_frame(self) -> pd.DataFrame:
        rows = []
        n_days = len(self.dates)
        for model_id in self.model_ids:
            pred = self.predictions[model_id]
            clamp = self.clamped[model_id]
            for d in range(n_days):
                for h in range(HOURS_PER_DAY):
                    rows.append({
                        "timestamp_utc": self.timestamps[d * HOURS_PER_DAY + h],
                        "model_id": model_id,
                        "p_hat_eur": pred[d, h],
                        "clamped": bool(clamp[d, h]),
                    })
        return pd.DataFrame(rows, columns=["timestamp_utc", "model_id", "p_hat_eur", "clamped"])


def _complete_days(dataset) -> list:
    days = dataset.days()
    for day, records in days:
        if len(records) != HOURS_PER_DAY:
            raise InsufficientData(
                f"day {day} has {len(records)} hours; the rolling study needs complete days")
    return days


def _fit_predict_block(task):
    """Fit every spec on one window and predict its block (pool-friendly)."""
    train_records, block_records, spec_ids, panels, options = task
    out = {}
    z, p_da, _ = _arrays(block_records)
    for spec_id in spec_ids:
        train_panel, block_panel = panels.get(spec_id, (None, None))
        try:
            fit = fit_model(spec_id, train_records, options, panel=train_panel)
            pred, clamp = _predict_arrays(fit, block_records, z, p_da, block_panel)
            out[spec_id] = (fit, pred, clamp, None)
        except CurveShiftError as exc:
            out[spec_id] = (None, None, None, f"{type(exc).__name__}: {exc}")
    return out


def run_backtest(dataset, specs: Sequence[ModelSpec | str], cfg: BacktestConfig,
                 options: FitOptions | None = None, jobs: int = 1) -> BacktestReport:
    """Rolling refit-and-predict study over the out-of-sample span.

    Each block of ``cfg.step`` hours is predicted by models fitted on the
    ``in_sample_days`` days of hours immediately preceding it.  Fit
    failures exclude the affected day from that model's aggregates and are
    recorded on the report.
    """
    spec_ids = [s if isinstance(s, str) else s.model_id for s in specs]
    days = _complete_days(dataset)
    needed = cfg.in_sample_days + cfg.out_sample_days
    if len(days) < needed:
        raise InsufficientData(
            f"need {needed} complete days, dataset has {len(days)}")

    records = list(dataset)
    options = options or FitOptions()
    needs_curves = [s for s in spec_ids if s in CURVE_BASED]
    full_panel = transform_records(records) if needs_curves else None

    out_start = cfg.in_sample_days
    out_days = range(out_start, out_start + cfg.out_sample_days)
    blocks_per_day = HOURS_PER_DAY // cfg.step

    tasks = []
    block_keys = []
    for d in out_days:
        for w in range(blocks_per_day):
            anchor = d * HOURS_PER_DAY + w * cfg.step
            train_slice = slice(anchor - cfg.in_sample_days * HOURS_PER_DAY, anchor)
            block_slice = slice(anchor, anchor + cfg.step)
            panels = {}
            for spec_id in needs_curves:
                panels[spec_id] = (full_panel.subset(train_slice),
                                   full_panel.subset(block_slice))
            tasks.append((records[train_slice], records[block_slice],
                          spec_ids, panels, options))
            block_keys.append((d - out_start, w))

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fit_predict_block, tasks))
    else:
        results = [_fit_predict_block(task) for task in tasks]

    n_days = cfg.out_sample_days
    dates = tuple(str(days[d][0]) for d in out_days)
    out_records = records[out_start * HOURS_PER_DAY:
                          (out_start + cfg.out_sample_days) * HOURS_PER_DAY]
    timestamps = tuple(r.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ") for r in out_records)
    actual = np.array([r.p_id for r in out_records]).reshape(n_days, HOURS_PER_DAY)
    day_ahead = np.array([r.p_da for r in out_records]).reshape(n_days, HOURS_PER_DAY)

    predictions = {m: np.full((n_days, HOURS_PER_DAY), np.nan) for m in spec_ids}
    clamped = {m: np.zeros((n_days, HOURS_PER_DAY), dtype=bool) for m in spec_ids}
    coefficients: dict = {m: [] for m in spec_ids}
    failures = []

    for (day_index, w), block_result in zip(block_keys, results):
        cols = slice(w * cfg.step, (w + 1) * cfg.step)
        for model_id, (fit, pred, clamp, error) in block_result.items():
            if error is not None:
                failures.append((model_id, dates[day_index], error))
                continue
            predictions[model_id][day_index, cols] = pred
            clamped[model_id][day_index, cols] = clamp
            block_start = timestamps[day_index * HOURS_PER_DAY + w * cfg.step]
            coefficients[model_id].append((block_start, np.asarray(fit.beta)))

    metrics = {}
    for model_id in spec_ids:
        resid = actual - predictions[model_id]
        ok_days = ~np.isnan(resid).any(axis=1)
        metrics[model_id] = {
            "mae": mae(resid[ok_days]) if ok_days.any() else float("nan"),
            "rmse": rmse(resid[ok_days]) if ok_days.any() else float("nan"),
            "days_used": int(ok_days.sum()),
        }

    dm_rows = []
    for i, model_a in enumerate(spec_ids):
        for model_b in spec_ids[i + 1:]:
            resid_a = actual - predictions[model_a]
            resid_b = actual - predictions[model_b]
            both = ~(np.isnan(resid_a).any(axis=1) | np.isnan(resid_b).any(axis=1))
            if both.sum() < 2:
                continue
            for hour in range(HOURS_PER_DAY):
                for phi in (1, 2):
                    res = dm_test(resid_a[both, hour], resid_b[both, hour], phi)
                    dm_rows.append((hour, model_a, model_b, phi, res.t, res.p,
                                    res.n, res.degenerate))

    return BacktestReport(
        model_ids=tuple(spec_ids), dates=dates, timestamps=timestamps,
        actual=actual, day_ahead=day_ahead, predictions=predictions,
        clamped=clamped, coefficients=coefficients, failures=tuple(failures),
        metrics=metrics, dm=tuple(dm_rows))
