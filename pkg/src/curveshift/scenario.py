"""Capacity-expansion scenario study on fitted linear and curve-shift models.

For each (technology, gamma, rho) cell the feature vector is rescaled as if
wind and/or solar capacity had grown, predictions are recomputed, and the
dispersion of prices (SD) and the tails of the true-minus-modeled price
differences (order-statistic quantiles with linear interpolation) are
reported relative to the unscaled baseline of the same model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .curves import CurvePanel, InelasticDemand, StepCurve
from .errors import InvalidConfig
from .features import FeatureVector, ScaleConfig, scale_matrix, sd_scaling_factor
from .models import ModelFit, ShiftResult, _arrays, linear_prediction, predict_nlm, shift_sizes, transform_records

__all__ = ["ScenarioGrid", "ScenarioCell", "ScenarioReport", "ShiftScenario",
           "run_scenario", "simulate_shift_comparison", "sd_scaling_factor",
           "TECHNOLOGIES"]

TECHNOLOGIES = ("wind", "solar", "wind+solar")


@dataclass(frozen=True)
class ScenarioGrid:
    gammas: tuple[float, ...] = (0.1, 1.0, 5.0)
    rhos: tuple[float, ...] = (0.0, 0.5, 0.8)
    technologies: tuple[str, ...] = TECHNOLOGIES
    quantiles: tuple[float, ...] = (0.001, 0.999)

    def __post_init__(self):
        if any(g < 0 for g in self.gammas):
            raise InvalidConfig("gamma must be non-negative")
        if any(not -1.0 <= r <= 1.0 for r in self.rhos):
            raise InvalidConfig("rho must lie in [-1, 1]")
        if any(not 0.0 < q < 1.0 for q in self.quantiles):
            raise InvalidConfig("quantiles must lie in (0, 1)")
        unknown = [t for t in self.technologies if t not in TECHNOLOGIES]
        if unknown:
            raise InvalidConfig(f"unknown technologies {unknown}")


@dataclass(frozen=True)
class ScenarioCell:
    model_id: str
    technology: str
    gamma: float
    rho: float
    metric: str
    value: float
    relative: float
    baseline: float
    clamp_rate: float


@dataclass(frozen=True)
class ScenarioReport:
    cells: tuple[ScenarioCell, ...]
    baselines: dict = field(default_factory=dict)  # (model_id, metric) -> value

    def to_frame(self) -> pd.DataFrame:
        rows = [{
            "model_id": c.model_id, "technology": c.technology,
            "gamma": c.gamma, "rho": c.rho, "metric": c.metric,
            "relative_value": c.relative, "baseline_value": c.baseline,
            "clamp_rate": c.clamp_rate,
        } for c in self.cells]
        return pd.DataFrame(rows, columns=["model_id", "technology", "gamma", "rho",
                                           "metric", "relative_value", "baseline_value",
                                           "clamp_rate"])


def _metric_label(quantile: float) -> str:
    return f"q{100.0 * quantile:g}%"


def _scale_config(technology: str, gamma: float, rho: float) -> ScaleConfig:
    wind = technology in ("wind", "wind+solar")
    solar = technology in ("solar", "wind+solar")
    return ScaleConfig(
        gamma_w=gamma if wind else 0.0,
        rho_w=rho if wind else 0.0,
        gamma_s=gamma if solar else 0.0,
        rho_s=rho if solar else 0.0,
    )


def _cell_metrics(fit: ModelFit, z: np.ndarray, p_da: np.ndarray, p_id: np.ndarray,
                  panel: CurvePanel | None, quantiles) -> tuple[dict, float]:
    if fit.model_id == "lm2":
        pred = linear_prediction("lm2", fit.beta, z, p_da)
        clamp_rate = 0.0
    elif fit.model_id == "nlm":
        pred, clamped = panel.prices_for_shift(shift_sizes(fit.beta, z))
        clamp_rate = float(np.mean(clamped))
    else:
        raise InvalidConfig("scenario study compares lm2 against nlm fits")
    diff = p_id - pred
    out = {"sd": float(np.std(pred, ddof=1))}
    for q in quantiles:
        out[_metric_label(q)] = float(np.quantile(diff, q))
    return out, clamp_rate


def run_scenario(dataset, fit_lm2: ModelFit, fit_nlm: ModelFit,
                 grid: ScenarioGrid | None = None,
                 panel: CurvePanel | None = None) -> ScenarioReport:
    """Evaluate both fitted models over the scaled-feature grid.

    Every cell is normalized by the same model's gamma=0, rho=0 baseline,
    so the baseline cell reports a relative value of exactly 1.
    """
    grid = grid or ScenarioGrid()
    if fit_lm2.model_id != "lm2" or fit_nlm.model_id != "nlm":
        raise InvalidConfig("run_scenario expects a fitted lm2 and a fitted nlm")
    records = list(dataset)
    z, p_da, p_id = _arrays(records)
    if panel is None:
        panel = transform_records(records)

    fits = {"lm2": fit_lm2, "nlm": fit_nlm}
    baselines = {}
    for model_id, fit in fits.items():
        metrics, _ = _cell_metrics(fit, z, p_da, p_id, panel, grid.quantiles)
        for metric, value in metrics.items():
            baselines[(model_id, metric)] = value

    cells = []
    for model_id, fit in fits.items():
        for technology in grid.technologies:
            for gamma in grid.gammas:
                for rho in grid.rhos:
                    cfg = _scale_config(technology, gamma, rho)
                    scaled = scale_matrix(z, cfg)
                    metrics, clamp_rate = _cell_metrics(fit, scaled, p_da, p_id,
                                                        panel, grid.quantiles)
                    for metric, value in metrics.items():
                        base = baselines[(model_id, metric)]
                        cells.append(ScenarioCell(
                            model_id=model_id, technology=technology,
                            gamma=gamma, rho=rho, metric=metric, value=value,
                            relative=value / base if base != 0 else float("nan"),
                            baseline=base, clamp_rate=clamp_rate))
    return ScenarioReport(tuple(cells), baselines)


@dataclass(frozen=True)
class ShiftScenario:
    z: FeatureVector
    shift_mw: float
    price: float
    clamped: bool


def simulate_shift_comparison(supply: StepCurve, demand: InelasticDemand,
                              z_scenarios, fit_nlm: ModelFit) -> list[ShiftScenario]:
    """Prices of hypothetical feature vectors on one transformed market.

    One entry per scenario, matching element-wise calls of the curve-shift
    predictor; useful for contrasting equally sized positive and negative
    forecast errors at different demand levels.
    """
    out = []
    for z in z_scenarios:
        result: ShiftResult = predict_nlm(fit_nlm, z, supply, demand)
        shift = float(shift_sizes(fit_nlm.beta, z.as_array()))
        out.append(ShiftScenario(z=z, shift_mw=shift, price=result.price,
                                 clamped=result.clamped))
    return out
