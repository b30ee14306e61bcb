"""The intraday price model family: fit/predict pairs over hourly records.

Model ids and coefficient layouts (indices follow one global numbering so
fits can be compared side by side):

* ``naive``  - day-ahead price carried over, no coefficients.
* ``lm1``    - beta0 + beta[1:6].Z + p_da (unit day-ahead weight), 7 coefs.
* ``lm2``    - beta0 + beta[1:6].Z + beta7*p_da, 8 coefs.
* ``qlm``    - lm2 plus beta[8:13].(Z*Z) + beta14*p_da^2, 15 coefs.
* ``nlm``    - transformed supply evaluated at demand minus the shift
               beta15 + beta[16:21].Z, 7 coefs.
* ``cm``     - lm2 linear part plus beta22 times the nlm price, 16 coefs
               (beta0:7 and beta15:22).
* ``mlq``, ``mnq``, ``mcq`` - equal-weight mixtures of (lm2, qlm),
               (qlm, nlm) and (cm, qlm).

Linear predictions accumulate their terms left to right in a fixed order,
so the nesting identities (lm1 = lm2 with unit day-ahead weight, lm2 = qlm
with zero quadratics, lm2 = cm with zero curve weight, nlm = cm with zero
linear part) hold exactly, not just to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .curves import CurvePanel, InelasticDemand, ShiftResult, StepCurve, to_inelastic, shift_supply
from .errors import (
    DimensionMismatch,
    InsufficientData,
    InvalidConfig,
    MissingConstituent,
    RankDeficient,
)
from .estimation import NlsOptions, nls_fit, ols_fit
from .features import FeatureVector, build_features, feature_matrix

MODEL_IDS = ("naive", "lm1", "lm2", "qlm", "nlm", "cm", "mlq", "mnq", "mcq")
MIXTURES = {"mlq": ("lm2", "qlm"), "mnq": ("qlm", "nlm"), "mcq": ("cm", "qlm")}
BETA_LENGTH = {"naive": 0, "lm1": 7, "lm2": 8, "qlm": 15, "nlm": 7, "cm": 16}
CURVE_BASED = ("nlm", "cm", "mnq", "mcq")


@dataclass(frozen=True)
class ModelSpec:
    """A model id plus, for mixtures, its weighted constituents."""

    model_id: str
    components: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.model_id not in MODEL_IDS:
            raise InvalidConfig(f"unknown model id {self.model_id!r}")
        if self.model_id in MIXTURES:
            expected = MIXTURES[self.model_id]
            ids = tuple(cid for cid, _ in self.components)
            if ids != expected:
                raise InvalidConfig(f"{self.model_id} mixes {expected}, got {ids}")
            weights = [w for _, w in self.components]
            if abs(sum(weights) - 1.0) > 1e-12:
                raise InvalidConfig("mixture weights must sum to 1")
            if any(cid in MIXTURES for cid, _ in self.components):
                raise InvalidConfig("mixture constituents must be plain models")
        elif self.components:
            raise InvalidConfig(f"{self.model_id} takes no components")

    @classmethod
    def for_id(cls, model_id: str) -> "ModelSpec":
        if model_id in MIXTURES:
            a, b = MIXTURES[model_id]
            return cls(model_id, ((a, 0.5), (b, 0.5)))
        return cls(model_id)


@dataclass(frozen=True)
class ModelFit:
    """Estimated coefficients plus fitting metadata for one model."""

    model_id: str
    beta: np.ndarray
    window: tuple[str, str] | None = None
    meta: dict = field(default_factory=dict)
    constituents: dict | None = None

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float, copy=True)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        expected = BETA_LENGTH.get(self.model_id)
        if expected is not None and beta.size != expected:
            raise DimensionMismatch(
                f"{self.model_id} expects {expected} coefficients, got {beta.size}")

    def to_dict(self) -> dict:
        out = {
            "model_id": self.model_id,
            "beta": [float(b) for b in self.beta],
            "window": list(self.window) if self.window else None,
            "meta": self.meta,
        }
        if self.constituents is not None:
            out["constituents"] = {k: v.to_dict() for k, v in self.constituents.items()}
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelFit":
        constituents = payload.get("constituents")
        return cls(
            model_id=payload["model_id"],
            beta=np.asarray(payload["beta"], dtype=float),
            window=tuple(payload["window"]) if payload.get("window") else None,
            meta=dict(payload.get("meta", {})),
            constituents={k: cls.from_dict(v) for k, v in constituents.items()}
            if constituents else None,
        )


def _chain(intercept: float, coefs: Sequence[float], cols: Sequence) -> np.ndarray:
    """intercept + sum(coef * col) accumulated strictly left to right."""
    acc = intercept + np.zeros_like(np.asarray(cols[0], dtype=float))
    for b, col in zip(coefs, cols):
        acc = acc + b * col
    return acc


def _columns(z: np.ndarray) -> list:
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        return [z[i] for i in range(z.shape[0])]
    return [z[:, i] for i in range(z.shape[1])]


def shift_sizes(beta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Horizontal curve shift beta[0] + beta[1:].Z, rowwise for matrices."""
    beta = np.asarray(beta, dtype=float)
    if beta.size != 7:
        raise DimensionMismatch(f"shift coefficients must have length 7, got {beta.size}")
    return _chain(beta[0], beta[1:], _columns(z))


def linear_prediction(model_id: str, beta: np.ndarray, z: np.ndarray,
                      p_da: np.ndarray) -> np.ndarray:
    """Vectorized lm1/lm2/qlm prediction over feature rows."""
    beta = np.asarray(beta, dtype=float)
    if beta.size != BETA_LENGTH[model_id]:
        raise DimensionMismatch(
            f"{model_id} expects {BETA_LENGTH[model_id]} coefficients, got {beta.size}")
    cols = _columns(z)
    p_da = np.asarray(p_da, dtype=float)
    if model_id == "lm1":
        beta = np.append(beta, 1.0)
        model_id = "lm2"
    if model_id == "lm2":
        return _chain(beta[0], beta[1:], cols + [p_da])
    if model_id == "qlm":
        sq = [c * c for c in cols]
        return _chain(beta[0], beta[1:], cols + [p_da] + sq + [p_da * p_da])
    raise InvalidConfig(f"{model_id} is not a linear model")


# ---------------------------------------------------------------------------
# scalar predictors


def predict_naive(record) -> float:
    return float(record.p_da)


def predict_lm1(fit: ModelFit, z: FeatureVector, p_da: float) -> float:
    return float(linear_prediction("lm1", fit.beta, z.as_array(), p_da))


def predict_lm2(fit: ModelFit, z: FeatureVector, p_da: float) -> float:
    return float(linear_prediction("lm2", fit.beta, z.as_array(), p_da))


def predict_qlm(fit: ModelFit, z: FeatureVector, p_da: float) -> float:
    return float(linear_prediction("qlm", fit.beta, z.as_array(), p_da))


def predict_nlm(fit: ModelFit, z: FeatureVector, supply: StepCurve,
                demand: InelasticDemand) -> ShiftResult:
    """Transformed supply price at demand minus the feature-driven shift."""
    shift = float(shift_sizes(fit.beta, z.as_array()))
    return shift_supply(supply, demand, shift)


def predict_cm(fit: ModelFit, z: FeatureVector, p_da: float, supply: StepCurve,
               demand: InelasticDemand) -> ShiftResult:
    beta = fit.beta
    nlm_part = shift_supply(supply, demand, float(shift_sizes(beta[8:15], z.as_array())))
    linear = _chain(beta[0], beta[1:8], list(z.as_array()) + [p_da])
    price = float(linear + beta[15] * nlm_part.price)
    return ShiftResult(price, nlm_part.clamped)


def predict_mixture(spec: ModelSpec | str, fits: Mapping[str, ModelFit],
                    record) -> ShiftResult:
    """Equal-weight average of the constituent predictions for one record."""
    if isinstance(spec, str):
        spec = ModelSpec.for_id(spec)
    total = 0.0
    clamped = False
    for cid, weight in spec.components:
        if cid not in fits:
            raise MissingConstituent(f"{spec.model_id} needs a fitted {cid}")
        part = predict_record(fits[cid], record)
        total = total + weight * part.price
        clamped = clamped or part.clamped
    return ShiftResult(float(total), clamped)


def predict_record(fit: ModelFit, record) -> ShiftResult:
    """Dispatch a single-record prediction for any model id."""
    z = build_features(record)
    if fit.model_id == "naive":
        return ShiftResult(predict_naive(record), False)
    if fit.model_id in ("lm1", "lm2", "qlm"):
        price = float(linear_prediction(fit.model_id, fit.beta, z.as_array(), record.p_da))
        return ShiftResult(price, False)
    if fit.model_id in ("nlm", "cm"):
        supply, demand = to_inelastic(record.supply_curve, record.demand_curve)
        if fit.model_id == "nlm":
            return predict_nlm(fit, z, supply, demand)
        return predict_cm(fit, z, record.p_da, supply, demand)
    if fit.model_id in MIXTURES:
        if not fit.constituents:
            raise MissingConstituent(f"{fit.model_id} fit has no constituents")
        return predict_mixture(ModelSpec.for_id(fit.model_id), fit.constituents, record)
    raise InvalidConfig(f"unknown model id {fit.model_id!r}")


# ---------------------------------------------------------------------------
# vectorized prediction over record sequences


def transform_records(records) -> CurvePanel:
    """Transform every record's wholesale curves and stack them."""
    supplies, demands = [], []
    for record in records:
        sup, dem = to_inelastic(record.supply_curve, record.demand_curve)
        supplies.append(sup)
        demands.append(dem)
    return CurvePanel(supplies, demands)


def _arrays(records) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z = feature_matrix(records)
    p_da = np.array([r.p_da for r in records], dtype=float)
    p_id = np.array([r.p_id for r in records], dtype=float)
    return z, p_da, p_id


def predict_dataset(fit: ModelFit, records, panel: CurvePanel | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Predictions and clamp flags for every record, in order."""
    records = list(records)
    z, p_da, _ = _arrays(records)
    return _predict_arrays(fit, records, z, p_da, panel)


def _predict_arrays(fit: ModelFit, records, z, p_da, panel):
    n = len(records)
    no_clamp = np.zeros(n, dtype=bool)
    if fit.model_id == "naive":
        return p_da.copy(), no_clamp
    if fit.model_id in ("lm1", "lm2", "qlm"):
        return linear_prediction(fit.model_id, fit.beta, z, p_da), no_clamp
    if fit.model_id in ("nlm", "cm"):
        if panel is None:
            panel = transform_records(records)
        if fit.model_id == "nlm":
            shifts = shift_sizes(fit.beta, z)
            return panel.prices_for_shift(shifts)
        curve_prices, clamped = panel.prices_for_shift(shift_sizes(fit.beta[8:15], z))
        linear = _chain(fit.beta[0], fit.beta[1:8], _columns(z) + [p_da])
        return linear + fit.beta[15] * curve_prices, clamped
    if fit.model_id in MIXTURES:
        if not fit.constituents:
            raise MissingConstituent(f"{fit.model_id} fit has no constituents")
        total = np.zeros(n)
        clamped = no_clamp
        for cid, weight in ModelSpec.for_id(fit.model_id).components:
            if cid not in fit.constituents:
                raise MissingConstituent(f"{fit.model_id} needs a fitted {cid}")
            part, part_clamp = _predict_arrays(fit.constituents[cid], records, z, p_da, panel)
            total = total + weight * part
            clamped = clamped | part_clamp
        return total, clamped
    raise InvalidConfig(f"unknown model id {fit.model_id!r}")


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitOptions:
    """Knobs for the non-linear fits; defaults favor accuracy over speed."""

    nls: NlsOptions = NlsOptions()
    projection_iters: int = 300
    polish_rounds: int = 2
    sweep_window: int = 3
    cm_profile_rounds: int = 2


def _design(model_id: str, z: np.ndarray, p_da: np.ndarray) -> np.ndarray:
    ones = np.ones(z.shape[0])
    if model_id == "lm1":
        return np.column_stack([ones, z])
    if model_id == "lm2":
        return np.column_stack([ones, z, p_da])
    if model_id == "qlm":
        return np.column_stack([ones, z, p_da, z * z, p_da * p_da])
    raise InvalidConfig(f"{model_id} has no linear design")


def fit_model(spec: ModelSpec | str, dataset, options: FitOptions | None = None,
              panel: CurvePanel | None = None) -> ModelFit:
    """Estimate one model on a training dataset.

    ``panel`` may carry pre-transformed curves aligned with the dataset to
    avoid re-running the inelastic transformation in rolling studies.
    """
    if isinstance(spec, str):
        spec = ModelSpec.for_id(spec)
    options = options or FitOptions()
    records = list(dataset)
    if not records:
        raise InsufficientData("cannot fit on an empty dataset")
    z, p_da, p_id = _arrays(records)
    window = (records[0].timestamp.isoformat(), records[-1].timestamp.isoformat())

    if spec.model_id == "naive":
        return ModelFit("naive", np.empty(0), window, {"n_obs": len(records)})

    if spec.model_id in ("lm1", "lm2", "qlm"):
        target = p_id - p_da if spec.model_id == "lm1" else p_id
        res = ols_fit(_design(spec.model_id, z, p_da), target)
        meta = {
            "n_obs": res.n_obs,
            "residual_sum_squares": res.residual_sum_squares,
            "se": [float(s) for s in res.se],
        }
        return ModelFit(spec.model_id, res.beta, window, meta)

    if spec.model_id in ("nlm", "cm"):
        if panel is None:
            panel = transform_records(records)
        if spec.model_id == "nlm":
            beta, meta = _fit_shift_model(panel, z, p_id, options)
            return ModelFit("nlm", beta, window, meta)
        lm2_fit = fit_model("lm2", dataset, options)
        nlm_fit = fit_model("nlm", dataset, options, panel)
        beta, meta = _fit_cm(panel, z, p_da, p_id, lm2_fit.beta, nlm_fit.beta, options)
        return ModelFit("cm", beta, window, meta)

    if spec.model_id in MIXTURES:
        constituents = {
            cid: fit_model(cid, dataset, options, panel) for cid, _ in spec.components
        }
        return ModelFit(spec.model_id, np.empty(0), window,
                        {"n_obs": len(records)}, constituents)

    raise InvalidConfig(f"unknown model id {spec.model_id!r}")


def _shift_objective(panel: CurvePanel, z: np.ndarray, p_id: np.ndarray):
    cols = _columns(z)

    def objective(beta: np.ndarray) -> float:
        shifts = _chain(beta[0], beta[1:], cols)
        prices, _ = panel.prices_for_shift(shifts)
        resid = p_id - prices
        return float(resid @ resid)

    return objective


def _step_interval_targets(panel: CurvePanel, p_id: np.ndarray
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Per record, the shift interval that lands on the step nearest p_id."""
    from .curves import _row_searchsorted

    n = len(panel)
    rows = np.arange(n)
    idx = _row_searchsorted(panel.prices, p_id)
    idx = np.minimum(idx, panel.lengths - 1)
    below = np.maximum(idx - 1, 0)
    pick_below = (np.abs(panel.prices[rows, below] - p_id)
                  < np.abs(panel.prices[rows, idx] - p_id))
    j = np.where(pick_below, below, idx)
    hi_vol = panel.volumes[rows, j]
    lo_vol = np.where(j > 0, panel.volumes[rows, np.maximum(j - 1, 0)], 0.0)
    # evaluation point x in (lo_vol, hi_vol] means shift in [D - hi, D - lo)
    return panel.demand - hi_vol, panel.demand - lo_vol


def _project_shift_fit(design: np.ndarray, s_lo: np.ndarray, s_hi: np.ndarray,
                       iters: int) -> np.ndarray:
    """Drive the fitted shifts into the per-record target intervals.

    Weighted least squares against the interval-clipped shifts: records
    already inside keep a small anchor weight, violated records full
    weight, which converges far faster than plain alternating projections
    when the rows are nearly parallel.  With exact (noise-free) targets
    the result lands near a zero-residual region; with noisy targets it is
    simply a strong warm start.
    """
    width = s_hi - s_lo
    inset = np.minimum(1e-6, 0.05 * width)
    lo, hi = s_lo + inset, s_hi - inset
    k = design.shape[1]
    beta = np.linalg.pinv(design) @ (0.5 * (lo + hi))
    ridge = 1e-12 * np.eye(k)
    for _ in range(iters):
        fitted = design @ beta
        if np.all((fitted >= lo) & (fitted <= hi)):
            break
        clipped = np.clip(fitted, lo, hi)
        weights = np.where(fitted == clipped, 0.05, 1.0)
        weighted = weights[:, None] * design
        gram = design.T @ weighted + ridge
        try:
            beta = np.linalg.solve(gram, (clipped * weights) @ design)
        except np.linalg.LinAlgError:
            break
    return beta


def _walk_events(panel, p_id, x, j, w, order, events_u, events_t, events_b, upward):
    """Incrementally track the objective along one sweep direction.

    Returns (best_obj, best_u) over plateau midpoints, given the state at
    u = 0 encoded in the step indices ``j``.
    """
    n, m = panel.volumes.shape
    lengths = panel.lengths

    def price_of(t, jj):
        if jj < 0:
            return panel.floor[t]
        if jj >= lengths[t]:
            return panel.cap[t]
        return panel.prices[t, jj]

    prices = np.where(j >= lengths, panel.cap, panel.prices[np.arange(n), np.minimum(j, m - 1)])
    prices = np.where(x < 0, panel.floor, prices)
    resid = p_id - prices
    obj = float(resid @ resid)
    j_state = np.where(x < 0, -1, j)  # floor-clamped records sit below index 0

    best_obj, best_u = obj, 0.0
    prev_u = 0.0
    for e in order:
        u, t, b = events_u[e], events_t[e], events_b[e]
        mid = 0.5 * (prev_u + u)
        if obj < best_obj - 1e-12 and mid != 0.0:
            best_obj, best_u = obj, mid
        moving_down = (w[t] > 0) == upward  # x decreasing along the walk
        new_j = b if moving_down else b + 1
        old_price = price_of(t, j_state[t])
        new_price = price_of(t, new_j)
        obj += (p_id[t] - new_price) ** 2 - (p_id[t] - old_price) ** 2
        j_state[t] = new_j
        prev_u = u
    return best_obj, best_u


def _sweep_coordinate(panel: CurvePanel, design: np.ndarray, p_id: np.ndarray,
                      beta: np.ndarray, coord: int, window: int):
    """Candidate update of one coefficient from an exact staircase sweep."""
    from .curves import _row_searchsorted

    w = design[:, coord]
    shifts = design @ beta
    x = panel.demand - shifts
    n, m = panel.volumes.shape
    j = _row_searchsorted(panel.volumes, x)

    events_u, events_t, events_b = [], [], []
    for t in range(n):
        if w[t] == 0.0:
            continue
        lo_b = j[t] - window
        hi_b = min(j[t] + window, int(panel.lengths[t]) - 1)
        for b in range(max(lo_b, 0), hi_b + 1):
            u = (x[t] - panel.volumes[t, b]) / w[t]
            if abs(u) > 1e-15 and np.isfinite(u):
                events_u.append(u)
                events_t.append(t)
                events_b.append(b)
        if lo_b < 0:  # crossing below the curve start clamps to the floor
            u = x[t] / w[t]
            if abs(u) > 1e-15:
                events_u.append(u)
                events_t.append(t)
                events_b.append(-1)
    if not events_u:
        return beta, False

    events_u = np.asarray(events_u)
    events_t = np.asarray(events_t, dtype=np.int64)
    events_b = np.asarray(events_b, dtype=np.int64)

    right = np.nonzero(events_u > 0)[0]
    right = right[np.argsort(events_u[right], kind="stable")]
    left = np.nonzero(events_u < 0)[0]
    left = left[np.argsort(-events_u[left], kind="stable")]

    best_right = _walk_events(panel, p_id, x, j, w, right, events_u, events_t, events_b, True)
    best_left = _walk_events(panel, p_id, x, j, w, left, -events_u, events_t, events_b, False)
    (obj_r, u_r), (obj_l, u_l) = best_right, best_left
    if obj_l < obj_r:
        candidate_u = -u_l
    else:
        candidate_u = u_r
    if candidate_u == 0.0:
        return beta, False
    updated = beta.copy()
    updated[coord] += candidate_u
    return updated, True


def _max_margin_start(design: np.ndarray, s_lo: np.ndarray, s_hi: np.ndarray
                      ) -> np.ndarray | None:
    """Coefficients maximizing the minimum distance to the interval edges.

    Solved as a small linear program; with exact (noise-free) intervals the
    optimum sits strictly inside every record's step, which is already a
    zero-residual fit.  Returns None when the solver is unavailable or
    fails.
    """
    try:
        from scipy.optimize import linprog
    except ImportError:  # pragma: no cover - scipy is a declared dependency
        return None
    n, k = design.shape
    a_ub = np.vstack([np.column_stack([-design, np.ones(n)]),
                      np.column_stack([design, np.ones(n)])])
    b_ub = np.concatenate([-s_lo, s_hi])
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    result = linprog(cost, A_ub=a_ub, b_ub=b_ub,
                     bounds=[(None, None)] * (k + 1), method="highs")
    if not result.success or not np.all(np.isfinite(result.x)):
        return None
    return result.x[:k]


def _shift_coordinate_scales(z: np.ndarray, s_lo: np.ndarray, s_hi: np.ndarray
                             ) -> tuple:
    """Natural simplex edges: a fraction of the median step width, divided
    by the size of each feature so every coordinate moves shifts comparably."""
    width = float(np.median(s_hi - s_lo))
    feature_scale = np.maximum(np.std(z, axis=0), 1e-9)
    return tuple(np.concatenate([[0.25 * width], 0.25 * width / (6.0 * feature_scale)]))


def _fit_shift_model(panel: CurvePanel, z: np.ndarray, p_id: np.ndarray,
                     options: FitOptions) -> tuple[np.ndarray, dict]:
    """Shift-coefficient estimation: interval warm starts, simplex, sweeps."""
    design = np.column_stack([np.ones(len(panel)), z])
    objective = _shift_objective(panel, z, p_id)

    s_lo, s_hi = _step_interval_targets(panel, p_id)
    width = s_hi - s_lo
    inset = np.minimum(1e-6, 0.05 * width)
    starts = []
    lp_start = _max_margin_start(design, s_lo + inset, s_hi - inset)
    if lp_start is not None:
        starts.append(lp_start)
    anchored = _project_shift_fit(design, s_lo, s_hi, options.projection_iters)
    if np.all(np.isfinite(anchored)):
        starts.append(anchored)
    if not starts:
        starts.append(np.zeros(design.shape[1]))
    start = min(starts, key=objective)

    nls_opts = options.nls
    if nls_opts.init_scale is None:
        nls_opts = replace(nls_opts, init_scale=_shift_coordinate_scales(z, s_lo, s_hi))

    result = nls_fit(objective, start, nls_opts)
    best_beta, best_obj = result.beta, result.objective
    iterations = result.iterations
    converged = result.converged

    for _ in range(options.polish_rounds):
        if best_obj == 0.0:
            break
        improved = False
        for coord in range(design.shape[1]):
            candidate, moved = _sweep_coordinate(panel, design, p_id, best_beta,
                                                 coord, options.sweep_window)
            if moved:
                cand_obj = objective(candidate)
                if cand_obj < best_obj - 1e-12:
                    best_beta, best_obj = candidate, cand_obj
                    improved = True
        restart = nls_fit(objective, best_beta, nls_opts)
        iterations += restart.iterations
        converged = restart.converged
        if restart.objective < best_obj - 1e-12:
            best_beta, best_obj = restart.beta, restart.objective
            improved = True
        if not improved:
            break

    meta = {"objective": float(best_obj), "converged": bool(converged),
            "iterations": int(iterations), "n_obs": int(len(panel))}
    return best_beta, meta


def _fit_cm(panel: CurvePanel, z: np.ndarray, p_da: np.ndarray, p_id: np.ndarray,
            lm2_beta: np.ndarray, nlm_beta: np.ndarray,
            options: FitOptions) -> tuple[np.ndarray, dict]:
    """Joint 16-coefficient fit, warm started from lm2 and nlm.

    Given the curve coefficients the model is linear in everything else,
    so the linear block and the curve weight are profiled out exactly by
    OLS between rounds of curve-coefficient refinement; a joint simplex
    pass finishes the estimation.
    """
    cols = _columns(z)
    curve_design = np.column_stack([np.ones(len(panel)), z])
    curve_beta = np.array(nlm_beta, dtype=float, copy=True)
    lin_beta = np.array(lm2_beta, dtype=float, copy=True)
    weight = 0.5

    def full_beta():
        return np.concatenate([lin_beta, curve_beta, [weight]])

    def objective(beta: np.ndarray) -> float:
        shifts = _chain(beta[8], beta[9:15], cols)
        prices, _ = panel.prices_for_shift(shifts)
        linear = _chain(beta[0], beta[1:8], cols + [p_da])
        resid = p_id - (linear + beta[15] * prices)
        return float(resid @ resid)

    iterations = 0
    for _ in range(options.cm_profile_rounds):
        prices, _ = panel.prices_for_shift(curve_design @ curve_beta)
        profile = np.column_stack([np.ones(len(panel)), z, p_da, prices])
        try:
            res = ols_fit(profile, p_id)
            lin_beta, weight = res.beta[:8], float(res.beta[8])
        except RankDeficient:
            pass
        if abs(weight) > 1e-9:
            linear = _chain(lin_beta[0], lin_beta[1:8], cols + [p_da])
            target = (p_id - linear) / weight
            for coord in range(curve_design.shape[1]):
                candidate, moved = _sweep_coordinate(panel, curve_design, target,
                                                     curve_beta, coord,
                                                     options.sweep_window)
                if moved:
                    def curve_obj(b):
                        pr, _ = panel.prices_for_shift(curve_design @ b)
                        r = target - pr
                        return float(r @ r)
                    if curve_obj(candidate) < curve_obj(curve_beta) - 1e-12:
                        curve_beta = candidate

    nls_opts = options.nls
    if nls_opts.init_scale is None:
        s_lo, s_hi = _step_interval_targets(panel, p_id)
        curve_scales = _shift_coordinate_scales(z, s_lo, s_hi)
        feature_scale = np.maximum(np.std(z, axis=0), 1e-9)
        linear_scales = np.concatenate([[0.5], 0.5 / feature_scale, [0.02]])
        nls_opts = replace(nls_opts, init_scale=tuple(
            np.concatenate([linear_scales, curve_scales, [0.05]])))

    result = nls_fit(objective, full_beta(), nls_opts)
    iterations += result.iterations
    best_beta, best_obj = result.beta, result.objective

    # final exact re-profile of the linear block
    prices, _ = panel.prices_for_shift(_chain(best_beta[8], best_beta[9:15], cols))
    profile = np.column_stack([np.ones(len(panel)), z, p_da, prices])
    try:
        res = ols_fit(profile, p_id)
        candidate = np.concatenate([res.beta[:8], best_beta[8:15], [res.beta[8]]])
        if objective(candidate) <= best_obj:
            best_beta = candidate
            best_obj = objective(candidate)
    except RankDeficient:
        pass

    meta = {"objective": float(best_obj), "converged": bool(result.converged),
            "iterations": int(iterations), "n_obs": int(len(panel))}
    return best_beta, meta
