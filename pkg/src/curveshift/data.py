"""Market data ingestion, canonical persistence, and a synthetic generator.

Canonical CSV schemas (UTF-8, dot decimals, UTC timestamps):

* prices.csv      - ``timestamp_utc, p_da_eur, p_id_vwap_eur`` (hourly)
* renewables.csv  - ``timestamp_utc, w_forecast_mw, w_actual_mw,
                     s_forecast_mw, s_actual_mw`` (quarter-hourly)
* curves.csv      - ``timestamp_utc, side, price_eur, volume_mw`` with side
                    S or D and volumes cumulative within (timestamp, side)

Cleaning rules applied on ingestion: quarter-hourly renewables are averaged
into hourly values (plain mean of the four quarters), any hour missing a
value in any source is dropped entirely (no interpolation), and prices are
rounded to two decimals (half away from zero).  All timestamps are UTC;
local-time and clock-change handling is deliberately out of scope.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path

import numpy as np
import pandas as pd

from .curves import DEMAND, SUPPLY, CurvePanel, StepCurve, intersect, to_inelastic
from .errors import InvalidConfig, SchemaError, UnitError
from .models import linear_prediction, shift_sizes

DA_PRICE_FLOOR = -500.0
DA_PRICE_CAP = 3000.0
ID_PRICE_BOUND = 9999.0

_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


_CENT = Decimal("0.01")


def _round_one(value: float) -> float:
    # str() recovers the shortest decimal literal, so "30.455" rounds to
    # 30.46 even though the stored double sits just below the half
    return float(Decimal(str(value)).quantize(_CENT, rounding=ROUND_HALF_UP))


def round_price(values):
    """Round to two decimals, halves away from zero (decimal semantics)."""
    if np.isscalar(values) or np.ndim(values) == 0:
        return _round_one(float(values))
    arr = np.asarray(values, dtype=float)
    return np.array([_round_one(v) for v in arr.ravel()]).reshape(arr.shape)


@dataclass(frozen=True)
class HourRecord:
    """One delivery hour with prices, renewables, and its auction curves."""

    timestamp: pd.Timestamp
    p_da: float
    p_id: float
    w_forecast: float
    w_actual: float
    s_forecast: float
    s_actual: float
    supply_curve: StepCurve
    demand_curve: StepCurve

    def __post_init__(self):
        if not (DA_PRICE_FLOOR <= self.p_da <= DA_PRICE_CAP):
            raise UnitError(f"day-ahead price {self.p_da} outside [{DA_PRICE_FLOOR}, {DA_PRICE_CAP}]")
        if not (-ID_PRICE_BOUND <= self.p_id <= ID_PRICE_BOUND):
            raise UnitError(f"intraday price {self.p_id} outside +/-{ID_PRICE_BOUND}")
        for name in ("w_forecast", "w_actual", "s_forecast", "s_actual"):
            if getattr(self, name) < 0:
                raise UnitError(f"{name} must be non-negative")
        if self.supply_curve.side != SUPPLY or self.demand_curve.side != DEMAND:
            raise InvalidConfig("record curves must be one supply and one demand curve")


@dataclass(frozen=True)
class Provenance:
    kind: str  # "real" | "synthetic"
    seed: int | None = None


@dataclass(frozen=True)
class Dataset:
    """Time-ordered, gap-validated collection of hour records."""

    records: tuple[HourRecord, ...]
    provenance: Provenance = field(default_factory=lambda: Provenance("real"))

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        stamps = [r.timestamp for r in self.records]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise InvalidConfig("record timestamps must be strictly increasing")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Dataset(self.records[index], self.provenance)
        return self.records[index]

    def days(self) -> list[tuple[object, tuple[HourRecord, ...]]]:
        """Group records by UTC calendar date, preserving order."""
        groups: dict = {}
        for record in self.records:
            groups.setdefault(record.timestamp.date(), []).append(record)
        return [(day, tuple(records)) for day, records in groups.items()]

    # -- persistence --------------------------------------------------------

    def write(self, out_dir) -> None:
        """Persist as the canonical CSV trio plus a manifest."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stamps = [r.timestamp.strftime(_TS_FORMAT) for r in self.records]

        prices = pd.DataFrame({
            "timestamp_utc": stamps,
            "p_da_eur": [f"{round_price(r.p_da):.2f}" for r in self.records],
            "p_id_vwap_eur": [f"{round_price(r.p_id):.2f}" for r in self.records],
        })
        prices.to_csv(out / "prices.csv", index=False)

        quarter_rows = []
        for record in self.records:
            for minute in (0, 15, 30, 45):
                # fixed micro-MW precision keeps write/ingest cycles stable
                quarter_rows.append({
                    "timestamp_utc": (record.timestamp + pd.Timedelta(minutes=minute)).strftime(_TS_FORMAT),
                    "w_forecast_mw": f"{record.w_forecast:.6f}",
                    "w_actual_mw": f"{record.w_actual:.6f}",
                    "s_forecast_mw": f"{record.s_forecast:.6f}",
                    "s_actual_mw": f"{record.s_actual:.6f}",
                })
        pd.DataFrame(quarter_rows).to_csv(out / "renewables.csv", index=False)

        curve_rows = []
        for record, stamp in zip(self.records, stamps):
            for side, curve in (("S", record.supply_curve), ("D", record.demand_curve)):
                for volume, price in curve.breakpoints:
                    curve_rows.append({
                        "timestamp_utc": stamp,
                        "side": side,
                        "price_eur": f"{price:.2f}",
                        "volume_mw": repr(volume),
                    })
        pd.DataFrame(curve_rows).to_csv(out / "curves.csv", index=False)

        manifest = {
            "provenance": asdict(self.provenance),
            "rows": {"hours": len(self.records),
                     "curve_points": len(curve_rows),
                     "quarter_points": len(quarter_rows)},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    @classmethod
    def load(cls, directory) -> "Dataset":
        """Re-ingest a dataset directory written by :meth:`write`."""
        directory = Path(directory)
        provenance = Provenance("real")
        manifest_path = directory / "manifest.json"
        if manifest_path.exists():
            payload = json.loads(manifest_path.read_text()).get("provenance", {})
            provenance = Provenance(payload.get("kind", "real"), payload.get("seed"))
        dataset = ingest(directory / "curves.csv", directory / "prices.csv",
                         directory / "renewables.csv")
        return cls(dataset.records, provenance)


# ---------------------------------------------------------------------------
# ingestion


def _read_csv(path, columns) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise SchemaError(f"{path}: unreadable CSV ({exc})") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    return frame


def _parse_numeric(frame: pd.DataFrame, column: str, path) -> pd.Series:
    # float() parses exactly (round-trip safe); empty cells mean "missing"
    raw = frame[column].str.strip()
    values = np.empty(len(raw))
    for i, text in enumerate(raw):
        if text == "":
            values[i] = np.nan
            continue
        try:
            values[i] = float(text)
        except ValueError:
            raise SchemaError(f"{path} row {i + 2}: cannot parse {column}={text!r}") from None
    return pd.Series(values, index=frame.index)


def _parse_timestamps(frame: pd.DataFrame, path) -> pd.Series:
    try:
        stamps = pd.to_datetime(frame["timestamp_utc"], utc=True, format="ISO8601")
    except (ValueError, TypeError):
        stamps = pd.to_datetime(frame["timestamp_utc"], utc=True, errors="coerce")
    bad = stamps.isna()
    if bad.any():
        row = int(np.nonzero(bad.to_numpy())[0][0]) + 2
        raise SchemaError(f"{path} row {row}: bad timestamp "
                          f"{frame['timestamp_utc'].iloc[row - 2]!r}")
    return stamps


def ingest(curve_file, price_file, renewables_file) -> Dataset:
    """Build a Dataset from the three canonical CSV files.

    Hours missing a price, a complete set of four renewable quarters, or
    either auction curve are dropped.  Malformed rows raise
    :class:`SchemaError`, negative volumes :class:`UnitError`, both with
    the offending row number.
    """
    prices = _read_csv(price_file, ["timestamp_utc", "p_da_eur", "p_id_vwap_eur"])
    prices_ts = _parse_timestamps(prices, price_file)
    p_da = _parse_numeric(prices, "p_da_eur", price_file)
    p_id = _parse_numeric(prices, "p_id_vwap_eur", price_file)
    if prices_ts.duplicated().any():
        row = int(np.nonzero(prices_ts.duplicated().to_numpy())[0][0]) + 2
        raise SchemaError(f"{price_file} row {row}: duplicate timestamp")
    price_map = {}
    for ts, da, vwap in zip(prices_ts, p_da, p_id):
        if pd.isna(da) or pd.isna(vwap):
            continue  # missing value: the hour is dropped
        price_map[ts] = (round_price(da), round_price(vwap))

    renew = _read_csv(renewables_file,
                      ["timestamp_utc", "w_forecast_mw", "w_actual_mw",
                       "s_forecast_mw", "s_actual_mw"])
    renew_ts = _parse_timestamps(renew, renewables_file)
    renew_cols = {}
    for column in ("w_forecast_mw", "w_actual_mw", "s_forecast_mw", "s_actual_mw"):
        series = _parse_numeric(renew, column, renewables_file)
        negative = series < 0
        if negative.any():
            row = int(np.nonzero(negative.to_numpy())[0][0]) + 2
            raise UnitError(f"{renewables_file} row {row}: negative {column}")
        renew_cols[column] = series
    renew_map = {}
    hour_index = renew_ts.dt.floor("h")
    grouped = pd.DataFrame({"hour": hour_index, **renew_cols}).groupby("hour")
    for hour, block in grouped:
        if len(block) != 4 or block.iloc[:, 1:].isna().any().any():
            continue  # incomplete hour: dropped
        renew_map[hour] = tuple(float(block[c].mean()) for c in renew_cols)

    curves = _read_csv(curve_file, ["timestamp_utc", "side", "price_eur", "volume_mw"])
    curve_ts = _parse_timestamps(curves, curve_file)
    side = curves["side"].str.strip()
    bad_side = ~side.isin(["S", "D"])
    if bad_side.any():
        row = int(np.nonzero(bad_side.to_numpy())[0][0]) + 2
        raise SchemaError(f"{curve_file} row {row}: side must be S or D")
    price_col = _parse_numeric(curves, "price_eur", curve_file)
    volume_col = _parse_numeric(curves, "volume_mw", curve_file)
    negative = volume_col < 0
    if negative.any():
        row = int(np.nonzero(negative.to_numpy())[0][0]) + 2
        raise UnitError(f"{curve_file} row {row}: negative volume_mw")
    incomplete = price_col.isna() | volume_col.isna()

    curve_map: dict = {}
    frame = pd.DataFrame({"ts": curve_ts, "side": side, "price": price_col,
                          "volume": volume_col, "bad": incomplete})
    for (ts, curve_side), block in frame.groupby(["ts", "side"], sort=False):
        if block["bad"].any():
            continue
        block = block.sort_values("volume", kind="stable")
        volumes = block["volume"].to_numpy()
        if np.any(np.diff(volumes) <= 0):
            raise SchemaError(
                f"{curve_file}: volumes not strictly increasing (cumulative) for "
                f"{ts.strftime(_TS_FORMAT)} side {curve_side}")
        try:
            curve = StepCurve(volumes, round_price(block["price"].to_numpy()),
                              SUPPLY if curve_side == "S" else DEMAND)
        except InvalidConfig as exc:
            raise SchemaError(
                f"{curve_file}: invalid {curve_side} curve at "
                f"{ts.strftime(_TS_FORMAT)}: {exc}") from exc
        curve_map.setdefault(ts, {})[curve_side] = curve

    records = []
    for ts in sorted(set(price_map) & set(renew_map) & set(curve_map)):
        pair = curve_map[ts]
        if "S" not in pair or "D" not in pair:
            continue
        da, vwap = price_map[ts]
        wf, wa, sf, sa = renew_map[ts]
        records.append(HourRecord(
            timestamp=ts, p_da=da, p_id=vwap,
            w_forecast=wf, w_actual=wa, s_forecast=sf, s_actual=sa,
            supply_curve=pair["S"], demand_curve=pair["D"]))
    return Dataset(tuple(records), Provenance("real"))


# ---------------------------------------------------------------------------
# synthetic generator


DEFAULT_TRUE_BETA = {
    "naive": (),
    "lm1": (1.2, -0.0004, -0.0021, -0.0002, -0.0027, 0.00005, -0.00002),
    "lm2": (1.24, -0.0004, -0.0021, -0.0002, -0.0027, 0.00005, -0.00002, 0.97),
    "qlm": (2.46, 0.0013, -0.0041, -0.0017, -0.0027, 0.00014, 0.0001, 0.865,
            3.0e-07, 2.0e-07, 5.0e-07, -3.0e-07, 1.2e-08, -8.0e-09, 0.00125),
    "nlm": (0.0, 0.9, 0.45, 1.4, 0.5, -0.03, -0.027),
}


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic market.

    The supply side is a hockey stick: ``band_share`` of the volume sits
    inside a narrow cheap band, the rest climbs an exponential tail toward
    the cap, so the price response to shifts depends strongly on where
    demand lands.  Intraday prices follow the configured generating model
    plus Gaussian noise.
    """

    days: int = 365
    start: str = "2016-01-01"
    true_model: str = "nlm"
    true_beta: tuple | None = None
    noise_sd: float = 1.0
    wind_mae: float = 1000.0
    solar_mae: float = 330.0
    wind_level: float = 9000.0
    wind_swing: float = 4200.0
    solar_peak: float = 11000.0
    demand_base: float = 46000.0
    demand_swing: float = 7000.0
    supply_steps: int = 28
    demand_steps: int = 10
    supply_volume: float = 90000.0
    band_share: float = 0.6
    band_width: float = 30.0
    base_price: float = 16.0
    tail_curvature: float = 5.0

    def __post_init__(self):
        if self.days <= 0:
            raise InvalidConfig("days must be positive")
        if self.true_model not in DEFAULT_TRUE_BETA:
            raise InvalidConfig(f"unknown generating model {self.true_model!r}")
        if self.noise_sd < 0 or self.wind_mae < 0 or self.solar_mae < 0:
            raise InvalidConfig("noise and error scales must be non-negative")
        if self.supply_steps < 4 or self.demand_steps < 3:
            raise InvalidConfig("curves need at least a few steps")
        if not 0.05 <= self.band_share <= 0.95:
            raise InvalidConfig("band_share must lie in [0.05, 0.95]")
        beta = self.resolved_beta()
        expected = len(DEFAULT_TRUE_BETA[self.true_model])
        if len(beta) != expected:
            raise InvalidConfig(
                f"{self.true_model} needs {expected} true coefficients, got {len(beta)}")

    def resolved_beta(self) -> tuple:
        if self.true_beta is not None:
            return tuple(float(b) for b in self.true_beta)
        return DEFAULT_TRUE_BETA[self.true_model]


def _ar1(rng, n, phi, sd=1.0):
    innovations = rng.standard_normal(n) * sd * math.sqrt(1.0 - phi * phi)
    out = np.empty(n)
    state = rng.standard_normal() * sd
    for t in range(n):
        state = phi * state + innovations[t]
        out[t] = state
    return out


def generate_synthetic(config: SynthConfig, seed: int) -> Dataset:
    """Deterministic synthetic dataset driven by the configured model."""
    rng = np.random.default_rng(seed)
    n = config.days * 24
    stamps = pd.date_range(config.start, periods=n, freq="h", tz="UTC")
    hours = np.asarray(stamps.hour)
    doy = np.asarray(stamps.dayofyear)
    weekend = np.asarray(stamps.dayofweek) >= 5

    # renewable processes
    wind_state = _ar1(rng, n, 0.96)
    w_actual = np.maximum(config.wind_level + config.wind_swing * wind_state, 150.0)
    cloud = np.clip(0.62 + 0.30 * _ar1(rng, n, 0.90), 0.12, 1.0)
    elevation = np.sin(np.pi * (hours - 5.5) / 13.0)
    shape = np.where((hours > 5.5) & (hours < 18.5), np.maximum(elevation, 0.0) ** 1.3, 0.0)
    season = 0.62 + 0.38 * np.cos(2.0 * np.pi * (doy - 172) / 365.25)
    s_actual = config.solar_peak * shape * season * cloud

    w_err_draw = rng.standard_normal(n) * config.wind_mae * math.sqrt(math.pi / 2.0)
    w_forecast = np.maximum(w_actual - w_err_draw, 0.0)
    clear_shape = shape * season
    mean_shape = float(np.mean(clear_shape))
    # the 1.1 offsets truncation of errors that would push the forecast below zero
    solar_sd = 1.1 * config.solar_mae * math.sqrt(math.pi / 2.0) / max(mean_shape, 1e-9)
    s_err_draw = rng.standard_normal(n) * clear_shape * solar_sd
    s_forecast = np.maximum(s_actual - s_err_draw, 0.0)

    # demand level with daily/weekly pattern
    diurnal = -np.cos(2.0 * np.pi * (hours - 15) / 24.0)
    demand_noise = _ar1(rng, n, 0.85, sd=1500.0)
    demand_level = (config.demand_base + config.demand_swing * diurnal
                    - 2500.0 * weekend + demand_noise)
    demand_level = np.maximum(demand_level, 12000.0)

    # per-hour curve randomness, drawn up front in a fixed order
    m_band = max(2, int(round(config.supply_steps * 0.55)))
    m_tail = max(2, config.supply_steps - m_band)
    vol_jitter = 1.0 + 0.04 * rng.standard_normal(n)
    base_jitter = rng.standard_normal(n)
    cap_reach = DA_PRICE_CAP * (0.72 + 0.22 * rng.random(n))
    band_width_u = rng.random((n, m_band)) + 0.5
    band_price_u = rng.random((n, m_band))
    tail_width_u = rng.random((n, m_tail)) + 0.5
    dem_width_u = rng.random((n, config.demand_steps - 2)) + 0.5
    dem_price_u = rng.random((n, config.demand_steps - 2))
    noise = rng.standard_normal(n) * config.noise_sd

    supplies, demands, p_da = [], [], np.empty(n)
    for t in range(n):
        total = config.supply_volume * vol_jitter[t]
        band_volume = config.band_share * total
        widths = band_width_u[t] / band_width_u[t].sum() * band_volume
        band_vols = np.cumsum(widths)
        base = config.base_price + 5.0 * diurnal[t] + 2.5 * base_jitter[t]
        band_prices = base + config.band_width * (np.arange(m_band) + 0.7 * band_price_u[t]) / m_band

        tail_volume = total - band_volume
        tw = tail_width_u[t] / tail_width_u[t].sum() * tail_volume
        tail_vols = band_volume + np.cumsum(tw)
        frac = (np.arange(1, m_tail + 1)) / m_tail
        top = base + config.band_width
        k = config.tail_curvature
        tail_prices = top + (cap_reach[t] - top) * (np.expm1(k * frac) / np.expm1(k))

        sup_prices = round_price(np.concatenate([band_prices, tail_prices]))
        sup_prices = np.maximum.accumulate(sup_prices)
        sup_prices = np.clip(sup_prices, DA_PRICE_FLOOR, DA_PRICE_CAP)
        supply = StepCurve(np.concatenate([band_vols, tail_vols]), sup_prices, SUPPLY)

        d_total = 1.18 * demand_level[t]
        firm = 0.86 * d_total
        steps = config.demand_steps - 2
        # ladder stops short of d_total so the floor block keeps its own volume
        dem_widths = dem_width_u[t] / dem_width_u[t].sum() * 0.85 * (d_total - firm)
        dem_vols = np.concatenate([[firm], firm + np.cumsum(dem_widths), [d_total]])
        ladder = 130.0 - 150.0 * (np.arange(steps) + 0.6 * dem_price_u[t]) / steps
        dem_prices = round_price(np.concatenate([[DA_PRICE_CAP], ladder, [DA_PRICE_FLOOR]]))
        dem_prices = np.minimum.accumulate(dem_prices)
        demand = StepCurve(dem_vols, dem_prices, DEMAND)

        supplies.append(supply)
        demands.append(demand)
        p_da[t] = intersect(supply, demand).price

    z = np.column_stack([
        np.maximum(-(w_actual - w_forecast), 0.0),
        w_actual - w_forecast,
        np.maximum(-(s_actual - s_forecast), 0.0),
        s_actual - s_forecast,
        w_actual,
        s_actual,
    ])

    beta = np.asarray(config.resolved_beta(), dtype=float)
    if config.true_model == "naive":
        p_id = p_da + noise
    elif config.true_model in ("lm1", "lm2", "qlm"):
        p_id = linear_prediction(config.true_model, beta, z, p_da) + noise
    else:  # nlm generating process on the transformed curves
        transformed = [to_inelastic(s, d) for s, d in zip(supplies, demands)]
        panel = CurvePanel([s for s, _ in transformed], [d for _, d in transformed])
        prices, _ = panel.prices_for_shift(shift_sizes(beta, z))
        p_id = prices + noise
    p_id = np.clip(p_id, -ID_PRICE_BOUND, ID_PRICE_BOUND)

    records = [
        HourRecord(
            timestamp=stamps[t], p_da=float(p_da[t]), p_id=float(p_id[t]),
            w_forecast=float(w_forecast[t]), w_actual=float(w_actual[t]),
            s_forecast=float(s_forecast[t]), s_actual=float(s_actual[t]),
            supply_curve=supplies[t], demand_curve=demands[t])
        for t in range(n)
    ]
    return Dataset(tuple(records), Provenance("synthetic", seed))
