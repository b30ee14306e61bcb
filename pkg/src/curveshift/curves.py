"""Step curves, market clearing, and the inelastic-demand transformation.

Auction curves are monotone step functions between cumulative volume (MW)
and price (EUR/MWh).  A curve with breakpoints (v_1, p_1), ..., (v_n, p_n)
is read cumulatively: the first v_1 MW trade at p_1, volume in (v_1, v_2]
at p_2, and so on, so the forward evaluation at volume x returns the price
of the first breakpoint with v_i >= x.  Geometrically the curve is a
staircase starting at (0, p_1); supply staircases rise, demand staircases
fall.

Inverse (volume at price) conventions:

* supply: total volume offered at prices <= z (sellers at their limit sell);
* demand: total volume bid at prices >= z.

The inelastic-demand transformation moves all demand elasticity onto the
supply side.  Bids withdraw from the market once the price rises strictly
above their limit, so the transformation subtracts the volume bid at
prices *strictly greater* than z; bids at the price cap are firm and never
convert to supply.  Evaluating the transformed supply at the total demand
volume then reproduces the clearing price of the original curve pair,
including the case where the marginal bid block is only partially filled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidConfig,
    MonotonicityViolation,
    NoIntersection,
)
from .features import FEATURE_NAMES, FeatureVector

PRICE_FLOOR = -500.0
PRICE_CAP = 3000.0

SUPPLY = "supply"
DEMAND = "demand"

_TICK_TOL = 1e-6  # tolerance for the two-decimal price grid check


def _check_quantized(prices: np.ndarray):
    cents = prices * 100.0
    if np.max(np.abs(cents - np.round(cents))) > _TICK_TOL:
        raise InvalidConfig("curve prices must sit on the 0.01 EUR grid")


@dataclass(frozen=True)
class StepCurve:
    """Monotone piecewise-constant price curve over cumulative volume."""

    volumes: np.ndarray
    prices: np.ndarray
    side: str
    price_floor: float = PRICE_FLOOR
    price_cap: float = PRICE_CAP

    def __post_init__(self):
        volumes = np.array(self.volumes, dtype=float, copy=True)
        prices = np.array(self.prices, dtype=float, copy=True)
        if volumes.ndim == 1 and volumes.size and volumes[0] == 0.0:
            # a zero-volume anchor point carries no offer or bid; drop it
            volumes = volumes[1:]
            prices = prices[1:]
        volumes.setflags(write=False)
        prices.setflags(write=False)
        object.__setattr__(self, "volumes", volumes)
        object.__setattr__(self, "prices", prices)
        if self.side not in (SUPPLY, DEMAND):
            raise InvalidConfig(f"unknown curve side {self.side!r}")
        if volumes.ndim != 1 or volumes.size == 0 or volumes.shape != prices.shape:
            raise InvalidConfig("curve needs matching, non-empty volume/price arrays")
        if not np.all(np.isfinite(volumes)) or not np.all(np.isfinite(prices)):
            raise InvalidConfig("curve breakpoints must be finite")
        if np.any(np.diff(volumes) <= 0):
            raise InvalidConfig("volumes must be strictly increasing")
        if volumes[0] <= 0:
            raise InvalidConfig("cumulative volumes must be positive")
        steps = np.diff(prices)
        if self.side == SUPPLY and np.any(steps < 0):
            raise InvalidConfig("supply prices must be non-decreasing in volume")
        if self.side == DEMAND and np.any(steps > 0):
            raise InvalidConfig("demand prices must be non-increasing in volume")
        if prices.min() < self.price_floor - _TICK_TOL or prices.max() > self.price_cap + _TICK_TOL:
            raise InvalidConfig("prices must lie within [price_floor, price_cap]")
        _check_quantized(prices)

    @classmethod
    def from_breakpoints(cls, breakpoints: Sequence[tuple[float, float]], side: str,
                         price_floor: float = PRICE_FLOOR, price_cap: float = PRICE_CAP):
        pts = np.asarray(breakpoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidConfig("breakpoints must be (volume, price) pairs")
        return cls(pts[:, 0], pts[:, 1], side, price_floor, price_cap)

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(v), float(p)) for v, p in zip(self.volumes, self.prices)]

    def __len__(self) -> int:
        return int(self.volumes.size)

    def price_at(self, volume: float) -> tuple[float, bool]:
        """Price of the marginal unit at cumulative volume, with a clamp flag.

        Volumes below 0 clamp to the floor, volumes beyond the last
        breakpoint clamp to the cap.
        """
        if volume < 0:
            return self.price_floor, True
        idx = int(np.searchsorted(self.volumes, volume, side="left"))
        if idx >= len(self):
            return self.price_cap, True
        return float(self.prices[idx]), False

    def volume_at_price(self, price: float, strict: bool = False) -> float:
        """Inverse evaluation; see the module docstring for conventions.

        With ``strict=True`` the comparison with the breakpoint price is
        strict (supply: < price, demand: > price).
        """
        return float(self._volumes_at_prices(np.asarray([price], dtype=float), strict)[0])

    def _volumes_at_prices(self, z: np.ndarray, strict: bool = False) -> np.ndarray:
        if self.side == SUPPLY:
            side = "left" if strict else "right"
            count = np.searchsorted(self.prices, z, side=side)
        else:
            rev = self.prices[::-1]  # non-decreasing
            side = "right" if strict else "left"
            count = len(self) - np.searchsorted(rev, z, side=side)
        vols = np.zeros(len(z), dtype=float)
        hit = count > 0
        vols[hit] = self.volumes[count[hit] - 1]
        return vols


@dataclass(frozen=True)
class InelasticDemand:
    """Vertical demand line: a constant volume demanded at every price."""

    volume: float

    def __post_init__(self):
        if not np.isfinite(self.volume) or self.volume < 0:
            raise InvalidConfig("inelastic demand volume must be non-negative")

    def as_step_curve(self, price_floor: float = PRICE_FLOOR,
                      price_cap: float = PRICE_CAP) -> StepCurve:
        """Step-curve encoding: the full volume bid at the price cap."""
        return StepCurve(np.array([self.volume]), np.array([price_cap]),
                         DEMAND, price_floor, price_cap)


class Equilibrium(NamedTuple):
    price: float
    volume: float


class ShiftResult(NamedTuple):
    price: float
    clamped: bool


def intersect(supply: StepCurve, demand: StepCurve) -> Equilibrium:
    """Clearing point of a supply and a demand staircase.

    Scans merged volume intervals for the first point where the supply
    price weakly exceeds the demand price.  On overlaps the lowest price
    and lowest volume satisfying the crossing are returned.  Beyond its
    last breakpoint a curve is extended vertically (supply up to its cap,
    demand down to its floor), which mirrors the clamping convention of
    forward evaluation.
    """
    if supply.side != SUPPLY or demand.side != DEMAND:
        raise InvalidConfig("intersect() needs a supply curve and a demand curve")
    grid = np.union1d(supply.volumes, demand.volumes)

    s_idx = np.searchsorted(supply.volumes, grid, side="left")
    s_prices = np.where(s_idx < len(supply),
                        supply.prices[np.minimum(s_idx, len(supply) - 1)],
                        supply.price_cap)
    d_idx = np.searchsorted(demand.volumes, grid, side="left")
    d_prices = np.where(d_idx < len(demand),
                        demand.prices[np.minimum(d_idx, len(demand) - 1)],
                        demand.price_floor)
    # sentinel interval past the last breakpoint of both curves
    s_prices = np.append(s_prices, supply.price_cap)
    d_prices = np.append(d_prices, demand.price_floor)

    crossed = np.nonzero(s_prices >= d_prices)[0]
    if crossed.size == 0:  # cap < floor would be required; unreachable for valid curves
        raise NoIntersection("curves never cross")
    k = int(crossed[0])
    if k == 0:
        if s_prices[0] > d_prices[0]:
            raise NoIntersection("supply lies strictly above demand on the full domain")
        return Equilibrium(float(s_prices[0]), 0.0)
    price = max(float(s_prices[k - 1]), float(d_prices[k]))
    return Equilibrium(price, float(grid[k - 1]))


def to_inelastic(ws_supply: StepCurve, ws_demand: StepCurve) -> tuple[StepCurve, InelasticDemand]:
    """Transform a wholesale curve pair into a vertical-demand equilibrium.

    The vertical demand sits at the total volume bid at the price floor.
    The transformed supply adds, at each price level, the demand volume
    that has withdrawn (bids strictly below the price, cap bids never
    withdraw).  The clearing price of the transformed pair equals the
    clearing price of the inputs.
    """
    if ws_supply.side != SUPPLY or ws_demand.side != DEMAND:
        raise InvalidConfig("to_inelastic() needs a supply curve and a demand curve")
    total_demand = ws_demand.volume_at_price(ws_demand.price_floor)
    firm = ws_demand.volume_at_price(ws_demand.price_cap)  # cap bids stay demand

    z = np.union1d(ws_supply.prices, ws_demand.prices)
    sup_vol = ws_supply._volumes_at_prices(z)
    dem_vol = np.maximum(ws_demand._volumes_at_prices(z, strict=True), firm)
    vol = sup_vol + total_demand - dem_vol
    if np.any(np.diff(vol) < 0):
        raise MonotonicityViolation("transformed inverse supply is not monotone")

    # collapse duplicate volumes: keep the cheapest price at each volume
    uniq_vol, first = np.unique(vol, return_index=True)
    supply = StepCurve(uniq_vol, z[first], SUPPLY,
                       ws_supply.price_floor, ws_supply.price_cap)
    return supply, InelasticDemand(float(total_demand))


def shift_supply(supply: StepCurve, demand: InelasticDemand, shift: float) -> ShiftResult:
    """Price after shifting the supply curve horizontally by ``shift`` MW.

    Positive shifts move the curve toward larger volumes (more supply,
    weakly lower price).  Equivalent to evaluating the unshifted curve at
    demand.volume - shift; out-of-domain evaluations clamp and are flagged.
    """
    price, clamped = supply.price_at(demand.volume - shift)
    return ShiftResult(price, clamped)


def decompose_shift(beta: Sequence[float], z: FeatureVector) -> list[tuple[str, float]]:
    """Split a shift of the form beta[0] + beta[1:] . z into named parts.

    The parts sum (left to right) to the same total the shift predictor
    uses; the first entry is the intercept, the rest follow the feature
    order of :class:`FeatureVector`.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (7,):
        raise DimensionMismatch(f"expected 7 shift coefficients, got {beta.shape}")
    arr = z.as_array()
    parts = [("intercept", float(beta[0]))]
    parts.extend((name, float(b * x)) for name, b, x in zip(FEATURE_NAMES, beta[1:], arr))
    return parts


def _row_searchsorted(sorted_rows: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-row searchsorted(side='left') over a 2-D array of sorted rows."""
    n, m = sorted_rows.shape
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, m, dtype=np.int64)
    rows = np.arange(n)
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi) // 2
        go_right = sorted_rows[rows, np.minimum(mid, m - 1)] < values
        lo = np.where(active & go_right, mid + 1, lo)
        hi = np.where(active & ~go_right, mid, hi)
    return lo


class CurvePanel:
    """Stacked transformed supply curves for vectorized evaluation.

    NLS objectives evaluate thousands of curves per call; padding the
    breakpoints into rectangular arrays turns that into a handful of
    numpy operations.  Results are bit-identical to looping over
    :meth:`StepCurve.price_at`.
    """

    def __init__(self, supplies: Sequence[StepCurve], demands: Sequence[InelasticDemand]):
        if len(supplies) != len(demands):
            raise DimensionMismatch("one demand volume per supply curve required")
        if not supplies:
            raise InvalidConfig("empty curve panel")
        n = len(supplies)
        m = max(len(c) for c in supplies)
        self.volumes = np.full((n, m), np.inf)
        self.prices = np.empty((n, m))
        self.lengths = np.empty(n, dtype=np.int64)
        self.floor = np.empty(n)
        self.cap = np.empty(n)
        for i, curve in enumerate(supplies):
            k = len(curve)
            self.volumes[i, :k] = curve.volumes
            self.prices[i, :k] = curve.prices
            self.prices[i, k:] = curve.price_cap
            self.lengths[i] = k
            self.floor[i] = curve.price_floor
            self.cap[i] = curve.price_cap
        self.demand = np.array([d.volume for d in demands], dtype=float)

    def __len__(self) -> int:
        return int(self.demand.size)

    def prices_at_volume(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        idx = _row_searchsorted(self.volumes, x)
        over = idx >= self.lengths
        under = x < 0
        prices = self.prices[np.arange(len(self)), np.minimum(idx, self.volumes.shape[1] - 1)]
        prices = np.where(over, self.cap, prices)
        prices = np.where(under, self.floor, prices)
        return prices, over | under

    def prices_for_shift(self, shifts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Clearing prices after shifting each curve by its own amount."""
        return self.prices_at_volume(self.demand - shifts)

    def subset(self, index) -> "CurvePanel":
        panel = object.__new__(CurvePanel)
        panel.volumes = self.volumes[index]
        panel.prices = self.prices[index]
        panel.lengths = self.lengths[index]
        panel.floor = self.floor[index]
        panel.cap = self.cap[index]
        panel.demand = self.demand[index]
        return panel
