"""Independent reference implementations used only by the tests.

These deliberately take the slow, exhaustive route (enumerate every
staircase segment pair, form normal equations explicitly) so they share no
code path with the library functions they check.
"""

import numpy as np

from curveshift import StepCurve


def _segments(curve: StepCurve):
    """Horizontal and vertical segments of the staircase, including the
    terminal vertical up to the cap (supply) or down to the floor (demand)."""
    v = curve.volumes
    p = curve.prices
    h_start = np.concatenate([[0.0], v[:-1]])
    horizontals = (h_start, v, p)
    if curve.side == "supply":
        upper = np.concatenate([p[1:], [curve.price_cap]])
        verticals = (v, p, upper)  # volume, price low, price high
    else:
        lower = np.concatenate([p[1:], [curve.price_floor]])
        verticals = (v, lower, p)
    return horizontals, verticals


def brute_force_equilibrium(supply: StepCurve, demand: StepCurve):
    """Exhaustive segment-pair scan; returns the (price, volume)-minimal
    crossing point or None when the staircases never touch."""
    (sh0, sh1, shp), (sv, svlo, svhi) = _segments(supply)
    (dh0, dh1, dhp), (dv, dvlo, dvhi) = _segments(demand)
    candidates = []

    # supply horizontal x demand vertical
    ok = ((dv[None, :] >= sh0[:, None]) & (dv[None, :] <= sh1[:, None])
          & (shp[:, None] >= dvlo[None, :]) & (shp[:, None] <= dvhi[None, :]))
    for i, j in zip(*np.nonzero(ok)):
        candidates.append((float(shp[i]), float(dv[j])))

    # supply vertical x demand horizontal
    ok = ((sv[:, None] >= dh0[None, :]) & (sv[:, None] <= dh1[None, :])
          & (dhp[None, :] >= svlo[:, None]) & (dhp[None, :] <= svhi[:, None]))
    for i, j in zip(*np.nonzero(ok)):
        candidates.append((float(dhp[j]), float(sv[i])))

    # horizontal overlap at an identical price
    lo = np.maximum(sh0[:, None], dh0[None, :])
    hi = np.minimum(sh1[:, None], dh1[None, :])
    ok = (shp[:, None] == dhp[None, :]) & (lo <= hi)
    for i, j in zip(*np.nonzero(ok)):
        candidates.append((float(shp[i]), float(lo[i, j])))

    # vertical overlap at an identical volume
    plo = np.maximum(svlo[:, None], dvlo[None, :])
    phi = np.minimum(svhi[:, None], dvhi[None, :])
    ok = (sv[:, None] == dv[None, :]) & (plo <= phi)
    for i, j in zip(*np.nonzero(ok)):
        candidates.append((float(plo[i, j]), float(sv[i])))

    if not candidates:
        return None
    return min(candidates)


def random_step_curve(rng, side, max_steps=10, coarse=False, extremes=False) -> StepCurve:
    """Random valid curve; coarse mode puts prices on a 0.5 EUR grid so
    exact ties between curves happen often; extremes mode mixes in blocks
    priced exactly at the floor or cap and zero-volume starts."""
    n = int(rng.integers(1, max_steps + 1))
    widths = rng.uniform(1.0, 3000.0, n)
    volumes = np.cumsum(widths)
    if coarse:
        prices = np.sort(rng.integers(-60, 240, n).astype(float) * 0.5)
    else:
        prices = np.sort(np.round(rng.uniform(-450.0, 2800.0, n), 2))
    if side == "demand":
        prices = prices[::-1]
    if extremes:
        if rng.random() < 0.3:
            prices = prices.copy()
            prices[0] = 3000.0 if side == "demand" else -500.0
        if rng.random() < 0.3:
            prices = prices.copy()
            prices[-1] = -500.0 if side == "demand" else 3000.0
        if rng.random() < 0.2:
            volumes = volumes - volumes[0]  # curve starting at zero volume
            if n == 1:
                volumes = volumes + 1.0
    return StepCurve(volumes, prices, side)


def ols_normal_equations(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Plain (X'X)^-1 X'y for small well-conditioned systems."""
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    return np.linalg.inv(design.T @ design) @ (design.T @ target)
