"""Regressor vector built from renewable forecast errors and realized output.

Every model in this package conditions on the same six quantities per
delivery hour: the signed wind and solar forecast errors (actual minus
forecast), their negative parts, and the realized wind and solar volumes.
The capacity-scaled variant rescales the error entries by
sqrt(1 + 2*gamma*rho + gamma^2) and the realized volumes by (1 + gamma),
which is how an extended generation fleet propagates into the regressors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import InvalidConfig, NegativeRadicand

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .data import HourRecord

FEATURE_NAMES = ("w_err_neg", "w_err", "s_err_neg", "s_err", "w_actual", "s_actual")


@dataclass(frozen=True)
class FeatureVector:
    """Six regressors for one delivery hour, in canonical order.

    Order is (w_err_neg, w_err, s_err_neg, s_err, w_actual, s_actual).
    The negative parts must equal max(-err, 0) exactly; use
    :meth:`from_errors` rather than filling them by hand.
    """

    w_err_neg: float
    w_err: float
    s_err_neg: float
    s_err: float
    w_actual: float
    s_actual: float

    def __post_init__(self):
        if self.w_err_neg != max(-self.w_err, 0.0):
            raise InvalidConfig("w_err_neg must equal max(-w_err, 0)")
        if self.s_err_neg != max(-self.s_err, 0.0):
            raise InvalidConfig("s_err_neg must equal max(-s_err, 0)")
        if self.w_actual < 0 or self.s_actual < 0:
            raise InvalidConfig("realized generation must be non-negative")

    @classmethod
    def from_errors(cls, w_err, s_err, w_actual, s_actual):
        return cls(
            w_err_neg=max(-float(w_err), 0.0),
            w_err=float(w_err),
            s_err_neg=max(-float(s_err), 0.0),
            s_err=float(s_err),
            w_actual=float(w_actual),
            s_actual=float(s_actual),
        )

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.w_err_neg, self.w_err, self.s_err_neg, self.s_err,
             self.w_actual, self.s_actual],
            dtype=float,
        )


@dataclass(frozen=True)
class ScaleConfig:
    """Capacity-expansion scaling per technology.

    gamma_* is the relative size of the added capacity, rho_* the
    correlation between existing and added output.
    """

    gamma_w: float = 0.0
    gamma_s: float = 0.0
    rho_w: float = 0.0
    rho_s: float = 0.0

    def __post_init__(self):
        if self.gamma_w < 0 or self.gamma_s < 0:
            raise InvalidConfig("gamma must be non-negative")
        for rho in (self.rho_w, self.rho_s):
            if not -1.0 <= rho <= 1.0:
                raise InvalidConfig("rho must lie in [-1, 1]")
        for gamma, rho in ((self.gamma_w, self.rho_w), (self.gamma_s, self.rho_s)):
            if 1.0 + gamma * (2.0 * rho + gamma) < 0:
                raise InvalidConfig("scaling radicand 1 + 2*gamma*rho + gamma^2 is negative")


def sd_scaling_factor(gamma: float, rho: float) -> float:
    """sqrt(1 + 2*gamma*rho + gamma^2), the output-SD multiplier of an
    expanded fleet.

    The radicand is evaluated as 1 + gamma*(2*rho + gamma) so the boundary
    rho = -gamma/2 yields exactly 1.0.
    """
    radicand = 1.0 + gamma * (2.0 * rho + gamma)
    if radicand < 0:
        raise NegativeRadicand(f"1 + 2*gamma*rho + gamma^2 = {radicand} < 0")
    return math.sqrt(radicand)


def build_features(record: "HourRecord") -> FeatureVector:
    """Feature vector of one hour record: errors are actual minus forecast."""
    return FeatureVector.from_errors(
        w_err=record.w_actual - record.w_forecast,
        s_err=record.s_actual - record.s_forecast,
        w_actual=record.w_actual,
        s_actual=record.s_actual,
    )


def scale_features(z: FeatureVector, cfg: ScaleConfig) -> FeatureVector:
    """Apply capacity scaling: error entries get the SD factor of their
    technology, realized volumes get (1 + gamma).

    The negative-part consistency survives because the factor is shared and
    non-negative: f*max(-x, 0) == max(-(f*x), 0).
    """
    f_w = sd_scaling_factor(cfg.gamma_w, cfg.rho_w)
    f_s = sd_scaling_factor(cfg.gamma_s, cfg.rho_s)
    return FeatureVector(
        w_err_neg=f_w * z.w_err_neg,
        w_err=f_w * z.w_err,
        s_err_neg=f_s * z.s_err_neg,
        s_err=f_s * z.s_err,
        w_actual=(1.0 + cfg.gamma_w) * z.w_actual,
        s_actual=(1.0 + cfg.gamma_s) * z.s_actual,
    )


def feature_matrix(records) -> np.ndarray:
    """Stack per-record feature vectors into an (n, 6) design block."""
    return np.array([build_features(r).as_array() for r in records], dtype=float)


def scale_matrix(z_matrix: np.ndarray, cfg: ScaleConfig) -> np.ndarray:
    """Columnwise version of :func:`scale_features` for an (n, 6) block."""
    f_w = sd_scaling_factor(cfg.gamma_w, cfg.rho_w)
    f_s = sd_scaling_factor(cfg.gamma_s, cfg.rho_s)
    out = np.array(z_matrix, dtype=float, copy=True)
    out[:, 0] *= f_w
    out[:, 1] *= f_w
    out[:, 2] *= f_s
    out[:, 3] *= f_s
    out[:, 4] *= 1.0 + cfg.gamma_w
    out[:, 5] *= 1.0 + cfg.gamma_s
    return out
