"""Least-squares estimators: dense OLS and derivative-free NLS.

The non-linear models evaluate a step function inside their objective,
so the loss surface carries flat plateaus and no useful gradients.  The
NLS routine is therefore a plain Nelder-Mead simplex with convergence
declared on the relative spread of the objective values across the
simplex, not on parameter movement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidConfig, NonFiniteObjective, RankDeficient


@dataclass(frozen=True)
class OlsResult:
    """Ordinary least squares fit with plain (i.i.d.) standard errors."""

    beta: np.ndarray
    se: np.ndarray
    residual_sum_squares: float
    n_obs: int

    def t_against(self, value: float = 0.0) -> np.ndarray:
        """t-ratios of the coefficients against a reference value."""
        return (self.beta - value) / self.se


@dataclass(frozen=True)
class NlsResult:
    beta: np.ndarray
    objective: float
    converged: bool
    iterations: int


def ols_fit(design: np.ndarray, target: np.ndarray) -> OlsResult:
    """Least-squares coefficients via a column-equilibrated SVD solve.

    Columns are rescaled to unit norm before the decomposition, which
    keeps mixed-scale designs (MW-level features next to squared prices)
    well conditioned.  Raises :class:`RankDeficient` when the design has
    collinear columns, e.g. a window without any negative solar error.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float).ravel()
    if X.ndim != 2:
        raise RankDeficient("design must be a 2-D matrix")
    n, k = X.shape
    if y.shape[0] != n:
        raise RankDeficient("design and target lengths differ")
    if n <= k:
        raise RankDeficient(f"need more observations ({n}) than columns ({k})")

    scale = np.sqrt(np.sum(X * X, axis=0))
    if np.any(scale == 0):
        raise RankDeficient("design contains an all-zero column")
    Xs = X / scale
    u, s, vt = np.linalg.svd(Xs, full_matrices=False)
    tol = s[0] * max(n, k) * np.finfo(float).eps
    if np.any(s <= tol):
        raise RankDeficient(f"design is rank deficient (singular values {s})")

    beta = (vt.T @ ((u.T @ y) / s)) / scale
    resid = y - X @ beta
    rss = float(resid @ resid)
    sigma2 = max(rss, 0.0) / (n - k)
    cov_scaled_diag = np.sum((vt.T / s) ** 2, axis=1)
    se = np.sqrt(sigma2 * cov_scaled_diag) / scale
    return OlsResult(beta=beta, se=se, residual_sum_squares=max(rss, 0.0), n_obs=n)


@dataclass(frozen=True)
class NlsOptions:
    ftol_rel: float = 1e-8
    max_iter: int | None = None  # defaults to 500 * dim
    init_step: float = 0.05      # relative simplex edge per coordinate
    zero_step: float = 0.00025   # absolute edge for zero coordinates
    init_scale: tuple | None = None  # absolute per-coordinate edge floor


def nls_fit(objective: Callable[[np.ndarray], float], beta0: np.ndarray,
            opts: NlsOptions | None = None) -> NlsResult:
    """Minimize a sum-of-squares objective with a Nelder-Mead simplex.

    Stops when (f_worst - f_best) <= ftol_rel * (|f_best| + ftol_rel) or
    after ``max_iter`` iterations, returning the best vertex either way.
    Any non-finite objective value aborts with
    :class:`NonFiniteObjective`.
    """
    opts = opts or NlsOptions()
    x0 = np.asarray(beta0, dtype=float).ravel()
    dim = x0.size
    max_iter = opts.max_iter if opts.max_iter is not None else 500 * dim

    def f(x: np.ndarray) -> float:
        value = float(objective(x))
        if not np.isfinite(value):
            raise NonFiniteObjective(f"objective is {value} at {x}")
        return value

    floor = np.zeros(dim)
    if opts.init_scale is not None:
        floor = np.asarray(opts.init_scale, dtype=float).ravel()
        if floor.size != dim:
            raise InvalidConfig(
                f"init_scale length {floor.size} does not match dimension {dim}")
    simplex = np.tile(x0, (dim + 1, 1))
    for i in range(dim):
        edge = max(abs(simplex[i + 1, i]) * opts.init_step, floor[i])
        if edge == 0.0:
            edge = opts.zero_step
        simplex[i + 1, i] += edge
    values = np.array([f(x) for x in simplex])

    iterations = 0
    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex = simplex[order]
        values = values[order]
        if values[-1] - values[0] <= opts.ftol_rel * (abs(values[0]) + opts.ftol_rel):
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1

        centroid = simplex[:-1].mean(axis=0)
        reflected = centroid + (centroid - simplex[-1])
        f_r = f(reflected)
        if f_r < values[0]:
            expanded = centroid + 2.0 * (centroid - simplex[-1])
            f_e = f(expanded)
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        else:
            if f_r < values[-1]:  # outside contraction
                contracted = centroid + 0.5 * (reflected - centroid)
            else:                 # inside contraction
                contracted = centroid + 0.5 * (simplex[-1] - centroid)
            f_c = f(contracted)
            if f_c < min(f_r, values[-1]):
                simplex[-1], values[-1] = contracted, f_c
            else:  # shrink toward the best vertex
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [f(x) for x in simplex[1:]]

    best = int(np.argmin(values))
    return NlsResult(beta=simplex[best].copy(), objective=float(values[best]),
                     converged=converged, iterations=iterations)
