"""Closed-form Kibble-Zurek / Landau-Zener predictions and scaling-law fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KAPPA2_RATIO = 2.0 - np.sqrt(2.0)
KAPPA3_RATIO = 4.0 * (1.0 - 3.0 / np.sqrt(2.0) + 2.0 / np.sqrt(3.0))


class FitError(ValueError):
    pass


def predict_density(b: float, t_a):
    """Kink density ``t_a^{-1/2} / (2 pi sqrt(2 b))`` for ``b`` in 1/ns and ``t_a`` in ns."""
    if b <= 0 or np.any(np.asarray(t_a) <= 0):
        raise ValueError("b and t_a must be positive")
    return np.asarray(t_a, dtype=float) ** -0.5 / (2.0 * np.pi * np.sqrt(2.0 * b))


def lz_rate(b: float, L) -> float:
    """Exponent ``a = 2 pi^3 b / L^2`` (1/ns) of the small-chain Landau-Zener law."""
    return 2.0 * np.pi**3 * b / np.asarray(L, dtype=float) ** 2


def predict_lz(b: float, L, t_a):
    """Ground-state probability ``1 - exp(-a t_a)``."""
    if b <= 0 or np.any(np.asarray(L) <= 0) or np.any(np.asarray(t_a) < 0):
        raise ValueError("b, L must be positive and t_a non-negative")
    return -np.expm1(-lz_rate(b, L) * np.asarray(t_a, dtype=float))


def cumulant_ratio_targets() -> tuple[float, float]:
    """Asymptotic ``kappa2/kappa1`` and ``kappa3/kappa1`` of the kink-number distribution."""
    return float(KAPPA2_RATIO), float(KAPPA3_RATIO)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    covariance: np.ndarray
    window: tuple
    n_points: int

    @property
    def slope_err(self) -> float:
        return float(np.sqrt(self.covariance[0, 0]))

    @property
    def rate(self) -> float:
        """``-slope``; the fitted ``a`` for a Landau-Zener fit."""
        return -self.slope


def _linear_fit(x, y, w=None) -> tuple[float, float, np.ndarray]:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X = np.column_stack([x, np.ones_like(x)])
    sw = np.ones_like(x) if w is None else np.sqrt(np.asarray(w, float))
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = (y - X @ coef) * sw
    dof = max(1, x.size - 2)
    xtx_inv = np.linalg.inv((X * sw[:, None]).T @ (X * sw[:, None]))
    if w is None:
        cov = xtx_inv * float(resid @ resid) / dof
    else:
        cov = xtx_inv
    return float(coef[0]), float(coef[1]), cov


def fit_power_law(x, y, window=None, y_window=None, weights=None) -> FitResult:
    """Least squares of ``log y`` against ``log x``.

    ``window`` restricts ``x`` and ``y_window`` restricts ``y`` (both
    inclusive ``(lo, hi)`` pairs). ``weights`` are optional inverse variances
    of ``log y``.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fit needs positive data")
    keep = np.ones(x.size, bool)
    if window is not None:
        keep &= (x >= window[0]) & (x <= window[1])
    if y_window is not None:
        keep &= (y >= y_window[0]) & (y <= y_window[1])
    if keep.sum() < 3:
        raise FitError(f"only {int(keep.sum())} points inside the fit window (need 3)")
    w = None if weights is None else np.asarray(weights, float)[keep]
    slope, icpt, cov = _linear_fit(np.log(x[keep]), np.log(y[keep]), w)
    return FitResult(slope, icpt, cov, (window, y_window), int(keep.sum()))


def fit_lz_exponent(t_a, pgs, p_window=(0.1, 0.9), t_window=None, weights=None) -> FitResult:
    """Fit ``log(1 - P_GS) = c - a t_a`` on points with ``p_window[0] <= P_GS <= p_window[1]``.

    The returned slope is ``-a``.
    """
    t = np.asarray(t_a, float)
    p = np.asarray(pgs, float)
    keep = (p >= p_window[0]) & (p <= p_window[1])
    if t_window is not None:
        keep &= (t >= t_window[0]) & (t <= t_window[1])
    if keep.sum() < 3:
        raise FitError(f"only {int(keep.sum())} points with P_GS in {p_window} (need 3)")
    w = None if weights is None else np.asarray(weights, float)[keep]
    slope, icpt, cov = _linear_fit(t[keep], np.log1p(-p[keep]), w)
    return FitResult(slope, icpt, cov, (p_window, t_window), int(keep.sum()))
