"""Seasonal forecasters for telemetry series.

Two methods, both dependency-free: a seasonal-naive baseline that
repeats the last observed season, and additive Holt-Winters (level,
trend, seasonal components) with fixed smoothing weights.  Forecast
quality is not the point here; the forecasters exist so that noise and
tampering can be priced by how much they move downstream predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import MeasurementSeries

METHODS = ("holt_winters", "seasonal_naive")


@dataclass(frozen=True)
class ForecastConfig:
    horizon: int
    method: str = "holt_winters"
    season_length: int = 24
    level_smoothing: float = 0.3
    trend_smoothing: float = 0.05
    season_smoothing: float = 0.2

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.season_length < 1:
            raise ValueError(f"season_length must be at least 1, got {self.season_length}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        for name in ("level_smoothing", "trend_smoothing", "season_smoothing"):
            w = getattr(self, name)
            if not 0.0 < w < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {w}")


def _check_series(values: np.ndarray, season_length: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("values must be one-dimensional")
    needed = 2 * season_length
    if len(values) < needed:
        raise ValueError(f"series too short: need at least {needed} points, got {len(values)}")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite; fill or drop missing readings first")
    return values


def seasonal_naive_forecast(values, season_length: int, horizon: int) -> np.ndarray:
    """Repeat the last observed season."""
    values = _check_series(values, season_length)
    last_season = values[-season_length:]
    return last_season[np.arange(horizon) % season_length]


def seasonal_naive_fitted(values, season_length: int) -> np.ndarray:
    """One-step-ahead predictions y[t - m]; NaN for the first season."""
    values = _check_series(values, season_length)
    fitted = np.full(len(values), np.nan)
    fitted[season_length:] = values[:-season_length]
    return fitted


def holt_winters_forecast(
    values,
    season_length: int,
    horizon: int,
    level_smoothing: float = 0.3,
    trend_smoothing: float = 0.05,
    season_smoothing: float = 0.2,
    return_fitted: bool = False,
):
    """Additive Holt-Winters with fixed smoothing weights.

    Initialization uses the first two seasons: level is the first
    season's mean, trend the per-step difference of the two seasonal
    means, seasonal offsets the first season's residuals.  The
    recursion starts at t == season_length; fitted[t] is the one-step
    prediction formed before y[t] is consumed (NaN during the
    initialization window).
    """
    y = _check_series(values, season_length)
    m = season_length
    n = len(y)

    level = float(np.mean(y[:m]))
    trend = (float(np.mean(y[m : 2 * m])) - level) / m
    season = np.empty(n, dtype=float)
    season[:m] = y[:m] - level

    fitted = np.full(n, np.nan)
    for t in range(m, n):
        prediction = level + trend + season[t - m]
        fitted[t] = prediction
        new_level = level_smoothing * (y[t] - season[t - m]) + (1.0 - level_smoothing) * (level + trend)
        trend = trend_smoothing * (new_level - level) + (1.0 - trend_smoothing) * trend
        season[t] = season_smoothing * (y[t] - new_level) + (1.0 - season_smoothing) * season[t - m]
        level = new_level

    steps = np.arange(1, horizon + 1)
    seasonal_idx = n - m + (steps - 1) % m
    forecast = level + steps * trend + season[seasonal_idx]
    return (forecast, fitted) if return_fitted else forecast


def forecast(series: MeasurementSeries, cfg: ForecastConfig) -> MeasurementSeries:
    """Forecast a complete, uniformly sampled series.

    Returns a new series whose timestamps continue the input grid for
    cfg.horizon steps.
    """
    if not series.complete:
        raise ValueError("series has missing readings; fill or resample before forecasting")
    steps = np.diff(series.timestamps)
    if len(steps) == 0:
        raise ValueError(f"series too short: need at least {2 * cfg.season_length} points, got {len(series)}")
    if not np.all(steps == steps[0]):
        raise ValueError("series must be uniformly sampled")
    if cfg.method == "holt_winters":
        predicted = holt_winters_forecast(
            series.values,
            cfg.season_length,
            cfg.horizon,
            cfg.level_smoothing,
            cfg.trend_smoothing,
            cfg.season_smoothing,
        )
    else:
        predicted = seasonal_naive_forecast(series.values, cfg.season_length, cfg.horizon)
    step = steps[0]
    future = series.timestamps[-1] + step * np.arange(1, cfg.horizon + 1)
    return MeasurementSeries(
        timestamps=future,
        values=predicted,
        mask=np.ones(cfg.horizon, dtype=bool),
        channel=series.channel,
    )
