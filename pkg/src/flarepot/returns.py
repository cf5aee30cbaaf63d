"""Return levels, return periods, solar-cycle exceedance forecasts, and
goodness-of-fit diagnostic data.

The N-year return level is the flux exceeded on average once every N years:

    z_N = u + sigma/xi * ((N * n_y * zeta_u)**xi - 1)

with the log form ``u + sigma * log(N * n_y * zeta_u)`` as xi -> 0, where
``n_y`` is the average number of catalog events per year and ``zeta_u`` the
empirical exceedance rate of the threshold.  Cycle probabilities treat the
number of events above a level in a cycle as binomial with ``n_y * cycle``
trials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    XI_TOL,
    GpdFit,
    gpd_cdf,
    gpd_pdf,
    gpd_quantile,
    gpd_sf,
    profile_ci,
)
from .errors import FitError

__all__ = [
    "ReturnLevelPoint",
    "ReturnLevelCurve",
    "CycleForecast",
    "FitDiagnostics",
    "return_level",
    "return_period",
    "return_curve",
    "cycle_forecast",
    "decade_probability",
    "diagnostics",
    "nearest_half_x_class",
]

SOLAR_CYCLE_YEARS = 11.0


@dataclass(frozen=True)
class ReturnLevelPoint:
    n_years: float
    level: float
    ci_low: float
    ci_high: float
    ci_ok: bool = True


@dataclass(frozen=True)
class ReturnLevelCurve:
    """Return levels over a grid of return periods, with profile CIs."""

    points: tuple[ReturnLevelPoint, ...]
    fit: GpdFit
    n_y: float
    confidence: float


@dataclass(frozen=True)
class CycleForecast:
    """Per-event and per-cycle exceedance probabilities over a flux grid.

    ``p_single`` is the unconditional probability that one catalog event
    exceeds the level; ``p_cycle = 1 - (1 - p_single)**(n_y * cycle_years)``
    is the chance of at least one such event per cycle, and
    ``expected_count = p_single * n_y * cycle_years``.
    """

    levels: np.ndarray
    p_single: np.ndarray
    p_cycle: np.ndarray
    expected_count: np.ndarray
    n_y: float
    cycle_years: float


@dataclass(frozen=True)
class FitDiagnostics:
    """Point sets backing the standard goodness-of-fit plots.

    pp_points: (empirical probability, model probability) per sorted excess.
    qq_points: (model quantile, observed excess) per sorted excess.
    density_points: (excess, empirical density, model density) on a common grid.
    loglog_points: (log10 flux, log10 empirical survival, log10 model survival).
    """

    pp_points: np.ndarray
    qq_points: np.ndarray
    density_points: np.ndarray
    loglog_points: np.ndarray


def _check_fit(fit: GpdFit) -> None:
    if not fit.converged:
        raise FitError("inference requires a converged fit")


def _rate_multiplier(fit: GpdFit, n_years: float, n_y: float) -> float:
    m = n_years * n_y * fit.zeta_u
    if m <= 1.0:
        raise ValueError(
            f"return level for N={n_years:g} lies below the threshold "
            f"(N*n_y*zeta_u = {m:.4g} <= 1)"
        )
    return m


def return_level(fit: GpdFit, n_years: float, n_y: float) -> float:
    """Flux exceeded on average once every ``n_years`` years."""
    _check_fit(fit)
    if n_years <= 0:
        raise ValueError(f"return period must be positive, got {n_years!r}")
    m = _rate_multiplier(fit, n_years, n_y)
    u, sigma, xi = fit.params.threshold, fit.params.scale, fit.params.shape
    if abs(xi) < XI_TOL:
        return u + sigma * math.log(m)
    return u + sigma / xi * math.expm1(xi * math.log(m))


def return_period(fit: GpdFit, level: float, n_y: float) -> float:
    """Average years between exceedances of ``level`` (inverse of
    :func:`return_level` to 1e-9 relative)."""
    _check_fit(fit)
    u = fit.params.threshold
    if level <= u:
        raise ValueError(f"level {level:.4g} must exceed the threshold {u:.4g}")
    survival = gpd_sf(fit.params, level - u)
    if survival <= 0.0:
        raise ValueError(
            f"level {level:.4g} is beyond the upper endpoint of the fitted model"
        )
    return 1.0 / (n_y * fit.zeta_u * survival)


def return_curve(fit: GpdFit, excesses, n_grid, n_y: float,
                 confidence: float = 0.95) -> ReturnLevelCurve:
    """Return levels with profile-likelihood CIs over a grid of periods.

    ``excesses`` must be the sample the fit was computed from (the profile
    likelihood re-evaluates it).  Points whose CI could not be bracketed are
    flagged rather than dropped.
    """
    _check_fit(fit)
    points = []
    for n_years in np.asarray(n_grid, dtype=float):
        level = return_level(fit, n_years, n_y)
        ci = profile_ci(excesses, fit, target="return_level",
                        confidence=confidence, n_years=n_years, n_y=n_y)
        points.append(ReturnLevelPoint(
            n_years=float(n_years), level=level,
            ci_low=ci.lower, ci_high=ci.upper,
            ci_ok=ci.lower_bracketed and ci.upper_bracketed,
        ))
    return ReturnLevelCurve(points=tuple(points), fit=fit, n_y=n_y,
                            confidence=confidence)


def single_event_exceedance(fit: GpdFit, level, catalog_fluxes=None):
    """Unconditional P(one event exceeds ``level``).

    Above the threshold this is ``zeta_u`` times the fitted survival; below
    it the model says nothing, so the empirical (rank-based) survival of the
    catalog fluxes is used when provided, else NaN.
    """
    _check_fit(fit)
    u = fit.params.threshold
    scalar_in = np.isscalar(level) or np.asarray(level).ndim == 0
    levels = np.atleast_1d(np.asarray(level, dtype=float))
    out = np.empty_like(levels)
    above = levels >= u
    out[above] = fit.zeta_u * gpd_sf(fit.params, levels[above] - u)
    if np.any(~above):
        if catalog_fluxes is None:
            out[~above] = np.nan
        else:
            fluxes = np.sort(np.asarray(catalog_fluxes, dtype=float))
            n = fluxes.size
            # empirical survival with Weibull plotting positions
            counts = n - np.searchsorted(fluxes, levels[~above], side="right")
            out[~above] = counts / (n + 1.0)
    return float(out[0]) if scalar_in else out


def cycle_forecast(fit: GpdFit, flux_grid, n_y: float,
                   cycle_years: float = SOLAR_CYCLE_YEARS,
                   catalog_fluxes=None) -> CycleForecast:
    """Exceedance probabilities and expected event counts per solar cycle."""
    _check_fit(fit)
    levels = np.atleast_1d(np.asarray(flux_grid, dtype=float))
    p_single = np.atleast_1d(single_event_exceedance(fit, levels, catalog_fluxes))
    trials = n_y * cycle_years
    with np.errstate(divide="ignore", invalid="ignore"):
        p_cycle = -np.expm1(trials * np.log1p(-np.minimum(p_single, 1.0)))
    p_cycle = np.where(p_single >= 1.0, 1.0, p_cycle)
    return CycleForecast(
        levels=levels,
        p_single=p_single,
        p_cycle=p_cycle,
        expected_count=p_single * trials,
        n_y=n_y,
        cycle_years=cycle_years,
    )


def decade_probability(fit: GpdFit, level: float, n_y: float,
                       years: float = 10.0) -> float:
    """Probability of at least one event above ``level`` within ``years``."""
    _check_fit(fit)
    u = fit.params.threshold
    if level <= u:
        raise ValueError(f"level {level:.4g} must exceed the threshold {u:.4g}")
    p = fit.zeta_u * gpd_sf(fit.params, level - u)
    if p >= 1.0:
        return 1.0
    return -math.expm1(n_y * years * math.log1p(-p))


def diagnostics(fit: GpdFit, excesses) -> FitDiagnostics:
    """Assemble PP, QQ, density, and log-log survival point sets.

    Empirical probabilities use Weibull plotting positions ``i / (n + 1)``.
    The log-log set is on the flux scale (threshold + excess) with survival
    scaled by ``zeta_u``, matching how exceedance curves are usually drawn.
    """
    _check_fit(fit)
    if hasattr(excesses, "excesses"):
        excesses = excesses.excesses
    y = np.sort(np.asarray(excesses, dtype=float))
    n = y.size
    if n == 0:
        raise ValueError("excess sample must be non-empty")
    positions = np.arange(1, n + 1) / (n + 1.0)

    pp = np.column_stack([positions, gpd_cdf(fit.params, y)])
    qq = np.column_stack([gpd_quantile(fit.params, positions), y])

    n_bins = min(max(10, n // 5), 60)
    hist, edges = np.histogram(y, bins=n_bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    density = np.column_stack([centers, hist, gpd_pdf(fit.params, centers)])

    u = fit.params.threshold
    emp_sf = fit.zeta_u * (1.0 - positions)
    model_sf = fit.zeta_u * gpd_sf(fit.params, y)
    with np.errstate(divide="ignore"):
        loglog = np.column_stack([
            np.log10(u + y),
            np.log10(emp_sf),
            np.log10(model_sf),
        ])
    return FitDiagnostics(pp_points=pp, qq_points=qq,
                          density_points=density, loglog_points=loglog)


def nearest_half_x_class(flux: float) -> str:
    """Round a flux to the nearest half X-class label (X24.5 granularity)."""
    halves = round(flux / 1e-4 * 2.0) / 2.0
    if halves <= 0:
        halves = 0.5
    text = f"{halves:.1f}".rstrip("0").rstrip(".")
    return f"X{text}"
