"""Threshold selection diagnostics and serial-dependence assessment.

Mean-residual-life and parameter-stability sweeps identify where the excess
model becomes appropriate; runs declustering and the extremal index measure
how strongly exceedances cluster in the event sequence.  Run separation is
counted in catalog rows (events), not wall-clock time, because the catalog is
event-indexed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .catalog import Catalog, catalog_from_fluxes
from .distributions import GpdFit, fit_gpd
from .errors import CatalogError, FitError

logger = logging.getLogger(__name__)

_MIN_MRL_EXCEEDANCES = 5
_MIN_STABILITY_EXCEEDANCES = 30


@dataclass(frozen=True)
class ExceedanceSet:
    """Threshold excesses plus the catalog metadata needed for rates.

    ``excesses`` are ``x - threshold`` for every observation above the
    threshold, in catalog (time) order.  ``zeta_u`` is the empirical
    exceedance probability ``n_exceed / n_total``.
    """

    threshold: float
    excesses: np.ndarray
    n_total: int
    span_years: float
    n_y: float

    @property
    def n_exceed(self) -> int:
        return int(self.excesses.size)

    @property
    def zeta_u(self) -> float:
        return self.n_exceed / self.n_total


@dataclass(frozen=True)
class MrlPoint:
    """Mean excess over one threshold with a normal-approximation CI."""

    u: float
    mean_excess: float
    ci_low: float
    ci_high: float
    n_exceed: int


@dataclass(frozen=True)
class StabilityPoint:
    """Shape and modified scale (scale - shape*u) refit above one threshold.

    The modified scale is threshold-invariant when the excess model holds, so
    a correct threshold region shows flat values in both columns.
    """

    u: float
    shape: float
    modified_scale: float
    se_shape: float
    se_mod_scale: float
    n_exceed: int
    converged: bool


@dataclass(frozen=True)
class ExtremalIndexResult:
    """Runs estimate of the extremal index: clusters per exceedance."""

    theta: float
    n_exceed: int
    n_clusters: int
    run_length: int


def _values_of(data) -> np.ndarray:
    if isinstance(data, Catalog):
        return data.fluxes
    return np.asarray(data, dtype=float)


def select_exceedances(catalog: Catalog, u: float) -> ExceedanceSet:
    """Extract excesses over ``u`` with the catalog metadata attached."""
    fluxes = catalog.fluxes
    mask = fluxes > u
    if not mask.any():
        raise CatalogError(
            f"no exceedances of u={u:.4g} (catalog max is {fluxes.max():.4g})"
        )
    return ExceedanceSet(
        threshold=float(u),
        excesses=fluxes[mask] - u,
        n_total=catalog.n_total,
        span_years=catalog.span_years,
        n_y=catalog.n_y,
    )


def default_threshold_grid(catalog: Catalog, n_points: int = 40,
                           lo_quantile: float = 0.50, hi_quantile: float = 0.995) -> np.ndarray:
    """Evenly spaced thresholds between flux quantiles (50th-99.5th default)."""
    fluxes = catalog.fluxes
    lo = float(np.quantile(fluxes, lo_quantile))
    hi = float(np.quantile(fluxes, hi_quantile))
    return np.linspace(lo, hi, n_points)


def mean_residual_life(data, grid, confidence: float = 0.95) -> list[MrlPoint]:
    """Sample mean excess over each threshold in an ascending grid.

    The CI is the normal approximation ``mean +- z * s / sqrt(n)``.  Grid
    points leaving fewer than 5 exceedances are dropped with a log note.
    """
    values = _values_of(data)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("threshold grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("threshold grid must be ascending")
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    points: list[MrlPoint] = []
    dropped = 0
    for u in grid:
        excess = values[values > u] - u
        if excess.size < _MIN_MRL_EXCEEDANCES:
            dropped += 1
            continue
        mean = float(np.mean(excess))
        half = z * float(np.std(excess, ddof=1)) / math.sqrt(excess.size)
        points.append(MrlPoint(u=float(u), mean_excess=mean,
                               ci_low=mean - half, ci_high=mean + half,
                               n_exceed=int(excess.size)))
    if dropped:
        logger.info("mean_residual_life: dropped %d grid points with < %d exceedances",
                    dropped, _MIN_MRL_EXCEEDANCES)
    return points


def parameter_stability(data, grid, confidence: float = 0.95) -> list[StabilityPoint]:
    """Refit the excess model at each threshold and report shape stability.

    Each grid point needs at least 30 exceedances (dropped with a note
    otherwise).  The modified-scale standard error comes from the delta method
    on the fit covariance.  Non-converged fits are flagged, not fatal.
    """
    values = _values_of(data)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("threshold grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("threshold grid must be ascending")
    points: list[StabilityPoint] = []
    dropped = 0
    for u in grid:
        excess = values[values > u] - u
        if excess.size < _MIN_STABILITY_EXCEEDANCES:
            dropped += 1
            continue
        try:
            # same code path as a standalone fit at this threshold, so a
            # single-point sweep reproduces fit_gpd(select_exceedances(...))
            if isinstance(data, Catalog):
                fit = fit_gpd(select_exceedances(data, u))
            else:
                fit = fit_gpd(excess)
        except FitError as exc:
            logger.warning("parameter_stability: fit failed at u=%.4g: %s", u, exc)
            continue
        xi, sigma = fit.params.shape, fit.params.scale
        mod_scale = sigma - xi * u
        var_mod = fit.cov[1, 1] + u * u * fit.cov[0, 0] - 2.0 * u * fit.cov[0, 1]
        se_mod = math.sqrt(var_mod) if var_mod > 0 else math.nan
        points.append(StabilityPoint(
            u=float(u), shape=xi, modified_scale=mod_scale,
            se_shape=fit.se_shape, se_mod_scale=se_mod,
            n_exceed=int(excess.size), converged=fit.converged,
        ))
    if dropped:
        logger.info("parameter_stability: dropped %d grid points with < %d exceedances",
                    dropped, _MIN_STABILITY_EXCEEDANCES)
    return points


def fit_exceedances(catalog: Catalog, u: float) -> GpdFit:
    """Convenience: select exceedances of ``u`` and fit the excess model."""
    return fit_gpd(select_exceedances(catalog, u))


def _cluster_slices(positions: np.ndarray, run_length: int) -> list[np.ndarray]:
    """Group exceedance positions: gaps of fewer than ``run_length``
    non-exceeding observations keep a cluster alive."""
    clusters: list[list[int]] = [[int(positions[0])]]
    for pos in positions[1:]:
        gap = int(pos) - clusters[-1][-1] - 1
        if gap < run_length:
            clusters[-1].append(int(pos))
        else:
            clusters.append([int(pos)])
    return [np.asarray(c) for c in clusters]


def runs_extremal_index(data, u: float, run_length: int = 1) -> ExtremalIndexResult:
    """Runs-declustering estimate of the extremal index at threshold ``u``.

    ``theta = n_clusters / n_exceed``; 1 means exceedances never arrive in
    back-to-back runs (independent extremes), values near 0 mean heavy
    clustering.  Requires at least 2 exceedances.
    """
    if run_length < 1:
        raise ValueError(f"run length must be >= 1, got {run_length!r}")
    values = _values_of(data)
    positions = np.nonzero(values > u)[0]
    if positions.size == 0:
        raise CatalogError(f"no exceedances of u={u:.4g}")
    if positions.size < 2:
        raise CatalogError("need at least 2 exceedances to estimate the extremal index")
    clusters = _cluster_slices(positions, run_length)
    return ExtremalIndexResult(
        theta=len(clusters) / positions.size,
        n_exceed=int(positions.size),
        n_clusters=len(clusters),
        run_length=int(run_length),
    )


def decluster(data, u: float, run_length: int = 1):
    """Reduce each exceedance cluster to its peak observation.

    For a :class:`Catalog` input the result is a catalog of the cluster-peak
    events (timestamps preserved); for a plain array it is the array of
    cluster maxima.  Output size equals ``n_clusters`` from
    :func:`runs_extremal_index` at the same ``(u, run_length)``.
    """
    if run_length < 1:
        raise ValueError(f"run length must be >= 1, got {run_length!r}")
    values = _values_of(data)
    positions = np.nonzero(values > u)[0]
    if positions.size == 0:
        raise CatalogError(f"no exceedances of u={u:.4g}")
    clusters = _cluster_slices(positions, run_length)
    peak_positions = [int(c[np.argmax(values[c])]) for c in clusters]
    if isinstance(data, Catalog):
        events = tuple(data.events[i] for i in peak_positions)
        return Catalog(events=events, scaling_applied=data.scaling_applied)
    return values[peak_positions]


def suggest_onset(mrl_points: list[MrlPoint],
                  stability_points: list[StabilityPoint]) -> dict:
    """Advisory threshold suggestion from the diagnostic sweeps.

    The MRL onset is the grid point after the largest kink (largest gap
    between consecutive local slopes of the mean-excess curve); the stability
    onset is the lowest threshold from which all later shape estimates stay
    within two standard errors of the estimate there.  Heuristics only; the
    plots are the real diagnostic.
    """
    out: dict = {"mrl_onset": None, "stability_onset": None}
    if len(mrl_points) >= 3:
        us = np.array([p.u for p in mrl_points])
        means = np.array([p.mean_excess for p in mrl_points])
        slopes = np.diff(means) / np.diff(us)
        kink = np.abs(np.diff(slopes))
        out["mrl_onset"] = float(us[int(np.argmax(kink)) + 1])
    converged = [p for p in stability_points if p.converged and math.isfinite(p.se_shape)]
    for i, p in enumerate(converged):
        later = converged[i + 1:]
        if all(abs(q.shape - p.shape) <= 2.0 * max(q.se_shape, p.se_shape) for q in later):
            out["stability_onset"] = p.u
            break
    return out


def rebuild_catalog(values, events_per_year: float = 1799.0) -> Catalog:
    """Wrap plain values in a synthetic catalog (regular timestamps)."""
    return catalog_from_fluxes(values, events_per_year=events_per_year)
