"""Seeded synthetic data generators for tests and the `simulate` subcommand.

Excess samples are drawn by quantile inversion of the fitted families, so a
generator plus a fitter form a closed self-consistency loop.  The moving-
maximum series has a known extremal index (1/window), and the two-tone series
has known spectral peaks; both serve as ground truth for the diagnostics.
"""
from __future__ import annotations

import math
from datetime import datetime, timezone

import numpy as np

from .catalog import Catalog, catalog_from_fluxes
from .distributions import GevParams, GpdParams, gev_quantile, gpd_quantile
from .seasonality import MONTH_DAYS, BinnedSeries


def rng_from_seed(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(seed)


def gpd_excess_sample(n: int, shape: float, scale: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` excesses by inverting the excess-model CDF at uniforms."""
    params = GpdParams(shape=shape, scale=scale)
    u = rng.uniform(size=n)
    return np.asarray(gpd_quantile(params, u))


def gev_sample(n: int, loc: float, scale: float, shape: float,
               rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` block-maximum values by quantile inversion."""
    params = GevParams(loc=loc, scale=scale, shape=shape)
    u = rng.uniform(size=n)
    return np.asarray(gev_quantile(params, u))


def moving_maximum_series(n: int, window: int, rng: np.random.Generator) -> np.ndarray:
    """Series whose value is the max of ``window`` consecutive iid exp(1) draws.

    A classic dependent process with extremal index exactly ``1/window``.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window!r}")
    base = rng.exponential(size=n + window - 1)
    out = base[:n].copy()
    for k in range(1, window):
        np.maximum(out, base[k:k + n], out=out)
    return out


def two_tone_series(
    n_bins: int,
    periods_years: tuple[float, float] = (11.0, 14.0),
    amplitudes: tuple[float, float] = (3.0, 2.0),
    offset: float = 10.0,
    noise_sd: float = 1.0,
    bin_days: float = MONTH_DAYS,
    rng: np.random.Generator | None = None,
) -> BinnedSeries:
    """Monthly-style series holding two sinusoids plus Gaussian noise."""
    t = (np.arange(n_bins) + 0.5) * bin_days / 365.25
    values = np.full(n_bins, float(offset))
    for period, amp in zip(periods_years, amplitudes):
        values += amp * np.sin(2.0 * math.pi / period * t)
    if noise_sd > 0:
        if rng is None:
            raise ValueError("an rng is required when noise_sd > 0")
        values += rng.normal(scale=noise_sd, size=n_bins)
    return BinnedSeries(values=values, bin_days=bin_days,
                        start=datetime(1980, 1, 1, tzinfo=timezone.utc),
                        statistic="synthetic")


def gpd_catalog(
    n: int,
    shape: float,
    scale: float,
    threshold: float,
    rng: np.random.Generator,
    events_per_year: float = 1799.0,
    start: datetime | None = None,
) -> Catalog:
    """Catalog whose fluxes are ``threshold + GPD excess`` at a fixed rate.

    Every event exceeds the threshold, so it exercises the excess model
    directly; use a below-threshold body only if the test needs one.
    """
    fluxes = threshold + gpd_excess_sample(n, shape, scale, rng)
    return catalog_from_fluxes(fluxes, start=start, events_per_year=events_per_year)


def moving_maximum_catalog(
    n: int,
    window: int,
    rng: np.random.Generator,
    flux_unit: float = 1e-5,
    events_per_year: float = 1799.0,
) -> Catalog:
    """Catalog built from a moving-maximum series (clustered extremes)."""
    values = moving_maximum_series(n, window, rng) * flux_unit
    return catalog_from_fluxes(values, events_per_year=events_per_year)
