"""Solar-cycle periodicity: binning, periodogram, harmonic fit, removal.

The pipeline is: bin the event catalog into a regular series (monthly counts
by default), locate dominant periodogram frequencies, fit a sinusoid-plus-
offset model at those frequencies, and subtract the fitted curve from the
event fluxes so the excess analysis can be repeated on deseasonalized data.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from datetime import datetime

import numpy as np
from scipy import optimize

from .catalog import DAYS_PER_YEAR, SECONDS_PER_YEAR, Catalog

logger = logging.getLogger(__name__)

#: Default bin width: one mean month.
MONTH_DAYS = DAYS_PER_YEAR / 12.0

#: Fluxes are floored here after subtracting the seasonal curve (just below
#: the base of the A class) so events never become nonpositive.
FLUX_FLOOR = 1e-9


@dataclass(frozen=True)
class BinnedSeries:
    """Regular time series derived from a catalog.

    ``values[i]`` covers ``[start + i*bin_days, start + (i+1)*bin_days)``;
    ``interpolated_bins`` counts empty bins filled by interpolation (only for
    the mean-flux statistic; count bins hold zeros instead).
    """

    values: np.ndarray
    bin_days: float
    start: datetime
    statistic: str
    interpolated_bins: int = 0

    @property
    def n_bins(self) -> int:
        return int(self.values.size)

    @property
    def bin_years(self) -> float:
        return self.bin_days / DAYS_PER_YEAR

    def times_years(self) -> np.ndarray:
        """Bin-center times in years since ``start``."""
        return (np.arange(self.n_bins) + 0.5) * self.bin_years


@dataclass(frozen=True)
class Periodogram:
    """One-sided power spectrum of a binned series.

    ``power[k]`` is the squared DFT magnitude at ``frequencies[k]`` (cycles
    per year), normalized so the total power equals n times the series
    variance (Parseval).
    """

    frequencies: np.ndarray
    power: np.ndarray
    bin_days: float
    n_bins: int


@dataclass(frozen=True)
class SeasonalModel:
    """Sum of sinusoids ``sum_i A_i sin(w_i t) + B_i cos(w_i t) + C``.

    Angular frequencies ``w_i`` are in rad/year and ``t`` is measured in
    years since ``epoch`` (the start of the series the model was fitted to).
    """

    components: tuple[tuple[float, float, float], ...]  # (omega, A, B)
    offset: float
    epoch: datetime

    def predict(self, t_years) -> np.ndarray:
        t = np.asarray(t_years, dtype=float)
        out = np.full_like(t, self.offset, dtype=float)
        for omega, a, b in self.components:
            out += a * np.sin(omega * t) + b * np.cos(omega * t)
        return out

    def value_at(self, timestamp: datetime) -> float:
        t = (timestamp - self.epoch).total_seconds() / SECONDS_PER_YEAR
        return float(self.predict(t))


def bin_series(catalog: Catalog, bin_days: float = MONTH_DAYS,
               statistic: str = "count") -> BinnedSeries:
    """Aggregate a catalog into fixed-width bins from the first event.

    ``statistic`` is ``"count"`` (events per bin, empty bins = 0) or
    ``"mean_flux"`` (mean peak flux per bin, empty bins filled by linear
    interpolation and counted).  The span must cover at least 2 bins.
    """
    if bin_days <= 0:
        raise ValueError(f"bin width must be positive, got {bin_days!r}")
    if statistic not in ("count", "mean_flux"):
        raise ValueError(f"unknown statistic: {statistic!r}")
    days = catalog.seconds_from_start() / 86400.0
    span = days[-1]
    n_bins = int(math.ceil(span / bin_days - 1e-12))
    if n_bins < 2:
        raise ValueError(
            f"catalog span ({span:.3g} d) must cover at least 2 bins of {bin_days:.3g} d"
        )
    idx = np.minimum((days / bin_days).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins).astype(float)
    if statistic == "count":
        return BinnedSeries(values=counts, bin_days=bin_days,
                            start=catalog.events[0].timestamp, statistic=statistic)
    sums = np.bincount(idx, weights=catalog.fluxes, minlength=n_bins)
    empty = counts == 0
    values = np.full(n_bins, np.nan)
    values[~empty] = sums[~empty] / counts[~empty]
    if empty.any():
        filled = np.arange(n_bins)[~empty]
        values[empty] = np.interp(np.arange(n_bins)[empty], filled, values[~empty])
        logger.info("bin_series: interpolated %d empty bins", int(empty.sum()))
    return BinnedSeries(values=values, bin_days=bin_days,
                        start=catalog.events[0].timestamp, statistic=statistic,
                        interpolated_bins=int(empty.sum()))


def periodogram(series: BinnedSeries) -> Periodogram:
    """One-sided DFT power spectrum of a binned series (mean removed).

    Frequencies are the Fourier grid ``k / (n * bin_width)`` for
    ``k = 1 .. n//2`` in cycles per year.  Power is normalized so that its sum
    equals ``n * var(values)``; a constant series gives all-zero power.
    """
    x = np.asarray(series.values, dtype=float)
    n = x.size
    if n < 8:
        raise ValueError(f"need at least 8 bins for a periodogram, got {n}")
    coeffs = np.fft.rfft(x - x.mean())
    power = 2.0 * np.abs(coeffs) ** 2 / n
    if n % 2 == 0:
        power[-1] /= 2.0  # the Nyquist bin has no mirror image
    freqs = np.arange(1, n // 2 + 1) / (n * series.bin_years)
    return Periodogram(frequencies=freqs, power=power[1: n // 2 + 1],
                       bin_days=series.bin_days, n_bins=n)


def dominant_frequencies(pg: Periodogram, k: int = 2) -> list[float]:
    """Angular frequencies (rad/yr) of the top-``k`` periodogram peaks.

    Peaks are local maxima of the power; they are ranked by power with ties
    broken toward lower frequency.  Fewer than ``k`` local maxima yields a
    shorter list with a log note.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    p = pg.power
    n = p.size
    is_peak = np.ones(n, dtype=bool)
    if n > 1:
        is_peak[1:] &= p[1:] > p[:-1]
        is_peak[:-1] &= p[:-1] >= p[1:]
    peaks = np.nonzero(is_peak & (p > 0))[0]
    order = sorted(peaks, key=lambda i: (-p[i], pg.frequencies[i]))
    if len(order) < k:
        logger.info("dominant_frequencies: only %d local maxima (requested %d)",
                    len(order), k)
    return [2.0 * math.pi * float(pg.frequencies[i]) for i in order[:k]]


def fit_seasonal(series: BinnedSeries, frequencies, refine: bool = False) -> SeasonalModel:
    """Fit sinusoid amplitudes and offset at fixed angular frequencies.

    With the frequencies held fixed the problem is ordinary least squares and
    is solved exactly; ``refine=True`` follows with a nonlinear least-squares
    pass that also adjusts the frequencies.  Duplicate frequencies make the
    design rank-deficient and are rejected.
    """
    omegas = [float(w) for w in frequencies]
    if any(w <= 0 for w in omegas):
        raise ValueError("angular frequencies must be positive")
    if len(set(omegas)) != len(omegas):
        raise ValueError("duplicate frequencies make the design rank-deficient")
    t = series.times_years()
    x = np.asarray(series.values, dtype=float)
    if x.size < 2 * len(omegas) + 1:
        raise ValueError(
            f"need at least {2 * len(omegas) + 1} points to fit {len(omegas)} components"
        )
    cols = []
    for w in omegas:
        cols.append(np.sin(w * t))
        cols.append(np.cos(w * t))
    cols.append(np.ones_like(t))
    design = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(design, x, rcond=None)

    if refine:
        k = len(omegas)

        def residual(theta):
            ws, rest = theta[:k], theta[k:]
            model = np.full_like(t, rest[-1])
            for i, w in enumerate(ws):
                model += rest[2 * i] * np.sin(w * t) + rest[2 * i + 1] * np.cos(w * t)
            return model - x

        theta0 = np.concatenate([omegas, beta])
        res = optimize.least_squares(residual, theta0, method="lm", max_nfev=5000)
        if res.success:
            omegas = [float(w) for w in res.x[:k]]
            beta = res.x[k:]
        else:
            logger.warning("fit_seasonal: frequency refinement did not converge; "
                           "keeping the fixed-frequency solution")

    components = tuple(
        (omegas[i], float(beta[2 * i]), float(beta[2 * i + 1])) for i in range(len(omegas))
    )
    return SeasonalModel(components=components, offset=float(beta[-1]),
                         epoch=series.start)


def deseasonalize(catalog: Catalog, model: SeasonalModel) -> Catalog:
    """Subtract the seasonal curve from each event flux.

    Fluxes are floored at ``FLUX_FLOOR`` so they stay positive; class labels
    are dropped because they no longer describe the adjusted flux.  A zero
    model returns an identical catalog.
    """
    if model.offset == 0 and all(a == 0 and b == 0 for _, a, b in model.components):
        return catalog
    t = catalog.years_from_start()
    t0_offset = (catalog.events[0].timestamp - model.epoch).total_seconds() / SECONDS_PER_YEAR
    adjust = model.predict(t + t0_offset)
    events = tuple(
        replace(e, peak_flux=max(e.peak_flux - float(a), FLUX_FLOOR), source_class=None)
        for e, a in zip(catalog.events, adjust)
    )
    return Catalog(events=events, scaling_applied=catalog.scaling_applied,
                   skipped_rows=catalog.skipped_rows)
