"""Peaks-over-threshold extreme value analysis for event-magnitude catalogs.

Fit generalised Pareto models to threshold excesses of a flare catalog,
select thresholds with mean-residual-life and parameter-stability
diagnostics, and turn the fit into return levels, return periods, and
solar-cycle exceedance probabilities.
"""
from .catalog import (
    Catalog,
    CatalogStats,
    FlareEvent,
    apply_goes_scaling,
    catalog_from_fluxes,
    catalog_stats,
    format_flare_class,
    load_catalog,
    parse_flare_class,
    save_catalog,
    scale_catalog,
)
from .distributions import (
    BlockMaxima,
    GevFit,
    GevParams,
    GpdFit,
    GpdParams,
    ProfileInterval,
    block_maxima,
    fit_gev,
    fit_gpd,
    gev_cdf,
    gev_loglik,
    gev_quantile,
    gpd_cdf,
    gpd_loglik,
    gpd_pdf,
    gpd_quantile,
    gpd_sf,
    profile_ci,
)
from .errors import CatalogError, FitError, FlarepotError, ParseError
from .returns import (
    CycleForecast,
    FitDiagnostics,
    ReturnLevelCurve,
    cycle_forecast,
    decade_probability,
    diagnostics,
    return_curve,
    return_level,
    return_period,
)
from .seasonality import (
    BinnedSeries,
    Periodogram,
    SeasonalModel,
    bin_series,
    deseasonalize,
    dominant_frequencies,
    fit_seasonal,
    periodogram,
)
from .threshold import (
    ExceedanceSet,
    ExtremalIndexResult,
    MrlPoint,
    StabilityPoint,
    decluster,
    fit_exceedances,
    mean_residual_life,
    parameter_stability,
    runs_extremal_index,
    select_exceedances,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
