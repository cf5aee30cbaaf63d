"""Batch command-line interface.

Subcommands cover the pipeline stage by stage with file-based handoff, so
every stage is independently runnable and resumable:

    ingest      raw file -> canonical catalog.csv + stats.json
    thresholds  catalog  -> mrl.csv, stability.csv, thresholds_summary.json
    fit         catalog  -> fit.json + four diagnostic CSVs
    returns     fit.json -> return_levels.csv, return_curve.csv,
                            cycle_forecast.csv, returns_summary.json
    deseason    catalog  -> periodogram.csv, seasonal_model.json,
                            deseasonalized.csv, deseason_summary.json
    simulate    nothing  -> seeded synthetic catalog or series CSV

Options resolve with precedence: command line > FLAREPOT_* environment
variables > --config key=value file > built-in default.  Outputs are
deterministic given (input, config, seed): reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import simulate as sim
from .catalog import (
    catalog_stats,
    format_flare_class,
    load_catalog,
    save_catalog,
    scale_catalog,
)
from .distributions import (
    FIT_DOCUMENT_VERSION,
    fit_gpd,
    gpd_fit_from_dict,
    gpd_fit_to_dict,
    profile_ci,
)
from .errors import FlarepotError
from .returns import (
    cycle_forecast,
    decade_probability,
    diagnostics,
    nearest_half_x_class,
    return_curve,
    return_level,
)
from .seasonality import (
    MONTH_DAYS,
    bin_series,
    deseasonalize,
    dominant_frequencies,
    fit_seasonal,
    periodogram,
)
from .threshold import (
    default_threshold_grid,
    mean_residual_life,
    parameter_stability,
    runs_extremal_index,
    select_exceedances,
    suggest_onset,
)

logger = logging.getLogger(__name__)

ENV_PREFIX = "FLAREPOT_"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

DEFAULT_RETURN_YEARS = (11.0, 20.0, 38.0, 50.0, 100.0, 110.0, 150.0)
DEFAULT_DECADE_LEVELS = (3.5e-3, 4.5e-3)  # X35 and X45


# --- option plumbing ---------------------------------------------------------


def _read_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FlarepotError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args: argparse.Namespace, key: str, config: dict[str, str],
             default, cast):
    """CLI > environment > config file > default."""
    cli_value = getattr(args, key, None)
    if cli_value is not None:
        return cli_value
    env_value = os.environ.get(ENV_PREFIX + key.upper())
    if env_value is not None:
        return cast(env_value)
    if key in config:
        return cast(config[key])
    return default


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if not (hi > lo and n >= 2):
        raise ValueError(f"grid must satisfy hi > lo and n >= 2, got {text!r}")
    return lo, hi, n


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(repr(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_input_catalog(args, config):
    input_path = _resolve(args, "input", config, None, str)
    if input_path is None:
        raise FlarepotError("--input is required")
    fmt = _resolve(args, "format", config, "csv", str)
    scale = _resolve(args, "scale_goes", config, None, _parse_bool)
    if scale is None:
        scale = fmt == "noaa-xrs"  # raw NOAA reports carry the scaled fluxes
    catalog = load_catalog(input_path, format=fmt)
    if scale:
        catalog = scale_catalog(catalog)
    return catalog, input_path


def _out_dir(args, config) -> Path:
    out = Path(_resolve(args, "out_dir", config, ".", str))
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    config = _read_config_file(args.config)
    catalog, input_path = _load_input_catalog(args, config)
    out = _out_dir(args, config)
    save_catalog(catalog, out / "catalog.csv")
    stats = catalog_stats(catalog)
    _write_json(out / "stats.json", {
        "n_total": stats.n_total,
        "span_years": stats.span_years,
        "n_y": stats.n_y,
        "min_flux": stats.min_flux,
        "max_flux": stats.max_flux,
        "class_counts": stats.class_counts,
        "skipped_rows": stats.skipped_rows,
        "scaling_applied": stats.scaling_applied,
        "input": str(input_path),
    })
    print(f"ingest: {stats.n_total} events over {stats.span_years:.2f} yr "
          f"(n_y={stats.n_y:.1f}, skipped {stats.skipped_rows}) -> {out}")
    return EXIT_OK


def cmd_thresholds(args) -> int:
    config = _read_config_file(args.config)
    catalog, _ = _load_input_catalog(args, config)
    out = _out_dir(args, config)
    confidence = _resolve(args, "confidence", config, 0.95, float)
    grid_spec = _resolve(args, "grid", config, None, _parse_grid)
    if grid_spec is None:
        grid = default_threshold_grid(catalog)
    else:
        grid = np.linspace(grid_spec[0], grid_spec[1], grid_spec[2])

    mrl = mean_residual_life(catalog, grid, confidence)
    stability = parameter_stability(catalog, grid, confidence)
    _write_csv(out / "mrl.csv",
               ["u", "mean_excess", "ci_low", "ci_high", "n"],
               [(p.u, p.mean_excess, p.ci_low, p.ci_high, p.n_exceed) for p in mrl])
    _write_csv(out / "stability.csv",
               ["u", "shape", "se_shape", "mod_scale", "se_mod_scale", "n"],
               [(p.u, p.shape, p.se_shape, p.modified_scale, p.se_mod_scale, p.n_exceed)
                for p in stability])
    summary = suggest_onset(mrl, stability)
    summary["note"] = "onset suggestions are advisory; inspect the CSV sweeps"
    summary["grid_points"] = int(grid.size)
    summary["mrl_points"] = len(mrl)
    summary["stability_points"] = len(stability)
    _write_json(out / "thresholds_summary.json", summary)
    print(f"thresholds: {len(mrl)} MRL and {len(stability)} stability points -> {out}")
    if len(stability) < max(1, grid.size // 2):
        print("thresholds: fewer than half the grid points produced a fit", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_fit(args) -> int:
    config = _read_config_file(args.config)
    catalog, input_path = _load_input_catalog(args, config)
    out = _out_dir(args, config)
    threshold = _resolve(args, "threshold", config, None, float)
    if threshold is None:
        raise FlarepotError("--threshold is required for `fit`")
    confidence = _resolve(args, "confidence", config, 0.95, float)
    run_length = _resolve(args, "run_length", config, 1, int)

    exceedances = select_exceedances(catalog, threshold)
    ext = runs_extremal_index(catalog, threshold, run_length)
    if ext.theta < 0.8:
        print(f"warning: extremal index {ext.theta:.3f} < 0.8; exceedances are "
              f"clustered, consider declustering", file=sys.stderr)
    fit = fit_gpd(exceedances)
    shape_ci = profile_ci(exceedances.excesses, fit, "shape", confidence) \
        if fit.converged else None

    doc = {
        "format": "flarepot-fit",
        "version": FIT_DOCUMENT_VERSION,
        "fit": gpd_fit_to_dict(fit),
        "profile_shape": None if shape_ci is None else {
            "parameter": shape_ci.parameter,
            "mle": shape_ci.mle,
            "lower": shape_ci.lower,
            "upper": shape_ci.upper,
            "confidence": shape_ci.confidence,
            "lower_bracketed": shape_ci.lower_bracketed,
            "upper_bracketed": shape_ci.upper_bracketed,
        },
        "extremal_index": {
            "theta": ext.theta,
            "n_exceed": ext.n_exceed,
            "n_clusters": ext.n_clusters,
            "run_length": ext.run_length,
        },
        "context": {
            "input": str(input_path),
            "n_total": exceedances.n_total,
            "span_years": exceedances.span_years,
            "n_y": exceedances.n_y,
            "confidence": confidence,
            "excesses": [float(v) for v in exceedances.excesses],
        },
    }
    _write_json(out / "fit.json", doc)

    if fit.converged:
        diag = diagnostics(fit, exceedances.excesses)
        _write_csv(out / "diag_pp.csv", ["empirical", "model"],
                   [tuple(r) for r in diag.pp_points])
        _write_csv(out / "diag_qq.csv", ["model_quantile", "observed_excess"],
                   [tuple(r) for r in diag.qq_points])
        _write_csv(out / "diag_density.csv", ["excess", "empirical", "model"],
                   [tuple(r) for r in diag.density_points])
        _write_csv(out / "diag_loglog.csv",
                   ["log10_flux", "log10_empirical_sf", "log10_model_sf"],
                   [tuple(r) for r in diag.loglog_points])

    label = format_flare_class(threshold)
    print(f"fit: u={threshold:g} ({label}), {fit.n_exceed} exceedances, "
          f"shape={fit.params.shape:.4f} +- {fit.se_shape:.4f}, "
          f"scale={fit.params.scale:.4g}, converged={fit.converged} -> {out}")
    if not fit.converged:
        print("fit: optimizer did not converge; fit.json written with converged=false",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _load_fit_document(path: str):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "flarepot-fit":
        raise FlarepotError(f"{path} is not a flarepot fit document")
    if doc.get("version") != FIT_DOCUMENT_VERSION:
        raise FlarepotError(
            f"unsupported fit document version {doc.get('version')!r} in {path}"
        )
    fit = gpd_fit_from_dict(doc["fit"])
    context = doc.get("context", {})
    return fit, context


def cmd_returns(args) -> int:
    config = _read_config_file(args.config)
    fit_path = _resolve(args, "fit", config, None, str)
    if fit_path is None:
        raise FlarepotError("--fit is required for `returns`")
    fit, context = _load_fit_document(fit_path)
    if not fit.converged:
        raise FlarepotError("fit document holds a non-converged fit; refit first")
    excesses = np.asarray(context.get("excesses", []), dtype=float)
    if excesses.size == 0:
        raise FlarepotError("fit document lacks the excess sample needed for profile CIs")
    n_y = context.get("n_y")
    if n_y is None:
        raise FlarepotError("fit document lacks n_y")
    out = _out_dir(args, config)
    confidence = _resolve(args, "confidence", config, 0.95, float)
    years = _resolve(args, "years", config, DEFAULT_RETURN_YEARS, _parse_float_list)
    cycle_years = _resolve(args, "cycle_years", config, 11.0, float)
    decade_levels = _resolve(args, "decade_levels", config, DEFAULT_DECADE_LEVELS,
                             _parse_float_list)

    curve = return_curve(fit, excesses, years, n_y, confidence)
    rows = []
    flagged = 0
    for p in curve.points:
        rows.append((p.n_years, p.level, format_flare_class(p.level),
                     p.ci_low, p.ci_high, p.ci_ok))
        flagged += 0 if p.ci_ok else 1
    _write_csv(out / "return_levels.csv",
               ["N_years", "level_wm2", "level_class", "ci_low", "ci_high", "ci_ok"],
               rows)

    dense_years = np.geomspace(1.5, max(years) * 1.5, 25)
    dense = [(n, return_level(fit, n, n_y)) for n in dense_years
             if n * n_y * fit.zeta_u > 1.0]
    _write_csv(out / "return_curve.csv", ["N_years", "level_wm2", "level_class"],
               [(n, z, format_flare_class(z)) for n, z in dense])

    top = max(curve.points, key=lambda p: p.n_years).level
    grid = np.geomspace(fit.params.threshold, top * 1.5, 40)
    fc = cycle_forecast(fit, grid, n_y, cycle_years)
    _write_csv(out / "cycle_forecast.csv",
               ["level_wm2", "level_class", "p_single", "p_cycle", "expected_count"],
               [(float(x), format_flare_class(float(x)), float(ps), float(pc), float(ec))
                for x, ps, pc, ec in zip(fc.levels, fc.p_single, fc.p_cycle,
                                         fc.expected_count)])

    summary = {
        "table": [
            {
                "n_years": p.n_years,
                "level_wm2": p.level,
                "level_class": format_flare_class(p.level),
                "level_half_class": nearest_half_x_class(p.level),
                "ci_low": p.ci_low,
                "ci_high": p.ci_high,
                "ci_class": [nearest_half_x_class(p.ci_low),
                             nearest_half_x_class(p.ci_high)],
                "ci_ok": p.ci_ok,
            }
            for p in curve.points
        ],
        "decade_probabilities": {
            format_flare_class(level): decade_probability(fit, level, n_y)
            for level in decade_levels if level > fit.params.threshold
        },
        "confidence": confidence,
        "cycle_years": cycle_years,
        "n_y": n_y,
    }
    _write_json(out / "returns_summary.json", summary)
    for p in curve.points:
        print(f"returns: {p.n_years:g}-year level = {format_flare_class(p.level)} "
              f"({p.level:.3e} W/m^2), {confidence:.0%} CI "
              f"[{format_flare_class(p.ci_low)}, {format_flare_class(p.ci_high)}]")
    if flagged:
        print(f"returns: {flagged} CI endpoints not bracketed (flagged in CSV)",
              file=sys.stderr)
    return EXIT_OK


def cmd_deseason(args) -> int:
    config = _read_config_file(args.config)
    catalog, _ = _load_input_catalog(args, config)
    out = _out_dir(args, config)
    threshold = _resolve(args, "threshold", config, None, float)
    if threshold is None:
        raise FlarepotError("--threshold is required for `deseason`")
    confidence = _resolve(args, "confidence", config, 0.95, float)
    bin_days = _resolve(args, "bin_days", config, MONTH_DAYS, float)
    bin_stat = _resolve(args, "bin_stat", config, "count", str)
    n_freq = _resolve(args, "n_frequencies", config, 2, int)
    refine = bool(_resolve(args, "refine", config, False, _parse_bool))

    series = bin_series(catalog, bin_days, bin_stat)
    pg = periodogram(series)
    _write_csv(out / "periodogram.csv", ["freq_per_year", "power"],
               list(zip(pg.frequencies.tolist(), pg.power.tolist())))
    omegas = dominant_frequencies(pg, n_freq)
    if not omegas:
        raise FlarepotError("no periodogram peaks found; nothing to remove")

    # the subtraction model is fitted on the mean-flux series so its units
    # match the event fluxes, whatever statistic drove the periodogram
    flux_series = series if bin_stat == "mean_flux" else \
        bin_series(catalog, bin_days, "mean_flux")
    model = fit_seasonal(flux_series, omegas, refine=refine)
    _write_json(out / "seasonal_model.json", {
        "components": [
            {"omega_rad_per_year": w, "period_years": 2.0 * math.pi / w,
             "sin_amplitude": a, "cos_amplitude": b}
            for w, a, b in model.components
        ],
        "offset": model.offset,
        "epoch": model.epoch.strftime("%Y-%m-%dT%H:%M:%SZ"),
    })

    adjusted = deseasonalize(catalog, model)
    save_catalog(adjusted, out / "deseasonalized.csv")

    fit_before = fit_gpd(select_exceedances(catalog, threshold))
    fit_after = fit_gpd(select_exceedances(adjusted, threshold))
    ci_before = profile_ci(
        select_exceedances(catalog, threshold).excesses, fit_before, "shape", confidence
    ) if fit_before.converged else None
    summary = {
        "periods_years": [2.0 * math.pi / w for w in omegas],
        "original": gpd_fit_to_dict(fit_before),
        "deseasonalized": gpd_fit_to_dict(fit_after),
        "original_shape_ci": None if ci_before is None else
            [ci_before.lower, ci_before.upper],
        "shape_change_within_ci": None if ci_before is None else
            bool(ci_before.lower <= fit_after.params.shape <= ci_before.upper),
    }
    _write_json(out / "deseason_summary.json", summary)
    periods = ", ".join(f"{2.0 * math.pi / w:.1f} yr" for w in omegas)
    print(f"deseason: dominant periods {periods}; shape {fit_before.params.shape:.4f} "
          f"-> {fit_after.params.shape:.4f} after removal -> {out}")
    if not (fit_before.converged and fit_after.converged):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _read_config_file(args.config)
    out = _out_dir(args, config)
    kind = _resolve(args, "kind", config, "gpd", str)
    seed = _resolve(args, "seed", config, 0, int)
    n = _resolve(args, "n", config, 5000, int)
    rate = _resolve(args, "rate", config, 1799.0, float)
    rng = sim.rng_from_seed(seed)

    if kind in ("gpd", "exponential"):
        shape = 0.0 if kind == "exponential" else _resolve(args, "shape", config, 0.12, float)
        scale = _resolve(args, "scale", config, 5e-4, float)
        threshold = _resolve(args, "threshold", config, 5e-4, float)
        catalog = sim.gpd_catalog(n, shape, scale, threshold, rng, events_per_year=rate)
        path = out / "simulated.csv"
        save_catalog(catalog, path)
    elif kind == "moving-maximum":
        window = _resolve(args, "window", config, 3, int)
        catalog = sim.moving_maximum_catalog(n, window, rng, events_per_year=rate)
        path = out / "simulated.csv"
        save_catalog(catalog, path)
    elif kind == "two-tone":
        series = sim.two_tone_series(n, rng=rng)
        path = out / "series.csv"
        _write_csv(path, ["time_years", "value"],
                   list(zip(series.times_years().tolist(), series.values.tolist())))
    else:
        raise FlarepotError(f"unknown simulation kind: {kind!r}")
    print(f"simulate: {kind} (n={n}, seed={seed}) -> {path}")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", dest="out_dir", help="output directory (default: .)")
    sub.add_argument("--config", help="key=value config file")


def _add_input(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", help="input catalog file")
    sub.add_argument("--format", choices=["csv", "noaa-xrs"],
                     help="input format (default: csv)")
    scale = sub.add_mutually_exclusive_group()
    scale.add_argument("--scale-goes", dest="scale_goes", action="store_const",
                       const=True, help="divide fluxes by 0.7 on load "
                       "(default for noaa-xrs)")
    scale.add_argument("--no-scale-goes", dest="scale_goes", action="store_const",
                       const=False, help="keep fluxes as stored (default for csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flarepot",
        description="Peaks-over-threshold extreme value analysis for flare catalogs.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("ingest", help="parse a raw file into the canonical CSV")
    _add_input(p)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = subparsers.add_parser("thresholds", help="mean-residual-life and stability sweeps")
    _add_input(p)
    p.add_argument("--grid", type=_parse_grid, help="threshold grid as lo:hi:n")
    p.add_argument("--confidence", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_thresholds)

    p = subparsers.add_parser("fit", help="fit the excess model over a threshold")
    _add_input(p)
    p.add_argument("--threshold", type=float, help="threshold u in W/m^2")
    p.add_argument("--run-length", dest="run_length", type=int,
                   help="runs-declustering separation (default 1)")
    p.add_argument("--confidence", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = subparsers.add_parser("returns", help="return levels and cycle forecasts")
    p.add_argument("--fit", help="fit.json from the fit subcommand")
    p.add_argument("--years", type=_parse_float_list,
                   help="return periods, e.g. 11,20,38,50,100,110,150")
    p.add_argument("--confidence", type=float)
    p.add_argument("--cycle-years", dest="cycle_years", type=float,
                   help="solar cycle length (default 11)")
    p.add_argument("--decade-levels", dest="decade_levels", type=_parse_float_list,
                   help="flux levels for decade probabilities")
    _add_common(p)
    p.set_defaults(func=cmd_returns)

    p = subparsers.add_parser("deseason", help="remove solar-cycle periodicity and refit")
    _add_input(p)
    p.add_argument("--threshold", type=float, help="threshold u for the refit comparison")
    p.add_argument("--bin-days", dest="bin_days", type=float,
                   help="bin width in days (default: one mean month)")
    p.add_argument("--bin-stat", dest="bin_stat", choices=["count", "mean_flux"],
                   help="series statistic for the periodogram (default: count)")
    p.add_argument("--n-frequencies", dest="n_frequencies", type=int,
                   help="number of dominant frequencies to remove (default 2)")
    p.add_argument("--refine", dest="refine", action="store_const", const=True,
                   help="nonlinear refinement of the fitted frequencies")
    p.add_argument("--confidence", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_deseason)

    p = subparsers.add_parser("simulate", help="write a seeded synthetic dataset")
    p.add_argument("--kind", choices=["gpd", "exponential", "moving-maximum", "two-tone"])
    p.add_argument("--n", type=int, help="number of events or bins")
    p.add_argument("--seed", type=int)
    p.add_argument("--shape", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--rate", type=float, help="events per year for timestamps")
    p.add_argument("--window", type=int, help="moving-maximum window")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(ENV_PREFIX + "LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (FlarepotError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
