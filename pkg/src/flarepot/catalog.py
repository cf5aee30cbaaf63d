"""Flare catalogs: class-label parsing, flux scaling, file readers, summary stats.

A catalog is an immutable, time-ordered sequence of events, each carrying a UTC
timestamp and a peak flux in W/m^2.  The canonical on-disk format is a CSV with
header ``timestamp,peak_flux_wm2[,class]`` (ISO-8601 UTC timestamps, LF line
endings).  A best-effort adapter for NOAA GOES XRS flare-report files converts
their fixed-width records into the same structure.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CatalogError, ParseError

logger = logging.getLogger(__name__)

DAYS_PER_YEAR = 365.25
SECONDS_PER_YEAR = DAYS_PER_YEAR * 86400.0

#: Minimum observation span, in years, assumed for degenerate (single-event or
#: single-instant) catalogs so that the per-year event rate stays finite.
MIN_SPAN_YEARS = 1.0 / DAYS_PER_YEAR

#: Multiplicative correction removing the historical GOES scaling: true fluxes
#: are the reported values divided by this factor.
GOES_SCALE_FACTOR = 0.7

_EPOCH_MIN = datetime(1970, 1, 1, tzinfo=timezone.utc)

#: W/m^2 per unit of the class number for each flare-class letter.
CLASS_MULTIPLIERS = {
    "A": 1e-8,
    "B": 1e-7,
    "C": 1e-6,
    "M": 1e-5,
    "X": 1e-4,
}

_CLASS_RE = re.compile(r"^\s*([ABCMX])\s*(\d+(?:\.\d+)?)\s*$")


def parse_flare_class(label: str) -> float:
    """Convert a flare-class label such as ``"X9.3"`` to a peak flux in W/m^2.

    The letter sets the decade (A=1e-8 ... X=1e-4) and the number multiplies
    it, so ``"X2"`` is 2e-4 and ``"X45"`` is 4.5e-3.
    """
    if not isinstance(label, str):
        raise ParseError(f"flare class must be a string, got {type(label).__name__}")
    m = _CLASS_RE.match(label.upper())
    if m is None:
        raise ParseError(f"malformed flare class label: {label!r}")
    letter, number = m.group(1), float(m.group(2))
    if number <= 0:
        raise ParseError(f"flare class number must be positive: {label!r}")
    return CLASS_MULTIPLIERS[letter] * number


def format_flare_class(flux: float, decimals: int = 1) -> str:
    """Format a flux in W/m^2 as a canonical flare-class label.

    The letter is chosen so the class number falls in [1, 10) for A-M; the X
    class is unbounded above (4.5e-3 formats as ``"X45"``).  Fluxes below the
    A-class base keep the A letter with a sub-1 number.  The number is rounded
    to ``decimals`` places and trailing zeros are stripped, so the result
    round-trips through :func:`parse_flare_class` at that resolution.
    """
    if not math.isfinite(flux) or flux <= 0:
        raise ValueError(f"flux must be positive and finite, got {flux!r}")
    for letter in ("X", "M", "C", "B"):
        if flux >= CLASS_MULTIPLIERS[letter]:
            break
    else:
        letter = "A"
    number = round(flux / CLASS_MULTIPLIERS[letter], decimals)
    text = f"{number:.{decimals}f}".rstrip("0").rstrip(".")
    return f"{letter}{text}"


def flare_class_letter(flux: float) -> str:
    """Classify a flux into its letter bucket (sub-A fluxes count as A)."""
    for letter in ("X", "M", "C", "B"):
        if flux >= CLASS_MULTIPLIERS[letter]:
            return letter
    return "A"


def apply_goes_scaling(flux, factor: float = GOES_SCALE_FACTOR):
    """Undo the GOES reporting scale on a flux value or array: flux / factor.

    ``factor`` must lie in (0, 1]; ``factor == 1`` is the identity.  Use
    :func:`scale_catalog` to apply the correction catalog-wide with an
    idempotence guard.
    """
    if not 0 < factor <= 1:
        raise ValueError(f"scaling factor must be in (0, 1], got {factor!r}")
    arr = np.asarray(flux, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("flux values must be positive")
    out = arr / factor
    return float(out) if np.isscalar(flux) or arr.ndim == 0 else out


@dataclass(frozen=True)
class FlareEvent:
    """One catalog row: event timestamp, peak flux in W/m^2, optional class label."""

    timestamp: datetime
    peak_flux: float
    source_class: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.peak_flux) and self.peak_flux > 0):
            raise ValueError(f"peak_flux must be positive and finite, got {self.peak_flux!r}")


@dataclass(frozen=True)
class Catalog:
    """Immutable, time-ordered flare catalog.

    Events are sorted by timestamp at construction (ties keep input order, so
    duplicate timestamps are retained).  Derived quantities (flux array, span,
    per-year rate) are computed lazily and cached; instances are safe to share
    across threads.
    """

    events: tuple[FlareEvent, ...]
    scaling_applied: bool = False
    skipped_rows: int = 0

    def __post_init__(self):
        if len(self.events) == 0:
            raise CatalogError("catalog must contain at least one event")
        events = tuple(sorted(self.events, key=lambda e: e.timestamp))
        object.__setattr__(self, "events", events)

    @property
    def n_total(self) -> int:
        return len(self.events)

    @cached_property
    def fluxes(self) -> np.ndarray:
        return np.array([e.peak_flux for e in self.events], dtype=float)

    @cached_property
    def timestamps(self) -> tuple[datetime, ...]:
        return tuple(e.timestamp for e in self.events)

    @property
    def span_years(self) -> float:
        """Fractional years between first and last event, floored at one day."""
        delta = (self.events[-1].timestamp - self.events[0].timestamp).total_seconds()
        return max(delta / SECONDS_PER_YEAR, MIN_SPAN_YEARS)

    @property
    def n_y(self) -> float:
        """Average number of events per year over the observed span."""
        return self.n_total / self.span_years

    def seconds_from_start(self) -> np.ndarray:
        """Event offsets from the first event, in seconds."""
        t0 = self.events[0].timestamp
        return np.array([(e.timestamp - t0).total_seconds() for e in self.events])

    def years_from_start(self) -> np.ndarray:
        return self.seconds_from_start() / SECONDS_PER_YEAR


def scale_catalog(catalog: Catalog, factor: float = GOES_SCALE_FACTOR) -> Catalog:
    """Apply the GOES flux correction to every event of a catalog.

    Raises :class:`CatalogError` if the catalog is already scaled: the
    correction is not idempotent and must be applied exactly once.
    """
    if catalog.scaling_applied:
        raise CatalogError("catalog is already GOES-scaled; refusing to scale twice")
    events = tuple(
        replace(e, peak_flux=apply_goes_scaling(e.peak_flux, factor)) for e in catalog.events
    )
    return Catalog(events=events, scaling_applied=True, skipped_rows=catalog.skipped_rows)


@dataclass(frozen=True)
class CatalogStats:
    """Summary of a catalog for reporting: counts, span, rate, flux range."""

    n_total: int
    span_years: float
    n_y: float
    min_flux: float
    max_flux: float
    class_counts: dict
    skipped_rows: int
    scaling_applied: bool


def catalog_stats(catalog: Catalog) -> CatalogStats:
    """Compute summary statistics; class counts partition the event count."""
    fluxes = catalog.fluxes
    counts: dict[str, int] = {letter: 0 for letter in "ABCMX"}
    for f in fluxes:
        counts[flare_class_letter(f)] += 1
    return CatalogStats(
        n_total=catalog.n_total,
        span_years=catalog.span_years,
        n_y=catalog.n_y,
        min_flux=float(fluxes.min()),
        max_flux=float(fluxes.max()),
        class_counts=counts,
        skipped_rows=catalog.skipped_rows,
        scaling_applied=catalog.scaling_applied,
    )


# --- file readers -----------------------------------------------------------

_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def _parse_timestamp(text: str) -> datetime:
    ts = datetime.strptime(text.strip(), _TS_FORMAT).replace(tzinfo=timezone.utc)
    now = datetime.now(timezone.utc) + timedelta(days=1)
    if not _EPOCH_MIN <= ts <= now:
        raise ValueError(f"timestamp out of accepted range: {text!r}")
    return ts


def format_timestamp(ts: datetime) -> str:
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc)
    return ts.strftime(_TS_FORMAT)


def _read_canonical_csv(lines) -> tuple[list[FlareEvent], int]:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file: no CSV header") from None
    header = [h.strip().lower() for h in header]
    if header[:2] != ["timestamp", "peak_flux_wm2"]:
        raise ParseError(
            "bad CSV header: expected 'timestamp,peak_flux_wm2[,class]', got "
            + ",".join(header)
        )
    has_class = len(header) > 2 and header[2] == "class"
    events: list[FlareEvent] = []
    skipped = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            ts = _parse_timestamp(row[0])
            flux = float(row[1])
            if not (math.isfinite(flux) and flux > 0):
                raise ValueError("flux must be positive")
        except (ValueError, IndexError) as exc:
            logger.debug("skipping row %d: %s", lineno, exc)
            skipped += 1
            continue
        label = row[2].strip() if has_class and len(row) > 2 and row[2].strip() else None
        events.append(FlareEvent(timestamp=ts, peak_flux=flux, source_class=label))
    return events, skipped


# NOAA GOES XRS flare-report records ("31777" event code).  Layout varies
# across GOES generations; this adapter extracts the fields that are stable:
#   columns 1-11   event code "31777" + YYMMDD (two-digit year, 1966 pivot)
#   columns 14-28  start / max / end times as HHMM (max time may be missing)
#   class field    letter + number, either "X 97" (tenths, no dot) or "X9.7"
# The peak flux is derived from the class label; the importance number in
# tenths is the convention used in the archived goes-xrs-report files.
_NOAA_DATE_RE = re.compile(r"^3[01]777(\d{2})(\d{2})(\d{2})")
_NOAA_CLASS_RE = re.compile(r"\b([ABCMX])\s?(\d{1,3})(?:\.(\d))?\b")
_NOAA_TIME_RE = re.compile(r"\b(\d{4})\b")


def _read_noaa_xrs(lines) -> tuple[list[FlareEvent], int]:
    events: list[FlareEvent] = []
    skipped = 0
    for raw in lines:
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        m = _NOAA_DATE_RE.match(line)
        if m is None:
            skipped += 1
            continue
        yy, mm, dd = (int(g) for g in m.groups())
        year = 1900 + yy if yy >= 66 else 2000 + yy
        rest = line[m.end():]
        times = _NOAA_TIME_RE.findall(rest[:20])
        cm = _NOAA_CLASS_RE.search(rest[20:46]) or _NOAA_CLASS_RE.search(rest)
        if cm is None:
            skipped += 1
            continue
        letter, whole, frac = cm.group(1), cm.group(2), cm.group(3)
        if frac is not None:
            label = f"{letter}{whole}.{frac}"
        else:
            # archived reports give the importance in tenths: "97" means 9.7
            label = f"{letter}{int(whole) / 10:.1f}"
        try:
            flux = parse_flare_class(label)
            hhmm = times[1] if len(times) > 1 else (times[0] if times else "0000")
            hour, minute = int(hhmm[:2]), int(hhmm[2:])
            if hour > 23:  # events crossing midnight are stamped 24xx in some files
                hour, minute = 23, 59
            ts = datetime(year, mm, dd, hour, minute, tzinfo=timezone.utc)
            if not _EPOCH_MIN <= ts <= datetime.now(timezone.utc) + timedelta(days=1):
                raise ValueError("timestamp out of range")
        except (ParseError, ValueError):
            skipped += 1
            continue
        events.append(FlareEvent(timestamp=ts, peak_flux=flux, source_class=label))
    return events, skipped


def load_catalog(path, format: str = "csv") -> Catalog:
    """Read a flare catalog from disk.

    ``format`` is ``"csv"`` (canonical schema) or ``"noaa-xrs"`` (fixed-width
    GOES flare reports).  Rows that cannot be parsed are skipped and counted in
    ``Catalog.skipped_rows``; a file yielding zero valid rows is an error.
    Input order does not matter: events are sorted on construction.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"catalog file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        if format == "csv":
            events, skipped = _read_canonical_csv(fh)
        elif format == "noaa-xrs":
            events, skipped = _read_noaa_xrs(fh)
        else:
            raise ValueError(f"unknown catalog format: {format!r}")
    if not events:
        raise CatalogError(f"no valid rows in {path} ({skipped} skipped)")
    if skipped:
        logger.warning("%s: skipped %d unparseable rows", path, skipped)
    return Catalog(events=tuple(events), skipped_rows=skipped)


def save_catalog(catalog: Catalog, path) -> None:
    """Write a catalog in the canonical CSV format (UTF-8, LF line endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp", "peak_flux_wm2", "class"])
    for e in catalog.events:
        writer.writerow([
            format_timestamp(e.timestamp),
            repr(e.peak_flux),
            e.source_class or format_flare_class(e.peak_flux),
        ])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def catalog_from_fluxes(
    fluxes,
    start: datetime | None = None,
    events_per_year: float = 1799.0,
) -> Catalog:
    """Build a catalog from raw flux values with evenly spaced timestamps.

    Convenience for simulations and array-based workflows where only the event
    order matters; ``events_per_year`` sets the synthetic event rate.
    """
    fluxes = np.asarray(fluxes, dtype=float)
    if fluxes.size == 0:
        raise CatalogError("catalog must contain at least one event")
    if start is None:
        start = datetime(1980, 1, 1, tzinfo=timezone.utc)
    step = SECONDS_PER_YEAR / float(events_per_year)
    events = tuple(
        FlareEvent(timestamp=start + timedelta(seconds=i * step), peak_flux=float(f))
        for i, f in enumerate(fluxes)
    )
    return Catalog(events=events)
