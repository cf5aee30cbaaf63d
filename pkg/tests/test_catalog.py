from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from flarepot.catalog import (
    Catalog,
    FlareEvent,
    catalog_stats,
    load_catalog,
    save_catalog,
    scale_catalog,
)
from flarepot.errors import CatalogError

from conftest import make_catalog

UTC = timezone.utc

CSV_3ROWS = """timestamp,peak_flux_wm2
2001-01-01T00:00:00Z,1e-6
2003-06-15T12:30:00Z,5e-4
2002-03-04T05:06:07Z,2e-5
"""


def test_load_three_row_csv(tmp_path):
    path = tmp_path / "cat.csv"
    path.write_text(CSV_3ROWS)
    cat = load_catalog(path)
    assert cat.n_total == 3
    assert cat.skipped_rows == 0
    # sorted regardless of input order
    assert list(cat.fluxes) == [1e-6, 2e-5, 5e-4]
    assert cat.events[0].timestamp.year == 2001


def test_load_is_invariant_under_row_permutation(tmp_path):
    lines = CSV_3ROWS.strip().splitlines()
    header, rows = lines[0], lines[1:]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("\n".join([header] + rows) + "\n")
    b.write_text("\n".join([header] + rows[::-1]) + "\n")
    ca, cb = load_catalog(a), load_catalog(b)
    assert [e.timestamp for e in ca.events] == [e.timestamp for e in cb.events]
    np.testing.assert_array_equal(ca.fluxes, cb.fluxes)


def test_malformed_rows_skipped_and_counted(tmp_path):
    path = tmp_path / "cat.csv"
    path.write_text(
        "timestamp,peak_flux_wm2\n"
        "2001-01-01T00:00:00Z,1e-6\n"
        "2001-01-02T00:00:00Z,not-a-number\n"
        "2001-01-03T00:00:00Z,2e-6\n"
    )
    cat = load_catalog(path)
    assert cat.n_total == 2
    assert cat.skipped_rows == 1


@pytest.mark.parametrize("bad_row", [
    "1969-12-31T23:59:59Z,1e-6",   # before the epoch floor
    "2001-01-01T00:00:00Z,-1e-6",  # nonpositive flux
    "2001-01-01T00:00:00Z,0",
    "garbage,1e-6",
])
def test_invalid_rows_are_skipped(tmp_path, bad_row):
    path = tmp_path / "cat.csv"
    path.write_text(
        "timestamp,peak_flux_wm2\n2001-01-01T00:00:00Z,1e-6\n" + bad_row + "\n"
    )
    cat = load_catalog(path)
    assert cat.n_total == 1
    assert cat.skipped_rows == 1


def test_zero_valid_rows_is_an_error(tmp_path):
    path = tmp_path / "cat.csv"
    path.write_text("timestamp,peak_flux_wm2\nnope,nope\n")
    with pytest.raises(CatalogError):
        load_catalog(path)


def test_missing_file_names_the_path(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(FileNotFoundError) as err:
        load_catalog(missing)
    assert str(missing) in str(err.value)


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "cat.csv"
    path.write_text("time,flux\n2001-01-01T00:00:00Z,1e-6\n")
    with pytest.raises(Exception):
        load_catalog(path)


def test_save_load_round_trip(tmp_path):
    cat = make_catalog([1e-6, 5e-4, 2e-5])
    path = tmp_path / "cat.csv"
    save_catalog(cat, path)
    back = load_catalog(path)
    assert back.n_total == cat.n_total
    np.testing.assert_allclose(back.fluxes, cat.fluxes, rtol=0)
    assert back.timestamps == cat.timestamps


def test_duplicate_timestamps_both_retained():
    ts = datetime(2001, 1, 1, tzinfo=UTC)
    cat = Catalog(events=(
        FlareEvent(timestamp=ts, peak_flux=1e-6),
        FlareEvent(timestamp=ts, peak_flux=2e-6),
        FlareEvent(timestamp=ts + timedelta(hours=1), peak_flux=3e-6),
    ))
    assert cat.n_total == 3


def test_nonpositive_flux_rejected_at_event_level():
    with pytest.raises(ValueError):
        FlareEvent(timestamp=datetime(2001, 1, 1, tzinfo=UTC), peak_flux=0.0)


class TestCatalogStats:
    def test_ny_is_count_over_span(self):
        start = datetime(2000, 1, 1, tzinfo=UTC)
        # 10 events spanning exactly 2.0 years (last - first = 730.5 days)
        step = timedelta(days=730.5 / 9)
        events = tuple(
            FlareEvent(timestamp=start + i * step, peak_flux=1e-6) for i in range(10)
        )
        cat = Catalog(events=events)
        stats = catalog_stats(cat)
        assert stats.span_years == pytest.approx(2.0, abs=1e-9)
        assert stats.n_y == pytest.approx(5.0, abs=1e-8)

    def test_single_event_span_floored_at_one_day(self):
        cat = make_catalog([1e-6][:1])
        assert cat.span_years == pytest.approx(1 / 365.25)
        assert np.isfinite(cat.n_y)

    def test_class_counts_partition_n_total(self, rng):
        fluxes = rng.uniform(5e-9, 5e-3, size=200)
        cat = make_catalog(fluxes)
        stats = catalog_stats(cat)
        assert sum(stats.class_counts.values()) == stats.n_total == 200

    def test_min_max(self):
        stats = catalog_stats(make_catalog([1e-6, 5e-4, 2e-5]))
        assert stats.min_flux == 1e-6
        assert stats.max_flux == 5e-4


class TestScaleCatalog:
    def test_scales_every_event_and_sets_flag(self):
        cat = make_catalog([7e-4, 1.4e-3])
        scaled = scale_catalog(cat)
        assert scaled.scaling_applied
        np.testing.assert_allclose(scaled.fluxes, [1e-3, 2e-3], rtol=1e-12)

    def test_double_scaling_is_a_state_error(self):
        cat = scale_catalog(make_catalog([7e-4]))
        with pytest.raises(CatalogError):
            scale_catalog(cat)

    def test_preserves_flux_ordering(self, rng):
        fluxes = rng.uniform(1e-6, 1e-3, size=50)
        cat = make_catalog(fluxes)
        scaled = scale_catalog(cat)
        assert np.all(np.argsort(scaled.fluxes) == np.argsort(cat.fluxes))


NOAA_FIXTURE = """\
31777170906  0849 0902 0910 S09W34 X 97    G15  2.2E-01 12673
31777170906  0717 0720 0726 S08W32 M 17    G15  1.1E-02 12673
31777001122  2359 //// 0012 N03E15 C 50    G08  1.0E-03 09236
this line is garbage and must be skipped
31777751104  0512 0530 0545        M 30    GO1  5.0E-03
"""


class TestNoaaAdapter:
    def test_parses_fixture_lines(self, tmp_path):
        path = tmp_path / "goes.txt"
        path.write_text(NOAA_FIXTURE)
        cat = load_catalog(path, format="noaa-xrs")
        assert cat.n_total == 4
        assert cat.skipped_rows == 1
        # X 97 means X9.7 in the archived convention
        assert cat.fluxes.max() == pytest.approx(9.7e-4, rel=1e-12)
        # two-digit years pivot into the GOES era
        years = sorted(e.timestamp.year for e in cat.events)
        assert years == [1975, 2000, 2017, 2017]

    def test_max_time_used_when_present(self, tmp_path):
        path = tmp_path / "goes.txt"
        path.write_text(NOAA_FIXTURE)
        cat = load_catalog(path, format="noaa-xrs")
        big = max(cat.events, key=lambda e: e.peak_flux)
        assert (big.timestamp.hour, big.timestamp.minute) == (9, 2)

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "goes.txt"
        path.write_text(NOAA_FIXTURE)
        with pytest.raises(ValueError):
            load_catalog(path, format="fits")
