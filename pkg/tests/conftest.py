import os
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from flarepot.catalog import Catalog, FlareEvent

# Path to a real GOES flare catalog in the canonical CSV format (already
# GOES-scaled).  The paper-reproduction tests run only when it is present;
# see the README for how to build it from the NOAA archive.
GOES_CATALOG_ENV = "FLAREPOT_GOES_CATALOG"


def goes_catalog_path():
    path = os.environ.get(GOES_CATALOG_ENV, os.path.join("data", "goes_flares.csv"))
    return path if os.path.exists(path) else None


requires_goes = pytest.mark.skipif(
    goes_catalog_path() is None,
    reason="informational: real GOES catalog not available "
    f"(set {GOES_CATALOG_ENV} or place data/goes_flares.csv)",
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_catalog(fluxes, start=None, spacing_hours=6.0, scaling_applied=False):
    """Catalog with evenly spaced timestamps, preserving flux order."""
    start = start or datetime(2000, 1, 1, tzinfo=timezone.utc)
    events = tuple(
        FlareEvent(timestamp=start + timedelta(hours=i * spacing_hours), peak_flux=float(f))
        for i, f in enumerate(fluxes)
    )
    return Catalog(events=events, scaling_applied=scaling_applied)
