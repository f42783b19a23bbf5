import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from effdyn.checks import quartic_table

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile(
    "effdyn", deadline=None, max_examples=15, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("effdyn")


@pytest.fixture(scope="session")
def oracle():
    with open(FIXTURES / "oracle_values.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def lam6_table():
    """lambda = 6 table on [-1.2, 1.2], 121 nodes, default grid."""
    return quartic_table()
