import json
import pathlib

import pytest

from klpricer.process import GbmParams
from klpricer.pricing import AsianPayoffSpec

GOLDEN_PATH = pathlib.Path(__file__).parent / "golden.json"


@pytest.fixture(scope="session")
def golden():
    """Seed-pinned reference run (regenerated by scripts/regenerate_golden.py)."""
    return json.loads(GOLDEN_PATH.read_text())


@pytest.fixture(scope="session")
def golden_market(golden):
    return GbmParams(**golden["market"])


@pytest.fixture(scope="session")
def golden_spec(golden):
    return AsianPayoffSpec(strike=golden["strike"], monitoring_count=golden["monitoring_count"])
