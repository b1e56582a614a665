import json
from pathlib import Path

import numpy as np
import pytest

import freetci

SCHEMA_PATH = Path(freetci.__file__).parent / "schemas" / "report.schema.json"


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture(scope="session")
def report_schema():
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
