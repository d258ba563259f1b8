import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

import bwlab
from bwlab import BwParams

FIXTURES = Path(bwlab.__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def specimen_bw() -> BwParams:
    with open(FIXTURES / "specimen_bw.json") as fh:
        return BwParams.from_dict(json.load(fh))


@pytest.fixture(scope="session")
def specimen_mbwbn() -> BwParams:
    with open(FIXTURES / "specimen_mbwbn.json") as fh:
        return BwParams.from_dict(json.load(fh))
