from pathlib import Path

import pytest

from adtsched.parser import load, parse_or_raise
from adtsched.preprocess import preprocess
from adtsched.scheduler import min_schedule

REPO = Path(__file__).resolve().parents[1]
TREASURE = REPO / "examples" / "treasure_hunters.adt"


@pytest.fixture(scope="session")
def treasure():
    return load(TREASURE)


@pytest.fixture(scope="session")
def treasure_schedules(treasure):
    return min_schedule(preprocess(treasure))


@pytest.fixture(scope="session")
def h_schedule(treasure_schedules):
    (s,) = [s for s in treasure_schedules if not s.no_attack]
    return s


def tree(text):
    return parse_or_raise(text)
