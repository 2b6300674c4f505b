"""Shared fixtures: one AcceptanceContext per session so censuses and meshes
are enumerated once and reused by every test module."""

import json
import math

import pytest

from orbitctl.acceptance import MAPS, AcceptanceContext


@pytest.fixture(scope="session")
def ctx():
    return AcceptanceContext()


@pytest.fixture(scope="session")
def square():
    return MAPS["square"]


@pytest.fixture(scope="session")
def basilica():
    return MAPS["basilica"]


@pytest.fixture(scope="session")
def cubic():
    return MAPS["cubic"]


@pytest.fixture(scope="session")
def square_db(ctx):
    return ctx.db("square", 12)


@pytest.fixture(scope="session")
def basilica_db(ctx):
    return ctx.db("basilica", 12)


@pytest.fixture(scope="session")
def basilica_db14(ctx):
    return ctx.db("basilica", 14)


@pytest.fixture(scope="session")
def cubic_db(ctx):
    return ctx.db("cubic", 8)


@pytest.fixture(scope="session")
def maxent_alpha(basilica_db):
    from orbitctl import thermo

    return thermo.maximal_entropy_alpha(basilica_db, 12)


@pytest.fixture
def map_file(tmp_path):
    """Writer for throwaway map JSON files (coefficients ascending)."""

    def write(name, numerator, denominator=((1.0, 0.0),)):
        path = tmp_path / f"{name}.json"
        payload = {
            "numerator": [list(c) for c in numerator],
            "denominator": [list(c) for c in denominator],
        }
        path.write_text(json.dumps(payload))
        return str(path)

    return write


@pytest.fixture
def basilica_file(map_file):
    return map_file("basilica", ((-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)))


@pytest.fixture
def square_file(map_file):
    return map_file("square", ((0.0, 0.0), (0.0, 0.0), (1.0, 0.0)))


LOG2 = math.log(2.0)
