"""Shared fixtures.

The bundled pentagon scenario doubles as the reference configuration for
most integration-level tests, so it is resolved once per session here.
"""

import numpy as np
import pytest

from enclosim import resolve_scenario, scenario_envelope


@pytest.fixture(scope="session")
def golden_scenario():
    return resolve_scenario("pentagon_sine")


@pytest.fixture(scope="session")
def golden_envelope(golden_scenario):
    return scenario_envelope(golden_scenario)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
