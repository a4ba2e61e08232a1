"""Shared fixtures: the swing benchmark template and its certificate."""

import pytest

from simnet import SwingParams, closed_form_certificate, derive_gains
from simnet.swing import template_pair


@pytest.fixture(scope="session")
def swing_params():
    return SwingParams(n_nodes=3)


@pytest.fixture(scope="session")
def swing_pair(swing_params):
    return template_pair(swing_params)


@pytest.fixture(scope="session")
def swing_cert(swing_params):
    return closed_form_certificate(swing_params)


@pytest.fixture(scope="session")
def swing_gains(swing_cert, swing_pair):
    concrete, abstract = swing_pair
    return derive_gains(swing_cert, concrete, abstract)
