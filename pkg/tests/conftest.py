import warnings

import numpy as np
import pytest

from frfsim.composite import LabelQualityWarning, build_composite, truncate_dressed
from frfsim.presets import circuit_table1


def pytest_configure(config):
    # the strongly hybridized |1,2,1| label sits right at the warn threshold
    warnings.simplefilter("ignore", LabelQualityWarning)


@pytest.fixture(scope="session")
def table1():
    return circuit_table1()


@pytest.fixture(scope="session")
def spectrum_full(table1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LabelQualityWarning)
        return build_composite(table1)


@pytest.fixture(scope="session")
def spectrum45(spectrum_full):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LabelQualityWarning)
        return truncate_dressed(spectrum_full, 45)


@pytest.fixture(scope="session")
def constants45(spectrum45):
    from frfsim.composite import interaction_constants

    return interaction_constants(spectrum45)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
