import warnings

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _quiet_sobol():
    # scipy warns when Sobol sample counts are not powers of two; the
    # samplers in the package round up internally, and direction grids
    # deliberately over-draw.
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*balance properties of Sobol.*")
        yield


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
