from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gpfractal.scale import (
    ExpLogScale,
    LogScale,
    PowerLogScale,
    PowerScale,
)


@pytest.fixture(scope="session")
def registry():
    """The built-in family instances exercised across the suite."""
    return [
        PowerScale(0.4),
        PowerLogScale(0.3, 1.0),
        PowerLogScale(0.3, -1.0),
        ExpLogScale(0.3),
        ExpLogScale(0.7),
        LogScale(1.0),
    ]


@pytest.fixture(scope="session")
def concave_registry():
    """Families declaring concavity near 0, with representative params.

    H = 1 is excluded: gamma(r) = r gives the degenerate rank-one
    process B(t) = t * xi, whose conditional variances vanish.
    """
    return [
        PowerScale(0.3),
        PowerScale(0.5),
        PowerScale(0.75),
        PowerLogScale(0.3, -1.0),
        ExpLogScale(0.3),
        ExpLogScale(0.7),
        LogScale(1.0),
    ]


@pytest.fixture()
def rng():
    # fresh generator per test: results never depend on execution order
    return np.random.default_rng(20240817)
