from __future__ import annotations

import numpy as np
import pytest

from levdyn.params import ModelParams


@pytest.fixture
def std1() -> ModelParams:
    """Standard single-bank parameters."""
    return ModelParams(omegas=(0.5,), pis=(1.0,))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def two_bank(omega1: float, omega2: float, pi1: float) -> ModelParams:
    return ModelParams(omegas=(omega1, omega2), pis=(pi1, 1.0 - pi1))
