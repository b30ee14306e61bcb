import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from curveshift import SynthConfig, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(20231115)


@pytest.fixture(scope="session")
def small_dataset():
    """Ten noiseless days driven by the curve-shift process."""
    return generate_synthetic(SynthConfig(days=10, noise_sd=0.0), seed=5)


@pytest.fixture(scope="session")
def noisy_dataset():
    """Forty noisy days for fitting tests."""
    return generate_synthetic(SynthConfig(days=40, noise_sd=1.0), seed=6)
