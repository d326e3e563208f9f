import numpy as np
import pytest

from wgfock.emitter import EmitterSpec
from wgfock.modes import ExpMode


def random_spec(rng, N):
    return EmitterSpec(
        N=N,
        omega=[0.0] + list(rng.uniform(-2.0, 2.0, N)),
        gamma=[0.0] + list(rng.uniform(0.3, 6.0, N)),
    )


def random_mode(rng):
    return ExpMode(float(rng.uniform(0.2, 5.0)), float(rng.uniform(-3.0, 3.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
