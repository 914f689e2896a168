import numpy as np
import pytest

from tfsep.signal_io import AudioSignal

RATE = 44100


@pytest.fixture
def noise():
    def make(seconds=1.0, seed=0, rate=RATE):
        rng = np.random.default_rng(seed)
        return AudioSignal(rng.uniform(-0.5, 0.5, int(round(seconds * rate))), rate)
    return make
