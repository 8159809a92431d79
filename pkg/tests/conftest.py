import numpy as np
import pytest

from mycelink import ChannelSpec, StimulusSpec, make_square_wave, simulate_channel


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


@pytest.fixture
def channel_pair():
    """One clean 900 Hz recording through the reference channel."""
    stimulus = make_square_wave(StimulusSpec(900, 5.0, 0.2, 50_000))
    return simulate_channel(ChannelSpec(seed=42), stimulus, 900, replicate_id="r00")


def make_arx_recording(rng, n=3000, noise=0.01, rate=100.0):
    """Known-truth linear ARX pair: y = 0.1 + 0.4 y(k-1) + 0.6 x(k-1) + e."""
    x = rng.normal(0.0, 1.0, n)
    y = np.zeros(n)
    for k in range(1, n):
        y[k] = 0.1 + 0.4 * y[k - 1] + 0.6 * x[k - 1] + rng.normal(0.0, noise)
    return x, y
