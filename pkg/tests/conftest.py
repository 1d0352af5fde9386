import numpy as np
import pytest

from talbotlab.fields import SpectralField


def random_field(N, seed, decay=1.0, real=False):
    """Random spectral field with |c(k)| ~ <k>^-decay, reproducible by seed."""
    rng = np.random.default_rng(seed)
    k = np.arange(-N, N + 1)
    mag = (1.0 + k.astype(float) ** 2) ** (-decay / 2.0)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=2 * N + 1)
    c = mag * np.exp(1j * phase)
    if real:
        c = 0.5 * (c + np.conj(c[::-1]))
    return SpectralField(N, c)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
