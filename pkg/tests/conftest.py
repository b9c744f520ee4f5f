import numpy as np
import pytest

from securewave.channel import ChannelRealization


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_channel(rng, n, noise=1.0, taps=None):
    taps = taps or min(n, 4)
    return ChannelRealization.from_taps(random_complex(rng, taps) / np.sqrt(2 * taps), n, noise)


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line to the real terminal, then assert."""

    def _report(name: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return _report
