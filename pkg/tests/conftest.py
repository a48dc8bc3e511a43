import numpy as np
import pytest

from ontodist import _backend, _fallback


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    if request.param == "compiled":
        if _backend._compiled is None:
            pytest.skip("compiled kernels not built")
    else:
        monkeypatch.setattr(_backend, "_compiled", None)
    yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def kernel_modules():
    mods = [_fallback]
    if _backend._compiled is not None:
        mods.append(_backend._compiled)
    return mods
