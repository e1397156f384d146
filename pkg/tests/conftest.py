import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.append(str(PROJECT_ROOT))

from core.channel import ChannelParams  # noqa: E402

BASE_ETA = 1 / 2.12


@pytest.fixture
def base_params() -> ChannelParams:
    return ChannelParams(delta_n=0.8, delta_s=0.5, delta_d=0.3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def ordered_params(rng: np.random.Generator) -> ChannelParams:
    """Random params with delta_d <= delta_s <= delta_n, each inside (0.01, 0.99)."""
    dd, ds, dn = np.sort(rng.uniform(0.01, 0.99, size=3))
    return ChannelParams(delta_n=float(dn), delta_s=float(ds), delta_d=float(dd))
