"""End-to-end checks at full block length; run with `pytest -m slow`."""
import os

import numpy as np
import pytest

from core.channel import ChannelParams
from core.protocol import ProtocolConfig, monte_carlo, simulate
from core.regions import max_sum_rate, outer_region
from tests.conftest import BASE_ETA
from tests.reference_sim import reference_simulate

pytestmark = pytest.mark.slow

BOUND = 0.716981


@pytest.fixture(scope="module")
def full_run():
    params = ChannelParams(delta_n=0.8, delta_s=0.5, delta_d=0.3)
    config = ProtocolConfig(params=params, n=200_000, seed=7)
    return monte_carlo(config, trials=50, threads=os.cpu_count() or 1)


def test_protocol_reaches_the_outer_bound(full_run):
    assert full_run.decode_failures == 0
    assert full_run.mean_sum_rate == pytest.approx(BOUND, rel=0.01)
    assert 0.710 <= full_run.mean_sum_rate <= 0.724
    bound = max_sum_rate(outer_region(full_run.config.params, BASE_ETA, BASE_ETA))[1]
    assert full_run.mean_sum_rate <= bound + 3 * full_run.std_sum_rate / np.sqrt(50)


def test_phase_fractions_concentrate(full_run):
    f1, f2, f3 = full_run.mean_phase_fractions
    assert f1 == pytest.approx(BASE_ETA, abs=0.005)
    assert f2 == pytest.approx(BASE_ETA, abs=0.005)
    assert f3 == pytest.approx(1 - 2 * BASE_ETA, abs=0.005)
    assert full_run.mean_eta1 == pytest.approx(BASE_ETA, abs=0.005)


def test_throughput_converges_with_block_length():
    params = ChannelParams(delta_n=0.8, delta_s=0.5, delta_d=0.3)
    trials = 8
    gaps, bands = [], []
    for n in (10_000, 100_000, 1_000_000):
        summary = monte_carlo(ProtocolConfig(params=params, n=n, seed=11), trials=trials, threads=os.cpu_count() or 1)
        assert summary.decode_failures == 0
        band = 3 * summary.std_sum_rate / np.sqrt(trials)
        # Never above the outer bound beyond noise
        assert summary.mean_sum_rate <= BOUND + band
        gaps.append(abs(summary.mean_sum_rate - BOUND))
        bands.append(band)
    for k in range(len(gaps) - 1):
        assert gaps[k + 1] <= gaps[k] + np.hypot(bands[k], bands[k + 1]), (gaps, bands)


def test_small_instances_match_reference_simulator():
    rng = np.random.default_rng(99)
    for _ in range(10):
        dn, ds, dd = rng.uniform(0.05, 0.95, size=3)
        params = ChannelParams(delta_n=float(dn), delta_s=float(ds), delta_d=float(dd))
        for seed in rng.integers(0, 2**32, size=20):
            config = ProtocolConfig(params=params, n=10**6, m=3, payload_len=8, seed=int(seed), eta=0.3)
            fast = simulate(config)
            slow = reference_simulate(config)
            assert fast.decode_ok and slow["decode_ok"]
            for key in ("slots_phase1", "slots_phase2", "slots_phase3", "q1_len", "q2_len", "total_slots"):
                assert getattr(fast, key) == slow[key], (key, params, int(seed))
