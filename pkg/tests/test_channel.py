import logging

import numpy as np
import pytest

from core.channel import (
    AssociationSchedule,
    ChannelParams,
    SlotState,
    average_erasure,
    broadcast,
    erasure_profile,
    sample_slot,
    sample_slots,
    trial_rng,
)
from core.fieldcodec import Packet


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.2])
def test_params_reject_values_outside_open_interval(bad):
    with pytest.raises(ValueError):
        ChannelParams(delta_n=bad, delta_s=0.5, delta_d=0.3)


def test_ordering_lint_warns_but_accepts(caplog):
    with caplog.at_level(logging.WARNING, logger="core.channel"):
        p = ChannelParams(delta_n=0.2, delta_s=0.5, delta_d=0.3)
    assert p.delta_n == 0.2
    assert "worsens" in caplog.text


def test_dynamic_schedule_eta_range():
    with pytest.raises(ValueError):
        AssociationSchedule.dynamic(0.5)
    with pytest.raises(ValueError):
        AssociationSchedule.dynamic(0.2, 0.0)
    s = AssociationSchedule.dynamic(0.3)
    assert s.eta1 == s.eta2 == 0.3


def test_both_to_user_needs_valid_receiver():
    with pytest.raises(ValueError):
        AssociationSchedule.both_to_user(3)


def test_erasure_profile_dynamic_phases(base_params):
    sched = AssociationSchedule.dynamic(1 / 2.12)
    assert erasure_profile(sched, base_params, 1) == (0.3, 0.8)
    assert erasure_profile(sched, base_params, 2) == (0.8, 0.3)
    assert erasure_profile(sched, base_params, 3) == (0.5, 0.5)


def test_erasure_profile_static_schemes(base_params):
    for phase in (1, 2, 3, 0.0, 0.7, 1.0):
        assert erasure_profile(AssociationSchedule.no_ris(), base_params, phase) == (0.8, 0.8)
        assert erasure_profile(AssociationSchedule.neutral(), base_params, phase) == (0.5, 0.5)
        assert erasure_profile(AssociationSchedule.both_to_user(1), base_params, phase) == (0.3, 0.8)
        assert erasure_profile(AssociationSchedule.both_to_user(2), base_params, phase) == (0.8, 0.3)


def test_erasure_profile_normalized_time(base_params):
    sched = AssociationSchedule.dynamic(0.2, 0.3)
    assert erasure_profile(sched, base_params, 0.1) == (0.3, 0.8)
    assert erasure_profile(sched, base_params, 0.2) == (0.8, 0.3)
    assert erasure_profile(sched, base_params, 0.49) == (0.8, 0.3)
    assert erasure_profile(sched, base_params, 0.5) == (0.5, 0.5)


@pytest.mark.parametrize("phase", [0, 4, -1, 1.5])
def test_erasure_profile_rejects_bad_phase(base_params, phase):
    with pytest.raises(ValueError):
        erasure_profile(AssociationSchedule.dynamic(0.4), base_params, phase)


def test_average_erasure_matches_delta_bar(base_params):
    eta = 0.35
    d1, d2 = average_erasure(AssociationSchedule.dynamic(eta), base_params)
    expected = eta * (0.3 + 0.8) + (1 - 2 * eta) * 0.5
    assert d1 == pytest.approx(expected, abs=1e-15)
    assert d2 == pytest.approx(expected, abs=1e-15)


def test_sample_slot_symmetric_links(rng):
    states = sample_slots(0.4, 0.4, 100_000, rng)
    m1, m2 = states.mean(axis=0)
    sigma = np.sqrt(0.24 / 100_000)
    assert abs(m1 - m2) < 3 * np.sqrt(2) * sigma


def test_sample_slots_law_of_large_numbers():
    states = sample_slots(0.3, 0.8, 1_000_000, np.random.default_rng(7))
    assert states[:, 0].mean() == pytest.approx(0.7, abs=0.002)
    assert states[:, 1].mean() == pytest.approx(0.2, abs=0.002)


def test_links_are_uncorrelated():
    states = sample_slots(0.5, 0.5, 100_000, np.random.default_rng(11)).astype(float)
    corr = np.corrcoef(states[:, 0], states[:, 1])[0, 1]
    assert abs(corr) < 3 / np.sqrt(100_000)


def test_sample_slot_fixed_seed_is_reproducible():
    def draw(seed):
        rng = np.random.default_rng(seed)
        return [sample_slot(0.3, 0.6, rng) for _ in range(200)]

    assert draw(5) == draw(5)
    assert draw(5) != draw(6)


def test_bulk_and_single_draws_share_one_stream():
    bulk = sample_slots(0.3, 0.8, 500, np.random.default_rng(3))
    rng = np.random.default_rng(3)
    single = np.array([sample_slot(0.3, 0.8, rng) for _ in range(500)], dtype=np.uint8)
    assert np.array_equal(bulk, single)


def test_zero_erasure_always_delivers(rng):
    assert sample_slots(0.0, 0.0, 1000, rng).all()


def test_broadcast_semantics():
    x = Packet(id=0, owner=1, payload=np.arange(8, dtype=np.uint8))
    both = broadcast(x, SlotState(1, 1))
    assert both.received(1) is x and both.received(2) is x
    assert both.ack(1) and both.ack(2)

    only2 = broadcast(x, SlotState(0, 1))
    assert only2.received(1) is None and only2.received(2) is x
    assert only2.feedback == SlotState(0, 1)

    none = broadcast(x, SlotState(0, 0))
    assert none.received(1) is None and none.received(2) is None


def test_trial_streams_are_deterministic_and_distinct():
    a, b = trial_rng(7, 0), trial_rng(7, 0)
    assert np.array_equal(a.channel.random(10), b.channel.random(10))
    assert a.coeff_seed == b.coeff_seed
    c = trial_rng(7, 1)
    assert not np.array_equal(trial_rng(7, 0).channel.random(10), c.channel.random(10))
