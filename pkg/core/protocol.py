# /core/protocol.py
"""
Three-phase opportunistic protocol over the two erasure links.

Phase 1 (2): packets for Rx1 (Rx2) are sent until at least one receiver gets
each; packets only the other receiver got go to a virtual queue.
Phase 3: the two virtual queues are summed pairwise and the combined stream is
sent with the systematic fountain code until both receivers reach full rank.
Association switches when a phase completes (event-driven), and each receiver
recovers its queued packets by cancelling its side information.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.channel import (
    AssociationSchedule,
    ChannelParams,
    erasure_profile,
    sample_slot,
    sample_slots,
    trial_rng,
)
from core.errors import ParameterError
from core.fieldcodec import (
    FountainEncoder,
    FountainReceiver,
    Packet,
    combine,
    make_packets,
    zero_packet,
)
from core.regions import region_for, symmetric_point

logger = logging.getLogger(__name__)

SchemeLabel = Literal["dynamic", "noris", "neutral", "user1", "user2"]


def optimal_eta(params: ChannelParams) -> float:
    """Phase fraction for which phase 3 fills exactly the remaining (1 - 2*eta)*n slots."""
    dn, ds, dd = params.as_tuple()
    return (1.0 - ds) / (2.0 * (1.0 - ds) + dd * (1.0 - dn))


def expected_phase_slots(params: ChannelParams, m: int) -> tuple[float, float, float]:
    """Average durations of the three phases for m packets per user (dynamic association)."""
    dn, ds, dd = params.as_tuple()
    uncoded = m / (1.0 - dd * dn)
    coded = dd * (1.0 - dn) * m / ((1.0 - ds) * (1.0 - dd * dn))
    return uncoded, uncoded, coded


def expected_queue_len(m: int, d_own: float, d_other: float) -> float:
    return m * d_own * (1.0 - d_other) / (1.0 - d_own * d_other)


# ---------------- Configuration ----------------

class ProtocolConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ChannelParams
    n: int = Field(ge=2)
    eta: float | None = Field(default=None, gt=0.0, lt=0.5)
    m: int | None = Field(default=None, ge=1)
    m2: int | None = Field(default=None, ge=1)
    payload_len: int = Field(default=64, ge=1)
    seed: int = Field(default=1, ge=0, lt=2**64)
    generation_size: int = Field(default=32, ge=1)
    scheme: SchemeLabel = "dynamic"

    @model_validator(mode="after")
    def _check_budget(self) -> "ProtocolConfig":
        m1, m2 = self.packets
        if m1 < 1:
            # Explicit m and m2 are >= 1 by field bounds, so m1 was derived from n and eta
            culprit = "eta" if self.eta is not None and self.scheme == "dynamic" else "n"
            value = getattr(self, culprit)
            raise ParameterError(culprit, f"{culprit}={value} leaves no packets to send; increase it")
        sched = self.schedule
        need = 0
        for phase, owner, mi in ((1, 1, m1), (2, 2, m2)):
            d1, d2 = erasure_profile(sched, self.params, phase)
            need += math.ceil(mi / (1.0 - d1 * d2))
        if self.n < need:
            raise ParameterError("n", f"n={self.n} cannot fit the uncoded phases ({need} slots expected)")
        return self

    @property
    def resolved_eta(self) -> float | None:
        if self.scheme != "dynamic":
            return None
        return self.eta if self.eta is not None else optimal_eta(self.params)

    @property
    def schedule(self) -> AssociationSchedule:
        return AssociationSchedule.from_label(self.scheme, self.resolved_eta)

    @property
    def packets(self) -> tuple[int, int]:
        if self.m is not None:
            m1 = self.m
        elif self.scheme == "dynamic":
            dn, dd = self.params.delta_n, self.params.delta_d
            m1 = math.floor((1.0 - dd * dn) * self.resolved_eta * self.n)
        else:
            m1 = math.floor(symmetric_point(region_for(self.schedule, self.params))[0] * self.n)
        return m1, (self.m2 if self.m2 is not None else m1)


# ---------------- Queues and results ----------------

@dataclass
class VirtualQueue:
    """Packets for `owner` that only the other receiver has; kept in transmission order."""

    owner: int
    entries: list[Packet] = field(default_factory=list)

    def append(self, packet: Packet) -> None:
        self.entries.append(packet)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> Packet:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)


@dataclass
class SimulationResult:
    slots_phase1: int
    slots_phase2: int
    slots_phase3: int
    q1_len: int
    q2_len: int
    total_slots: int
    m1: int
    m2: int
    sum_rate: float
    decode_ok: bool
    realized_eta1: float
    realized_eta2: float
    trial: int = 0

    def to_dict(self) -> dict:
        return {
            "slots_phase1": self.slots_phase1,
            "slots_phase2": self.slots_phase2,
            "slots_phase3": self.slots_phase3,
            "total_slots": self.total_slots,
            "sum_rate": self.sum_rate,
            "decode_ok": self.decode_ok,
        }


@dataclass
class MonteCarloSummary:
    config: ProtocolConfig
    results: list[SimulationResult]
    mean_sum_rate: float
    std_sum_rate: float
    mean_eta1: float
    mean_eta2: float
    mean_phase_fractions: tuple[float, float, float]
    decode_failures: int

    @property
    def trials(self) -> int:
        return len(self.results)


# ---------------- Phases ----------------

def _orient(profile: tuple[float, float], owner: int) -> tuple[float, float]:
    d_own, d_other = profile
    return (d_own, d_other) if owner == 1 else (d_other, d_own)


def run_uncoded_phase(
    packets: list[Packet],
    profile: tuple[float, float],
    rng: np.random.Generator,
    owner: int = 1,
) -> tuple[int, VirtualQueue, np.ndarray]:
    """
    Send each packet until some receiver gets it.

    `profile` is (d_own, d_other); link states are still drawn link 1 first.
    Returns the slot count, the virtual queue and a mask of the packets the
    owner received directly.
    """
    m = len(packets)
    d_own, d_other = profile
    if m < 1:
        raise ParameterError("m", "uncoded phase needs at least one packet")
    if d_own * d_other >= 1.0:
        raise ParameterError("profile", "both links always erase; the phase would never end")
    d1, d2 = _orient(profile, owner)
    own_col, other_col = (0, 1) if owner == 1 else (1, 0)

    queue = VirtualQueue(owner=owner)
    direct = np.zeros(m, dtype=bool)
    done = slots = 0
    while done < m:
        # Never draw more slots than packets left: no slot beyond the last completion is consumed
        states = sample_slots(d1, d2, m - done, rng)
        own, other = states[:, own_col], states[:, other_col]
        hits = np.flatnonzero(own | other)
        completed = done + np.arange(hits.size)
        direct[completed[own[hits] == 1]] = True
        for j in completed[own[hits] == 0]:
            queue.append(packets[j])
        slots += states.shape[0]
        done += hits.size
    return slots, queue, direct


def build_combined_queue(q1: VirtualQueue, q2: VirtualQueue, payload_len: int | None = None) -> list[Packet]:
    """combined[i] = q1[i] + q2[i]; the shorter queue is padded with zero packets."""
    K = max(len(q1), len(q2))
    if K == 0:
        return []
    length = payload_len or len((q1.entries or q2.entries)[0])
    zero = zero_packet(length)
    combined = []
    for i in range(K):
        a = q1[i] if i < len(q1) else zero
        b = q2[i] if i < len(q2) else zero
        combined.append(combine(a, b, packet_id=i))
    return combined


def repair_support(short1: list[int], short2: list[int]) -> list[int]:
    """
    Generations the next repair row spans, chosen from rank feedback.

    A generation both receivers still lack, else one generation each receiver
    lacks (each is already solved at the other receiver).
    Both lists must be ascending.
    """
    i = j = 0
    while i < len(short1) and j < len(short2):
        a, b = short1[i], short2[j]
        if a == b:
            return [a]
        if a < b:
            i += 1
        else:
            j += 1
    return sorted(([short1[0]] if short1 else []) + ([short2[0]] if short2 else []))


class CodedPhase:
    def __init__(
        self,
        combined: list[Packet],
        profile: tuple[float, float],
        rng: np.random.Generator,
        coeff_seed: int = 0,
        generation_size: int = 32,
        payload_len: int | None = None,
    ):
        self.combined = combined
        self.profile = profile
        self.rng = rng
        K = len(combined)
        length = payload_len if payload_len is not None else (len(combined[0]) if combined else 0)
        self.sources = (
            np.stack([p.payload for p in combined]) if combined else np.zeros((0, length), dtype=np.uint8)
        )
        self.encoder = FountainEncoder(self.sources, generation_size, coeff_seed)
        self.receivers = (
            FountainReceiver(K, length, generation_size),
            FountainReceiver(K, length, generation_size),
        )
        self.slots = 0

    def run(self) -> int:
        K = len(self.combined)
        if K == 0:
            return 0
        d1, d2 = self.profile

        states = sample_slots(d1, d2, K, self.rng)
        for i, rx in enumerate(self.receivers):
            got = np.flatnonzero(states[:, i])
            rx.load_systematic(got, self.sources[got])
        slot = K

        rx1, rx2 = self.receivers
        while not (rx1.complete and rx2.complete):
            support = repair_support(rx1.short_generations(), rx2.short_generations())
            row = self.encoder.repair(slot, support)
            state = sample_slot(d1, d2, self.rng)
            if state.s1:
                rx1.absorb(row)
            if state.s2:
                rx2.absorb(row)
            slot += 1
        self.slots = slot
        return slot


def run_coded_phase(
    combined: list[Packet],
    profile: tuple[float, float],
    rng: np.random.Generator,
    coeff_seed: int = 0,
    generation_size: int = 32,
) -> int:
    return CodedPhase(combined, profile, rng, coeff_seed, generation_size).run()


# ---------------- Receivers ----------------

class ReceiverStore:
    """What one receiver holds: its own packets and overheard side information."""

    def __init__(self, rid: int, m: int, payload_len: int):
        self.rid = rid
        self.owned = np.zeros((m, payload_len), dtype=np.uint8)
        self.have = np.zeros(m, dtype=bool)
        self.side: dict[tuple[int, int], np.ndarray] = {}

    def deliver_owned(self, ids: np.ndarray, payloads: np.ndarray) -> None:
        self.owned[ids] = payloads
        self.have[ids] = True

    def overhear(self, packet: Packet) -> None:
        self.side[(packet.owner, packet.id)] = packet.payload

    def recover(self, combined: Packet, payload: np.ndarray) -> None:
        """Cancel the known parts of a decoded combined packet; keep what is left if it is ours."""
        mine = [(o, i) for o, i in combined.provenance if o == self.rid]
        if not mine:
            return
        out = payload.copy()
        for key in combined.provenance:
            if key[0] != self.rid:
                out ^= self.side[key]
        (_, pid), = mine
        self.owned[pid] = out
        self.have[pid] = True

    def matches(self, originals: np.ndarray) -> bool:
        return bool(self.have.all()) and np.array_equal(self.owned, originals)


# ---------------- End to end ----------------

def simulate(config: ProtocolConfig, trial: int = 0) -> SimulationResult:
    streams = trial_rng(config.seed, trial)
    params, sched = config.params, config.schedule
    m1, m2 = config.packets
    L = config.payload_len

    originals = {
        1: streams.payload.integers(0, 256, size=(m1, L), dtype=np.uint8),
        2: streams.payload.integers(0, 256, size=(m2, L), dtype=np.uint8),
    }
    stores = {1: ReceiverStore(1, m1, L), 2: ReceiverStore(2, m2, L)}

    slots, queues = {}, {}
    for phase, owner in ((1, 1), (2, 2)):
        d1, d2 = erasure_profile(sched, params, phase)
        profile = (d1, d2) if owner == 1 else (d2, d1)
        packets = make_packets(owner, originals[owner])
        slots[phase], queues[owner], direct = run_uncoded_phase(packets, profile, streams.channel, owner=owner)
        ids = np.flatnonzero(direct)
        stores[owner].deliver_owned(ids, originals[owner][ids])
        other = stores[3 - owner]
        for p in queues[owner]:
            other.overhear(p)

    combined = build_combined_queue(queues[1], queues[2], payload_len=L)
    coded = CodedPhase(
        combined,
        erasure_profile(sched, params, 3),
        streams.channel,
        coeff_seed=streams.coeff_seed,
        generation_size=config.generation_size,
        payload_len=L,
    )
    slots[3] = coded.run()
    for rid, rx in ((1, coded.receivers[0]), (2, coded.receivers[1])):
        decoded = rx.solve()
        for i, packet in enumerate(combined):
            stores[rid].recover(packet, decoded[i])

    decode_ok = stores[1].matches(originals[1]) and stores[2].matches(originals[2])
    total = slots[1] + slots[2] + slots[3]
    result = SimulationResult(
        slots_phase1=slots[1],
        slots_phase2=slots[2],
        slots_phase3=slots[3],
        q1_len=len(queues[1]),
        q2_len=len(queues[2]),
        total_slots=total,
        m1=m1,
        m2=m2,
        sum_rate=(m1 + m2) / total,
        decode_ok=decode_ok,
        realized_eta1=slots[1] / total,
        realized_eta2=slots[2] / total,
        trial=trial,
    )
    logger.debug("trial %d: %s", trial, asdict(result))
    if not decode_ok:
        logger.warning("trial %d (seed %d): end-to-end decode failed", trial, config.seed)
    return result


def _simulate_job(job: tuple[ProtocolConfig, int]) -> SimulationResult:
    config, trial = job
    return simulate(config, trial)


def monte_carlo(config: ProtocolConfig, trials: int, threads: int = 1) -> MonteCarloSummary:
    """Independent trials with per-trial seeds; reduction is in trial order whatever the completion order."""
    if trials < 1:
        raise ParameterError("trials", f"must be >= 1, got {trials}")
    jobs = [(config, t) for t in range(trials)]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(threads, trials)) as pool:
            results = list(pool.map(_simulate_job, jobs))
    else:
        results = [_simulate_job(j) for j in jobs]
    results.sort(key=lambda r: r.trial)

    rates = np.array([r.sum_rate for r in results])
    fractions = np.array([[r.slots_phase1, r.slots_phase2, r.slots_phase3] for r in results]) / config.n
    summary = MonteCarloSummary(
        config=config,
        results=results,
        mean_sum_rate=float(rates.mean()),
        std_sum_rate=float(rates.std(ddof=1)) if trials > 1 else 0.0,
        mean_eta1=float(np.mean([r.realized_eta1 for r in results])),
        mean_eta2=float(np.mean([r.realized_eta2 for r in results])),
        mean_phase_fractions=tuple(float(x) for x in fractions.mean(axis=0)),
        decode_failures=sum(not r.decode_ok for r in results),
    )
    logger.info(
        "%d trials, scheme=%s: mean sum-rate %.6f (std %.6f), %d decode failures",
        trials, config.scheme, summary.mean_sum_rate, summary.std_sum_rate, summary.decode_failures,
    )
    return summary
