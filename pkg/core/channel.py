# /core/channel.py
"""
Two independent packet-erasure links from one transmitter to Rx1 and Rx2.

- ChannelParams: erasure probability with no / one / two assisting RISs.
- AssociationSchedule: which RISs assist which receiver over the block.
- erasure_profile(): the (d1, d2) pair in effect for a phase or normalized time.
- sample_slot()/sample_slots(): Bernoulli link states, link 1 drawn first.
- broadcast(): erasure semantics plus the echoed ACK/NACK feedback.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Annotated, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import ParameterError

if TYPE_CHECKING:
    from core.fieldcodec import Packet

logger = logging.getLogger(__name__)

Probability = Annotated[float, Field(gt=0.0, lt=1.0)]


class ChannelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_n: Probability
    delta_s: Probability
    delta_d: Probability

    @model_validator(mode="after")
    def _lint_ordering(self) -> "ChannelParams":
        if not (self.delta_d <= self.delta_s <= self.delta_n):
            logger.warning(
                "RIS aid worsens the channel: expected delta_d <= delta_s <= delta_n, got %s",
                self.as_tuple(),
            )
        return self

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.delta_n, self.delta_s, self.delta_d)


class Scheme(str, Enum):
    NO_RIS = "noris"
    NEUTRAL = "neutral"
    BOTH_TO_USER = "both_to_user"
    DYNAMIC = "dynamic"


class AssociationSchedule(BaseModel):
    """RIS-user association over the block; Rx2 always gets the complement of Rx1's set."""

    model_config = ConfigDict(frozen=True)

    scheme: Scheme
    user: int | None = None
    eta1: float | None = None
    eta2: float | None = None

    @model_validator(mode="after")
    def _check(self) -> "AssociationSchedule":
        if self.scheme is Scheme.BOTH_TO_USER and self.user not in (1, 2):
            raise ParameterError("user", f"must be 1 or 2, got {self.user}")
        if self.scheme is Scheme.DYNAMIC:
            for name in ("eta1", "eta2"):
                value = getattr(self, name)
                if value is None or not (0.0 < value < 0.5):
                    raise ParameterError(name, f"must be in (0, 1/2), got {value}")
        return self

    @classmethod
    def no_ris(cls) -> "AssociationSchedule":
        return cls(scheme=Scheme.NO_RIS)

    @classmethod
    def neutral(cls) -> "AssociationSchedule":
        return cls(scheme=Scheme.NEUTRAL)

    @classmethod
    def both_to_user(cls, user: int) -> "AssociationSchedule":
        return cls(scheme=Scheme.BOTH_TO_USER, user=user)

    @classmethod
    def dynamic(cls, eta1: float, eta2: float | None = None) -> "AssociationSchedule":
        return cls(scheme=Scheme.DYNAMIC, eta1=eta1, eta2=eta1 if eta2 is None else eta2)

    @classmethod
    def from_label(cls, label: str, eta: float | None = None) -> "AssociationSchedule":
        """CLI/config labels: noris, neutral, user1, user2, dynamic."""
        if label == "noris":
            return cls.no_ris()
        if label == "neutral":
            return cls.neutral()
        if label in ("user1", "user2"):
            return cls.both_to_user(int(label[-1]))
        if label == "dynamic":
            if eta is None:
                raise ParameterError("eta", "dynamic association needs eta")
            return cls.dynamic(eta)
        raise ParameterError("scheme", f"unknown association scheme {label!r}")

    @property
    def label(self) -> str:
        if self.scheme is Scheme.BOTH_TO_USER:
            return f"user{self.user}"
        return self.scheme.value


class SlotState(NamedTuple):
    s1: int
    s2: int

    def bit(self, receiver: int) -> int:
        return self.s1 if receiver == 1 else self.s2


@dataclass(frozen=True)
class SlotObservation:
    # None means Erased at that receiver
    outcomes: tuple["Packet | None", "Packet | None"]
    feedback: SlotState

    def received(self, receiver: int) -> "Packet | None":
        return self.outcomes[receiver - 1]

    def ack(self, receiver: int) -> bool:
        return bool(self.feedback.bit(receiver))


def _phase_of(schedule: AssociationSchedule, phase: int | float) -> int:
    if isinstance(phase, bool):
        raise ParameterError("phase", "must be a phase index or a normalized time")
    if isinstance(phase, (int, np.integer)):
        if phase not in (1, 2, 3):
            raise ParameterError("phase", f"phase index must be 1, 2 or 3, got {phase}")
        return int(phase)
    t = float(phase)
    if not (0.0 <= t <= 1.0):
        raise ParameterError("phase", f"normalized time must be in [0, 1], got {t}")
    if schedule.scheme is not Scheme.DYNAMIC:
        return 1
    if t < schedule.eta1:
        return 1
    if t < schedule.eta1 + schedule.eta2:
        return 2
    return 3


def erasure_profile(
    schedule: AssociationSchedule, params: ChannelParams, phase: int | float
) -> tuple[float, float]:
    """
    Per-slot erasure probabilities (d1, d2) in effect.

    `phase` is either a phase index (int 1, 2, 3) or a normalized time t/n
    (float in [0, 1]) mapped onto the windows [0, eta1), [eta1, eta1+eta2), rest.
    """
    p = _phase_of(schedule, phase)
    dn, ds, dd = params.delta_n, params.delta_s, params.delta_d
    if schedule.scheme is Scheme.NO_RIS:
        return (dn, dn)
    if schedule.scheme is Scheme.NEUTRAL:
        return (ds, ds)
    if schedule.scheme is Scheme.BOTH_TO_USER:
        return (dd, dn) if schedule.user == 1 else (dn, dd)
    # Dynamic: both RISs to Rx1, then both to Rx2, then one each
    return {1: (dd, dn), 2: (dn, dd), 3: (ds, ds)}[p]


def average_erasure(schedule: AssociationSchedule, params: ChannelParams) -> tuple[float, float]:
    """Long-run erasure probability seen by each receiver when phases take their nominal fractions."""
    if schedule.scheme is not Scheme.DYNAMIC:
        return erasure_profile(schedule, params, 1)
    w = (schedule.eta1, schedule.eta2, 1.0 - schedule.eta1 - schedule.eta2)
    profiles = [erasure_profile(schedule, params, p) for p in (1, 2, 3)]
    return (
        sum(wi * pr[0] for wi, pr in zip(w, profiles)),
        sum(wi * pr[1] for wi, pr in zip(w, profiles)),
    )


# ---------------- Sampling ----------------

def _check_probs(d1: float, d2: float) -> None:
    for name, d in (("d1", d1), ("d2", d2)):
        if not (0.0 <= d <= 1.0):
            raise ParameterError(name, f"erasure probability must be in [0, 1], got {d}")


def sample_slot(d1: float, d2: float, rng: np.random.Generator) -> SlotState:
    """One slot: s_i = 1 with probability 1 - d_i."""
    _check_probs(d1, d2)
    u = rng.random(2)
    return SlotState(int(u[0] >= d1), int(u[1] >= d2))


def sample_slots(d1: float, d2: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    `count` slots as a (count, 2) uint8 array.

    Consumes exactly the uniforms that `count` successive sample_slot calls would.
    """
    _check_probs(d1, d2)
    if count <= 0:
        return np.zeros((0, 2), dtype=np.uint8)
    u = rng.random((count, 2))
    return (u >= np.array([d1, d2])).astype(np.uint8)


def broadcast(x: "Packet", state: SlotState) -> SlotObservation:
    outcomes = (x if state.s1 else None, x if state.s2 else None)
    return SlotObservation(outcomes=outcomes, feedback=state)


# ---------------- Seeding ----------------

@dataclass(frozen=True)
class TrialStreams:
    channel: np.random.Generator
    payload: np.random.Generator
    coeff_seed: int


def trial_rng(seed: int, trial: int) -> TrialStreams:
    """
    Independent per-trial streams from SeedSequence([seed, trial]).

    Child 0 drives link states (PCG64), child 1 source payload bytes, child 2
    yields the 64-bit seed the repair coefficients are regenerated from.
    """
    channel_ss, payload_ss, coeff_ss = np.random.SeedSequence([seed, trial]).spawn(3)
    return TrialStreams(
        channel=np.random.Generator(np.random.PCG64(channel_ss)),
        payload=np.random.Generator(np.random.PCG64(payload_ss)),
        coeff_seed=int(coeff_ss.generate_state(1, dtype=np.uint64)[0]),
    )
