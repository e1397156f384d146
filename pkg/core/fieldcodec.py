# /core/fieldcodec.py
"""
GF(2^8) arithmetic, fixed-length packets and a systematic random-linear code.

Field: reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B), generator 0x03.
Addition is bytewise XOR, so the pairwise "field summation" of two packets is
a plain XOR of their payloads.

The phase-3 code is systematic-then-random. Combined packets are grouped into
generations of `generation_size` consecutive packets; repair rows are random
combinations over one generation, or over two generations when each receiver
lacks a generation the other has already solved (see FountainReceiver.absorb).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from core.errors import DecodeError, FieldError

logger = logging.getLogger(__name__)

POLY = 0x11B
GENERATOR = 0x03


def _peasant_mul(a: int, b: int) -> int:
    result = 0
    while b:
        if b & 1:
            result ^= a
        a <<= 1
        if a & 0x100:
            a ^= POLY
        b >>= 1
    return result


def _build_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int16)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = _peasant_mul(x, GENERATOR)
    exp[255:510] = exp[:255]

    # MUL[a, b] = a * b; row/column 0 stay zero
    la = log[1:].astype(np.int32)
    mul = np.zeros((256, 256), dtype=np.uint8)
    mul[1:, 1:] = exp[(la[:, None] + la[None, :]) % 255]

    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(255 - la) % 255]
    return exp, log, mul, inv


EXP, LOG, MUL, INV = _build_tables()


# ---------------- Scalar field operations ----------------

def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def gf_inv(a: int) -> int:
    if a == 0:
        raise FieldError("zero has no multiplicative inverse in GF(2^8)")
    return int(INV[a])


def gf_arith(a: int, b: int, op: str) -> int:
    """Single entry point: op in {"add", "mul", "inv"} (inv ignores b)."""
    for v in (a, b):
        if not (0 <= v <= 255):
            raise FieldError(f"not a GF(2^8) element: {v}")
    if op == "add":
        return gf_add(a, b)
    if op == "mul":
        return gf_mul(a, b)
    if op == "inv":
        return gf_inv(a)
    raise FieldError(f"unknown field operation {op!r}")


# ---------------- Vector operations ----------------

def gf_matvec(coeffs: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """sum_i coeffs[i] * rows[i] over GF(2^8); rows is (K, L) uint8."""
    coeffs = np.asarray(coeffs, dtype=np.uint8)
    if coeffs.size == 0:
        return np.zeros(rows.shape[1], dtype=np.uint8)
    return np.bitwise_xor.reduce(MUL[coeffs[:, None], rows], axis=0)


# ---------------- Packets ----------------

class PacketKind(str, Enum):
    ORIGINAL = "original"
    COMBINED = "combined"


@dataclass(eq=False)
class Packet:
    id: int
    owner: int
    payload: np.ndarray
    kind: PacketKind = PacketKind.ORIGINAL
    # (owner, id) of every original packet summed into this one
    provenance: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.provenance and self.kind is PacketKind.ORIGINAL:
            self.provenance = ((self.owner, self.id),)

    def __len__(self) -> int:
        return int(self.payload.shape[0])


def zero_packet(length: int, owner: int = 0) -> Packet:
    return Packet(id=-1, owner=owner, payload=np.zeros(length, dtype=np.uint8),
                  kind=PacketKind.COMBINED)


def make_packets(owner: int, payloads: np.ndarray) -> list[Packet]:
    return [Packet(id=i, owner=owner, payload=payloads[i]) for i in range(payloads.shape[0])]


def combine(p: Packet, q: Packet, packet_id: int | None = None) -> Packet:
    """Element-wise field sum of two equal-length packets; same size as either input."""
    if len(p) != len(q):
        raise FieldError(f"payload length mismatch: {len(p)} vs {len(q)}")
    return Packet(
        id=p.id if packet_id is None else packet_id,
        owner=p.owner or q.owner,
        payload=np.bitwise_xor(p.payload, q.payload),
        kind=PacketKind.COMBINED,
        provenance=p.provenance + q.provenance,
    )


def encode_repair(sources: Sequence[np.ndarray] | np.ndarray, coeffs: Sequence[int] | np.ndarray) -> np.ndarray:
    src = np.asarray(sources, dtype=np.uint8)
    if src.ndim != 2 or src.shape[0] == 0:
        raise FieldError("encode_repair needs at least one source payload")
    coeffs = np.asarray(coeffs, dtype=np.uint8)
    if coeffs.shape != (src.shape[0],):
        raise FieldError(f"expected {src.shape[0]} coefficients, got {coeffs.shape}")
    return gf_matvec(coeffs, src)


def repair_coefficients(coeff_seed: int, slot: int, size: int) -> np.ndarray:
    """Coefficients of the repair row sent in `slot`; any receiver can regenerate them."""
    rng = np.random.default_rng([coeff_seed, slot])
    return rng.integers(0, 256, size=size, dtype=np.uint8)


# ---------------- Decoder ----------------

class DecoderState:
    """
    Gaussian elimination over GF(2^8), kept in reduced row-echelon form.

    Row for pivot column p lives at index p of `_rows`, so a full-rank state
    holds the identity on the coefficient part and the sources on the payload part.
    """

    def __init__(self, dimension: int, payload_len: int):
        if dimension < 1:
            raise FieldError("decoder dimension must be >= 1")
        self.dimension = dimension
        self.payload_len = payload_len
        self._rows = np.zeros((dimension, dimension + payload_len), dtype=np.uint8)
        self._pivot = np.zeros(dimension, dtype=bool)
        self.rank = 0

    @property
    def is_full(self) -> bool:
        return self.rank == self.dimension

    @property
    def rows(self) -> list[tuple[np.ndarray, np.ndarray]]:
        K = self.dimension
        return [(self._rows[p, :K].copy(), self._rows[p, K:].copy()) for p in np.flatnonzero(self._pivot)]

    def load_systematic(self, columns: np.ndarray, payloads: np.ndarray) -> None:
        """Bulk-insert unit rows e_c into an empty decoder."""
        if self.rank:
            raise FieldError("load_systematic needs an empty decoder")
        columns = np.asarray(columns, dtype=np.intp)
        if columns.size == 0:
            return
        self._rows[columns, columns] = 1
        self._rows[columns, self.dimension:] = payloads
        self._pivot[columns] = True
        self.rank = int(columns.size)

    def insert(self, coeffs: np.ndarray, payload: np.ndarray) -> int:
        K = self.dimension
        coeffs = np.asarray(coeffs, dtype=np.uint8)
        if coeffs.shape != (K,):
            raise FieldError(f"expected {K} coefficients, got {coeffs.shape}")
        if self.is_full:
            return self.rank
        row = np.concatenate([coeffs, np.asarray(payload, dtype=np.uint8)])

        pivots = np.flatnonzero(self._pivot)
        if pivots.size:
            row ^= np.bitwise_xor.reduce(MUL[row[pivots][:, None], self._rows[pivots]], axis=0)

        nz = np.flatnonzero(row[:K])
        if nz.size == 0:
            return self.rank  # dependent
        p = int(nz[0])
        row = MUL[INV[row[p]]][row]

        if pivots.size:
            factors = self._rows[pivots, p]
            hit = pivots[factors != 0]
            if hit.size:
                self._rows[hit] ^= MUL[self._rows[hit, p][:, None], row[None, :]]
        self._rows[p] = row
        self._pivot[p] = True
        self.rank += 1
        return self.rank

    def solve(self) -> np.ndarray:
        if not self.is_full:
            raise DecodeError(f"cannot solve: rank {self.rank} < {self.dimension}")
        return self._rows[:, self.dimension:].copy()


def decoder_insert(state: DecoderState, coeffs: np.ndarray, payload: np.ndarray) -> int:
    return state.insert(coeffs, payload)


def decoder_solve(state: DecoderState) -> np.ndarray:
    return state.solve()


# ---------------- Generation fountain ----------------

def split_generations(total: int, generation_size: int) -> list[range]:
    if generation_size < 1:
        raise FieldError("generation_size must be >= 1")
    return [range(s, min(s + generation_size, total)) for s in range(0, total, generation_size)]


@dataclass(frozen=True)
class RepairRow:
    slot: int
    # (generation index, coefficients over that generation)
    segments: tuple[tuple[int, np.ndarray], ...]
    payload: np.ndarray


class FountainEncoder:
    def __init__(self, sources: np.ndarray, generation_size: int, coeff_seed: int):
        self.sources = np.asarray(sources, dtype=np.uint8)
        self.generations = split_generations(self.sources.shape[0], generation_size)
        self.coeff_seed = coeff_seed
        logger.debug(
            "fountain: %d sources in %d generations of up to %d",
            self.sources.shape[0], len(self.generations), generation_size,
        )

    def repair(self, slot: int, support: Sequence[int]) -> RepairRow:
        sizes = [len(self.generations[g]) for g in support]
        coeffs = repair_coefficients(self.coeff_seed, slot, sum(sizes))
        segments = []
        payload = np.zeros(self.sources.shape[1], dtype=np.uint8)
        offset = 0
        for g, size in zip(support, sizes):
            c = coeffs[offset:offset + size]
            offset += size
            gen = self.generations[g]
            payload ^= gf_matvec(c, self.sources[gen.start:gen.stop])
            segments.append((g, c))
        return RepairRow(slot=slot, segments=tuple(segments), payload=payload)


@dataclass
class FountainReceiver:
    total: int
    payload_len: int
    generation_size: int
    decoders: list[DecoderState] = field(init=False)

    def __post_init__(self):
        self.generations = split_generations(self.total, self.generation_size)
        self.decoders = [DecoderState(len(g), self.payload_len) for g in self.generations]
        # Ascending indices of generations still below full rank
        self._short = list(range(len(self.generations)))

    @property
    def rank(self) -> int:
        return sum(d.rank for d in self.decoders)

    @property
    def complete(self) -> bool:
        return not self._short

    def short_generations(self) -> list[int]:
        return list(self._short)

    def load_systematic(self, indices: np.ndarray, sources: np.ndarray) -> None:
        """sources[j] is the payload of packet indices[j]."""
        indices = np.asarray(indices, dtype=np.intp)
        sources = np.asarray(sources, dtype=np.uint8)
        if sources.shape[0] != indices.shape[0]:
            raise FieldError(f"{indices.shape[0]} indices for {sources.shape[0]} payloads")
        for g, gen in enumerate(self.generations):
            mask = (indices >= gen.start) & (indices < gen.stop)
            self.decoders[g].load_systematic(indices[mask] - gen.start, sources[mask])
        self._short = [g for g, d in enumerate(self.decoders) if not d.is_full]

    def absorb(self, row: RepairRow) -> bool:
        """Cancel solved segments; insert if exactly one unknown generation is left. True if rank grew."""
        payload = row.payload.copy()
        unknown = []
        for g, c in row.segments:
            dec = self.decoders[g]
            if dec.is_full:
                payload ^= gf_matvec(c, dec.solve())
            else:
                unknown.append((g, c))
        if len(unknown) != 1:
            return False
        g, c = unknown[0]
        dec = self.decoders[g]
        before = dec.rank
        grew = dec.insert(c, payload) > before
        if dec.is_full:
            self._short.remove(g)
        return grew

    def solve(self) -> np.ndarray:
        if not self.complete:
            raise DecodeError(f"cannot solve: rank {self.rank} < {self.total}")
        if not self.decoders:
            return np.zeros((0, self.payload_len), dtype=np.uint8)
        return np.concatenate([d.solve() for d in self.decoders], axis=0)
