"""
Straight-line reference of the three-phase protocol, one slot at a time.

Field arithmetic comes from galois and decoding is a dense row reduction, so
nothing here shares code with core.fieldcodec or core.protocol. Only the
per-trial stream derivation is shared, so both consume the same uniforms.
"""
import galois
import numpy as np

from core.channel import erasure_profile, trial_rng
from core.protocol import ProtocolConfig

GF = galois.GF(2**8, irreducible_poly=0x11B)


def _slot(rng, d1, d2):
    u = rng.random(2)
    return bool(u[0] >= d1), bool(u[1] >= d2)


def reference_simulate(config: ProtocolConfig, trial: int = 0) -> dict:
    streams = trial_rng(config.seed, trial)
    rng = streams.channel
    sched, params = config.schedule, config.params
    m1, m2 = config.packets
    L = config.payload_len
    originals = {
        1: streams.payload.integers(0, 256, size=(m1, L), dtype=np.uint8),
        2: streams.payload.integers(0, 256, size=(m2, L), dtype=np.uint8),
    }

    known = {1: {}, 2: {}}  # rid -> {(owner, id): payload}
    queues = {1: [], 2: []}  # owner -> [id, ...]
    slots = {}

    for phase, owner in ((1, 1), (2, 2)):
        d1, d2 = erasure_profile(sched, params, phase)
        other = 3 - owner
        count = 0
        for pid in range(len(originals[owner])):
            while True:
                count += 1
                got = _slot(rng, d1, d2)
                got_own, got_other = got[owner - 1], got[other - 1]
                if got_own:
                    known[owner][(owner, pid)] = originals[owner][pid]
                    break
                if got_other:
                    known[other][(owner, pid)] = originals[owner][pid]
                    queues[owner].append(pid)
                    break
        slots[phase] = count

    K = max(len(queues[1]), len(queues[2]))
    zero = np.zeros(L, dtype=np.uint8)

    def part(owner, i):
        if i >= len(queues[owner]):
            return None
        return (owner, queues[owner][i])

    def payload(key):
        return zero if key is None else originals[key[0]][key[1]]

    sources = np.array([payload(part(1, i)) ^ payload(part(2, i)) for i in range(K)], dtype=np.uint8)
    d1, d2 = erasure_profile(sched, params, 3)
    rows = {1: [], 2: []}

    def rank(rid):
        if not rows[rid]:
            return 0
        return int(np.linalg.matrix_rank(GF(np.array([c for c, _ in rows[rid]]))))

    count = 0
    while K and (rank(1) < K or rank(2) < K):
        if count < K:
            coeffs = np.zeros(K, dtype=np.uint8)
            coeffs[count] = 1
        else:
            coeffs = np.random.default_rng([streams.coeff_seed, count]).integers(0, 256, size=K, dtype=np.uint8)
        coded = np.array(GF(coeffs) @ GF(sources), dtype=np.uint8)
        got = _slot(rng, d1, d2)
        for rid in (1, 2):
            if got[rid - 1] and rank(rid) < K:
                rows[rid].append((coeffs, coded))
        count += 1
    slots[3] = count

    ok = True
    for rid in (1, 2):
        if K:
            aug = GF(np.array([np.concatenate([c, p]) for c, p in rows[rid]], dtype=np.uint8))
            decoded = np.array(aug.row_reduce(ncols=K)[:K, K:], dtype=np.uint8)
            for i in range(K):
                mine = part(rid, i)
                if mine is None:
                    continue
                theirs = part(3 - rid, i)
                known[rid][mine] = decoded[i] ^ (zero if theirs is None else known[rid][theirs])
        m = m1 if rid == 1 else m2
        for pid in range(m):
            have = known[rid].get((rid, pid))
            ok = ok and have is not None and np.array_equal(have, originals[rid][pid])

    total = slots[1] + slots[2] + slots[3]
    return {
        "slots_phase1": slots[1],
        "slots_phase2": slots[2],
        "slots_phase3": slots[3],
        "q1_len": len(queues[1]),
        "q2_len": len(queues[2]),
        "total_slots": total,
        "decode_ok": ok,
    }
