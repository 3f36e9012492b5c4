"""Per-slot link layer: traffic generation, transmission, reception, HARQ.

Reception is a threshold test on the SINR of the allocated cell; with HARQ
enabled the SINRs of both attempts of a packet add up per receiver (chase
combining).  Feedback is a one-bit verdict available one slot after the
transmission; in nack-only mode only receivers inside the configured range
report failures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channel import ChannelGainMap, db_to_linear, sinr_on_resource
from .resources import ResourceId

KIND_A2A = "a2a_cam"
KIND_A2I = "a2i_data"

OUTCOME_OK = "ok"
OUTCOME_FAIL = "fail"
OUTCOME_MISSED = "missed"    # receiver was transmitting (half duplex)

FEEDBACK_LATENCY_SLOTS = 1
MAX_ATTEMPTS = 2


@dataclass
class Packet:
    id: int
    src: int
    gen_slot: int
    size_bits: int
    deadline_slot: int
    kind: str


@dataclass
class HarqProcess:
    packet_id: int
    acc_sinr: dict = field(default_factory=dict)   # receiver -> linear SINR
    attempts: int = 0
    state: str = "pending"


@dataclass(frozen=True)
class FeedbackEvent:
    packet_id: int
    receiver: int
    verdict: str       # "ack" | "nack"
    slot: int


@dataclass(frozen=True)
class DuplexMode:
    mode: str = "half"              # "half" | "full"
    residual_si_db: float | None = None


def generate_traffic(now_slot: int, period_slots: int, phases: dict,
                     sizes: dict, kinds: dict, deadline_slots: int,
                     next_id: int) -> tuple:
    """Emit one packet per UE whose generation phase falls on this slot.

    Returns (packets, next_id); phases map ue -> arrival phase in slots.
    """
    packets = []
    for ue, phase in phases.items():
        if (now_slot - phase) % period_slots == 0 and now_slot >= phase:
            packets.append(Packet(id=next_id, src=ue, gen_slot=now_slot,
                                  size_bits=sizes[ue],
                                  deadline_slot=now_slot + deadline_slots,
                                  kind=kinds[ue]))
            next_id += 1
    return packets, next_id


def transmit_slot(now_slot: int, decisions: dict, queues: dict,
                  duplex: DuplexMode) -> list:
    """Transmissions for this slot: (ue, resource, packet) triples.

    Every UE whose decision targets this slot and whose queue holds a live
    packet transmits its head packet; expired packets are evicted first.
    """
    tx_set = []
    for ue, decision in decisions.items():
        queue = queues.get(ue)
        if not queue:
            continue
        while queue and queue[0].deadline_slot < now_slot:
            queue.pop(0)
        if not queue:
            continue
        if decision.resource.slot == now_slot:
            tx_set.append((ue, decision.resource, queue[0]))
    return tx_set


def receive_slot(tx_set: list, receivers_of: dict, gains: ChannelGainMap,
                 noise_mw: float, gamma_star: float, duplex: DuplexMode,
                 harq: dict | None, tx_power_mw: float,
                 leak_db: float = 35.0) -> list:
    """Reception outcomes for every (transmission, intended receiver) pair.

    Returns (packet, receiver, outcome, effective_sinr) tuples; with a HARQ
    store the effective SINR accumulates over the attempts of a packet.
    """
    active = [(ue, res, tx_power_mw) for (ue, res, _pkt) in tx_set]
    transmitting = {ue for (ue, _res, _pkt) in tx_set}
    outcomes = []
    for ue, res, pkt in tx_set:
        proc = None
        if harq is not None:
            proc = harq.get(pkt.id)
            if proc is None:
                proc = HarqProcess(packet_id=pkt.id)
                harq[pkt.id] = proc
        for rx in receivers_of[ue]:
            if rx in transmitting and duplex.mode == "half":
                outcomes.append((pkt, rx, OUTCOME_MISSED, 0.0))
                continue
            extra_mw = 0.0
            if rx in transmitting and duplex.mode == "full" \
               and duplex.residual_si_db is not None:
                extra_mw = tx_power_mw * db_to_linear(-abs(duplex.residual_si_db))
            sinr = sinr_on_resource(rx, ue, res, gains, active,
                                    noise_mw + extra_mw, leak_db=leak_db)
            eff = sinr
            if proc is not None:
                eff += proc.acc_sinr.get(rx, 0.0)
                proc.acc_sinr[rx] = eff
            outcome = OUTCOME_OK if eff >= gamma_star else OUTCOME_FAIL
            outcomes.append((pkt, rx, outcome, eff))
        if proc is not None:
            proc.attempts += 1
    return outcomes


def harq_decision(outcomes: list, feedback_mode: str, min_range_m: float,
                  positions: dict, attempts: dict) -> set:
    """Packet ids to retransmit, given this slot's reception outcomes.

    A packet is retransmitted iff at least one eligible receiver reports a
    failure; in nack-only mode eligibility is limited to receivers within
    min_range_m of the transmitter.  Packets at the attempt limit are never
    retransmitted.
    """
    retransmit = set()
    for pkt, rx, outcome, _sinr in outcomes:
        if outcome == OUTCOME_OK:
            continue
        if attempts.get(pkt.id, 1) >= MAX_ATTEMPTS:
            continue
        if feedback_mode == "nack_only":
            src_pos = positions[pkt.src]
            rx_pos = positions[rx]
            dist = math.hypot(src_pos[0] - rx_pos[0], src_pos[1] - rx_pos[1])
            if dist > min_range_m:
                continue
        retransmit.add(pkt.id)
    return retransmit
