import pytest

from slsim.channel import ChannelGainMap, db_to_linear
from slsim.linklayer import (DuplexMode, FeedbackEvent, HarqProcess,
                             KIND_A2A, MAX_ATTEMPTS, OUTCOME_FAIL,
                             OUTCOME_MISSED, OUTCOME_OK, Packet,
                             generate_traffic, harq_decision, receive_slot,
                             transmit_slot)
from slsim.resources import ResourceId


def make_packet(pid=0, src=0, gen=0, deadline=40, kind=KIND_A2A):
    return Packet(id=pid, src=src, gen_slot=gen, size_bits=2400,
                  deadline_slot=deadline, kind=kind)


class TestTraffic:
    def test_one_packet_per_period(self):
        phases = {0: 0}
        sizes = {0: 2400}
        kinds = {0: KIND_A2A}
        total = 0
        next_id = 0
        for t in range(4000):        # 1 s of 0.25 ms slots
            pkts, next_id = generate_traffic(t, 40, phases, sizes, kinds,
                                             40, next_id)
            total += len(pkts)
        assert total == 100

    def test_period_ratio(self):
        counts = {}
        for period in (12, 40):
            n = 0
            next_id = 0
            for t in range(12000):
                pkts, next_id = generate_traffic(t, period, {0: 0},
                                                 {0: 100}, {0: KIND_A2A},
                                                 period, next_id)
                n += len(pkts)
            counts[period] = n
        assert counts[12] / counts[40] == pytest.approx(10 / 3, rel=0.01)

    def test_no_ues_no_packets(self):
        pkts, _ = generate_traffic(0, 40, {}, {}, {}, 40, 0)
        assert pkts == []


class TestTransmit:
    def test_empty_queues(self):
        from slsim.allocation import AllocationDecision
        d = AllocationDecision(ue=0, resource=ResourceId(5, 0),
                               reselection_counter=5, origin="mode2")
        assert transmit_slot(5, {0: d}, {0: []}, DuplexMode()) == []

    def test_head_packet_transmitted_on_schedule(self):
        from slsim.allocation import AllocationDecision
        pkt = make_packet()
        d = AllocationDecision(ue=0, resource=ResourceId(5, 2),
                               reselection_counter=5, origin="mode2")
        out = transmit_slot(5, {0: d}, {0: [pkt]}, DuplexMode())
        assert out == [(0, ResourceId(5, 2), pkt)]

    def test_expired_packets_evicted(self):
        from slsim.allocation import AllocationDecision
        stale = make_packet(pid=1, deadline=3)
        live = make_packet(pid=2, gen=4, deadline=44)
        d = AllocationDecision(ue=0, resource=ResourceId(5, 2),
                               reselection_counter=5, origin="mode2")
        queue = {0: [stale, live]}
        out = transmit_slot(5, {0: d}, queue, DuplexMode())
        assert out[0][2].id == 2
        assert stale not in queue[0]


def simple_gains(n, pairs):
    gm = ChannelGainMap(n)
    for (a, b), g_db in pairs.items():
        gm.set_gain(a, b, db_to_linear(g_db))
    return gm


class TestReceive:
    def test_chase_combining_rescues_second_attempt(self):
        # attempt SINRs 1.0 then 0.7 combine to 1.7 >= gamma* = 1.52
        gm = simple_gains(2, {(0, 1): -50.0})
        res = ResourceId(0, 0)
        pkt = make_packet()
        harq = {}
        noise = db_to_linear(-50.0) * 100.0 / 1.0   # SINR of attempt 1 = 1.0
        out1 = receive_slot([(0, res, pkt)], {0: [1]}, gm, noise, 1.52,
                            DuplexMode(), harq, tx_power_mw=100.0)
        assert out1[0][2] == OUTCOME_FAIL
        noise2 = db_to_linear(-50.0) * 100.0 / 0.7  # SINR of attempt 2 = 0.7
        out2 = receive_slot([(0, res, pkt)], {0: [1]}, gm, noise2, 1.52,
                            DuplexMode(), harq, tx_power_mw=100.0)
        assert out2[0][2] == OUTCOME_OK
        assert out2[0][3] == pytest.approx(1.7, rel=1e-9)

    def test_zero_threshold_always_succeeds(self):
        gm = simple_gains(3, {(0, 1): -80.0, (2, 1): -80.0})
        res = ResourceId(0, 0)
        out = receive_slot([(0, res, make_packet())], {0: [1]}, gm,
                           db_to_linear(-90.0), 0.0, DuplexMode(), None,
                           tx_power_mw=100.0)
        assert out[0][2] == OUTCOME_OK

    def test_half_duplex_receiver_misses(self):
        gm = simple_gains(2, {(0, 1): -50.0, (1, 0): -50.0})
        p0 = make_packet(pid=0, src=0)
        p1 = make_packet(pid=1, src=1)
        res_a, res_b = ResourceId(0, 0), ResourceId(0, 5)
        out = receive_slot([(0, res_a, p0), (1, res_b, p1)],
                           {0: [1], 1: [0]}, gm, db_to_linear(-100.0), 1.5,
                           DuplexMode(mode="half"), None, tx_power_mw=100.0)
        assert all(o[2] == OUTCOME_MISSED for o in out)

    def test_full_duplex_superset_of_half(self):
        # same transmissions: successes under half duplex are a subset of
        # successes under ideal full duplex
        gm = simple_gains(3, {(0, 1): -50.0, (1, 0): -50.0, (0, 2): -55.0,
                              (1, 2): -52.0, (2, 1): -60.0, (2, 0): -60.0})
        p0 = make_packet(pid=0, src=0)
        p1 = make_packet(pid=1, src=1)
        txs = [(0, ResourceId(0, 0), p0), (1, ResourceId(0, 5), p1)]
        rx_of = {0: [1, 2], 1: [0, 2]}
        noise = db_to_linear(-100.0)
        half = receive_slot(txs, rx_of, gm, noise, 1.5,
                            DuplexMode(mode="half"), None, tx_power_mw=100.0)
        full = receive_slot(txs, rx_of, gm, noise, 1.5,
                            DuplexMode(mode="full"), None, tx_power_mw=100.0)
        ok_half = {(o[0].id, o[1]) for o in half if o[2] == OUTCOME_OK}
        ok_full = {(o[0].id, o[1]) for o in full if o[2] == OUTCOME_OK}
        assert ok_half <= ok_full

    def test_residual_self_interference_degrades(self):
        gm = simple_gains(2, {(0, 1): -50.0, (1, 0): -50.0})
        p0 = make_packet(pid=0, src=0)
        p1 = make_packet(pid=1, src=1)
        txs = [(0, ResourceId(0, 0), p0), (1, ResourceId(0, 5), p1)]
        noise = db_to_linear(-100.0)
        ideal = receive_slot(txs, {0: [1], 1: [0]}, gm, noise, 1.5,
                             DuplexMode(mode="full"), None, tx_power_mw=100.0)
        lossy = receive_slot(txs, {0: [1], 1: [0]}, gm, noise, 1.5,
                             DuplexMode(mode="full", residual_si_db=60.0),
                             None, tx_power_mw=100.0)
        assert lossy[0][3] < ideal[0][3]


class TestHarqDecision:
    def _outcomes(self, verdicts):
        # verdicts: list of (rx, outcome)
        pkt = make_packet()
        return [(pkt, rx, out, 1.0) for rx, out in verdicts], pkt

    def test_all_ok_no_retransmission(self):
        outcomes, pkt = self._outcomes([(1, OUTCOME_OK), (2, OUTCOME_OK)])
        assert harq_decision(outcomes, "nack_only", 28.3,
                             {0: (0, 0), 1: (5, 0), 2: (9, 0)},
                             {pkt.id: 1}) == set()

    def test_any_in_range_failure_triggers(self):
        outcomes, pkt = self._outcomes([(1, OUTCOME_OK), (2, OUTCOME_FAIL)])
        assert harq_decision(outcomes, "nack_only", 28.3,
                             {0: (0, 0), 1: (5, 0), 2: (9, 0)},
                             {pkt.id: 1}) == {pkt.id}

    def test_out_of_range_failure_ignored(self):
        outcomes, pkt = self._outcomes([(1, OUTCOME_OK), (2, OUTCOME_FAIL)])
        assert harq_decision(outcomes, "nack_only", 20.0,
                             {0: (0, 0), 1: (5, 0), 2: (30, 0)},
                             {pkt.id: 1}) == set()

    def test_ack_nack_ignores_range(self):
        outcomes, pkt = self._outcomes([(2, OUTCOME_FAIL)])
        assert harq_decision(outcomes, "ack_nack", 20.0,
                             {0: (0, 0), 2: (30, 0)}, {pkt.id: 1}) == {pkt.id}

    def test_attempt_limit(self):
        outcomes, pkt = self._outcomes([(1, OUTCOME_FAIL)])
        assert harq_decision(outcomes, "nack_only", 28.3,
                             {0: (0, 0), 1: (5, 0)},
                             {pkt.id: MAX_ATTEMPTS}) == set()

    def test_missed_receiver_counts_as_failure(self):
        outcomes, pkt = self._outcomes([(1, OUTCOME_MISSED)])
        assert harq_decision(outcomes, "nack_only", 28.3,
                             {0: (0, 0), 1: (5, 0)}, {pkt.id: 1}) == {pkt.id}
