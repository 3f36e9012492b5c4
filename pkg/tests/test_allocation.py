import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from slsim.allocation import (AllocationDecision, LeaderState, Mode1Scheduler,
                              ORIGIN_COOPERATIVE, ORIGIN_FALLBACK,
                              ORIGIN_MODE2, ORIGIN_RANDOM_INIT,
                              RESELECTION_COUNTER_RANGE, Sci3Message,
                              assign_mode1, cooperative_round, draw_counter,
                              reevaluate_selection, select_mode2, select_random)
from slsim.resources import (ResourceGrid, ResourceId, SelectionWindow,
                             SensingHistory, window_cells)

GRID = ResourceGrid(n_subchannels=10, subchannel_prbs=1,
                    slot_duration_ms=0.25, scs_khz=60)
W3 = SelectionWindow(1, 3)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestSelectRandom:
    def test_single_resource_window(self):
        g = ResourceGrid(n_subchannels=1, subchannel_prbs=1,
                         slot_duration_ms=0.25, scs_khz=60)
        w = SelectionWindow(1, 2)
        picks = {select_random(g, 0, w, rng(s)).resource for s in range(20)}
        assert picks <= {ResourceId(1, 0), ResourceId(2, 0)}

    def test_uniformity_chi_square(self):
        r = rng(7)
        counts = Counter(select_random(GRID, 0, W3, r).resource
                         for _ in range(100_000))
        observed = [counts.get(c, 0) for c in window_cells(0, W3, GRID)]
        _stat, p = stats.chisquare(observed)
        assert p > 0.01

    def test_independent_draws_collide_at_uniform_rate(self):
        r = rng(11)
        hits = sum(select_random(GRID, 0, W3, r).resource ==
                   select_random(GRID, 0, W3, r).resource
                   for _ in range(30_000))
        assert hits / 30_000 == pytest.approx(1 / 30, rel=0.2)

    def test_counter_range(self):
        lo, hi = RESELECTION_COUNTER_RANGE
        r = rng(3)
        counters = {select_random(GRID, 0, W3, r).reselection_counter
                    for _ in range(500)}
        assert min(counters) >= lo and max(counters) <= hi
        assert counters == set(range(lo, hi + 1))

    def test_harq_retx_cell_placed_after_initial(self):
        r = rng(5)
        w = SelectionWindow(1, 12)
        for _ in range(200):
            d = select_random(GRID, 0, w, r, harq=True, retx_hi_slot=40)
            if d.retx_resource is not None:
                assert d.retx_resource.slot >= d.resource.slot + 2
                assert d.retx_resource.slot <= 40


class TestSelectMode2:
    def test_empty_history_matches_random_distribution(self):
        # two-sample chi-square over the window cells
        h = SensingHistory(window_slots=400)
        cells = window_cells(0, W3, GRID)
        r1, r2 = rng(21), rng(22)
        a = Counter(select_mode2(h, 0, W3, GRID, r1, -110.0, 12).resource
                    for _ in range(50_000))
        b = Counter(select_random(GRID, 0, W3, r2).resource
                    for _ in range(50_000))
        table = np.array([[a.get(c, 0) for c in cells],
                          [b.get(c, 0) for c in cells]])
        _stat, p, _dof, _exp = stats.chi2_contingency(table)
        assert p > 0.01

    def test_empty_history_marks_fallback(self):
        h = SensingHistory(window_slots=400)
        assert select_mode2(h, 0, W3, GRID, rng(), -110.0, 12).origin == \
            ORIGIN_FALLBACK

    def test_hot_subchannel_never_selected(self):
        h = SensingHistory(window_slots=400)
        for slot in range(101, 104):
            h.record(slot - 12, 4, -60.0, 12)
        r = rng(9)
        for _ in range(300):
            d = select_mode2(h, 100, W3, GRID, r, -110.0, 12)
            assert d.resource.subchannel != 4
            assert d.origin == ORIGIN_MODE2

    def test_selection_inside_candidate_set(self):
        from slsim.resources import candidate_resources
        h = SensingHistory(window_slots=400)
        for slot in range(90, 100):
            h.record(slot, slot % 10, -80.0, 12)
        res = candidate_resources(h, 100, W3, GRID, -110.0,
                                  own_period_slots=12)
        r = rng(13)
        for _ in range(200):
            assert select_mode2(h, 100, W3, GRID, r, -110.0, 12).resource \
                in res.cells


class TestReevaluate:
    def _decision(self, cell):
        return AllocationDecision(ue=0, resource=cell, reselection_counter=7,
                                  origin=ORIGIN_MODE2)

    def test_still_candidate_is_identity(self):
        h = SensingHistory(window_slots=400)
        d = self._decision(ResourceId(102, 5))
        out = reevaluate_selection(d, h, 100, W3, GRID, rng(), -110.0)
        assert out is d

    def test_newly_excluded_resource_is_replaced(self):
        h = SensingHistory(window_slots=400)
        d = self._decision(ResourceId(102, 5))
        h.record(102, 5, -50.0, 12, declared=True)
        out = reevaluate_selection(d, h, 100, W3, GRID, rng(1), -110.0)
        assert out.resource != d.resource
        assert out.origin == ORIGIN_MODE2
        from slsim.resources import candidate_resources
        res = candidate_resources(h, 100, W3, GRID, -110.0)
        assert out.resource in res.cells

    def test_replacement_prefers_same_slot(self):
        h = SensingHistory(window_slots=400)
        d = self._decision(ResourceId(102, 5))
        h.record(102, 5, -50.0, 12, declared=True)
        for _ in range(50):
            out = reevaluate_selection(d, h, 100, W3, GRID, rng(2), -110.0)
            assert out.resource.slot == 102

    def test_fully_hot_window_may_keep_resource(self):
        # escalation re-admits the cell: no migration
        h = SensingHistory(window_slots=400)
        for slot in range(101, 104):
            for c in range(10):
                h.record(slot - 12, c, -60.0, 12)
        d = self._decision(ResourceId(102, 5))
        out = reevaluate_selection(d, h, 100, W3, GRID, rng(3), -110.0)
        assert out.resource == d.resource


class TestMode1:
    def test_orthogonal_grants(self):
        sched = Mode1Scheduler(3, 10)
        out = assign_mode1(sched, [0, 1, 2, 3], GRID, 100, W3, rng())
        cells = [d.resource for d in out.values()]
        assert len(set(cells)) == 4
        assert all(d.origin == "mode1" for d in out.values())

    def test_stable_until_regrant(self):
        sched = Mode1Scheduler(3, 10)
        first = assign_mode1(sched, [0, 1, 2], GRID, 100, W3, rng(1))
        second = assign_mode1(sched, [0, 1, 2], GRID, 100, W3, rng(2))
        assert {u: d.resource for u, d in first.items()} == \
            {u: d.resource for u, d in second.items()}

    def test_overflow_falls_back_to_random(self):
        sched = Mode1Scheduler(3, 10)
        out = assign_mode1(sched, list(range(31)), GRID, 100, W3, rng(4))
        fallbacks = [d for d in out.values() if d.origin == ORIGIN_FALLBACK]
        assert len(fallbacks) == 1
        granted = [d.resource for d in out.values()
                   if d.origin != ORIGIN_FALLBACK]
        assert len(set(granted)) == 30

    def test_slot_first_spreading(self):
        sched = Mode1Scheduler(6, 10)
        a = sched.grant(0, 1)
        b = sched.grant(1, 1)
        c = sched.grant(2, 1)
        assert len({a[0][0], b[0][0], c[0][0]}) == 3


class TestCooperative:
    def _leader_history(self, rsrps):
        # rsrps: dict cell -> dBm observed by the leader
        h = SensingHistory(window_slots=400)
        for (slot, subch), val in rsrps.items():
            h.record(slot, subch, val, 12, declared=True)
        return h

    def test_full_delivery_is_conflict_free(self):
        h = SensingHistory(window_slots=400)
        members = [0, 1, 2, 3]
        w12 = SelectionWindow(1, 12)
        msgs = [Sci3Message(sender=i, selected_resources=(ResourceId(101 + i, i),),
                            slot_sent=99) for i in members[1:]]
        out = cooperative_round(LeaderState(leader_id=0), msgs, h, GRID, 100,
                                w12, rng(5), -110.0, 12, members)
        cells = [d.resource for d in out.values()]
        assert len(set(cells)) == 4
        slots = [c.slot for c in cells]
        assert len(set(slots)) == 4     # spread across slots
        assert all(d.origin == ORIGIN_COOPERATIVE for d in out.values())

    def test_lost_assignment_forces_random(self):
        h = SensingHistory(window_slots=400)
        members = [0, 1, 2, 3]
        msgs = [Sci3Message(sender=i, selected_resources=(ResourceId(101, i),),
                            slot_sent=99) for i in members[1:]]
        out = cooperative_round(LeaderState(leader_id=0), msgs, h, GRID, 100,
                                W3, rng(6), -110.0, 12, members,
                                assignment_delivered=lambda ue: ue != 3)
        assert out[3].origin == ORIGIN_FALLBACK
        for m in (0, 1, 2):
            assert out[m].origin == ORIGIN_COOPERATIVE

    def test_strictly_ordered_rsrp_gives_lowest_cells(self):
        # 30 candidates, leader RSRP strictly ordered: members receive
        # exactly the 8 lowest-RSRP cells
        cells = window_cells(100, W3, GRID)
        rsrps = {}
        rank = {}
        for i, cell in enumerate(cells):
            val = -59.0 + i * 0.8
            rsrps[(cell.slot, cell.subchannel)] = val
            rank[cell] = val
        h = self._leader_history(rsrps)
        members = list(range(8))
        msgs = [Sci3Message(sender=i, selected_resources=(ResourceId(90, 0),),
                            slot_sent=99, delivered=False)
                for i in members[1:]]
        out = cooperative_round(LeaderState(leader_id=0), msgs, h, GRID, 100,
                                W3, rng(7), -110.0, 12, members)
        expected = set(sorted(cells, key=lambda c: rank[c])[:8])
        got = {d.resource for d in out.values()}
        assert got == expected

    def test_sci3_requires_resources(self):
        with pytest.raises(ValueError):
            Sci3Message(sender=1, selected_resources=(), slot_sent=0)
