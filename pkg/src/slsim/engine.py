"""Simulation engine: initialization, the per-slot cycle, and KPI handoff.

Each slot runs the fixed phase sequence
    refresh -> generate -> select -> transmit -> receive -> feedback -> kpi
with positions and channel gains refreshed on the coarser position-update
cadence.  The run is a pure function of the configuration: every random
draw comes from a named stream spawned from the scenario seed, so toggling
one feature leaves unrelated draws untouched.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import allocation as alloc
from . import channel as ch
from .config import ScenarioConfig
from .geometry import (GroupMobility, RandomWaypoint, build_formation,
                       drop_a2i_ues, rectangular_loop, KIND_A2I, KIND_GROUP,
                       KIND_LEADER)
from .linklayer import (KIND_A2A, KIND_A2I as PKT_A2I, MAX_ATTEMPTS,
                        OUTCOME_FAIL, OUTCOME_MISSED, OUTCOME_OK, Packet)
from .resources import (PROJECTION_FRESH_PERIODS, ResourceGrid, ResourceId,
                        default_selection_window)

SENSING_THRESHOLD_DBM = -110.0
REEVAL_LEAD_SLOTS = 2          # T3: re-check this many slots before transmission
A2I_BUNDLE_CELLS = 3           # subchannels per infrastructure grant
CTRL_PAYLOAD_BITS = 100        # leader coordination message size
FEEDBACK_GUARD_SLOTS = 1       # PSFCH verdict available one slot after rx

PHASES = ("refresh", "generate", "select", "transmit", "receive",
          "feedback", "kpi")

# named rng streams, spawned in this fixed order from the scenario seed
STREAM_PLACEMENT = 0
STREAM_MOTION = 1
STREAM_SHADOWING = 2
STREAM_TRAFFIC = 3
STREAM_GNB_A2I = 4
STREAM_GNB_A2A = 5
N_FIXED_STREAMS = 6


@dataclass
class ClassCounters:
    generated: int = 0
    delivered_full: int = 0
    delivered_partial: int = 0
    expired: int = 0
    intended_pairs: int = 0
    success_pairs: int = 0
    delivered_bits: int = 0


@dataclass
class RunReport:
    config: ScenarioConfig
    a2a: ClassCounters
    a2i: ClassCounters
    counted_duration_s: float
    warmup_s: float
    wall_time_s: float
    events: list | None = None
    gen_log: list | None = None    # (slot, pkt_id, src, kind, counted)


@dataclass
class _PacketState:
    packet: Packet
    intended: tuple
    successes: set = field(default_factory=set)
    attempts: int = 0
    acc_sinr: dict = field(default_factory=dict)
    counted: bool = False


@dataclass
class _UeRuntime:
    id: int
    kind: str
    phase: int
    size_bits: int
    cells: list                    # current grant (absolute next-tx slots)
    retx: ResourceId | None
    counter_left: int
    origin: str
    next_cells: list | None = None
    next_retx: ResourceId | None = None
    next_counter: int = 0
    next_origin: str = ""
    history: "_ListenerView | None" = None
    packet_id: int = -1
    tx_epoch: int = 0


class _SenseLog:
    """Shared per-run log of transmissions and declared reservations.

    Each listener reads it through a _ListenerView, which applies that
    listener's link gains (frozen per position update) and its own
    half-duplex measurement gaps.  This keeps sensing O(1) per transmission
    instead of O(listeners).
    """

    def __init__(self, window_slots: int, period_slots: int):
        self.window = window_slots
        self.period = period_slots
        # (phase, subchannel) -> [target_slot, meas_slot, tx, power_mw, gsnap]
        self.cells: dict[tuple, list] = {}
        # phase -> [target_slot, meas_slot, tx, slot_power_mw, gsnap]
        self.floors: dict[int, list] = {}
        self.latest = -1
        self.total = 0

    def _prune(self, bucket: list) -> None:
        # entries older than the projection freshness horizon are dead
        if len(bucket) > 12:
            cutoff = self.latest - 3 * self.period
            bucket[:] = [e for e in bucket if e[0] >= cutoff]

    def add(self, t: int, tx: int, cells, power_mw: float, slot_power_mw: float,
            declared, gsnap: int) -> None:
        self.latest = t
        self.total += 1
        period = self.period
        for c in cells:
            key = (c.slot % period, c.subchannel)
            bucket = self.cells.get(key)
            if bucket is None:
                bucket = []
                self.cells[key] = bucket
            bucket.append((c.slot, t, tx, power_mw, gsnap))
            self._prune(bucket)
        fl = self.floors.get(t % period)
        if fl is None:
            fl = []
            self.floors[t % period] = fl
        fl.append((t, t, tx, slot_power_mw, gsnap))
        self._prune(fl)
        for d in declared:
            key = (d.slot % period, d.subchannel)
            bucket = self.cells.get(key)
            if bucket is None:
                bucket = []
                self.cells[key] = bucket
            bucket.append((d.slot, t, tx, power_mw, gsnap))
            self._prune(bucket)
            fl = self.floors.get(d.slot % period)
            if fl is None:
                fl = []
                self.floors[d.slot % period] = fl
            fl.append((d.slot, t, tx, slot_power_mw, gsnap))
            self._prune(fl)


class _ListenerView:
    """One UE's view of the shared sensing log (its gains, its gaps)."""

    def __init__(self, ue: int, log: _SenseLog, gain_snaps: list,
                 window_slots: int, leak_db: float):
        self.ue = ue
        self.log = log
        self.gain_snaps = gain_snaps
        self.window_slots = window_slots
        self.leak_lin = 10.0 ** (-leak_db / 10.0)
        self._own_tx: list[int] = []
        self._own_set: set[int] = set()

    def record_own_transmission(self, slot: int) -> None:
        self._own_tx.append(slot)
        self._own_set.add(slot)
        cutoff = slot - self.window_slots
        while self._own_tx and self._own_tx[0] < cutoff:
            self._own_set.discard(self._own_tx.pop(0))

    def own_gap_slots(self, now: int) -> list:
        cutoff = now - self.window_slots
        return [s for s in self._own_tx if s >= cutoff]

    def is_empty(self) -> bool:
        return self.log.total == 0

    def projected_rsrp(self, slot: int, subchannel: int,
                       now: int | None = None,
                       include_floor: bool = True,
                       exclude_tx: int = -1) -> float:
        log = self.log
        ref = log.latest if now is None else now
        period = log.period
        lo = ref - min(self.window_slots, PROJECTION_FRESH_PERIODS * period)
        best = 0.0
        ue = self.ue
        own = self._own_set
        snaps = self.gain_snaps
        bucket = log.cells.get((slot % period, subchannel))
        if bucket:
            for target, meas, tx, power, gsnap in bucket:
                if target <= slot and target >= lo and tx != ue \
                   and tx != exclude_tx and meas not in own:
                    v = power * snaps[gsnap][tx][ue]
                    if v > best:
                        best = v
        if include_floor:
            fl = log.floors.get(slot % period)
            if fl:
                leak = self.leak_lin
                for target, meas, tx, power, gsnap in fl:
                    if target <= slot and target >= lo and tx != ue \
                       and meas not in own:
                        v = power * snaps[gsnap][tx][ue] * leak
                        if v > best:
                            best = v
        if best <= 0.0:
            return -math.inf
        return 10.0 * math.log10(best)

    def window_rsrp(self, now: int, lo_slot: int, hi_slot: int,
                    n_subchannels: int) -> dict:
        """Projected RSRP (dBm) for every cell in [lo_slot, hi_slot].

        Walks each log bucket once; the window never exceeds one period, so
        each reservation phase maps to at most one window slot.
        """
        log = self.log
        period = log.period
        fresh_lo = now - min(self.window_slots, PROJECTION_FRESH_PERIODS * period)
        ue = self.ue
        own = self._own_set
        snaps = self.gain_snaps
        best: dict = {}

        def window_slot(phase: int):
            w = lo_slot + (phase - lo_slot) % period
            return w if w <= hi_slot else None

        for (phase, subch), bucket in log.cells.items():
            w = window_slot(phase)
            if w is None:
                continue
            key = (w, subch)
            cur = best.get(key, 0.0)
            for target, meas, tx, power, gsnap in bucket:
                if target <= w and target >= fresh_lo and tx != ue \
                   and meas not in own:
                    v = power * snaps[gsnap][tx][ue]
                    if v > cur:
                        cur = v
            if cur > 0.0:
                best[key] = cur
        leak = self.leak_lin
        for phase, bucket in log.floors.items():
            w = window_slot(phase)
            if w is None:
                continue
            floor = 0.0
            for target, meas, tx, power, gsnap in bucket:
                if target <= w and target >= fresh_lo and tx != ue \
                   and meas not in own:
                    v = power * snaps[gsnap][tx][ue] * leak
                    if v > floor:
                        floor = v
            if floor > 0.0:
                for c in range(n_subchannels):
                    key = (w, c)
                    if best.get(key, 0.0) < floor:
                        best[key] = floor
        return {key: 10.0 * math.log10(v) for key, v in best.items()}


class Simulation:
    """One seeded run; see run() for the public entry point."""

    def __init__(self, config: ScenarioConfig, observer=None,
                 record_events: bool = False):
        config.validate()
        self.cfg = config
        self.observer = observer
        self.record_events = record_events

        self.grid = ResourceGrid(bandwidth_mhz=config.bandwidth_mhz)
        self.period = self.grid.slots_per_period(config.packet_period_ms)
        self.window = default_selection_window(self.grid, config.packet_period_ms)
        self.horizon = round(config.sim_duration_s / self.grid.slot_s)
        self.refresh_every = round(config.position_update_s / self.grid.slot_s)
        self.warmup_slots = round(config.sensing_window_ms * 1e-3 / self.grid.slot_s)
        self.window_slots = self.warmup_slots   # sensing window in slots

        K, M = config.n_group_agvs, config.n_a2i_links
        self.n_group, self.n_a2i = K, M
        self.gnb = K + M
        self.n_ues = K + M + 1
        self.group_ids = list(range(K))
        self.a2i_ids = list(range(K, K + M))
        self.leader = 0

        ss = np.random.SeedSequence(config.seed)
        children = ss.spawn(N_FIXED_STREAMS + K)
        self.rng_placement = np.random.default_rng(children[STREAM_PLACEMENT])
        self.rng_motion = np.random.default_rng(children[STREAM_MOTION])
        self.rng_shadow = np.random.default_rng(children[STREAM_SHADOWING])
        self.rng_traffic = np.random.default_rng(children[STREAM_TRAFFIC])
        self.rng_gnb_a2i = np.random.default_rng(children[STREAM_GNB_A2I])
        self.rng_gnb_a2a = np.random.default_rng(children[STREAM_GNB_A2A])
        self.rng_sel = [np.random.default_rng(children[N_FIXED_STREAMS + i])
                        for i in range(K)]

        self.sensing_run = config.alloc_mode in ("mode2", "mode2_noreeval",
                                                 "cooperative")
        self._setup_geometry()
        self._setup_radio()
        self._setup_streams()

        self.packets: dict[int, _PacketState] = {}
        self.next_packet_id = 0
        # slot -> [(ue, attempt, epoch, pkt_id, cells, power_per_cell_mw)]
        self.tx_sched: dict[int, list] = {}
        self.reeval_sched: dict[int, list] = {}
        self.final_sched: dict[int, list] = {}
        self.a2a = ClassCounters()
        self.a2i = ClassCounters()
        self.events = [] if record_events else None
        self.gen_log = [] if record_events else None

    # -- initialization -------------------------------------------------

    def _setup_geometry(self):
        cfg = self.cfg
        offsets = build_formation(cfg.n_group_agvs, cfg.workpiece_edge_m)
        trajectory = rectangular_loop(cfg.hall_width_m, cfg.hall_depth_m)
        self.group_mob = GroupMobility(trajectory, offsets,
                                       cfg.group_speed_kmh / 3.6)
        gnb_pos = np.array([cfg.hall_width_m / 2.0, cfg.hall_depth_m / 2.0])
        self.a2i_ues = drop_a2i_ues(cfg.n_a2i_links, gnb_pos, cfg.hall_width_m,
                                    cfg.hall_depth_m, self.rng_placement,
                                    id_offset=self.n_group)
        self.a2i_mob = [RandomWaypoint(cfg.hall_width_m, cfg.hall_depth_m,
                                       cfg.a2i_speed_kmh / 3.6)
                        for _ in self.a2i_ues]
        self.pos = [None] * self.n_ues
        for i, p in enumerate(self.group_mob.positions()):
            self.pos[i] = p
        for ue in self.a2i_ues:
            self.pos[ue.id] = ue.position
        self.pos[self.gnb] = gnb_pos

    def _link_kind(self, a: int, b: int) -> str:
        if a < self.n_group and b < self.n_group:
            return "a2a_los"
        return "a2i_nlos"

    def _setup_radio(self):
        cfg = self.cfg
        self.tx_mw = ch.db_to_linear(cfg.tx_power_dbm)
        self.a2i_cell_mw = self.tx_mw / A2I_BUNDLE_CELLS
        self.noise_mw = ch.db_to_linear(
            ch.noise_power_dbm(self.grid.subchannel_bw_hz, cfg.noise_figure_db))
        self.gamma_a2a = ch.sinr_threshold(
            cfg.packet_size_a2a_bits, self.grid.subchannel_bw_hz,
            self.grid.slot_s).gamma_star_linear
        self.gamma_ctrl = ch.sinr_threshold(
            CTRL_PAYLOAD_BITS, self.grid.subchannel_bw_hz,
            self.grid.slot_s).gamma_star_linear
        self.cell_bits = self.grid.subchannel_bw_hz * self.grid.slot_s
        self.leak_lin = ch.db_to_linear(-ch.INBAND_LEAK_DB)
        self.si_mw = 0.0
        if cfg.duplex == "full" and cfg.residual_si_db is not None:
            self.si_mw = self.tx_mw * ch.db_to_linear(-abs(cfg.residual_si_db))

        # shadowing is tracked per unordered link; the tracked endpoint is the
        # lower id, which is always a mobile UE (the gNB has the highest id)
        self.shadow: dict[tuple, ch.ShadowingState] = {}
        for a in range(self.n_ues):
            for b in range(a + 1, self.n_ues):
                value = self.rng_shadow.normal(0.0, ch.SHADOWING_SIGMA_DB)
                self.shadow[(a, b)] = ch.ShadowingState(value, tuple(self.pos[a]))
        self.gain = [[0.0] * self.n_ues for _ in range(self.n_ues)]
        self.gain_snaps: list = []
        self.gsnap = -1
        self._refresh_gains()

    def _refresh_gains(self):
        cfg = self.cfg
        ant = cfg.antenna_gain_tx_dbi + cfg.antenna_gain_rx_dbi
        for (a, b), state in self.shadow.items():
            dx = self.pos[a][0] - self.pos[b][0]
            dy = self.pos[a][1] - self.pos[b][1]
            dist = math.hypot(dx, dy)
            pl = ch.path_loss_db(self._link_kind(a, b), dist, cfg.carrier_freq_ghz)
            g = ch.db_to_linear(ant + state.value_db - pl)
            self.gain[a][b] = g
            self.gain[b][a] = g
        # freeze a snapshot so sensing reads see the gains of their slot
        self.gain_snaps.append([row[:] for row in self.gain])
        self.gsnap = len(self.gain_snaps) - 1

    def _refresh_positions(self):
        cfg = self.cfg
        for i, p in enumerate(self.group_mob.advance(cfg.position_update_s)):
            self.pos[i] = p
        for ue, mob in zip(self.a2i_ues, self.a2i_mob):
            ue.position = mob.advance(ue.position, cfg.position_update_s,
                                      self.rng_motion)
            self.pos[ue.id] = ue.position
        for key, state in self.shadow.items():
            self.shadow[key] = ch.shadowing_step(
                state, tuple(self.pos[key[0]]), self.rng_shadow)
        self._refresh_gains()

    def _setup_streams(self):
        cfg = self.cfg
        self.m1 = alloc.Mode1Scheduler(self.period, self.grid.n_subchannels)
        self.ues: dict[int, _UeRuntime] = {}
        self.arrival_buckets: dict[int, list] = {}
        self.sense_log = _SenseLog(self.window_slots, self.period)

        for i in self.group_ids:
            hist = None
            if self.sensing_run:
                hist = _ListenerView(i, self.sense_log, self.gain_snaps,
                                     self.window_slots, ch.INBAND_LEAK_DB)
            kind = KIND_LEADER if (i == self.leader and
                                   cfg.alloc_mode == "cooperative") else KIND_GROUP
            # the carrier group shares a synchronized awareness cadence
            self.ues[i] = _UeRuntime(
                id=i, kind=kind, phase=0, size_bits=cfg.packet_size_a2a_bits,
                cells=[], retx=None, counter_left=0, origin="", history=hist)
            self.arrival_buckets.setdefault(0, []).append(i)

        for i in self.a2i_ids:
            phase = int(self.rng_traffic.integers(0, self.period))
            self.ues[i] = _UeRuntime(
                id=i, kind=KIND_A2I, phase=phase,
                size_bits=cfg.packet_size_a2i_bits,
                cells=[], retx=None, counter_left=0, origin="")
            self.arrival_buckets.setdefault(phase, []).append(i)

        if cfg.alloc_mode == "mode1":
            for i in self.group_ids:
                rt = self.ues[i]
                cells = self.m1.grant(i, 1)
                rt.cells = [self._abs_cell(cells[0], rt.phase)]
                rt.counter_left = alloc.draw_counter(self.rng_gnb_a2a)
                rt.origin = alloc.ORIGIN_MODE1
        else:
            for i in self.group_ids:
                rt = self.ues[i]
                d = alloc.select_random(self.grid, rt.phase, self.window,
                                        self.rng_sel[i], harq=cfg.harq_enabled,
                                        retx_hi_slot=rt.phase + self.period, ue=i)
                rt.cells = [d.resource]
                rt.retx = d.retx_resource
                rt.counter_left = d.reselection_counter
                rt.origin = alloc.ORIGIN_RANDOM_INIT
        for i in self.a2i_ids:
            rt = self.ues[i]
            cells = self.m1.grant(i, A2I_BUNDLE_CELLS)
            rt.cells = [self._abs_cell(c, rt.phase) for c in cells]
            rt.counter_left = alloc.draw_counter(self.rng_gnb_a2i)
            rt.origin = alloc.ORIGIN_MODE1

        self.coop_epoch_left = 0
        if cfg.alloc_mode == "cooperative":
            self.coop_epoch_left = alloc.draw_counter(self.rng_sel[self.leader])
            self.leader_state = alloc.LeaderState(leader_id=self.leader)

    def _abs_cell(self, phase_cell: tuple, arrival: int) -> ResourceId:
        """First occurrence of an absolute grant phase after the arrival.

        Grant phases are absolute (slot mod period) so that grants stay
        orthogonal across UEs with different traffic phases.
        """
        phase, subch = phase_cell
        start = arrival + 1
        return ResourceId(start + (phase - start) % self.period, subch)

    # -- arrivals and selection -------------------------------------------

    def _observe(self, phase: str, t: int):
        if self.observer is not None:
            self.observer(phase, t, self)

    def _shift_cells(self, rt: _UeRuntime, t: int):
        """Advance the periodic stream so the next cell lies after t."""
        while rt.cells and rt.cells[0].slot <= t:
            rt.cells = [ResourceId(c.slot + self.period, c.subchannel)
                        for c in rt.cells]
            if rt.retx is not None:
                rt.retx = ResourceId(rt.retx.slot + self.period,
                                     rt.retx.subchannel)

    def _arrival(self, rt: _UeRuntime, t: int):
        pkt = Packet(id=self.next_packet_id, src=rt.id, gen_slot=t,
                     size_bits=rt.size_bits, deadline_slot=t + self.period,
                     kind=KIND_A2A if rt.id < self.n_group else PKT_A2I)
        self.next_packet_id += 1
        if rt.id < self.n_group:
            intended = tuple(j for j in self.group_ids if j != rt.id)
        else:
            intended = (self.gnb,)
        counted = (t >= self.warmup_slots and pkt.deadline_slot <= self.horizon)
        st = _PacketState(packet=pkt, intended=intended, counted=counted)
        self.packets[pkt.id] = st
        if self.gen_log is not None:
            self.gen_log.append((t, pkt.id, rt.id, pkt.kind, counted))
        rt.packet_id = pkt.id
        self.final_sched.setdefault(pkt.deadline_slot, []).append(pkt.id)

        if rt.next_cells is not None:
            rt.cells = rt.next_cells
            rt.retx = rt.next_retx
            rt.counter_left = rt.next_counter
            rt.origin = rt.next_origin
            rt.next_cells = None
        else:
            self._shift_cells(rt, t)
        power = self.tx_mw if rt.id < self.n_group else self.a2i_cell_mw
        self.tx_sched.setdefault(rt.cells[0].slot, []).append(
            (rt.id, 1, rt.tx_epoch, pkt.id, list(rt.cells), power))
        if self.cfg.alloc_mode == "mode2" and rt.id < self.n_group:
            self.reeval_sched.setdefault(
                rt.cells[0].slot - REEVAL_LEAD_SLOTS, []).append(
                (rt.id, rt.tx_epoch))

    def _ctrl_delivered(self, tx: int, rx: int) -> bool:
        return self.tx_mw * self.gain[tx][rx] / self.noise_mw >= self.gamma_ctrl

    def _cooperative_round(self, t: int):
        msgs = []
        for i in self.group_ids:
            if i == self.leader:
                continue
            rt = self.ues[i]
            cur = [ResourceId(c.slot + ((t - c.slot) // self.period + 1)
                              * self.period, c.subchannel)
                   if c.slot <= t else c for c in rt.cells]
            declared = tuple(cur) + ((rt.retx,) if rt.retx else ())
            msgs.append(alloc.Sci3Message(
                sender=i, selected_resources=declared, slot_sent=t,
                delivered=self._ctrl_delivered(i, self.leader)))
        leader_rt = self.ues[self.leader]
        epoch = alloc.draw_counter(self.rng_sel[self.leader])
        decisions = alloc.cooperative_round(
            self.leader_state, msgs, leader_rt.history, self.grid, t,
            self.window, self.rng_sel[self.leader], SENSING_THRESHOLD_DBM,
            self.period, members=self.group_ids,
            assignment_delivered=lambda ue: self._ctrl_delivered(self.leader, ue),
            harq=self.cfg.harq_enabled, retx_hi_slot=t + self.period,
            epoch_counter=epoch)
        for i, d in decisions.items():
            # staged: the arrival processing of this slot activates the new
            # grant without invalidating a still-pending transmission
            rt = self.ues[i]
            rt.next_cells = [d.resource]
            rt.next_retx = d.retx_resource
            rt.next_origin = d.origin
            rt.next_counter = epoch
        self.coop_epoch_left = epoch

    def _cooperative_oversee(self, t: int):
        """Leader-side correction between rounds.

        The leader keeps monitoring its sensing view; when another stream
        claims a member's assigned cell, the member is moved to a fresh
        cell (subject to the assignment-message delivery test).
        """
        leader_rt = self.ues[self.leader]
        hist = leader_rt.history
        taken_slots = set()
        current: dict = {}
        for i in self.group_ids:
            rt = self.ues[i]
            if rt.cells:
                cur = rt.cells[0]
                shift = ((t - cur.slot) // self.period + 1) * self.period \
                    if cur.slot <= t else 0
                cell = ResourceId(cur.slot + shift, cur.subchannel)
                current[i] = cell
                taken_slots.add(cell.slot % self.period)
        cand = None
        for i in self.group_ids:
            rt = self.ues[i]
            if rt.origin != alloc.ORIGIN_COOPERATIVE or i not in current:
                continue
            cell = current[i]
            rsrp = hist.projected_rsrp(cell.slot, cell.subchannel, now=t,
                                       include_floor=False, exclude_tx=i)
            if rsrp <= SENSING_THRESHOLD_DBM:
                continue
            if cand is None:
                res = alloc.candidate_resources(
                    hist, t, self.window, self.grid, SENSING_THRESHOLD_DBM,
                    own_period_slots=self.period)
                cand = sorted(res.cells)
            pool = [c for c in cand
                    if c.slot % self.period not in taken_slots
                    and hist.projected_rsrp(c.slot, c.subchannel, now=t,
                                            include_floor=False)
                    <= SENSING_THRESHOLD_DBM]
            if not pool or not self._ctrl_delivered(self.leader, i):
                continue
            new = pool[int(self.rng_sel[self.leader].integers(0, len(pool)))]
            taken_slots.add(new.slot % self.period)
            # staged correction, activated by this slot's arrival processing;
            # the retransmission cell is re-established at the next round
            rt.next_cells = [new]
            rt.next_retx = None
            rt.next_origin = rt.origin
            rt.next_counter = rt.counter_left

    def _commit_next(self, rt: _UeRuntime, t: int):
        """Select the follow-up stream at the final counted transmission.

        The pick is carried in this transmission's control information, so
        listeners learn the new reservation before its first use.
        """
        cfg = self.cfg
        next_arr = ((t - rt.phase) // self.period + 1) * self.period + rt.phase
        if rt.id >= self.n_group:
            cells = self.m1.grant(rt.id, A2I_BUNDLE_CELLS)
            if cells is None:
                cells = [(int(self.rng_gnb_a2i.integers(0, self.period)), c)
                         for c in range(A2I_BUNDLE_CELLS)]
            rt.next_cells = [self._abs_cell(c, next_arr) for c in cells]
            rt.next_retx = None
            rt.next_counter = alloc.draw_counter(self.rng_gnb_a2i)
            rt.next_origin = alloc.ORIGIN_MODE1
            return
        rng = self.rng_sel[rt.id]
        harq = cfg.harq_enabled
        retx_hi = next_arr + self.period
        if cfg.alloc_mode == "mode1":
            cells = self.m1.grant(rt.id, 1)
            if cells is None:
                d = alloc.select_random(self.grid, next_arr, self.window,
                                        self.rng_gnb_a2a,
                                        origin=alloc.ORIGIN_FALLBACK, ue=rt.id)
                rt.next_cells, rt.next_retx = [d.resource], None
                rt.next_counter = d.reselection_counter
                rt.next_origin = d.origin
                return
            rt.next_cells = [self._abs_cell(cells[0], next_arr)]
            rt.next_retx = None
            rt.next_counter = alloc.draw_counter(self.rng_gnb_a2a)
            rt.next_origin = alloc.ORIGIN_MODE1
        elif cfg.alloc_mode == "random":
            d = alloc.select_random(self.grid, next_arr, self.window, rng,
                                    harq=harq, retx_hi_slot=retx_hi, ue=rt.id)
            rt.next_cells = [d.resource]
            rt.next_retx = d.retx_resource
            rt.next_counter = d.reselection_counter
            rt.next_origin = alloc.ORIGIN_RANDOM_INIT
        else:
            d = alloc.select_mode2(rt.history, next_arr, self.window, self.grid,
                                   rng, SENSING_THRESHOLD_DBM, self.period,
                                   harq=harq, retx_hi_slot=retx_hi, ue=rt.id)
            rt.next_cells = [d.resource]
            rt.next_retx = d.retx_resource
            rt.next_counter = d.reselection_counter
            rt.next_origin = d.origin

    def _reevaluate(self, ue: int, epoch: int, t: int):
        rt = self.ues[ue]
        if rt.tx_epoch != epoch or rt.history is None:
            return
        st = self.packets.get(rt.packet_id)
        if st is None or st.attempts > 0:
            return
        old = rt.cells[0]
        decision = alloc.AllocationDecision(ue=ue, resource=old,
                                            reselection_counter=rt.counter_left,
                                            origin=rt.origin,
                                            retx_resource=rt.retx)
        new = alloc.reevaluate_selection(
            decision, rt.history, t, self.window, self.grid, self.rng_sel[ue],
            SENSING_THRESHOLD_DBM, deadline_slot=st.packet.deadline_slot,
            own_period_slots=self.period)
        if new.resource == old:
            return
        rt.cells = [new.resource]
        if rt.retx is not None and rt.retx.slot < new.resource.slot + 2:
            rt.retx = None
        rt.tx_epoch += 1
        self.tx_sched.setdefault(new.resource.slot, []).append(
            (ue, 1, rt.tx_epoch, rt.packet_id, list(rt.cells), self.tx_mw))

    # -- transmit / receive ------------------------------------------------

    def _collect_transmissions(self, t: int):
        txs = []
        for (ue, attempt, epoch, pkt_id, cells, power) in self.tx_sched.pop(t, ()):
            rt = self.ues[ue]
            if attempt == 1 and rt.tx_epoch != epoch:
                continue
            st = self.packets.get(pkt_id)
            if st is None or st.packet.deadline_slot < t:
                continue
            txs.append((ue, cells, power, attempt, st))
        return txs

    def _declarations(self, rt: _UeRuntime, t: int, attempt: int) -> list:
        """Future cells reserved in this transmission's control information."""
        decl = []
        if attempt == 1 and rt.retx is not None and rt.retx.slot > t:
            decl.append(rt.retx)
        if rt.next_cells is not None:
            decl.extend(rt.next_cells)
            if rt.next_retx is not None:
                decl.append(rt.next_retx)
        return decl

    def _receive_and_sense(self, t: int, txs: list) -> list:
        if not txs:
            return []
        transmitting = {ue for (ue, _c, _p, _a, _s) in txs}
        half = self.cfg.duplex == "half"
        gain = self.gain
        noise = self.noise_mw
        leak = self.leak_lin

        cell_map: dict[ResourceId, list] = {}
        slot_power: dict[int, float] = {}
        for ue, cells, power, _a, _st in txs:
            for c in cells:
                cell_map.setdefault(c, []).append((ue, power))
            slot_power[ue] = slot_power.get(ue, 0.0) + power * len(cells)

        totals: dict[int, float] = {}

        def total_at(rx: int) -> float:
            v = totals.get(rx)
            if v is None:
                v = 0.0
                for ue2, p2 in slot_power.items():
                    if ue2 != rx:
                        v += p2 * gain[ue2][rx]
                totals[rx] = v
            return v

        def cell_sinr(rx: int, tx: int, cell: ResourceId, power: float) -> float:
            g = gain[tx][rx]
            signal = power * g
            cochan = 0.0
            for ue2, p2 in cell_map[cell]:
                if ue2 != tx and ue2 != rx:
                    cochan += p2 * gain[ue2][rx]
            rest = total_at(rx) - slot_power[tx] * g - cochan
            if rest < 0.0:
                rest = 0.0
            extra = self.si_mw if rx in transmitting else 0.0
            return signal / (noise + extra + cochan + rest * leak)

        outcomes = []
        for ue, cells, power, attempt, st in txs:
            pkt = st.packet
            st.attempts += 1
            for rx in st.intended:
                if rx in transmitting and half:
                    outcomes.append((pkt, rx, OUTCOME_MISSED, 0.0))
                    if self.events is not None:
                        self.events.append((t, pkt.id, ue, rx, OUTCOME_MISSED,
                                            attempt, st.counted))
                    continue
                if pkt.kind == KIND_A2A:
                    eff = cell_sinr(rx, ue, cells[0], power) \
                        + st.acc_sinr.get(rx, 0.0)
                    st.acc_sinr[rx] = eff
                    ok = eff >= self.gamma_a2a
                else:
                    eff = 0.0
                    for c in cells:
                        s = cell_sinr(rx, ue, c, power)
                        eff += self.cell_bits * math.log2(1.0 + s)
                    ok = eff >= pkt.size_bits
                if ok:
                    st.successes.add(rx)
                outcomes.append((pkt, rx, OUTCOME_OK if ok else OUTCOME_FAIL, eff))
                if self.events is not None:
                    self.events.append((t, pkt.id, ue, rx, outcomes[-1][2],
                                        attempt, st.counted))

        if self.sensing_run:
            for ue, cells, power, attempt, _st in txs:
                decl = self._declarations(self.ues[ue], t, attempt)
                self.sense_log.add(t, ue, cells, power, slot_power[ue],
                                   decl, self.gsnap)
            if half:
                for lst in self.group_ids:
                    if lst in transmitting:
                        self.ues[lst].history.record_own_transmission(t)
        return outcomes

    def _feedback(self, t: int, txs: list, outcomes: list):
        if not self.cfg.harq_enabled:
            return
        nack_only = self.cfg.harq_feedback == "nack_only"
        min_range = self.cfg.harq_min_range_m
        failed: set = set()
        for pkt, rx, out, _e in outcomes:
            if out == OUTCOME_OK or pkt.kind != KIND_A2A:
                continue
            if nack_only:
                sp, rp = self.pos[pkt.src], self.pos[rx]
                if math.hypot(sp[0] - rp[0], sp[1] - rp[1]) > min_range:
                    continue
            failed.add(pkt.id)
        for ue, _cells, _p, attempt, st in txs:
            if attempt != 1 or st.packet.kind != KIND_A2A:
                continue
            if st.packet.id not in failed or st.attempts >= MAX_ATTEMPTS:
                continue
            rt = self.ues[ue]
            retx = rt.retx
            if retx is None or retx.slot <= t + FEEDBACK_GUARD_SLOTS \
               or retx.slot > st.packet.deadline_slot:
                continue
            self.tx_sched.setdefault(retx.slot, []).append(
                (ue, 2, rt.tx_epoch, st.packet.id, [retx], self.tx_mw))

    def _finalize(self, t: int):
        for pkt_id in self.final_sched.pop(t, ()):
            st = self.packets.pop(pkt_id, None)
            if st is None:
                continue
            ctr = self.a2a if st.packet.kind == KIND_A2A else self.a2i
            if st.counted:
                ctr.generated += 1
                n_ok = len(st.successes)
                n_int = len(st.intended)
                ctr.intended_pairs += n_int
                ctr.success_pairs += n_ok
                if n_ok == n_int:
                    ctr.delivered_full += 1
                elif n_ok > 0:
                    ctr.delivered_partial += 1
                else:
                    ctr.expired += 1
                if n_ok > 0:
                    ctr.delivered_bits += st.packet.size_bits

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunReport:
        cfg = self.cfg
        t0 = time.perf_counter()
        period = self.period
        for t in range(self.horizon):
            if t > 0 and t % self.refresh_every == 0:
                self._refresh_positions()
            self._observe("refresh", t)

            bucket = self.arrival_buckets.get(t % period, ())
            arrivals = [self.ues[i] for i in bucket
                        if t >= self.ues[i].phase] if bucket else ()
            if arrivals and cfg.alloc_mode == "cooperative" \
               and arrivals[0].id == 0 and t >= period:
                self.coop_epoch_left -= 1
                if self.coop_epoch_left <= 0:
                    self._cooperative_round(t)
                else:
                    self._cooperative_oversee(t)
            for rt in arrivals:
                self._arrival(rt, t)
            self._observe("generate", t)

            for (ue, epoch) in self.reeval_sched.pop(t, ()):
                self._reevaluate(ue, epoch, t)
            self._observe("select", t)

            txs = self._collect_transmissions(t)
            for ue, _cells, _p, attempt, _st in txs:
                if attempt == 1:
                    rt = self.ues[ue]
                    rt.counter_left -= 1
                    if rt.counter_left <= 0 and rt.next_cells is None and \
                       (rt.id >= self.n_group or cfg.alloc_mode != "cooperative"):
                        self._commit_next(rt, t)
            self._observe("transmit", t)

            outcomes = self._receive_and_sense(t, txs)
            self._observe("receive", t)

            self._feedback(t, txs, outcomes)
            self._observe("feedback", t)

            self._finalize(t)
            self._observe("kpi", t)

        # packets whose deadline falls exactly on the horizon still finish
        self._finalize(self.horizon)
        counted = max(0.0, (self.horizon - self.warmup_slots) * self.grid.slot_s)
        return RunReport(config=cfg, a2a=self.a2a, a2i=self.a2i,
                         counted_duration_s=counted,
                         warmup_s=self.warmup_slots * self.grid.slot_s,
                         wall_time_s=time.perf_counter() - t0,
                         events=self.events, gen_log=self.gen_log)


def run(config: ScenarioConfig, observer=None,
        record_events: bool = False) -> RunReport:
    """Execute one seeded simulation run and return its KPI report."""
    return Simulation(config, observer=observer,
                      record_events=record_events).run()
