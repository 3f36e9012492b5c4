"""Resource grid, per-UE sensing history, and candidate-resource exclusion.

The pool is a slot x subchannel grid. Sensing stores per-cell SL-RSRP
observations (direct measurements and reservations declared by decoded
control information) bucketed by reservation phase, so that projecting an
observation with periodicity P onto future slots is an O(1) lookup.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class ResourceId(NamedTuple):
    slot: int
    subchannel: int


@dataclass(frozen=True)
class ResourceGrid:
    """Slot/subchannel partition of the sidelink band.

    The occupied bandwidth n_subchannels * subchannel_prbs * 12 * scs must
    fit inside the configured system bandwidth; the remainder is guard.
    """
    n_subchannels: int = 20
    subchannel_prbs: int = 1
    slot_duration_ms: float = 0.25
    scs_khz: int = 60
    bandwidth_mhz: float = 20.0

    def __post_init__(self):
        if self.occupied_bw_hz > self.bandwidth_mhz * 1e6:
            raise ValueError(
                f"grid occupies {self.occupied_bw_hz / 1e6:.2f} MHz "
                f"> system bandwidth {self.bandwidth_mhz} MHz")

    @property
    def subchannel_bw_hz(self) -> float:
        return self.subchannel_prbs * 12 * self.scs_khz * 1e3

    @property
    def occupied_bw_hz(self) -> float:
        return self.n_subchannels * self.subchannel_bw_hz

    @property
    def slot_s(self) -> float:
        return self.slot_duration_ms * 1e-3

    def slots_per_period(self, period_ms: float) -> int:
        n = round(period_ms / self.slot_duration_ms)
        if abs(n * self.slot_duration_ms - period_ms) > 1e-9:
            raise ValueError(
                f"period {period_ms} ms is not a whole number of slots")
        return n


def resource_index(slot: int, subchannel: int, grid: ResourceGrid) -> int:
    """Row-major pairing of (slot, subchannel) into a single index."""
    if not (0 <= subchannel < grid.n_subchannels):
        raise ValueError(
            f"subchannel {subchannel} out of range [0, {grid.n_subchannels})")
    if slot < 0:
        raise ValueError(f"slot must be >= 0, got {slot}")
    return slot * grid.n_subchannels + subchannel


def resource_from_index(index: int, grid: ResourceGrid) -> ResourceId:
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    return ResourceId(index // grid.n_subchannels, index % grid.n_subchannels)


@dataclass(frozen=True)
class SelectionWindow:
    """Future slot range [now + t1, now + t2] eligible for selection."""
    t1_slots: int = 1
    t2_slots: int = 12

    def __post_init__(self):
        if not (1 <= self.t1_slots < self.t2_slots):
            raise ValueError("selection window requires 1 <= t1 < t2")

    @property
    def n_slots(self) -> int:
        return self.t2_slots - self.t1_slots + 1


# latency target for initial transmissions: 3 ms worth of slots
SELECTION_SPAN_MS = 3.0

# a reservation chain is considered dead once its stream has not been
# observed for this many of its own periods
PROJECTION_FRESH_PERIODS = 2


def default_selection_window(grid: ResourceGrid, period_ms: float) -> SelectionWindow:
    span = round(SELECTION_SPAN_MS / grid.slot_duration_ms)
    return SelectionWindow(1, min(span, grid.slots_per_period(period_ms)))


class SensingHistory:
    """Per-UE SL-RSRP observations over a sliding sensing window.

    Observations are (slot, subchannel, rsrp_dbm) with a declared reservation
    periodicity; entries older than the window are evicted.  Slots in which
    the owner transmitted carry no observations (half-duplex sensing gap);
    those gap slots are tracked so selection can treat them conservatively.
    """

    def __init__(self, window_slots: int):
        self.window_slots = int(window_slots)
        # (period, slot % period, subchannel) -> list of [slot, rsrp, declared]
        self._buckets: dict[tuple, list] = {}
        # (period, slot % period) -> list of [slot, rsrp]; wideband slot floor
        # seen on all subchannels of a slot (in-band emission leakage)
        self._slot_buckets: dict[tuple, list] = {}
        self._periods: set[int] = set()
        self._own_tx: list[int] = []   # owner transmit slots, ascending
        self._own_tx_set: set[int] = set()
        self._latest = -1

    def _prune_bucket(self, bucket: list, now: int) -> None:
        cutoff = now - self.window_slots
        while bucket and bucket[0][0] < cutoff:
            bucket.pop(0)

    def record(self, slot: int, subchannel: int, rsrp_dbm: float,
               period_slots: int, declared: bool = False) -> None:
        """Append one observation; slot is the (possibly future) resource slot."""
        if not declared and self.is_own_tx_slot(slot):
            # half-duplex gap: the owner cannot measure while transmitting
            return
        if not declared:
            self._latest = max(self._latest, slot)
        key = (period_slots, slot % period_slots, subchannel)
        bucket = self._buckets.get(key)
        if bucket is None:
            bucket = []
            self._buckets[key] = bucket
            self._periods.add(period_slots)
        bucket.append([slot, rsrp_dbm, declared])
        self._prune_bucket(bucket, self._latest)

    def record_slot_floor(self, slot: int, rsrp_dbm: float, period_slots: int) -> None:
        """Leakage floor seen across the whole slot (any subchannel)."""
        key = (period_slots, slot % period_slots)
        bucket = self._slot_buckets.get(key)
        if bucket is None:
            bucket = []
            self._slot_buckets[key] = bucket
            self._periods.add(period_slots)
        bucket.append([slot, rsrp_dbm])
        self._prune_bucket(bucket, self._latest)

    def record_own_transmission(self, slot: int) -> None:
        self._own_tx.append(slot)
        self._own_tx_set.add(slot)
        self._latest = max(self._latest, slot)
        cutoff = self._latest - self.window_slots
        while self._own_tx and self._own_tx[0] < cutoff:
            self._own_tx_set.discard(self._own_tx.pop(0))

    def is_own_tx_slot(self, slot: int) -> bool:
        return slot in self._own_tx_set

    def advance(self, now: int) -> None:
        """Move the window forward and evict anything older than it."""
        self._latest = max(self._latest, now)
        cutoff = now - self.window_slots
        for bucket in self._buckets.values():
            while bucket and bucket[0][0] < cutoff:
                bucket.pop(0)
        for bucket in self._slot_buckets.values():
            while bucket and bucket[0][0] < cutoff:
                bucket.pop(0)
        while self._own_tx and self._own_tx[0] < cutoff:
            self._own_tx_set.discard(self._own_tx.pop(0))

    def observations(self, now: int | None = None):
        """All live observations as (slot, subchannel, rsrp_dbm, period, declared)."""
        if now is None:
            now = self._latest
        cutoff = now - self.window_slots
        out = []
        for (period, _phase, subch), bucket in self._buckets.items():
            for slot, rsrp, declared in bucket:
                if slot >= cutoff:
                    out.append((slot, subch, rsrp, period, declared))
        out.sort()
        return out

    def __len__(self) -> int:
        return len(self.observations())

    def is_empty(self) -> bool:
        return not any(self._buckets.values())

    def own_gap_slots(self, now: int) -> list[int]:
        cutoff = now - self.window_slots
        return [s for s in self._own_tx if s >= cutoff]

    def projected_rsrp(self, slot: int, subchannel: int,
                       now: int | None = None,
                       include_floor: bool = True) -> float:
        """Max RSRP of all observations whose reservation projects onto the cell.

        An observation at slot s with periodicity P covers slots s + i*P
        (i >= 0); the wideband slot floor projects onto every subchannel
        unless include_floor is False (exact-cell reservations only).
        A chain stops projecting once its stream has not been seen for
        PROJECTION_FRESH_PERIODS periods (the reservation lapsed).  Returns
        -inf when nothing projects onto (slot, subchannel).
        """
        ref = self._latest if now is None else now
        cutoff = ref - self.window_slots
        best = -math.inf
        for period in self._periods:
            fresh = ref - PROJECTION_FRESH_PERIODS * period
            lo = cutoff if cutoff > fresh else fresh
            phase = slot % period
            bucket = self._buckets.get((period, phase, subchannel))
            if bucket:
                for s, rsrp, _declared in bucket:
                    if s <= slot and s >= lo and rsrp > best:
                        best = rsrp
            if include_floor:
                bucket = self._slot_buckets.get((period, phase))
                if bucket:
                    for s, rsrp in bucket:
                        if s <= slot and s >= lo and rsrp > best:
                            best = rsrp
        return best

    def window_rsrp(self, now: int, lo_slot: int, hi_slot: int,
                    n_subchannels: int) -> dict:
        """Projected RSRP (dBm) per cell over [lo_slot, hi_slot].

        Cells with no projection are absent (treated as -inf by callers).
        """
        out = {}
        for slot in range(lo_slot, hi_slot + 1):
            for subch in range(n_subchannels):
                v = self.projected_rsrp(slot, subch, now=now)
                if v != -math.inf:
                    out[(slot, subch)] = v
        return out


class CandidateResult(NamedTuple):
    cells: set
    final_threshold_dbm: float


def window_cells(now_slot: int, window: SelectionWindow, grid: ResourceGrid):
    return [ResourceId(s, c)
            for s in range(now_slot + window.t1_slots, now_slot + window.t2_slots + 1)
            for c in range(grid.n_subchannels)]


def candidate_resources(history: SensingHistory, now_slot: int,
                        window: SelectionWindow, grid: ResourceGrid,
                        threshold_dbm: float,
                        own_period_slots: int | None = None) -> CandidateResult:
    """Sensing-based exclusion of the selection window.

    Starting from every cell in [now + t1, now + t2] x subchannels, excludes
    cells whose projected SL-RSRP exceeds the threshold; if fewer than 20 % of
    the window survives, the threshold is raised by 3 dB and the exclusion is
    repeated.  Slots the owner did not monitor (its own transmit slots) are
    excluded conservatively when own_period_slots is given, unless that alone
    would break the 20 % floor.
    """
    cells = window_cells(now_slot, window, grid)
    floor = math.ceil(0.2 * len(cells))

    observed = history.window_rsrp(now_slot, now_slot + window.t1_slots,
                                   now_slot + window.t2_slots,
                                   grid.n_subchannels)
    neg_inf = -math.inf
    rsrp = {cell: observed.get(cell, neg_inf) for cell in cells}

    gap_phases = set()
    if own_period_slots:
        gap_phases = {g % own_period_slots
                      for g in history.own_gap_slots(now_slot)}
    gap_excluded = {cell for cell in cells
                    if own_period_slots and cell.slot % own_period_slots in gap_phases}
    if len(cells) - len(gap_excluded) < floor:
        gap_excluded = set()

    # escalate in 3 dB steps until >= 20 % of the window survives; the
    # admitting step is computed directly from the order statistics
    pool = [cell for cell in cells if cell not in gap_excluded]
    levels = sorted(rsrp[cell] for cell in pool)
    need = levels[floor - 1]
    threshold = threshold_dbm
    if need > threshold:
        threshold += 3.0 * math.ceil((need - threshold) / 3.0)
    survivors = {cell for cell in pool if rsrp[cell] <= threshold}
    return CandidateResult(survivors, threshold)
