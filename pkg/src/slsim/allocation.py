"""Resource allocation strategies: random, sensing-based (with and without
re-evaluation), base-station grants, and leader-coordinated assignment.

Decisions name the absolute slot of the next transmission; periodic streams
re-anchor by one traffic period per transmission until the reselection
counter runs out.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .resources import (CandidateResult, ResourceGrid, ResourceId,
                        SelectionWindow, SensingHistory, candidate_resources,
                        window_cells)

RESELECTION_COUNTER_RANGE = (5, 15)

# interference the leader attributes to a slot it has already assigned this
# round (a group member at close range will transmit there)
ASSIGNED_SLOT_FLOOR_DBM = -60.0

ORIGIN_RANDOM_INIT = "random_init"
ORIGIN_MODE2 = "mode2"
ORIGIN_MODE1 = "mode1"
ORIGIN_COOPERATIVE = "cooperative"
ORIGIN_FALLBACK = "fallback_random"


@dataclass
class AllocationDecision:
    ue: int
    resource: ResourceId
    reselection_counter: int
    origin: str
    retx_resource: ResourceId | None = None


def draw_counter(rng) -> int:
    lo, hi = RESELECTION_COUNTER_RANGE
    return int(rng.integers(lo, hi + 1))


def _draw_retx(cells, primary: ResourceId, hi_slot: int, rng) -> ResourceId | None:
    """Retransmission cell at least two slots after the initial one."""
    pool = sorted(c for c in cells if primary.slot + 2 <= c.slot <= hi_slot)
    if not pool:
        return None
    return pool[int(rng.integers(0, len(pool)))]


def select_random(grid: ResourceGrid, now_slot: int, window: SelectionWindow,
                  rng, origin: str = ORIGIN_RANDOM_INIT, harq: bool = False,
                  retx_hi_slot: int | None = None, ue: int = -1) -> AllocationDecision:
    """Uniform draw over the window pool, ignoring sensing."""
    cells = window_cells(now_slot, window, grid)
    primary = cells[int(rng.integers(0, len(cells)))]
    retx = None
    if harq:
        hi = retx_hi_slot if retx_hi_slot is not None else now_slot + window.t2_slots
        retx_pool = [ResourceId(s, c)
                     for s in range(primary.slot + 2, hi + 1)
                     for c in range(grid.n_subchannels)]
        if retx_pool:
            retx = retx_pool[int(rng.integers(0, len(retx_pool)))]
    return AllocationDecision(ue=ue, resource=primary,
                              reselection_counter=draw_counter(rng),
                              origin=origin, retx_resource=retx)


def select_mode2(history: SensingHistory, now_slot: int, window: SelectionWindow,
                 grid: ResourceGrid, rng, threshold_dbm: float,
                 period_slots: int, harq: bool = False,
                 retx_hi_slot: int | None = None, ue: int = -1) -> AllocationDecision:
    """Sensing-based selection: uniform draw over the candidate cells.

    Falls back to a plain random draw when the history holds nothing yet.
    """
    if history.is_empty():
        return select_random(grid, now_slot, window, rng,
                             origin=ORIGIN_FALLBACK, harq=harq,
                             retx_hi_slot=retx_hi_slot, ue=ue)
    hi = retx_hi_slot if retx_hi_slot is not None else now_slot + window.t2_slots
    if harq and hi > now_slot + window.t2_slots:
        # one candidate computation over the extended retransmission range;
        # the initial pick is drawn from its selection-window part
        ext = SelectionWindow(window.t1_slots, hi - now_slot)
        ext_res = candidate_resources(history, now_slot, ext, grid,
                                      threshold_dbm,
                                      own_period_slots=period_slots)
        sel_hi = now_slot + window.t2_slots
        pool = sorted(c for c in ext_res.cells if c.slot <= sel_hi)
        if not pool:
            pool = sorted(ext_res.cells)
        primary = pool[int(rng.integers(0, len(pool)))]
        retx = _draw_retx(ext_res.cells, primary, hi, rng)
        return AllocationDecision(ue=ue, resource=primary,
                                  reselection_counter=draw_counter(rng),
                                  origin=ORIGIN_MODE2, retx_resource=retx)
    result = candidate_resources(history, now_slot, window, grid,
                                 threshold_dbm, own_period_slots=period_slots)
    pool = sorted(result.cells)
    primary = pool[int(rng.integers(0, len(pool)))]
    retx = None
    if harq:
        retx = _draw_retx(result.cells, primary, hi, rng)
    return AllocationDecision(ue=ue, resource=primary,
                              reselection_counter=draw_counter(rng),
                              origin=ORIGIN_MODE2, retx_resource=retx)


def reevaluate_selection(decision: AllocationDecision, history: SensingHistory,
                         now_slot: int, window: SelectionWindow,
                         grid: ResourceGrid, rng, threshold_dbm: float,
                         deadline_slot: int | None = None,
                         own_period_slots: int | None = None) -> AllocationDecision:
    """Re-check a pending selection shortly before its transmission.

    The cell is re-checked against exact-cell reservations: if another
    stream now projects onto it above the threshold (and escalation does not
    re-admit it), a fresh uniform draw over the current candidates (capped
    at the packet deadline) replaces it.  Wideband leakage floors do not
    evict, and the replacement draw avoids slots the owner did not monitor;
    moving blindly on soft evidence is how half-duplex pairs lock onto a
    shared slot.
    """
    cell = decision.resource
    # fast path: clean at the base threshold implies membership at any
    # escalated threshold
    if history.projected_rsrp(cell.slot, cell.subchannel, now=now_slot,
                              include_floor=False) <= threshold_dbm:
        return decision
    result = candidate_resources(history, now_slot, window, grid, threshold_dbm)
    if cell in result.cells:
        return decision
    hi = deadline_slot if deadline_slot is not None else now_slot + window.t2_slots
    pool = [c for c in result.cells if c.slot <= hi]
    # prefer sidestepping inside the already-owned slot: peers keep avoiding
    # this slot, so the move cannot create new half-duplex contention
    same_slot = [c for c in pool if c.slot == cell.slot]
    if same_slot:
        pool = same_slot
    elif own_period_slots:
        gaps = {g % own_period_slots for g in history.own_gap_slots(now_slot)}
        safe = [c for c in pool if c.slot % own_period_slots not in gaps]
        if safe:
            pool = safe
    if not pool:
        return decision
    pool.sort()
    fresh = pool[int(rng.integers(0, len(pool)))]
    return AllocationDecision(ue=decision.ue, resource=fresh,
                              reselection_counter=decision.reselection_counter,
                              origin=decision.origin,
                              retx_resource=decision.retx_resource)


class Mode1Scheduler:
    """Base-station grant bookkeeping: orthogonal, slot-first round robin.

    Grants are phases on the period grid.  Placement walks slots starting
    from a rotating pointer so consecutive grants land in different slots,
    which keeps co-group grants out of each other's transmit slots.  The
    pointer only advances when a grant is re-issued, so repeated queries
    return the same map until a reselection period elapses.
    """

    def __init__(self, n_slots: int, n_subchannels: int):
        self.n_slots = n_slots
        self.n_subchannels = n_subchannels
        self.start = 0
        # ue -> list of (phase, subchannel)
        self.grants: dict[int, list] = {}

    def _occupied(self) -> set:
        return {cell for cells in self.grants.values() for cell in cells}

    def _place(self, n_cells: int, occupied: set) -> list | None:
        """First slot-first position with n_cells contiguous free subchannels."""
        for step in range(self.n_slots):
            phase = (self.start + step) % self.n_slots
            used = {c for (p, c) in occupied if p == phase}
            run = []
            for c in range(self.n_subchannels):
                if c in used:
                    run = []
                    continue
                run.append((phase, c))
                if len(run) == n_cells:
                    return run
        return None

    def grant(self, ue: int, n_cells: int = 1) -> list | None:
        """(Re-)issue a grant for one UE, advancing the rotation pointer."""
        self.grants.pop(ue, None)
        cells = self._place(n_cells, self._occupied())
        if cells is None:
            return None
        self.grants[ue] = cells
        self.start = (cells[0][0] + 1) % self.n_slots
        return cells

    def release(self, ue: int) -> None:
        self.grants.pop(ue, None)


def assign_mode1(scheduler: Mode1Scheduler, requesters: list, grid: ResourceGrid,
                 now_slot: int, window: SelectionWindow, rng) -> dict:
    """Grant one window cell per requester, orthogonally.

    Requesters beyond the pool capacity receive fallback_random decisions.
    Previously granted UEs keep their grants (stable until re-granted).
    """
    out = {}
    for ue in requesters:
        cells = scheduler.grants.get(ue)
        if cells is None:
            cells = scheduler.grant(ue, 1)
        if cells is None:
            out[ue] = select_random(grid, now_slot, window, rng,
                                    origin=ORIGIN_FALLBACK, ue=ue)
            continue
        phase, subch = cells[0]
        slot = now_slot + window.t1_slots + phase
        out[ue] = AllocationDecision(ue=ue, resource=ResourceId(slot, subch),
                                     reselection_counter=draw_counter(rng),
                                     origin=ORIGIN_MODE1)
    return out


@dataclass
class Sci3Message:
    """Member-to-leader control message carrying the member's selected cells."""
    sender: int
    selected_resources: tuple
    slot_sent: int
    delivered: bool = True

    def __post_init__(self):
        if not self.selected_resources:
            raise ValueError("SCI-3 must carry at least one resource")


@dataclass
class LeaderState:
    leader_id: int
    declared: dict = field(default_factory=dict)
    assignment: dict = field(default_factory=dict)


def cooperative_round(leader: LeaderState, msgs: list, history_leader: SensingHistory,
                      grid: ResourceGrid, now_slot: int, window: SelectionWindow,
                      rng, threshold_dbm: float, period_slots: int,
                      members: list, assignment_delivered=None,
                      harq: bool = False, retx_hi_slot: int | None = None,
                      epoch_counter: int | None = None) -> dict:
    """One leader-driven assignment round.

    The leader ingests delivered declarations, then walks the members in
    order and hands each the least-interfered candidate (lowest
    leader-observed RSRP, the member's own declared cells attributed as
    silent) that is not yet taken; ties prefer untaken slots.  Members whose
    assignment message fails delivery fall back to a random selection.
    """
    leader.declared = {m.sender: tuple(m.selected_resources)
                       for m in msgs if m.delivered}
    result = candidate_resources(history_leader, now_slot, window, grid,
                                 threshold_dbm, own_period_slots=period_slots)
    base = result.cells
    counter = epoch_counter if epoch_counter is not None else draw_counter(rng)
    if assignment_delivered is None:
        assignment_delivered = lambda ue: True

    taken_cells: set = set()
    taken_slots: set = set()
    assignment: dict = {}
    retx_hi = retx_hi_slot if retx_hi_slot is not None else now_slot + window.t2_slots

    def pick(member: int, lo_slot: int, hi_slot: int) -> ResourceId | None:
        own = set(leader.declared.get(member, ()))
        pool = (base | own) - taken_cells
        pool = [c for c in pool if lo_slot <= c.slot <= hi_slot]
        if not pool:
            return None

        def score(c):
            # a member already assigned in the slot will transmit there,
            # which deafens co-slot receivers; model it as loud
            v = -1e9 if c in own else \
                history_leader.projected_rsrp(c.slot, c.subchannel)
            if c.slot in taken_slots and v < ASSIGNED_SLOT_FLOOR_DBM:
                v = ASSIGNED_SLOT_FLOOR_DBM
            return v

        scored = sorted(pool, key=lambda c: (score(c), c.slot, c.subchannel))
        cell = scored[0]
        taken_cells.add(cell)
        taken_slots.add(cell.slot)
        return cell

    decisions = {}
    for member in members:
        primary = pick(member, now_slot + window.t1_slots,
                       now_slot + window.t2_slots)
        if primary is None:
            decisions[member] = select_random(grid, now_slot, window, rng,
                                              origin=ORIGIN_FALLBACK, ue=member,
                                              harq=harq, retx_hi_slot=retx_hi)
            continue
        retx = None
        if harq:
            retx = pick(member, primary.slot + 2, retx_hi)
        assignment[member] = primary
        if member != leader.leader_id and not assignment_delivered(member):
            decisions[member] = select_random(grid, now_slot, window, rng,
                                              origin=ORIGIN_FALLBACK, ue=member,
                                              harq=harq, retx_hi_slot=retx_hi)
            continue
        decisions[member] = AllocationDecision(ue=member, resource=primary,
                                               reselection_counter=counter,
                                               origin=ORIGIN_COOPERATIVE,
                                               retx_resource=retx)
    leader.assignment = assignment
    return decisions
