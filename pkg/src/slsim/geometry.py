"""Factory floor geometry: AGV formation, trajectories, drops and mobility.

The carrier group surrounds a square workpiece and translates rigidly along
a fixed rectangular loop.  Infrastructure-bound AGVs are dropped around the
base station and then roam the hall with a random-waypoint model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KIND_GROUP = "group_agv"
KIND_LEADER = "leader_agv"
KIND_A2I = "a2i_agv"
KIND_GNB = "gnb"

TRAJECTORY_MARGIN_M = 20.0
A2I_DROP_SIGMA_M = 50.0


@dataclass
class UeState:
    id: int
    kind: str
    position: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Closed polyline the group formation center follows."""
    waypoints: tuple
    loop: bool = True

    def __post_init__(self):
        pts = self.waypoints
        for a, b in zip(pts, pts[1:] + (pts[0],) if self.loop else pts[1:]):
            if a == b:
                raise ValueError("consecutive trajectory waypoints must differ")

    @property
    def segment_lengths(self) -> list:
        pts = list(self.waypoints)
        if self.loop:
            pts.append(self.waypoints[0])
        return [math.dist(a, b) for a, b in zip(pts, pts[1:])]

    @property
    def length(self) -> float:
        return sum(self.segment_lengths)

    def point_at(self, arc_length: float) -> tuple:
        """Position on the loop at a given arc length from the first waypoint."""
        s = arc_length % self.length if self.loop else min(arc_length, self.length)
        pts = list(self.waypoints)
        if self.loop:
            pts.append(self.waypoints[0])
        for a, b, seg in zip(pts, pts[1:], self.segment_lengths):
            if s <= seg:
                f = s / seg
                return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
            s -= seg
        return pts[-1]


def rectangular_loop(hall_w: float, hall_d: float,
                     margin: float = TRAJECTORY_MARGIN_M) -> Trajectory:
    return Trajectory(waypoints=(
        (margin, margin),
        (hall_w - margin, margin),
        (hall_w - margin, hall_d - margin),
        (margin, hall_d - margin),
    ))


def build_formation(n_agvs: int, edge_m: float) -> list:
    """Carrier offsets on the square workpiece perimeter, relative to center.

    Placements are evenly spaced along the perimeter starting from a corner;
    the two-carrier case grips opposite edge midpoints for balance.
    """
    if not (2 <= n_agvs <= 8):
        raise ValueError(f"group size must be in [2, 8], got {n_agvs}")
    if edge_m <= 0:
        raise ValueError("workpiece edge must be positive")
    h = edge_m / 2.0
    perimeter = 4.0 * edge_m
    # perimeter walk starting at corner (+h, +h), clockwise via (+h, -h)
    corners = [(h, h), (h, -h), (-h, -h), (-h, h)]

    def perimeter_point(s: float) -> tuple:
        s = s % perimeter
        seg = int(s // edge_m)
        f = s - seg * edge_m
        a = corners[seg]
        b = corners[(seg + 1) % 4]
        return (a[0] + (b[0] - a[0]) * f / edge_m,
                a[1] + (b[1] - a[1]) * f / edge_m)

    start = edge_m / 2.0 if n_agvs == 2 else 0.0
    spacing = perimeter / n_agvs
    return [perimeter_point(start + i * spacing) for i in range(n_agvs)]


def clamp_to_hall(pos: np.ndarray, hall_w: float, hall_d: float) -> np.ndarray:
    return np.clip(pos, [0.0, 0.0], [hall_w, hall_d])


def drop_a2i_ues(m: int, gnb_pos, hall_w: float, hall_d: float, rng,
                 sigma_m: float = A2I_DROP_SIGMA_M, id_offset: int = 0) -> list:
    """Drop m data AGVs around the base station.

    Positions follow an isotropic Gaussian intensity centered on the gNB,
    rejection-sampled into the hall.
    """
    ues = []
    for i in range(m):
        while True:
            pos = rng.normal(loc=gnb_pos, scale=sigma_m, size=2)
            if 0.0 <= pos[0] <= hall_w and 0.0 <= pos[1] <= hall_d:
                break
        ues.append(UeState(id=id_offset + i, kind=KIND_A2I,
                           position=np.asarray(pos, dtype=float),
                           velocity=np.zeros(2)))
    return ues


@dataclass
class GroupMobility:
    """Rigid translation of the carrier formation along the trajectory."""
    trajectory: Trajectory
    offsets: list
    speed_ms: float
    arc_length: float = 0.0

    def positions(self) -> list:
        cx, cy = self.trajectory.point_at(self.arc_length)
        return [np.array([cx + ox, cy + oy]) for ox, oy in self.offsets]

    def advance(self, dt: float) -> list:
        self.arc_length = (self.arc_length + self.speed_ms * dt) % self.trajectory.length
        return self.positions()


@dataclass
class RandomWaypoint:
    """Constant-speed random-waypoint roaming inside the hall."""
    hall_w: float
    hall_d: float
    speed_ms: float
    target: np.ndarray | None = None

    def advance(self, pos: np.ndarray, dt: float, rng) -> np.ndarray:
        remaining = self.speed_ms * dt
        p = pos.astype(float).copy()
        while remaining > 1e-12:
            if self.target is None:
                self.target = rng.uniform([0.0, 0.0], [self.hall_w, self.hall_d])
            delta = self.target - p
            dist = float(np.hypot(delta[0], delta[1]))
            if dist <= remaining:
                p = self.target.copy()
                remaining -= dist
                self.target = None
            else:
                p += delta * (remaining / dist)
                remaining = 0.0
        return clamp_to_hall(p, self.hall_w, self.hall_d)


def advance_positions(group: GroupMobility, a2i_ues: list, a2i_models: list,
                      dt: float, rng, hall_w: float, hall_d: float) -> list:
    """One position update: rigid group translation plus A2I roaming.

    Returns the new group positions; A2I UE states are updated in place.
    All positions stay inside the hall.
    """
    group_pos = [clamp_to_hall(p, hall_w, hall_d) for p in group.advance(dt)]
    for ue, model in zip(a2i_ues, a2i_models):
        ue.position = model.advance(ue.position, dt, rng)
    return group_pos
