"""Link abstraction: path loss, correlated shadowing, noise, SINR, MCS threshold.

Path loss follows the WINNER+ A1 indoor coefficients, LOS for the short
in-group links and NLOS for links to or from the infrastructure side.
Shadowing is log-normal with exponential spatial decorrelation, advanced as
a Gauss-Markov process on each position update.  Decoding uses a threshold
obtained by inverting the Shannon capacity of the allocated cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THERMAL_NOISE_DBM_HZ = -174.0
MIN_DISTANCE_M = 1.0

SHADOWING_SIGMA_DB = 3.0
SHADOWING_DECORR_M = 25.0

# in-band emission floor: power received in the same slot on another
# subchannel, relative to the co-channel level
INBAND_LEAK_DB = 55.0


def path_loss_db(kind: str, distance_m: float, fc_ghz: float) -> float:
    """WINNER+ A1 indoor path loss in dB.

    kind is 'a2a_los' for the in-group line-of-sight model or 'a2i_nlos'
    for the non-line-of-sight model.  Distances below 1 m are clamped.
    """
    d = max(distance_m, MIN_DISTANCE_M)
    freq_term = 20.0 * math.log10(fc_ghz / 5.0)
    if kind == "a2a_los":
        return 46.8 + 18.7 * math.log10(d) + freq_term
    if kind == "a2i_nlos":
        return 43.8 + 36.8 * math.log10(d) + freq_term
    raise ValueError(f"unknown path loss kind {kind!r}")


def noise_power_dbm(bw_hz: float, nf_db: float) -> float:
    """Thermal noise power over bw_hz plus receiver noise figure."""
    if bw_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bw_hz}")
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bw_hz) + nf_db


@dataclass
class ShadowingState:
    """Gauss-Markov shadowing sample for one link."""
    value_db: float
    last_update_position: tuple
    sigma_db: float = SHADOWING_SIGMA_DB
    decorr_m: float = SHADOWING_DECORR_M


def shadowing_step(state: ShadowingState, new_position, rng) -> ShadowingState:
    """Advance the shadowing process after the tracked endpoint moved.

    value' = rho * value + sqrt(1 - rho^2) * N(0, sigma) with
    rho = exp(-dd / decorr_m), which keeps the marginal N(0, sigma^2).
    """
    dx = new_position[0] - state.last_update_position[0]
    dy = new_position[1] - state.last_update_position[1]
    dd = math.hypot(dx, dy)
    if dd == 0.0:
        return state
    rho = math.exp(-dd / state.decorr_m)
    innov = rng.normal(0.0, state.sigma_db)
    value = rho * state.value_db + math.sqrt(1.0 - rho * rho) * innov
    return ShadowingState(value, (new_position[0], new_position[1]),
                          state.sigma_db, state.decorr_m)


@dataclass(frozen=True)
class McsThreshold:
    """Decode threshold from inverting Shannon capacity for one cell."""
    gamma_star_linear: float
    tb_bits: int
    subchannel_bw_hz: float
    slot_s: float


def sinr_threshold(tb_bits: int, subchannel_bw_hz: float, slot_s: float) -> McsThreshold:
    """gamma* = 2^(tb / (B*T)) - 1; a packet at exactly gamma* fills the cell."""
    if tb_bits < 0 or subchannel_bw_hz <= 0 or slot_s <= 0:
        raise ValueError("sinr_threshold arguments must be positive")
    gamma = 2.0 ** (tb_bits / (subchannel_bw_hz * slot_s)) - 1.0
    return McsThreshold(gamma, tb_bits, subchannel_bw_hz, slot_s)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(lin: float) -> float:
    return 10.0 * math.log10(lin)


class ChannelGainMap:
    """Directed per-link linear power gains, block-constant between updates.

    Gains combine path loss, shadowing and both antenna gains; under the
    block-fading abstraction the gain is identical across resources within
    one coherence update, so a single scalar per link is stored.
    """

    def __init__(self, n_ues: int):
        self.n = n_ues
        self.gain = [[0.0] * n_ues for _ in range(n_ues)]

    def set_gain(self, tx: int, rx: int, gain_linear: float) -> None:
        if not (gain_linear > 0.0 and math.isfinite(gain_linear)):
            raise ValueError(f"link gain must be finite and > 0, got {gain_linear}")
        self.gain[tx][rx] = gain_linear

    def get(self, tx: int, rx: int, resource=None) -> float:
        return self.gain[tx][rx]


def sinr_on_resource(rx_ue: int, tx_ue: int, resource, gains: ChannelGainMap,
                     active_tx, noise_mw: float,
                     leak_db: float = INBAND_LEAK_DB) -> float:
    """Linear SINR of (tx_ue -> rx_ue) on `resource` against co-channel activity.

    active_tx is an iterable of (ue, resource, tx_power_mw); transmitters on
    the same cell interfere at full gain, transmitters in the same slot on
    another subchannel contribute through the in-band emission floor.
    """
    signal = None
    interference = 0.0
    leak = db_to_linear(-leak_db)
    for ue, res, power_mw in active_tx:
        if ue == tx_ue and res == resource:
            signal = power_mw * gains.get(ue, rx_ue, res)
            continue
        if ue == rx_ue:
            continue
        if res == resource:
            interference += power_mw * gains.get(ue, rx_ue, res)
        elif res.slot == resource.slot:
            interference += power_mw * gains.get(ue, rx_ue, res) * leak
    if signal is None:
        raise ValueError("tx_ue is not transmitting on the given resource")
    return signal / (noise_mw + interference)


def build_gain_db(kind: str, distance_m: float, fc_ghz: float,
                  shadow_db: float, gain_tx_dbi: float, gain_rx_dbi: float) -> float:
    """End-to-end link gain in dB (antenna gains + shadowing - path loss)."""
    return gain_tx_dbi + gain_rx_dbi + shadow_db - path_loss_db(kind, distance_m, fc_ghz)
