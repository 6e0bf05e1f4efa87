"""Time budget of the protocol: slots, bit exchanges, KEs and whole networks."""

from __future__ import annotations

from dataclasses import dataclass

from .exchange import NoiseParams
from .scheduler import ke_count_closed_form, rounds_for_distance
from .grid import Network

SPEED_OF_LIGHT = 299_792_458.0  # m/s
DEFAULT_SAFETY_FACTOR = 10.0

# A bit is exchanged only when the two resistors differ: probability 1/2.
SLOTS_PER_BIT = 2


@dataclass(frozen=True)
class TimingModel:
    tau_kljn: float
    slot_duration: float
    be_duration_avg: float
    ke_duration: float
    speed_of_light_c: float = SPEED_OF_LIGHT
    bandwidth_safety_factor: float = DEFAULT_SAFETY_FACTOR

    @classmethod
    def from_params(cls, params: NoiseParams, key_length: int, **kw) -> "TimingModel":
        tau = 1.0 / params.b_kljn
        slot = params.measurement_window_factor * tau
        be = SLOTS_PER_BIT * slot
        return cls(tau, slot, be, key_length * be, **kw)


def ke_duration(params: NoiseParams, key_length: int) -> float:
    if key_length < 1:
        raise ValueError("key_length must be >= 1")
    return TimingModel.from_params(params, key_length).ke_duration


def network_key_distribution_time(n: int, params: NoiseParams, key_length: int) -> float:
    """Pessimistic total: every KE lasts as long as the longest loop's KE."""
    return ke_count_closed_form(n) * ke_duration(params, key_length)


def network_time_per_distance(n: int, params: NoiseParams, key_length: int) -> float:
    """Extension, not the pessimistic estimate: shorter loops run faster.

    ``params.b_kljn`` is taken as the bandwidth of the full-length loop;
    a loop of distance d may use ``b_kljn * n / d`` since the admissible
    bandwidth scales inversely with loop length.
    """
    net = Network(n)
    total = 0.0
    for d in range(1, n + 1):
        scaled = NoiseParams(params.t_eff, params.b_kljn * n / d, params.r_low, params.r_high,
                             params.boltzmann_k, params.measurement_window_factor)
        total += len(rounds_for_distance(net, d)) * ke_duration(scaled, key_length)
    return total


@dataclass(frozen=True)
class BandwidthCheck:
    ok: bool
    b_kljn: float
    max_bandwidth: float
    loop_length_m: float
    safety_factor: float


def validate_bandwidth(b_kljn: float, loop_length: float,
                       safety_factor: float = DEFAULT_SAFETY_FACTOR,
                       c: float = SPEED_OF_LIGHT) -> BandwidthCheck:
    """``B << c / L`` read as ``B <= c / (L * safety_factor)``."""
    if not (b_kljn > 0 and loop_length > 0 and safety_factor > 0):
        raise ValueError("bandwidth, length and safety factor must be positive")
    limit = c / loop_length / safety_factor
    return BandwidthCheck(b_kljn <= limit, b_kljn, limit, loop_length, safety_factor)


TIMING_COLUMNS = ("n", "ke_count", "ke_duration_s", "total_s")


def timing_table(ns, params: NoiseParams, key_length: int) -> list[dict]:
    ke = ke_duration(params, key_length)
    return [
        {"n": n, "ke_count": ke_count_closed_form(n), "ke_duration_s": ke,
         "total_s": network_key_distribution_time(n, params, key_length)}
        for n in ns
    ]
