"""Johnson-noise bit exchange over one two-resistor loop.

Each slot both parties connect R_L (bit 0) or R_H (bit 1) in series with a
noise generator of effective temperature T_eff. Sampling is i.i.d. Gaussian
at the Nyquist rate 2B of the ideal band [0, B], so a slot of
``measurement_window_factor`` correlation times holds ``2 * factor`` samples.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import Loop

BOLTZMANN_K = 1.380649e-23  # J/K, exact SI value


@dataclass(frozen=True)
class NoiseParams:
    t_eff: float = 1e9
    b_kljn: float = 1e4
    r_low: float = 1e3
    r_high: float = 1e4
    boltzmann_k: float = BOLTZMANN_K
    measurement_window_factor: int = 100

    def __post_init__(self):
        if not 0 < self.r_low < self.r_high:
            raise ValueError("need 0 < r_low < r_high")
        if not self.t_eff > 0:
            raise ValueError("t_eff must be positive")
        if not self.b_kljn > 0:
            raise ValueError("b_kljn must be positive")
        if self.measurement_window_factor < 1:
            raise ValueError("measurement_window_factor must be >= 1")

    @property
    def noise_scale(self) -> float:
        """4 k T_eff B, the Johnson noise power per ohm of the band."""
        return 4.0 * self.boltzmann_k * self.t_eff * self.b_kljn

    @property
    def sample_rate(self) -> float:
        return 2.0 * self.b_kljn

    @property
    def samples_per_slot(self) -> int:
        return int(round(self.measurement_window_factor * self.sample_rate / self.b_kljn))

    def resistor(self, bit: int) -> float:
        return self.r_high if bit else self.r_low

    def loop_hypotheses(self) -> tuple[float, float, float]:
        return (2 * self.r_low, self.r_low + self.r_high, 2 * self.r_high)


class Channel(enum.Enum):
    VOLTAGE = "voltage"
    CURRENT = "current"
    BOTH = "both"


class Classification(enum.Enum):
    SECURE_BIT = "secure"
    DISCARD_SAME = "discard"
    INDETERMINATE = "indeterminate"


class ChannelRecord:
    """Sampled channel voltage and current of one slot.

    The resistor choices that produced the record are kept for test oracles
    only. Reads through :attr:`slot_bits_truth` are counted in
    ``truth_reads`` so analysis code can be audited for peeking.
    """

    __slots__ = ("u_samples", "i_samples", "sample_rate", "_truth", "truth_reads")

    def __init__(self, u_samples, i_samples, sample_rate: float, truth: tuple[int, int]):
        u = np.asarray(u_samples, dtype=float)
        i = np.asarray(i_samples, dtype=float)
        if u.shape != i.shape or u.ndim != 1:
            raise ValueError("voltage and current traces must be 1-D and equal length")
        self.u_samples = u
        self.i_samples = i
        self.sample_rate = float(sample_rate)
        self._truth = (int(truth[0]), int(truth[1]))
        self.truth_reads = 0

    @property
    def slot_bits_truth(self) -> tuple[int, int]:
        self.truth_reads += 1
        return self._truth

    def __len__(self):
        return self.u_samples.size


@dataclass(frozen=True)
class SlotOutcome:
    classification: Classification
    inferred_peer_bit: Optional[int]
    r_loop_estimate: float


def expected_mean_squares(r_loop: float, params: NoiseParams) -> tuple[float, float]:
    """Closed-form ``(<U^2>, <I^2>)`` for a loop of resistance ``r_loop``."""
    if not r_loop > 0:
        raise ValueError("r_loop must be positive")
    s = params.noise_scale
    return s * r_loop, s / r_loop


def simulate_slot(bit_a: int, bit_b: int, params: NoiseParams,
                  rng: np.random.Generator) -> ChannelRecord:
    r_a, r_b = params.resistor(bit_a), params.resistor(bit_b)
    r_loop = r_a + r_b
    m = params.samples_per_slot
    s = params.noise_scale
    u_a = rng.standard_normal(m) * math.sqrt(s * r_a)
    u_b = rng.standard_normal(m) * math.sqrt(s * r_b)
    # Wire-to-ground node voltage has <U^2> = s * (r_a || r_b); referring it
    # to the loop resistance gives s * r_loop while staying uncorrelated with
    # the loop current. The factor is symmetric in (r_a, r_b).
    u_node = (u_a * r_b + u_b * r_a) / r_loop
    u_ch = u_node * (r_loop / math.sqrt(r_a * r_b))
    i_ch = (u_a - u_b) / r_loop
    return ChannelRecord(u_ch, i_ch, params.sample_rate, (bit_a, bit_b))


def mean_squares(record: ChannelRecord) -> tuple[float, float]:
    if len(record) < 2:
        raise ValueError("record too short to estimate")
    return float(np.mean(record.u_samples ** 2)), float(np.mean(record.i_samples ** 2))


def estimate_loop_resistance(record: ChannelRecord, params: NoiseParams,
                             channel: Channel = Channel.BOTH) -> float:
    u2, i2 = mean_squares(record)
    s = params.noise_scale
    channel = Channel(channel)
    if channel is not Channel.CURRENT and u2 <= 0:
        raise ArithmeticError("zero voltage mean-square; cannot estimate")
    if channel is not Channel.VOLTAGE and i2 <= 0:
        raise ArithmeticError("zero current mean-square; cannot estimate")
    if channel is Channel.VOLTAGE:
        return u2 / s
    if channel is Channel.CURRENT:
        return s / i2
    return math.sqrt((u2 / s) * (s / i2))


def classify_slot(r_estimate: float, own_bit: int, params: NoiseParams) -> SlotOutcome:
    """Decide the slot from the loop-resistance estimate and one's own bit.

    Thresholds sit at the geometric midpoints between 2R_L, R_L+R_H, 2R_H.
    """
    if not r_estimate > 0:
        raise ValueError("r_estimate must be positive")
    low, mixed, high = params.loop_hypotheses()
    if r_estimate < math.sqrt(low * mixed):
        nearest_same = 0
    elif r_estimate <= math.sqrt(mixed * high):
        return SlotOutcome(Classification.SECURE_BIT, 1 - own_bit, r_estimate)
    else:
        nearest_same = 1
    kind = Classification.DISCARD_SAME if nearest_same == own_bit else Classification.INDETERMINATE
    return SlotOutcome(kind, None, r_estimate)


@dataclass(frozen=True)
class SlotTrace:
    slot: int
    bit_a: int
    bit_b: int
    r_estimate: float
    classification_a: Classification
    classification_b: Classification


@dataclass
class ExchangeReport:
    loop: Loop
    key_length: int
    alice_key: list[int] = field(default_factory=list)
    bob_key: list[int] = field(default_factory=list)
    slots: int = 0
    discards: int = 0
    indeterminate: int = 0
    trace: list[SlotTrace] = field(default_factory=list)

    @property
    def agreement(self) -> list[bool]:
        return [a == b for a, b in zip(self.alice_key, self.bob_key)]

    @property
    def bit_errors(self) -> int:
        return sum(a != b for a, b in zip(self.alice_key, self.bob_key))

    @property
    def bit_error_rate(self) -> float:
        return self.bit_errors / len(self.alice_key) if self.alice_key else 0.0

    @property
    def keys_agree(self) -> bool:
        return self.alice_key == self.bob_key

    def key_digest(self, which: str = "alice") -> str:
        bits = self.alice_key if which == "alice" else self.bob_key
        return hashlib.sha256("".join(map(str, bits)).encode()).hexdigest()

    def summary(self) -> dict:
        return {
            "left": self.loop.left,
            "right": self.loop.right,
            "key_length": self.key_length,
            "slots": self.slots,
            "discards": self.discards,
            "indeterminate": self.indeterminate,
            "bit_errors": self.bit_errors,
            "bit_error_rate": self.bit_error_rate,
            "keys_agree": self.keys_agree,
            "alice_key_sha256": self.key_digest("alice"),
            "bob_key_sha256": self.key_digest("bob"),
        }


def exchange_key(loop: Loop, key_length: int, params: NoiseParams, rng: np.random.Generator,
                 channel: Channel = Channel.BOTH, keep_trace: bool = False,
                 observer: Callable[[ChannelRecord, int], None] | None = None,
                 ) -> ExchangeReport:
    """Run slots over ``loop`` until ``key_length`` secure bits accumulate.

    Alice sits at ``loop.left``, Bob at ``loop.right``; the key bit is
    Alice's resistor choice. Both parties see the same ideal wire so they
    share the estimate, and a slot is kept only if both call it secure.
    ``observer`` is handed every record as it is produced.
    """
    if key_length < 0:
        raise ValueError("key_length must be >= 0")
    report = ExchangeReport(loop, key_length)
    while len(report.alice_key) < key_length:
        bit_a, bit_b = (int(x) for x in rng.integers(0, 2, size=2))
        record = simulate_slot(bit_a, bit_b, params, rng)
        if observer is not None:
            observer(record, report.slots)
        r_hat = estimate_loop_resistance(record, params, channel)
        out_a = classify_slot(r_hat, bit_a, params)
        out_b = classify_slot(r_hat, bit_b, params)
        if keep_trace:
            report.trace.append(SlotTrace(report.slots, bit_a, bit_b, r_hat,
                                          out_a.classification, out_b.classification))
        report.slots += 1
        kinds = {out_a.classification, out_b.classification}
        if kinds == {Classification.SECURE_BIT}:
            report.alice_key.append(bit_a)
            report.bob_key.append(out_b.inferred_peer_bit)
        elif Classification.INDETERMINATE in kinds:
            report.indeterminate += 1
        else:
            report.discards += 1
    return report


TRACE_COLUMNS = ("slot", "bitA", "bitB", "r_estimate", "classification")


def trace_rows(report: ExchangeReport):
    """Rows for the per-slot CSV; classification is Alice's view."""
    for t in report.trace:
        yield (t.slot, t.bit_a, t.bit_b, repr(t.r_estimate), t.classification_a.value)


def loop_rng(master_seed: int, loop: Loop) -> np.random.Generator:
    """Independent generator for ``loop``, fixed by the master seed alone."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(loop.left, loop.right))
    return np.random.default_rng(ss)
