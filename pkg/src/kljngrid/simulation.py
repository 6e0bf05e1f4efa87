"""Whole-network run: schedule, filter check, per-loop exchange, Eve's view."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .adversary import EveObservation, eve_guess_mixed_ordering, eve_observe, indistinguishability_test
from .exchange import Channel, ChannelRecord, ExchangeReport, NoiseParams, exchange_key, loop_rng
from .filters import modes_for_round, verify_round_isolation
from .grid import Loop, Network
from .scheduler import full_schedule, ke_count_closed_form, verify_schedule
from .timing import TimingModel, network_key_distribution_time

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class EveLedger:
    """Eve's observations of mixed slots plus the truth used to score her."""

    observations: list[EveObservation] = field(default_factory=list)
    alice_low: list[bool] = field(default_factory=list)

    def observer(self, params: NoiseParams):
        def watch(record: ChannelRecord, slot: int):
            bit_a, bit_b = record.slot_bits_truth
            if bit_a != bit_b:
                self.observations.append(eve_observe(record, params, slot))
                self.alice_low.append(bit_a == 0)
        return watch

    def merge(self, other: "EveLedger"):
        self.observations.extend(other.observations)
        self.alice_low.extend(other.alice_low)


@dataclass
class SimulationResult:
    size_n: int
    params: NoiseParams
    key_length: int
    seed: int
    schedule_violations: list[str]
    isolation_violations: list[str]
    reports: list[ExchangeReport]
    round_times: list[float]
    eve: EveLedger

    @property
    def simulated_time_s(self) -> float:
        return sum(self.round_times)

    @property
    def total_bits(self) -> int:
        return sum(len(r.alice_key) for r in self.reports)

    @property
    def total_bit_errors(self) -> int:
        return sum(r.bit_errors for r in self.reports)

    @property
    def ok(self) -> bool:
        return not (self.schedule_violations or self.isolation_violations)

    def eve_summary(self) -> dict:
        obs, truth = self.eve.observations, self.eve.alice_low
        lh = [o for o, t in zip(obs, truth) if t]
        hl = [o for o, t in zip(obs, truth) if not t]
        out = {"mixed_slots": len(obs)}
        if lh and hl:
            out["indistinguishability"] = indistinguishability_test(lh, hl, self.params).as_dict()
        try:
            out["ordering_guess"] = eve_guess_mixed_ordering(obs, truth).as_dict()
        except ValueError as exc:
            out["ordering_guess"] = {"skipped": str(exc)}
        return out

    def to_dict(self) -> dict:
        p = self.params
        return {
            "schema_version": SCHEMA_VERSION,
            "config": {
                "n": self.size_n, "seed": self.seed, "key_bits": self.key_length,
                "t_eff": p.t_eff, "b_kljn": p.b_kljn, "r_low": p.r_low, "r_high": p.r_high,
                "window_factor": p.measurement_window_factor,
            },
            "schedule": {
                "rounds": ke_count_closed_form(self.size_n),
                "violations": self.schedule_violations,
            },
            "isolation_violations": self.isolation_violations,
            "pairs": [r.summary() for r in self.reports],
            "pair_count": len(self.reports),
            "total_bits": self.total_bits,
            "total_bit_errors": self.total_bit_errors,
            "bit_error_rate": self.total_bit_errors / self.total_bits if self.total_bits else 0.0,
            "all_keys_agree": all(r.keys_agree for r in self.reports),
            "simulated_time_s": self.simulated_time_s,
            "expected_time_s": network_key_distribution_time(self.size_n, p, self.key_length)
            if self.key_length else 0.0,
            "eve": self.eve_summary(),
        }

    def secrets(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "keys": [
                {"left": r.loop.left, "right": r.loop.right,
                 "alice": "".join(map(str, r.alice_key)), "bob": "".join(map(str, r.bob_key))}
                for r in self.reports
            ],
        }


def _run_loop(loop: Loop, key_length: int, params: NoiseParams, seed: int,
              channel: Channel, keep_trace: bool) -> tuple[ExchangeReport, EveLedger]:
    ledger = EveLedger()
    rep = exchange_key(loop, key_length, params, loop_rng(seed, loop), channel,
                       keep_trace=keep_trace, observer=ledger.observer(params))
    return rep, ledger


def simulate_network(n: int, params: NoiseParams, key_length: int, seed: int,
                     channel: Channel = Channel.BOTH, workers: int = 1,
                     keep_trace: bool = False) -> SimulationResult:
    net = Network(n)
    schedule = full_schedule(net)
    sched_report = verify_schedule(schedule)
    slot_s = TimingModel.from_params(params, key_length).slot_duration

    isolation: list[str] = []
    reports: list[ExchangeReport] = []
    round_times: list[float] = []
    eve = EveLedger()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for d, k, rnd in schedule.iter_rounds():
            state = modes_for_round(net, rnd)
            iso = verify_round_isolation(state, rnd)
            isolation.extend(f"d={d} round={k}: {v}" for v in iso.violations)
            args = [(lp, key_length, params, seed, channel, keep_trace) for lp in rnd]
            if pool is None:
                results = [_run_loop(*a) for a in args]
            else:
                results = list(pool.map(lambda a: _run_loop(*a), args))
            # merged in loop order, never completion order
            for rep, ledger in results:
                reports.append(rep)
                eve.merge(ledger)
            round_times.append(max(rep.slots for rep, _ in results) * slot_s)
            log.debug("d=%d round=%d loops=%d", d, k, len(rnd))
    finally:
        if pool is not None:
            pool.shutdown()

    reports.sort(key=lambda r: r.loop)
    return SimulationResult(n, params, key_length, seed,
                            [v.detail for v in sched_report.violations], isolation,
                            reports, round_times, eve)
