"""Exit criteria. Each test prints one PASS/FAIL line (see the summary section)."""

import contextlib
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from kljngrid.adversary import eve_guess_mixed_ordering, indistinguishability_test, observe_mixed_slots
from kljngrid.cli import main
from kljngrid.exchange import NoiseParams, expected_mean_squares, simulate_slot
from kljngrid.filters import isolation_ok_batch, modes_for_round, single_flip_states
from kljngrid.grid import Network
from kljngrid.scheduler import (full_schedule, ke_count_closed_form, ke_count_sum,
                                min_rounds_oracle, rounds_for_distance)
from kljngrid.timing import ke_duration, network_key_distribution_time


@contextlib.contextmanager
def criterion(tag: str, what: str, budget_s: float):
    t0 = time.perf_counter()
    detail = ""
    try:
        yield
        elapsed = time.perf_counter() - t0
        if elapsed >= budget_s:
            detail = f"too slow: {elapsed:.2f}s >= {budget_s}s"
            raise AssertionError(detail)
    except BaseException as exc:
        elapsed = time.perf_counter() - t0
        line = f"FAIL {tag} {what} ({elapsed:.2f}s) {detail or type(exc).__name__}: {exc}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"PASS {tag} {what} ({elapsed:.2f}s < {budget_s}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_ac01_round_count_reproduction():
    with criterion("AC1", "rounds N=7 -> 16, N=8 -> 20", 1.0):
        assert full_schedule(Network(7)).round_count == 16
        assert full_schedule(Network(8)).round_count == 20


def test_ac02_closed_form_equivalence():
    with criterion("AC2", "enumeration = closed form = sum min(d, N+1-d), N=1..200", 5.0):
        for n in range(1, 201):
            enum = full_schedule(Network(n)).round_count
            odd_even = ((n + 1) // 2) ** 2 if n % 2 else n * n // 4 + n // 2
            assert enum == odd_even == ke_count_closed_form(n) == ke_count_sum(n), n


def test_ac03_optimality_oracle():
    with criterion("AC3", "brute-force min rounds = min(d, N+1-d), N<=12", 60.0):
        for n in range(1, 13):
            for d in range(1, n + 1):
                best = min_rounds_oracle(n, d)
                assert best == min(d, n + 1 - d) == len(rounds_for_distance(Network(n), d)), (n, d)


def test_ac04_schedule_soundness():
    with criterion("AC4", "segment-disjoint rounds, every pair exactly once, N=1..50", 10.0):
        for n in range(1, 51):
            sched = full_schedule(Network(n))
            pairs = []
            for rnd in sched.rounds:
                covered = set()
                for lp in rnd:
                    segs = {(i, i + 1) for i in range(lp.left, lp.right)}
                    assert not covered & segs, (n, rnd)
                    covered |= segs
                    pairs.append((lp.left, lp.right))
            expect = [(i, j) for i in range(n + 1) for j in range(i + 1, n + 1)]
            assert sorted(pairs) == expect, n


def test_ac05_filter_isolation_and_mutation():
    with criterion("AC5", "isolation clean, every single-host flip caught, N=1..50", 30.0):
        checked = flips = 0
        for n in range(1, 51):
            net = Network(n)
            for rnd in full_schedule(net).rounds:
                ok = isolation_ok_batch(single_flip_states(modes_for_round(net, rnd)), rnd)
                assert ok[0], (n, rnd)
                assert not ok[1:].any(), (n, rnd, np.flatnonzero(ok[1:]))
                checked += 1
                flips += ok.size - 1
        assert checked == sum(ke_count_closed_form(n) for n in range(1, 51))


def test_ac06_eq1_convergence():
    with criterion("AC6", "<U^2>, <I^2> within 5 SE of 4kT R B and 4kT B/R, 100 trials x R_loop 2/11/20k", 30.0):
        p = NoiseParams()
        m = p.samples_per_slot
        rel_se = math.sqrt(2 / m)
        cases = {2e3: [(0, 0)], 11e3: [(0, 1), (1, 0)], 20e3: [(1, 1)]}
        for r_loop, bit_pairs in cases.items():
            eu, ei = expected_mean_squares(r_loop, p)
            rng = np.random.default_rng(int(r_loop))
            for t in range(100):
                rec = simulate_slot(*bit_pairs[t % len(bit_pairs)], p, rng)
                u2 = np.mean(rec.u_samples ** 2)
                i2 = np.mean(rec.i_samples ** 2)
                assert abs(u2 - eu) < 5 * rel_se * eu, (r_loop, t, u2 / eu)
                assert abs(i2 - ei) < 5 * rel_se * ei, (r_loop, t, i2 / ei)


def test_ac07_security_null():
    with criterion("AC7", "Eve CI99 contains 0.5 on 1e4 mixed slots; LH/HL rejections <= 2/100", 120.0):
        p = NoiseParams()
        obs, truth = observe_mixed_slots(10_000, p, np.random.default_rng(7))
        guess = eve_guess_mixed_ordering(obs, truth, confidence=0.99)
        assert guess.contains(0.5), guess
        rejections = 0
        for rep in range(100):
            rng = np.random.default_rng(10_000 + rep)
            lh = [simulate_slot(0, 1, p, rng) for _ in range(500)]
            hl = [simulate_slot(1, 0, p, rng) for _ in range(500)]
            rejections += indistinguishability_test(lh, hl, p).rejects(0.01)
        assert rejections <= 2, rejections


def _simulate(capsys, *extra):
    code = main(["simulate", "--n", "7", "--seed", "42", "--key-bits", "100", *extra])
    out = capsys.readouterr().out
    return code, out


def test_ac08_key_agreement(capsys):
    with criterion("AC8", "simulate N=7: 28 pairs agree, BER < 1e-3", 120.0):
        code, out = _simulate(capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["pair_count"] == 28
        assert doc["total_bits"] == 2800
        assert doc["bit_error_rate"] < 1e-3
        assert all(pair["key_length"] == 100 for pair in doc["pairs"])
        assert sum(pair["bit_errors"] for pair in doc["pairs"]) == doc["total_bit_errors"]
        assert doc["isolation_violations"] == [] and doc["schedule"]["violations"] == []
        assert doc["simulated_time_s"] == pytest.approx(32.0, rel=0.10)


def test_ac09_timing_reproduction():
    with criterion("AC9", "KE 2.0 s; network 32 s (N=7), 40 s (N=8)", 1.0):
        p = NoiseParams(b_kljn=1e4)
        assert ke_duration(p, 100) == pytest.approx(2.0, rel=0.01)
        assert network_key_distribution_time(7, p, 100) == pytest.approx(32.0, rel=0.01)
        assert network_key_distribution_time(8, p, 100) == pytest.approx(40.0, rel=0.01)


def test_ac10_determinism(capsys, tmp_path):
    with criterion("AC10", "identical seeded simulate runs are byte-identical", 120.0):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert _simulate(capsys, "-o", str(a))[0] == 0
        assert _simulate(capsys, "-o", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()
