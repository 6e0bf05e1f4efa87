"""Command-line entry point.

    kljngrid schedule --n 7 [--format csv]
    kljngrid simulate --n 7 --seed 42 --key-bits 100 [--emit-secrets keys.json]
    kljngrid verify-filters --n 50 [--flip HOST]
    kljngrid analyze --n-max 20 [--timing --n 8] [--eve --slots 10000]

Exit codes: 0 ok, 1 verification or security-property failure, 2 usage
error, 3 I/O error, 4 schedule violation (simulate only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adversary import eve_guess_mixed_ordering, indistinguishability_test, observe_mixed_slots
from .exchange import TRACE_COLUMNS, Channel, NoiseParams, trace_rows
from .filters import Mode, modes_for_round, verify_round_isolation
from .grid import Network
from .scheduler import (full_schedule, ke_count_closed_form, ke_count_sum, schedule_to_csv,
                        schedule_to_json)
from .simulation import SCHEMA_VERSION, simulate_network
from .timing import TIMING_COLUMNS, timing_table

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO, EXIT_SCHEDULE = 0, 1, 2, 3, 4

log = logging.getLogger("kljngrid")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _say(args, msg: str):
    # keep stdout clean when the artifact itself goes there
    stream = sys.stderr if args.output in (None, "-") else sys.stdout
    print(msg, file=stream)


def _noise_params(args) -> NoiseParams:
    return NoiseParams(t_eff=args.t_eff, b_kljn=args.b_kljn, r_low=args.r_low,
                       r_high=args.r_high, measurement_window_factor=args.window_factor)


# -- commands ---------------------------------------------------------------

def cmd_schedule(args) -> int:
    sched = full_schedule(Network(args.n))
    text = schedule_to_csv(sched) if args.format == "csv" else schedule_to_json(sched)
    _write(text, args.output)
    expected = ke_count_closed_form(args.n)
    status = "OK" if sched.round_count == expected else "MISMATCH"
    _say(args, f"n={args.n} rounds={sched.round_count} closed_form={expected} {status}")
    return EXIT_OK if status == "OK" else EXIT_VERIFY


def cmd_simulate(args) -> int:
    params = _noise_params(args)
    result = simulate_network(args.n, params, args.key_bits, args.seed,
                              Channel(args.channel), args.workers,
                              keep_trace=args.trace is not None)
    doc = result.to_dict()
    if args.format == "csv":
        cols = ("left", "right", "slots", "discards", "indeterminate", "bit_errors",
                "bit_error_rate", "keys_agree", "alice_key_sha256")
        text = _csv(cols, ([p[c] for c in cols] for p in doc["pairs"]))
    else:
        text = _dumps(doc)
    _write(text, args.output)
    if args.emit_secrets:
        Path(args.emit_secrets).write_text(_dumps(result.secrets()))
    if args.trace:
        rows = ((r.loop.left, r.loop.right) + row for r in result.reports for row in trace_rows(r))
        Path(args.trace).write_text(_csv(("left", "right") + TRACE_COLUMNS, rows))
    _say(args, f"n={args.n} pairs={doc['pair_count']} bits={doc['total_bits']} "
               f"errors={doc['total_bit_errors']} simulated_time_s={doc['simulated_time_s']:.3f}")
    if result.schedule_violations:
        return EXIT_SCHEDULE
    if result.isolation_violations:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify_filters(args) -> int:
    net = Network(args.n)
    rounds = []
    failed = 0
    for d, k, rnd in full_schedule(net).iter_rounds():
        state = modes_for_round(net, rnd)
        if args.flip is not None:
            if args.flip > args.n:
                raise argparse.ArgumentTypeError(f"--flip host {args.flip} outside 0..{args.n}")
            cur = state.box_modes[args.flip]
            state = state.with_mode(args.flip, Mode.STATE_1 if cur is Mode.STATE_2 else Mode.STATE_2)
        rep = verify_round_isolation(state, rnd)
        failed += not rep.ok
        entry = {"distance": d, "round_index": k, "loops": [lp.as_tuple() for lp in rnd],
                 "ok": rep.ok, "violations": rep.violations}
        if args.dump_states:
            entry["fabric"] = state.as_dict()
        rounds.append(entry)
    doc = {"schema_version": SCHEMA_VERSION, "n": args.n, "flip": args.flip,
           "rounds_total": len(rounds), "rounds_clean": len(rounds) - failed, "rounds": rounds}
    _write(_dumps(doc), args.output)
    _say(args, f"n={args.n} {len(rounds) - failed}/{len(rounds)} rounds clean")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def cmd_analyze(args) -> int:
    params = _noise_params(args)
    doc: dict = {"schema_version": SCHEMA_VERSION}
    tables: list[tuple[str, tuple, list]] = []
    failed = False

    ns = range(1, args.n_max + 1)
    counts = []
    for n in ns:
        enum_count = full_schedule(Network(n)).round_count
        closed = ke_count_closed_form(n)
        row = {"n": n, "closed_form": closed, "enumerated": enum_count,
               "sum_min": ke_count_sum(n), "match": closed == enum_count == ke_count_sum(n)}
        failed |= not row["match"]
        counts.append(row)
    doc["ke_count"] = counts
    tables.append(("ke_count", ("n", "closed_form", "enumerated", "sum_min", "match"), counts))

    if args.timing:
        t_ns = [args.n] if args.n is not None else list(ns)
        rows = timing_table(t_ns, params, args.key_bits)
        doc["timing"] = {"b_kljn": params.b_kljn, "key_bits": args.key_bits, "rows": rows}
        tables.append(("timing", TIMING_COLUMNS, rows))

    if args.eve:
        rng = np.random.default_rng(args.seed)
        obs, alice_low = observe_mixed_slots(args.slots, params, rng)
        guess = eve_guess_mixed_ordering(obs, alice_low)
        lh = [o for o, t in zip(obs, alice_low) if t]
        hl = [o for o, t in zip(obs, alice_low) if not t]
        test = indistinguishability_test(lh, hl, params)
        row = {"slots": args.slots, "seed": args.seed, **guess.as_dict(),
               "contains_half": guess.contains(0.5), **test.as_dict()}
        failed |= not row["contains_half"]
        doc["eve"] = row
        tables.append(("eve", tuple(row), [row]))

    if args.format == "csv":
        text = "".join(f"# {name}\n" + _csv(cols, ([r[c] for c in cols] for r in rows))
                       for name, cols, rows in tables)
    else:
        text = _dumps(doc)
    _write(text, args.output)
    for name, _, rows in tables:
        if name == "timing":
            for r in rows:
                _say(args, f"timing n={r['n']} ke={r['ke_count']} total_s={r['total_s']:.6g}")
        elif name == "eve":
            r = rows[0]
            _say(args, f"eve accuracy={r['accuracy']:.4f} ci=[{r['ci_low']:.4f}, {r['ci_high']:.4f}]")
    _say(args, f"ke_count rows={len(counts)} all_match={all(r['match'] for r in counts)}")
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_output(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o", default=None, help="file path; stdout if omitted")


def _add_noise(p):
    d = NoiseParams()
    p.add_argument("--t-eff", type=_positive_float, default=d.t_eff, help="kelvin")
    p.add_argument("--b-kljn", type=_positive_float, default=d.b_kljn, help="Hz")
    p.add_argument("--r-low", type=_positive_float, default=d.r_low, help="ohm, bit 0")
    p.add_argument("--r-high", type=_positive_float, default=d.r_high, help="ohm, bit 1")
    p.add_argument("--window-factor", type=_positive_int, default=d.measurement_window_factor,
                   help="correlation times per slot")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kljngrid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of flag defaults (flags win)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="emit the KE round schedule")
    p.add_argument("--n", type=_positive_int, required=True)
    _add_output(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="simulate key distribution over the whole chain")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, required=True)
    p.add_argument("--key-bits", type=_nonneg_int, default=100)
    p.add_argument("--channel", choices=[c.value for c in Channel], default=Channel.BOTH.value)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--emit-secrets", metavar="PATH", help="write raw keys here")
    p.add_argument("--trace", metavar="PATH", help="write per-slot CSV trace here")
    _add_noise(p)
    _add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-filters", help="check filter isolation for every round")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--flip", type=_nonneg_int, metavar="HOST",
                   help="toggle this host's mode in every round (mutation fixture)")
    p.add_argument("--dump-states", action="store_true", help="include per-host filter flags")
    _add_output(p)
    p.set_defaults(func=cmd_verify_filters)

    p = sub.add_parser("analyze", help="KE counts, timing table, Eve campaign")
    p.add_argument("--n-max", type=_positive_int, default=20)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--n", type=_positive_int, default=None, help="single n for --timing")
    p.add_argument("--key-bits", type=_positive_int, default=100)
    p.add_argument("--eve", action="store_true")
    p.add_argument("--slots", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    _add_noise(p)
    _add_output(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text())
    except OSError as exc:
        raise _IOFailure(str(exc))
    except json.JSONDecodeError as exc:
        parser.error(f"bad config file: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config file must hold a JSON object")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subs.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()
                           if k.replace("-", "_") in dests})
        # a config value satisfies a required flag
        for a in sp._actions:
            if a.required and a.dest in cfg:
                a.required = False


class _IOFailure(Exception):
    pass


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except _IOFailure as exc:
        print(f"kljngrid: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"kljngrid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"kljngrid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"kljngrid: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
