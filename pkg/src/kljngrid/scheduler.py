"""Distance-by-distance KE round schedule for the chain network.

At distance ``d`` the loops ``(i, i + d)`` are grouped by ``i mod d``: loops
in one residue class tile the line end to start, so each class is a valid
round and there are ``min(d, N + 1 - d)`` non-empty classes.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

from .grid import Loop, Network, loops_overlap, shared_segments

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Round:
    loops: tuple[Loop, ...]

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(sorted(self.loops)))

    def __len__(self):
        return len(self.loops)

    def __iter__(self):
        return iter(self.loops)

    @property
    def endpoints(self) -> set[int]:
        return {h for lp in self.loops for h in (lp.left, lp.right)}


@dataclass(frozen=True)
class Phase:
    distance: int
    rounds: tuple[Round, ...]


@dataclass(frozen=True)
class Schedule:
    network: Network
    phases: tuple[Phase, ...]

    @property
    def rounds(self) -> list[Round]:
        return [r for ph in self.phases for r in ph.rounds]

    def iter_rounds(self):
        """Yield ``(distance, round_index, round)`` in execution order."""
        for ph in self.phases:
            for k, rnd in enumerate(ph.rounds):
                yield ph.distance, k, rnd

    @property
    def round_count(self) -> int:
        return sum(len(ph.rounds) for ph in self.phases)


def rounds_for_distance(network: Network, d: int) -> list[Round]:
    n = network.size_n
    if not 1 <= d <= n:
        raise ValueError(f"distance {d} outside 1..{n}")
    rounds = []
    for r in range(d):
        loops = tuple(Loop._unchecked(i, i + d) for i in range(r, n - d + 1, d))
        if loops:
            rounds.append(Round(loops))
    return rounds


def full_schedule(network: Network) -> Schedule:
    phases = tuple(
        Phase(d, tuple(rounds_for_distance(network, d)))
        for d in range(1, network.size_n + 1)
    )
    return Schedule(network, phases)


def ke_count_closed_form(n: int) -> int:
    """Number of KE rounds for a chain of size ``n``.

    ``((n+1)/2)**2`` for odd n and ``n**2/4 + n/2`` for even n.
    """
    if n < 1:
        raise ValueError("network size must be >= 1")
    if n % 2:
        return ((n + 1) // 2) ** 2
    return n * n // 4 + n // 2


def ke_count_sum(n: int) -> int:
    return sum(min(d, n + 1 - d) for d in range(1, n + 1))


@dataclass(frozen=True)
class Violation:
    kind: str  # "overlap" | "missing" | "duplicate" | "count" | "distance" | "range"
    detail: str
    phase_distance: int | None = None
    round_index: int | None = None


@dataclass
class ScheduleReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]


def verify_schedule(schedule: Schedule) -> ScheduleReport:
    """Check non-overlap per round, pair coverage, and the KE count.

    Works on externally built schedules too, so nothing about their
    structure is assumed beyond the types.
    """
    report = ScheduleReport()
    add = report.violations.append
    net = schedule.network
    seen: Counter[Loop] = Counter()

    for d, k, rnd in schedule.iter_rounds():
        for lp in rnd:
            if not net.contains(lp):
                add(Violation("range", f"loop {lp.as_tuple()} outside network", d, k))
            if lp.distance != d:
                add(Violation("distance", f"loop {lp.as_tuple()} in phase d={d}", d, k))
            seen[lp] += 1
        for a, b in itertools.combinations(rnd.loops, 2):
            if loops_overlap(a, b):
                segs = sorted(shared_segments(a, b))
                add(Violation(
                    "overlap",
                    f"loops {a.as_tuple()} and {b.as_tuple()} share segment(s) {segs}",
                    d, k,
                ))

    for pair in net.all_pairs():
        c = seen.get(pair, 0)
        if c == 0:
            add(Violation("missing", f"pair {pair.as_tuple()} never scheduled"))
        elif c > 1:
            add(Violation("duplicate", f"pair {pair.as_tuple()} scheduled {c} times"))

    expected = ke_count_closed_form(net.size_n)
    if schedule.round_count != expected:
        add(Violation("count", f"{schedule.round_count} rounds, closed form gives {expected}"))
    return report


ORACLE_MAX_N = 14


def min_rounds_oracle(n: int, d: int) -> int:
    """Fewest rounds that cover every distance-``d`` pair without overlap.

    Exhaustive: tries k = 1, 2, ... colours and backtracks over every
    assignment of loops to rounds. Deliberately ignores the residue
    construction so it can certify it.
    """
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle search budget is n <= {ORACLE_MAX_N}, got {n}")
    if not 1 <= d <= n:
        raise ValueError(f"distance {d} outside 1..{n}")
    loops = [Loop(i, i + d) for i in range(n - d + 1)]
    conflicts = [
        [j for j in range(len(loops)) if j != i and loops_overlap(loops[i], loops[j])]
        for i in range(len(loops))
    ]

    def colourable(k: int) -> bool:
        colour = [-1] * len(loops)

        def place(i: int) -> bool:
            if i == len(loops):
                return True
            used = {colour[j] for j in conflicts[i] if colour[j] >= 0}
            # symmetry: a loop may open at most one new round
            top = max(colour[:i], default=-1)
            for c in range(min(k, top + 2)):
                if c not in used:
                    colour[i] = c
                    if place(i + 1):
                        return True
            colour[i] = -1
            return False

        return place(0)

    k = 1
    while not colourable(k):
        k += 1
    return k


# -- serialisation ----------------------------------------------------------

CSV_COLUMNS = ("phase_distance", "round_index", "loop_left", "loop_right")


def schedule_rows(schedule: Schedule):
    for d, k, rnd in schedule.iter_rounds():
        for lp in rnd:
            yield (d, k, lp.left, lp.right)


def schedule_to_csv(schedule: Schedule) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(schedule_rows(schedule))
    return buf.getvalue()


def schedule_to_dict(schedule: Schedule) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "network": {
            "size_n": schedule.network.size_n,
            "segment_length_m": schedule.network.segment_length_m,
        },
        "round_count": schedule.round_count,
        "ke_count_closed_form": ke_count_closed_form(schedule.network.size_n),
        "phases": [
            {
                "distance": ph.distance,
                "rounds": [[lp.as_tuple() for lp in rnd] for rnd in ph.rounds],
            }
            for ph in schedule.phases
        ],
    }


def schedule_from_dict(doc: dict) -> Schedule:
    net = Network(int(doc["network"]["size_n"]),
                  float(doc["network"].get("segment_length_m", 1000.0)))
    phases = tuple(
        Phase(int(ph["distance"]),
              tuple(Round(tuple(Loop(int(a), int(b)) for a, b in rnd)) for rnd in ph["rounds"]))
        for ph in doc["phases"]
    )
    return Schedule(net, phases)


def schedule_to_json(schedule: Schedule) -> str:
    return json.dumps(schedule_to_dict(schedule), indent=2, sort_keys=True) + "\n"
