"""Switched filter boxes and band-reachability checks.

Every host sits behind a filter box with five filters. Each filter is an
ideal per-band switch: it either passes a band or blocks it completely.
The box wiring used here:

    line_left --A-- line_right                (through line)
    line_left --B-- unit_left                 (left KLJN filter)
    line_right --B-- unit_right               (right KLJN filter)
    line_left --D-- power --E-- line_right    (power feed, both sides)
    power --C-- tap_sink                      (KLJN dump on the power tap)

and neighbouring boxes are joined by plain wire ``line_right(h) --
line_left(h + 1)``. The line ends of host 0 and host N are left open.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .grid import Network, pairwise_disjoint
from .scheduler import Round


class Band(enum.Enum):
    KLJN_BAND = "kljn"
    POWER_FREQ = "power"


class Mode(enum.Enum):
    STATE_1 = 1  # inactive: line passes through, host sees power only
    STATE_2 = 2  # active: KLJN units face left and right, line split in KLJN band


class FilterFlags(NamedTuple):
    passes_kljn: bool
    passes_power: bool

    def passes(self, band: Band) -> bool:
        return self.passes_kljn if band is Band.KLJN_BAND else self.passes_power


@dataclass(frozen=True)
class FilterBoxConfig:
    mode: Mode
    a: FilterFlags
    b: FilterFlags
    c: FilterFlags
    d: FilterFlags
    e: FilterFlags

    def as_dict(self) -> dict:
        return {
            name: {"kljn": f.passes_kljn, "power": f.passes_power}
            for name, f in zip("ABCDE", (self.a, self.b, self.c, self.d, self.e))
        }


_YES_YES = FilterFlags(True, True)
_NO_NO = FilterFlags(False, False)
_KLJN_ONLY = FilterFlags(True, False)
_POWER_ONLY = FilterFlags(False, True)

_BOXES = {
    Mode.STATE_1: FilterBoxConfig(Mode.STATE_1, a=_YES_YES, b=_NO_NO, c=_KLJN_ONLY,
                                  d=_POWER_ONLY, e=_POWER_ONLY),
    Mode.STATE_2: FilterBoxConfig(Mode.STATE_2, a=_POWER_ONLY, b=_KLJN_ONLY, c=_NO_NO,
                                  d=_POWER_ONLY, e=_POWER_ONLY),
}


def box_config(mode: Mode) -> FilterBoxConfig:
    return _BOXES[Mode(mode)]


class Port(enum.IntEnum):
    LINE_LEFT = 0
    LINE_RIGHT = 1
    UNIT_LEFT = 2
    UNIT_RIGHT = 3
    POWER = 4
    TAP_SINK = 5


class Terminal(NamedTuple):
    host: int
    port: Port

    def __repr__(self):
        return f"{self.host}.{self.port.name.lower()}"


_UNIT_PORTS = (Port.UNIT_LEFT, Port.UNIT_RIGHT)


@dataclass(frozen=True)
class FabricState:
    network: Network
    box_modes: tuple[Mode, ...]

    def __post_init__(self):
        if len(self.box_modes) != self.network.size_n + 1:
            raise ValueError("need exactly one mode per host")

    def with_mode(self, host: int, mode: Mode) -> "FabricState":
        modes = list(self.box_modes)
        modes[host] = mode
        return FabricState(self.network, tuple(modes))

    def as_dict(self) -> dict:
        return {
            "size_n": self.network.size_n,
            "hosts": [
                {"host": h, "mode": m.name, "filters": box_config(m).as_dict()}
                for h, m in enumerate(self.box_modes)
            ],
        }


def modes_for_round(network: Network, round: Round) -> FabricState:
    if any(not network.contains(lp) for lp in round):
        raise ValueError("round has a loop outside the network")
    if not pairwise_disjoint(round.loops):
        raise ValueError("round contains overlapping loops")
    active = round.endpoints
    modes = tuple(Mode.STATE_2 if h in active else Mode.STATE_1 for h in network.hosts)
    return FabricState(network, modes)


# (filter attribute, from port, to port) inside one box
_WIRING = (
    ("a", Port.LINE_LEFT, Port.LINE_RIGHT),
    ("b", Port.LINE_LEFT, Port.UNIT_LEFT),
    ("b", Port.LINE_RIGHT, Port.UNIT_RIGHT),
    ("c", Port.POWER, Port.TAP_SINK),
    ("d", Port.LINE_LEFT, Port.POWER),
    ("e", Port.LINE_RIGHT, Port.POWER),
)
_NPORT = len(Port)


def _labels(active: np.ndarray, band: Band) -> np.ndarray:
    """Component labels for a stack of fabric states.

    ``active`` is a bool array (states, hosts), True where the box is in
    STATE_2. Each state is a disjoint block of one graph, so labels are
    unique across states. Returns an int array (states, hosts, ports).
    """
    n_states, n_hosts = active.shape
    idx = np.arange(n_states * n_hosts * _NPORT).reshape(n_states, n_hosts, _NPORT)
    src, dst = [], []
    s1, s2 = box_config(Mode.STATE_1), box_config(Mode.STATE_2)
    for attr, p, q in _WIRING:
        on1 = getattr(s1, attr).passes(band)
        on2 = getattr(s2, attr).passes(band)
        mask = np.where(active, on2, on1)
        src.append(idx[:, :, p][mask])
        dst.append(idx[:, :, q][mask])
    src.append(idx[:, :-1, Port.LINE_RIGHT].ravel())
    dst.append(idx[:, 1:, Port.LINE_LEFT].ravel())
    src, dst = np.concatenate(src), np.concatenate(dst)
    g = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(idx.size, idx.size))
    _, lab = connected_components(g, directed=False)
    return lab.reshape(n_states, n_hosts, _NPORT)


def _active(state: FabricState) -> np.ndarray:
    return np.array([[m is Mode.STATE_2 for m in state.box_modes]])


def propagate_band(state: FabricState, band: Band) -> list[frozenset[Terminal]]:
    """Partition all box terminals into the components connected in ``band``.

    Components come back sorted by their smallest terminal.
    """
    lab = _labels(_active(state), band)[0]
    groups: dict[int, list[Terminal]] = {}
    for h in range(lab.shape[0]):
        for p in Port:
            groups.setdefault(int(lab[h, p]), []).append(Terminal(h, p))
    return sorted((frozenset(g) for g in groups.values()), key=min)


_UNIT_IDX = [Port.UNIT_LEFT, Port.UNIT_RIGHT]
_SIGNAL_IDX = [Port.LINE_LEFT, Port.LINE_RIGHT, Port.UNIT_LEFT, Port.UNIT_RIGHT]


def isolation_ok_batch(active: np.ndarray, round: Round) -> np.ndarray:
    """Vectorised pass/fail of the three isolation conditions per state.

    Same checks as :func:`verify_round_isolation`, without messages, for
    sweeping many fabric states against one round.
    """
    active = np.atleast_2d(np.asarray(active, dtype=bool))
    lefts = np.array([lp.left for lp in round], dtype=int)
    rights = np.array([lp.right for lp in round], dtype=int)

    k = _labels(active, Band.KLJN_BAND)
    units = k[:, :, _UNIT_IDX].reshape(len(active), -1)
    count = np.bincount(units.ravel(), minlength=k.size)
    pair_l = k[:, lefts, Port.UNIT_RIGHT]
    pair_r = k[:, rights, Port.UNIT_LEFT]
    ok = (pair_l == pair_r).all(axis=1)
    ok &= (count[pair_l] == 2).all(axis=1)
    ok &= (count[units] >= 2).sum(axis=1) == 2 * len(lefts)

    signal = np.zeros(k.size, dtype=bool)
    signal[k[:, :, _SIGNAL_IDX].ravel()] = True
    ok &= ~signal[k[:, :, Port.POWER]].any(axis=1)

    pw = _labels(active, Band.POWER_FREQ)
    ok &= (pw[:, :, Port.POWER] == pw[:, :1, Port.LINE_LEFT]).all(axis=1)
    return ok


def single_flip_states(state: FabricState) -> np.ndarray:
    """Stack of the state itself followed by every single-host mode flip."""
    base = _active(state)[0]
    flips = np.tile(base, (base.size, 1))
    flips[np.arange(base.size), np.arange(base.size)] ^= True
    return np.vstack([base, flips])


@dataclass
class IsolationReport:
    violations: list[str] = field(default_factory=list)
    kljn_components: list[list[Terminal]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_round_isolation(state: FabricState, round: Round) -> IsolationReport:
    """Check that ``state`` realises exactly the loops of ``round``.

    Three conditions, all on band reachability:
      (a) KLJN band: each loop's facing units share a component, and no
          component holds two units unless they are such a pair;
      (b) KLJN band: no power port is reachable from the line or a unit;
      (c) power band: every power port reaches the line.
    """
    report = IsolationReport()
    bad = report.violations.append

    comps = propagate_band(state, Band.KLJN_BAND)
    where = {t: i for i, c in enumerate(comps) for t in c}
    pairs = {
        frozenset((Terminal(lp.left, Port.UNIT_RIGHT), Terminal(lp.right, Port.UNIT_LEFT)))
        for lp in round
    }

    for lp in round:
        u, v = Terminal(lp.left, Port.UNIT_RIGHT), Terminal(lp.right, Port.UNIT_LEFT)
        if where[u] != where[v]:
            bad(f"loop ({lp.left},{lp.right}): units {u!r} and {v!r} not connected")

    for comp in comps:
        units = frozenset(t for t in comp if t.port in _UNIT_PORTS)
        if units:
            report.kljn_components.append(sorted(comp))
        if len(units) >= 2 and units not in pairs:
            bad(f"KLJN band couples units {sorted(units)} outside any scheduled loop")
        if any(t.port in _SIGNAL_IDX for t in comp):
            for t in sorted(comp):
                if t.port is Port.POWER:
                    bad(f"host {t.host} power port exposed to the KLJN band")

    power = propagate_band(state, Band.POWER_FREQ)
    line_comp = next(c for c in power if Terminal(0, Port.LINE_LEFT) in c)
    for h in state.network.hosts:
        if Terminal(h, Port.POWER) not in line_comp:
            bad(f"host {h} power port cut off from the line at power frequency")
    return report


def fabric_to_json(state: FabricState) -> str:
    return json.dumps(state.as_dict(), indent=2, sort_keys=True) + "\n"
